//! Smooth planar domains: parametric boundary curves with signed curvature and
//! inward normals, membership, nearest-point projection, and boundary
//! quadratures (area, length, total curvature).
//!
//! Curvature follows the graph convention: in a frame where the inward normal
//! at `x` is `(0, 1)`, the boundary is `y = ν/2 · s² + O(s³)`. Convex bounded
//! domains therefore have `ν > 0`, and hole boundaries of circular holes have
//! `ν = -1/r`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

pub type Vec2 = Vector2<f64>;

/// Rotate by +90 degrees.
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Analytic description of a closed curve parametrized by `u ∈ [0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveShape {
    Circle { center: Vec2, radius: f64 },
    /// Axis-aligned ellipse `center + (a cos 2πu, b sin 2πu)`.
    Ellipse { center: Vec2, a: f64, b: f64 },
    /// Truncated Fourier series; index `k` multiplies `cos 2πku` / `sin 2πku`.
    Fourier { x_cos: Vec<f64>, x_sin: Vec<f64>, y_cos: Vec<f64>, y_sin: Vec<f64> },
}

/// Which side of the direction of increasing `u` the domain lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    pub shape: CurveShape,
    pub interior: Side,
    pub n_quad: usize,
}

/// A point on one of the boundary curves of a domain together with its local
/// differential geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub curve: usize,
    pub u: f64,
    pub position: Vec2,
    /// Unit normal pointing into the domain.
    pub normal: Vec2,
    /// Unit tangent in the direction of increasing `u`.
    pub tangent: Vec2,
    /// Signed curvature ν (1/length).
    pub curvature: f64,
    /// `|dp/du|`.
    pub speed: f64,
}

impl BoundaryCurve {
    pub fn new(shape: CurveShape, interior: Side, n_quad: usize) -> Result<Self> {
        if n_quad < 64 || n_quad % 2 != 0 {
            return Err(Error::InvalidCurve(format!("n_quad must be an even number >= 64, got {n_quad}")));
        }
        match &shape {
            CurveShape::Circle { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                return Err(Error::InvalidCurve(format!("circle radius must be positive, got {radius}")))
            }
            CurveShape::Ellipse { a, b, .. } if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) => {
                return Err(Error::InvalidCurve(format!("ellipse semi-axes must be positive, got {a}, {b}")))
            }
            CurveShape::Fourier { x_cos, x_sin, y_cos, y_sin } => {
                let k = x_cos.len();
                if k < 2 || x_sin.len() != k || y_cos.len() != k || y_sin.len() != k {
                    return Err(Error::InvalidCurve(
                        "fourier coefficient vectors must share one length >= 2".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Self { shape, interior, n_quad })
    }

    pub fn circle(center: Vec2, radius: f64, interior: Side, n_quad: usize) -> Result<Self> {
        Self::new(CurveShape::Circle { center, radius }, interior, n_quad)
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64, interior: Side, n_quad: usize) -> Result<Self> {
        Self::new(CurveShape::Ellipse { center, a, b }, interior, n_quad)
    }

    /// Position, first and second derivative with respect to `u`.
    pub fn eval(&self, u: f64) -> (Vec2, Vec2, Vec2) {
        match &self.shape {
            CurveShape::Circle { center, radius } => {
                let t = TAU * u;
                let (s, c) = t.sin_cos();
                let r = *radius;
                (
                    center + Vec2::new(r * c, r * s),
                    Vec2::new(-r * s, r * c) * TAU,
                    Vec2::new(-r * c, -r * s) * (TAU * TAU),
                )
            }
            CurveShape::Ellipse { center, a, b } => {
                let t = TAU * u;
                let (s, c) = t.sin_cos();
                (
                    center + Vec2::new(a * c, b * s),
                    Vec2::new(-a * s, b * c) * TAU,
                    Vec2::new(-a * c, -b * s) * (TAU * TAU),
                )
            }
            CurveShape::Fourier { x_cos, x_sin, y_cos, y_sin } => {
                let mut p = Vec2::zeros();
                let mut d1 = Vec2::zeros();
                let mut d2 = Vec2::zeros();
                for k in 0..x_cos.len() {
                    let w = TAU * k as f64;
                    let (s, c) = (w * u).sin_cos();
                    let cv = Vec2::new(x_cos[k], y_cos[k]);
                    let sv = Vec2::new(x_sin[k], y_sin[k]);
                    p += cv * c + sv * s;
                    d1 += (sv * c - cv * s) * w;
                    d2 -= (cv * c + sv * s) * (w * w);
                }
                (p, d1, d2)
            }
        }
    }

    pub fn position(&self, u: f64) -> Vec2 {
        self.eval(u).0
    }

    pub fn speed(&self, u: f64) -> f64 {
        self.eval(u).1.norm()
    }

    /// Signed curvature of the parametrization (positive when turning left).
    fn param_curvature(d1: Vec2, d2: Vec2) -> f64 {
        cross(d1, d2) / d1.norm().powi(3)
    }

    pub fn point(&self, curve: usize, u: f64) -> Result<BoundaryPoint> {
        let u = u.rem_euclid(1.0);
        let (p, d1, d2) = self.eval(u);
        let speed = d1.norm();
        if !(speed > 1e-300) || !speed.is_finite() {
            return Err(Error::InvalidCurve(format!("zero speed at u = {u}")));
        }
        let tangent = d1 / speed;
        let sign = self.interior.sign();
        Ok(BoundaryPoint {
            curve,
            u,
            position: p,
            normal: perp(tangent) * sign,
            tangent,
            curvature: Self::param_curvature(d1, d2) * sign,
            speed,
        })
    }

    /// Nodes `u_j = j / n` of the periodic trapezoid rule.
    pub fn nodes(&self, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |j| j as f64 / n as f64)
    }

    /// `sum_j f(u_j) |p'(u_j)| / n` over the curve's own quadrature nodes.
    fn arc_trapezoid<F: Fn(f64, Vec2, Vec2, Vec2) -> f64>(&self, n: usize, f: F) -> f64 {
        let vals: Vec<f64> = self
            .nodes(n)
            .map(|u| {
                let (p, d1, d2) = self.eval(u);
                f(u, p, d1, d2)
            })
            .collect();
        pairwise_sum(&vals) / n as f64
    }

    pub fn length_with(&self, n: usize) -> f64 {
        match &self.shape {
            CurveShape::Circle { radius, .. } => TAU * radius,
            _ => self.arc_trapezoid(n, |_, _, d1, _| d1.norm()),
        }
    }

    pub fn length(&self) -> f64 {
        self.length_with(self.n_quad)
    }

    /// `1/2 ∮ (x dy - y dx)` in the direction of increasing `u`.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.arc_trapezoid(self.n_quad, |_, p, d1, _| cross(p, d1))
    }

    /// `∫ ν ds` over this curve with `n` trapezoid nodes.
    pub fn curvature_integral_with(&self, n: usize) -> f64 {
        let sign = self.interior.sign();
        self.arc_trapezoid(n, |_, _, d1, d2| sign * cross(d1, d2) / d1.norm_squared())
    }

    /// Area-weighted centroid of the region enclosed by the curve.
    pub fn centroid(&self) -> Vec2 {
        match &self.shape {
            CurveShape::Circle { center, .. } | CurveShape::Ellipse { center, .. } => *center,
            CurveShape::Fourier { .. } => {
                let a = self.signed_area();
                let n = self.n_quad;
                let cx = self.arc_trapezoid(n, |_, p, d1, _| p.x * cross(p, d1)) / (3.0 * a);
                let cy = self.arc_trapezoid(n, |_, p, d1, _| p.y * cross(p, d1)) / (3.0 * a);
                Vec2::new(cx, cy)
            }
        }
    }

    /// Nearest point on the curve: parameter and distance.
    ///
    /// Coarse sampling seeds a safeguarded Newton iteration on
    /// `<z - p(u), p'(u)> = 0`. Ties in the coarse scan go to the lowest
    /// parameter.
    pub fn nearest(&self, z: Vec2) -> Result<(f64, f64)> {
        if let CurveShape::Circle { center, radius } = &self.shape {
            let v = z - center;
            let r = v.norm();
            let u = if r == 0.0 { 0.0 } else { (v.y.atan2(v.x) / TAU).rem_euclid(1.0) };
            return Ok((u, (r - radius).abs()));
        }
        if let CurveShape::Ellipse { center, a, b } = &self.shape {
            return Ok(ellipse_nearest(z - center, *a, *b));
        }
        let samples = self.n_quad.max(64);
        let h = 1.0 / samples as f64;
        let mut best = (0.0, f64::INFINITY);
        for j in 0..samples {
            let u = j as f64 * h;
            let d = (self.position(u) - z).norm_squared();
            if d < best.1 {
                best = (u, d);
            }
        }
        self.refine_nearest(z, best.0, h)
    }

    fn refine_nearest(&self, z: Vec2, seed: f64, h: f64) -> Result<(f64, f64)> {
        const MAX_ITER: usize = 50;
        const TOL_U: f64 = 1e-12;
        // g(u) = <p(u) - z, p'(u)>, increasing through a distance minimum.
        let g = |u: f64| {
            let (p, d1, d2) = self.eval(u);
            ((p - z).dot(&d1), d1.norm_squared() + (p - z).dot(&d2))
        };
        let (mut lo, mut hi) = (seed - h, seed + h);
        let (glo, _) = g(lo);
        let (ghi, _) = g(hi);
        let bracketed = glo <= 0.0 && ghi >= 0.0;
        let mut u = seed;
        for _ in 0..MAX_ITER {
            let (gv, dg) = g(u);
            if gv == 0.0 {
                break;
            }
            if bracketed {
                if gv < 0.0 {
                    lo = u;
                } else {
                    hi = u;
                }
            }
            let mut next = if dg > 0.0 { u - gv / dg } else { f64::NAN };
            if bracketed && !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            } else if !bracketed && !(next - seed).abs().lt(&(2.0 * h)) {
                next = f64::NAN;
            }
            if next.is_nan() {
                break;
            }
            let step = (next - u).abs();
            u = next;
            if step < TOL_U || (bracketed && hi - lo < TOL_U) {
                let u = u.rem_euclid(1.0);
                return Ok((u, (self.position(u) - z).norm()));
            }
        }
        // Fall back on a golden-section search of the distance in the bracket.
        let dist = |u: f64| (self.position(u) - z).norm_squared();
        let (mut a, mut b) = (seed - h, seed + h);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - gr * (b - a);
        let mut d = a + gr * (b - a);
        for _ in 0..200 {
            if dist(c) < dist(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - gr * (b - a);
            d = a + gr * (b - a);
            if b - a < TOL_U {
                let u = (0.5 * (a + b)).rem_euclid(1.0);
                return Ok((u, (self.position(u) - z).norm()));
            }
        }
        let u = (0.5 * (a + b)).rem_euclid(1.0);
        Err(Error::Numerical(format!(
            "nearest-point refinement did not converge; best candidate u = {u}, distance = {}",
            (self.position(u) - z).norm()
        )))
    }

    /// Winding number of the curve (direction of increasing `u`) around `z`,
    /// from a polygon with `n` vertices.
    pub fn winding_number(&self, z: Vec2, n: usize) -> i32 {
        let mut total = 0.0;
        let mut prev = self.position(0.0) - z;
        for j in 1..=n {
            let cur = self.position(j as f64 / n as f64) - z;
            total += cross(prev, cur).atan2(prev.dot(&cur));
            prev = cur;
        }
        (total / TAU).round() as i32
    }

    fn scaled(&self, s: f64) -> Self {
        let shape = match &self.shape {
            CurveShape::Circle { center, radius } => CurveShape::Circle { center: center * s, radius: radius * s },
            CurveShape::Ellipse { center, a, b } => CurveShape::Ellipse { center: center * s, a: a * s, b: b * s },
            CurveShape::Fourier { x_cos, x_sin, y_cos, y_sin } => {
                let m = |v: &Vec<f64>| v.iter().map(|c| c * s).collect();
                CurveShape::Fourier { x_cos: m(x_cos), x_sin: m(x_sin), y_cos: m(y_cos), y_sin: m(y_sin) }
            }
        };
        Self { shape, interior: self.interior, n_quad: self.n_quad }
    }

    /// Image under `(x₁, x₂) -> (c x₁, x₂)`.
    fn stretched(&self, c: f64) -> Self {
        let shape = match &self.shape {
            CurveShape::Circle { center, radius } => {
                CurveShape::Ellipse { center: Vec2::new(center.x * c, center.y), a: radius * c, b: *radius }
            }
            CurveShape::Ellipse { center, a, b } => {
                CurveShape::Ellipse { center: Vec2::new(center.x * c, center.y), a: a * c, b: *b }
            }
            CurveShape::Fourier { x_cos, x_sin, y_cos, y_sin } => CurveShape::Fourier {
                x_cos: x_cos.iter().map(|v| v * c).collect(),
                x_sin: x_sin.iter().map(|v| v * c).collect(),
                y_cos: y_cos.clone(),
                y_sin: y_sin.clone(),
            },
        };
        Self { shape, interior: self.interior, n_quad: self.n_quad }
    }

    /// Compare the curvature sign against the inward-normal graph convention
    /// at a few sample points: `<p(u + du) - p(u), n> ≈ ν s² / 2`.
    pub fn curvature_self_test(&self) -> Result<()> {
        for j in 0..8 {
            let u = (j as f64 + 0.37) / 8.0;
            let bp = self.point(0, u)?;
            let du = 1e-4;
            let offsets = [-du, du];
            for &o in &offsets {
                let q = self.position(u + o);
                let s = (q - bp.position).dot(&bp.tangent);
                let lift = (q - bp.position).dot(&bp.normal);
                let predicted = 0.5 * bp.curvature * s * s;
                let scale = 1e-3 * s * s * (1.0 + bp.curvature.abs()) + 1e-12;
                if (lift - predicted).abs() > scale.max(0.2 * predicted.abs()) && predicted.abs() > 1e-12 {
                    return Err(Error::InvalidCurve(format!(
                        "curvature sign self-test failed at u = {u}: lift {lift:e}, predicted {predicted:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample_polygon(&self, n: usize) -> Vec<Vec2> {
        self.nodes(n).map(|u| self.position(u)).collect()
    }

    fn check_regular_and_simple(&self) -> Result<()> {
        let n = self.n_quad;
        for u in self.nodes(4 * n) {
            if !(self.speed(u) > 1e-12) {
                return Err(Error::InvalidCurve(format!("curve is not regular near u = {u}")));
            }
        }
        let poly = self.sample_polygon(n);
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (poly[j], poly[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidCurve(format!("curve self-intersects near u = {}", i as f64 / n as f64)));
                }
            }
        }
        Ok(())
    }
}

/// Nearest point on the axis-aligned ellipse `(a cos t, b sin t)` to `p`,
/// following Eberly's quadrant reduction with a bisection root solve.
fn ellipse_nearest(p: Vec2, a: f64, b: f64) -> (f64, f64) {
    let swap = a < b;
    let (e0, e1) = if swap { (b, a) } else { (a, b) };
    let (q0, q1) = if swap { (p.y, p.x) } else { (p.x, p.y) };
    let (y0, y1) = (q0.abs(), q1.abs());
    let (x0, x1) = if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let sbar = ellipse_root(r0, z0, z1, g);
                (r0 * y0 / (sbar + r0), y1 / (sbar + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde = numer / denom;
            (e0 * xde, e1 * (1.0 - xde * xde).max(0.0).sqrt())
        } else {
            (e0, 0.0)
        }
    };
    let dist = ((x0 - y0).powi(2) + (x1 - y1).powi(2)).sqrt();
    let x0 = x0.copysign(q0);
    let x1 = if y1 > 0.0 { x1.copysign(q1) } else { x1 };
    let (cx, cy) = if swap { (x1, x0) } else { (x0, x1) };
    let u = ((cy / b).atan2(cx / a) / TAU).rem_euclid(1.0);
    (u, dist)
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let r0s = n0 / (s + r0);
        let r1s = z1 / (s + 1.0);
        let gs = r0s * r0s + r1s * r1s - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Exterior domains are only supported as tagged analytic shapes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ExteriorKind {
    Bounded,
    /// Complement of the closed disc of the given radius (centered at 0).
    Disc { radius: f64 },
    /// Exterior of the ellipse `g(∂U)`, `g(z) = scale (z + a/z)`, `0 < a < 1`.
    Ellipse { map_a: f64, scale: f64 },
}

/// Result of a membership query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    /// Within the boundary-ambiguity tolerance of ∂D.
    OnBoundary,
}

/// A planar domain: outer curve plus holes, or a single curve with an
/// exterior tag.
#[derive(Clone, Debug)]
pub struct Domain {
    curves: Vec<BoundaryCurve>,
    exterior: ExteriorKind,
    area: f64,
    length: f64,
    diameter: f64,
    feature_size: f64,
    tol_bdry: f64,
}

impl Domain {
    /// Bounded domain from an outer curve (interior on the left, i.e.
    /// counter-clockwise) and hole curves (interior on the right).
    pub fn bounded(outer: BoundaryCurve, holes: Vec<BoundaryCurve>) -> Result<Self> {
        let mut curves = vec![outer];
        curves.extend(holes);
        Self::build(curves, ExteriorKind::Bounded)
    }

    pub fn disc(radius: f64, n_quad: usize) -> Result<Self> {
        Self::bounded(BoundaryCurve::circle(Vec2::zeros(), radius, Side::Left, n_quad)?, vec![])
    }

    pub fn ellipse(a: f64, b: f64, n_quad: usize) -> Result<Self> {
        Self::bounded(BoundaryCurve::ellipse(Vec2::zeros(), a, b, Side::Left, n_quad)?, vec![])
    }

    pub fn annulus(inner: f64, outer: f64, n_quad: usize) -> Result<Self> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::Config(format!("annulus needs 0 < inner < outer, got {inner}, {outer}")));
        }
        Self::bounded(
            BoundaryCurve::circle(Vec2::zeros(), outer, Side::Left, n_quad)?,
            vec![BoundaryCurve::circle(Vec2::zeros(), inner, Side::Right, n_quad)?],
        )
    }

    pub fn disc_exterior(radius: f64, n_quad: usize) -> Result<Self> {
        let c = BoundaryCurve::circle(Vec2::zeros(), radius, Side::Right, n_quad)?;
        Self::build(vec![c], ExteriorKind::Disc { radius })
    }

    /// Exterior of the image of the unit circle under `g(z) = z + a/z`,
    /// an ellipse with semi-axes `1 + a` and `1 - a`.
    pub fn ellipse_exterior(map_a: f64, n_quad: usize) -> Result<Self> {
        if !(map_a > 0.0 && map_a < 1.0) {
            return Err(Error::Domain(format!("ellipse map parameter must lie in (0, 1), got {map_a}")));
        }
        let c = BoundaryCurve::ellipse(Vec2::zeros(), 1.0 + map_a, 1.0 - map_a, Side::Right, n_quad)?;
        Self::build(vec![c], ExteriorKind::Ellipse { map_a, scale: 1.0 })
    }

    fn build(curves: Vec<BoundaryCurve>, exterior: ExteriorKind) -> Result<Self> {
        for c in &curves {
            c.check_regular_and_simple()?;
            c.curvature_self_test()?;
        }
        let length = curves.iter().map(|c| c.length()).sum();
        let mut diameter = 0.0f64;
        for c in &curves {
            let poly = c.sample_polygon(64);
            for a in &poly {
                for b in &poly {
                    diameter = diameter.max((a - b).norm());
                }
            }
        }
        let area = match exterior {
            ExteriorKind::Bounded => {
                let area: f64 = curves.iter().map(|c| c.interior.sign() * c.signed_area()).sum();
                if !(area > 0.0) {
                    return Err(Error::InvalidCurve(format!(
                        "bounded domain has non-positive area {area}; outer curve must be counter-clockwise"
                    )));
                }
                area
            }
            _ => f64::INFINITY,
        };
        let mut feature_size = f64::INFINITY;
        for c in &curves {
            for u in c.nodes(c.n_quad) {
                let bp = c.point(0, u)?;
                if bp.curvature.abs() > 0.0 {
                    feature_size = feature_size.min(1.0 / bp.curvature.abs());
                }
            }
        }
        for i in 0..curves.len() {
            for j in (i + 1)..curves.len() {
                let pi = curves[i].sample_polygon(curves[i].n_quad);
                let pj = curves[j].sample_polygon(curves[j].n_quad);
                for a in &pi {
                    for b in &pj {
                        feature_size = feature_size.min((a - b).norm());
                    }
                }
            }
        }
        if exterior == ExteriorKind::Bounded {
            feature_size = feature_size.min(diameter);
        }
        let domain = Self {
            curves,
            exterior,
            area,
            length,
            diameter,
            feature_size,
            tol_bdry: 1e-12 * diameter,
        };
        domain.check_topology()?;
        Ok(domain)
    }

    fn check_topology(&self) -> Result<()> {
        if self.exterior != ExteriorKind::Bounded {
            if self.curves.len() != 1 {
                return Err(Error::Domain("exterior domains have exactly one boundary curve".into()));
            }
            return Ok(());
        }
        if self.curves[0].interior != Side::Left {
            return Err(Error::InvalidCurve("outer curve must have the interior on its left".into()));
        }
        let outer = &self.curves[0];
        let n_out = outer.n_quad.max(64);
        for (k, hole) in self.curves.iter().enumerate().skip(1) {
            if hole.interior != Side::Right {
                return Err(Error::InvalidCurve(format!("hole {k} must have the domain on its right")));
            }
            for u in hole.nodes(hole.n_quad) {
                let p = hole.position(u);
                if outer.winding_number(p, n_out) != 1 {
                    return Err(Error::Domain(format!("hole {k} is not strictly inside the outer curve")));
                }
            }
            for (m, other) in self.curves.iter().enumerate().skip(k + 1) {
                let n_other = other.n_quad.max(64);
                let n_hole = hole.n_quad.max(64);
                let overlap = hole.nodes(hole.n_quad).any(|u| other.winding_number(hole.position(u), n_other) != 0)
                    || other.nodes(other.n_quad).any(|u| hole.winding_number(other.position(u), n_hole) != 0);
                if overlap {
                    return Err(Error::Domain(format!("holes {k} and {m} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn curves(&self) -> &[BoundaryCurve] {
        &self.curves
    }

    pub fn exterior(&self) -> ExteriorKind {
        self.exterior
    }

    pub fn is_bounded(&self) -> bool {
        self.exterior == ExteriorKind::Bounded
    }

    pub fn hole_count(&self) -> usize {
        match self.exterior {
            ExteriorKind::Bounded => self.curves.len() - 1,
            _ => 0,
        }
    }

    /// The integer `χ` with `∫ ν dx = 2π χ`: `1 - holes` for bounded domains
    /// and `-1` for the exterior of a single curve.
    pub fn euler_characteristic(&self) -> i32 {
        match self.exterior {
            ExteriorKind::Bounded => 1 - self.hole_count() as i32,
            _ => -1,
        }
    }

    pub fn area(&self) -> Result<f64> {
        if self.is_bounded() {
            Ok(self.area)
        } else {
            Err(Error::InfiniteArea)
        }
    }

    pub fn boundary_length(&self) -> f64 {
        self.length
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Smallest of the curvature radii and the gaps between curves.
    pub fn feature_size(&self) -> f64 {
        self.feature_size
    }

    pub fn boundary_tolerance(&self) -> f64 {
        self.tol_bdry
    }

    pub fn point(&self, curve: usize, u: f64) -> Result<BoundaryPoint> {
        self.curves
            .get(curve)
            .ok_or_else(|| Error::InvalidCurve(format!("no curve with index {curve}")))?
            .point(curve, u)
    }

    pub fn curvature(&self, x: &BoundaryPoint) -> Result<f64> {
        Ok(self.point(x.curve, x.u)?.curvature)
    }

    /// `∫_{∂D} ν dx` with an error estimate from halving the node count.
    pub fn curvature_integral(&self) -> (f64, f64) {
        self.curvature_integral_with(None)
    }

    pub fn curvature_integral_with(&self, n_quad: Option<usize>) -> (f64, f64) {
        let mut fine = 0.0;
        let mut coarse = 0.0;
        for c in &self.curves {
            let n = n_quad.unwrap_or(c.n_quad);
            fine += c.curvature_integral_with(n);
            coarse += c.curvature_integral_with((n / 2).max(4));
        }
        (fine, (fine - coarse).abs())
    }

    /// Nearest boundary point over all curves and its distance. Ties go to
    /// the lowest curve index, then the lowest parameter.
    pub fn project_to_boundary(&self, z: Vec2) -> Result<(BoundaryPoint, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (k, c) in self.curves.iter().enumerate() {
            let (u, d) = c.nearest(z)?;
            if best.map_or(true, |(_, _, bd)| d < bd) {
                best = Some((k, u, d));
            }
        }
        let (k, u, d) = best.expect("domain has at least one curve");
        Ok((self.curves[k].point(k, u)?, d))
    }

    /// Euclidean distance to ∂D.
    pub fn distance_to_boundary(&self, z: Vec2) -> Result<f64> {
        let mut best = f64::INFINITY;
        for c in &self.curves {
            best = best.min(c.nearest(z)?.1);
        }
        Ok(best)
    }

    /// Signed distance (positive inside D) and the nearest boundary point.
    pub fn signed_distance(&self, z: Vec2) -> Result<(f64, BoundaryPoint)> {
        let (bp, d) = self.project_to_boundary(z)?;
        let s = (z - bp.position).dot(&bp.normal);
        Ok((if s >= 0.0 { d } else { -d }, bp))
    }

    /// Membership by winding numbers, with a normal-side test close to the
    /// boundary where the sampled polygon is not accurate enough.
    pub fn classify(&self, z: Vec2) -> Result<Membership> {
        if !(z.x.is_finite() && z.y.is_finite()) {
            return Err(Error::Domain("point is not finite".into()));
        }
        let (bp, d) = self.project_to_boundary(z)?;
        if d <= self.tol_bdry {
            return Ok(Membership::OnBoundary);
        }
        let poly_res = self.curves.iter().map(|c| c.length() / c.n_quad.max(64) as f64).fold(0.0, f64::max);
        if d < 2.0 * poly_res {
            let s = (z - bp.position).dot(&bp.normal);
            return Ok(if s > 0.0 { Membership::Inside } else { Membership::Outside });
        }
        let inside = match self.exterior {
            ExteriorKind::Bounded => {
                let outer = &self.curves[0];
                outer.winding_number(z, outer.n_quad.max(64)) != 0
                    && self.curves[1..].iter().all(|h| h.winding_number(z, h.n_quad.max(64)) == 0)
            }
            _ => {
                let c = &self.curves[0];
                c.winding_number(z, c.n_quad.max(64)) == 0
            }
        };
        Ok(if inside { Membership::Inside } else { Membership::Outside })
    }

    /// `true` iff `z` lies in the open domain (points within the boundary
    /// tolerance count as not contained).
    pub fn contains(&self, z: Vec2) -> Result<bool> {
        Ok(self.classify(z)? == Membership::Inside)
    }

    /// The image of the domain under `z -> a z`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {a}")));
        }
        let curves = self.curves.iter().map(|c| c.scaled(a)).collect();
        let exterior = match self.exterior {
            ExteriorKind::Bounded => ExteriorKind::Bounded,
            ExteriorKind::Disc { radius } => ExteriorKind::Disc { radius: radius * a },
            ExteriorKind::Ellipse { map_a, scale } => ExteriorKind::Ellipse { map_a, scale: scale * a },
        };
        Self::build(curves, exterior)
    }

    /// The image of a bounded domain under `(x₁, x₂) -> (c x₁, x₂)`.
    pub fn stretched(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("stretch factor must be positive, got {c}")));
        }
        if !self.is_bounded() {
            return Err(Error::Domain("stretching is only supported for bounded domains".into()));
        }
        Self::build(self.curves.iter().map(|k| k.stretched(c)).collect(), ExteriorKind::Bounded)
    }

    /// Boundary point at arc-length position `s` (curves taken in order).
    pub fn boundary_point_at_arclength(&self, s: f64) -> Result<BoundaryPoint> {
        let mut s = s.rem_euclid(self.length);
        for (k, c) in self.curves.iter().enumerate() {
            let len = c.length();
            if s <= len {
                return c.point(k, arclength_to_param(c, s));
            }
            s -= len;
        }
        let k = self.curves.len() - 1;
        self.curves[k].point(k, 0.0)
    }
}

/// Invert the arc-length function of a curve by Newton iteration.
fn arclength_to_param(c: &BoundaryCurve, s: f64) -> f64 {
    let len = c.length();
    let mut u = s / len;
    let arc = |u: f64| {
        // trapezoid on [0, u] with enough nodes for the smooth integrand
        let n = 256;
        let h = u / n as f64;
        let mut acc = 0.5 * (c.speed(0.0) + c.speed(u));
        for j in 1..n {
            acc += c.speed(j as f64 * h);
        }
        acc * h
    };
    for _ in 0..30 {
        let f = arc(u) - s;
        let step = f / c.speed(u);
        u -= step;
        if step.abs() < 1e-13 {
            break;
        }
    }
    u.clamp(0.0, 1.0)
}

/// Angle between the tangent lines at `x` and `y`, folded into `[0, π/2]`.
pub fn tangent_angle_alpha(x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
    alpha_from_normals(x.normal, y.normal)
}

#[inline]
pub fn alpha_from_normals(nx: Vec2, ny: Vec2) -> f64 {
    cross(nx, ny).abs().atan2(nx.dot(&ny).abs())
}

/// `|log cos α|`, accurate both near `α = 0` and near `α = π/2`.
#[inline]
pub fn abs_log_cos(alpha: f64) -> f64 {
    if alpha.abs() < FRAC_PI_4 {
        let s = (0.5 * alpha).sin();
        -(-2.0 * s * s).ln_1p()
    } else {
        -alpha.cos().abs().ln()
    }
}

/// `|log cos α|` for the angle between the lines spanned by two unit normals,
/// accurate both for nearly parallel and nearly perpendicular normals.
#[inline]
pub fn abs_log_cos_normals(nx: Vec2, ny: Vec2) -> f64 {
    let dot = nx.dot(&ny).abs();
    let crs = cross(nx, ny).abs();
    let r2 = dot * dot + crs * crs;
    if dot < 0.5 {
        -(dot.max(1e-300) / r2.sqrt()).ln()
    } else {
        -0.5 * (-(crs * crs) / r2).ln_1p()
    }
}

/// Fold an angular difference into the tangent-line angle on a circle.
pub fn fold_circle_angle(delta: f64) -> f64 {
    let d = delta.rem_euclid(PI);
    d.min(PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn circle_curvature_signs() {
        let d = Domain::disc(1.0, 128).unwrap();
        let p = d.point(0, 0.3).unwrap();
        assert!((d.curvature(&p).unwrap() - 1.0).abs() < 1e-12);
        let e = Domain::disc_exterior(1.0, 128).unwrap();
        assert!((e.point(0, 0.3).unwrap().curvature + 1.0).abs() < 1e-12);
        let a = Domain::annulus(0.5, 1.0, 128).unwrap();
        assert!((a.point(1, 0.1).unwrap().curvature + 2.0).abs() < 1e-12);
    }

    /// Second-order finite difference of the local graph function in the
    /// normal frame: ψ(s) ≈ ν s²/2 with ψ(±s) read off the curve.
    fn graph_curvature_fd(c: &BoundaryCurve, u: f64) -> f64 {
        let bp = c.point(0, u).unwrap();
        let mut est = Vec::new();
        for &du in &[1e-3, 5e-4] {
            let mut acc = 0.0;
            for &o in &[-du, du] {
                let q = c.position(u + o) - bp.position;
                let s = q.dot(&bp.tangent);
                acc += 2.0 * q.dot(&bp.normal) / (s * s);
            }
            est.push(0.5 * acc);
        }
        // Richardson in du^2
        (4.0 * est[1] - est[0]) / 3.0
    }

    #[test]
    fn ellipse_curvature_at_vertical_tangent() {
        let d = Domain::ellipse(2.0, 1.0, 256).unwrap();
        // tangent vertical at u = 0 (point (2, 0)): ν = a / b² = 2
        let oracle = graph_curvature_fd(&d.curves()[0], 0.0);
        assert!((oracle - 2.0).abs() < 1e-5, "oracle {oracle}");
        let p = d.point(0, 0.0).unwrap();
        assert!((p.curvature - 2.0).abs() < 1e-12);
        for u in [0.1, 0.2, 0.33, 0.71] {
            let fd = graph_curvature_fd(&d.curves()[0], u);
            assert!((d.point(0, u).unwrap().curvature - fd).abs() < 1e-4);
        }
    }

    #[test]
    fn curvature_integrals() {
        let two_pi = TAU;
        let (v, _) = Domain::disc(1.0, 512).unwrap().curvature_integral();
        assert!((v - two_pi).abs() < 1e-12);
        let (v, _) = Domain::annulus(0.5, 1.0, 512).unwrap().curvature_integral();
        assert!(v.abs() < 1e-12);
        let (v, _) = Domain::disc_exterior(1.0, 512).unwrap().curvature_integral();
        assert!((v + two_pi).abs() < 1e-12);
        let (v, err) = Domain::ellipse(2.0, 1.0, 512).unwrap().curvature_integral();
        assert!((v - two_pi).abs() < 1e-10 && err < 1e-8);
    }

    #[test]
    fn alpha_examples() {
        let d = Domain::disc(1.0, 64).unwrap();
        let p = |t: f64| d.point(0, t / TAU).unwrap();
        assert!(tangent_angle_alpha(&p(0.0), &p(PI)).abs() < 1e-12);
        assert!((tangent_angle_alpha(&p(0.0), &p(FRAC_PI_2)) - FRAC_PI_2).abs() < 1e-12);
        assert!((tangent_angle_alpha(&p(0.0), &p(PI / 3.0)) - fold_circle_angle(PI / 3.0)).abs() < 1e-12);
        assert!(tangent_angle_alpha(&p(1.0), &p(1.0)) == 0.0);
    }

    #[test]
    fn contains_examples() {
        let d = Domain::disc(1.0, 64).unwrap();
        assert!(d.contains(Vec2::new(0.0, 0.0)).unwrap());
        assert!(!d.contains(Vec2::new(2.0, 0.0)).unwrap());
        assert_eq!(d.classify(Vec2::new(1.0, 0.0)).unwrap(), Membership::OnBoundary);
        let a = Domain::annulus(0.5, 1.0, 64).unwrap();
        assert!(a.contains(Vec2::new(0.75, 0.0)).unwrap());
        assert!(!a.contains(Vec2::new(0.25, 0.0)).unwrap());
        let e = Domain::disc_exterior(1.0, 64).unwrap();
        assert!(e.contains(Vec2::new(3.0, 1.0)).unwrap());
        assert!(!e.contains(Vec2::new(0.2, 0.0)).unwrap());
    }

    #[test]
    fn projection_examples() {
        let d = Domain::disc(1.0, 64).unwrap();
        let (bp, dist) = d.project_to_boundary(Vec2::new(0.5, 0.0)).unwrap();
        assert!((bp.position - Vec2::new(1.0, 0.0)).norm() < 1e-15 && (dist - 0.5).abs() < 1e-15);
        let (bp, dist) = d.project_to_boundary(Vec2::zeros()).unwrap();
        assert_eq!(bp.u, 0.0);
        assert_eq!(dist, 1.0);

        let e = Domain::ellipse(2.0, 1.0, 256).unwrap();
        let z = Vec2::new(0.0, 0.5);
        let (bp, dist) = e.project_to_boundary(z).unwrap();
        // dense parameter scan oracle
        let c = &e.curves()[0];
        let scan = (0..200_000).map(|j| (c.position(j as f64 / 200_000.0) - z).norm()).fold(f64::INFINITY, f64::min);
        assert!((dist - scan).abs() < 1e-9);
        assert!((bp.position - Vec2::new(0.0, 1.0)).norm() < 1e-9 && (dist - 0.5).abs() < 1e-12);
    }

    #[test]
    fn area_and_length() {
        let d = Domain::disc(1.0, 256).unwrap();
        assert!((d.area().unwrap() - PI).abs() < 1e-12);
        assert!((d.boundary_length() - TAU).abs() < 1e-12);
        let a = Domain::annulus(0.5, 1.0, 256).unwrap();
        assert!((a.area().unwrap() - 0.75 * PI).abs() < 1e-12);
        assert!((a.boundary_length() - 3.0 * PI).abs() < 1e-12);
        let e = Domain::ellipse(2.0, 1.0, 256).unwrap();
        assert!((e.area().unwrap() - TAU).abs() < 1e-12);
        assert!(Domain::disc_exterior(1.0, 64).unwrap().area().is_err());
    }

    #[test]
    fn ellipse_perimeter_converges() {
        // high-order oracle: Gauss-Kummer series for the perimeter
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let mut sum = 1.0;
        let mut coef = 1.0f64;
        for n in 1..60 {
            // binomial(1/2, n)^2
            coef *= (0.5 - (n as f64 - 1.0)) / n as f64;
            sum += coef * coef * h.powi(n);
        }
        let oracle = PI * (a + b) * sum;
        assert!((oracle - 9.688448).abs() < 1e-6);
        let e = Domain::ellipse(a, b, 256).unwrap();
        assert!((e.boundary_length() - oracle).abs() < 1e-12);
    }

    #[test]
    fn rejects_overlapping_holes_and_bad_shapes() {
        let outer = BoundaryCurve::circle(Vec2::zeros(), 1.0, Side::Left, 64).unwrap();
        let h1 = BoundaryCurve::circle(Vec2::new(0.1, 0.0), 0.2, Side::Right, 64).unwrap();
        let h2 = BoundaryCurve::circle(Vec2::new(0.2, 0.0), 0.2, Side::Right, 64).unwrap();
        assert!(Domain::bounded(outer.clone(), vec![h1, h2]).is_err());
        let out_of = BoundaryCurve::circle(Vec2::new(0.95, 0.0), 0.2, Side::Right, 64).unwrap();
        assert!(Domain::bounded(outer, vec![out_of]).is_err());
        assert!(BoundaryCurve::circle(Vec2::zeros(), -1.0, Side::Left, 64).is_err());
        assert!(Domain::ellipse_exterior(1.5, 64).is_err());
    }

    #[test]
    fn abs_log_cos_branches_agree() {
        for alpha in [1e-9f64, 1e-3, 0.3, 1.0, 1.0471975511965976, 1.5, 1.5707963, FRAC_PI_2 - 1e-10] {
            let nx = Vec2::new(0.0, 1.0);
            let ny = Vec2::new(-alpha.sin(), alpha.cos());
            // series -ln cos a = a²/2 + a⁴/12 + a⁶/45 where cos rounds to 1
            let want = if alpha < 1e-2 {
                alpha.powi(2) / 2.0 + alpha.powi(4) / 12.0 + alpha.powi(6) / 45.0
            } else {
                -(alpha.cos()).ln()
            };
            let got = abs_log_cos_normals(nx, ny);
            assert!((got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-300, "{alpha}: {got} vs {want}");
            assert!((abs_log_cos(alpha) - want).abs() <= 1e-12 * want, "{alpha}");
        }
    }

    #[test]
    fn stretch_of_disc_is_ellipse() {
        let d = Domain::disc(1.0, 256).unwrap().stretched(2.0).unwrap();
        assert!((d.area().unwrap() - TAU).abs() < 1e-12);
        assert!((d.point(0, 0.0).unwrap().curvature - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_covariance() {
        let e = Domain::ellipse(2.0, 1.0, 256).unwrap();
        let e3 = e.scaled(3.0).unwrap();
        for u in [0.0, 0.1, 0.4] {
            assert!((e3.point(0, u).unwrap().curvature * 3.0 - e.point(0, u).unwrap().curvature).abs() < 1e-12);
        }
        assert!((e3.curvature_integral().0 - e.curvature_integral().0).abs() < 1e-12);
    }
}
