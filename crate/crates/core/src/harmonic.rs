//! Boundary-to-boundary harmonic measure `ω_x(dy)`, normalized so that
//! `π d(x,y)² ω_x(dy)/dy → 1` as `y → x`.
//!
//! Three backends: closed-form kernels (disc interior, disc exterior, ellipse
//! exterior through `g(z) = z + a/z`), a Nyström boundary-integral solver for
//! bounded smooth domains of any connectivity, and walk-on-spheres Monte Carlo.
//!
//! For a bounded domain the density splits as `ω_x(y) = A(x,y) + R(x,y)` where
//! `A = ∂_{n_x} K_y(x)` is the normal derivative of the half-plane Poisson
//! kernel `K_y(w) = <w-y, n_y> / (π|w-y|²)` and `R = -∂_{n_x} u_y(x)` with `u_y`
//! the harmonic extension of `K_y|∂D`. `R` is smooth; `A` carries the
//! `1/(π d²)` singularity.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, BoundaryPoint, Domain, ExteriorKind, Vec2};
use crate::numerics::{extrapolate_to_zero, kress_log_weights, plan_forward, tanh_sinh, trig_cardinal_weights, TrigInterp};

/// `1/(4π sin²((θ-θ')/2))`, the boundary kernel of the unit-disc exterior.
pub fn density_exact_disc_exterior(theta: f64, theta_prime: f64) -> Result<f64> {
    let s = (0.5 * (theta - theta_prime)).sin();
    if s.abs() < 1e-15 {
        return Err(Error::Singular(format!("coincident angles {theta} and {theta_prime}")));
    }
    Ok(1.0 / (4.0 * PI * s * s))
}

/// `1/(π d(x,y)²)`, exact for every disc.
pub fn density_exact_disc_interior(x: &BoundaryPoint, y: &BoundaryPoint) -> Result<f64> {
    let d2 = (x.position - y.position).norm_squared();
    if d2 == 0.0 {
        return Err(Error::Singular("coincident boundary points".into()));
    }
    Ok(1.0 / (PI * d2))
}

/// Hitting density on the boundary of the upper half-plane, seen from the
/// excursion law at the origin: `1/(π y²)`.
pub fn density_half_plane(y_offset: f64) -> Result<f64> {
    if y_offset == 0.0 || !y_offset.is_finite() {
        return Err(Error::Singular(format!("half-plane density at offset {y_offset}")));
    }
    Ok(1.0 / (PI * y_offset * y_offset))
}

/// `∫_{|y|>a} dy/(π y²) = 2/(π a)`.
pub fn half_plane_tail_mass(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("tail threshold must be positive, got {a}")));
    }
    Ok(2.0 / (PI * a))
}

/// Excursion-law mass of paths from the origin reaching height `a` before
/// returning to the boundary of the half-plane: `1/a`.
pub fn excursion_height_law_halfplane(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("excursion height must be positive, got {a}")));
    }
    Ok(1.0 / a)
}

/// Probability that a Poisson process with intensity `1/(1+s)` has no point
/// in `[0, 1]`; equals `1/2`.
pub fn poisson_void_probability() -> f64 {
    (-tanh_sinh(|s| 1.0 / (1.0 + s), 0.0, 1.0, 1e-15).value).exp()
}

/// Closed-form kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactKernel {
    DiscInterior,
    DiscExterior,
    /// Exterior of `scale · g(∂U)`, `g(z) = z + a/z`.
    EllipseExterior { map_a: f64, scale: f64 },
}

impl ExactKernel {
    pub fn for_domain(domain: &Domain) -> Result<Self> {
        match domain.exterior() {
            ExteriorKind::Disc { .. } => Ok(Self::DiscExterior),
            ExteriorKind::Ellipse { map_a, scale } => Ok(Self::EllipseExterior { map_a, scale }),
            ExteriorKind::Bounded => {
                let c = domain.curves();
                if c.len() == 1 && matches!(c[0].shape, crate::geometry::CurveShape::Circle { .. }) {
                    Ok(Self::DiscInterior)
                } else {
                    Err(Error::Backend("closed-form kernels exist only for discs and disc/ellipse exteriors".into()))
                }
            }
        }
    }

    pub fn density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
        match *self {
            Self::DiscInterior | Self::DiscExterior => 1.0 / (PI * (x.position - y.position).norm_squared()),
            Self::EllipseExterior { map_a, scale } => {
                // conformal covariance: ω_D(g ζ, g η) |g'(ζ)| |g'(η)| = 1/(π|ζ-η|²)
                let (zs, zc) = (TAU * x.u).sin_cos();
                let (es, ec) = (TAU * y.u).sin_cos();
                let chord2 = (zc - ec).powi(2) + (zs - es).powi(2);
                let gp = |c: f64, s: f64| {
                    // |1 - a ζ^{-2}| with ζ^{-2} = cos 2t - i sin 2t
                    let c2 = c * c - s * s;
                    let s2 = 2.0 * s * c;
                    scale * ((1.0 - map_a * c2).powi(2) + (map_a * s2).powi(2)).sqrt()
                };
                1.0 / (PI * chord2 * gp(zc, zs) * gp(ec, es))
            }
        }
    }
}

/// Normal derivative at `x` of the half-plane Poisson kernel `K_y`:
/// `(<n_x,n_y> - 2<r,n_y><r,n_x>/|r|²) / (π|r|²)`, `r = x - y`.
pub fn tangent_plane_kernel(x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
    let r = x.position - y.position;
    let r2 = r.norm_squared();
    (x.normal.dot(&y.normal) - 2.0 * r.dot(&y.normal) * r.dot(&x.normal) / r2) / (PI * r2)
}

/// `K_y` restricted to the boundary, with its limit `ν_y/(2π)` at `z = y`.
fn poisson_trace(y: &BoundaryPoint, z: Vec2, same_node: bool) -> f64 {
    if same_node {
        return y.curvature / TAU;
    }
    let r = z - y.position;
    r.dot(&y.normal) / (PI * r.norm_squared())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NystromConfig {
    /// Quadrature nodes per boundary curve.
    pub panels: usize,
    /// First standoff distance for the standoff route; defaults to
    /// `0.01 × feature size`.
    pub delta0: Option<f64>,
}

impl Default for NystromConfig {
    fn default() -> Self {
        Self { panels: 256, delta0: None }
    }
}

/// Nyström discretization of the interior Dirichlet problem by a single-layer
/// potential plus a constant, `S σ + c = f`, `∫ σ = 0`, with Kress
/// log-splitting on each curve's self-interaction block.
pub struct NystromSolver {
    curves: Vec<BoundaryCurve>,
    n: usize,
    nodes: Vec<BoundaryPoint>,
    weights: Vec<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `∂_n S - ½ I` at the nodes (interior limit, inward normal).
    dtn: DMatrix<f64>,
    /// `R(x_i, y_j)`, symmetrized.
    residual: DMatrix<f64>,
    rows: Vec<Vec<TrigInterp>>,
    asymmetry: f64,
    pivot_ratio: f64,
    feature_size: f64,
    delta0: Option<f64>,
}

impl NystromSolver {
    pub fn new(domain: &Domain, config: &NystromConfig) -> Result<Self> {
        if !domain.is_bounded() {
            return Err(Error::Backend("the Nyström solver handles bounded domains only".into()));
        }
        let n = config.panels;
        if n < 16 || n % 2 != 0 {
            return Err(Error::Config(format!("nystrom.panels must be an even number >= 16, got {n}")));
        }
        let curves = domain.curves().to_vec();
        let m = curves.len();
        let total = n * m;
        let mut nodes = Vec::with_capacity(total);
        for (k, c) in curves.iter().enumerate() {
            for j in 0..n {
                nodes.push(c.point(k, j as f64 / n as f64)?);
            }
        }
        let weights: Vec<f64> = nodes.iter().map(|p| p.speed / n as f64).collect();

        let kress = kress_log_weights(n);
        let h = TAU / n as f64;
        let mut mat = DMatrix::<f64>::zeros(total + 1, total + 1);
        for i in 0..total {
            let (ci, li) = (i / n, i % n);
            let xi = nodes[i].position;
            for j in 0..total {
                let (cj, lj) = (j / n, j % n);
                let xj = nodes[j].position;
                mat[(i, j)] = if ci == cj {
                    let speed_t = nodes[j].speed / TAU;
                    let smooth = if li == lj {
                        (speed_t * speed_t).ln()
                    } else {
                        let half = 0.5 * h * (li as f64 - lj as f64);
                        ((xi - xj).norm_squared() / (4.0 * half.sin().powi(2))).ln()
                    };
                    let r = kress[(li + n - lj) % n];
                    -(0.5 * r + 0.5 * h * smooth) * speed_t / TAU
                } else {
                    -(xi - xj).norm().ln() * weights[j] / TAU
                };
            }
            mat[(i, total)] = 1.0;
            mat[(total, i)] = weights[i];
        }
        let lu = mat.lu();
        let diag = lu.u().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in diag.iter() {
            lo = lo.min(v.abs());
            hi = hi.max(v.abs());
        }
        let pivot_ratio = lo / hi;
        if !(pivot_ratio > 1e-14) {
            return Err(Error::Numerical(format!(
                "single-layer system is singular or ill-conditioned (pivot ratio {pivot_ratio:e})"
            )));
        }

        let mut dtn = DMatrix::<f64>::zeros(total, total);
        for i in 0..total {
            let xi = &nodes[i];
            for j in 0..total {
                dtn[(i, j)] = if i == j {
                    xi.curvature / (4.0 * PI) * weights[j] - 0.5
                } else {
                    let r = xi.position - nodes[j].position;
                    -r.dot(&xi.normal) / (TAU * r.norm_squared()) * weights[j]
                };
            }
        }

        // one right-hand side per node y_c
        let mut rhs = DMatrix::<f64>::zeros(total + 1, total);
        for c in 0..total {
            for i in 0..total {
                rhs[(i, c)] = poisson_trace(&nodes[c], nodes[i].position, i == c);
            }
        }
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical(format!("LU solve failed (pivot ratio {pivot_ratio:e})")))?;
        let sigma = sol.rows(0, total);
        let du = &dtn * sigma;
        let mut residual = DMatrix::<f64>::zeros(total, total);
        let mut asymmetry = 0.0f64;
        for i in 0..total {
            for j in 0..total {
                let (a, b) = (-du[(i, j)], -du[(j, i)]);
                asymmetry = asymmetry.max((a - b).abs());
                residual[(i, j)] = 0.5 * (a + b);
            }
        }
        if residual.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite values in the Dirichlet-to-Neumann solve".into()));
        }
        let plan = plan_forward(n);
        let rows = (0..total)
            .map(|i| {
                (0..m)
                    .map(|c| {
                        let row: Vec<f64> = (0..n).map(|j| residual[(i, c * n + j)]).collect();
                        TrigInterp::with_plan(&row, plan.as_ref())
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            curves,
            n,
            nodes,
            weights,
            lu,
            dtn,
            residual,
            rows,
            asymmetry,
            pivot_ratio,
            feature_size: domain.feature_size(),
            delta0: config.delta0,
        })
    }

    pub fn nodes_per_curve(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[BoundaryPoint] {
        &self.nodes
    }

    /// `max |R(x_i,y_j) - R(y_j,x_i)|` before symmetrization; a cheap proxy
    /// for the discretization error of `R`.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solve for `(σ, c)` given Dirichlet data at the nodes.
    fn solve_density(&self, data: &[f64]) -> Result<(Vec<f64>, f64)> {
        let total = self.nodes.len();
        let mut rhs = DVector::<f64>::zeros(total + 1);
        rhs.rows_mut(0, total).copy_from_slice(data);
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical(format!("LU solve failed (pivot ratio {:e})", self.pivot_ratio)))?;
        Ok((sol.rows(0, total).iter().copied().collect(), sol[total]))
    }

    /// Inward normal derivative of the harmonic extension of `data`.
    pub fn dirichlet_to_neumann(&self, data: &[f64]) -> Result<Vec<f64>> {
        if data.len() != self.nodes.len() {
            return Err(Error::Config(format!("expected {} boundary values, got {}", self.nodes.len(), data.len())));
        }
        let (sigma, _) = self.solve_density(data)?;
        Ok((&self.dtn * DVector::from_vec(sigma)).iter().copied().collect())
    }

    /// Harmonic extension of `data` evaluated at an interior point, with the
    /// density upsampled so that the trapezoid rule resolves `w`.
    pub fn evaluate_extension(&self, data: &[f64], w: Vec2) -> Result<f64> {
        let (sigma, c) = self.solve_density(data)?;
        Ok(self.single_layer_at(&sigma, w)? + c)
    }

    fn single_layer_at(&self, sigma: &[f64], w: Vec2) -> Result<f64> {
        let n = self.n;
        let mut acc = 0.0;
        for (k, curve) in self.curves.iter().enumerate() {
            let dens = &sigma[k * n..(k + 1) * n];
            let len = curve.length();
            let dist = curve.nearest(w)?.1;
            // fine spacing about a quarter of the distance to the curve
            let need = (4.0 * len / dist.max(1e-300)).ceil() as usize;
            let factor = need.div_ceil(n).clamp(1, 512);
            let fine = n * factor;
            let interp = TrigInterp::new(dens);
            let mut part = 0.0;
            for j in 0..fine {
                let u = j as f64 / fine as f64;
                let (p, d1, _) = curve.eval(u);
                part += -(p - w).norm().ln() * interp.eval(u) * d1.norm();
            }
            acc += part / (fine as f64 * TAU);
        }
        if !acc.is_finite() {
            return Err(Error::Numerical("single-layer evaluation produced a non-finite value".into()));
        }
        Ok(acc)
    }

    fn node_index(&self, p: &BoundaryPoint) -> Option<usize> {
        let s = p.u * self.n as f64;
        let j = s.round();
        if (s - j).abs() < 1e-9 {
            Some(p.curve * self.n + (j as usize) % self.n)
        } else {
            None
        }
    }

    /// Smooth part `R(x, y)` of the density.
    pub fn residual(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
        if let Some(i) = self.node_index(x) {
            if let Some(j) = self.node_index(y) {
                return self.residual[(i, j)];
            }
            return self.rows[i][y.curve].eval(y.u);
        }
        let mut w = Vec::with_capacity(self.n);
        trig_cardinal_weights(self.n, x.u, &mut w);
        let base = x.curve * self.n;
        w.iter()
            .enumerate()
            .filter(|(_, wi)| wi.abs() > 0.0)
            .map(|(i, wi)| wi * self.rows[base + i][y.curve].eval(y.u))
            .sum()
    }

    pub fn density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
        tangent_plane_kernel(x, y) + self.residual(x, y)
    }

    /// Density by the standoff limit `lim_{δ→0} h(x + δ n_x, y)/δ`, where
    /// `h(w, y) = K_y(w) - u_y(w)` is the Poisson kernel of `D`, evaluated
    /// at `δ_j = δ₀ 2^{-j}`, `j = 0..3`, and extrapolated to `δ = 0`.
    pub fn density_standoff(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> Result<f64> {
        let delta0 = self.delta0.unwrap_or(1e-2 * self.feature_size);
        let data: Vec<f64> =
            self.nodes.iter().map(|z| poisson_trace(y, z.position, z.position == y.position)).collect();
        let (sigma, c) = self.solve_density(&data)?;
        let mut steps = Vec::new();
        let mut values = Vec::new();
        for j in 0..4 {
            let delta = delta0 * 0.5f64.powi(j);
            let w = x.position + x.normal * delta;
            let r = w - y.position;
            let k = r.dot(&y.normal) / (PI * r.norm_squared());
            let u = self.single_layer_at(&sigma, w)? + c;
            steps.push(delta);
            values.push((k - u) / delta);
        }
        Ok(extrapolate_to_zero(&steps, &values))
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Walk-on-spheres parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WosConfig {
    /// Walker count.
    pub n: usize,
    /// Absorption distance; defaults to `1e-6 × diam(D)`.
    pub eps: Option<f64>,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for WosConfig {
    fn default() -> Self {
        Self { n: 100_000, eps: None, max_steps: 100_000, seed: 0 }
    }
}

impl WosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("wos.n must be at least 1".into()));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::Config(format!("wos.eps must be positive, got {e}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("wos.max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn eps_for(&self, domain: &Domain) -> f64 {
        self.eps.unwrap_or(1e-6 * domain.diameter())
    }
}

/// Walkers per RNG stream. Chunk `c` draws from stream `c` of the master
/// seed, so results do not depend on how chunks are scheduled.
pub const WALKERS_PER_CHUNK: usize = 4096;

pub fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One walk-on-spheres path from `start`; `None` when the step cap is hit.
pub fn walk_on_spheres<R: Rng>(
    domain: &Domain,
    start: Vec2,
    eps: f64,
    max_steps: usize,
    rng: &mut R,
) -> Result<Option<BoundaryPoint>> {
    let mut z = start;
    for _ in 0..max_steps {
        let d = domain.distance_to_boundary(z)?;
        if d < eps {
            return Ok(Some(domain.project_to_boundary(z)?.0));
        }
        let theta = TAU * rng.random::<f64>();
        let (s, c) = theta.sin_cos();
        z += Vec2::new(c, s) * d;
    }
    Ok(None)
}

/// Single hitting point drawn with the first stream of `config.seed`.
pub fn sample_hitting_point(domain: &Domain, start: Vec2, config: &WosConfig) -> Result<BoundaryPoint> {
    config.validate()?;
    check_start(domain, start)?;
    let mut rng = chunk_rng(config.seed, 0);
    walk_on_spheres(domain, start, config.eps_for(domain), config.max_steps, &mut rng)?
        .ok_or(Error::WalkNonConvergence { failed: 1, walkers: 1, max_steps: config.max_steps })
}

fn check_start(domain: &Domain, start: Vec2) -> Result<()> {
    if !domain.is_bounded() {
        return Err(Error::Backend("walk-on-spheres needs a bounded domain".into()));
    }
    if !domain.contains(start)? {
        return Err(Error::Domain(format!("start point ({}, {}) is not inside the domain", start.x, start.y)));
    }
    Ok(())
}

/// `config.n` hitting points from `start`, in walker order. `stream_base`
/// offsets the RNG streams so that independent experiments sharing a seed
/// do not reuse randomness.
pub fn sample_hitting_points(
    domain: &Domain,
    start: Vec2,
    config: &WosConfig,
    stream_base: u64,
) -> Result<Vec<BoundaryPoint>> {
    config.validate()?;
    check_start(domain, start)?;
    let eps = config.eps_for(domain);
    let chunks = config.n.div_ceil(WALKERS_PER_CHUNK);
    let per_chunk: Vec<Result<(Vec<BoundaryPoint>, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(config.seed, stream_base + c as u64);
            let count = WALKERS_PER_CHUNK.min(config.n - c * WALKERS_PER_CHUNK);
            let mut hits = Vec::with_capacity(count);
            let mut failed = 0;
            for _ in 0..count {
                match walk_on_spheres(domain, start, eps, config.max_steps, &mut rng)? {
                    Some(p) => hits.push(p),
                    None => failed += 1,
                }
            }
            Ok((hits, failed))
        })
        .collect();
    let mut out = Vec::with_capacity(config.n);
    let mut failed = 0;
    for r in per_chunk {
        let (hits, f) = r?;
        out.extend(hits);
        failed += f;
    }
    if failed > 0 {
        return Err(Error::WalkNonConvergence { failed, walkers: config.n, max_steps: config.max_steps });
    }
    Ok(out)
}

/// A parameter interval `[u_start, u_start + span]` (mod 1) on one curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryArc {
    pub curve: usize,
    pub u_start: f64,
    pub span: f64,
}

impl BoundaryArc {
    pub fn new(curve: usize, u_start: f64, span: f64) -> Result<Self> {
        if !(span > 0.0 && span <= 1.0) {
            return Err(Error::Config(format!("arc span must lie in (0, 1], got {span}")));
        }
        Ok(Self { curve, u_start: u_start.rem_euclid(1.0), span })
    }

    /// Arc of parameter half-width `half_span` centered at `y`.
    pub fn centered(y: &BoundaryPoint, half_span: f64) -> Result<Self> {
        Self::new(y.curve, y.u - half_span, 2.0 * half_span)
    }

    pub fn contains(&self, p: &BoundaryPoint) -> bool {
        p.curve == self.curve && (p.u - self.u_start).rem_euclid(1.0) <= self.span
    }

    /// `∫_A f(y) dy` by arc length.
    pub fn integrate<F: FnMut(&BoundaryPoint) -> f64>(&self, domain: &Domain, mut f: F, tol: f64) -> Result<f64> {
        let curve = domain
            .curves()
            .get(self.curve)
            .ok_or_else(|| Error::InvalidCurve(format!("no curve with index {}", self.curve)))?;
        let mut err = None;
        let q = tanh_sinh(
            |s| match curve.point(self.curve, self.u_start + s) {
                Ok(p) => f(&p) * p.speed,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            0.0,
            self.span,
            tol,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(q.value),
        }
    }

    pub fn length(&self, domain: &Domain) -> Result<f64> {
        self.integrate(domain, |_| 1.0, 1e-13)
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub walkers: usize,
}

/// `(1/δ) P^{x + δ n(x)}(hit A)` with its binomial standard error.
pub fn density_boundary_mc(
    domain: &Domain,
    x: &BoundaryPoint,
    arc: &BoundaryArc,
    delta: f64,
    config: &WosConfig,
) -> Result<McEstimate> {
    density_boundary_mc_stream(domain, x, arc, delta, config, 0)
}

fn standoff_start(domain: &Domain, x: &BoundaryPoint, delta: f64) -> Result<Vec2> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("standoff must be positive, got {delta}")));
    }
    let start = x.position + x.normal * delta;
    if !domain.contains(start)? {
        return Err(Error::StepTooLarge(format!("standoff {delta} leaves the domain at the given boundary point")));
    }
    Ok(start)
}

fn density_boundary_mc_stream(
    domain: &Domain,
    x: &BoundaryPoint,
    arc: &BoundaryArc,
    delta: f64,
    config: &WosConfig,
    stream_base: u64,
) -> Result<McEstimate> {
    let start = standoff_start(domain, x, delta)?;
    let hits = sample_hitting_points(domain, start, config, stream_base)?;
    let k = hits.iter().filter(|p| arc.contains(p)).count();
    let n = hits.len() as f64;
    let p = k as f64 / n;
    Ok(McEstimate { value: p / delta, std_error: (p * (1.0 - p) / n).sqrt() / delta, walkers: hits.len() })
}

/// Two-level Richardson combination `2 E(δ/2) - E(δ)` of independent runs.
pub fn density_boundary_mc_extrapolated(
    domain: &Domain,
    x: &BoundaryPoint,
    arc: &BoundaryArc,
    delta: f64,
    config: &WosConfig,
) -> Result<McEstimate> {
    let coarse = density_boundary_mc_stream(domain, x, arc, delta, config, 0)?;
    let fine = density_boundary_mc_stream(domain, x, arc, 0.5 * delta, config, 1 << 32)?;
    Ok(McEstimate {
        value: 2.0 * fine.value - coarse.value,
        std_error: (4.0 * fine.std_error.powi(2) + coarse.std_error.powi(2)).sqrt(),
        walkers: coarse.walkers + fine.walkers,
    })
}

/// `(1/δ) E[f(x, hit)]` over walkers started at `x + δ n(x)`, with standard
/// error. Used for Monte Carlo boundary integrals against `ω_x`.
pub fn mc_boundary_expectation<F>(
    domain: &Domain,
    x: &BoundaryPoint,
    delta: f64,
    config: &WosConfig,
    stream_base: u64,
    f: F,
) -> Result<McEstimate>
where
    F: Fn(&BoundaryPoint) -> f64,
{
    let start = standoff_start(domain, x, delta)?;
    let hits = sample_hitting_points(domain, start, config, stream_base)?;
    let vals: Vec<f64> = hits.iter().map(|p| f(p) / delta).collect();
    let n = vals.len() as f64;
    let mean = crate::numerics::pairwise_sum(&vals) / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(McEstimate { value: mean, std_error: (var / n).sqrt(), walkers: hits.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Nystrom,
    Wos,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Nystrom => "nystrom",
            Self::Wos => "wos",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "nystrom" => Ok(Self::Nystrom),
            "wos" => Ok(Self::Wos),
            _ => Err(Error::Config(format!("unknown harmonic-measure backend '{s}' (expected exact, nystrom or wos)"))),
        }
    }
}

pub enum Backend {
    Exact(ExactKernel),
    Nystrom(Box<NystromSolver>),
    Wos(WosConfig),
}

/// Point evaluation with error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Harmonic measure of a domain under one backend.
pub struct HarmonicMeasure<'a> {
    domain: &'a Domain,
    backend: Backend,
}

impl<'a> HarmonicMeasure<'a> {
    pub fn exact(domain: &'a Domain) -> Result<Self> {
        Ok(Self { domain, backend: Backend::Exact(ExactKernel::for_domain(domain)?) })
    }

    pub fn nystrom(domain: &'a Domain, config: &NystromConfig) -> Result<Self> {
        Ok(Self { domain, backend: Backend::Nystrom(Box::new(NystromSolver::new(domain, config)?)) })
    }

    pub fn wos(domain: &'a Domain, config: &WosConfig) -> Result<Self> {
        config.validate()?;
        if !domain.is_bounded() {
            return Err(Error::Backend("walk-on-spheres needs a bounded domain".into()));
        }
        Ok(Self { domain, backend: Backend::Wos(*config) })
    }

    pub fn new(domain: &'a Domain, kind: BackendKind, nystrom: &NystromConfig, wos: &WosConfig) -> Result<Self> {
        match kind {
            BackendKind::Exact => Self::exact(domain),
            BackendKind::Nystrom => Self::nystrom(domain, nystrom),
            BackendKind::Wos => Self::wos(domain, wos),
        }
    }

    pub fn domain(&self) -> &Domain {
        self.domain
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn kind(&self) -> BackendKind {
        match self.backend {
            Backend::Exact(_) => BackendKind::Exact,
            Backend::Nystrom(_) => BackendKind::Nystrom,
            Backend::Wos(_) => BackendKind::Wos,
        }
    }

    /// Density for the deterministic backends; `None` for Monte Carlo.
    pub fn deterministic_density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> Option<f64> {
        match &self.backend {
            Backend::Exact(k) => Some(k.density(x, y)),
            Backend::Nystrom(s) => Some(s.density(x, y)),
            Backend::Wos(_) => None,
        }
    }

    /// `ω_x(dy)/dy`. The Monte Carlo backend returns the average density over
    /// the arc of parameter half-width `1e-2` around `y`, extrapolated in the
    /// standoff distance from `δ = 1e-2 × feature size`.
    pub fn density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> Result<Estimate> {
        if (x.position - y.position).norm() == 0.0 {
            return Err(Error::Singular("density requested on the diagonal".into()));
        }
        match &self.backend {
            Backend::Exact(k) => Ok(Estimate { value: k.density(x, y), error: 0.0 }),
            Backend::Nystrom(s) => Ok(Estimate { value: s.density(x, y), error: s.asymmetry() }),
            Backend::Wos(cfg) => {
                let arc = BoundaryArc::centered(y, 1e-2)?;
                let len = arc.length(self.domain)?;
                let delta = 1e-2 * self.domain.feature_size();
                let m = density_boundary_mc_extrapolated(self.domain, x, &arc, delta, cfg)?;
                Ok(Estimate { value: m.value / len, error: m.std_error / len })
            }
        }
    }
}
