//! Assembly of `Λ(D) = ∫ ν dx + ∫∫ |log cos α(x,y)| ω_x(dy) dx` and the decay
//! rate `-Λ/(2|D|)`.
//!
//! The double integral uses the periodic trapezoid rule in `x` and, for each
//! `x`, tanh-sinh quadrature in `y` on segments split at `y = x` and at the
//! points where the tangents at `x` and `y` are perpendicular, where
//! `|log cos α|` has an integrable logarithmic singularity. Near the diagonal
//! the integrand tends to `ν(x)²/(2π)`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{DomainSpec, HoleSpec};
use crate::error::{Error, Result};
use crate::geometry::{abs_log_cos_normals, perp, BoundaryPoint, Domain, Vec2};
use crate::harmonic::{mc_boundary_expectation, BackendKind, HarmonicMeasure, NystromConfig, WosConfig};
use crate::numerics::{pairwise_sum, tanh_sinh};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Outer trapezoid nodes per boundary curve.
    pub nodes: usize,
    /// Absolute tolerance of each inner tanh-sinh segment.
    pub inner_tol: f64,
    /// Samples per curve used to locate perpendicular-tangent points.
    pub root_samples: usize,
    /// Largest acceptable error estimate of the cross term.
    pub max_error: f64,
    /// Outer nodes per curve for the Monte Carlo cross term.
    pub mc_nodes: usize,
    /// Standoff for the Monte Carlo cross term; defaults to
    /// `0.01 × feature size`.
    pub mc_delta: Option<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { nodes: 256, inner_tol: 1e-12, root_samples: 256, max_error: 1e-4, mc_nodes: 32, mc_delta: None }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 || self.nodes % 2 != 0 {
            return Err(Error::Config(format!("quad.nodes must be an even number >= 8, got {}", self.nodes)));
        }
        if !(self.inner_tol > 0.0) || !(self.max_error > 0.0) {
            return Err(Error::Config("quad tolerances must be positive".into()));
        }
        if self.root_samples < 8 || self.mc_nodes < 2 || self.mc_nodes % 2 != 0 {
            return Err(Error::Config("quad.root_samples must be >= 8 and quad.mc_nodes even and >= 2".into()));
        }
        Ok(())
    }
}

/// A boundary parametrization together with a boundary kernel, the input of
/// the double integral.
pub trait CrossIntegrand: Sync {
    fn curve_count(&self) -> usize;
    fn point(&self, curve: usize, u: f64) -> Result<BoundaryPoint>;
    fn density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> f64;
    /// Length below which a chord counts as the diagonal.
    fn length_scale(&self) -> f64;
}

struct DomainIntegrand<'h, 'd> {
    hm: &'h HarmonicMeasure<'d>,
}

impl CrossIntegrand for DomainIntegrand<'_, '_> {
    fn curve_count(&self) -> usize {
        self.hm.domain().curves().len()
    }
    fn point(&self, curve: usize, u: f64) -> Result<BoundaryPoint> {
        self.hm.domain().point(curve, u)
    }
    fn density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
        self.hm.deterministic_density(x, y).unwrap_or(f64::NAN)
    }
    fn length_scale(&self) -> f64 {
        self.hm.domain().diameter()
    }
}

/// The unit circle carrying the normals of the ellipse `g(∂U)`,
/// `g(z) = z + a/z`; the cross term of the ellipse exterior pulled back by `g`.
pub struct EllipsePullback {
    pub map_a: f64,
}

impl CrossIntegrand for EllipsePullback {
    fn curve_count(&self) -> usize {
        1
    }
    fn point(&self, curve: usize, u: f64) -> Result<BoundaryPoint> {
        let (s, c) = (TAU * u).sin_cos();
        let a = self.map_a;
        // ζ g'(ζ) = ζ - a/ζ
        let w = Vec2::new((1.0 - a) * c, (1.0 + a) * s);
        let w2 = w.norm_squared();
        let normal = w / w2.sqrt();
        Ok(BoundaryPoint {
            curve,
            u,
            position: Vec2::new(c, s),
            normal,
            tangent: perp(normal),
            // turning of the ellipse normal per unit angle on the circle
            curvature: (1.0 - a * a) / w2,
            speed: TAU,
        })
    }
    fn density(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
        1.0 / (PI * (x.position - y.position).norm_squared())
    }
    fn length_scale(&self) -> f64 {
        2.0
    }
}

/// Value of a double integral with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossTerm {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
    pub evaluations: usize,
}

/// Inner integral `∫ |log cos α(x,y)| ω_x(y) dy` at a fixed `x`.
pub fn inner_integral<I: CrossIntegrand + ?Sized>(prob: &I, x: &BoundaryPoint, quad: &QuadConfig) -> Result<CrossTerm> {
    let diag_limit = x.curvature * x.curvature / TAU;
    let tiny2 = (1e-7 * prob.length_scale()).powi(2);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for c in 0..prob.curve_count() {
        let mut breaks = perpendicular_points(prob, x, c, quad.root_samples)?;
        if c == x.curve {
            breaks.push(x.u);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let segments: Vec<(f64, f64)> = if breaks.is_empty() {
            vec![(0.0, 1.0)]
        } else {
            let m = breaks.len();
            (0..m).map(|i| (breaks[i], if i + 1 < m { breaks[i + 1] } else { breaks[0] + 1.0 })).collect()
        };
        let mut failure = None;
        for (a, b) in segments {
            let q = tanh_sinh(
                |u| {
                    let y = match prob.point(c, u) {
                        Ok(y) => y,
                        Err(e) => {
                            failure = Some(e);
                            return 0.0;
                        }
                    };
                    if c == x.curve && (x.position - y.position).norm_squared() < tiny2 {
                        return diag_limit * y.speed;
                    }
                    abs_log_cos_normals(x.normal, y.normal) * prob.density(x, &y) * y.speed
                },
                a,
                b,
                quad.inner_tol,
            );
            value += q.value;
            error += q.error;
            evaluations += q.evals;
        }
        if let Some(e) = failure {
            return Err(e);
        }
    }
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite inner integral at curve {}, u = {}", x.curve, x.u)));
    }
    Ok(CrossTerm { value, error, nodes: 0, evaluations })
}

/// Parameters on curve `c` where the normal is perpendicular to `x`'s normal.
fn perpendicular_points<I: CrossIntegrand + ?Sized>(prob: &I, x: &BoundaryPoint, c: usize, samples: usize) -> Result<Vec<f64>> {
    let f = |u: f64| -> Result<f64> { Ok(prob.point(c, u)?.normal.dot(&x.normal)) };
    // offset keeps symmetric roots such as u = 0 or 1/2 off the sample grid
    let grid = |k: usize| (k as f64 + 0.381_966_011_250_105_1) / samples as f64;
    let vals: Vec<f64> = (0..=samples).map(|k| f(grid(k))).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 0..samples {
        let (u0, u1) = (grid(k), grid(k + 1));
        let (f0, f1) = (vals[k], vals[k + 1]);
        if f0 == 0.0 {
            out.push(u0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (u0, u1, f0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        } else if k > 0 && vals[k].abs() < 1e-2 && vals[k].abs() <= vals[k - 1].abs() && vals[k].abs() <= f1.abs() {
            // near-tangential touch without a sign change
            let (mut lo, mut hi) = (grid(k - 1), u1);
            for _ in 0..80 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if f(m1)?.abs() < f(m2)?.abs() {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let um = 0.5 * (lo + hi);
            if f(um)?.abs() < 1e-8 {
                out.push(um);
            }
        }
    }
    Ok(out.into_iter().map(|u| u.rem_euclid(1.0)).collect())
}

/// The double integral for any [`CrossIntegrand`], with error estimated from
/// the node-halved trapezoid sum plus the inner quadrature errors.
pub fn cross_term_with<I: CrossIntegrand + ?Sized>(prob: &I, quad: &QuadConfig) -> Result<CrossTerm> {
    quad.validate()?;
    let n = quad.nodes;
    let items: Vec<(usize, usize)> = (0..prob.curve_count()).flat_map(|c| (0..n).map(move |i| (c, i))).collect();
    let parts: Vec<Result<(f64, f64, usize)>> = items
        .par_iter()
        .map(|&(c, i)| {
            let x = prob.point(c, i as f64 / n as f64)?;
            let w = x.speed / n as f64;
            let q = inner_integral(prob, &x, quad)?;
            Ok((q.value * w, q.error * w, q.evaluations))
        })
        .collect();
    let mut vals = Vec::with_capacity(parts.len());
    let mut halves = Vec::with_capacity(parts.len() / 2);
    let mut inner_err = 0.0;
    let mut evaluations = 0;
    for (k, p) in parts.into_iter().enumerate() {
        let (v, e, m) = p?;
        vals.push(v);
        if (k % n) % 2 == 0 {
            halves.push(2.0 * v);
        }
        inner_err += e;
        evaluations += m;
    }
    let value = pairwise_sum(&vals);
    let half = pairwise_sum(&halves);
    let error = (value - half).abs() + inner_err;
    if !(error <= quad.max_error) {
        return Err(Error::Tolerance {
            message: format!("cross-term error estimate {error:e} exceeds {:e}", quad.max_error),
            partial: value,
        });
    }
    Ok(CrossTerm { value, error, nodes: n, evaluations })
}

/// Cross term with `ω` from the given harmonic measure.
pub fn cross_term(hm: &HarmonicMeasure<'_>, quad: &QuadConfig) -> Result<CrossTerm> {
    match hm.kind() {
        BackendKind::Wos => {
            let crate::harmonic::Backend::Wos(cfg) = hm.backend() else { unreachable!() };
            cross_term_mc(hm.domain(), cfg, quad)
        }
        _ => cross_term_with(&DomainIntegrand { hm }, quad),
    }
}

/// Monte Carlo cross term: for each outer node `x`, the standoff estimate
/// `(1/δ) E^{x+δn}[|log cos α(x, hit)|]`, combined across `δ` and `δ/2` by
/// Richardson extrapolation.
pub fn cross_term_mc(domain: &Domain, wos: &WosConfig, quad: &QuadConfig) -> Result<CrossTerm> {
    quad.validate()?;
    let n = quad.mc_nodes;
    let delta = quad.mc_delta.unwrap_or(1e-2 * domain.feature_size());
    let mut vals = Vec::new();
    let mut var = 0.0;
    let mut walkers = 0;
    for c in 0..domain.curves().len() {
        for i in 0..n {
            let x = domain.point(c, i as f64 / n as f64)?;
            let w = x.speed / n as f64;
            let node = (c * n + i) as u64;
            let f = |y: &BoundaryPoint| abs_log_cos_normals(x.normal, y.normal);
            let coarse = mc_boundary_expectation(domain, &x, delta, wos, (2 * node) << 24, f)?;
            let fine = mc_boundary_expectation(domain, &x, 0.5 * delta, wos, (2 * node + 1) << 24, f)?;
            vals.push(w * (2.0 * fine.value - coarse.value));
            var += w * w * (4.0 * fine.std_error.powi(2) + coarse.std_error.powi(2));
            walkers += coarse.walkers + fine.walkers;
        }
    }
    Ok(CrossTerm { value: pairwise_sum(&vals), error: var.sqrt(), nodes: n, evaluations: walkers })
}

/// Cross term of the exterior of the ellipse `g(∂U)`, `g(z) = z + a/z`,
/// computed on the unit circle from the pulled-back kernel.
pub fn ellipse_exterior_cross_term(map_a: f64, quad: &QuadConfig) -> Result<CrossTerm> {
    if !(map_a > 0.0 && map_a < 1.0) {
        return Err(Error::Domain(format!("map parameter must lie in (0, 1), got {map_a}")));
    }
    cross_term_with(&EllipsePullback { map_a }, quad)
}

pub const CSV_HEADER: &str =
    "domain_id,holes,curvature_term,cross_term,lambda,area,decay_rate,err_curv,err_cross,backend,nodes,seed";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub domain_id: String,
    pub holes: usize,
    pub curvature_term: f64,
    pub cross_term: f64,
    pub lambda: f64,
    pub chi: i32,
    /// `|curvature_term - 2πχ| < 1e-6`.
    pub chi_check: bool,
    /// `None` for exterior domains.
    pub area: Option<f64>,
    pub decay_rate: Option<f64>,
    pub err_curv: f64,
    pub err_cross: f64,
    pub backend: BackendKind,
    pub nodes: usize,
    pub seed: Option<u64>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Quote a CSV field when it holds a delimiter or a quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl LyapunovReport {
    pub fn csv_row(&self) -> String {
        [
            csv_field(&self.domain_id),
            self.holes.to_string(),
            fmt_f64(self.curvature_term),
            fmt_f64(self.cross_term),
            fmt_f64(self.lambda),
            self.area.map(fmt_f64).unwrap_or_else(|| "inf".into()),
            self.decay_rate.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.err_curv),
            fmt_f64(self.err_cross),
            self.backend.as_str().into(),
            self.nodes.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
        .join(",")
    }

    /// `Λ` error bar: sum of the two term errors.
    pub fn lambda_error(&self) -> f64 {
        self.err_curv + self.err_cross
    }
}

/// Full report for one domain and backend.
pub fn lambda(hm: &HarmonicMeasure<'_>, quad: &QuadConfig, domain_id: &str) -> Result<LyapunovReport> {
    let domain = hm.domain();
    let (curvature_term, err_curv) = domain.curvature_integral();
    let chi = domain.euler_characteristic();
    let cross = cross_term(hm, quad)?;
    let lambda = curvature_term + cross.value;
    let area = domain.area().ok();
    let seed = match hm.backend() {
        crate::harmonic::Backend::Wos(cfg) => Some(cfg.seed),
        _ => None,
    };
    Ok(LyapunovReport {
        domain_id: domain_id.to_string(),
        holes: domain.hole_count(),
        curvature_term,
        cross_term: cross.value,
        lambda,
        chi,
        chi_check: (curvature_term - TAU * chi as f64).abs() < 1e-6,
        area,
        decay_rate: area.map(|a| -lambda / (2.0 * a)),
        err_curv,
        err_cross: cross.error,
        backend: hm.kind(),
        nodes: if hm.kind() == BackendKind::Wos { quad.mc_nodes } else { quad.nodes },
        seed,
    })
}

/// Backend selection bundled for operations that build several domains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendSettings {
    pub kind: BackendKind,
    pub nystrom: NystromConfig,
    pub wos: WosConfig,
}

impl Default for BackendSettings {
    fn default() -> Self {
        Self { kind: BackendKind::Nystrom, nystrom: NystromConfig::default(), wos: WosConfig::default() }
    }
}

impl BackendSettings {
    pub fn measure<'a>(&self, domain: &'a Domain) -> Result<HarmonicMeasure<'a>> {
        HarmonicMeasure::new(domain, self.kind, &self.nystrom, &self.wos)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub scale: f64,
    pub lambda: f64,
    pub lambda_scaled: f64,
    pub difference: f64,
    /// Sum of the error estimates of both computations.
    pub combined_error: f64,
    pub decay_rate: Option<f64>,
    pub decay_rate_scaled: Option<f64>,
}

/// `Λ(D)` against `Λ(aD)` with the same relative quadrature settings.
pub fn scaling_invariance_check(
    domain: &Domain,
    scale: f64,
    backend: &BackendSettings,
    quad: &QuadConfig,
) -> Result<ScalingReport> {
    let scaled = domain.scaled(scale)?;
    let mut backend_scaled = *backend;
    if let Some(e) = backend.wos.eps {
        backend_scaled.wos.eps = Some(e * scale);
    }
    if let Some(d) = backend.nystrom.delta0 {
        backend_scaled.nystrom.delta0 = Some(d * scale);
    }
    let mut quad_scaled = *quad;
    quad_scaled.mc_delta = quad.mc_delta.map(|d| d * scale);
    let a = lambda(&backend.measure(domain)?, quad, "base")?;
    let b = lambda(&backend_scaled.measure(&scaled)?, &quad_scaled, "scaled")?;
    Ok(ScalingReport {
        scale,
        lambda: a.lambda,
        lambda_scaled: b.lambda,
        difference: b.lambda - a.lambda,
        combined_error: a.lambda_error() + b.lambda_error(),
        decay_rate: a.decay_rate,
        decay_rate_scaled: b.decay_rate,
    })
}

/// Disc with small holes, swept over the number of holes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "one")]
    pub radius: f64,
    pub holes: Vec<HoleSpec>,
    #[serde(default = "default_sweep_n_quad")]
    pub n_quad: usize,
    /// Exploratory: also report `Λ` of the full domain under
    /// `(x₁, x₂) -> (c x₁, x₂)` for each listed `c`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stretch: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_sweep_n_quad() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    /// `identity` or `stretch:c` (exploratory).
    pub transform: String,
    pub report: LyapunovReport,
    pub sign: i8,
    /// `Λ(outer disc) + Σ Λ(exterior of hole j)`; each hole exterior
    /// contributes 0 for circles and ellipses.
    pub separated_sum: f64,
    pub decomposition_error: f64,
}

pub const SWEEP_CSV_HEADER: &str = "k,transform,domain_id,holes,curvature_term,cross_term,lambda,area,decay_rate,err_curv,err_cross,backend,nodes,seed,sign,separated_sum,decomposition_error";

impl SweepRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.k,
            csv_field(&self.transform),
            self.report.csv_row(),
            self.sign,
            fmt_f64(self.separated_sum),
            fmt_f64(self.decomposition_error)
        )
    }
}

/// Holes must be pairwise separated by more than ten times the largest hole
/// diameter.
pub fn validate_hole_layout(holes: &[HoleSpec]) -> Result<()> {
    let dmax = holes.iter().map(HoleSpec::diameter).fold(0.0, f64::max);
    for (i, h) in holes.iter().enumerate() {
        if !(h.diameter() > 0.0) {
            return Err(Error::Config(format!("hole {i} has no positive size")));
        }
        for (j, g) in holes.iter().enumerate().skip(i + 1) {
            let dc = ((h.center[0] - g.center[0]).powi(2) + (h.center[1] - g.center[1]).powi(2)).sqrt();
            let gap = dc - 0.5 * h.diameter() - 0.5 * g.diameter();
            if !(gap > 10.0 * dmax) {
                return Err(Error::Config(format!(
                    "holes {i} and {j} are {gap:.4} apart; the sweep needs gaps above {:.4} (10x the largest hole diameter)",
                    10.0 * dmax
                )));
            }
        }
    }
    Ok(())
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn hole_sweep(spec: &SweepSpec, backend: &BackendSettings, quad: &QuadConfig) -> Result<Vec<SweepRow>> {
    validate_hole_layout(&spec.holes)?;
    let mut rows = Vec::new();
    let mut base = None;
    let mut last_domain = None;
    for k in 0..=spec.holes.len() {
        let ds = DomainSpec::disc_with_holes(spec.radius, spec.holes[..k].to_vec()).with_n_quad(spec.n_quad);
        let domain = ds.build()?;
        let report = lambda(&backend.measure(&domain)?, quad, &ds.id())?;
        let separated = *base.get_or_insert(report.lambda);
        rows.push(SweepRow {
            k,
            transform: "identity".into(),
            sign: sign_of(report.lambda),
            separated_sum: separated,
            decomposition_error: report.lambda - separated,
            report,
        });
        last_domain = Some((ds, domain));
    }
    if let Some((ds, domain)) = last_domain {
        for &c in &spec.stretch {
            let stretched = domain.stretched(c)?;
            let id = format!("{}|stretch:{c}", ds.id());
            let report = lambda(&backend.measure(&stretched)?, quad, &id)?;
            rows.push(SweepRow {
                k: spec.holes.len(),
                transform: format!("stretch:{c}"),
                sign: sign_of(report.lambda),
                separated_sum: f64::NAN,
                decomposition_error: f64::NAN,
                report,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> QuadConfig {
        QuadConfig { nodes: 64, ..Default::default() }
    }

    #[test]
    fn disc_exterior_half_ranges() {
        // ∫₀^{π/2} and ∫_{π/2}^π of |log cos θ| / sin²(θ/2)
        let f = |t: f64| {
            if t < 1e-100 {
                return 2.0;
            }
            let num = if t < 1e-3 { t * t / 2.0 + t.powi(4) / 12.0 } else { -t.cos().abs().ln() };
            num / (0.5 * t).sin().powi(2)
        };
        let lo = tanh_sinh(f, 0.0, PI / 2.0, 1e-14).value;
        let hi = tanh_sinh(f, PI / 2.0, PI, 1e-14).value;
        assert!((lo - (PI + 2.0 * 2f64.ln())).abs() < 1e-10, "{lo}");
        assert!((hi - (PI - 2.0 * 2f64.ln())).abs() < 1e-10, "{hi}");
    }

    #[test]
    fn disc_lambda() {
        let d = Domain::disc(1.0, 512).unwrap();
        let hm = HarmonicMeasure::exact(&d).unwrap();
        let r = lambda(&hm, &quick(), "disc").unwrap();
        assert!((r.cross_term - TAU).abs() < 1e-8, "{}", r.cross_term);
        assert!((r.lambda - 2.0 * TAU).abs() < 1e-8);
        assert!((r.decay_rate.unwrap() + 2.0).abs() < 1e-8);
    }

    #[test]
    fn ellipse_pullback_inner_integral_is_turning_rate() {
        let a = 0.6;
        let p = EllipsePullback { map_a: a };
        for u in [0.0, 0.1, 0.3] {
            let x = p.point(0, u).unwrap();
            let q = inner_integral(&p, &x, &quick()).unwrap();
            // (1-a²)/|1 - a ζ²|² at ζ = e^{2πiu}
            let t = TAU * u;
            let want = (1.0 - a * a) / (1.0 - 2.0 * a * (2.0 * t).cos() + a * a);
            assert!((q.value - want).abs() < 1e-9, "{} vs {want}", q.value);
        }
    }

    #[test]
    fn sweep_validator_rejects_crowded_holes() {
        let holes = vec![HoleSpec::circle([0.1, 0.0], 0.05), HoleSpec::circle([-0.1, 0.0], 0.05)];
        assert!(validate_hole_layout(&holes).is_err());
    }

    #[test]
    fn csv_row_has_all_columns() {
        let d = Domain::disc_exterior(1.0, 128).unwrap();
        let hm = HarmonicMeasure::exact(&d).unwrap();
        let r = lambda(&hm, &quick(), "disc_exterior:1").unwrap();
        assert_eq!(r.csv_row().split(',').count(), CSV_HEADER.split(',').count());
        assert!(r.decay_rate.is_none());
    }
}
