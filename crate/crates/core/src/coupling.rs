//! Synchronous coupling of two reflected Brownian motions driven by the same
//! Gaussian increments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{abs_log_cos_normals, Domain, Vec2};
use crate::numerics::{linear_fit, pairwise_sum};
use crate::skorokhod::{project_step, Contact, Region};
use crate::{Error, Result};

/// Below this distance (relative to the diameter) `Y - X` is propagated by
/// the derivative of the projection instead of by differencing positions.
pub const LINEAR_THRESHOLD: f64 = 1e-7;

/// Degenerate runs and fits shorter than this are rejected.
pub const MIN_FIT_POINTS: usize = 100;

const BATCHES: usize = 10;
const RESCALE: f64 = 1e150;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub x0: [f64; 2],
    pub y0: [f64; 2],
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Excursion threshold; `None` means `50 √h`.
    #[serde(default)]
    pub d_exc: Option<f64>,
}

fn default_stride() -> usize {
    100
}

impl SimConfig {
    pub fn new(h: f64, t_max: f64, x0: [f64; 2], y0: [f64; 2], seed: u64) -> Self {
        Self { h, t_max, x0, y0, seed, stride: default_stride(), d_exc: None }
    }

    pub fn d_exc(&self) -> f64 {
        self.d_exc.unwrap_or(50.0 * self.h.sqrt())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.h).round() as usize
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite() && self.t_max.is_finite() && self.h <= self.t_max) {
            return Err(Error::Config(format!("need 0 < h <= T, got h = {}, T = {}", self.h, self.t_max)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        if !(self.d_exc() > 0.0) {
            return Err(Error::Config(format!("d_exc must be positive, got {}", self.d_exc())));
        }
        if !domain.is_bounded() {
            return Err(Error::Config("coupling simulation needs a bounded domain".into()));
        }
        let limit = 0.05 * domain.feature_size();
        if self.h.sqrt() >= limit {
            return Err(Error::Config(format!(
                "sqrt(h) = {:e} must be below 0.05 x feature size = {limit:e}",
                self.h.sqrt()
            )));
        }
        for (name, p) in [("x0", self.x0), ("y0", self.y0)] {
            let c = domain.locate(Vec2::new(p[0], p[1]))?;
            if c.signed_distance < -domain.boundary_tolerance() {
                return Err(Error::Config(format!("{name} = ({}, {}) is outside the domain", p[0], p[1])));
            }
        }
        Ok(())
    }
}

/// One thinned sample of the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    /// `d(X_t, Y_t)`; may underflow to zero where `log_d` does not.
    pub d: f64,
    pub log_d: f64,
    pub lx: f64,
    pub ly: f64,
    /// `∫ ν(X_s) dL^X_s`.
    pub nu_lx: f64,
    /// `Σ |log cos α|` over the excursions completed so far.
    pub excursion_sum: f64,
    pub x: Vec2,
    pub y: Vec2,
}

/// A boundary contact of `X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContactRecord {
    pub t: f64,
    pub curve: usize,
    pub u: f64,
    pub position: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    pub local_time: f64,
    /// `L^X` after this contact.
    pub cumulative: f64,
}

/// Excursion of `X` between two contacts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Excursion {
    pub start_time: f64,
    pub duration: f64,
    pub start: Vec2,
    pub end: Vec2,
    pub alpha: f64,
    pub abs_log_cos: f64,
    /// Largest distance from `start` reached during the excursion.
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingStats {
    pub config: SimConfig,
    pub series: Vec<SeriesRow>,
    pub contacts: Vec<ContactRecord>,
    /// Excursions with displacement above the configured `d_exc`.
    pub excursions: Vec<Excursion>,
    /// `x0 == y0`: the distance is identically zero.
    pub degenerate: bool,
    pub steps: usize,
    /// Steps whose increment was split to respect the reflector's size guard.
    pub split_steps: usize,
    /// Steps taken with the linearized difference update.
    pub linear_steps: usize,
    pub start_on_boundary: bool,
    pub final_state: SeriesRow,
}

/// Lower bound on the distance to the boundary, refreshed only when a step
/// could reach it.
struct Walker {
    x: Vec2,
    clearance: f64,
}

impl Walker {
    fn new<R: Region + ?Sized>(region: &R, x: Vec2) -> Result<Self> {
        let c = region.locate(x)?;
        Ok(Self { x: if c.signed_distance < 0.0 { c.position } else { x }, clearance: c.signed_distance.max(0.0) })
    }

    fn step<R: Region + ?Sized>(&mut self, region: &R, db: Vec2) -> Result<Option<(Contact, f64)>> {
        let len = db.norm();
        if len < self.clearance {
            self.x += db;
            self.clearance = (self.clearance - len) * (1.0 - 1e-12);
            return Ok(None);
        }
        let s = project_step(region, self.x, db)?;
        self.x = s.position;
        match s.contact {
            Some(c) => {
                self.clearance = 0.0;
                Ok(Some((c, s.local_time)))
            }
            None => {
                self.clearance = s.clearance * (1.0 - 1e-12);
                Ok(None)
            }
        }
    }
}

/// `Y - X = delta · e^{log_scale}`.
struct Difference {
    delta: Vec2,
    log_scale: f64,
}

impl Difference {
    fn log_norm(&self) -> f64 {
        self.delta.norm().ln() + self.log_scale
    }

    fn vector(&self) -> Vec2 {
        self.delta * self.log_scale.exp()
    }

    fn renormalize(&mut self) {
        let n = self.delta.norm();
        if n > 0.0 && n < 1.0 / RESCALE {
            self.delta *= RESCALE;
            self.log_scale -= RESCALE.ln();
        }
    }
}

/// Run the coupled pair for `config.steps()` steps.
pub fn simulate_coupling(domain: &Domain, config: &SimConfig) -> Result<CouplingStats> {
    config.validate(domain)?;
    let steps = config.steps();
    let h = config.h;
    let sqrt_h = h.sqrt();
    let d_exc = config.d_exc();
    let guard = 0.1 * domain.feature_size();
    let lin_threshold = LINEAR_THRESHOLD * domain.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let x0 = Vec2::new(config.x0[0], config.x0[1]);
    let y0 = Vec2::new(config.y0[0], config.y0[1]);
    let mut wx = Walker::new(domain, x0)?;
    let mut wy = Walker::new(domain, y0)?;
    let start_on_boundary = wx.clearance <= domain.boundary_tolerance();
    let degenerate = x0 == y0;
    let mut diff = Difference { delta: wy.x - wx.x, log_scale: 0.0 };
    let mut linear = false;

    let (mut lx, mut ly, mut nu_lx, mut exc_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut series = Vec::with_capacity(steps / config.stride + 2);
    let mut contacts = Vec::new();
    let mut excursions = Vec::new();
    let (mut split_steps, mut linear_steps) = (0, 0);
    // excursion state: last contact (time, position, normal) and max displacement since
    let mut last: Option<(f64, Vec2, Vec2)> = None;
    let mut max_disp = 0.0f64;

    let row = |t: f64, wx: &Walker, wy: &Walker, linear: bool, diff: &Difference, acc: [f64; 4]| {
        let v = diff.vector();
        let y = if linear || degenerate { wx.x + v } else { wy.x };
        let [lx, ly, nu_lx, excursion_sum] = acc;
        SeriesRow { t, d: v.norm(), log_d: diff.log_norm(), lx, ly, nu_lx, excursion_sum, x: wx.x, y }
    };
    series.push(row(0.0, &wx, &wy, linear, &diff, [lx, ly, nu_lx, exc_sum]));

    for k in 0..steps {
        let t = (k + 1) as f64 * h;
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let db = Vec2::new(z1, z2) * sqrt_h;
        let m = if db.norm() >= guard { (db.norm() / guard).floor() as usize + 1 } else { 1 };
        if m > 1 {
            split_steps += 1;
        }
        let sub = db / m as f64;
        for _ in 0..m {
            let dist = if degenerate { 0.0 } else if linear { diff.log_norm().exp() } else { diff.delta.norm() };
            if !linear && !degenerate && dist < lin_threshold {
                linear = true;
                diff.delta = diff.vector();
                diff.log_scale = 0.0;
            } else if linear && dist > 10.0 * lin_threshold {
                linear = false;
                let v = diff.vector();
                diff = Difference { delta: v, log_scale: 0.0 };
                wy = Walker::new(domain, wx.x + v)?;
            }
            let cx = wx.step(domain, sub).map_err(|e| with_step(e, k))?;
            if linear {
                linear_steps += 1;
                if let Some((c, s)) = cx {
                    // derivative of the nearest-point map at depth s
                    let tangent = Vec2::new(-c.normal.y, c.normal.x);
                    let dv = diff.vector();
                    ly += (s - c.normal.dot(&dv)).max(0.0);
                    diff.delta = tangent * (tangent.dot(&diff.delta) / (1.0 + c.curvature * s));
                    diff.renormalize();
                }
            } else if !degenerate {
                let cy = wy.step(domain, sub).map_err(|e| with_step(e, k))?;
                if let Some((_, s)) = cy {
                    ly += s;
                }
                if cx.is_some() || cy.is_some() {
                    diff.delta = wy.x - wx.x;
                }
            } else if let Some((_, s)) = cx {
                ly += s;
            }
            max_disp = match last {
                Some((_, p, _)) => max_disp.max((wx.x - p).norm()),
                None => 0.0,
            };
            if let Some((c, s)) = cx {
                lx += s;
                nu_lx += c.curvature * s;
                contacts.push(ContactRecord {
                    t,
                    curve: c.curve,
                    u: c.u,
                    position: c.position,
                    normal: c.normal,
                    curvature: c.curvature,
                    local_time: s,
                    cumulative: lx,
                });
                if let Some((t0, p0, n0)) = last {
                    if max_disp > d_exc {
                        let v = abs_log_cos_normals(n0, c.normal);
                        exc_sum += v;
                        excursions.push(Excursion {
                            start_time: t0,
                            duration: t - t0,
                            start: p0,
                            end: c.position,
                            alpha: crate::geometry::alpha_from_normals(n0, c.normal),
                            abs_log_cos: v,
                            displacement: max_disp,
                        });
                    }
                }
                last = Some((t, c.position, c.normal));
                max_disp = 0.0;
            }
        }
        if degenerate {
            diff.delta = Vec2::zeros();
        }
        if (k + 1) % config.stride == 0 || k + 1 == steps {
            series.push(row(t, &wx, &wy, linear, &diff, [lx, ly, nu_lx, exc_sum]));
        }
    }
    let final_state = *series.last().expect("series has the initial row");
    Ok(CouplingStats {
        config: config.clone(),
        series,
        contacts,
        excursions,
        degenerate,
        steps,
        split_steps,
        linear_steps,
        start_on_boundary,
        final_state,
    })
}

fn with_step(e: Error, k: usize) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("step {k}: {m}")),
        Error::StepTooLarge(m) => Error::StepTooLarge(format!("step {k}: {m}")),
        e => e,
    }
}

/// Independent runs, one per seed, returned in seed order.
pub fn simulate_replicas(domain: &Domain, config: &SimConfig, seeds: &[u64]) -> Result<Vec<CouplingStats>> {
    seeds
        .par_iter()
        .map(|&seed| simulate_coupling(domain, &SimConfig { seed, ..config.clone() }))
        .collect()
}

/// Fitted decay slope of `log d` against `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    /// Larger of the OLS and batch-means standard errors.
    pub std_error: f64,
    pub ols_std_error: f64,
    pub batch_std_error: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of `log d` on the rows after the burn-in fraction.
pub fn estimate_decay_rate(stats: &CouplingStats, burn_in: f64) -> Result<DecayFit> {
    if stats.degenerate {
        return Err(Error::InsufficientData("x0 == y0: distance is identically zero, slope undefined".into()));
    }
    let t_end = stats.series.last().map_or(0.0, |r| r.t);
    let pts: Vec<(f64, f64)> = stats
        .series
        .iter()
        .filter(|r| r.t >= burn_in * t_end)
        .take_while(|r| r.log_d.is_finite() && r.log_d > (1e-300f64).ln())
        .map(|r| (r.t, r.log_d))
        .collect();
    fit_log_series(&pts)
}

/// OLS fit with a batch-means error bar: the window is cut into ten blocks,
/// each block gets its own slope, and the spread of those slopes estimates
/// the error of their mean.
pub fn fit_log_series(pts: &[(f64, f64)]) -> Result<DecayFit> {
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "fit window has {} points, need at least {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let fit = linear_fit(&t, &y).ok_or_else(|| Error::InsufficientData("degenerate fit window".into()))?;
    let size = pts.len() / BATCHES;
    let slopes: Vec<f64> = (0..BATCHES)
        .filter_map(|b| {
            let r = b * size..(b + 1) * size;
            linear_fit(&t[r.clone()], &y[r]).map(|f| f.slope)
        })
        .collect();
    let nb = slopes.len() as f64;
    let mean = pairwise_sum(&slopes) / nb;
    let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nb - 1.0);
    let batch = (var / nb).sqrt();
    Ok(DecayFit {
        slope: fit.slope,
        std_error: fit.slope_stderr.max(batch),
        ols_std_error: fit.slope_stderr,
        batch_std_error: batch,
        intercept: fit.intercept,
        points: pts.len(),
    })
}

/// Running `(1/t) ∫_0^t φ(X_s) dL^X_s` sampled at every contact.
pub fn boundary_functional<F: Fn(&ContactRecord) -> f64>(stats: &CouplingStats, phi: F) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    stats
        .contacts
        .iter()
        .map(|c| {
            acc += phi(c) * c.local_time;
            (c.t, acc / c.t)
        })
        .collect()
}

/// `(1/T) ∫_0^T φ(X_s) dL^X_s` at the end of the run.
pub fn boundary_functional_final<F: Fn(&ContactRecord) -> f64>(stats: &CouplingStats, phi: F) -> f64 {
    let t_end = stats.final_state.t;
    let vals: Vec<f64> = stats.contacts.iter().map(|c| phi(c) * c.local_time).collect();
    if t_end > 0.0 {
        pairwise_sum(&vals) / t_end
    } else {
        0.0
    }
}

/// Ergodic limit `(1/(2|D|)) ∫_{∂D} φ dy` by the boundary trapezoid rule.
pub fn boundary_functional_target<F: Fn(&crate::geometry::BoundaryPoint) -> f64>(domain: &Domain, phi: F) -> Result<f64> {
    let mut total = 0.0;
    for (k, c) in domain.curves().iter().enumerate() {
        let n = c.n_quad;
        let mut vals = Vec::with_capacity(n);
        for u in c.nodes(n) {
            let bp = c.point(k, u)?;
            vals.push(phi(&bp) * bp.speed / n as f64);
        }
        total += pairwise_sum(&vals);
    }
    Ok(total / (2.0 * domain.area()?))
}

/// Running excursion statistic `(1/u) Σ |log cos α(e_s)|` over excursions
/// displaced more than `d_exc`, sampled at excursion ends. Thresholds below
/// the one the run recorded with act as the recorded one.
pub fn excursion_log_cos(stats: &CouplingStats, d_exc: f64) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    stats
        .excursions
        .iter()
        .filter(|e| e.displacement > d_exc)
        .map(|e| {
            acc += e.abs_log_cos;
            let t = e.start_time + e.duration;
            (t, acc / t)
        })
        .collect()
}

/// Final value of the excursion statistic, divided by the full horizon.
pub fn excursion_log_cos_final(stats: &CouplingStats, d_exc: f64) -> f64 {
    let vals: Vec<f64> = stats.excursions.iter().filter(|e| e.displacement > d_exc).map(|e| e.abs_log_cos).collect();
    let t = stats.final_state.t;
    if vals.is_empty() || t <= 0.0 {
        0.0
    } else {
        pairwise_sum(&vals) / t
    }
}

/// Number of recorded excursions above the threshold.
pub fn excursion_count(stats: &CouplingStats, d_exc: f64) -> usize {
    stats.excursions.iter().filter(|e| e.displacement > d_exc).count()
}

/// `σ^X(ℓ)`: first step time at which `L^X` reaches `level`.
pub fn inverse_local_time(stats: &CouplingStats, level: f64) -> Result<f64> {
    if !(level >= 0.0) {
        return Err(Error::Config(format!("local-time level must be non-negative, got {level}")));
    }
    if level == 0.0 && stats.start_on_boundary {
        return Ok(0.0);
    }
    let hit = if level == 0.0 {
        stats.contacts.first()
    } else {
        stats.contacts.iter().find(|c| c.cumulative >= level)
    };
    hit.map(|c| c.t).ok_or_else(|| {
        Error::Horizon(format!("L^X = {} at the horizon never reaches {level}", stats.final_state.lx))
    })
}

pub const SERIES_CSV_HEADER: &str = "t,d,log_d,LX,LY,LX_over_t,nu_LX_over_t,excursion_over_t";

impl SeriesRow {
    pub fn csv_row(&self) -> String {
        let per_t = |v: f64| if self.t > 0.0 { v / self.t } else { 0.0 };
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.d,
            self.log_d,
            self.lx,
            self.ly,
            per_t(self.lx),
            per_t(self.nu_lx),
            per_t(self.excursion_sum)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_has_exact_slope() {
        let pts: Vec<(f64, f64)> = (0..500).map(|k| (k as f64 * 0.01, -2.0 * k as f64 * 0.01)).collect();
        let f = fit_log_series(&pts).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_windows_are_rejected() {
        let pts: Vec<(f64, f64)> = (0..50).map(|k| (k as f64, 0.0)).collect();
        assert!(matches!(fit_log_series(&pts), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn disc_local_time_target_is_one() {
        let d = Domain::disc(1.0, 256).unwrap();
        let t = boundary_functional_target(&d, |_| 1.0).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }
}
