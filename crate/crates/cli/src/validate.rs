//! Built-in check suite. The quick subset uses exact kernels and closed
//! forms only; the full suite adds the solver, Monte Carlo and simulation
//! checks.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbm_lyapunov::catalog::{DomainSpec, HoleSpec};
use rbm_lyapunov::coupling::{
    boundary_functional_final, estimate_decay_rate, excursion_log_cos_final, simulate_replicas, SimConfig,
};
use rbm_lyapunov::geometry::{abs_log_cos, BoundaryPoint, Domain, Vec2};
use rbm_lyapunov::harmonic::{
    density_exact_disc_exterior, density_exact_disc_interior, excursion_height_law_halfplane, half_plane_tail_mass,
    poisson_void_probability, sample_hitting_points, BackendKind, HarmonicMeasure, NystromConfig, WosConfig,
};
use rbm_lyapunov::lyapunov::{ellipse_exterior_cross_term, lambda, scaling_invariance_check, BackendSettings, QuadConfig};
use rbm_lyapunov::numerics::tanh_sinh;
use rbm_lyapunov::skorokhod::{skorokhod_transform, DrivingPath, HalfPlane};
use rbm_lyapunov::{Error, Result};
use serde::Serialize;

/// Seeds used by the randomized checks.
pub const SEEDS: &[u64] = &[1, 2, 3, 4, 5, 31, 77, 2024];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl Check {
    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{:e},{}", self.name, self.value, self.target, self.tolerance, self.pass)
    }
}

/// `(value, pass, detail)`
type Outcome = Result<(f64, bool, String)>;

struct Spec {
    name: &'static str,
    target: f64,
    tolerance: f64,
    quick: bool,
    run: fn() -> Outcome,
}

fn near(value: f64, target: f64, tol: f64) -> (f64, bool, String) {
    (value, (value - target).abs() < tol, format!("{value:.12} vs {target:.12}"))
}

fn gauss_bonnet() -> Outcome {
    let specs = [
        DomainSpec::disc(1.0),
        DomainSpec::ellipse(2.0, 1.0),
        DomainSpec::annulus(0.5, 1.0),
        DomainSpec::disc_with_holes(1.0, vec![HoleSpec::circle([-0.4, 0.0], 0.15), HoleSpec::circle([0.4, 0.1], 0.2)]),
        DomainSpec::disc_exterior(1.0),
    ];
    let mut worst = 0.0f64;
    for s in specs {
        let d = s.with_n_quad(512).build()?;
        worst = worst.max((d.curvature_integral().0 - TAU * d.euler_characteristic() as f64).abs());
    }
    Ok((worst, worst < 1e-8, format!("max |∫ν - 2πχ| = {worst:.2e} over 5 domains")))
}

fn disc_exterior_report() -> Result<rbm_lyapunov::lyapunov::LyapunovReport> {
    let d = Domain::disc_exterior(1.0, 512)?;
    lambda(&HarmonicMeasure::exact(&d)?, &QuadConfig { nodes: 128, ..Default::default() }, "disc_exterior")
}

fn disc_exterior_cross() -> Outcome {
    Ok(near(disc_exterior_report()?.cross_term, TAU, 1e-6))
}

fn disc_exterior_lambda() -> Outcome {
    Ok(near(disc_exterior_report()?.lambda, 0.0, 1e-6))
}

/// `4π ∫ |log cos t| ω(t) dt` over `[a, b]` for the exterior disc kernel.
fn half_range(a: f64, b: f64) -> f64 {
    let f = |t: f64| if t < 1e-12 { 1.0 / TAU } else { abs_log_cos(t) * density_exact_disc_exterior(t, 0.0).unwrap_or(f64::NAN) };
    4.0 * PI * tanh_sinh(f, a, b, 1e-14).value
}

fn half_range_near() -> Outcome {
    Ok(near(half_range(0.0, PI / 2.0), PI + 2.0 * 2f64.ln(), 1e-6))
}

fn half_range_far() -> Outcome {
    Ok(near(half_range(PI / 2.0, PI), PI - 2.0 * 2f64.ln(), 1e-6))
}

fn ellipse_exterior() -> Outcome {
    let quad = QuadConfig { nodes: 256, ..Default::default() };
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for a in [0.2, 0.5, 0.8] {
        let c = ellipse_exterior_cross_term(a, &quad)?;
        let lam = Domain::ellipse_exterior(a, 512)?.curvature_integral().0 + c.value;
        worst = worst.max((c.value - TAU).abs()).max(lam.abs());
        parts.push(format!("a={a}: cross-2π = {:.1e}, Λ = {lam:.1e}", c.value - TAU));
    }
    Ok((worst, worst < 1e-6, parts.join("; ")))
}

fn disc_lambda() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let r = lambda(&HarmonicMeasure::exact(&d)?, &QuadConfig { nodes: 64, ..Default::default() }, "disc")?;
    Ok(near(r.lambda, 4.0 * PI, 1e-6))
}

fn scaling_exact() -> Outcome {
    let quad = QuadConfig { nodes: 128, ..Default::default() };
    let exact = BackendSettings { kind: BackendKind::Exact, ..Default::default() };
    let d = Domain::disc(1.0, 256)?;
    let mut worst = 0.0f64;
    for a in [0.5, 2.0] {
        worst = worst.max(scaling_invariance_check(&d, a, &exact, &quad)?.difference.abs());
    }
    Ok((worst, worst < 1e-6, format!("max |Λ(aD) - Λ(D)| = {worst:.1e}")))
}

fn half_plane_identities() -> Outcome {
    let mut worst = (poisson_void_probability() - 0.5).abs();
    for a in [0.1, 1.0, 7.0] {
        worst = worst
            .max((half_plane_tail_mass(a)? - 2.0 / (PI * a)).abs())
            .max((excursion_height_law_halfplane(a)? - 1.0 / a).abs());
    }
    Ok((worst, worst < 1e-12, format!("void probability, tail mass and height law, max deviation {worst:.1e}")))
}

fn half_plane_reflection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut worst, mut min_gap) = (0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let n = rng.random_range(10..500);
        let inc: Vec<Vec2> =
            (0..n).map(|_| Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))).collect();
        let path = DrivingPath::from_increments(Vec2::new(rng.random_range(-1.0..1.0), 0.0), 0.01, &inc)?;
        let r = skorokhod_transform(&HalfPlane, &path, 0.01)?;
        let mut m = 0.0f64;
        for (k, g) in path.points().iter().enumerate() {
            m = m.min(g.y);
            worst = worst.max((r.beta[k].y - (g.y - m)).abs()).max((r.local_time[k] + m).abs());
        }
        min_gap = min_gap.min(r.variation_gamma - r.variation_beta);
    }
    Ok((worst, worst <= 1e-12 && min_gap >= 0.0, format!("100 polylines, max deviation {worst:.1e}, min gap {min_gap:.3e}")))
}

fn disc_kernel_pairs() -> Result<Vec<(BoundaryPoint, BoundaryPoint)>> {
    let d = Domain::disc(1.0, 256)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..20)
        .map(|_| {
            let u: f64 = rng.random();
            let v = u + rng.random_range(0.1..0.9);
            let (x, y) = (d.point(0, u)?, d.point(0, v)?);
            Ok((x, y))
        })
        .collect()
}

fn nystrom_disc_kernel() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let ny = HarmonicMeasure::nystrom(&d, &NystromConfig::default())?;
    let mut worst = 0.0f64;
    for (x, y) in disc_kernel_pairs()? {
        let exact = density_exact_disc_interior(&x, &y)?;
        worst = worst.max((ny.density(&x, &y)?.value - exact).abs() / exact);
    }
    Ok((worst, worst < 1e-3, format!("20 pairs, max relative error {worst:.1e}")))
}

fn wos_disc_kernel() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let wos = HarmonicMeasure::wos(&d, &WosConfig { n: 100_000, seed: 2024, ..Default::default() })?;
    let mut worst = 0.0f64;
    for (x, y) in disc_kernel_pairs()? {
        let exact = density_exact_disc_interior(&x, &y)?;
        let m = wos.density(&x, &y)?;
        worst = worst.max((m.value - exact).abs() / m.error);
    }
    Ok((worst, worst < 3.0, format!("20 pairs at N = 1e5, max |z| = {worst:.2}")))
}

fn annulus_hit_rate() -> Outcome {
    let d = Domain::annulus(0.5, 1.0, 256)?;
    let hits = sample_hitting_points(&d, Vec2::new(0.75, 0.0), &WosConfig { n: 100_000, seed: 77, ..Default::default() }, 0)?;
    let p = hits.iter().filter(|h| h.curve == 1).count() as f64 / hits.len() as f64;
    let want = (4.0f64 / 3.0).ln() / 2f64.ln();
    let se = (want * (1.0 - want) / hits.len() as f64).sqrt();
    Ok((p, (p - want).abs() < 3.0 * se, format!("rate {p:.5} vs {want:.5}, z = {:.2}", (p - want) / se)))
}

fn scaling_nystrom() -> Outcome {
    let quad = QuadConfig { nodes: 128, ..Default::default() };
    let mut worst = 0.0f64;
    for d in [Domain::disc(1.0, 256)?, Domain::annulus(0.5, 1.0, 256)?] {
        for a in [0.5, 2.0] {
            let r = scaling_invariance_check(&d, a, &BackendSettings::default(), &quad)?;
            worst = worst.max(r.difference.abs() / r.combined_error);
        }
    }
    Ok((worst, worst < 1.0, format!("max |ΔΛ| / error estimate = {worst:.2}")))
}

fn disc_start(h: f64, t_max: f64) -> SimConfig {
    SimConfig::new(h, t_max, [0.5, 0.0], [0.5, 0.01], 0)
}

fn decay_rate() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let runs = simulate_replicas(&d, &disc_start(1e-4, 50.0), &[1, 2, 3, 4, 5])?;
    let fits = runs.iter().map(|r| estimate_decay_rate(r, 0.1)).collect::<Result<Vec<_>>>()?;
    let mean = fits.iter().map(|f| f.slope).sum::<f64>() / fits.len() as f64;
    let within = fits.iter().all(|f| (f.slope + 2.0).abs() < 3.0 * f.std_error);
    let shown: Vec<String> = fits.iter().map(|f| format!("{:.3}±{:.3}", f.slope, f.std_error)).collect();
    Ok((mean, (-2.3..=-1.7).contains(&mean) && within, format!("5 seeds [{}]", shown.join(", "))))
}

const ERGODIC_SEEDS: std::ops::RangeInclusive<u64> = 1..=16;

fn disc_boundary_functionals() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let seeds: Vec<u64> = ERGODIC_SEEDS.collect();
    let runs = simulate_replicas(&d, &disc_start(1e-4, 50.0), &seeds)?;
    let n = runs.len() as f64;
    let lt = runs.iter().map(|r| boundary_functional_final(r, |_| 1.0)).sum::<f64>() / n;
    let nu = runs.iter().map(|r| boundary_functional_final(r, |c| c.curvature)).sum::<f64>() / n;
    let worst = (lt - 1.0).abs().max((nu - 1.0).abs());
    Ok((worst, worst <= 0.05, format!("16-seed means at T = 50: L/t = {lt:.4}, ∫ν dL/t = {nu:.4}")))
}

fn annulus_curvature_functional() -> Outcome {
    let a = Domain::annulus(0.5, 1.0, 256)?;
    let seeds: Vec<u64> = ERGODIC_SEEDS.collect();
    let runs = simulate_replicas(&a, &SimConfig::new(1e-4, 100.0, [0.75, 0.0], [0.75, 0.01], 0), &seeds)?;
    let v = runs.iter().map(|r| boundary_functional_final(r, |c| c.curvature)).sum::<f64>() / runs.len() as f64;
    Ok((v, (-0.05..=0.05).contains(&v), format!("16-seed mean ∫ν dL/t = {v:.4} at T = 100")))
}

fn excursion_statistic() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let h = 1e-6;
    let cfg = SimConfig { stride: 100_000, ..disc_start(h, 200.0) };
    let runs = simulate_replicas(&d, &cfg, &[1, 2, 3, 4])?;
    let vals: Vec<f64> = runs.iter().map(|r| excursion_log_cos_final(r, 50.0 * h.sqrt())).collect();
    let worst = vals.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let shown: Vec<String> = vals.iter().map(|v| format!("{v:.4}")).collect();
    Ok((worst, worst < 0.15, format!("4 seeds at h = 1e-6, T = 200 [{}]", shown.join(", "))))
}

fn determinism() -> Outcome {
    let d = Domain::disc(1.0, 256)?;
    let at = |threads: usize| -> Result<Vec<String>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Numerical(e.to_string()))?;
        pool.install(|| {
            let runs = simulate_replicas(&d, &disc_start(1e-4, 2.0), &[1, 2, 3])?;
            Ok(runs.iter().flat_map(|r| r.series.iter().map(|s| s.csv_row())).collect())
        })
    };
    let one = at(1)?;
    let same = [4, 8].into_iter().map(at).collect::<Result<Vec<_>>>()?.iter().all(|o| *o == one);
    Ok((f64::from(u8::from(same)), same, format!("{} rows compared at 1, 4 and 8 workers", one.len())))
}

fn specs() -> Vec<Spec> {
    let s = |name, target, tolerance, quick, run| Spec { name, target, tolerance, quick, run };
    vec![
        s("gauss_bonnet", 0.0, 1e-8, true, gauss_bonnet as fn() -> Outcome),
        s("disc_exterior_cross_term", TAU, 1e-6, true, disc_exterior_cross),
        s("disc_exterior_lambda", 0.0, 1e-6, true, disc_exterior_lambda),
        s("disc_exterior_near_half", PI + 2.0 * 2f64.ln(), 1e-6, true, half_range_near),
        s("disc_exterior_far_half", PI - 2.0 * 2f64.ln(), 1e-6, true, half_range_far),
        s("ellipse_exterior_pullback", 0.0, 1e-6, true, ellipse_exterior),
        s("disc_lambda", 4.0 * PI, 1e-6, true, disc_lambda),
        s("scaling_exact", 0.0, 1e-6, true, scaling_exact),
        s("half_plane_identities", 0.0, 1e-12, true, half_plane_identities),
        s("half_plane_reflection", 0.0, 1e-12, true, half_plane_reflection),
        s("nystrom_disc_kernel", 0.0, 1e-3, false, nystrom_disc_kernel),
        s("wos_disc_kernel", 0.0, 3.0, false, wos_disc_kernel),
        s("annulus_hit_rate", (4.0f64 / 3.0).ln() / 2f64.ln(), 3.0, false, annulus_hit_rate),
        s("scaling_nystrom", 0.0, 1.0, false, scaling_nystrom),
        s("disc_decay_rate", -2.0, 0.3, false, decay_rate),
        s("disc_boundary_functionals", 0.0, 0.05, false, disc_boundary_functionals),
        s("annulus_curvature_functional", 0.0, 0.05, false, annulus_curvature_functional),
        s("disc_excursion_statistic", 0.0, 0.15, false, excursion_statistic),
        s("determinism", 1.0, 0.0, false, determinism),
    ]
}

/// Names of the checks in the chosen suite, in run order.
pub fn check_names(quick: bool) -> Vec<&'static str> {
    specs().into_iter().filter(|s| s.quick || !quick).map(|s| s.name).collect()
}

/// Run the suite; `report` sees each check as soon as it finishes.
pub fn run_suite(quick: bool, mut report: impl FnMut(&Check)) -> Vec<Check> {
    let mut out = Vec::new();
    for spec in specs().into_iter().filter(|s| s.quick || !quick) {
        let clock = Instant::now();
        let (value, pass, detail) = match (spec.run)() {
            Ok(v) => v,
            Err(e) => (f64::NAN, false, format!("error: {e}")),
        };
        let c = Check {
            name: spec.name,
            value,
            target: spec.target,
            tolerance: spec.tolerance,
            pass,
            detail,
            seconds: clock.elapsed().as_secs_f64(),
        };
        report(&c);
        out.push(c);
    }
    out
}
