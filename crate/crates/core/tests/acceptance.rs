//! End-to-end acceptance suite: one line per criterion, failures collected
//! and reported together.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbm_lyapunov::catalog::{DomainSpec, HoleSpec};
use rbm_lyapunov::coupling::*;
use rbm_lyapunov::geometry::{abs_log_cos, Domain, Vec2};
use rbm_lyapunov::harmonic::*;
use rbm_lyapunov::lyapunov::*;
use rbm_lyapunov::numerics::tanh_sinh;
use rbm_lyapunov::skorokhod::{skorokhod_transform, DrivingPath, HalfPlane};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, elapsed: Duration, budget: Duration, out: Outcome) -> bool {
    let ok = out.pass && elapsed < budget;
    let line = format!(
        "[{}] {id:>2} {name}: {} ({:.2?}, budget {:.0?})\n",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        elapsed,
        budget
    );
    // straight to the stream so the line survives output capture
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

fn timed<F: FnOnce() -> Outcome>(f: F) -> (Duration, Outcome) {
    let t = Instant::now();
    let out = f();
    (t.elapsed(), out)
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
        let d = s.with_n_quad(512).build().unwrap();
        let (v, _) = d.curvature_integral();
        worst = worst.max((v - TAU * d.euler_characteristic() as f64).abs());
    }
    Outcome { pass: worst < 1e-8, detail: format!("max |∫ν - 2πχ| = {worst:.2e}") }
}

fn disc_exterior() -> Outcome {
    let d = Domain::disc_exterior(1.0, 512).unwrap();
    let r = lambda(&HarmonicMeasure::exact(&d).unwrap(), &QuadConfig { nodes: 128, ..Default::default() }, "disc_exterior")
        .unwrap();
    let half = |a: f64, b: f64| {
        // |log cos t| / (4π sin²(t/2)) → 1/(2π) as t → 0
        let f = |t: f64| if t < 1e-12 { 1.0 / TAU } else { abs_log_cos(t) * density_exact_disc_exterior(t, 0.0).unwrap() };
        4.0 * PI * tanh_sinh(f, a, b, 1e-14).value
    };
    let lo = half(0.0, PI / 2.0);
    let hi = half(PI / 2.0, PI);
    let e_lo = (lo - (PI + 2.0 * 2f64.ln())).abs();
    let e_hi = (hi - (PI - 2.0 * 2f64.ln())).abs();
    let e_cross = (r.cross_term - TAU).abs();
    let pass = e_cross < 1e-6 && r.lambda.abs() < 1e-6 && e_lo < 1e-6 && e_hi < 1e-6;
    Outcome {
        pass,
        detail: format!(
            "cross = {:.10} (err {e_cross:.1e}), halves {lo:.6} / {hi:.6}, Λ = {:.1e}",
            r.cross_term, r.lambda
        ),
    }
}

fn ellipse_exterior() -> Outcome {
    let quad = QuadConfig { nodes: 256, ..Default::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for a in [0.2, 0.5, 0.8] {
        let c = ellipse_exterior_cross_term(a, &quad).unwrap();
        let d = Domain::ellipse_exterior(a, 512).unwrap();
        let lam = d.curvature_integral().0 + c.value;
        pass &= (c.value - TAU).abs() < 1e-6 && lam.abs() < 1e-6;
        parts.push(format!("a={a}: cross-2π = {:.1e}, Λ = {lam:.1e}", c.value - TAU));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn scaling() -> Outcome {
    let quad = QuadConfig { nodes: 128, ..Default::default() };
    let exact = BackendSettings { kind: BackendKind::Exact, ..Default::default() };
    let nystrom = BackendSettings::default();
    let disc = Domain::disc(1.0, 256).unwrap();
    let annulus = Domain::annulus(0.5, 1.0, 256).unwrap();
    let mut pass = true;
    let mut worst_exact = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for a in [0.5, 2.0] {
        let r = scaling_invariance_check(&disc, a, &exact, &quad).unwrap();
        worst_exact = worst_exact.max(r.difference.abs());
        pass &= r.difference.abs() < 1e-6;
        for d in [&disc, &annulus] {
            let r = scaling_invariance_check(d, a, &nystrom, &quad).unwrap();
            pass &= r.difference.abs() < r.combined_error;
            worst_ratio = worst_ratio.max(r.difference.abs() / r.combined_error);
        }
    }
    Outcome {
        pass,
        detail: format!("exact max |ΔΛ| = {worst_exact:.1e}; Nyström max |ΔΛ|/error = {worst_ratio:.2}"),
    }
}

fn backend_cross_validation() -> Outcome {
    let d = Domain::disc(1.0, 256).unwrap();
    let ny = HarmonicMeasure::nystrom(&d, &NystromConfig::default()).unwrap();
    let wos = HarmonicMeasure::wos(&d, &WosConfig { n: 100_000, seed: 2024, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_ny, mut worst_z) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let u: f64 = rng.random();
        let v = u + rng.random_range(0.1..0.9);
        let x = d.point(0, u).unwrap();
        let y = d.point(0, v).unwrap();
        let exact = density_exact_disc_interior(&x, &y).unwrap();
        worst_ny = worst_ny.max((ny.density(&x, &y).unwrap().value - exact).abs() / exact);
        let m = wos.density(&x, &y).unwrap();
        worst_z = worst_z.max((m.value - exact).abs() / m.error);
    }
    Outcome {
        pass: worst_ny < 1e-3 && worst_z < 3.0,
        detail: format!("Nyström max rel err {worst_ny:.1e}; walk-on-spheres max |z| = {worst_z:.2}"),
    }
}

fn annulus_hit_rate() -> Outcome {
    let d = Domain::annulus(0.5, 1.0, 256).unwrap();
    let cfg = WosConfig { n: 100_000, seed: 77, ..Default::default() };
    let hits = sample_hitting_points(&d, Vec2::new(0.75, 0.0), &cfg, 0).unwrap();
    let p = hits.iter().filter(|h| h.curve == 1).count() as f64 / hits.len() as f64;
    let want = (4.0f64 / 3.0).ln() / 2f64.ln();
    let se = (want * (1.0 - want) / hits.len() as f64).sqrt();
    Outcome { pass: (p - want).abs() < 3.0 * se, detail: format!("rate {p:.5} vs {want:.5}, z = {:.2}", (p - want) / se) }
}

fn half_plane_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut worst, mut min_gap) = (0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let n = rng.random_range(10..500);
        let inc: Vec<Vec2> =
            (0..n).map(|_| Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))).collect();
        let path = DrivingPath::from_increments(Vec2::new(rng.random_range(-1.0..1.0), 0.0), 0.01, &inc).unwrap();
        let r = skorokhod_transform(&HalfPlane, &path, 0.01).unwrap();
        let mut m = 0.0f64;
        for (k, g) in path.points().iter().enumerate() {
            m = m.min(g.y);
            worst = worst.max((r.beta[k].y - (g.y - m)).abs()).max((r.local_time[k] + m).abs());
        }
        min_gap = min_gap.min(r.variation_gamma - r.variation_beta);
    }
    Outcome { pass: worst <= 1e-12 && min_gap >= 0.0, detail: format!("max deviation {worst:.1e}, min gap {min_gap:.3e}") }
}

fn disc_config(t_max: f64, h: f64) -> SimConfig {
    SimConfig::new(h, t_max, [0.5, 0.0], [0.5, 0.01], 0)
}

fn decay_law() -> Outcome {
    let d = Domain::disc(1.0, 256).unwrap();
    let target = lambda(&HarmonicMeasure::exact(&d).unwrap(), &QuadConfig { nodes: 64, ..Default::default() }, "disc")
        .unwrap()
        .decay_rate
        .unwrap();
    let runs = simulate_replicas(&d, &disc_config(50.0, 1e-4), &[1, 2, 3, 4, 5]).unwrap();
    let fits: Vec<DecayFit> = runs.iter().map(|r| estimate_decay_rate(r, 0.1).unwrap()).collect();
    let mean = fits.iter().map(|f| f.slope).sum::<f64>() / fits.len() as f64;
    let within = fits.iter().all(|f| (f.slope - target).abs() < 3.0 * f.std_error);
    let slopes: Vec<String> = fits.iter().map(|f| format!("{:.3}±{:.3}", f.slope, f.std_error)).collect();
    Outcome {
        pass: (-2.3..=-1.7).contains(&mean) && within,
        detail: format!("target {target:.4}, mean slope {mean:.4}; per seed [{}]", slopes.join(", ")),
    }
}

fn ergodic_functionals() -> Outcome {
    let seeds: Vec<u64> = (1..=16).collect();
    let d = Domain::disc(1.0, 256).unwrap();
    let runs = simulate_replicas(&d, &disc_config(50.0, 1e-4), &seeds).unwrap();
    let n = runs.len() as f64;
    let lt = runs.iter().map(|r| boundary_functional_final(r, |_| 1.0)).sum::<f64>() / n;
    let nu = runs.iter().map(|r| boundary_functional_final(r, |c| c.curvature)).sum::<f64>() / n;
    let a = Domain::annulus(0.5, 1.0, 256).unwrap();
    let cfg = SimConfig::new(1e-4, 100.0, [0.75, 0.0], [0.75, 0.01], 0);
    let runs = simulate_replicas(&a, &cfg, &seeds).unwrap();
    let an = runs.iter().map(|r| boundary_functional_final(r, |c| c.curvature)).sum::<f64>() / n;
    let pass = (0.95..=1.05).contains(&lt) && (0.95..=1.05).contains(&nu) && (-0.05..=0.05).contains(&an);
    Outcome {
        pass,
        detail: format!("16-seed means: disc L/t = {lt:.4}, disc ∫ν dL/t = {nu:.4}, annulus ∫ν dL/t = {an:.4}"),
    }
}

fn excursion_statistic() -> Outcome {
    let d = Domain::disc(1.0, 256).unwrap();
    let quad = QuadConfig { nodes: 64, ..Default::default() };
    let cross = lambda(&HarmonicMeasure::exact(&d).unwrap(), &quad, "disc").unwrap().cross_term;
    let target = cross / (2.0 * d.area().unwrap());
    let h = 1e-6;
    let cfg = SimConfig { stride: 100_000, ..disc_config(200.0, h) };
    let runs = simulate_replicas(&d, &cfg, &[1, 2, 3, 4]).unwrap();
    let vals: Vec<f64> = runs.iter().map(|r| excursion_log_cos_final(r, 50.0 * h.sqrt())).collect();
    let pass = vals.iter().all(|v| ((v - target) / target).abs() < 0.15);
    let shown: Vec<String> = vals.iter().map(|v| format!("{v:.4}")).collect();
    Outcome { pass, detail: format!("target {target:.4}, d_exc = 0.05, per seed [{}]", shown.join(", ")) }
}

fn outputs_at(threads: usize) -> Vec<u8> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| {
            let mut out = Vec::new();
            let quad = QuadConfig { nodes: 64, mc_nodes: 8, ..Default::default() };
            let a = Domain::annulus(0.5, 1.0, 256).unwrap();
            writeln!(out, "{}", lambda(&BackendSettings::default().measure(&a).unwrap(), &quad, "annulus:0.5,1").unwrap().csv_row()).unwrap();
            let wos = BackendSettings { kind: BackendKind::Wos, wos: WosConfig { n: 2000, seed: 3, ..Default::default() }, ..Default::default() };
            let d = Domain::disc(1.0, 256).unwrap();
            writeln!(out, "{}", lambda(&wos.measure(&d).unwrap(), &quad, "disc").unwrap().csv_row()).unwrap();
            for r in simulate_replicas(&d, &disc_config(2.0, 1e-4), &[1, 2, 3]).unwrap() {
                for row in &r.series {
                    writeln!(out, "{}", row.csv_row()).unwrap();
                }
            }
            out
        })
}

fn determinism() -> Outcome {
    let one = outputs_at(1);
    let same = [4, 8].iter().all(|&t| outputs_at(t) == one);
    Outcome { pass: same, detail: format!("{} bytes compared at 1, 4 and 8 workers", one.len()) }
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("Gauss-Bonnet on the catalog", secs(1), gauss_bonnet),
        ("disc exterior cross term and half-range integrals", secs(1), disc_exterior),
        ("ellipse exterior cross term via the circle pullback", secs(10), ellipse_exterior),
        ("scaling invariance of Λ", secs(120), scaling),
        ("Nyström and walk-on-spheres against the disc kernel", secs(120), backend_cross_validation),
        ("annulus inner-circle hitting probability", secs(30), annulus_hit_rate),
        ("half-plane reflection closed form", secs(5), half_plane_oracle),
        ("decay rate on the unit disc", secs(600), decay_law),
        ("ergodic boundary functionals", secs(600), ergodic_functionals),
        ("excursion log-cos statistic", secs(600), excursion_statistic),
        ("determinism across worker counts", secs(600), determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let (elapsed, out) = timed(f);
        if !report(i + 1, name, elapsed, budget, out) {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
