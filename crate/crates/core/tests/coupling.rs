use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rbm_lyapunov::coupling::*;
use rbm_lyapunov::geometry::{Domain, Vec2};
use rbm_lyapunov::skorokhod::reflected_step;
use rbm_lyapunov::Error;

fn disc() -> Domain {
    Domain::disc(1.0, 256).unwrap()
}

#[test]
fn identical_starts_never_separate() {
    let cfg = SimConfig { stride: 1, ..SimConfig::new(1e-4, 2.0, [0.5, 0.0], [0.5, 0.0], 3) };
    let s = simulate_coupling(&disc(), &cfg).unwrap();
    assert!(s.degenerate);
    assert!(s.series.iter().all(|r| r.d == 0.0 && r.x == r.y));
    assert!(matches!(estimate_decay_rate(&s, 0.1), Err(Error::InsufficientData(_))));
}

#[test]
fn difference_is_frozen_between_contacts() {
    let d = Domain::ellipse(2.0, 1.0, 256).unwrap();
    let cfg = SimConfig { stride: 1, ..SimConfig::new(1e-4, 3.0, [1.5, 0.0], [1.5, 0.05], 11) };
    let s = simulate_coupling(&d, &cfg).unwrap();
    let mut frozen = 0;
    for w in s.series.windows(2) {
        if w[1].lx == w[0].lx && w[1].ly == w[0].ly {
            let a = w[0].y - w[0].x;
            let b = w[1].y - w[1].x;
            assert!((a - b).norm() <= 1e-14, "{a} vs {b} at t = {}", w[1].t);
            frozen += 1;
        }
    }
    assert!(frozen > 1000);
}

#[test]
fn distance_never_grows_in_convex_domains() {
    for d in [disc(), Domain::ellipse(2.0, 1.0, 256).unwrap()] {
        let cfg = SimConfig { stride: 1, ..SimConfig::new(1e-4, 20.0, [0.5, 0.0], [0.5, 0.01], 5) };
        let s = simulate_coupling(&d, &cfg).unwrap();
        assert!(s.linear_steps > 0, "run never reached the linearized regime");
        for w in s.series.windows(2) {
            assert!(w[1].d <= w[0].d + 1e-12, "d grew from {} to {} at t = {}", w[0].d, w[1].d, w[1].t);
            assert!(w[1].log_d <= w[0].log_d + 1e-9);
        }
    }
}

#[test]
fn matches_plain_projected_euler() {
    let d = disc();
    let cfg = SimConfig { stride: 1, ..SimConfig::new(1e-4, 1.0, [0.9, 0.0], [0.9, 0.05], 21) };
    let s = simulate_coupling(&d, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut x, mut y) = (Vec2::new(0.9, 0.0), Vec2::new(0.9, 0.05));
    for r in &s.series[1..] {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let db = Vec2::new(z1, z2) * cfg.h.sqrt();
        x = reflected_step(&d, x, db).unwrap().position;
        y = reflected_step(&d, y, db).unwrap().position;
        assert_eq!(r.x, x);
        assert_eq!(r.y, y);
    }
    assert_eq!(s.linear_steps, 0);
}

#[test]
fn replicas_are_independent_of_worker_count() {
    let cfg = SimConfig::new(1e-4, 2.0, [0.5, 0.0], [0.5, 0.01], 0);
    let seeds = [1, 2, 3, 4, 5, 6];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_replicas(&disc(), &cfg, &seeds).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(8));
    assert_ne!(one[0].series, one[1].series);
}

#[test]
fn noisy_exponential_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.1).unwrap();
    for _ in 0..20 {
        let pts: Vec<(f64, f64)> = (0..2000).map(|k| {
            let t = k as f64 * 0.01;
            (t, -2.0 * t + noise.sample(&mut rng))
        }).collect();
        let f = fit_log_series(&pts).unwrap();
        assert!((f.slope + 2.0).abs() < 3.0 * f.std_error, "{} ± {}", f.slope, f.std_error);
        assert!(f.std_error >= f.ols_std_error);
    }
}

#[test]
fn excursion_threshold_is_monotone() {
    let cfg = SimConfig { d_exc: Some(0.01), ..SimConfig::new(1e-5, 5.0, [0.5, 0.0], [0.5, 0.01], 2) };
    let s = simulate_coupling(&disc(), &cfg).unwrap();
    let mut prev = usize::MAX;
    for de in [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.5] {
        let n = excursion_count(&s, de);
        assert!(n <= prev);
        prev = n;
    }
    assert!(excursion_count(&s, 0.01) > 0);
    assert_eq!(excursion_log_cos_final(&s, 2.5), 0.0);
    assert!(excursion_log_cos(&s, 2.5).is_empty());
    for e in &s.excursions {
        assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&e.alpha));
        assert!(e.displacement > 0.01 && e.duration > 0.0);
    }
}

#[test]
fn inverse_local_time_conventions() {
    let cfg = SimConfig::new(1e-4, 5.0, [0.5, 0.0], [0.5, 0.01], 8);
    let s = simulate_coupling(&disc(), &cfg).unwrap();
    let first = s.contacts.first().unwrap().t;
    assert_eq!(inverse_local_time(&s, 0.0).unwrap(), first);
    let total = s.final_state.lx;
    let mut prev = 0.0;
    for f in [0.01, 0.1, 0.3, 0.6, 0.9, 1.0] {
        let t = inverse_local_time(&s, f * total).unwrap();
        assert!(t >= prev);
        prev = t;
    }
    assert!(matches!(inverse_local_time(&s, total * 1.5), Err(Error::Horizon(_))));
    let on = SimConfig::new(1e-4, 1.0, [1.0, 0.0], [0.5, 0.0], 8);
    let s = simulate_coupling(&disc(), &on).unwrap();
    assert!(s.start_on_boundary);
    assert_eq!(inverse_local_time(&s, 0.0).unwrap(), 0.0);
}

#[test]
fn functional_targets() {
    let t = boundary_functional_target(&disc(), |bp| bp.curvature).unwrap();
    assert!((t - 1.0).abs() < 1e-12);
    let a = Domain::annulus(0.5, 1.0, 256).unwrap();
    assert!(boundary_functional_target(&a, |bp| bp.curvature).unwrap().abs() < 1e-12);
    let l = boundary_functional_target(&a, |_| 1.0).unwrap();
    assert!((l - 2.0).abs() < 1e-12);
}

#[test]
fn running_functionals_agree_with_contacts() {
    let a = Domain::annulus(0.5, 1.0, 256).unwrap();
    let cfg = SimConfig::new(1e-4, 5.0, [0.75, 0.0], [0.75, 0.01], 4);
    let s = simulate_coupling(&a, &cfg).unwrap();
    let t = s.final_state.t;
    assert!((boundary_functional_final(&s, |_| 1.0) - s.final_state.lx / t).abs() < 1e-12);
    assert!((boundary_functional_final(&s, |c| c.curvature) - s.final_state.nu_lx / t).abs() < 1e-12);
    let running = boundary_functional(&s, |_| 1.0);
    assert_eq!(running.len(), s.contacts.len());
    let lx: Vec<f64> = s.series.iter().map(|r| r.lx).collect();
    assert!(lx.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn config_errors() {
    let d = disc();
    let big = SimConfig::new(0.01, 1.0, [0.0, 0.0], [0.1, 0.0], 1);
    assert!(matches!(simulate_coupling(&d, &big), Err(Error::Config(_))));
    let outside = SimConfig::new(1e-4, 1.0, [1.5, 0.0], [0.1, 0.0], 1);
    assert!(matches!(simulate_coupling(&d, &outside), Err(Error::Config(_))));
    let ext = Domain::disc_exterior(1.0, 256).unwrap();
    let cfg = SimConfig::new(1e-4, 1.0, [2.0, 0.0], [2.1, 0.0], 1);
    assert!(matches!(simulate_coupling(&ext, &cfg), Err(Error::Config(_))));
}
