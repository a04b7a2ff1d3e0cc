use std::f64::consts::PI;

use rbm_lyapunov::geometry::{Domain, Vec2};
use rbm_lyapunov::harmonic::*;
use rbm_lyapunov::numerics::tanh_sinh;

#[test]
fn half_plane_identities() {
    assert!((poisson_void_probability() - 0.5).abs() < 1e-14);
    for a in [0.1, 1.0, 7.0] {
        assert_eq!(excursion_height_law_halfplane(a).unwrap(), 1.0 / a);
        // tail of 1/(π y²) by substitution y = a/s
        let inner = tanh_sinh(|_s| 1.0 / (PI * a), 0.0, 1.0, 1e-15).value;
        assert!((2.0 * inner - half_plane_tail_mass(a).unwrap()).abs() < 1e-13);
        assert!((density_half_plane(a).unwrap() * PI * a * a - 1.0).abs() < 1e-15);
    }
    assert!(density_half_plane(0.0).is_err());
}

#[test]
fn disc_exterior_kernel_normalization() {
    // π d² ω → 1 with d = 2 sin(Δθ/2) on the unit circle
    for dt in [1e-3, 0.5, 2.0] {
        let w = density_exact_disc_exterior(0.3 + dt, 0.3).unwrap();
        let d = 2.0 * (0.5 * dt).sin();
        assert!((PI * d * d * w - 1.0).abs() < 1e-12);
    }
}

#[test]
fn annulus_inner_hit_rate() {
    let d = Domain::annulus(0.5, 1.0, 256).unwrap();
    let cfg = WosConfig { n: 20_000, seed: 9, ..Default::default() };
    let hits = sample_hitting_points(&d, Vec2::new(0.75, 0.0), &cfg, 0).unwrap();
    let inner = hits.iter().filter(|p| p.curve == 1).count() as f64 / hits.len() as f64;
    let want = (4.0f64 / 3.0).ln() / 2f64.ln();
    let se = (want * (1.0 - want) / hits.len() as f64).sqrt();
    assert!((inner - want).abs() < 3.0 * se, "{inner} vs {want}");
}

#[test]
fn nystrom_disc_interior_pairs() {
    let d = Domain::disc(1.0, 256).unwrap();
    let hm = HarmonicMeasure::nystrom(&d, &NystromConfig::default()).unwrap();
    for k in 0..10 {
        let x = d.point(0, 0.013 + 0.1 * k as f64).unwrap();
        let y = d.point(0, 0.41 + 0.07 * k as f64).unwrap();
        let est = hm.density(&x, &y).unwrap();
        let exact = density_exact_disc_interior(&x, &y).unwrap();
        assert!((est.value - exact).abs() < 1e-3 * exact.max(1.0), "{} vs {exact}", est.value);
    }
}

#[test]
fn wos_rejects_exterior_and_outside_starts() {
    let ext = Domain::disc_exterior(1.0, 256).unwrap();
    assert!(sample_hitting_points(&ext, Vec2::new(2.0, 0.0), &WosConfig::default(), 0).is_err());
    let d = Domain::disc(1.0, 256).unwrap();
    assert!(sample_hitting_points(&d, Vec2::new(2.0, 0.0), &WosConfig::default(), 0).is_err());
}
