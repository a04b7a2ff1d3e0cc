use std::f64::consts::TAU;

use rbm_lyapunov::catalog::{DomainSpec, HoleSpec};
use rbm_lyapunov::geometry::Domain;
use rbm_lyapunov::harmonic::{BackendKind, HarmonicMeasure};
use rbm_lyapunov::lyapunov::*;
use rbm_lyapunov::Error;

fn quad(nodes: usize) -> QuadConfig {
    QuadConfig { nodes, ..Default::default() }
}

#[test]
fn exterior_kernels_give_zero() {
    let d = Domain::disc_exterior(1.0, 256).unwrap();
    let r = lambda(&HarmonicMeasure::exact(&d).unwrap(), &quad(128), "disc_exterior").unwrap();
    assert!(r.lambda.abs() < 1e-8, "{}", r.lambda);
    assert_eq!(r.area, None);
    assert!(r.csv_row().contains(",inf,"));
    for a in [0.3, 0.7] {
        let d = Domain::ellipse_exterior(a, 256).unwrap();
        let r = lambda(&HarmonicMeasure::exact(&d).unwrap(), &quad(256), "ellipse_exterior").unwrap();
        assert!(r.lambda.abs() < 1e-6, "a = {a}: {}", r.lambda);
        let pull = ellipse_exterior_cross_term(a, &quad(256)).unwrap();
        assert!((pull.value - r.cross_term).abs() < 1e-6);
    }
}

#[test]
fn annulus_nystrom() {
    let d = Domain::annulus(0.5, 1.0, 256).unwrap();
    let settings = BackendSettings::default();
    let r = lambda(&settings.measure(&d).unwrap(), &quad(128), "annulus:0.5,1").unwrap();
    assert!(r.curvature_term.abs() < 1e-10);
    assert!(r.cross_term > 0.0);
    assert!(r.err_cross < 1e-4);
    let fine = lambda(&settings.measure(&d).unwrap(), &quad(256), "annulus:0.5,1").unwrap();
    assert!((fine.cross_term - r.cross_term).abs() < r.err_cross.max(1e-8) * 10.0);
    assert_eq!(r.backend, BackendKind::Nystrom);
}

#[test]
fn scaling_exact_and_nystrom() {
    let settings = BackendSettings { kind: BackendKind::Exact, ..Default::default() };
    let d = Domain::disc(1.0, 256).unwrap();
    for s in [0.5, 2.0] {
        let r = scaling_invariance_check(&d, s, &settings, &quad(64)).unwrap();
        assert!(r.difference.abs() < 1e-6);
        assert!((r.decay_rate_scaled.unwrap() * s * s - r.decay_rate.unwrap()).abs() < 1e-9);
    }
    let a = Domain::annulus(0.5, 1.0, 256).unwrap();
    let r = scaling_invariance_check(&a, 2.0, &BackendSettings::default(), &quad(128)).unwrap();
    assert!(r.difference.abs() < r.combined_error.max(1e-9), "{} vs {}", r.difference, r.combined_error);
}

#[test]
fn sweep_rows() {
    let spec = SweepSpec {
        radius: 1.0,
        holes: vec![
            HoleSpec::circle([-0.5, 0.0], 0.03),
            HoleSpec::circle([0.5, 0.0], 0.03),
            HoleSpec::circle([0.0, 0.5], 0.03),
        ],
        n_quad: 256,
        stretch: vec![1.5],
    };
    let rows = hole_sweep(&spec, &BackendSettings::default(), &quad(128)).unwrap();
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().take(4).enumerate() {
        assert_eq!(row.k, k);
        assert!((row.report.curvature_term - TAU * (1.0 - k as f64)).abs() < 1e-8);
        assert_eq!(row.sign, if row.report.lambda > 0.0 { 1 } else { -1 });
        assert_eq!(row.csv_row().split(',').count(), SWEEP_CSV_HEADER.split(',').count());
    }
    assert_eq!(rows[4].transform, "stretch:1.5");
    let crowded = SweepSpec { holes: vec![HoleSpec::circle([0.0, 0.0], 0.1), HoleSpec::circle([0.3, 0.0], 0.1)], ..spec };
    assert!(matches!(hole_sweep(&crowded, &BackendSettings::default(), &quad(64)), Err(Error::Config(_))));
}

#[test]
fn report_shape() {
    let d = DomainSpec::ellipse(2.0, 1.0).build().unwrap();
    let r = lambda(&BackendSettings::default().measure(&d).unwrap(), &quad(128), "ellipse:2,1").unwrap();
    assert!(r.chi_check, "{r:?}");
    let row = r.csv_row();
    assert!(row.starts_with("\"ellipse:2,1\","));
    assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count() + 1);
    let area = r.area.unwrap();
    assert!((r.decay_rate.unwrap() + r.lambda / (2.0 * area)).abs() < 1e-12);
}

#[test]
fn exact_backend_refuses_general_domains() {
    let d = Domain::annulus(0.5, 1.0, 256).unwrap();
    assert!(matches!(HarmonicMeasure::exact(&d), Err(Error::Backend(_))));
}

#[test]
fn integrand_tends_to_diagonal_limit() {
    use rbm_lyapunov::geometry::{abs_log_cos, tangent_angle_alpha};
    // |log cos α| ω_x(y) → ν²/(2π) as y → x, approached from one side
    let d = Domain::ellipse(2.0, 1.0, 256).unwrap();
    let hm = BackendSettings::default().measure(&d).unwrap();
    for u in [0.0, 0.1, 0.3] {
        let x = d.point(0, u).unwrap();
        let limit = x.curvature * x.curvature / TAU;
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                let y = d.point(0, u + e).unwrap();
                let v = abs_log_cos(tangent_angle_alpha(&x, &y)) * hm.density(&x, &y).unwrap().value;
                (v - limit).abs()
            })
            .collect();
        // first order in the offset
        assert!(gaps[1] < 0.2 * gaps[0] && gaps[2] < 0.2 * gaps[1], "u = {u}: {gaps:?}");
        assert!(gaps[2] < 1e-3, "u = {u}: {gaps:?}");
    }
}
