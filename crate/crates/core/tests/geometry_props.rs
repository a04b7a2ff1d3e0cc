use std::f64::consts::TAU;

use proptest::prelude::*;
use rbm_lyapunov::catalog::{DomainSpec, HoleSpec};
use rbm_lyapunov::geometry::*;

fn domains() -> impl Strategy<Value = Domain> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|r| Domain::disc(r, 512).unwrap()),
        (0.5f64..2.0, 0.5f64..2.0).prop_map(|(a, b)| Domain::ellipse(a, b, 512).unwrap()),
        (0.2f64..0.8).prop_map(|r| Domain::annulus(r, 1.0, 512).unwrap()),
        (0.02f64..0.1).prop_map(|r| {
            DomainSpec::disc_with_holes(
                1.0,
                vec![HoleSpec::circle([-0.4, 0.0], r), HoleSpec::circle([0.4, 0.1], r)],
            )
            .with_n_quad(512)
            .build()
            .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_bonnet(d in domains()) {
        let (v, _) = d.curvature_integral();
        prop_assert!((v - TAU * d.euler_characteristic() as f64).abs() < 1e-8, "{v}");
    }

    #[test]
    fn projection_is_idempotent(d in domains(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let z = Vec2::new(x, y);
        let (bp, _) = d.project_to_boundary(z).unwrap();
        let (bp2, dist) = d.project_to_boundary(bp.position).unwrap();
        prop_assert!(dist < 1e-10, "{dist}");
        prop_assert!((bp2.position - bp.position).norm() < 1e-10);
    }

    #[test]
    fn normals_point_inward(d in domains(), c in 0usize..3, u in 0.0f64..1.0) {
        let c = c % d.curves().len();
        let bp = d.point(c, u).unwrap();
        let eps = 1e-3 * d.feature_size();
        prop_assert!(d.contains(bp.position + bp.normal * eps).unwrap());
        prop_assert!(!d.contains(bp.position - bp.normal * eps).unwrap());
        prop_assert!((bp.normal.dot(&bp.tangent)).abs() < 1e-14);
    }

    #[test]
    fn alpha_is_symmetric_and_folded(d in domains(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let x = d.point(0, u).unwrap();
        let y = d.point(d.curves().len() - 1, v).unwrap();
        let a = tangent_angle_alpha(&x, &y);
        prop_assert_eq!(a, tangent_angle_alpha(&y, &x));
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&a));
        let direct = -(a.cos()).ln();
        let robust = abs_log_cos_normals(x.normal, y.normal);
        if a < 1.5 && a > 1e-3 {
            prop_assert!((direct - robust).abs() < 1e-10 * (1.0 + direct));
        }
    }

    #[test]
    fn scaling_covariance(d in domains(), s in 0.2f64..5.0) {
        let e = d.scaled(s).unwrap();
        prop_assert!((e.area().unwrap() - s * s * d.area().unwrap()).abs() < 1e-9 * s * s * d.area().unwrap());
        prop_assert!((e.boundary_length() - s * d.boundary_length()).abs() < 1e-9 * s * d.boundary_length());
        prop_assert!((e.curvature_integral().0 - d.curvature_integral().0).abs() < 1e-9);
        prop_assert!((e.feature_size() - s * d.feature_size()).abs() < 1e-9 * s * d.feature_size());
    }
}

#[test]
fn catalog_gauss_bonnet_values() {
    for (spec, chi) in [
        (DomainSpec::disc(1.0), 1),
        (DomainSpec::ellipse(2.0, 1.0), 1),
        (DomainSpec::annulus(0.5, 1.0), 0),
        (DomainSpec::disc_exterior(1.0), -1),
    ] {
        let d = spec.build().unwrap();
        assert_eq!(d.euler_characteristic(), chi);
        let (v, err) = d.curvature_integral();
        assert!((v - TAU * chi as f64).abs() < 1e-8, "{}: {v}", spec.id());
        assert!(err < 1e-8);
    }
}
