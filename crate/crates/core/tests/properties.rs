use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use tubepw::cone_geometry::{BaseRegion, ConeSpec};
use tubepw::mixed_norms::{mixed_norm, NormParams};
use tubepw::spectral_models::SpectralDensity;
use tubepw::transforms::{QuadSpec, TubeFunction};
use tubepw::verification::{j_optimum, j_value, CheckResult};
use tubepw::weights::{WeightFn, WeightKind};

fn angle_cone() -> impl Strategy<Value = ConeSpec> {
    // Two generators at angles a < b with opening below π.
    (0.0..2.0 * PI, 0.05..(PI - 0.05)).prop_map(|(a, w)| {
        let b = a + w;
        ConeSpec::new(vec![vec![a.cos(), a.sin()], vec![b.cos(), b.sin()]]).unwrap()
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dual_membership_is_the_halfspace_test(c in angle_cone(), t in point()) {
        let dual = c.dual().unwrap();
        let pairing = c.generators().iter().map(|g| g[0] * t[0] + g[1] * t[1]).fold(f64::INFINITY, f64::min);
        let scale = (t[0] * t[0] + t[1] * t[1]).sqrt();
        prop_assume!(pairing.abs() > 1e-9 * scale);
        prop_assert_eq!(dual.contains(&t, true).unwrap(), pairing > 0.0);
    }

    #[test]
    fn bidual_matches_membership(c in angle_cone(), x in point()) {
        let bidual = c.dual().unwrap().dual().unwrap();
        let margin = c.halfspaces().iter().map(|h| h[0] * x[0] + h[1] * x[1]).fold(f64::INFINITY, f64::min);
        prop_assume!(margin.abs() > 1e-9);
        prop_assert_eq!(c.contains(&x, true).unwrap(), bidual.contains(&x, true).unwrap());
    }

    #[test]
    fn projection_onto_the_dual_is_a_nearest_point(c in angle_cone(), t in point(), probe in point()) {
        let p = c.project_onto_dual(&t).unwrap();
        let dual = c.dual().unwrap();
        prop_assert!(dual.contains(&p.proj, true).unwrap());
        // Any dual-cone point is at least as far from t.
        let q: Vec<f64> = c.halfspaces().iter().zip([probe[0].abs(), probe[1].abs()])
            .fold(vec![0.0, 0.0], |acc, (h, l)| vec![acc[0] + l * h[0], acc[1] + l * h[1]]);
        let d = ((t[0] - q[0]).powi(2) + (t[1] - q[1]).powi(2)).sqrt();
        prop_assert!(p.dist <= d + 1e-9 * (1.0 + d));
        prop_assert_eq!(c.in_dual_plus_ball(&t, p.dist + 1e-6).unwrap(), true);
    }

    #[test]
    fn cones_opening_below_pi_are_regular(c in angle_cone()) {
        prop_assert!(c.is_regular().unwrap());
        let w = c.regularity_witness().unwrap().unwrap();
        for g in c.generators() {
            prop_assert!(g[0] * w[0] + g[1] * w[1] >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn j_optimum_is_a_minimum(p in 0.1..0.9f64, s in 0.5..4.0f64, r in 0.0..2.0f64, t in 0.1..50.0f64, rho in 1e-3..10.0f64) {
        let (rho_star, j) = j_optimum(&[t], 1, p, s, r, 0.5).unwrap();
        prop_assert!(rho_star > 0.0);
        prop_assert!(j <= j_value(rho, t, 1, p, s, r, 0.5) + 1e-9 * j.abs().max(1.0));
    }

    #[test]
    fn check_result_verdict_follows_the_margin(
        pairs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 0..8),
        tol in 0.0..1.0f64,
        poison in prop::option::of(0usize..8),
    ) {
        let mut lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let rhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Some(i) = poison.filter(|&i| i < lhs.len()) {
            lhs[i] = f64::INFINITY;
        }
        let r = CheckResult::compare("prop", serde_json::Value::Null, lhs, rhs, tol);
        prop_assert!(r.margin.is_finite());
        prop_assert!(r.lhs.iter().chain(&r.rhs).all(|v| v.is_finite()));
        prop_assert_eq!(r.passed, r.margin >= -tol);
        let direct = r.lhs.iter().zip(&r.rhs).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min);
        if !r.lhs.is_empty() {
            prop_assert_eq!(r.margin, direct);
        }
    }

    #[test]
    fn linear_weight_slope_and_ball_max(r in 0.0..5.0f64, y in 0.5..10.0f64, delta in 0.01..0.4f64) {
        let w = WeightFn::new(WeightKind::Linear { r }, BaseRegion::cone(ConeSpec::orthant(1)).unwrap()).unwrap();
        prop_assert_eq!(w.slope(), r);
        let m = w.ball_max(&[y], delta).unwrap();
        prop_assert!(m >= w.eval(&[y]).unwrap());
        prop_assert!((m - r * (y + delta)).abs() <= 1e-9 * (1.0 + m));
    }

    #[test]
    fn grid_scaling_keeps_specs_valid(scale in 0.05..4.0f64) {
        let q = QuadSpec::default().scaled(scale).unwrap();
        prop_assert!(q.slice_grid.points.is_power_of_two());
        prop_assert!(q.validate().is_ok());
    }

    #[test]
    fn closed_form_transforms_agree_with_scaled_densities(a in 0.5..4.0f64, x in -5.0..5.0f64, y in 0.1..3.0f64, c in 0.1..10.0f64) {
        let f = SpectralDensity::truncated_exponential_1d(a, 0).unwrap();
        let q = QuadSpec::default();
        let z = [Complex64::new(x, y)];
        let tf = TubeFunction::closed_form(f);
        let v = tf.eval(&z, &q).unwrap();
        let exact = 1.0 / (Complex64::new(2.0 * PI, 0.0) * Complex64::new(a + y, -x));
        prop_assert!((v - exact).norm() <= 1e-12 * exact.norm());
        let scaled = tf.clone().scaled(c).eval(&z, &q).unwrap();
        prop_assert!((scaled - v * c).norm() <= 1e-12 * scaled.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mixed_norms_are_homogeneous(c in 0.1..10.0f64, p in 1.0..3.0f64) {
        let q = QuadSpec::default();
        let base = BaseRegion::truncated_cone(ConeSpec::orthant(1), 1e-3, 50.0).unwrap();
        let w = WeightFn::zero(base.clone());
        let f = TubeFunction::closed_form(SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap());
        let np = NormParams::new(p, 1.0).unwrap();
        let a = mixed_norm(&f, &base, &w, np, &q).unwrap().value;
        let b = mixed_norm(&f.scaled(c), &base, &w, np, &q).unwrap().value;
        prop_assert!((b - c * a).abs() <= 1e-10 * b);
    }
}
