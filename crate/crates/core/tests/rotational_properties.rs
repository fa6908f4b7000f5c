use kgraph::rotational::*;
use kgraph::*;
use proptest::prelude::*;

fn rotsym(xi: ScalarFn, rho: ScalarFn, n: usize) -> AmbientModel {
    AmbientModel::new(LeafMetric::rotsym(xi, n).unwrap(), WarpingFunction::new(rho))
}

fn battery_models() -> Vec<AmbientModel> {
    vec![
        rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 2),
        rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2),
        rotsym(ScalarFn::Sin, ScalarFn::Constant(1.0), 3),
        rotsym(ScalarFn::Sinh, ScalarFn::Constant(1.0), 2),
        rotsym(ScalarFn::Identity, ScalarFn::Cosh, 3),
    ]
}

#[test]
fn momentum_integral_is_increasing() {
    for model in battery_models() {
        let rm = RotationalModel::new(&model).unwrap();
        let values: Vec<f64> = (0..=1000).map(|k| rm.momentum_integral(1.5 * k as f64 / 1000.0)).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{model:?}");
    }
}

#[test]
fn momentum_integral_matches_antiderivatives() {
    // int_0^r sinh(t) cosh(t) dt = sinh(r)^2 / 2
    let m = rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2);
    for r in [0.1, 0.7, 1.9] {
        assert!((momentum_integral(&m, r).unwrap() - 0.5 * r.sinh().powi(2)).abs() < 1e-12);
    }
    // int_0^r sin(t)^2 dt = r/2 - sin(2r)/4
    let m = rotsym(ScalarFn::Sin, ScalarFn::Constant(1.0), 3);
    for r in [0.1, 0.7, 1.9] {
        assert!((momentum_integral(&m, r).unwrap() - (0.5 * r - 0.25 * (2.0 * r).sin())).abs() < 1e-12);
    }
}

#[test]
fn profiles_close_up_and_conserve_flux() {
    for (model, h0) in [
        (rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 2), -1.0),
        (rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 3), -0.5),
        (rotsym(ScalarFn::Sinh, ScalarFn::Constant(1.0), 2), -1.5),
        (rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2), -2.0),
        (rotsym(ScalarFn::Sin, ScalarFn::Constant(1.0), 3), -0.8),
    ] {
        let c = integrate_cmc_sphere(&model, h0).unwrap();
        let rm = RotationalModel::new(&model).unwrap();
        let n = rm.dim() as f64;
        let p_max = model.warp.rho(c.r_max) * model.xi(c.r_max).powi(rm.dim() as i32 - 1);
        assert!((n * h0.abs() * rm.momentum_integral(c.r_max) - p_max).abs() < 1e-8, "{model:?}");
        assert!(c.max_flux_residual() < 1e-8, "{model:?}: {}", c.max_flux_residual());
        assert!(c.arc_length_defect(&model) < 1e-10);
        // closed: both ends on the axis, symmetric about s_center
        assert!(c.r[0] == 0.0 && c.r[c.len() - 1] == 0.0);
        assert!((c.s[0] + c.s[c.len() - 1] - 2.0 * c.s_center).abs() < 1e-12);
    }
}

#[test]
fn euclidean_three_sphere_radius() {
    let m = rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 3);
    let c = integrate_cmc_sphere(&m, -0.5).unwrap();
    assert!((c.r_max - 2.0).abs() < 1e-9);
    let dev = (0..c.len()).map(|k| ((c.s[k] - c.s_center).powi(2) + c.r[k] * c.r[k] - 4.0).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-8);
}

#[test]
fn momentum_profile_is_bounded_only_above_the_threshold() {
    let m = rotsym(ScalarFn::Sinh, ScalarFn::Constant(1.0), 2);
    // in H^2 x R compact spheres need |H| > 1/2
    assert!(integrate_cmc_sphere(&m, -0.55).is_ok());
    assert!(matches!(integrate_cmc_sphere(&m, -0.45), Err(RotationalError::Unbounded { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // with rho = cosh on the hyperbolic leaf F = 2 coth r, so spheres need |H| > 1
    #[test]
    fn stronger_curvature_gives_smaller_spheres(h in 1.1f64..3.0, dh in 0.05f64..1.0) {
        for model in [rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 2), rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2)] {
            let a = integrate_cmc_sphere(&model, -h).unwrap();
            let b = integrate_cmc_sphere(&model, -(h + dh)).unwrap();
            prop_assert!(b.r_max < a.r_max);
        }
    }

    #[test]
    fn serrin_bound_inverts_the_turning_identity(h in 1.1f64..3.0) {
        // the sphere of curvature h turns at r0 with F(r0) = n h
        let model = rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2);
        let c = integrate_cmc_sphere(&model, -h).unwrap();
        let f = serrin_bound_f(&model, c.r_max).unwrap();
        prop_assert!((f - 2.0 * h).abs() < 1e-7);
    }
}
