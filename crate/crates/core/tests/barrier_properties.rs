use std::sync::Arc;

use kgraph::barriers::*;
use kgraph::battery::{solve_on, MmsCase};
use kgraph::rotational::serrin_bound_f;
use kgraph::*;
use proptest::prelude::*;

fn flat_disc() -> (AmbientModel, Domain) {
    (
        AmbientModel::new(LeafMetric::euclidean_polar(2).unwrap(), WarpingFunction::unit()),
        Domain::homogeneous(Shape::disc(1.0).unwrap()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn height_profile_is_increasing_and_concave(c in 0.05f64..20.0, extra in 0.01f64..2.0) {
        let (_, domain) = flat_disc();
        let a = domain.shape.diameter() + extra;
        let p = BarrierParams::new(&domain, c, a, 1.0, 0.1).unwrap();
        prop_assert_eq!(p.height(0.0), 0.0);
        for k in 0..100 {
            let d = a * k as f64 / 99.0;
            prop_assert!(p.height_d1(d) > 0.0);
            prop_assert!(p.height_d2(d) < 0.0);
            prop_assert!((p.height_d2(d) + c * p.height_d1(d)).abs() <= 1e-12 * p.height_d1(d));
        }
    }

    #[test]
    fn rotational_check_is_the_serrin_bound(h in -3.0f64..3.0, r0 in 0.3f64..2.0) {
        let model = AmbientModel::new(LeafMetric::rotsym(ScalarFn::Sinh, 2).unwrap(), WarpingFunction::new(ScalarFn::Cosh));
        let domain = Domain::homogeneous(Shape::disc(r0).unwrap());
        let report = check_theorem_hypotheses(&model, &domain, &move |_: LeafPoint| h, Theorem::Three).unwrap();
        let f = serrin_bound_f(&model, r0).unwrap();
        prop_assert_eq!(report.verdict, 2.0 * h.abs() <= f + 1e-12);
        prop_assert_eq!(report.verdict, report.conditions.iter().all(|c| c.pass));
    }
}

#[test]
fn sphere_radius_is_monotone() {
    for i in 0..20 {
        for j in 0..20 {
            let k = 0.1 + 0.2 * i as f64;
            let h = 0.1 + 0.25 * j as f64;
            let r = sphere_barrier_radius(k, h).unwrap();
            assert!(sphere_barrier_radius(k, h + 0.1).unwrap() <= r);
            // k grows with sup_H / sqrt(k) fixed
            let x = 1.0 + 0.1 * (j + 1) as f64;
            let (k1, k2) = (k, k + 0.2);
            assert!(sphere_barrier_radius(k2, x * k2.sqrt()).unwrap() <= sphere_barrier_radius(k1, x * k1.sqrt()).unwrap());
        }
    }
}

#[test]
fn verdict_is_the_conjunction() {
    let (model, domain) = flat_disc();
    for theorem in [Theorem::One, Theorem::Two, Theorem::Three] {
        for h in [-1.5, -0.6, -0.2, 0.0, 0.3, 0.45, 0.55, 1.2] {
            let r = check_theorem_hypotheses(&model, &domain, &move |_: LeafPoint| h, theorem).unwrap();
            assert_eq!(r.verdict, r.conditions.iter().all(|c| c.pass));
            assert_eq!(r.theorem, theorem.id());
        }
    }
}

/// Battery cases admitted by the Theorem 1 hypotheses: the barrier must be a
/// discrete supersolution and contain the computed solution.
#[test]
fn height_barrier_contains_admissible_solutions() {
    let mut admitted = 0;
    for case in MmsCase::standard() {
        let report = check_theorem_hypotheses(&case.model, &case.domain, case.curvature.as_ref(), Theorem::One).unwrap();
        if !report.verdict {
            continue;
        }
        admitted += 1;
        let spec = case.grids[0];
        let grid = case.grid(spec).unwrap();
        let params = choose_barrier_constants(&case.model, &case.domain, case.curvature.as_ref(), grid.clone()).unwrap();
        let (up, low) = height_barrier_residuals(&case.model, &case.domain, case.curvature.as_ref(), grid, &params).unwrap();
        assert!(up < 0.0 && low > 0.0, "{}: {up} {low}", case.name);
        let s = solve_on(&case, spec).unwrap();
        let (inf_phi, sup_phi) = case.domain.phi_bounds();
        assert!(verify_height(&s.u, &case.domain, sup_phi, inf_phi, &params).unwrap().contained, "{}", case.name);
    }
    assert!(admitted >= 1);
}

#[test]
fn hemisphere_fits_under_the_direct_barrier() {
    let case = MmsCase::hemisphere();
    let s = solve_on(&case, case.grids[0]).unwrap();
    let params = BarrierParams::new(&case.domain, 1.0, 1.1 * case.domain.shape.diameter(), 1.0, 0.1).unwrap();
    let check = verify_height(&s.u, &case.domain, 0.0, 0.0, &params).unwrap();
    assert!(check.contained);
    assert!(check.margin.abs() < 1e-12, "boundary nodes sit on the barrier");
}

#[test]
fn boundary_gradient_bound_is_realized() {
    let mut realized = 0;
    for case in MmsCase::standard() {
        let grid = case.grid(case.grids[0]).unwrap();
        let Ok(params) = choose_barrier_constants(&case.model, &case.domain, case.curvature.as_ref(), grid) else {
            continue;
        };
        let s = solve_on(&case, case.grids[0]).unwrap();
        let rep = boundary_gradient_barrier(&case.model, &case.domain, &s.u, case.curvature.as_ref(), &params).unwrap();
        if let Some(holds) = rep.bound_holds() {
            assert!(holds, "{}: {rep:?}", case.name);
            realized += 1;
        }
    }
    assert!(realized >= 1);
}

#[test]
fn hemisphere_violates_the_upper_strip_precondition() {
    let case = MmsCase::hemisphere();
    let s = solve_on(&case, case.grids[0]).unwrap();
    let params = BarrierParams::new(&case.domain, 1.0, 1.76, 1.0, 0.1).unwrap();
    let rep = boundary_gradient_barrier(&case.model, &case.domain, &s.u, case.curvature.as_ref(), &params).unwrap();
    assert!(!rep.upper.precondition);
    assert!(rep.lower.precondition);
    assert_eq!(rep.psi_d1_at_zero, None);
    // cap slope r / sqrt(1 - r^2) at r = 0.8
    assert!((rep.sup_boundary_gradient - 4.0 / 3.0).abs() < 1e-2);
}

#[test]
fn constants_on_a_fine_flat_grid() {
    let (model, domain) = flat_disc();
    let grid = Arc::new(Grid::polar(domain.shape, 32, 64).unwrap());
    let p = choose_barrier_constants(&model, &domain, &|_: LeafPoint| 0.3, grid).unwrap();
    assert!(p.c <= 4.0);
}
