mod common;

use std::collections::BTreeSet;

use disint_core::disintegration::{outer_measure, CoverTarget, RatioConfig, RatioProbe, DEFAULT_COVER_BUDGET};
use disint_core::fixtures::{self, RandomJoint};
use disint_core::sum::compensated_sum;
use disint_core::transport::{c_transform_phi, c_transform_psi, solve_plan_with, CostMatrix, CONJUGACY_TOL};
use disint_core::{
    exact_disintegration, integrate, iterated_xy, marginal_x, marginal_y, simple_approximation, slice_x,
    verify_conjugacy, FiberFunctional, Generator, LatticeSet, PairPoint, PointCloud, ProductSet, Radius, ScaleSchedule,
    SimpleFunction,
};
use proptest::prelude::*;
use rand::Rng;

fn dyadic_joint(seed: u64) -> disint_core::JointMeasure {
    fixtures::random_joint(&mut fixtures::rng(seed), RandomJoint { weight_bits: Some(12), ..Default::default() })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marginals_conserve_mass(seed in any::<u64>()) {
        let z = dyadic_joint(seed);
        let mx = marginal_x(&z).total_mass();
        let my = marginal_y(&z).total_mass();
        prop_assert_eq!(mx, z.total_mass());
        prop_assert_eq!(my, z.total_mass());
        prop_assert_eq!(mx, 1.0);
    }

    #[test]
    fn slices_and_indicators_give_joint_mass(seed in any::<u64>()) {
        let z = dyadic_joint(seed);
        let mut rng = fixtures::rng(seed ^ 0x5eed);
        let (nx, ny) = (z.carrier_x().len(), z.carrier_y().len());
        let c = fixtures::random_product_set(&mut rng, nx, ny);
        let by_slices: f64 = (0..nx)
            .flat_map(|i| slice_x(&c, i).unwrap().into_iter().map(move |j| (i, j)))
            .map(|(i, j)| z.weight(i, j))
            .sum();
        prop_assert_eq!(by_slices, z.measure_of(&c));
        let indicator = |p: PairPoint<'_>| if c.contains(p.i, p.j) { 1.0 } else { 0.0 };
        prop_assert_eq!(integrate(&indicator, &z).unwrap(), z.measure_of(&c));
    }

    #[test]
    fn dnf_semantics(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint::default()).unwrap();
        let cy = z.carrier_y();
        let o = common::random_lattice_set(&mut rng, cy);
        let p = common::random_lattice_set(&mut rng, cy);
        let u = o.union(&p).unwrap();
        let i = o.intersect(&p).unwrap();
        for j in 0..cy.len() {
            prop_assert_eq!(u.contains(cy, j), o.contains(cy, j) || p.contains(cy, j));
            prop_assert_eq!(i.contains(cy, j), o.contains(cy, j) && p.contains(cy, j));
        }
    }

    #[test]
    fn boundary_points_are_excluded(a in -50i32..50, b in -50i32..50) {
        prop_assume!(a != b);
        let cloud = PointCloud::line(&[f64::from(a), f64::from(b)]).unwrap();
        let r = Radius::new(i128::from((a - b).abs()), 1).unwrap();
        prop_assert!(!Generator::open_ball(0, r).contains_point(&cloud, cloud.point(1)));
        prop_assert!(!Generator::closed_ball_complement(0, r).contains_point(&cloud, cloud.point(1)));
    }

    #[test]
    fn per_scale_ratio_identities(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint { max_x: 8, max_y: 8, ..Default::default() }).unwrap();
        let mu = marginal_x(&z);
        let s = ScaleSchedule::for_carrier(z.carrier_x());
        let i = (0..mu.weights().len()).find(|&i| mu.weight(i) > 0.0).unwrap();
        let probe = RatioProbe::at_atom(&z, &mu, i, &s, RatioConfig::default()).unwrap();
        let o = common::random_lattice_set(&mut rng, z.carrier_y());
        let p = common::random_lattice_set(&mut rng, z.carrier_y());
        let (u, n) = (o.union(&p).unwrap(), o.intersect(&p).unwrap());
        for k in (0..s.len()).filter(|&k| probe.defined_mask()[k]) {
            let r = |x: &LatticeSet| probe.ratio_exact(x, k).unwrap();
            prop_assert_eq!(r(&o) + r(&p), r(&u) + r(&n));
            prop_assert!(r(&u) <= r(&o) + r(&p));
            prop_assert!(r(&n) <= r(&o) && r(&o) <= r(&u));
        }
    }

    #[test]
    fn outer_measure_below_ratio_and_subadditive(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint { max_x: 6, max_y: 12, ..Default::default() }).unwrap();
        let mu = marginal_x(&z);
        let s = ScaleSchedule::for_carrier(z.carrier_x());
        let i = (0..mu.weights().len()).find(|&i| mu.weight(i) > 0.0).unwrap();
        let probe = RatioProbe::at_atom(&z, &mu, i, &s, RatioConfig::default()).unwrap();
        let cy = z.carrier_y();
        let o = common::random_lattice_set(&mut rng, cy);
        let outer = outer_measure(&probe, &CoverTarget::Set(o.clone()), DEFAULT_COVER_BUDGET).unwrap();
        prop_assert!(outer.value <= probe.l_x(&o) + 1e-15);

        let a: BTreeSet<usize> = (0..cy.len()).filter(|_| rng.gen_bool(0.4)).collect();
        let b: BTreeSet<usize> = (0..cy.len()).filter(|_| rng.gen_bool(0.4)).collect();
        let ab: BTreeSet<usize> = a.union(&b).copied().collect();
        let m = |t: &BTreeSet<usize>| outer_measure(&probe, &CoverTarget::Points(t.clone()), DEFAULT_COVER_BUDGET).unwrap().value;
        let (ma, mb, mab) = (m(&a), m(&b), m(&ab));
        prop_assert!(ma <= mab + 1e-15 && mb <= mab + 1e-15);
        prop_assert!(mab <= ma + mb + 1e-15);
    }

    #[test]
    fn exact_fibers_reconstruct(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint::default()).unwrap();
        let d = exact_disintegration(&z);
        let (nx, ny) = (z.carrier_x().len(), z.carrier_y().len());
        for _ in 0..20 {
            let c = fixtures::random_product_set(&mut rng, nx, ny);
            prop_assert!((d.reconstruct(&c) - z.measure_of(&c)).abs() <= 1e-10);
        }
        let nu = marginal_y(&z);
        for (j, got) in d.reconstructed_marginal_y().iter().enumerate() {
            prop_assert!((got - nu.weight(j)).abs() <= 1e-12);
        }
        for (_, f) in d.fibers() {
            prop_assert!((f.total_mass() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn fibers_add_over_disjoint_sets(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint::default()).unwrap();
        let d = exact_disintegration(&z);
        let ny = z.carrier_y().len();
        let parts = rng.gen_range(1..5);
        let label: Vec<usize> = (0..ny).map(|_| rng.gen_range(0..parts)).collect();
        for (_, f) in d.fibers() {
            let pieces: Vec<f64> = (0..parts)
                .map(|p| f.mass_of(&(0..ny).filter(|&j| label[j] == p).collect()))
                .collect();
            let whole = f.mass_of(&(0..ny).collect());
            prop_assert!((compensated_sum(pieces) - whole).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn iterated_integral_is_linear_in_simple_terms(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint::default()).unwrap();
        let (nx, ny) = (z.carrier_x().len(), z.carrier_y().len());
        let terms: Vec<(f64, ProductSet)> = (0..3)
            .map(|_| (rng.gen_range(0.0..4.0), fixtures::random_product_set(&mut rng, nx, ny)))
            .collect();
        let d = exact_disintegration(&z);
        let whole = iterated_xy(&SimpleFunction { terms: terms.clone() }, &d).unwrap().value;
        let parts: f64 = terms
            .into_iter()
            .map(|(l, c)| l * iterated_xy(&SimpleFunction { terms: vec![(1.0, c)] }, &d).unwrap().value)
            .sum();
        prop_assert!((whole - parts).abs() <= 1e-12);
    }

    #[test]
    fn staircase_increases_to_truncation(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let z = fixtures::random_joint(&mut rng, RandomJoint { weight_bits: Some(12), ..Default::default() }).unwrap();
        let ny = z.carrier_y().len();
        let values: Vec<f64> = (0..z.carrier_x().len() * ny).map(|_| rng.gen_range(0.0..12.0)).collect();
        let f = move |p: PairPoint<'_>| values[p.i * ny + p.j];
        let fs = simple_approximation(&f, &z, 10).unwrap();
        for (idx, pair) in fs.windows(2).enumerate() {
            for e in z.entries() {
                let (a, b) = (pair[0].value(e.i, e.j), pair[1].value(e.i, e.j));
                let v = f(PairPoint { i: e.i, j: e.j, x: &[], y: &[] });
                prop_assert!(a <= b && b <= v);
                prop_assert!(v.min((idx + 2) as f64) - b <= 2f64.powi(-(idx as i32 + 2)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn double_transform_is_stable(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let (n, m) = (rng.gen_range(1..8), rng.gen_range(1..8));
        // Integer data keeps every transform exact.
        let values = (0..n * m)
            .map(|_| if rng.gen_bool(0.1) { f64::INFINITY } else { f64::from(rng.gen_range(0..30)) })
            .collect();
        let c = CostMatrix::new(n, m, values).unwrap();
        let phi: Vec<f64> = (0..m)
            .map(|_| if rng.gen_bool(0.1) { f64::NEG_INFINITY } else { f64::from(rng.gen_range(-20..20)) })
            .collect();
        let psi = c_transform_phi(&phi, &c);
        let again = c_transform_phi(&c_transform_psi(&psi, &c), &c);
        prop_assert_eq!(again, psi);
    }

    #[test]
    fn weak_duality_and_fiber_gaps(seed in any::<u64>()) {
        let (plan, prices, c) = fixtures::random_competitive(&mut fixtures::rng(seed), 10);
        let d = exact_disintegration(plan.plan());
        if let Ok(r) = verify_conjugacy(&plan, &prices, &c, &d, CONJUGACY_TOL) {
            prop_assert!(r.duality_gap >= -1e-9);
            prop_assert!(r.dual_value <= r.primal_cost + 1e-9);
            prop_assert!(r.fiber_gaps.iter().all(|g| g.gap >= -1e-9));
            prop_assert!(r.decomposition_residual <= 1e-9);
        }
    }

    #[test]
    fn equality_almost_surely_implies_conjugacy(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let p = fixtures::random_ot(&mut rng, 8, false);
        let s = solve_plan_with(&p.mu, &p.nu, &p.matrix).unwrap();
        let d = exact_disintegration(s.plan.plan());
        let r = verify_conjugacy(&s.plan, &s.prices, &p.matrix, &d, CONJUGACY_TOL).unwrap();
        if r.almost_sure {
            let defects = r.defects.unwrap();
            prop_assert!(defects.psi_mass <= 1e-9 && defects.phi_mass <= 1e-9);
        }
    }
}
