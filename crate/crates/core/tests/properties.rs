use proptest::prelude::*;
use stable_mce::charfn::{beta_norm, ShiftNorm};
use stable_mce::estimator::{build_grid, WeightSpec};
use stable_mce::kernels::ou_norm_closed_form;
use stable_mce::{empirical_cf, FamilyId, KernelModel, NormMethod, ParameterPoint};

fn exp_family() -> impl Strategy<Value = (FamilyId, ParameterPoint)> {
    prop_oneof![
        (0.6..1.95f64, 0.2..2.5f64, 0.3..2.0f64).prop_map(|(b, l, s)| (FamilyId::Ou, ParameterPoint::new(b, vec![l, s]))),
        (1.05..1.95f64, 0.3..2.0f64, 0.3..2.0f64)
            .prop_map(|(b, a, c)| (FamilyId::ModulatedOu, ParameterPoint::new(b, vec![a, c]))),
        (1.05..1.95f64, 0.1..2.0f64, -2.0..-0.3f64).prop_map(|(b, t, l)| (FamilyId::Carma21, ParameterPoint::new(b, vec![t, l]))),
        (0.6..1.95f64, 0.3..2.0f64, 0.0..1.5f64)
            .prop_map(|(b, a, c)| (FamilyId::PeriodicOu, ParameterPoint::new(b, vec![a, c]))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn envelope_dominates_kernel((family, xi) in exp_family(), x in 0.0..40.0f64) {
        let model = KernelModel::new(family);
        let env = model.envelope_constants(&xi).unwrap();
        let g = model.eval(&xi, x).unwrap().abs();
        prop_assert!(g <= env.bound(x) * (1.0 + 1e-12), "|g({x})| = {g} > {}", env.bound(x));
    }

    #[test]
    fn norm_is_beta_homogeneous((family, xi) in exp_family(), c in 0.1..5.0f64, u1 in -2.0..2.0f64, u2 in -2.0..2.0f64) {
        let model = KernelModel::new(family);
        let n = ShiftNorm::window(&model, &xi, 2, NormMethod::Auto).unwrap();
        let a = n.norm(&[u1, u2]).unwrap();
        let b = n.norm(&[c * u1, c * u2]).unwrap();
        prop_assert!((b - c.powf(xi.beta) * a).abs() <= 1e-10 * b.max(1e-300));
        let neg = n.norm(&[-u1, -u2]).unwrap();
        prop_assert!((neg - a).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn ou_engines_match_closed_form(b in 0.6..1.95f64, l in 0.2..2.5f64, s in 0.3..2.0f64, u2 in 0.0..2.0f64, d in 0.05..2.0f64) {
        let model = KernelModel::new(FamilyId::Ou);
        let xi = ParameterPoint::new(b, vec![l, s]);
        let want = ou_norm_closed_form(s, l, b, u2 + d, u2).unwrap();
        let exact = ShiftNorm::window(&model, &xi, 2, NormMethod::Exact).unwrap().norm(&[u2 + d, u2]).unwrap();
        let adaptive = beta_norm(&model, &xi, &[u2 + d, u2]).unwrap();
        prop_assert!((exact - want).abs() <= 1e-11 * want);
        prop_assert!((adaptive - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn cf_lies_in_unit_interval((family, xi) in exp_family(), u in prop::collection::vec(-3.0..3.0f64, 2)) {
        let model = KernelModel::new(family);
        let phi = (-ShiftNorm::window(&model, &xi, 2, NormMethod::Auto).unwrap().norm(&u).unwrap()).exp();
        prop_assert!((0.0..=1.0).contains(&phi));
    }

    #[test]
    fn empirical_cf_is_bounded(x in prop::collection::vec(-50.0..50.0f64, 3..40), u in prop::collection::vec(-3.0..3.0f64, 1..3)) {
        prop_assume!(x.len() >= u.len());
        let v = empirical_cf(&x, &u).unwrap();
        prop_assert!(v.abs() <= 1.0);
    }

    #[test]
    fn grid_weights_nonnegative(m in 1usize..3, nodes in 2usize..16, nu in 0.05..5.0f64) {
        let g = build_grid(m, nodes, &WeightSpec::new(nu, m).unwrap()).unwrap();
        prop_assert_eq!(g.len(), nodes.pow(m as u32));
        prop_assert!(g.weights.iter().all(|w| *w >= 0.0 && w.is_finite()));
        prop_assert!(g.weights[0] > 0.0);
        prop_assert!(g.nodes.iter().all(|u| *u > 0.0));
    }
}
