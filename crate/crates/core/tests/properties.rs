//! Property tests tying the closed forms to the oracles and to each other.

use proptest::prelude::*;

use subset_ldp::estimation::{marginal_q, CountVector, Estimator};
use subset_ldp::mechanisms::{
    build_channel, check_ldp, convex_vertex_decomposition, extremalize, is_extremal, MechanismSpec,
};
use subset_ldp::reference::{exact_l22_by_enumeration, random_distribution};
use subset_ldp::risk::{
    default_d, l1_risk_subset_asymptotic, l1_risk_uniform, l22_risk_subset, l22_risk_uniform,
    lower_bound, lower_bound_threshold, select_d, upper_bound,
};
use subset_ldp::verify::random_private_channel;
use subset_ldp::{LossKind, PrivacyBudget, ProbabilityVector};

fn distribution(k: usize) -> impl Strategy<Value = ProbabilityVector> {
    prop::collection::vec(0.0f64..1.0, k).prop_filter_map("all-zero draw", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-6)
            .then(|| ProbabilityVector::new(raw.iter().map(|x| x / total).collect()).unwrap())
    })
}

fn subset_case() -> impl Strategy<Value = (usize, usize, f64, ProbabilityVector)> {
    (2usize..=10).prop_flat_map(|k| (Just(k), 1..k, 1.05f64..20.0, distribution(k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_form_l22_matches_enumeration((k, d, e, p) in subset_case(), n in 1u64..100_000) {
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let spec = MechanismSpec::subset(k, d, budget).unwrap();
        let oracle = exact_l22_by_enumeration(&spec, &p, n).unwrap();
        let closed = l22_risk_subset(k, d, budget, n, &p).unwrap().value;
        prop_assert!((closed / oracle - 1.0).abs() <= 1e-10, "{closed} vs {oracle}");
    }

    #[test]
    fn estimator_inverts_expected_counts((k, d, e, p) in subset_case()) {
        let spec = MechanismSpec::subset(k, d, PrivacyBudget::from_exp(e).unwrap()).unwrap();
        // Counts T_i = n q_i with n a power of two keep T_i/n close to q_i.
        let n = 1u64 << 40;
        let q = marginal_q(&p, &spec).unwrap();
        let counts: Vec<u64> = q.iter().map(|qi| (qi * n as f64).round() as u64).collect();
        let est = Estimator::for_spec(&spec).unwrap().estimate(&CountVector::from_counts(counts, n).unwrap()).unwrap();
        for (a, b) in est.as_slice().iter().zip(p.as_slice()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((q.iter().sum::<f64>() - d as f64).abs() < 1e-12);
    }

    #[test]
    fn uniform_is_worst_case((k, d, e, p) in subset_case()) {
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let u = ProbabilityVector::uniform(k).unwrap();
        let l22 = l22_risk_subset(k, d, budget, 10, &p).unwrap().value;
        prop_assert!(l22 <= l22_risk_subset(k, d, budget, 10, &u).unwrap().value * (1.0 + 1e-12));
        let l1 = l1_risk_subset_asymptotic(k, d, budget, 10, &p).unwrap().value;
        let l1u = l1_risk_uniform(k, d, budget, 10).unwrap().value;
        prop_assert!(l1 <= l1u * (1.0 + 1e-12));
        prop_assert!((l1_risk_subset_asymptotic(k, d, budget, 10, &u).unwrap().value / l1u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn built_channels_are_private_and_extremal(k in 2usize..=7, e in 1.05f64..30.0, pick in 0usize..3) {
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let spec = match pick {
            0 => MechanismSpec::subset(k, (k / 2).max(1), budget).unwrap(),
            1 => MechanismSpec::rr(k, budget).unwrap(),
            _ => MechanismSpec::rappor(k, budget).unwrap(),
        };
        let channel = build_channel(&spec).unwrap();
        prop_assert!(check_ldp(&channel, budget));
        prop_assert!(is_extremal(&channel, budget));
        prop_assert!(channel.max_row_sum_deviation() <= 1e-12);
    }

    #[test]
    fn select_d_is_a_neighbor_of_the_real_optimum(k in 2usize..5000, eps in 0.01f64..8.0) {
        let budget = PrivacyBudget::new(eps).unwrap();
        let x = k as f64 / (budget.exp_epsilon() + 1.0);
        for loss in LossKind::ALL {
            let c = select_d(k, budget, loss).unwrap();
            prop_assert!((1..k).contains(&c.d_star));
            prop_assert!(c.d_star == c.floor || c.d_star == c.ceil);
            prop_assert!(c.ceil as f64 >= x.min((k - 1) as f64) - 1e-9);
        }
    }

    #[test]
    fn sandwich_and_order_of_magnitude(k in 4usize..400, e in 1.1f64..50.0, scale in 1.0f64..100.0) {
        prop_assume!(k as f64 >= e + 1.0);
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let n = (scale * lower_bound_threshold(k, budget)).ceil() as u64 + 1;
        let d = default_d(k, budget);
        for loss in LossKind::ALL {
            let exact = match loss {
                LossKind::L2Squared => l22_risk_uniform(k, d, budget, n).unwrap().value,
                LossKind::L1 => l1_risk_uniform(k, d, budget, n).unwrap().value,
            };
            prop_assert!(lower_bound(k, budget, n, loss).unwrap().value <= exact);
            prop_assert!(exact <= upper_bound(k, budget, n, loss).unwrap().value);
        }
        if e <= k as f64 / 4.0 {
            let exact = l22_risk_uniform(k, d, budget, 1).unwrap().value;
            let order = k as f64 * e / ((e - 1.0) * (e - 1.0));
            prop_assert!((0.125..=8.0).contains(&(exact / order)));
        }
    }

    #[test]
    fn rr_is_subset_of_size_one(k in 2usize..50, e in 1.05f64..30.0) {
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let rr = build_channel(&MechanismSpec::rr(k, budget).unwrap()).unwrap();
        let sub = build_channel(&MechanismSpec::subset(k, 1, budget).unwrap()).unwrap();
        for x in 0..k {
            prop_assert_eq!(rr.row(x), sub.row(x));
        }
    }

    #[test]
    fn vertex_decomposition_reconstructs(e in 1.01f64..100.0, raw in prop::collection::vec(0.0f64..=1.0, 1..=10)) {
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let v: Vec<f64> = raw.iter().map(|t| 1.0 + t * (e - 1.0)).collect();
        let dec = convex_vertex_decomposition(&v, budget).unwrap();
        prop_assert!(dec.len() <= 1 << v.len());
        prop_assert!((dec.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in dec.reconstruct().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn extremalization_preserves_the_channel(seed in any::<u64>(), e in 1.2f64..10.0, outputs in 1usize..6) {
        let budget = PrivacyBudget::from_exp(e).unwrap();
        let mut rng = subset_ldp::montecarlo::trial_rng(seed, 0);
        let channel = random_private_channel(3, outputs, budget, &mut rng).unwrap();
        let ext = extremalize(&channel, budget).unwrap();
        prop_assert!(is_extremal(&ext.channel, budget));
        for x in 0..3 {
            for (a, b) in ext.pushforward_row(x, outputs).iter().zip(channel.row(x)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn random_distributions_are_valid(seed in any::<u64>(), k in 2usize..50) {
        let p = random_distribution(k, &mut subset_ldp::montecarlo::trial_rng(seed, 1)).unwrap();
        prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
