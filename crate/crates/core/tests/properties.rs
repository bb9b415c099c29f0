use hybrid_loss::chain::{forward_backward, viterbi, ChainInstance, ChainLayout, ChainModel};
use hybrid_loss::consistency::alpha_condition;
use hybrid_loss::losses::{evaluate, hinge_loss, hybrid_loss, log_loss, LossSpec};
use hybrid_loss::model::{margin, FeatureVector, LabelDistribution, ScoreVector};
use hybrid_loss::synth::{generate_mixed, generate_nondominant, MixedSpec, NonDominantSpec};
use proptest::prelude::*;

fn scores_and_gold() -> impl Strategy<Value = (Vec<f64>, usize)> {
    prop::collection::vec(-5.0..5.0f64, 2..7).prop_flat_map(|s| {
        let k = s.len();
        (Just(s), 0..k)
    })
}

fn distribution() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, 2..7).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn hybrid_is_the_convex_mix((s, gold) in scores_and_gold(), alpha in 0.01..0.99f64) {
        let scores = ScoreVector::new(s).unwrap();
        let l = log_loss(&scores, gold).unwrap();
        let h = hinge_loss(&scores, gold).unwrap();
        let mix = hybrid_loss(&scores, gold, alpha).unwrap();
        prop_assert!((mix.value - (alpha * l.value + (1.0 - alpha) * h.value)).abs() < 1e-12);
        for ((m, a), b) in mix.score_gradient.iter().zip(&l.score_gradient).zip(&h.score_gradient) {
            prop_assert!((m - (alpha * a + (1.0 - alpha) * b)).abs() < 1e-12);
        }
    }

    #[test]
    fn losses_ignore_a_common_shift((s, gold) in scores_and_gold(), shift in -50.0..50.0f64) {
        let a = ScoreVector::new(s.clone()).unwrap();
        let b = ScoreVector::new(s.iter().map(|v| v + shift).collect()).unwrap();
        for spec in [LossSpec::log(), LossSpec::hinge(), LossSpec::hybrid(0.5).unwrap()] {
            let (x, y) = (evaluate(&spec, &a, gold).unwrap(), evaluate(&spec, &b, gold).unwrap());
            prop_assert!((x.value - y.value).abs() < 1e-9);
        }
    }

    #[test]
    fn hinge_vanishes_exactly_beyond_unit_margin((s, gold) in scores_and_gold()) {
        let scores = ScoreVector::new(s).unwrap();
        let m = margin(&scores, gold).unwrap();
        let h = hinge_loss(&scores, gold).unwrap();
        prop_assert!((h.value - (1.0 - m).max(0.0)).abs() < 1e-12);
        prop_assert!(log_loss(&scores, gold).unwrap().value > 0.0);
    }

    #[test]
    fn threshold_lies_in_unit_interval(q in distribution()) {
        let r = alpha_condition(&LabelDistribution::new(q).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.alpha_threshold));
        if r.dominant {
            prop_assert_eq!(r.alpha_threshold, 0.0);
        }
        prop_assert!(r.satisfied_by(1.0) || r.alpha_threshold == 1.0);
    }

    #[test]
    fn chain_marginals_are_distributions(
        params in prop::collection::vec(-2.0..2.0f64, 3 * 2 + 9 + 6),
        obs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 1..6),
    ) {
        let model = ChainModel::from_params(ChainLayout::new(3, 2).unwrap(), params).unwrap();
        let len = obs.len();
        let inst = ChainInstance::new(
            obs.iter().map(|o| FeatureVector::from_dense(o).unwrap()).collect(),
            vec![0; len],
        ).unwrap();
        let post = forward_backward(&model, &inst).unwrap();
        for row in &post.node_marginals {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for (j, edge) in post.edge_marginals.iter().enumerate() {
            for a in 0..3 {
                let out: f64 = edge[a].iter().sum();
                prop_assert!((out - post.node_marginals[j][a]).abs() < 1e-9);
            }
        }
        let (_, best) = viterbi(&model, &inst).unwrap();
        prop_assert!(best <= post.log_partition + 1e-12);
    }

    #[test]
    fn generators_are_pure_functions_of_the_seed(seed in any::<u64>()) {
        let nd = NonDominantSpec::new(4, 200, seed);
        prop_assert_eq!(generate_nondominant(&nd).unwrap(), generate_nondominant(&nd).unwrap());
        let mut mixed = MixedSpec::new(0.4, 30, seed);
        mixed.held_out_size = 20;
        prop_assert_eq!(generate_mixed(&mixed).unwrap(), generate_mixed(&mixed).unwrap());
    }
}
