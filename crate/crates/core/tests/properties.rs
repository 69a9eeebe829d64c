mod common;

use fairwrap::boosting::{
    leaf_alpha_audacious, leaf_alpha_conservative, Confidences, InductionConfig,
};
use fairwrap::boosting::{topdown, Scoring};
use fairwrap::measures::{TargetPosterior, View};
use fairwrap::metrics::{auc, wrap_dataset};
use fairwrap::model::{apply_alpha, clip_score, nlogit, AlphaValue, ClipBound, Score};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn clipping_is_idempotent_and_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, bound in 0.1f64..6.0) {
        let clip = ClipBound::new(bound).unwrap();
        let (ca, cb) = (clip_score(Score::new(a).unwrap(), clip), clip_score(Score::new(b).unwrap(), clip));
        prop_assert_eq!(clip_score(ca, clip), ca);
        if a <= b {
            prop_assert!(ca.value() <= cb.value());
        }
        let nl = nlogit(ca, clip).unwrap();
        prop_assert!((-1.0..=1.0).contains(&nl));
    }

    #[test]
    fn positive_alpha_keeps_order(p in 0.001f64..0.999, d in 0.0f64..0.5, alpha in 0.01f64..8.0) {
        let a = AlphaValue::new(alpha).unwrap();
        let lo = apply_alpha(Score::new(p * (1.0 - d)).unwrap(), a).unwrap();
        let hi = apply_alpha(Score::new(p).unwrap(), a).unwrap();
        prop_assert!(lo.value() <= hi.value());
    }

    #[test]
    fn negative_alpha_crosses_one_half(p in 0.501f64..0.999, alpha in -8.0f64..-0.01) {
        let q = apply_alpha(Score::new(p).unwrap(), AlphaValue::new(alpha).unwrap()).unwrap();
        prop_assert!(q.value() < 0.5);
    }

    #[test]
    fn conservative_alpha_has_edge_sign(e in -0.999f64..0.999, bound in 0.5f64..3.0) {
        let a = leaf_alpha_conservative(e, ClipBound::new(bound).unwrap(), 50.0).get();
        prop_assert!(a * e >= 0.0);
    }

    #[test]
    fn audacious_alpha_is_antisymmetric(p in 0.001f64..1.0, m in 0.001f64..1.0) {
        let b = ClipBound::new(2.0).unwrap();
        let a = leaf_alpha_audacious(p, m, b, 50.0).unwrap().get();
        let r = leaf_alpha_audacious(m, p, b, 50.0).unwrap().get();
        prop_assert!((a + r).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn topdown_never_raises_tree_entropy(seed in any::<u64>(), audacious in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = common::random_dataset(&mut rng, 300, 3, 2, 2.0);
        let eta = TargetPosterior::new(ds.target().unwrap().to_vec()).unwrap();
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        let cfg = InductionConfig {
            max_iterations: 6,
            scoring: if audacious { Scoring::Audacious } else { Scoring::Conservative },
            ..InductionConfig::default()
        };
        let view = View::full(&ds).unwrap();
        let ind = topdown(&view, &eta, &conf, ds.clip(), &fairwrap::model::AlphaTree::identity(), &cfg).unwrap();
        for w in ind.records.windows(2) {
            prop_assert!(w[1].entropy <= w[0].entropy + 1e-12);
        }
        prop_assert_eq!(ind.tree.n_leaves(), ind.splits() + 1);
    }

    #[test]
    fn identity_tree_changes_nothing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = common::random_dataset(&mut rng, 200, 2, 3, 1.0);
        let q = wrap_dataset(&fairwrap::model::AlphaTree::identity(), &ds).unwrap();
        prop_assert_eq!(&q[..], ds.scores());
        prop_assert_eq!(auc(&ds, &q).unwrap(), auc(&ds, ds.scores()).unwrap());
    }
}
