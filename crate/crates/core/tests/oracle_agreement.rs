//! The closed forms against brute-force enumeration over small universes.

mod common;

use common::close;
use proptest::prelude::*;
use rankdens::oracle::{
    brute_event_prob, brute_expected_kendall, brute_normalization, brute_pair_pref, brute_permutation_probs,
};
use rankdens::ranking::{all_permutations, ENUMERATION_BOUND};
use rankdens::{expected_kendall, pair_pref_prob, triangular_normalization, EventScorer, KernelMode, KernelModel};

fn modes(n: usize) -> impl Strategy<Value = (KernelMode, f64)> {
    let d = (n * (n - 1) / 2) as f64;
    prop_oneof![
        (0.3f64..=d + 2.0).prop_map(|h| (KernelMode::ExactSupport, h)),
        (d / 2.0 + 0.05..=2.0 * d + 1.0).prop_map(|h| (KernelMode::Modified, h)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn pair_probabilities((u, s) in (2usize..=6).prop_flat_map(common::ranking), a in 0usize..6, b in 0usize..6) {
        let n = u.size();
        let (i, j) = (a % n, b % n);
        prop_assume!(i != j);
        let p = pair_pref_prob(&s, i, j).unwrap();
        prop_assert!(close(p, brute_pair_pref(&s, i, j).unwrap(), 1e-12));
        prop_assert!(close(p + pair_pref_prob(&s, j, i).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn expected_distance(
        (s, r) in (1usize..=5).prop_flat_map(|n| (common::assignment(n, 0.7), common::assignment(n, 0.7)).prop_map(move |(x, y)| {
            let u = rankdens::ItemUniverse::new(n).unwrap();
            (common::from_assignment(&u, &x).unwrap(), common::from_assignment(&u, &y).unwrap())
        }))
    ) {
        let e = expected_kendall(&s, &r).unwrap();
        prop_assert!(close(e, brute_expected_kendall(&s, &r).unwrap(), 1e-12));
        prop_assert!(close(e, expected_kendall(&r, &s).unwrap(), 1e-12));
    }

    #[test]
    fn normalization((n, (mode, h)) in (1usize..=6).prop_flat_map(|n| (Just(n), modes(n.max(2))))) {
        prop_assume!(n >= 2 || mode == KernelMode::ExactSupport);
        let c = triangular_normalization(n, h, mode).unwrap().c();
        prop_assert!(close(c, brute_normalization(n, h, mode).unwrap(), 1e-10));
    }

    #[test]
    fn event_probabilities(
        ((u, train), (mode, h), event) in (2usize..=5).prop_flat_map(|n| (common::rankings(n, 1..6), modes(n), common::assignment(n, 0.6)))
    ) {
        let r = common::from_assignment(&u, &event).unwrap();
        let model = KernelModel::fit(train.clone(), h, mode).unwrap();
        let p = model.event_prob(&r).unwrap().value;
        prop_assert!(close(p, brute_event_prob(&train, h, mode, &r).unwrap(), 1e-9), "{} vs brute", p);
        if model.closed_form_applies() {
            let all: Vec<usize> = (0..u.size()).collect();
            let fast = EventScorer::event_prob(&model.summarize(&all).unwrap(), &r).unwrap();
            prop_assert!(close(fast, p, 1e-10));
        }
    }
}

#[test]
fn single_permutation_masses_sum_to_one() {
    let u = rankdens::ItemUniverse::new(4).unwrap();
    let train: Vec<_> = ["1 | 2,3", "4 | 1", "2,3,4 | 1"]
        .iter()
        .map(|t| rankdens::TiedRanking::parse(t, &u).unwrap())
        .collect();
    for (mode, h) in [(KernelMode::ExactSupport, 2.5), (KernelMode::Modified, 4.0), (KernelMode::Modified, 9.0)] {
        let probs = brute_permutation_probs(&train, h, mode).unwrap();
        assert!(close(probs.iter().sum::<f64>(), 1.0, 1e-12));
        let model = KernelModel::fit(train.clone(), h, mode).unwrap();
        for p in all_permutations(4, ENUMERATION_BOUND).unwrap() {
            let e = p.to_ranking(&u).unwrap();
            assert!(close(model.event_prob(&e).unwrap().value, probs[p.lex_index()], 1e-10));
        }
    }
}
