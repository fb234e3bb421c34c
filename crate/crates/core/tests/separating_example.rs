//! The infinite-path example: its words, the grid dichotomy on two-path
//! graphs, and the honest grids `M_t` with their truncations.

use std::collections::BTreeSet;

use redspider::codes::SkeletonCodes;
use redspider::greengraph::{has_12_pattern, l2_tgds, seed_graph, words};
use redspider::rewrite::saturate;
use redspider::sepexample::{
    build_m_truncated, build_mt, build_two_path, check_foam, grid_budget, grid_experiment, t_inf,
    truncation_violations, GridStatus,
};

/// `α(β1β0)^j η1` for `j ≤ k` and `α(β1β0)^j β1 η0` for `j < k`, built
/// directly from the letter codes.
fn expected_words(sk: &SkeletonCodes, k: usize) -> BTreeSet<Vec<u32>> {
    let square = |j: usize| -> Vec<u32> {
        let mut w = vec![sk.alpha];
        for _ in 0..j {
            w.extend([sk.beta1, sk.beta0]);
        }
        w
    };
    let mut out = BTreeSet::new();
    for j in 0..=k {
        let mut w = square(j);
        w.push(sk.eta1);
        out.insert(w);
    }
    for j in 0..k {
        let mut w = square(j);
        w.extend([sk.beta1, sk.eta0]);
        out.insert(w);
    }
    out
}

#[test]
fn path_words_are_exactly_the_two_families() {
    let sk = SkeletonCodes::default();
    let tgds = l2_tgds(&t_inf(&sk));
    for k in 1..=10 {
        let (g, _) = saturate(&tgds, &seed_graph(), 2 * k + 2);
        let expect = expected_words(&sk, k);
        assert_eq!(words(&g, 2 * k + 2).unwrap(), expect, "k = {k}");
        // One more letter admits exactly the next β1 η0 word.
        let mut longer = expect.clone();
        longer.extend(expected_words(&sk, k + 1).into_iter().filter(|w| w.len() == 2 * k + 3));
        assert_eq!(words(&g, 2 * k + 3).unwrap(), longer, "k = {k}, inclusive");
    }
}

#[test]
fn two_path_graph_has_the_requested_lengths() {
    let sk = SkeletonCodes::default();
    let g = build_two_path(&sk, 2, 3);
    let ws = words(&g, 10).unwrap();
    assert!(ws.iter().all(|w| w[0] == sk.alpha));
    // 1 seed edge + two paths of 1 + 2t edges.
    assert_eq!(g.num_edges(), 1 + 5 + 7);
}

#[test]
fn grids_find_a_pattern_iff_lengths_differ() {
    let sk = SkeletonCodes::default();
    for t in 1..=3 {
        for tp in 1..=3 {
            let r = grid_experiment(&sk, t, tp, grid_budget(t, tp));
            // The path rules never stop, so equal lengths end inconclusive.
            assert_eq!(r.pattern_found, t != tp, "t = {t}, t' = {tp}: {:?}", r.status);
            assert_eq!(r.status == GridStatus::Pattern, r.pattern_found);
        }
    }
}

#[test]
fn a_tiny_budget_is_inconclusive() {
    let sk = SkeletonCodes::default();
    let r = grid_experiment(&sk, 2, 2, 2);
    assert_eq!(r.status, GridStatus::Inconclusive);
    assert_eq!(r.stages, 2);
}

#[test]
fn honest_grids_have_no_pattern() {
    let sk = SkeletonCodes::default();
    for t in 1..=4 {
        let mt = build_mt(&sk, t);
        assert!(has_12_pattern(&mt).is_none(), "M_{t}");
        assert!(mt.lookup(&format!("b{}", t + 1)).is_some());
    }
}

#[test]
fn truncations_are_sound_up_to_the_frontier() {
    let sk = SkeletonCodes::default();
    for n in 1..=8 {
        let m = build_m_truncated(&sk, n);
        assert!(has_12_pattern(&m.graph).is_none(), "n = {n}");
        let v = truncation_violations(&sk, &m);
        assert!(v.non_local.is_empty(), "n = {n}: {:?}", v.non_local);
        let foam = check_foam(&sk, &m);
        assert!(foam.holds(), "n = {n}: {foam:?}");
    }
}

#[test]
fn truncations_grow_with_depth() {
    let sk = SkeletonCodes::default();
    let sizes: Vec<usize> = (1..=6).map(|n| build_m_truncated(&sk, n).graph.num_edges()).collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
}
