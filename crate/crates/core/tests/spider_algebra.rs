//! The spider algebra rule against a set-theoretic oracle, and compile /
//! decompile on random swarms.

use std::collections::BTreeSet;

use proptest::prelude::*;
use redspider::chase::{apply_in_place, tgd_from_cq, triggers, Direction};
use redspider::relcore::Color;
use redspider::spider::{
    apply_spider_algebra, compile_swarm, decompile_structure, make_spider, spider_query, IdealSpider, LabelUniverse,
    Swarm,
};

const S: u32 = 12;

/// `(I', J')` matches `f^I_J` iff `I' ⊆ I` and `J' ⊆ J`; the product is
/// the opposite color with legs `(I \ I', J \ J')`.
fn oracle(upper: Option<u32>, lower: Option<u32>, sp: IdealSpider) -> Option<IdealSpider> {
    let subset = |small: Option<u32>, big: Option<u32>| small.is_none() || small == big;
    if !subset(sp.upper, upper) || !subset(sp.lower, lower) {
        return None;
    }
    let minus = |big: Option<u32>, small: Option<u32>| if big == small { None } else { big };
    let color = match sp.color {
        Color::Green => Color::Red,
        Color::Red => Color::Green,
    };
    Some(IdealSpider::new(color, minus(upper, sp.upper), minus(lower, sp.lower)))
}

fn options() -> Vec<Option<u32>> {
    std::iter::once(None).chain((1..=S).map(Some)).collect()
}

#[test]
fn algebra_function_matches_oracle_everywhere() {
    for &i in &options() {
        for &j in &options() {
            for color in [Color::Green, Color::Red] {
                for &i2 in &options() {
                    for &j2 in &options() {
                        let sp = IdealSpider::new(color, i2, j2);
                        assert_eq!(apply_spider_algebra(i, j, sp).ok(), oracle(i, j, sp), "f[{i:?}|{j:?}] on {sp}");
                    }
                }
            }
        }
    }
}

/// Every `(I, J, I', J')` with singleton or empty sets, both colors: the
/// single-spider TGD fires exactly when the oracle says so, and the spider
/// it creates is the oracle's.
#[test]
fn single_spider_tgds_realise_the_algebra() {
    let universe = LabelUniverse::new(S);
    let opts = options();
    let mut spiders = Vec::new();
    for c in [Color::Green, Color::Red] {
        for &i2 in &opts {
            for &j2 in &opts {
                let sp = IdealSpider::new(c, i2, j2);
                spiders.push((sp, make_spider(sp, S, "a", "b", "s.")));
            }
        }
    }
    let mut fired = 0usize;
    for &i in &opts {
        for &j in &opts {
            let f = spider_query(universe, i, j).unwrap();
            let g2r = tgd_from_cq(&f.canonical, Direction::GreenToRed, "f").unwrap();
            let r2g = tgd_from_cq(&f.canonical, Direction::RedToGreen, "f").unwrap();
            for (sp, d) in &spiders {
                let t = if sp.color == Color::Green { &g2r } else { &r2g };
                let found = triggers(d, t);
                let expect = oracle(i, j, *sp);
                assert_eq!(!found.is_empty(), expect.is_some(), "f[{i:?}|{j:?}] on {sp}");
                let Some(expect) = expect else { continue };
                assert_eq!(found.len(), 1);
                let mut out = d.clone();
                let mut counter = 0;
                let frontier = found.into_iter().next().unwrap();
                apply_in_place(&mut out, t, &frontier, &mut counter).expect("not witnessed");
                let m = decompile_structure(&out, S);
                let created: BTreeSet<IdealSpider> =
                    m.edges().iter().map(|e| e.label).filter(|l| l != sp).collect();
                assert_eq!(created, BTreeSet::from([expect]), "f[{i:?}|{j:?}] on {sp}");
                fired += 1;
            }
        }
    }
    // Matches per query: 1 + |I| choices of I' times 1 + |J| of J', per color.
    let per = |x: Option<u32>| 1 + usize::from(x.is_some());
    let expected: usize = opts.iter().map(|&i| opts.iter().map(|&j| 2 * per(i) * per(j)).sum::<usize>()).sum();
    assert_eq!(fired, expected);
}

fn arb_spider(s: u32) -> impl Strategy<Value = IdealSpider> {
    (
        prop_oneof![Just(Color::Green), Just(Color::Red)],
        prop::option::of(1..=s),
        prop::option::of(1..=s),
    )
        .prop_map(|(c, u, l)| IdealSpider::new(c, u, l))
}

fn arb_swarm() -> impl Strategy<Value = Swarm> {
    prop::collection::vec((arb_spider(6), 0usize..6, 0usize..6), 0..=10).prop_map(|edges| {
        let names = ["a", "b", "v1", "v2", "v3", "v4"];
        let mut m = Swarm::new();
        for (sp, x, y) in edges {
            m.add_named(sp, names[x], names[y]);
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn decompile_inverts_compile(m in arb_swarm()) {
        let back = decompile_structure(&compile_swarm(&m, 6), 6);
        prop_assert_eq!(back.named_edges(), m.named_edges());
    }

    #[test]
    fn algebra_result_is_ideal(i in prop::option::of(1u32..=S), j in prop::option::of(1u32..=S), sp in arb_spider(S)) {
        if let Ok(r) = apply_spider_algebra(i, j, sp) {
            prop_assert_ne!(r.color, sp.color);
            prop_assert!(r.upper.is_none() || r.upper == i);
            prop_assert!(r.lower.is_none() || r.lower == j);
        }
    }
}
