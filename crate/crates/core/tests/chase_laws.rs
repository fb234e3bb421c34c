//! Laws of the green-red chase on random small query sets and instances.

use proptest::prelude::*;
use redspider::chase::{chase, check_determinacy_condition, satisfies_all, tgds_of_queries};
use redspider::relcore::{dalt, exists_homomorphism, paint, Color, ConjunctiveQuery, Structure};

/// A query over `E/2`, `F/2` from atom triples `(pred, x, y)` on variables
/// `v0..v3`, with the variables selected by `free_mask` free.
fn query(atoms: &[(bool, usize, usize)], free_mask: u8) -> ConjunctiveQuery {
    let mut st = Structure::new();
    st.declare_predicate("E", 2).unwrap();
    st.declare_predicate("F", 2).unwrap();
    for &(e, x, y) in atoms {
        let (x, y) = (format!("v{x}"), format!("v{y}"));
        st.add_atom(if e { "E" } else { "F" }, &[&x, &y]).unwrap();
    }
    let free: Vec<String> = (0..4)
        .filter(|i| free_mask & (1 << i) != 0)
        .map(|i| format!("v{i}"))
        .filter(|n| st.lookup(n).is_some())
        .collect();
    let refs: Vec<&str> = free.iter().map(String::as_str).collect();
    ConjunctiveQuery::new(st, &refs).unwrap()
}

fn instance(atoms: &[(bool, usize, usize)]) -> Structure {
    let mut st = Structure::new();
    st.declare_predicate("E", 2).unwrap();
    st.declare_predicate("F", 2).unwrap();
    for &(e, x, y) in atoms {
        let (x, y) = (format!("d{x}"), format!("d{y}"));
        st.add_atom(if e { "E" } else { "F" }, &[&x, &y]).unwrap();
    }
    st
}

fn arb_atoms(vars: usize, max: usize) -> impl Strategy<Value = Vec<(bool, usize, usize)>> {
    prop::collection::vec((any::<bool>(), 0..vars, 0..vars), 1..=max)
}

fn arb_queries() -> impl Strategy<Value = Vec<(String, ConjunctiveQuery)>> {
    prop::collection::vec((arb_atoms(4, 3), any::<u8>()), 1..=3).prop_map(|qs| {
        qs.iter()
            .enumerate()
            .map(|(i, (a, m))| (format!("q{i}"), query(a, *m)))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    /// Every chase stage maps back onto the instance, identically on it.
    #[test]
    fn chase_collapses_onto_the_instance(qs in arb_queries(), d in arb_atoms(5, 8)) {
        let d = instance(&d);
        let ts = tgds_of_queries(&qs).unwrap();
        let r = chase(&ts, &paint(&d, Color::Green).unwrap(), 4);
        let flat = dalt(&r.structure);
        let target = dalt(&d);
        let seed: Vec<_> = target
            .elements()
            .filter_map(|e| flat.lookup(target.name(e)).map(|f| (f, e)))
            .collect();
        prop_assert!(exists_homomorphism(&flat, &target, &seed));
    }

    /// A fixpoint of the chase satisfies every generated TGD.
    #[test]
    fn fixpoints_are_models(qs in arb_queries(), d in arb_atoms(4, 5)) {
        let ts = tgds_of_queries(&qs).unwrap();
        let r = chase(&ts, &paint(&instance(&d), Color::Green).unwrap(), 8);
        if r.reached_fixpoint {
            prop_assert!(satisfies_all(&ts, &r.structure));
        }
    }

    /// A query among the views is always determined.
    #[test]
    fn view_queries_are_determined(qs in arb_queries(), d in arb_atoms(4, 5)) {
        let ts = tgds_of_queries(&qs).unwrap();
        let r = chase(&ts, &paint(&instance(&d), Color::Green).unwrap(), 8);
        if r.reached_fixpoint {
            let q0 = qs[0].1.clone();
            let check = check_determinacy_condition(
                &qs.iter().map(|(_, q)| q.clone()).collect::<Vec<_>>(),
                &q0,
                &r.structure,
            ).unwrap();
            prop_assert!(check.holds);
        }
    }
}
