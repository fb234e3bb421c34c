//! Rainworm machines: runs against a name-level rewriting oracle, the
//! configuration invariants, predecessor bounds, and the finite model built
//! backwards from a halting run.

use std::collections::BTreeSet;

use proptest::prelude::*;
use redspider::codes::SkeletonCodes;
use redspider::greengraph::{has_12_pattern, parity_glasses};
use redspider::rainworm::model::{
    ab_paths, beta_edges_in_m0, check_snapshot, compile_to_greengraph, find_matches, finite_model_procedure,
    forward_simulation, full_counterexample, reachable, trail_grid,
};
use redspider::rainworm::{delta_halt, delta_halt_long, delta_loop, Machine, MachineJson, Shape};
use redspider::sepexample::GridStatus;

fn machine(j: &MachineJson) -> Machine {
    Machine::from_json(j, &SkeletonCodes::default()).unwrap()
}

/// One rewriting step on symbol names, straight from the JSON instructions.
fn oracle_step(j: &MachineJson, w: &[String]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for ins in &j.instructions {
        let n = ins.lhs.len();
        for p in 0..(w.len() + 1).saturating_sub(n) {
            if w[p..p + n] == ins.lhs[..] {
                let mut v = w[..p].to_vec();
                v.extend(ins.rhs.iter().cloned());
                v.extend(w[p + n..].iter().cloned());
                out.push(v);
            }
        }
    }
    out
}

fn names(m: &Machine, w: &[u32]) -> Vec<String> {
    w.iter().map(|c| m.table.names[c].clone()).collect()
}

#[test]
fn runs_agree_with_the_name_level_oracle() {
    for (j, budget) in [(delta_halt(), 10), (delta_halt_long(), 100), (delta_loop(), 2000)] {
        let m = machine(&j);
        let run = m.run(budget).unwrap();
        let mut cur: Vec<String> = vec!["α".into(), "η11".into()];
        for w in &run.trace {
            assert_eq!(names(&m, w), cur);
            let next = oracle_step(&j, &cur);
            assert!(next.len() <= 1, "two redexes in {cur:?}");
            match next.into_iter().next() {
                Some(n) => cur = n,
                None => break,
            }
        }
    }
}

#[test]
fn fixture_run_lengths() {
    let halt = machine(&delta_halt()).run(10).unwrap();
    assert!(halt.halted);
    assert_eq!(halt.steps, 1);
    let long = machine(&delta_halt_long());
    let r = long.run(100).unwrap();
    assert!(r.halted);
    assert_eq!(r.steps, 13);
    assert_eq!(long.word(r.final_config().unwrap()), "α β1 β0 γ1 r0 b1 ω0");
    assert!(!machine(&delta_loop()).run(5000).unwrap().halted);
}

#[test]
fn reachable_configurations_are_well_formed() {
    for (j, budget) in [(delta_halt(), 10), (delta_halt_long(), 100), (delta_loop(), 3000)] {
        let m = machine(&j);
        for w in &m.run(budget).unwrap().trace {
            let c = m.check_config(w);
            assert!(c.all(), "{}: {c:?}", m.word(w));
            assert!(m.predecessors(w).len() <= m.predecessor_bound(w));
            for p in m.predecessors(w) {
                assert!(m.check_config(&p).first_three(), "predecessor {} of {}", m.word(&p), m.word(w));
            }
        }
    }
}

#[test]
fn the_loop_trail_keeps_growing() {
    let m = machine(&delta_loop());
    let run = m.run(3000).unwrap();
    let trails: Vec<usize> = run.trace.iter().map(|w| m.slime_trail(w).unwrap().len()).collect();
    assert!(trails.windows(2).all(|p| p[0] <= p[1]));
    assert!(*trails.last().unwrap() > 5);
}

#[test]
fn halting_closures_are_finite_and_lead_to_the_end() {
    for j in [delta_halt(), delta_halt_long()] {
        let m = machine(&j);
        let run = m.run(100).unwrap();
        let u = run.final_config().unwrap().clone();
        let (closure, exhausted) = m.predecessor_closure(&u, 10_000);
        assert!(exhausted);
        assert!(closure.contains(&m.initial()));
        for w in &closure {
            let k = m.steps_to(w, &u, run.steps).unwrap();
            assert!(k.is_some(), "{} does not reach u", m.word(w));
        }
    }
}

#[test]
fn validation_flags_bad_machines() {
    let mut j = delta_loop();
    j.instructions[1].rhs = vec!["b0".into(), "b0".into()];
    assert!(!machine(&j).validate().is_empty());

    let mut j = delta_loop();
    j.instructions.push(j.instructions[3].clone());
    assert!(Machine::from_json(&j, &SkeletonCodes::default()).is_err() || !machine(&j).validate().is_empty());

    let mut j = delta_halt();
    j.instructions[0].lhs = vec!["nope".into()];
    assert!(Machine::from_json(&j, &SkeletonCodes::default()).is_err());
}

#[test]
fn compiled_rules_follow_the_instruction_count() {
    for j in [delta_halt(), delta_loop()] {
        let m = machine(&j);
        let d1 = m.instructions.iter().filter(|i| i.shape == Shape::D1).count();
        assert_eq!(compile_to_greengraph(&m).len(), 2 + m.instructions.len() - d1);
    }
}

#[test]
fn forward_simulation_reaches_every_short_run() {
    let m = machine(&delta_loop());
    assert_eq!(reachable(&m, 6).unwrap().len(), 7);
    let r = forward_simulation(&m, 6, 20).unwrap();
    assert!(r.missing.is_empty(), "{:?}", r.missing);
    assert_eq!(r.stage, Some(7));
}

#[test]
fn finite_models_keep_their_invariants() {
    for j in [delta_halt(), delta_halt_long()] {
        let m = machine(&j);
        let run = m.run(100).unwrap();
        let fm = finite_model_procedure(&m, &run, true, 100_000).unwrap();
        assert_eq!(fm.k, run.steps);
        assert_eq!(fm.added.last(), Some(&0));
        for (i, g) in fm.snapshots.iter().enumerate() {
            let c = check_snapshot(&m, &fm, i, g, 100_000).unwrap();
            assert!(c.ok(), "round {i}: {c:?}");
        }
        assert!(find_matches(&fm.model, &fm.rules).iter().all(|x| !x.interesting));
        assert!(beta_edges_in_m0(&m, &fm));
        assert!(has_12_pattern(&fm.model).is_none());
        let pg = parity_glasses(&fm.model).unwrap();
        assert!(ab_paths(&pg, 10_000).is_some());
    }
}

#[test]
fn halting_counterexample_separates_at_level_zero() {
    let m = machine(&delta_halt());
    let run = m.run(10).unwrap();
    let fm = finite_model_procedure(&m, &run, false, 10_000).unwrap();
    let (g, cx) = full_counterexample(&m, &fm, 60, true).unwrap();
    assert!(cx.ok(), "{cx:?}");
    assert!(cx.fixpoint && cx.has_seed && !cx.pattern);
    assert_eq!(cx.edges, g.num_edges());
    let l0 = cx.level0.unwrap();
    assert!(l0.satisfies_tgds);
    assert!(!l0.holds);
}

#[test]
fn trails_of_different_lengths_make_a_pattern() {
    let m = machine(&delta_loop());
    assert_eq!(trail_grid(&m, 1, 2, 30).status, GridStatus::Pattern);
    assert_ne!(trail_grid(&m, 2, 2, 20).status, GridStatus::Pattern);
}

fn arb_word(m: &Machine) -> impl Strategy<Value = Vec<u32>> {
    let codes: Vec<u32> = m.classes.keys().copied().collect();
    prop::collection::vec(prop::sample::select(codes), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    /// On arbitrary words, `predecessors` inverts one oracle step.
    #[test]
    fn predecessors_match_the_oracle(w in arb_word(&machine(&delta_loop()))) {
        let j = delta_loop();
        let m = machine(&j);
        let target = names(&m, &w);
        let preds: BTreeSet<Vec<String>> = m.predecessors(&w).iter().map(|p| names(&m, p)).collect();
        for p in &preds {
            prop_assert!(oracle_step(&j, p).contains(&target));
        }
        prop_assert!(preds.len() <= m.predecessor_bound(&w));
    }

    #[test]
    fn step_matches_the_oracle(w in arb_word(&machine(&delta_loop()))) {
        let j = delta_loop();
        let m = machine(&j);
        let expect = oracle_step(&j, &names(&m, &w));
        match m.step(&w) {
            Ok(None) => prop_assert!(expect.is_empty()),
            Ok(Some(v)) => prop_assert_eq!(vec![names(&m, &v)], expect),
            Err(_) => prop_assert!(expect.len() > 1),
        }
    }
}
