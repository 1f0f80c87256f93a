mod common;

use std::collections::BTreeSet;

use common::{formula_strategy, structure_strategy, thread_fulfilling, Run, Semantics};
use ctlstar_core::closure::{Closure, MemberSet};
use ctlstar_core::formula::FormulaTable;
use ctlstar_core::hue::{big_rx, is_colour, ltl_sat_oracle, ltl_witness, rx, HueCap};
use ctlstar_core::model::{path_exists, realizable_hues, verify, Lasso, TransitionStructure};
use proptest::prelude::*;

const RUN_LEN: usize = 7;

fn as_run(l: &Lasso) -> Run {
    Run {
        states: l.prefix.iter().chain(&l.cycle).copied().collect(),
        back: l.prefix.len(),
    }
}

/// The structure that walks a hue lasso once, labelled by its atoms.
fn hue_path(c: &Closure, prefix: &[MemberSet], cycle: &[MemberSet]) -> TransitionStructure {
    let hues: Vec<&MemberSet> = prefix.iter().chain(cycle).collect();
    let labels = hues
        .iter()
        .map(|h| {
            h.iter()
                .filter_map(|m| c.atom_name_of(m).map(str::to_owned))
                .collect::<BTreeSet<_>>()
        })
        .collect();
    let n = hues.len();
    let edges = (0..n).map(|i| (i, if i + 1 < n { i + 1 } else { prefix.len() }));
    TransitionStructure::new(labels, edges, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn verify_matches_brute_force(g in formula_strategy(2, 8, true), m in structure_strategy(3)) {
        let mut t = FormulaTable::new();
        let f = t.parse(&g.render()).unwrap();
        let got = verify(&m, 0, &mut t, f, HueCap::default()).unwrap();
        let mut sem = Semantics::new(&t, &m, RUN_LEN);
        prop_assert_eq!(got.is_some(), sem.exists_path(0, f), "{}", g.render());
        if let Some(l) = got {
            prop_assert!(l.is_path_in(&m));
            prop_assert_eq!(l.state(0), 0);
            prop_assert!(sem.on_run(&as_run(&l), 0, f));
        }
    }

    #[test]
    fn path_exists_matches_brute_force(g in formula_strategy(2, 8, false), m in structure_strategy(3)) {
        let mut t = FormulaTable::new();
        let f = t.parse(&g.render()).unwrap();
        let got = path_exists(&m, 0, &mut t, f, HueCap::default()).unwrap();
        let mut sem = Semantics::new(&t, &m, RUN_LEN);
        prop_assert_eq!(got.is_some(), sem.exists_path(0, f), "{}", g.render());
        if let Some(l) = got {
            prop_assert!(l.is_path_in(&m));
            prop_assert!(sem.on_run(&as_run(&l), 0, f));
        }
    }

    #[test]
    fn realizable_hues_are_colours(g in formula_strategy(2, 8, true), m in structure_strategy(3)) {
        let mut t = FormulaTable::new();
        let f = t.parse(&g.render()).unwrap();
        let c = Closure::new(&mut t, f);
        let hues = realizable_hues(&m, &c, HueCap::default()).unwrap();
        for s in 0..m.state_count() {
            prop_assert!(is_colour(&c, &hues[s]));
            for &u in m.successors(s) {
                prop_assert!(big_rx(&c, &hues[s], &hues[u]));
            }
        }
        let root_held = hues[0].iter().any(|h| h.contains(c.root_member()));
        let mut sem = Semantics::new(&t, &m, RUN_LEN);
        prop_assert_eq!(root_held, sem.exists_path(0, f));
    }

    #[test]
    fn ltl_witnesses_step_and_hold(g in formula_strategy(2, 8, false)) {
        let mut t = FormulaTable::new();
        let f = t.parse(&g.render()).unwrap();
        let c = Closure::new(&mut t, f);
        let cap = HueCap::default();
        let w = ltl_witness(&c, cap).unwrap();
        prop_assert_eq!(w.is_some(), ltl_sat_oracle(&c, cap).unwrap());
        if let Some((prefix, cycle)) = w {
            let seq: Vec<&MemberSet> = prefix.iter().chain(&cycle).collect();
            prop_assert!(seq[0].contains(c.root_member()));
            for i in 0..seq.len() {
                let next = if i + 1 < seq.len() { seq[i + 1] } else { &cycle[0] };
                prop_assert!(rx(&c, seq[i], next));
            }
            prop_assert!(thread_fulfilling(&c, &t, &cycle));
            let m = hue_path(&c, &prefix, &cycle);
            let run = Run { states: (0..m.state_count()).collect(), back: prefix.len() };
            let mut sem = Semantics::new(&t, &m, RUN_LEN);
            prop_assert!(sem.on_run(&run, 0, f), "{}", g.render());
        }
    }

    /// Any small structure satisfying an A-free formula refutes an unsat answer.
    #[test]
    fn ltl_oracle_is_complete_on_small_models(g in formula_strategy(2, 8, false), m in structure_strategy(3)) {
        let mut t = FormulaTable::new();
        let f = t.parse(&g.render()).unwrap();
        let mut sem = Semantics::new(&t, &m, RUN_LEN);
        if sem.exists_path(0, f) {
            let c = Closure::new(&mut t, f);
            prop_assert!(ltl_sat_oracle(&c, HueCap::default()).unwrap(), "{}", g.render());
        }
    }
}
