//! Hand-built tableaux, corpus access and shared search checks.

use std::sync::Arc;

use ctlstar_core::closure::{Closure, MemberKind};
use ctlstar_core::formula::{FormulaId, FormulaTable};
use ctlstar_core::hue::HueCap;
use ctlstar_core::model::verify;
use ctlstar_core::search::{solve, SearchConfig, Verdict, VerdictKind};
use ctlstar_core::tableau::{Tableau, UndoToken};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Run, Semantics};

pub const CORPUS: &str = include_str!("../data/corpus.txt");

/// Corpus entries as (expected verdict, source).
pub fn corpus() -> Vec<(VerdictKind, &'static str)> {
    CORPUS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (want, src) = l.split_once(char::is_whitespace).unwrap();
            let want = match want {
                "sat" => VerdictKind::Sat,
                "unsat" => VerdictKind::Unsat,
                other => panic!("bad verdict {other}"),
            };
            (want, src.trim())
        })
        .collect()
}

/// Settings under which unsat answers are trusted.
pub fn deciding() -> SearchConfig {
    SearchConfig {
        rep_cut: true,
        assume_bound_sufficient: true,
        branch_bound: 20,
        timeout: Some(std::time::Duration::from_secs(30)),
        ..SearchConfig::default()
    }
}

/// A sat verdict must carry a model and a lasso that a fresh check accepts.
pub fn certified(table: &mut FormulaTable, f: FormulaId, v: &Verdict) -> Result<(), String> {
    let (Some(m), Some(w)) = (&v.model, &v.witness) else {
        return Err("sat verdict without model or witness".into());
    };
    if !w.is_path_in(m) || w.state(0) != m.initial() {
        return Err("witness is not a path from the initial state".into());
    }
    if verify(m, m.initial(), table, f, HueCap::default())
        .map_err(|e| e.to_string())?
        .is_none()
    {
        return Err("model does not satisfy the formula".into());
    }
    if m.state_count() <= 6 {
        let run = Run {
            states: w.prefix.iter().chain(&w.cycle).copied().collect(),
            back: w.prefix.len(),
        };
        if !Semantics::new(table, m, 6).on_run(&run, 0, f) {
            return Err("brute-force semantics rejects the witness".into());
        }
    }
    Ok(())
}

// NTP loops

const NTP_SOURCE: &str = "(p U q) & (q U r) & (~p U X r) & F ~q & ~(p U r)";

pub fn ntp_closure() -> Arc<Closure> {
    let mut t = FormulaTable::new();
    let f = t.parse(NTP_SOURCE).unwrap();
    Arc::new(Closure::new(&mut t, f))
}

/// Slot-0 labels of a chain and the index its last node links back to.
pub fn loop_strategy(members: usize) -> impl Strategy<Value = (Vec<Vec<usize>>, usize)> {
    (1..=6usize).prop_flat_map(move |n| {
        let labels = proptest::collection::vec(proptest::collection::vec(0..members, 0..6), n);
        (labels, 0..n)
    })
}

/// Builds the chain and up-link; returns the tableau and the cycle labels.
pub fn build_loop(c: &Arc<Closure>, labels: &[Vec<usize>], back: usize) -> (Tableau, Vec<Vec<usize>>) {
    let mut tab = Tableau::with_closure(c.clone());
    let mut chain = vec![tab.root()];
    for _ in 1..labels.len() {
        let parent = *chain.last().unwrap();
        chain.push(tab.add_child(parent, 0));
    }
    for (&node, label) in chain.iter().zip(labels) {
        for &m in label {
            tab.add_member(node, 0, m);
        }
    }
    tab.link(*chain.last().unwrap(), 0, chain[back]);
    let cycle = chain[back..]
        .iter()
        .map(|&n| tab.node(n).unwrap().phue(0).to_vec())
        .collect();
    (tab, cycle)
}

/// Unwinds the periodic slot-0 sequence and checks every eventuality on
/// the cycle against the positions that follow it.
pub fn unwound_fulfilling(c: &Closure, cycle: &[Vec<usize>]) -> bool {
    let k = cycle.len();
    let unwound: Vec<&Vec<usize>> = (0..2 * k).map(|i| &cycle[i % k]).collect();
    (0..k).all(|i| {
        unwound[i].iter().all(|&m| match c.kind(m) {
            MemberKind::Until(_, b) => unwound[i..i + k].iter().any(|h| h.contains(&b)),
            _ => true,
        })
    })
}

// LG figures

pub struct Fixture {
    pub table: FormulaTable,
    pub tab: Tableau,
}

impl Fixture {
    pub fn new(root: &str) -> Self {
        let mut table = FormulaTable::new();
        let f = table.parse(root).unwrap();
        let c = Closure::new(&mut table, f);
        Fixture {
            table,
            tab: Tableau::with_closure(Arc::new(c)),
        }
    }

    pub fn add(&mut self, node: usize, slot: usize, srcs: &[&str]) {
        for src in srcs {
            let f = self.table.parse(src).unwrap();
            let m = self
                .tab
                .closure()
                .member_of(f)
                .unwrap_or_else(|| panic!("{src} not in closure"));
            self.tab.add_member(node, slot, m);
        }
    }

    pub fn lg_passes(&self) -> bool {
        self.tab.check_lg(HueCap::default()).unwrap().passed()
    }
}

/// Root `{p, X p}` loops to itself while claiming `A F ~p`.
pub fn lg_left() -> Fixture {
    let mut fx = Fixture::new("p & X p & A F ~p");
    fx.add(0, 0, &["p", "X p", "A F ~p"]);
    fx.add(0, 1, &["A F ~p"]);
    let leaf = fx.tab.add_child(0, 1);
    fx.add(leaf, 0, &["~p"]);
    fx.tab.link(0, 0, 0);
    fx
}

/// An allowable self-loop next to a leaf that can never be completed.
pub fn lg_right() -> Fixture {
    let mut fx = Fixture::new("p & X p & E (F ~p & X (G (p & q) & F ~q))");
    fx.add(0, 0, &["p", "X p"]);
    fx.add(0, 1, &["F ~p", "X (G (p & q) & F ~q)"]);
    fx.tab.link(0, 0, 0);
    let leaf = fx.tab.add_child(0, 1);
    fx.add(leaf, 0, &["~p", "G (p & q)", "F ~q"]);
    fx
}

/// Root with `G F p` and `G F q` phues; returns the two children.
pub fn lg_two_children() -> (Fixture, usize, usize) {
    let mut fx = Fixture::new("A F (G ~p | G ~q) & E G F p & E G F q");
    let all = "A F (G ~p | G ~q)";
    fx.add(0, 0, &[all, "G F p"]);
    fx.add(0, 1, &[all, "G F q"]);
    let a = fx.tab.add_child(0, 0);
    fx.add(a, 0, &["p"]);
    let b = fx.tab.add_child(0, 1);
    fx.add(b, 0, &["q"]);
    (fx, a, b)
}

pub fn lg_two_loops() -> Fixture {
    let (mut fx, a, b) = lg_two_children();
    fx.tab.link(a, 0, 0);
    fx.tab.link(b, 0, 0);
    fx
}

// kernel

pub const KERNEL_FORMULAS: &[&str] = &[
    "G F p & F G ~p",
    "E X p & E X ~p & A G E F q",
    "A F A G q -> A F G q",
    "~(p U q) & E (p U ~q) & A X X p",
    "(A G (p -> E X q)) & E F p & ~E G q",
];

/// Random walk over rule applications; every step is applied, undone,
/// compared against the snapshot and then re-applied. Returns the number
/// of apply/undo pairs checked.
pub fn apply_undo_pairs(src: &str, seed: u64, pairs: usize) -> Result<usize, String> {
    let mut table = FormulaTable::new();
    let f = table.parse(src).unwrap();
    let mut tab = Tableau::init(&mut table, f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stack: Vec<(UndoToken, String)> = Vec::new();
    let mut done = 0;
    let restore = |tab: &mut Tableau, tok: UndoToken, before: &str| -> Result<(), String> {
        tab.undo(tok).map_err(|e| e.to_string())?;
        if tab.serialize() != before {
            return Err(format!("{src}: undo did not restore the tableau"));
        }
        Ok(())
    };
    while done < pairs {
        let choices = tab.enumerate_choices(rng.random_bool(0.5));
        if choices.is_empty() || stack.len() > 60 || rng.random_bool(0.15) {
            match stack.pop() {
                Some((tok, before)) => restore(&mut tab, tok, &before)?,
                None if choices.is_empty() => break,
                None => {}
            }
            continue;
        }
        let r = &choices[rng.random_range(0..choices.len())];
        let before = tab.serialize();
        let Ok(tok) = tab.apply(r) else {
            if tab.serialize() != before {
                return Err(format!("{src}: failed apply left changes"));
            }
            continue;
        };
        restore(&mut tab, tok, &before)?;
        done += 1;
        let tok = tab.apply(r).map_err(|e| e.to_string())?;
        stack.push((tok, before));
    }
    while let Some((tok, before)) = stack.pop() {
        restore(&mut tab, tok, &before)?;
    }
    Ok(done)
}

/// Verdict, stats without wall time, and final tableau of one run.
pub fn fingerprint(src: &str, cfg: &SearchConfig) -> (String, Vec<(&'static str, u64)>, Option<String>) {
    let mut table = FormulaTable::new();
    let f = table.parse(src).unwrap();
    let v = solve(&mut table, f, cfg);
    let stats = v
        .stats
        .to_map()
        .into_iter()
        .filter(|(k, _)| *k != "elapsed_ms")
        .collect();
    (v.kind.to_string(), stats, v.tableau)
}
