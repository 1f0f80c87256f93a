//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here goes through the hue or tableau code: formulas are
//! evaluated by direct recursion over the core syntax tree on ultimately
//! periodic paths.

#![allow(dead_code)]

pub mod fixtures;

use std::collections::{BTreeSet, HashMap};

use ctlstar_core::closure::{Closure, MemberSet};
use ctlstar_core::formula::{FormulaId, FormulaTable, Kind};
use ctlstar_core::model::TransitionStructure;
use proptest::prelude::*;

/// A lasso as a plain state sequence: positions `0..states.len()`, with
/// the last position followed by `states[back]`.
#[derive(Debug, Clone)]
pub struct Run {
    pub states: Vec<usize>,
    pub back: usize,
}

impl Run {
    fn next(&self, i: usize) -> usize {
        if i + 1 < self.states.len() {
            i + 1
        } else {
            self.back
        }
    }
}

/// All lassos from `s` with at most `max_len` distinct positions.
pub fn runs_from(m: &TransitionStructure, s: usize, max_len: usize) -> Vec<Run> {
    let mut out = Vec::new();
    let mut path = vec![s];
    extend_runs(m, &mut path, max_len, &mut out);
    out
}

fn extend_runs(m: &TransitionStructure, path: &mut Vec<usize>, max_len: usize, out: &mut Vec<Run>) {
    let last = *path.last().unwrap();
    for &n in m.successors(last) {
        for (k, &st) in path.iter().enumerate() {
            if st == n {
                out.push(Run {
                    states: path.clone(),
                    back: k,
                });
            }
        }
        if path.len() < max_len {
            path.push(n);
            extend_runs(m, path, max_len, out);
            path.pop();
        }
    }
}

/// Brute-force CTL* semantics: `A` quantifies over all lassos of bounded
/// length, which is exact for small structures and formulas.
pub struct Semantics<'a> {
    pub table: &'a FormulaTable,
    pub m: &'a TransitionStructure,
    pub max_len: usize,
    state_memo: HashMap<(FormulaId, usize), bool>,
}

impl<'a> Semantics<'a> {
    pub fn new(table: &'a FormulaTable, m: &'a TransitionStructure, max_len: usize) -> Self {
        Semantics {
            table,
            m,
            max_len,
            state_memo: HashMap::new(),
        }
    }

    /// Some fullpath from `s` satisfies `f`.
    pub fn exists_path(&mut self, s: usize, f: FormulaId) -> bool {
        runs_from(self.m, s, self.max_len)
            .iter()
            .any(|r| self.on_run(r, 0, f))
    }

    fn all_paths(&mut self, s: usize, f: FormulaId) -> bool {
        if let Some(&v) = self.state_memo.get(&(f, s)) {
            return v;
        }
        let v = runs_from(self.m, s, self.max_len)
            .iter()
            .all(|r| self.on_run(r, 0, f));
        self.state_memo.insert((f, s), v);
        v
    }

    pub fn on_run(&mut self, r: &Run, i: usize, f: FormulaId) -> bool {
        match self.table.kind(f) {
            Kind::True => true,
            Kind::Atom(a) => self.m.atoms(r.states[i]).contains(self.table.atom_name(a)),
            Kind::Not(g) => !self.on_run(r, i, g),
            Kind::And(a, b) => self.on_run(r, i, a) && self.on_run(r, i, b),
            Kind::Next(g) => self.on_run(r, r.next(i), g),
            Kind::Until(a, b) => {
                // every position is revisited within len steps
                let mut j = i;
                for _ in 0..=r.states.len() {
                    if self.on_run(r, j, b) {
                        return true;
                    }
                    if !self.on_run(r, j, a) {
                        return false;
                    }
                    j = r.next(j);
                }
                false
            }
            Kind::All(g) => self.all_paths(r.states[i], g),
        }
    }
}

/// Direct check that an ultimately periodic hue sequence fulfils every
/// eventuality: each `a U b` at a position sees `b` at or after it.
pub fn thread_fulfilling(closure: &Closure, table: &FormulaTable, cycle: &[MemberSet]) -> bool {
    let k = cycle.len();
    for i in 0..k {
        for m in cycle[i].iter() {
            if let Kind::Until(_, b) = table.kind(closure.formula(m)) {
                let bm = closure.member_of(b).unwrap();
                if !(0..k).any(|d| cycle[(i + d) % k].contains(bm)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Brute-force hue test straight from the definitions, over formula kinds.
pub fn brute_is_hue(closure: &Closure, table: &FormulaTable, set: &MemberSet) -> bool {
    let has = |f: FormulaId| closure.member_of(f).is_some_and(|m| set.contains(m));
    let in_cl = |f: FormulaId| closure.member_of(f).is_some();
    for m in 0..closure.len() {
        let f = closure.formula(m);
        let inside = set.contains(m);
        match table.kind(f) {
            Kind::True if !inside => return false,
            Kind::Not(g) if in_cl(g) && inside == has(g) => return false,
            Kind::And(a, b) if inside != (has(a) && has(b)) => return false,
            Kind::Until(a, b) => {
                if inside && !has(b) && !has(a) {
                    return false;
                }
                if !inside && has(b) {
                    return false;
                }
            }
            Kind::All(a) if inside && !has(a) => return false,
            _ => {}
        }
    }
    true
}

/// Every subset of the closure passing [`brute_is_hue`], in a canonical order.
pub fn brute_hues(closure: &Closure, table: &FormulaTable) -> BTreeSet<Vec<usize>> {
    let n = closure.len();
    assert!(n <= 16, "closure too large for subset enumeration");
    (0u32..(1 << n))
        .map(|bits| MemberSet::with_members(n, (0..n).filter(|i| bits & (1 << i) != 0)))
        .filter(|s| brute_is_hue(closure, table, s))
        .map(|s| s.to_vec())
        .collect()
}

/// Source text of a random core formula.
#[derive(Debug, Clone)]
pub enum Gen {
    Atom(u8),
    Not(Box<Gen>),
    And(Box<Gen>, Box<Gen>),
    Next(Box<Gen>),
    Until(Box<Gen>, Box<Gen>),
    All(Box<Gen>),
}

impl Gen {
    pub fn size(&self) -> usize {
        match self {
            Gen::Atom(_) => 1,
            Gen::Not(a) | Gen::Next(a) | Gen::All(a) => 1 + a.size(),
            Gen::And(a, b) | Gen::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Gen::Atom(i) => ["p", "q", "r"][*i as usize].to_string(),
            Gen::Not(a) => format!("~{}", a.render()),
            Gen::And(a, b) => format!("({} & {})", a.render(), b.render()),
            Gen::Next(a) => format!("X {}", a.render()),
            Gen::Until(a, b) => format!("({} U {})", a.render(), b.render()),
            Gen::All(a) => format!("A {}", a.render()),
        }
    }
}

/// Random formulas with at most `max_nodes` nodes over `atoms` atoms.
pub fn formula_strategy(atoms: u8, max_nodes: usize, with_all: bool) -> impl Strategy<Value = Gen> {
    let leaf = (0..atoms).prop_map(Gen::Atom);
    leaf.prop_recursive(5, 16, 2, move |inner| {
        let mut options: Vec<BoxedStrategy<Gen>> = vec![
            inner.clone().prop_map(|a| Gen::Not(Box::new(a))).boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Gen::And(Box::new(a), Box::new(b)))
                .boxed(),
            inner.clone().prop_map(|a| Gen::Next(Box::new(a))).boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Gen::Until(Box::new(a), Box::new(b)))
                .boxed(),
        ];
        if with_all {
            options.push(inner.prop_map(|a| Gen::All(Box::new(a))).boxed());
        }
        proptest::strategy::Union::new(options)
    })
    .prop_filter("node budget", move |g| g.size() <= max_nodes)
}

/// Random total structures with up to `max_states` states over p and q.
pub fn structure_strategy(max_states: usize) -> impl Strategy<Value = TransitionStructure> {
    (1..=max_states).prop_flat_map(|n| {
        let labels = proptest::collection::vec((any::<bool>(), any::<bool>()), n);
        let succ = proptest::collection::vec(proptest::collection::btree_set(0..n, 1..=n), n);
        (labels, succ).prop_map(move |(labels, succ)| {
            let labels = labels
                .into_iter()
                .map(|(p, q)| {
                    let mut s = BTreeSet::new();
                    if p {
                        s.insert("p".to_string());
                    }
                    if q {
                        s.insert("q".to_string());
                    }
                    s
                })
                .collect();
            let edges = succ
                .into_iter()
                .enumerate()
                .flat_map(|(a, bs)| bs.into_iter().map(move |b| (a, b)));
            TransitionStructure::new(labels, edges, 0).unwrap()
        })
    })
}
