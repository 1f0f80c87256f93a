//! Three-valued CTL* checking on (possibly partial) Kripke structures.
//!
//! State labels for `A`-formulas are computed innermost first. For a partial
//! structure every open state gets an edge to a wildcard node in may-mode,
//! so "may exist" over-approximates path existence in any extension and
//! "must exist" (no wildcard, no undecided labels) under-approximates it.

use std::collections::HashMap;
use std::rc::Rc;

use crate::closure::{Closure, MemberKind, MemberSet};
use crate::fulfil::{Fulfilment, Pair, ProductGraph, ProductNode};
use crate::hue::{enumerate_hues_within, HueCap, HueError};

/// A structure as seen by the checker, with atoms indexed by closure member.
#[derive(Debug, Clone)]
pub struct Kripke {
    pub succ: Vec<Vec<usize>>,
    pub open: Vec<bool>,
    /// Positive atom members true at each state; every other atom is false.
    pub atoms: Vec<MemberSet>,
}

impl Kripke {
    pub fn state_count(&self) -> usize {
        self.succ.len()
    }

    fn is_exact(&self) -> bool {
        !self.open.iter().any(|&o| o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    May,
    Must,
}

type HueKey = (MemberSet, MemberSet, MemberSet);

pub struct Checker<'a> {
    closure: &'a Closure,
    kripke: &'a Kripke,
    cap: HueCap,
    props: MemberSet,
    /// Props that may be true at each state.
    upper: Vec<MemberSet>,
    /// Props that are definitely true at each state.
    lower: Vec<MemberSet>,
    evaluated: MemberSet,
    hue_cache: HashMap<HueKey, Rc<Vec<MemberSet>>>,
}

impl<'a> Checker<'a> {
    pub fn new(closure: &'a Closure, kripke: &'a Kripke, cap: HueCap) -> Self {
        let mut props = closure.empty_set();
        for m in (0..closure.len()).filter(|&m| closure.is_positive(m)) {
            if matches!(closure.kind(m), MemberKind::Atom(_) | MemberKind::All(_)) {
                props.insert(m);
            }
        }
        let mut unknown_alls = props.clone();
        for &a in closure.atom_members() {
            unknown_alls.remove(a);
        }
        let lower: Vec<MemberSet> = kripke.atoms.clone();
        let upper = lower
            .iter()
            .map(|l| {
                let mut u = l.clone();
                u.union_with(&unknown_alls);
                u
            })
            .collect();
        Checker {
            closure,
            kripke,
            cap,
            props,
            upper,
            lower,
            evaluated: closure.empty_set(),
            hue_cache: HashMap::new(),
        }
    }

    /// Definite value of the state formula `m` at `s`, or `None` if open.
    pub fn state_value(&mut self, m: usize, s: usize) -> Result<Option<bool>, HueError> {
        let pos = if self.closure.is_positive(m) { m } else { self.closure.negation(m) };
        self.ensure(pos)?;
        let v = match (self.lower[s].contains(pos), self.upper[s].contains(pos)) {
            (true, _) => Some(true),
            (false, false) => Some(false),
            _ => None,
        };
        Ok(if pos == m { v } else { v.map(|b| !b) })
    }

    fn ensure(&mut self, m: usize) -> Result<(), HueError> {
        let MemberKind::All(body) = self.closure.kind(m) else {
            return Ok(());
        };
        if self.evaluated.contains(m) {
            return Ok(());
        }
        let seed = self.closure.negation(body);
        let mask = self.closure.path_mask([seed]);
        let seeds = MemberSet::with_members(self.closure.len(), [seed]);
        let may = self.product(&mask, Mode::May)?.states_with(&seeds);
        let must = if self.kripke.is_exact() {
            may.clone()
        } else {
            self.product(&mask, Mode::Must)?.states_with(&seeds)
        };
        for s in 0..self.kripke.state_count() {
            self.lower[s].remove(m);
            self.upper[s].remove(m);
            if !may[s] {
                self.lower[s].insert(m);
            }
            if !must[s] {
                self.upper[s].insert(m);
            }
        }
        self.evaluated.insert(m);
        Ok(())
    }

    fn hues_at(&mut self, s: usize, mask: &MemberSet, mode: Mode) -> Result<Rc<Vec<MemberSet>>, HueError> {
        let mut relevant = self.props.clone();
        relevant.intersect_with(mask);
        let mut forced_in = self.lower[s].clone();
        forced_in.intersect_with(&relevant);
        let mut possible = self.upper[s].clone();
        possible.intersect_with(&relevant);
        if mode == Mode::Must && possible != forced_in {
            return Ok(Rc::new(Vec::new()));
        }
        let mut forced_out = relevant;
        for m in possible.iter() {
            forced_out.remove(m);
        }
        let key = (mask.clone(), forced_in, forced_out);
        if let Some(h) = self.hue_cache.get(&key) {
            return Ok(h.clone());
        }
        let hues = Rc::new(enumerate_hues_within(self.closure, &key.0, &key.1, &key.2, self.cap)?);
        self.hue_cache.insert(key, hues.clone());
        Ok(hues)
    }

    /// The fulfilment product of the structure with hues over `mask`.
    pub fn product(&mut self, mask: &MemberSet, mode: Mode) -> Result<Product, HueError> {
        for m in mask.iter() {
            if matches!(self.closure.kind(m), MemberKind::All(_)) {
                self.ensure(m)?;
            }
        }
        let n = self.kripke.state_count();
        let with_wildcard = mode == Mode::May && !self.kripke.is_exact();
        let mut nodes = Vec::with_capacity(n + 1);
        for s in 0..n {
            let mut successors = self.kripke.succ[s].clone();
            if with_wildcard && self.kripke.open[s] {
                successors.push(n);
            }
            nodes.push(ProductNode {
                hues: self.hues_at(s, mask, mode)?.as_ref().clone(),
                successors,
                wildcard: false,
            });
        }
        if with_wildcard {
            nodes.push(ProductNode::wildcard(n));
        }
        let graph = ProductGraph::new(self.closure, mask.clone(), nodes);
        let fulfilment = Fulfilment::compute(&graph);
        Ok(Product {
            graph,
            fulfilment,
            states: n,
        })
    }
}

pub struct Product {
    graph: ProductGraph,
    fulfilment: Fulfilment,
    states: usize,
}

impl Product {
    pub fn alive_hues(&self, s: usize) -> impl Iterator<Item = &MemberSet> + '_ {
        self.fulfilment
            .alive_hues(&self.graph, s)
            .map(move |h| &self.graph.nodes()[s].hues[h])
    }

    fn start(&self, s: usize, required: &MemberSet) -> Option<usize> {
        self.fulfilment
            .alive_hues(&self.graph, s)
            .find(|&h| required.is_subset(&self.graph.nodes()[s].hues[h]))
    }

    /// Some alive hue at `s` contains every member of `required`.
    pub fn exists(&self, s: usize, required: &MemberSet) -> bool {
        self.start(s, required).is_some()
    }

    pub fn states_with(&self, required: &MemberSet) -> Vec<bool> {
        (0..self.states).map(|s| self.exists(s, required)).collect()
    }

    /// A fulfilling run from `s` as `(prefix, loop)` of states and hues.
    pub fn witness(&self, s: usize, required: &MemberSet) -> Option<(Vec<Pair>, Vec<Pair>)> {
        let h = self.start(s, required)?;
        self.fulfilment.lasso(&self.graph, (s, h))
    }

    pub fn hue(&self, (s, h): Pair) -> &MemberSet {
        &self.graph.nodes()[s].hues[h]
    }
}
