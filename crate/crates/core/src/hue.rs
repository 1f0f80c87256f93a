//! Hues, colours and the successor relations between them.
//!
//! Every routine works on [`MemberSet`]s over a [`Closure`]. The `*_within`
//! variants restrict the hue conditions to a sub-mask of the closure, which
//! is how the model checker builds small per-formula hue spaces.

use thiserror::Error;

use crate::closure::{Closure, MemberKind, MemberSet};
use crate::fulfil::{Fulfilment, ProductGraph, ProductNode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HueError {
    #[error("hue enumeration exceeded the cap of 2^{cap} hues")]
    CapExceeded { cap: u32 },
    #[error("formula contains a path quantifier; the linear-time oracle needs an A-free formula")]
    NotLinear,
}

/// Limit on how many hues one enumeration may produce, as a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HueCap(pub u32);

impl HueCap {
    pub fn max_hues(self) -> usize {
        if self.0 >= usize::BITS - 1 {
            usize::MAX
        } else {
            1usize << self.0
        }
    }
}

impl Default for HueCap {
    fn default() -> Self {
        HueCap(22)
    }
}

pub fn is_hue(closure: &Closure, set: &MemberSet) -> bool {
    is_hue_within(closure, &closure.full_set(), set)
}

/// H1–H4 restricted to `mask`. The constant `true` must be present whenever
/// it is part of the mask.
pub fn is_hue_within(closure: &Closure, mask: &MemberSet, set: &MemberSet) -> bool {
    if !closure.is_mpc_within(mask, set) {
        return false;
    }
    for m in mask.iter() {
        match closure.kind(m) {
            MemberKind::True => {
                if !set.contains(m) {
                    return false;
                }
            }
            MemberKind::Until(a, b) if mask.contains(a) && mask.contains(b) => {
                let u = set.contains(m);
                if u && !set.contains(b) && !set.contains(a) {
                    return false;
                }
                if !u && set.contains(b) {
                    return false;
                }
            }
            MemberKind::All(a) if mask.contains(a)
                && set.contains(m) && !set.contains(a) => {
                    return false;
                }
            _ => {}
        }
    }
    true
}

pub fn enumerate_hues(closure: &Closure, cap: HueCap) -> Result<Vec<MemberSet>, HueError> {
    let empty = closure.empty_set();
    enumerate_hues_within(closure, &closure.full_set(), &empty, &empty, cap)
}

/// All hues over `mask` that contain `forced_in` and avoid `forced_out`,
/// in lexicographic order of the per-pair choices.
///
/// One member is picked per negation pair (children first); conjunctions,
/// negation chains and most `U`/`A` pairs are then forced, so the search
/// only branches on genuinely free pairs.
pub fn enumerate_hues_within(
    closure: &Closure,
    mask: &MemberSet,
    forced_in: &MemberSet,
    forced_out: &MemberSet,
    cap: HueCap,
) -> Result<Vec<MemberSet>, HueError> {
    let pairs: Vec<usize> = (0..closure.pair_count())
        .map(|p| 2 * p)
        .filter(|&m| mask.contains(m))
        .collect();
    let mut out = Vec::new();
    let mut current = closure.empty_set();
    let mut search = Enumeration {
        closure,
        mask,
        forced_in,
        forced_out,
        pairs: &pairs,
        limit: cap.max_hues(),
        cap,
        out: &mut out,
    };
    search.descend(0, &mut current)?;
    Ok(out)
}

struct Enumeration<'a> {
    closure: &'a Closure,
    mask: &'a MemberSet,
    forced_in: &'a MemberSet,
    forced_out: &'a MemberSet,
    pairs: &'a [usize],
    limit: usize,
    cap: HueCap,
    out: &'a mut Vec<MemberSet>,
}

impl Enumeration<'_> {
    /// `Some(true)` forces the positive member, `Some(false)` the negative,
    /// `None` leaves the pair free.
    fn forced(&self, pos: usize, current: &MemberSet) -> Option<bool> {
        match self.closure.kind(pos) {
            MemberKind::True => Some(true),
            MemberKind::Atom(_) | MemberKind::Next(_) => None,
            MemberKind::Not(a) => Some(!current.contains(a)),
            MemberKind::And(a, b) => Some(current.contains(a) && current.contains(b)),
            MemberKind::Until(a, b) => {
                if current.contains(b) {
                    Some(true)
                } else if !current.contains(a) {
                    Some(false)
                } else {
                    None
                }
            }
            MemberKind::All(a) => {
                if self.mask.contains(a) && !current.contains(a) {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }

    fn descend(&mut self, idx: usize, current: &mut MemberSet) -> Result<(), HueError> {
        if idx == self.pairs.len() {
            if self.out.len() >= self.limit {
                return Err(HueError::CapExceeded { cap: self.cap.0 });
            }
            self.out.push(current.clone());
            return Ok(());
        }
        let pos = self.pairs[idx];
        let neg = pos + 1;
        let options: &[bool] = match self.forced(pos, current) {
            Some(true) => &[true],
            Some(false) => &[false],
            None => &[true, false],
        };
        for &take_pos in options {
            let (chosen, other) = if take_pos { (pos, neg) } else { (neg, pos) };
            if self.forced_out.contains(chosen) || self.forced_in.contains(other) {
                continue;
            }
            current.insert(chosen);
            self.descend(idx + 1, current)?;
            current.remove(chosen);
        }
        Ok(())
    }
}

/// Members every `r_X`-successor of `a` must contain (R1–R4). Works on
/// phues as well as hues.
pub fn successor_requirements(closure: &Closure, a: &MemberSet) -> MemberSet {
    let mut req = closure.empty_set();
    for m in a.iter() {
        match closure.kind(m) {
            MemberKind::Next(x) => {
                req.insert(x);
            }
            MemberKind::Until(_, b) => {
                if a.contains(closure.negation(b)) {
                    req.insert(m);
                }
            }
            MemberKind::Not(inner) => match closure.kind(inner) {
                MemberKind::Next(x) => {
                    req.insert(closure.negation(x));
                }
                MemberKind::Until(x, _)
                    if a.contains(x) => {
                        req.insert(m);
                    }
                _ => {}
            },
            _ => {}
        }
    }
    req
}

pub fn rx(closure: &Closure, a: &MemberSet, b: &MemberSet) -> bool {
    successor_requirements(closure, a).is_subset(b)
}

/// Same-state compatibility: agreement on atoms (A1) and on `A`-formulas (A2).
pub fn ra(closure: &Closure, a: &MemberSet, b: &MemberSet) -> bool {
    (0..closure.len()).filter(|&m| closure.is_positive(m)).all(|m| {
        match closure.kind(m) {
            MemberKind::Atom(_) | MemberKind::All(_) => a.contains(m) == b.contains(m),
            _ => true,
        }
    })
}

pub fn is_colour(closure: &Closure, hues: &[MemberSet]) -> bool {
    if hues.is_empty() || !hues.iter().all(|h| is_hue(closure, h)) {
        return false;
    }
    for (i, a) in hues.iter().enumerate() {
        if !hues[i + 1..].iter().all(|b| ra(closure, a, b)) {
            return false;
        }
    }
    for a in hues {
        for m in a.iter() {
            if let MemberKind::Not(inner) = closure.kind(m) {
                if let MemberKind::All(body) = closure.kind(inner) {
                    let witness = closure.negation(body);
                    if !hues.iter().any(|b| b.contains(witness)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `c R_X d`: every hue of `d` has an `r_X`-predecessor in `c`.
pub fn big_rx(closure: &Closure, c: &[MemberSet], d: &[MemberSet]) -> bool {
    let reqs: Vec<MemberSet> = c.iter().map(|a| successor_requirements(closure, a)).collect();
    d.iter().all(|b| reqs.iter().any(|r| r.is_subset(b)))
}

/// Decides satisfiability of an `A`-free formula (the closure root) by
/// looking for a fulfilling path in the hue graph.
pub fn ltl_sat_oracle(closure: &Closure, cap: HueCap) -> Result<bool, HueError> {
    Ok(ltl_witness(closure, cap)?.is_some())
}

/// Like [`ltl_sat_oracle`] but returns a witnessing hue lasso.
pub fn ltl_witness(
    closure: &Closure,
    cap: HueCap,
) -> Result<Option<(Vec<MemberSet>, Vec<MemberSet>)>, HueError> {
    let has_all = (0..closure.len()).any(|m| matches!(closure.kind(m), MemberKind::All(_)));
    if has_all {
        return Err(HueError::NotLinear);
    }
    let hues = enumerate_hues(closure, cap)?;
    let graph = ProductGraph::new(
        closure,
        closure.full_set(),
        vec![ProductNode {
            hues,
            successors: vec![0],
            wildcard: false,
        }],
    );
    let fulfilment = Fulfilment::compute(&graph);
    let root = closure.root_member();
    let start = graph.nodes()[0]
        .hues
        .iter()
        .enumerate()
        .find(|(h, hue)| hue.contains(root) && fulfilment.alive(&graph, (0, *h)))
        .map(|(h, _)| h);
    Ok(start.map(|h| {
        let (prefix, cycle) = fulfilment
            .lasso(&graph, (0, h))
            .expect("alive pair has a fulfilling lasso");
        let to_hues = |v: Vec<(usize, usize)>| {
            v.into_iter()
                .map(|(n, h)| graph.nodes()[n].hues[h].clone())
                .collect::<Vec<_>>()
        };
        (to_hues(prefix), to_hues(cycle))
    }))
}
