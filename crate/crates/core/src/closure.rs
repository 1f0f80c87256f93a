//! The closure set `cl φ`, indexed densely.
//!
//! Members come in negation pairs: index `2k` holds the positive member and
//! `2k + 1` its literal negation, so `negation(i) == i ^ 1`. A subformula
//! `¬ⁿχ` (χ not a negation) lives in pair `⌊n/2⌋` of χ's chain, which
//! collapses `¬¬χ` back onto `χ` when taking negations. Pairs are ordered
//! children-first.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::formula::{AtomId, FormulaId, FormulaTable, Kind};

/// A set of closure member indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemberSet(FixedBitSet);

impl MemberSet {
    pub fn new(capacity: usize) -> Self {
        MemberSet(FixedBitSet::with_capacity(capacity))
    }

    pub fn with_members(capacity: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(capacity);
        for m in members {
            s.insert(m);
        }
        s
    }

    #[inline]
    pub fn contains(&self, m: usize) -> bool {
        self.0.contains(m)
    }

    /// Returns `true` when `m` was not present before.
    #[inline]
    pub fn insert(&mut self, m: usize) -> bool {
        let fresh = !self.0.contains(m);
        self.0.insert(m);
        fresh
    }

    #[inline]
    pub fn remove(&mut self, m: usize) {
        self.0.set(m, false);
    }

    #[inline]
    pub fn is_subset(&self, other: &MemberSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union_with(&mut self, other: &MemberSet) {
        self.0.union_with(&other.0);
    }

    pub fn intersect_with(&mut self, other: &MemberSet) {
        self.0.intersect_with(&other.0);
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn capacity(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for MemberSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for MemberSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, m) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// Shape of a closure member, expressed in member indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    True,
    Atom(AtomId),
    Not(usize),
    And(usize, usize),
    Next(usize),
    Until(usize, usize),
    All(usize),
}

#[derive(Debug, Clone)]
pub struct Closure {
    root: FormulaId,
    members: Vec<FormulaId>,
    kinds: Vec<MemberKind>,
    index: HashMap<FormulaId, usize>,
    atom_names: Vec<String>,
    atom_members: Vec<usize>,
    subformula_count: usize,
}

impl Closure {
    pub fn new(table: &mut FormulaTable, root: FormulaId) -> Self {
        let mut order = Vec::new();
        let mut seen = HashMap::new();
        postorder(table, root, &mut seen, &mut order);

        let mut members = Vec::new();
        let mut index: HashMap<FormulaId, usize> = HashMap::new();
        for &f in &order {
            if index.contains_key(&f) {
                continue;
            }
            let (base, depth) = chain_base(table, f);
            // rebuild the positive member ¬^(2⌊n/2⌋) base
            let mut pos = base;
            for _ in 0..(depth / 2) * 2 {
                pos = table.not(pos);
            }
            let neg = table.not(pos);
            let p = members.len();
            members.push(pos);
            members.push(neg);
            index.insert(pos, p);
            index.insert(neg, p + 1);
        }

        let mut kinds = Vec::with_capacity(members.len());
        let mut atom_names = Vec::new();
        let mut atom_members = Vec::new();
        for (i, &f) in members.iter().enumerate() {
            let k = match table.kind(f) {
                Kind::True => MemberKind::True,
                Kind::Atom(a) => {
                    atom_names.push(table.atom_name(a).to_string());
                    atom_members.push(i);
                    MemberKind::Atom(a)
                }
                Kind::Not(a) => MemberKind::Not(index[&a]),
                Kind::And(a, b) => MemberKind::And(index[&a], index[&b]),
                Kind::Next(a) => MemberKind::Next(index[&a]),
                Kind::Until(a, b) => MemberKind::Until(index[&a], index[&b]),
                Kind::All(a) => MemberKind::All(index[&a]),
            };
            kinds.push(k);
        }

        Closure {
            root,
            members,
            kinds,
            index,
            atom_names,
            atom_members,
            subformula_count: order.len(),
        }
    }

    pub fn root(&self) -> FormulaId {
        self.root
    }

    pub fn root_member(&self) -> usize {
        self.index[&self.root]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.members.len() / 2
    }

    pub fn subformula_count(&self) -> usize {
        self.subformula_count
    }

    pub fn formula(&self, m: usize) -> FormulaId {
        self.members[m]
    }

    pub fn members(&self) -> &[FormulaId] {
        &self.members
    }

    pub fn kind(&self, m: usize) -> MemberKind {
        self.kinds[m]
    }

    pub fn member_of(&self, f: FormulaId) -> Option<usize> {
        self.index.get(&f).copied()
    }

    #[inline]
    pub fn negation(&self, m: usize) -> usize {
        m ^ 1
    }

    #[inline]
    pub fn is_positive(&self, m: usize) -> bool {
        m & 1 == 0
    }

    /// Atom members (positive side), in closure order.
    pub fn atom_members(&self) -> &[usize] {
        &self.atom_members
    }

    pub fn atom_name_of(&self, m: usize) -> Option<&str> {
        self.atom_members
            .iter()
            .position(|&a| a == m)
            .map(|i| self.atom_names[i].as_str())
    }

    pub fn children(&self, m: usize) -> Vec<usize> {
        match self.kinds[m] {
            MemberKind::True | MemberKind::Atom(_) => vec![],
            MemberKind::Not(a) | MemberKind::Next(a) | MemberKind::All(a) => vec![a],
            MemberKind::And(a, b) | MemberKind::Until(a, b) => vec![a, b],
        }
    }

    pub fn empty_set(&self) -> MemberSet {
        MemberSet::new(self.len())
    }

    pub fn full_set(&self) -> MemberSet {
        MemberSet::with_members(self.len(), 0..self.len())
    }

    /// Members whose truth depends only on the current state: the constant,
    /// atoms and `A`-formulas (positive side of their pair).
    pub fn is_state_prop(&self, m: usize) -> bool {
        matches!(
            self.kinds[m],
            MemberKind::True | MemberKind::Atom(_) | MemberKind::All(_)
        )
    }

    /// Downward closure of `seeds` that stops at `A`-formulas, plus negation
    /// partners. The result is closed under subformulas except inside `A`.
    pub fn path_mask(&self, seeds: impl IntoIterator<Item = usize>) -> MemberSet {
        let mut mask = self.empty_set();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(m) = stack.pop() {
            for x in [m, m ^ 1] {
                if !mask.insert(x) {
                    continue;
                }
                if let MemberKind::All(_) = self.kinds[x] {
                    continue;
                }
                stack.extend(self.children(x));
            }
        }
        mask
    }

    /// Downward closure of `seeds` including `A` bodies, plus partners.
    pub fn sub_closure(&self, seeds: impl IntoIterator<Item = usize>) -> MemberSet {
        let mut mask = self.empty_set();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(m) = stack.pop() {
            for x in [m, m ^ 1] {
                if mask.insert(x) {
                    stack.extend(self.children(x));
                }
            }
        }
        mask
    }

    /// `A`-nesting depth of each member (an `A` member counts its own level).
    pub fn all_depth(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.len()];
        for m in 0..self.len() {
            depth[m] = match self.kinds[m] {
                MemberKind::True | MemberKind::Atom(_) => 0,
                MemberKind::Not(a) | MemberKind::Next(a) => depth[a],
                MemberKind::And(a, b) | MemberKind::Until(a, b) => depth[a].max(depth[b]),
                MemberKind::All(a) => depth[a] + 1,
            };
        }
        depth
    }

    /// Maximal propositional consistency (M1, M2) over the whole closure.
    pub fn is_mpc(&self, set: &MemberSet) -> bool {
        self.is_mpc_within(&self.full_set(), set)
    }

    /// M1 and M2 restricted to the members of `mask`.
    pub fn is_mpc_within(&self, mask: &MemberSet, set: &MemberSet) -> bool {
        if !set.is_subset(mask) {
            return false;
        }
        for m in mask.iter() {
            match self.kinds[m] {
                MemberKind::Not(a) if mask.contains(a) => {
                    if set.contains(m) == set.contains(a) {
                        return false;
                    }
                }
                MemberKind::And(a, b) if mask.contains(a) && mask.contains(b)
                    && set.contains(m) != (set.contains(a) && set.contains(b)) => {
                        return false;
                    }
                _ => {}
            }
        }
        true
    }

    pub fn describe(&self, table: &FormulaTable, m: usize) -> String {
        table.render(self.members[m])
    }
}

fn postorder(
    table: &FormulaTable,
    f: FormulaId,
    seen: &mut HashMap<FormulaId, ()>,
    out: &mut Vec<FormulaId>,
) {
    if seen.contains_key(&f) {
        return;
    }
    seen.insert(f, ());
    match table.kind(f) {
        Kind::True | Kind::Atom(_) => {}
        Kind::Not(a) | Kind::Next(a) | Kind::All(a) => postorder(table, a, seen, out),
        Kind::And(a, b) | Kind::Until(a, b) => {
            postorder(table, a, seen, out);
            postorder(table, b, seen, out);
        }
    }
    out.push(f);
}

/// Strips leading negations: `¬ⁿχ ↦ (χ, n)`.
fn chain_base(table: &FormulaTable, mut f: FormulaId) -> (FormulaId, usize) {
    let mut n = 0;
    while let Kind::Not(a) = table.kind(f) {
        f = a;
        n += 1;
    }
    (f, n)
}
