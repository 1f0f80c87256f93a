use std::collections::BTreeMap;
use std::fmt;

use super::{NodeId, Tableau};
use crate::closure::{MemberKind, MemberSet};
use crate::fulfil::{Fulfilment, ProductGraph, ProductNode};
use crate::hue::{enumerate_hues_within, HueCap, HueError};
use crate::model::{Checker, Kripke, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Contradiction,
    AtomConflict,
    Ntp,
    Lg,
    Linear,
}

/// Hues over a path mask that start a fulfilling hue sequence, per mask.
#[derive(Debug, Default)]
pub struct LinearCache {
    alive: BTreeMap<MemberSet, Vec<MemberSet>>,
}

impl LinearCache {
    fn alive(&mut self, c: &crate::closure::Closure, mask: MemberSet, cap: HueCap) -> Result<&[MemberSet], HueError> {
        if !self.alive.contains_key(&mask) {
            let hues = enumerate_hues_within(c, &mask, &c.empty_set(), &c.empty_set(), cap)?;
            let graph = ProductGraph::new(
                c,
                mask.clone(),
                vec![ProductNode {
                    hues,
                    successors: vec![0],
                    wildcard: false,
                }],
            );
            let f = Fulfilment::compute(&graph);
            let alive = f.alive_hues(&graph, 0).map(|h| graph.nodes()[0].hues[h].clone()).collect();
            self.alive.insert(mask.clone(), alive);
        }
        Ok(&self.alive[&mask])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckReport {
    Pass,
    Fail {
        check: CheckKind,
        node: NodeId,
        slot: Option<usize>,
        member: Option<usize>,
    },
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        matches!(self, CheckReport::Pass)
    }

    fn fail(check: CheckKind, node: NodeId, slot: Option<usize>, member: Option<usize>) -> Self {
        CheckReport::Fail {
            check,
            node,
            slot,
            member,
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckReport::Pass => f.write_str("pass"),
            CheckReport::Fail {
                check,
                node,
                slot,
                member,
            } => {
                write!(f, "fail {check:?} at node {node}")?;
                if let Some(s) = slot {
                    write!(f, " phue {s}")?;
                }
                if let Some(m) = member {
                    write!(f, " member {m}")?;
                }
                Ok(())
            }
        }
    }
}

impl Tableau {
    pub fn check_contradiction(&self) -> CheckReport {
        let nodes: Vec<NodeId> = self.live_nodes().collect();
        self.check_contradiction_at(&nodes)
    }

    /// The contradiction check restricted to some nodes.
    pub fn check_contradiction_at(&self, nodes: &[NodeId]) -> CheckReport {
        let c = self.closure();
        for &t in nodes {
            let Some(node) = self.node(t) else { continue };
            let mut pos_atoms = c.empty_set();
            let mut neg_atoms = c.empty_set();
            for (i, phue) in node.label().iter().enumerate() {
                for m in phue.iter() {
                    let bad = phue.contains(c.negation(m))
                        || match c.kind(m) {
                            MemberKind::Not(y) => phue.contains(y) || matches!(c.kind(y), MemberKind::True),
                            _ => false,
                        };
                    if bad {
                        return CheckReport::fail(CheckKind::Contradiction, t, Some(i), Some(m));
                    }
                    match c.kind(m) {
                        MemberKind::Atom(_) => {
                            pos_atoms.insert(m);
                        }
                        MemberKind::Not(y) if matches!(c.kind(y), MemberKind::Atom(_)) => {
                            neg_atoms.insert(y);
                        }
                        _ => {}
                    }
                }
            }
            let conflict = pos_atoms.iter().find(|&p| neg_atoms.contains(p));
            if let Some(p) = conflict {
                return CheckReport::fail(CheckKind::AtomConflict, t, None, Some(p));
            }
        }
        CheckReport::Pass
    }

    /// Every phue of the given nodes must extend to a hue that starts a
    /// fulfilling hue sequence, with `A`-formulas read as propositions.
    pub fn check_linear_at(&self, nodes: &[NodeId], cache: &mut LinearCache, cap: HueCap) -> Result<CheckReport, HueError> {
        let c = self.closure();
        for &t in nodes {
            let Some(node) = self.node(t) else { continue };
            for (i, phue) in node.label().iter().enumerate() {
                let alive = cache.alive(c, c.path_mask(phue.iter()), cap)?;
                if !alive.iter().any(|h| phue.is_subset(h)) {
                    return Ok(CheckReport::fail(CheckKind::Linear, t, Some(i), None));
                }
            }
        }
        Ok(CheckReport::Pass)
    }

    /// For each node whose slot-0 successor is a tree ancestor, the slot-0
    /// cycle back to it must witness every eventuality in its slot-0 phues.
    pub fn check_ntp(&self) -> CheckReport {
        for t in self.live_nodes() {
            if let Some(r) = self.ntp_at(t) {
                return r;
            }
        }
        CheckReport::Pass
    }

    pub fn check_ntp_at(&self, t: NodeId) -> CheckReport {
        self.ntp_at(t).unwrap_or(CheckReport::Pass)
    }

    fn ntp_at(&self, t: NodeId) -> Option<CheckReport> {
        let t0 = self.node(t)?.successor(0)?;
        if !self.ancestors(t).contains(&t0) {
            return None;
        }
        let mut cycle = vec![t0];
        let mut at = t0;
        while at != t {
            at = self.node_ref(at).successor(0)?;
            if cycle.contains(&at) {
                return None;
            }
            cycle.push(at);
        }
        let c = self.closure();
        let mut union = c.empty_set();
        for &n in &cycle {
            union.union_with(&self.node_ref(n).label[0]);
        }
        for &n in &cycle {
            for m in self.node_ref(n).label[0].iter() {
                if let MemberKind::Until(_, b) = c.kind(m) {
                    if !union.contains(b) {
                        return Some(CheckReport::fail(CheckKind::Ntp, n, Some(0), Some(m)));
                    }
                }
            }
        }
        None
    }

    /// The structure seen by the LG check: live nodes, their edges and
    /// decided atoms. Unsettled nodes are open.
    fn lg_kripke(&self) -> (Vec<NodeId>, Kripke) {
        let ids: Vec<NodeId> = self.live_nodes().collect();
        let dense: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(d, &t)| (t, d)).collect();
        let mut succ = Vec::with_capacity(ids.len());
        let mut open = Vec::with_capacity(ids.len());
        let mut atoms = Vec::with_capacity(ids.len());
        for &t in &ids {
            succ.push(self.successor_nodes(t).into_iter().map(|u| dense[&u]).collect());
            open.push(!self.is_settled(t));
            atoms.push(self.decided_atoms(t));
        }
        (ids, Kripke { succ, open, atoms })
    }

    /// Positive atom members occurring in any phue of `t`.
    pub fn decided_atoms(&self, t: NodeId) -> MemberSet {
        let c = self.closure();
        let mut out = c.empty_set();
        for phue in &self.node_ref(t).label {
            for m in phue.iter() {
                if matches!(c.kind(m), MemberKind::Atom(_)) {
                    out.insert(m);
                }
            }
        }
        out
    }

    /// Every checked phue must be contained in a hue that can still be
    /// realised at its node. Leaves are skipped; at other nodes the phues
    /// with a successor are checked, and all phues once the node is settled.
    pub fn check_lg(&self, cap: HueCap) -> Result<CheckReport, HueError> {
        let c = self.closure();
        let (ids, kripke) = self.lg_kripke();
        let mut by_mask: BTreeMap<MemberSet, Vec<(usize, usize)>> = BTreeMap::new();
        for (d, &t) in ids.iter().enumerate() {
            let node = self.node_ref(t);
            if node.is_leaf() {
                continue;
            }
            let all = !kripke.open[d];
            for (i, phue) in node.label.iter().enumerate() {
                if all || node.succ[i].is_some() {
                    by_mask.entry(c.path_mask(phue.iter())).or_default().push((d, i));
                }
            }
        }
        let mut checker = Checker::new(c, &kripke, cap);
        for (mask, items) in by_mask {
            let product = checker.product(&mask, Mode::May)?;
            for (d, i) in items {
                let t = ids[d];
                if !product.exists(d, &self.node_ref(t).label[i]) {
                    return Ok(CheckReport::fail(CheckKind::Lg, t, Some(i), None));
                }
            }
        }
        Ok(CheckReport::Pass)
    }

    /// Structural completeness: no leaves, every slot that needs a
    /// successor has one, predecessor maps are total and every formula is
    /// supported.
    pub fn is_complete(&self) -> bool {
        self.live_nodes().all(|t| {
            let node = self.node_ref(t);
            !node.is_leaf()
                && (0..node.label.len()).all(|i| node.succ[i].is_some() || !self.needs_successor(t, i))
                && self.preds_total_from(t)
                && self.fully_supported(t)
        })
    }

    pub fn is_finished(&self, cap: HueCap) -> Result<bool, HueError> {
        Ok(self.is_complete()
            && self.check_contradiction().passed()
            && self.check_ntp().passed()
            && self.check_lg(cap)?.passed())
    }
}
