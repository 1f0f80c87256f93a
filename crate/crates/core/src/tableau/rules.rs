use std::fmt;

use super::{NodeId, Tableau, TableauError, UndoToken};
use crate::closure::MemberKind;
use crate::hue::successor_requirements;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    DoubleNeg,
    Conj,
    Dis1,
    Dis2,
    /// With a member: create the successor, or push the body into every
    /// linked phue. Without one: create a successor for a node that has none.
    Nex,
    Nnx,
    Unt1,
    Unt2,
    Nun1,
    Nun2,
    Atm,
    Nat,
    Pos(usize),
    Nec,
    Pred(usize),
    Loop(NodeId),
    NoLoop,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::DoubleNeg => f.write_str("2NEG"),
            Rule::Conj => f.write_str("CONJ"),
            Rule::Dis1 => f.write_str("DIS1"),
            Rule::Dis2 => f.write_str("DIS2"),
            Rule::Nex => f.write_str("NEX"),
            Rule::Nnx => f.write_str("NNX"),
            Rule::Unt1 => f.write_str("UNT1"),
            Rule::Unt2 => f.write_str("UNT2"),
            Rule::Nun1 => f.write_str("NUN1"),
            Rule::Nun2 => f.write_str("NUN2"),
            Rule::Atm => f.write_str("ATM"),
            Rule::Nat => f.write_str("NAT"),
            Rule::Pos(k) => write!(f, "POS_{k}"),
            Rule::Nec => f.write_str("NEC"),
            Rule::Pred(k) => write!(f, "PRED_{k}"),
            Rule::Loop(t) => write!(f, "LOOP({t})"),
            Rule::NoLoop => f.write_str("NOLOOP"),
        }
    }
}

/// A rule together with where it applies.
///
/// For PRED the locus is the predecessor node and `target` names the
/// successor phue being linked. For ATM/NAT `slot` is the phue receiving
/// the atom. For LOOP/NOLOOP `node` is the leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleInstance {
    pub rule: Rule,
    pub node: NodeId,
    pub slot: usize,
    pub member: Option<usize>,
    pub target: Option<(NodeId, usize)>,
}

impl RuleInstance {
    fn at(rule: Rule, node: NodeId, slot: usize, member: usize) -> Self {
        RuleInstance {
            rule,
            node,
            slot,
            member: Some(member),
            target: None,
        }
    }

    fn bare(rule: Rule, node: NodeId, slot: usize) -> Self {
        RuleInstance {
            rule,
            node,
            slot,
            member: None,
            target: None,
        }
    }
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @{}.{}", self.rule, self.node, self.slot)?;
        if let Some(m) = self.member {
            write!(f, " m{m}")?;
        }
        if let Some((u, j)) = self.target {
            write!(f, " ->{u}.{j}")?;
        }
        Ok(())
    }
}

/// One choice point: the alternatives for a single rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub alternatives: Vec<RuleInstance>,
    /// NOLOOP was withheld because the leaf repeats an ancestor.
    pub rep_cut: bool,
}

impl Decision {
    fn forced(r: RuleInstance) -> Self {
        Decision {
            alternatives: vec![r],
            rep_cut: false,
        }
    }

    fn choice(alternatives: Vec<RuleInstance>) -> Self {
        Decision {
            alternatives,
            rep_cut: false,
        }
    }
}

impl Tableau {
    /// Every applicable decision, in strategy order.
    pub fn enumerate_choices(&self, rep_cut: bool) -> Vec<RuleInstance> {
        let mut out = Vec::new();
        self.decisions(rep_cut, &mut |d| {
            out.extend(d.alternatives);
            false
        });
        out
    }

    /// The first decision in strategy order, or `None` if no rule applies.
    pub fn next_decision(&self, rep_cut: bool) -> Option<Decision> {
        let mut found = None;
        self.decisions(rep_cut, &mut |d| {
            found = Some(d);
            true
        });
        found
    }

    /// Feeds decisions to `visit` in priority order: deterministic rules,
    /// branching rules, predecessor choices, loop choices and finally
    /// successor creation. Stops when `visit` returns true.
    fn decisions(&self, rep_cut: bool, visit: &mut dyn FnMut(Decision) -> bool) {
        let nodes: Vec<NodeId> = self.live_nodes().collect();
        for &t in &nodes {
            if self.forced_rules(t, visit) {
                return;
            }
        }
        for &t in &nodes {
            if self.branching_rules(t, visit) {
                return;
            }
        }
        for &t in &nodes {
            if self.pred_rules(t, visit) {
                return;
            }
        }
        for &t in &nodes {
            if let Some(d) = self.loop_decision(t, rep_cut) {
                if visit(d) {
                    return;
                }
            }
        }
        for &t in &nodes {
            if let Some(r) = self.expansion(t) {
                if visit(Decision::forced(r)) {
                    return;
                }
            }
        }
    }

    fn forced_rules(&self, t: NodeId, visit: &mut dyn FnMut(Decision) -> bool) -> bool {
        let c = self.closure();
        let node = self.node_ref(t);
        let n = node.label.len();
        if n > 1 {
            let mut atoms = c.empty_set();
            for p in &node.label {
                for m in p.iter() {
                    let is_lit = match c.kind(m) {
                        MemberKind::Atom(_) => true,
                        MemberKind::Not(y) => matches!(c.kind(y), MemberKind::Atom(_)),
                        _ => false,
                    };
                    if is_lit {
                        atoms.insert(m);
                    }
                }
            }
            for m in atoms.iter() {
                let rule = if c.is_positive(m) { Rule::Atm } else { Rule::Nat };
                for k in 0..n {
                    if !node.label[k].contains(m) && visit(Decision::forced(RuleInstance::at(rule, t, k, m))) {
                        return true;
                    }
                }
            }
        }
        for (i, m) in self.unsupported(t) {
            let has_succ = node.succ[i].is_some();
            let deferred = node.deferred[i].contains(m);
            let rule = match c.kind(m) {
                MemberKind::And(..) => Some(Rule::Conj),
                MemberKind::All(_) => Some(Rule::Nec),
                MemberKind::Next(_) if has_succ => Some(Rule::Nex),
                MemberKind::Until(..) if deferred && has_succ => Some(Rule::Unt2),
                MemberKind::Not(y) => match c.kind(y) {
                    MemberKind::Not(_) => Some(Rule::DoubleNeg),
                    MemberKind::Next(_) if has_succ => Some(Rule::Nnx),
                    MemberKind::Until(..) if deferred && has_succ => Some(Rule::Nun2),
                    _ => None,
                },
                _ => None,
            };
            if let Some(rule) = rule {
                if visit(Decision::forced(RuleInstance::at(rule, t, i, m))) {
                    return true;
                }
            }
        }
        false
    }

    fn branching_rules(&self, t: NodeId, visit: &mut dyn FnMut(Decision) -> bool) -> bool {
        let c = self.closure();
        let node = self.node_ref(t);
        for (i, m) in self.unsupported(t) {
            if node.deferred[i].contains(m) {
                continue;
            }
            let rules: Vec<Rule> = match c.kind(m) {
                MemberKind::Until(..) => vec![Rule::Unt1, Rule::Unt2],
                MemberKind::Not(y) => match c.kind(y) {
                    MemberKind::And(..) => vec![Rule::Dis1, Rule::Dis2],
                    MemberKind::Until(..) => vec![Rule::Nun1, Rule::Nun2],
                    MemberKind::All(_) => (0..=node.label.len()).map(Rule::Pos).collect(),
                    _ => continue,
                },
                _ => continue,
            };
            let alts = rules.into_iter().map(|r| RuleInstance::at(r, t, i, m)).collect();
            if visit(Decision::choice(alts)) {
                return true;
            }
        }
        false
    }

    fn pred_rules(&self, t: NodeId, visit: &mut dyn FnMut(Decision) -> bool) -> bool {
        let c = self.closure();
        let node = self.node_ref(t);
        let n = node.label.len();
        for u in self.successor_nodes(t) {
            let target_len = self.node_ref(u).label.len();
            for j in 0..target_len {
                if self.pred(t, u, j).is_some() {
                    continue;
                }
                let target = &self.node_ref(u).label[j];
                let (mut fits, mut rest): (Vec<usize>, Vec<usize>) =
                    (0..n).partition(|&k| successor_requirements(c, &node.label[k]).is_subset(target));
                fits.append(&mut rest);
                fits.push(n);
                let alts = fits
                    .into_iter()
                    .map(|k| RuleInstance {
                        rule: Rule::Pred(k),
                        node: t,
                        slot: k,
                        member: None,
                        target: Some((u, j)),
                    })
                    .collect();
                if visit(Decision::choice(alts)) {
                    return true;
                }
            }
        }
        false
    }

    /// Ancestors of the leaf's parent that may receive an up-link, nearest first.
    pub fn loop_targets(&self, u: NodeId) -> Vec<NodeId> {
        let node = self.node_ref(u);
        let Some((parent, slot)) = node.parent else {
            return Vec::new();
        };
        let pnode = self.node_ref(parent);
        self.ancestors(parent)
            .into_iter()
            .filter(|&t| node.label[0].is_subset(&self.node_ref(t).label[0]))
            .filter(|&t| {
                !pnode
                    .succ
                    .iter()
                    .enumerate()
                    .any(|(k, &s)| k != slot && s == Some(t))
            })
            .collect()
    }

    fn loop_decision(&self, u: NodeId, rep_cut: bool) -> Option<Decision> {
        let node = self.node_ref(u);
        if !node.is_leaf() || node.loop_declined || node.parent.is_none() {
            return None;
        }
        let targets = self.loop_targets(u);
        if targets.is_empty() {
            return None;
        }
        let mut alts: Vec<RuleInstance> = targets
            .into_iter()
            .map(|t| RuleInstance::bare(Rule::Loop(t), u, 0))
            .collect();
        let cut = rep_cut && self.repeats_ancestors(u);
        if !cut {
            alts.push(RuleInstance::bare(Rule::NoLoop, u, 0));
        }
        Some(Decision {
            alternatives: alts,
            rep_cut: cut,
        })
    }

    /// Some proper tree ancestor carries the same label and commitments.
    fn repeats_ancestors(&self, u: NodeId) -> bool {
        let node = self.node_ref(u);
        self.ancestors(u)[1..].iter().any(|&a| {
            let an = self.node_ref(a);
            an.label == node.label && an.deferred == node.deferred
        })
    }

    fn expansion(&self, t: NodeId) -> Option<RuleInstance> {
        let c = self.closure();
        let node = self.node_ref(t);
        for i in 0..node.label.len() {
            if node.succ[i].is_some() || !self.needs_successor(t, i) {
                continue;
            }
            let member = node.label[i].iter().find(|&m| match c.kind(m) {
                MemberKind::Next(_) => true,
                MemberKind::Not(y) => matches!(c.kind(y), MemberKind::Next(_)),
                _ => false,
            });
            let member = member.or_else(|| node.deferred[i].iter().next());
            let rule = match member.map(|m| c.kind(m)) {
                Some(MemberKind::Next(_)) => Rule::Nex,
                Some(MemberKind::Until(..)) => Rule::Unt2,
                Some(MemberKind::Not(y)) if matches!(c.kind(y), MemberKind::Next(_)) => Rule::Nnx,
                Some(_) => Rule::Nun2,
                None => Rule::Nex,
            };
            return Some(RuleInstance {
                rule,
                node: t,
                slot: i,
                member,
                target: None,
            });
        }
        if node.is_leaf() {
            return Some(RuleInstance::bare(Rule::Nex, t, 0));
        }
        None
    }

    /// Applies a rule instance and returns the token that reverses it.
    pub fn apply(&mut self, r: &RuleInstance) -> Result<UndoToken, TableauError> {
        let node = self.node(r.node).ok_or(TableauError::StaleLocus)?;
        if r.slot > node.label.len() || (r.slot == node.label.len() && !matches!(r.rule, Rule::Pred(_))) {
            return Err(TableauError::StaleLocus);
        }
        debug_assert!(self.recording.is_empty());
        let result = self.apply_ops(r);
        if let Err(e) = result {
            // roll back partial effects
            let token = self.finish_token();
            self.undo(token).expect("fresh token");
            return Err(e);
        }
        Ok(self.finish_token())
    }

    fn apply_ops(&mut self, r: &RuleInstance) -> Result<(), TableauError> {
        let c = self.closure_arc();
        let (t, i) = (r.node, r.slot);
        let member = || r.member.ok_or(TableauError::Precondition);
        match r.rule {
            Rule::DoubleNeg => match c.kind(member()?) {
                MemberKind::Not(y) => match c.kind(y) {
                    MemberKind::Not(z) => {
                        self.add_member_raw(t, i, z);
                    }
                    _ => return Err(TableauError::Precondition),
                },
                _ => return Err(TableauError::Precondition),
            },
            Rule::Conj => {
                let MemberKind::And(a, b) = c.kind(member()?) else {
                    return Err(TableauError::Precondition);
                };
                self.add_member_raw(t, i, a);
                self.add_member_raw(t, i, b);
            }
            Rule::Dis1 | Rule::Dis2 => {
                let MemberKind::Not(y) = c.kind(member()?) else {
                    return Err(TableauError::Precondition);
                };
                let MemberKind::And(a, b) = c.kind(y) else {
                    return Err(TableauError::Precondition);
                };
                let pick = if r.rule == Rule::Dis1 { a } else { b };
                self.add_member_raw(t, i, c.negation(pick));
            }
            Rule::Nex | Rule::Nnx => {
                let Some(m) = r.member else {
                    if self.node_ref(t).succ[i].is_some() {
                        return Err(TableauError::Precondition);
                    }
                    self.expand_raw(t, i);
                    return Ok(());
                };
                let body = match (r.rule, c.kind(m)) {
                    (Rule::Nex, MemberKind::Next(x)) => x,
                    (Rule::Nnx, MemberKind::Not(y)) => match c.kind(y) {
                        MemberKind::Next(x) => c.negation(x),
                        _ => return Err(TableauError::Precondition),
                    },
                    _ => return Err(TableauError::Precondition),
                };
                if self.node_ref(t).succ[i].is_none() {
                    self.expand_raw(t, i);
                } else {
                    self.push_to_linked(t, i, body);
                }
            }
            Rule::Unt1 | Rule::Unt2 => {
                let m = member()?;
                let MemberKind::Until(a, b) = c.kind(m) else {
                    return Err(TableauError::Precondition);
                };
                if r.rule == Rule::Unt1 {
                    self.add_member_raw(t, i, b);
                } else if self.node_ref(t).deferred[i].contains(m) {
                    self.follow_up(t, i, m);
                } else {
                    self.commit(t, i, m, &[a]);
                }
            }
            Rule::Nun1 | Rule::Nun2 => {
                let m = member()?;
                let MemberKind::Not(y) = c.kind(m) else {
                    return Err(TableauError::Precondition);
                };
                let MemberKind::Until(a, b) = c.kind(y) else {
                    return Err(TableauError::Precondition);
                };
                if r.rule == Rule::Nun1 {
                    self.add_member_raw(t, i, c.negation(b));
                    self.add_member_raw(t, i, c.negation(a));
                } else if self.node_ref(t).deferred[i].contains(m) {
                    self.follow_up(t, i, m);
                } else {
                    self.commit(t, i, m, &[c.negation(b), a]);
                }
            }
            Rule::Atm | Rule::Nat => {
                self.add_member_raw(t, i, member()?);
            }
            Rule::Pos(k) => {
                let MemberKind::Not(y) = c.kind(member()?) else {
                    return Err(TableauError::Precondition);
                };
                let MemberKind::All(a) = c.kind(y) else {
                    return Err(TableauError::Precondition);
                };
                let n = self.node_ref(t).label.len();
                if k > n {
                    return Err(TableauError::StaleLocus);
                }
                let slot = if k == n { self.add_phue_raw(t) } else { k };
                self.add_member_raw(t, slot, c.negation(a));
            }
            Rule::Nec => {
                let MemberKind::All(a) = c.kind(member()?) else {
                    return Err(TableauError::Precondition);
                };
                for k in 0..self.node_ref(t).label.len() {
                    self.add_member_raw(t, k, a);
                }
            }
            Rule::Pred(k) => {
                let (u, j) = r.target.ok_or(TableauError::Precondition)?;
                let n = self.node_ref(t).label.len();
                if self.node(u).is_none_or(|un| j >= un.label.len()) || k > n {
                    return Err(TableauError::StaleLocus);
                }
                if !self.node_ref(t).succ.contains(&Some(u)) || self.pred(t, u, j).is_some() {
                    return Err(TableauError::Precondition);
                }
                if k == n {
                    self.add_phue_raw(t);
                }
                self.set_pred_raw(t, u, j, k);
            }
            Rule::Loop(target) => {
                let u = t;
                let node = self.node_ref(u);
                let Some((parent, slot)) = node.parent else {
                    return Err(TableauError::Precondition);
                };
                if !node.is_leaf() || self.node(target).is_none() {
                    return Err(TableauError::Precondition);
                }
                self.set_succ_raw(parent, slot, Some(target));
                self.clear_preds_raw(parent, u);
                self.delete_node_raw(u);
                self.set_pred_raw(parent, target, 0, slot);
            }
            Rule::NoLoop => {
                if self.node_ref(t).loop_declined {
                    return Err(TableauError::Precondition);
                }
                self.decline_raw(t);
            }
        }
        Ok(())
    }

    fn push_to_linked(&mut self, t: NodeId, i: usize, member: usize) {
        for (u, j) in self.linked(t, i) {
            self.add_member_raw(u, j, member);
        }
    }

    /// A committed eventuality: create the successor if there is none,
    /// otherwise pass the formula on.
    fn follow_up(&mut self, t: NodeId, i: usize, m: usize) {
        if self.node_ref(t).succ[i].is_none() {
            self.expand_raw(t, i);
        } else {
            self.push_to_linked(t, i, m);
        }
    }

    /// UNT2/NUN2: add the local members, record the commitment and pass the
    /// eventuality on to any existing successor phues. A missing successor
    /// is created later, once the node has had its chance to loop.
    fn commit(&mut self, t: NodeId, i: usize, m: usize, local: &[usize]) {
        for &x in local {
            self.add_member_raw(t, i, x);
        }
        self.defer_raw(t, i, m);
        if self.node_ref(t).succ[i].is_some() {
            self.push_to_linked(t, i, m);
        }
    }
}
