use super::{NodeId, Tableau};
use crate::closure::MemberKind;

impl Tableau {
    /// Whether member `m` of phue `i` at `t` is supported by the labelling.
    pub fn is_supported(&self, t: NodeId, i: usize, m: usize) -> bool {
        let c = self.closure();
        let node = self.node_ref(t);
        let here = &node.label[i];
        let linked_all = |x: usize| self.linked(t, i).iter().all(|&(u, j)| self.node_ref(u).label[j].contains(x));
        let has_succ = node.succ[i].is_some();
        match c.kind(m) {
            MemberKind::True => true,
            MemberKind::Atom(_) => node.label[0].contains(m),
            MemberKind::And(a, b) => here.contains(a) && here.contains(b),
            MemberKind::Next(x) => has_succ && linked_all(x),
            MemberKind::Until(a, b) => here.contains(b) || (here.contains(a) && has_succ && linked_all(m)),
            MemberKind::All(a) => node.label.iter().all(|p| p.contains(a)),
            MemberKind::Not(y) => match c.kind(y) {
                MemberKind::True => false,
                MemberKind::Atom(_) => node.label[0].contains(m),
                MemberKind::Not(z) => here.contains(z),
                MemberKind::And(a, b) => here.contains(c.negation(a)) || here.contains(c.negation(b)),
                MemberKind::Next(x) => has_succ && linked_all(c.negation(x)),
                MemberKind::Until(a, b) => {
                    here.contains(c.negation(b))
                        && (here.contains(c.negation(a)) || (has_succ && linked_all(m)))
                }
                MemberKind::All(a) => node.label.iter().any(|p| p.contains(c.negation(a))),
            },
        }
    }

    pub(crate) fn unsupported(&self, t: NodeId) -> impl Iterator<Item = (usize, usize)> + '_ {
        let node = self.node_ref(t);
        node.label
            .iter()
            .enumerate()
            .flat_map(move |(i, p)| p.iter().map(move |m| (i, m)))
            .filter(move |&(i, m)| !self.is_supported(t, i, m))
    }

    pub fn fully_supported(&self, t: NodeId) -> bool {
        self.unsupported(t).next().is_none()
    }

    /// Slot `i` carries an obligation that can only be met by a successor.
    pub fn needs_successor(&self, t: NodeId, i: usize) -> bool {
        let c = self.closure();
        let node = self.node_ref(t);
        !node.deferred[i].is_empty()
            || node.label[i].iter().any(|m| match c.kind(m) {
                MemberKind::Next(_) => true,
                MemberKind::Not(y) => matches!(c.kind(y), MemberKind::Next(_)),
                _ => false,
            })
    }

    /// Every phue of every successor of `t` has a predecessor in `t`.
    pub fn preds_total_from(&self, t: NodeId) -> bool {
        self.successor_nodes(t).into_iter().all(|u| {
            let n = self.node_ref(u).label.len();
            self.preds.get(&(t, u)).is_some_and(|m| m.len() == n)
        })
    }

    /// Every phue of `u` has a predecessor in every node linking to `u`.
    pub fn preds_total_into(&self, u: NodeId) -> bool {
        let n = self.node_ref(u).label.len();
        self.preds
            .iter()
            .filter(|(&(_, v), _)| v == u)
            .all(|(_, m)| m.len() == n)
    }

    /// No further rule can change this node without new incoming edges:
    /// it has a successor, all its formulas are supported and every
    /// predecessor map into it is total.
    pub fn is_settled(&self, t: NodeId) -> bool {
        !self.node_ref(t).is_leaf() && self.fully_supported(t) && self.preds_total_into(t)
    }
}
