//! The tableau: a rooted graph of nodes labelled by ordered lists of phues,
//! with per-slot successors and predecessor maps between phues.
//!
//! All mutation goes through a small set of primitive operations that are
//! recorded in [`UndoToken`]s, so a search can roll back any rule exactly.

mod checks;
mod rules;
mod support;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::closure::{Closure, MemberSet};
use crate::formula::{FormulaId, FormulaTable};

pub use checks::{CheckKind, CheckReport, LinearCache};
pub use rules::{Decision, Rule, RuleInstance};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableauError {
    #[error("undo token is not the most recent one")]
    OutOfOrderUndo,
    #[error("rule refers to a missing node or slot")]
    StaleLocus,
    #[error("rule precondition does not hold")]
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    label: Vec<MemberSet>,
    succ: Vec<Option<NodeId>>,
    parent: Option<(NodeId, usize)>,
    depth: usize,
    /// Per slot: until-formulas committed to holding at the successor.
    deferred: Vec<MemberSet>,
    loop_declined: bool,
}

impl Node {
    fn new(capacity: usize, parent: Option<(NodeId, usize)>, depth: usize) -> Self {
        Node {
            label: vec![MemberSet::new(capacity)],
            succ: vec![None],
            parent,
            depth,
            deferred: vec![MemberSet::new(capacity)],
            loop_declined: false,
        }
    }

    pub fn label(&self) -> &[MemberSet] {
        &self.label
    }

    pub fn phue(&self, slot: usize) -> &MemberSet {
        &self.label[slot]
    }

    pub fn successor(&self, slot: usize) -> Option<NodeId> {
        self.succ[slot]
    }

    pub fn successors(&self) -> &[Option<NodeId>] {
        &self.succ
    }

    pub fn parent(&self) -> Option<(NodeId, usize)> {
        self.parent
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn deferred(&self, slot: usize) -> &MemberSet {
        &self.deferred[slot]
    }

    pub fn loop_declined(&self) -> bool {
        self.loop_declined
    }

    pub fn is_leaf(&self) -> bool {
        self.succ.iter().all(Option::is_none)
    }
}

#[derive(Debug, Clone)]
enum Op {
    AddMember { node: NodeId, slot: usize, member: usize },
    Defer { node: NodeId, slot: usize, member: usize },
    AddPhue { node: NodeId },
    SetSucc { node: NodeId, slot: usize, old: Option<NodeId> },
    SetPred { t: NodeId, u: NodeId, j: usize, old: Option<usize> },
    ClearPreds { t: NodeId, u: NodeId, old: BTreeMap<usize, usize> },
    CreateNode { id: NodeId },
    DeleteNode { id: NodeId, node: Box<Node> },
    Decline { node: NodeId },
}

/// Reverses one applied rule. Tokens must be undone in reverse order.
#[derive(Debug)]
pub struct UndoToken {
    id: u64,
    ops: Vec<Op>,
}

impl UndoToken {
    /// Nodes whose labels or edges the rule changed.
    pub fn touched(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .ops
            .iter()
            .map(|op| match *op {
                Op::AddMember { node, .. }
                | Op::Defer { node, .. }
                | Op::AddPhue { node }
                | Op::SetSucc { node, .. }
                | Op::Decline { node } => node,
                Op::SetPred { u, .. } | Op::ClearPreds { u, .. } => u,
                Op::CreateNode { id } | Op::DeleteNode { id, .. } => id,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn created_node(&self) -> Option<NodeId> {
        self.ops.iter().find_map(|op| match *op {
            Op::CreateNode { id } => Some(id),
            _ => None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Tableau {
    closure: Arc<Closure>,
    nodes: Vec<Option<Node>>,
    /// `(t, u) -> j -> i`: phue `i` of `t` is the predecessor of phue `j` of `u`.
    preds: BTreeMap<(NodeId, NodeId), BTreeMap<usize, usize>>,
    recording: Vec<Op>,
    history: Vec<u64>,
    next_token: u64,
    created: usize,
}

impl Tableau {
    /// A single root node whose only phue holds the formula.
    pub fn init(table: &mut FormulaTable, f: FormulaId) -> Self {
        Self::with_closure(Arc::new(Closure::new(table, f)))
    }

    pub fn with_closure(closure: Arc<Closure>) -> Self {
        let mut root = Node::new(closure.len(), None, 0);
        root.label[0].insert(closure.root_member());
        Tableau {
            closure,
            nodes: vec![Some(root)],
            preds: BTreeMap::new(),
            recording: Vec::new(),
            history: Vec::new(),
            next_token: 0,
            created: 1,
        }
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn closure_arc(&self) -> Arc<Closure> {
        self.closure.clone()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id).and_then(Option::as_ref)
    }

    fn node_ref(&self, id: NodeId) -> &Node {
        self.nodes[id].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node {
        self.nodes[id].as_mut().expect("live node")
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|_| i))
    }

    pub fn node_count(&self) -> usize {
        self.live_nodes().count()
    }

    /// Nodes ever created, including ones later removed by LOOP.
    pub fn nodes_created(&self) -> usize {
        self.created
    }

    pub fn pred(&self, t: NodeId, u: NodeId, j: usize) -> Option<usize> {
        self.preds.get(&(t, u)).and_then(|m| m.get(&j)).copied()
    }

    /// Distinct successor nodes of `t`.
    pub fn successor_nodes(&self, t: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.node_ref(t).succ.iter().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every `(u, j)` whose predecessor is phue `i` of `t`.
    pub fn linked(&self, t: NodeId, i: usize) -> Vec<(NodeId, usize)> {
        let mut out = Vec::new();
        for u in self.successor_nodes(t) {
            if let Some(m) = self.preds.get(&(t, u)) {
                out.extend(m.iter().filter(|&(_, &k)| k == i).map(|(&j, _)| (u, j)));
            }
        }
        out
    }

    /// Tree ancestors of `t`, nearest first, including `t` itself.
    pub fn ancestors(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = vec![t];
        let mut at = t;
        while let Some((p, _)) = self.node_ref(at).parent {
            out.push(p);
            at = p;
        }
        out
    }

    pub fn max_depth(&self) -> usize {
        self.live_nodes().map(|n| self.node_ref(n).depth).max().unwrap_or(0)
    }

    // primitive operations, each logged for undo

    fn add_member_raw(&mut self, node: NodeId, slot: usize, member: usize) -> bool {
        let fresh = self.node_mut(node).label[slot].insert(member);
        if fresh {
            self.recording.push(Op::AddMember { node, slot, member });
        }
        fresh
    }

    fn defer_raw(&mut self, node: NodeId, slot: usize, member: usize) {
        if self.node_mut(node).deferred[slot].insert(member) {
            self.recording.push(Op::Defer { node, slot, member });
        }
    }

    fn add_phue_raw(&mut self, node: NodeId) -> usize {
        let cap = self.closure.len();
        let n = self.node_mut(node);
        n.label.push(MemberSet::new(cap));
        n.succ.push(None);
        n.deferred.push(MemberSet::new(cap));
        self.recording.push(Op::AddPhue { node });
        self.node_ref(node).label.len() - 1
    }

    fn set_succ_raw(&mut self, node: NodeId, slot: usize, target: Option<NodeId>) {
        let old = std::mem::replace(&mut self.node_mut(node).succ[slot], target);
        self.recording.push(Op::SetSucc { node, slot, old });
    }

    fn set_pred_raw(&mut self, t: NodeId, u: NodeId, j: usize, i: usize) {
        let old = self.preds.entry((t, u)).or_default().insert(j, i);
        self.recording.push(Op::SetPred { t, u, j, old });
    }

    fn clear_preds_raw(&mut self, t: NodeId, u: NodeId) {
        if let Some(old) = self.preds.remove(&(t, u)) {
            self.recording.push(Op::ClearPreds { t, u, old });
        }
    }

    fn create_node_raw(&mut self, parent: NodeId, slot: usize) -> NodeId {
        let depth = self.node_ref(parent).depth + 1;
        let id = self.nodes.len();
        self.nodes.push(Some(Node::new(self.closure.len(), Some((parent, slot)), depth)));
        self.created += 1;
        self.recording.push(Op::CreateNode { id });
        id
    }

    fn delete_node_raw(&mut self, id: NodeId) {
        let node = self.nodes[id].take().expect("live node");
        self.recording.push(Op::DeleteNode { id, node: Box::new(node) });
    }

    fn decline_raw(&mut self, node: NodeId) {
        self.node_mut(node).loop_declined = true;
        self.recording.push(Op::Decline { node });
    }

    /// A fresh successor for `(t, i)`, with the H6 predecessor entry.
    fn expand_raw(&mut self, t: NodeId, i: usize) -> NodeId {
        let u = self.create_node_raw(t, i);
        self.set_succ_raw(t, i, Some(u));
        self.set_pred_raw(t, u, 0, i);
        u
    }

    fn finish_token(&mut self) -> UndoToken {
        let id = self.next_token;
        self.next_token += 1;
        self.history.push(id);
        UndoToken {
            id,
            ops: std::mem::take(&mut self.recording),
        }
    }

    pub fn undo(&mut self, token: UndoToken) -> Result<(), TableauError> {
        if self.history.last() != Some(&token.id) {
            return Err(TableauError::OutOfOrderUndo);
        }
        self.history.pop();
        for op in token.ops.into_iter().rev() {
            match op {
                Op::AddMember { node, slot, member } => self.node_mut(node).label[slot].remove(member),
                Op::Defer { node, slot, member } => self.node_mut(node).deferred[slot].remove(member),
                Op::AddPhue { node } => {
                    let n = self.node_mut(node);
                    n.label.pop();
                    n.succ.pop();
                    n.deferred.pop();
                }
                Op::SetSucc { node, slot, old } => self.node_mut(node).succ[slot] = old,
                Op::SetPred { t, u, j, old } => {
                    let m = self.preds.entry((t, u)).or_default();
                    match old {
                        Some(i) => {
                            m.insert(j, i);
                        }
                        None => {
                            m.remove(&j);
                            if m.is_empty() {
                                self.preds.remove(&(t, u));
                            }
                        }
                    }
                }
                Op::ClearPreds { t, u, old } => {
                    self.preds.insert((t, u), old);
                }
                Op::CreateNode { id } => {
                    debug_assert_eq!(id + 1, self.nodes.len());
                    self.nodes.pop();
                    self.created -= 1;
                }
                Op::DeleteNode { id, node } => self.nodes[id] = Some(*node),
                Op::Decline { node } => self.node_mut(node).loop_declined = false,
            }
        }
        Ok(())
    }

    // manual construction, for examples and tests

    /// Adds a member to a phue, creating missing phue slots.
    pub fn add_member(&mut self, node: NodeId, slot: usize, member: usize) {
        while self.node_ref(node).label.len() <= slot {
            self.add_phue_raw(node);
        }
        self.add_member_raw(node, slot, member);
        self.recording.clear();
    }

    /// Creates a tree child as the successor of `(parent, slot)`.
    pub fn add_child(&mut self, parent: NodeId, slot: usize) -> NodeId {
        let u = self.expand_raw(parent, slot);
        self.recording.clear();
        u
    }

    /// Points `(node, slot)` at an existing node, as an up-link does.
    pub fn link(&mut self, node: NodeId, slot: usize, target: NodeId) {
        self.set_succ_raw(node, slot, Some(target));
        self.set_pred_raw(node, target, 0, slot);
        self.recording.clear();
    }

    pub fn set_pred(&mut self, t: NodeId, u: NodeId, j: usize, i: usize) {
        self.set_pred_raw(t, u, j, i);
        self.recording.clear();
    }

    /// Deterministic text form: live nodes in creation order, phues as
    /// sorted member indices, then predecessor entries in key order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for id in self.live_nodes() {
            let n = self.node_ref(id);
            let _ = write!(out, "n{id} d{}", n.depth);
            if let Some((p, s)) = n.parent {
                let _ = write!(out, " p{p}.{s}");
            }
            if n.loop_declined {
                out.push_str(" noloop");
            }
            for (i, phue) in n.label.iter().enumerate() {
                let _ = write!(out, " [{i}:{:?}", phue.to_vec());
                if let Some(u) = n.succ[i] {
                    let _ = write!(out, " ->{u}");
                }
                if !n.deferred[i].is_empty() {
                    let _ = write!(out, " defer{:?}", n.deferred[i].to_vec());
                }
                out.push(']');
            }
            out.push('\n');
        }
        for ((t, u), m) in &self.preds {
            for (j, i) in m {
                let _ = writeln!(out, "pi {t}.{i} -> {u}.{j}");
            }
        }
        out
    }

    /// Human-readable dump with formulas rendered.
    pub fn describe(&self, table: &FormulaTable) -> String {
        let mut out = String::new();
        for id in self.live_nodes() {
            let n = self.node_ref(id);
            let _ = writeln!(out, "node {id} (depth {}):", n.depth);
            for (i, phue) in n.label.iter().enumerate() {
                let members: Vec<String> = phue.iter().map(|m| self.closure.describe(table, m)).collect();
                let target = n.succ[i].map(|u| format!(" -> {u}")).unwrap_or_default();
                let _ = writeln!(out, "  {i}: {{{}}}{target}", members.join(", "));
            }
        }
        out
    }
}
