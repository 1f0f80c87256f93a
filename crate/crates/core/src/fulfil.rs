//! Fulfilling paths in a product of structure nodes and hues.
//!
//! A pair `(n, h)` says "node `n` can carry path-hue `h`". Pairs are linked
//! along structure edges whenever the hues are `r_X`-related. A pair is
//! alive when an infinite path through live pairs starts there and every
//! `U`-formula it postpones is eventually discharged. Wildcard nodes stand
//! for unexplored parts of a partial structure and accept everything.

use std::collections::{HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::closure::{Closure, MemberKind, MemberSet};
use crate::hue::successor_requirements;

#[derive(Debug, Clone)]
pub struct ProductNode {
    pub hues: Vec<MemberSet>,
    pub successors: Vec<usize>,
    pub wildcard: bool,
}

impl ProductNode {
    /// A node that satisfies every path obligation: one empty hue and a self-loop.
    pub fn wildcard(id: usize) -> Self {
        ProductNode {
            hues: Vec::new(),
            successors: vec![id],
            wildcard: true,
        }
    }
}

pub type Pair = (usize, usize);

#[derive(Debug)]
pub struct ProductGraph {
    nodes: Vec<ProductNode>,
    offsets: Vec<usize>,
    pairs: Vec<Pair>,
    succ: Vec<Vec<u32>>,
    pred: Vec<Vec<u32>>,
    /// `(a U b, b)` for every until-formula the hues decide.
    untils: Vec<(usize, usize)>,
}

impl ProductGraph {
    pub fn new(closure: &Closure, mask: MemberSet, mut nodes: Vec<ProductNode>) -> Self {
        for n in nodes.iter_mut().filter(|n| n.wildcard) {
            n.hues = vec![closure.empty_set()];
        }
        let mut offsets = Vec::with_capacity(nodes.len());
        let mut pairs = Vec::new();
        for (n, node) in nodes.iter().enumerate() {
            offsets.push(pairs.len());
            pairs.extend((0..node.hues.len()).map(|h| (n, h)));
        }
        let untils = mask
            .iter()
            .filter_map(|m| match closure.kind(m) {
                MemberKind::Until(a, b) if mask.contains(a) && mask.contains(b) => Some((m, b)),
                _ => None,
            })
            .collect();

        let mut matching: Vec<HashMap<MemberSet, Vec<u32>>> = vec![HashMap::new(); nodes.len()];
        let mut succ = vec![Vec::new(); pairs.len()];
        let mut pred = vec![Vec::new(); pairs.len()];
        for (p, &(n, h)) in pairs.iter().enumerate() {
            let req = if nodes[n].wildcard {
                closure.empty_set()
            } else {
                successor_requirements(closure, &nodes[n].hues[h])
            };
            for &u in &nodes[n].successors {
                let targets = matching[u].entry(req.clone()).or_insert_with(|| {
                    let base = offsets[u];
                    nodes[u]
                        .hues
                        .iter()
                        .enumerate()
                        .filter(|(_, hue)| nodes[u].wildcard || req.is_subset(hue))
                        .map(|(i, _)| (base + i) as u32)
                        .collect()
                });
                for &q in targets.iter() {
                    succ[p].push(q);
                    pred[q as usize].push(p as u32);
                }
            }
        }
        ProductGraph {
            nodes,
            offsets,
            pairs,
            succ,
            pred,
            untils,
        }
    }

    pub fn nodes(&self) -> &[ProductNode] {
        &self.nodes
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    fn index(&self, (n, h): Pair) -> usize {
        self.offsets[n] + h
    }

    fn pending(&self, p: usize, until: usize, b: usize) -> bool {
        let (n, h) = self.pairs[p];
        let node = &self.nodes[n];
        !node.wildcard && node.hues[h].contains(until) && !node.hues[h].contains(b)
    }
}

#[derive(Debug, Clone)]
pub struct Fulfilment {
    alive: Vec<bool>,
}

impl Fulfilment {
    pub fn compute(graph: &ProductGraph) -> Self {
        let n = graph.pair_count();
        let mut alive = vec![true; n];
        let mut live_succ: Vec<usize> = graph.succ.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&p| live_succ[p] == 0).collect();

        let kill = |p: usize, alive: &mut Vec<bool>, live_succ: &mut Vec<usize>, queue: &mut Vec<usize>| {
            if !alive[p] {
                return false;
            }
            alive[p] = false;
            for &q in &graph.pred[p] {
                let q = q as usize;
                live_succ[q] -= 1;
                if live_succ[q] == 0 && alive[q] {
                    queue.push(q);
                }
            }
            true
        };

        loop {
            while let Some(p) = queue.pop() {
                kill(p, &mut alive, &mut live_succ, &mut queue);
            }
            let mut changed = false;
            for &(until, b) in &graph.untils {
                let mut reached = vec![false; n];
                let mut bfs: VecDeque<usize> = (0..n)
                    .filter(|&p| {
                        alive[p] && {
                            let (node, h) = graph.pairs[p];
                            graph.nodes[node].wildcard || graph.nodes[node].hues[h].contains(b)
                        }
                    })
                    .collect();
                for &p in &bfs {
                    reached[p] = true;
                }
                while let Some(p) = bfs.pop_front() {
                    for &q in &graph.pred[p] {
                        let q = q as usize;
                        if alive[q] && !reached[q] && graph.pending(q, until, b) {
                            reached[q] = true;
                            bfs.push_back(q);
                        }
                    }
                }
                for p in 0..n {
                    if alive[p] && !reached[p] && graph.pending(p, until, b) {
                        changed |= kill(p, &mut alive, &mut live_succ, &mut queue);
                    }
                }
            }
            if !changed && queue.is_empty() {
                break;
            }
        }
        Fulfilment { alive }
    }

    pub fn alive(&self, graph: &ProductGraph, pair: Pair) -> bool {
        self.alive[graph.index(pair)]
    }

    pub fn alive_hues<'g>(&'g self, graph: &'g ProductGraph, node: usize) -> impl Iterator<Item = usize> + 'g {
        (0..graph.nodes[node].hues.len()).filter(move |&h| self.alive(graph, (node, h)))
    }

    /// A fulfilling lasso from an alive pair: the prefix runs up to (not
    /// including) the loop entry, and the last loop element links back to
    /// the first.
    pub fn lasso(&self, graph: &ProductGraph, start: Pair) -> Option<(Vec<Pair>, Vec<Pair>)> {
        let start = graph.index(start);
        if !self.alive[start] {
            return None;
        }
        let (order, parent) = self.bfs(graph, start, |_| true);
        let mut sub: DiGraph<usize, ()> = DiGraph::new();
        let mut local = HashMap::new();
        for &p in &order {
            local.insert(p, sub.add_node(p));
        }
        for &p in &order {
            for &q in &graph.succ[p] {
                if let Some(&lq) = local.get(&(q as usize)) {
                    sub.add_edge(local[&p], lq, ());
                }
            }
        }
        let sink: Vec<usize> = tarjan_scc(&sub)
            .into_iter()
            .next()?
            .into_iter()
            .map(|i: NodeIndex| sub[i])
            .collect();
        let in_sink = |p: usize| sink.contains(&p);
        let entry = *order.iter().find(|&&p| in_sink(p))?;

        let mut prefix = path_to(&parent, start, entry);
        prefix.pop();

        let mut cycle = vec![entry];
        let mut at = entry;
        for &(until, b) in &graph.untils {
            if sink.iter().all(|&p| graph.pending(p, until, b)) {
                return None;
            }
            if cycle.iter().any(|&p| !graph.pending(p, until, b)) {
                continue;
            }
            let target = *sink.iter().find(|&&p| !graph.pending(p, until, b))?;
            at = self.walk(graph, at, target, &in_sink, &mut cycle)?;
        }
        // close the loop: step to a successor, then walk home
        let next = graph.succ[at]
            .iter()
            .map(|&q| q as usize)
            .find(|&q| in_sink(q) && self.alive[q])?;
        if next != entry {
            cycle.push(next);
            self.walk(graph, next, entry, &in_sink, &mut cycle)?;
            cycle.pop();
        }
        Some((
            prefix.into_iter().map(|p| graph.pairs[p]).collect(),
            cycle.into_iter().map(|p| graph.pairs[p]).collect(),
        ))
    }

    fn bfs(&self, graph: &ProductGraph, start: usize, allow: impl Fn(usize) -> bool) -> (Vec<usize>, HashMap<usize, usize>) {
        let mut order = vec![start];
        let mut parent = HashMap::new();
        parent.insert(start, start);
        let mut i = 0;
        while i < order.len() {
            let p = order[i];
            i += 1;
            for &q in &graph.succ[p] {
                let q = q as usize;
                if self.alive[q] && allow(q) && !parent.contains_key(&q) {
                    parent.insert(q, p);
                    order.push(q);
                }
            }
        }
        (order, parent)
    }

    /// Appends a path from `from` (exclusive) to `to` (inclusive) inside the sink.
    fn walk(
        &self,
        graph: &ProductGraph,
        from: usize,
        to: usize,
        in_sink: &impl Fn(usize) -> bool,
        cycle: &mut Vec<usize>,
    ) -> Option<usize> {
        if from == to {
            return Some(to);
        }
        let (_, parent) = self.bfs(graph, from, in_sink);
        if !parent.contains_key(&to) {
            return None;
        }
        let path = path_to(&parent, from, to);
        cycle.extend(path.into_iter().skip(1));
        Some(to)
    }
}

fn path_to(parent: &HashMap<usize, usize>, start: usize, end: usize) -> Vec<usize> {
    let mut path = vec![end];
    let mut at = end;
    while at != start {
        at = parent[&at];
        path.push(at);
    }
    path.reverse();
    path
}
