//! Depth-first search for a finished tableau, with exact backtracking.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{FormulaId, FormulaTable};
use crate::hue::{HueCap, HueError};
use crate::model::{self, Lasso, TransitionStructure};
use crate::tableau::{LinearCache, Rule, RuleInstance, Tableau, UndoToken};

pub const BOUND_CEILING: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Branches deeper than `branch_bound` are cut; cuts make unsat unknown.
    Bounded,
    /// The branch bound is taken from [`theoretical_branch_bound`].
    Complete,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub branch_bound: usize,
    pub node_bound: usize,
    /// Most phues one node may carry.
    pub phue_bound: usize,
    pub hue_cap: HueCap,
    pub timeout: Option<Duration>,
    pub assume_bound_sufficient: bool,
    pub rep_cut: bool,
    /// Non-zero seeds shuffle the alternatives of every choice point.
    pub seed: u64,
    /// Compare the tableau against a snapshot at every backtrack.
    pub check_integrity: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::Bounded,
            branch_bound: 50,
            node_bound: 20_000,
            phue_bound: 4,
            hue_cap: HueCap::default(),
            timeout: None,
            assume_bound_sufficient: false,
            rep_cut: false,
            seed: 0,
            check_integrity: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    BoundHit,
    Timeout,
    HueCap,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownReason::BoundHit => "bound-hit",
            UnknownReason::Timeout => "timeout",
            UnknownReason::HueCap => "hue-cap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Sat,
    Unsat,
    Unknown(UnknownReason),
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictKind::Sat => f.write_str("sat"),
            VerdictKind::Unsat => f.write_str("unsat"),
            VerdictKind::Unknown(r) => write!(f, "unknown ({r})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub nodes_created: u64,
    pub rules_applied: u64,
    pub backtracks: u64,
    pub choice_points: u64,
    pub lg_checks: u64,
    pub ntp_checks: u64,
    pub certifications: u64,
    pub cert_failures: u64,
    pub bound_cuts: u64,
    pub rep_cuts: u64,
    pub max_depth: u64,
    pub final_nodes: u64,
    pub elapsed_ms: u64,
}

impl Stats {
    pub fn to_map(&self) -> BTreeMap<&'static str, u64> {
        BTreeMap::from([
            ("nodes_created", self.nodes_created),
            ("rules_applied", self.rules_applied),
            ("backtracks", self.backtracks),
            ("choice_points", self.choice_points),
            ("lg_checks", self.lg_checks),
            ("ntp_checks", self.ntp_checks),
            ("certifications", self.certifications),
            ("cert_failures", self.cert_failures),
            ("bound_cuts", self.bound_cuts),
            ("rep_cuts", self.rep_cuts),
            ("max_depth", self.max_depth),
            ("final_nodes", self.final_nodes),
            ("elapsed_ms", self.elapsed_ms),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub model: Option<TransitionStructure>,
    pub witness: Option<Lasso>,
    pub stats: Stats,
    /// Serialized final tableau (sat only).
    pub tableau: Option<String>,
}

/// `min(2^(2^(2^l)), ceiling)` with `l = |φ|`, plus whether it saturated.
pub fn theoretical_branch_bound(table: &FormulaTable, f: FormulaId) -> (u64, bool) {
    tower_bound(table.size(f))
}

fn tower_bound(l: u64) -> (u64, bool) {
    let mut v: u64 = l;
    for _ in 0..3 {
        if v >= 30 {
            return (BOUND_CEILING, true);
        }
        v = 1 << v;
    }
    if v > BOUND_CEILING {
        (BOUND_CEILING, true)
    } else {
        (v, false)
    }
}

/// The first decision the search would take, with its first alternative.
pub fn pick_choice(t: &Tableau, cfg: &SearchConfig) -> Option<RuleInstance> {
    t.next_decision(cfg.rep_cut).map(|d| d.alternatives[0])
}

struct Frame {
    alternatives: Vec<RuleInstance>,
    next: usize,
    token: Option<UndoToken>,
    snapshot: Option<String>,
}

enum Abort {
    Timeout,
    HueCap,
}

impl From<HueError> for Abort {
    fn from(_: HueError) -> Self {
        Abort::HueCap
    }
}

struct Search<'a> {
    table: &'a mut FormulaTable,
    formula: FormulaId,
    cfg: SearchConfig,
    tableau: Tableau,
    stack: Vec<Frame>,
    stats: Stats,
    rng: Option<ChaCha8Rng>,
    start: Instant,
    steps: u64,
    node_cuts: u64,
    linear: LinearCache,
}

pub fn solve(table: &mut FormulaTable, f: FormulaId, cfg: &SearchConfig) -> Verdict {
    let mut cfg = cfg.clone();
    let mut bound_saturated = false;
    if cfg.mode == SearchMode::Complete {
        let (b, saturated) = theoretical_branch_bound(table, f);
        if saturated {
            log::warn!("theoretical branch bound saturated at {b}");
        }
        bound_saturated = saturated;
        cfg.branch_bound = usize::try_from(b).unwrap_or(usize::MAX);
    }
    let tableau = Tableau::init(table, f);
    let rng = (cfg.seed != 0).then(|| ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut search = Search {
        table,
        formula: f,
        cfg,
        tableau,
        stack: Vec::new(),
        stats: Stats::default(),
        rng,
        start: Instant::now(),
        steps: 0,
        node_cuts: 0,
        linear: LinearCache::default(),
    };
    let outcome = search.run();
    let mut stats = search.stats.clone();
    stats.elapsed_ms = search.start.elapsed().as_millis() as u64;
    let unknown = |reason| Verdict {
        kind: VerdictKind::Unknown(reason),
        model: None,
        witness: None,
        stats: stats.clone(),
        tableau: None,
    };
    match outcome {
        Err(Abort::Timeout) => unknown(UnknownReason::Timeout),
        Err(Abort::HueCap) => unknown(UnknownReason::HueCap),
        Ok(Some((model, witness))) => {
            stats.final_nodes = search.tableau.node_count() as u64;
            Verdict {
                kind: VerdictKind::Sat,
                model: Some(model),
                witness: Some(witness),
                stats,
                tableau: Some(search.tableau.serialize()),
            }
        }
        Ok(None) => {
            let branch_cuts = search.stats.bound_cuts - search.node_cuts;
            let trusted_depth = search.cfg.mode == SearchMode::Complete && !bound_saturated;
            let exhaustive = search.stats.rep_cuts == 0
                && search.node_cuts == 0
                && (branch_cuts == 0 || trusted_depth);
            if exhaustive || search.cfg.assume_bound_sufficient {
                Verdict {
                    kind: VerdictKind::Unsat,
                    model: None,
                    witness: None,
                    stats,
                    tableau: None,
                }
            } else {
                unknown(UnknownReason::BoundHit)
            }
        }
    }
}

impl Search<'_> {
    fn run(&mut self) -> Result<Option<(TransitionStructure, Lasso)>, Abort> {
        if !self.tableau.check_contradiction().passed() {
            return Ok(None);
        }
        loop {
            self.tick()?;
            match self.tableau.next_decision(self.cfg.rep_cut) {
                None => {
                    if let Some(found) = self.finish()? {
                        return Ok(Some(found));
                    }
                }
                Some(d) => {
                    if d.rep_cut {
                        self.stats.rep_cuts += 1;
                    }
                    let mut alternatives = d.alternatives;
                    if alternatives.len() > 1 {
                        self.stats.choice_points += 1;
                        if let Some(rng) = self.rng.as_mut() {
                            alternatives.shuffle(rng);
                        }
                    }
                    let snapshot = self.cfg.check_integrity.then(|| self.tableau.serialize());
                    self.stack.push(Frame {
                        alternatives,
                        next: 0,
                        token: None,
                        snapshot,
                    });
                }
            }
            if !self.advance()? {
                return Ok(None);
            }
        }
    }

    fn tick(&mut self) -> Result<(), Abort> {
        self.steps += 1;
        if self.steps.is_multiple_of(256) {
            if let Some(limit) = self.cfg.timeout {
                if self.start.elapsed() > limit {
                    return Err(Abort::Timeout);
                }
            }
        }
        Ok(())
    }

    /// Moves to the next viable alternative, undoing and popping frames as
    /// needed. Returns false once the whole choice tree is exhausted.
    fn advance(&mut self) -> Result<bool, Abort> {
        loop {
            let Some(frame) = self.stack.last_mut() else {
                return Ok(false);
            };
            if let Some(token) = frame.token.take() {
                self.tableau.undo(token).expect("stack discipline");
                self.stats.backtracks += 1;
                if let Some(snap) = &frame.snapshot {
                    assert_eq!(&self.tableau.serialize(), snap, "backtrack restored a different tableau");
                }
            }
            if frame.next >= frame.alternatives.len() {
                self.stack.pop();
                continue;
            }
            let rule = frame.alternatives[frame.next];
            frame.next += 1;
            let Ok(token) = self.tableau.apply(&rule) else {
                continue;
            };
            self.stats.rules_applied += 1;
            log::trace!("depth {} apply {:?}", self.stack.len(), rule);
            let viable = self.viable(&rule, &token)?;
            self.stack.last_mut().expect("frame").token = Some(token);
            if viable {
                return Ok(true);
            }
            self.tick()?;
        }
    }

    fn viable(&mut self, rule: &RuleInstance, token: &UndoToken) -> Result<bool, Abort> {
        let touched = token.touched();
        let report = self.tableau.check_contradiction_at(&touched);
        if !report.passed() {
            log::trace!("{report}");
            return Ok(false);
        }
        let report = self.tableau.check_linear_at(&touched, &mut self.linear, self.cfg.hue_cap)?;
        if !report.passed() {
            log::trace!("{report}");
            return Ok(false);
        }
        if let Some(u) = token.created_node() {
            self.stats.nodes_created += 1;
            let depth = self.tableau.node(u).map_or(0, |n| n.depth());
            self.stats.max_depth = self.stats.max_depth.max(depth as u64);
            if depth > self.cfg.branch_bound {
                self.stats.bound_cuts += 1;
                return Ok(false);
            }
            if self.tableau.node_count() > self.cfg.node_bound {
                self.stats.bound_cuts += 1;
                self.node_cuts += 1;
                return Ok(false);
            }
        }
        if matches!(rule.rule, Rule::Pred(_) | Rule::Pos(_)) {
            let wide = token
                .touched()
                .into_iter()
                .any(|t| self.tableau.node(t).is_some_and(|n| n.label().len() > self.cfg.phue_bound));
            if wide {
                self.stats.bound_cuts += 1;
                self.node_cuts += 1;
                return Ok(false);
            }
        }
        if let Rule::Loop(_) = rule.rule {
            self.stats.ntp_checks += 1;
            if !self.tableau.check_ntp().passed() {
                return Ok(false);
            }
            self.stats.lg_checks += 1;
            if !self.tableau.check_lg(self.cfg.hue_cap)?.passed() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// No rule applies: run the final checks and certify the model.
    fn finish(&mut self) -> Result<Option<(TransitionStructure, Lasso)>, Abort> {
        if !self.tableau.is_complete() {
            return Ok(None);
        }
        self.stats.ntp_checks += 1;
        if !self.tableau.check_ntp().passed() {
            return Ok(None);
        }
        self.stats.lg_checks += 1;
        if !self.tableau.check_lg(self.cfg.hue_cap)?.passed() {
            return Ok(None);
        }
        let Ok(m) = model::extract(&self.tableau) else {
            return Ok(None);
        };
        self.stats.certifications += 1;
        let root = m.initial();
        match model::verify(&m, root, self.table, self.formula, self.cfg.hue_cap) {
            Ok(Some(w)) => Ok(Some((m, w))),
            Ok(None) => {
                self.stats.cert_failures += 1;
                log::debug!("certification failed; backtracking");
                Ok(None)
            }
            Err(model::ModelError::Hue(_)) => Err(Abort::HueCap),
            Err(_) => {
                self.stats.cert_failures += 1;
                Ok(None)
            }
        }
    }
}
