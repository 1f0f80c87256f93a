//! Finite transition structures, CTL* checking on them, and model output.

mod check;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{Closure, MemberSet};
use crate::formula::{FormulaId, FormulaTable};
use crate::hue::{HueCap, HueError};
use crate::tableau::Tableau;

pub use check::{Checker, Kripke, Mode, Product};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("state {0} has no successor")]
    NotTotal(usize),
    #[error("edge ({0}, {1}) refers to a missing state")]
    BadEdge(usize, usize),
    #[error("state {0} does not exist")]
    BadState(usize),
    #[error("formula contains a path quantifier")]
    NotPathFormula,
    #[error("tableau is not finished")]
    NotFinished,
    #[error(transparent)]
    Hue(#[from] HueError),
    #[error("malformed model: {0}")]
    Json(#[from] serde_json::Error),
}

/// An ultimately periodic path `prefix · loop^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lasso {
    pub prefix: Vec<usize>,
    #[serde(rename = "loop")]
    pub cycle: Vec<usize>,
}

impl Lasso {
    /// State at position `i` of the infinite path.
    pub fn state(&self, i: usize) -> usize {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    pub fn is_path_in(&self, m: &TransitionStructure) -> bool {
        if self.cycle.is_empty() {
            return false;
        }
        let n = self.prefix.len() + self.cycle.len();
        (0..n).all(|i| m.successors(self.state(i)).contains(&self.state(i + 1)))
    }
}

/// A finite structure with a total transition relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionStructure {
    labels: Vec<BTreeSet<String>>,
    succ: Vec<Vec<usize>>,
    initial: usize,
}

impl TransitionStructure {
    pub fn new(
        labels: Vec<BTreeSet<String>>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        initial: usize,
    ) -> Result<Self, ModelError> {
        let n = labels.len();
        let mut succ = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::BadEdge(a, b));
            }
            succ[a].insert(b);
        }
        if initial >= n {
            return Err(ModelError::BadState(initial));
        }
        if let Some(s) = succ.iter().position(BTreeSet::is_empty) {
            return Err(ModelError::NotTotal(s));
        }
        Ok(TransitionStructure {
            labels,
            succ: succ.into_iter().map(|s| s.into_iter().collect()).collect(),
            initial,
        })
    }

    pub fn state_count(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn successors(&self, s: usize) -> &[usize] {
        &self.succ[s]
    }

    pub fn atoms(&self, s: usize) -> &BTreeSet<String> {
        &self.labels[s]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, bs)| bs.iter().map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// The structure with atoms renamed into closure members.
    pub fn kripke(&self, closure: &Closure) -> Kripke {
        let atoms = self
            .labels
            .iter()
            .map(|names| {
                MemberSet::with_members(
                    closure.len(),
                    closure
                        .atom_members()
                        .iter()
                        .copied()
                        .filter(|&m| closure.atom_name_of(m).is_some_and(|a| names.contains(a))),
                )
            })
            .collect();
        Kripke {
            succ: self.succ.clone(),
            open: vec![false; self.state_count()],
            atoms,
        }
    }

    pub fn to_json(&self, witness: Option<&Lasso>) -> serde_json::Value {
        let doc = ModelJson {
            states: self
                .labels
                .iter()
                .enumerate()
                .map(|(id, atoms)| StateJson {
                    id,
                    atoms: atoms.iter().cloned().collect(),
                })
                .collect(),
            edges: self.edges().map(|(a, b)| [a, b]).collect(),
            initial: self.initial,
            witness: witness.cloned(),
        };
        serde_json::to_value(doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<(Self, Option<Lasso>), ModelError> {
        let doc: ModelJson = serde_json::from_str(text)?;
        let n = doc.states.len();
        let mut labels = vec![BTreeSet::new(); n];
        for st in doc.states {
            if st.id >= n {
                return Err(ModelError::BadState(st.id));
            }
            labels[st.id] = st.atoms.into_iter().collect();
        }
        let m = TransitionStructure::new(labels, doc.edges.into_iter().map(|[a, b]| (a, b)), doc.initial)?;
        Ok((m, doc.witness))
    }

    pub fn to_dot(&self, witness: Option<&Lasso>) -> String {
        let on_path: BTreeSet<(usize, usize)> = witness
            .map(|w| {
                let n = w.prefix.len() + w.cycle.len();
                (0..n).map(|i| (w.state(i), w.state(i + 1))).collect()
            })
            .unwrap_or_default();
        let mut out = String::from("digraph model {\n");
        for (s, atoms) in self.labels.iter().enumerate() {
            let label = atoms.iter().cloned().collect::<Vec<_>>().join(",");
            let shape = if s == self.initial { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  s{s} [shape={shape}, label=\"s{s}\\n{{{label}}}\"];");
        }
        for (a, b) in self.edges() {
            let style = if on_path.contains(&(a, b)) { " [style=bold]" } else { "" };
            let _ = writeln!(out, "  s{a} -> s{b}{style};");
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    states: Vec<StateJson>,
    edges: Vec<[usize; 2]>,
    initial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<Lasso>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    id: usize,
    atoms: Vec<String>,
}

fn check_state(m: &TransitionStructure, s: usize) -> Result<(), ModelError> {
    if s >= m.state_count() {
        Err(ModelError::BadState(s))
    } else {
        Ok(())
    }
}

fn witness_from(m: &TransitionStructure, closure: &Closure, s: usize, cap: HueCap) -> Result<Option<Lasso>, ModelError> {
    let kripke = m.kripke(closure);
    let mut checker = Checker::new(closure, &kripke, cap);
    let root = closure.root_member();
    let mask = closure.path_mask([root]);
    let product = checker.product(&mask, Mode::May)?;
    let seeds = MemberSet::with_members(closure.len(), [root]);
    Ok(product.witness(s, &seeds).map(|(prefix, cycle)| Lasso {
        prefix: prefix.into_iter().map(|(s, _)| s).collect(),
        cycle: cycle.into_iter().map(|(s, _)| s).collect(),
    }))
}

/// Some fullpath from `s` satisfies the `A`-free formula `f`.
pub fn path_exists(
    m: &TransitionStructure,
    s: usize,
    table: &mut FormulaTable,
    f: FormulaId,
    cap: HueCap,
) -> Result<Option<Lasso>, ModelError> {
    check_state(m, s)?;
    if table.contains_all(f) {
        return Err(ModelError::NotPathFormula);
    }
    let closure = Closure::new(table, f);
    witness_from(m, &closure, s, cap)
}

/// Full CTL* check that some fullpath from `s` satisfies `f`; the witness
/// path is returned when it does.
pub fn verify(
    m: &TransitionStructure,
    s: usize,
    table: &mut FormulaTable,
    f: FormulaId,
    cap: HueCap,
) -> Result<Option<Lasso>, ModelError> {
    check_state(m, s)?;
    let closure = Closure::new(table, f);
    witness_from(m, &closure, s, cap)
}

/// Reads a structure off a complete tableau: nodes become states, every
/// successor slot becomes an edge and a state's atoms are those occurring
/// positively in any of its phues.
pub fn extract(t: &Tableau) -> Result<TransitionStructure, ModelError> {
    if !t.is_complete() {
        return Err(ModelError::NotFinished);
    }
    let ids: Vec<usize> = t.live_nodes().collect();
    let dense: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(d, &n)| (n, d)).collect();
    let c = t.closure();
    let labels = ids
        .iter()
        .map(|&n| {
            t.decided_atoms(n)
                .iter()
                .filter_map(|m| c.atom_name_of(m).map(str::to_owned))
                .collect()
        })
        .collect();
    let edges: Vec<(usize, usize)> = ids
        .iter()
        .flat_map(|&n| t.successor_nodes(n).into_iter().map(move |u| (n, u)))
        .map(|(a, b)| (dense[&a], dense[&b]))
        .collect();
    TransitionStructure::new(labels, edges, dense[&t.root()])
}

/// The actual hues of every state over the full closure.
pub fn realizable_hues(m: &TransitionStructure, closure: &Closure, cap: HueCap) -> Result<Vec<Vec<MemberSet>>, ModelError> {
    let kripke = m.kripke(closure);
    let mut checker = Checker::new(closure, &kripke, cap);
    let product = checker.product(&closure.full_set(), Mode::May)?;
    Ok((0..m.state_count())
        .map(|s| product.alive_hues(s).cloned().collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hue::{big_rx, is_colour};

    fn labels(ls: &[&[&str]]) -> Vec<BTreeSet<String>> {
        ls.iter()
            .map(|l| l.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn p_loop() -> TransitionStructure {
        TransitionStructure::new(labels(&[&["p"]]), [(0, 0)], 0).unwrap()
    }

    fn holds(m: &TransitionStructure, s: usize, src: &str) -> bool {
        let mut t = FormulaTable::new();
        let f = t.parse(src).unwrap();
        verify(m, s, &mut t, f, HueCap::default()).unwrap().is_some()
    }

    #[test]
    fn totality_is_enforced() {
        let err = TransitionStructure::new(labels(&[&[], &[]]), [(0, 1)], 0).unwrap_err();
        assert!(matches!(err, ModelError::NotTotal(1)));
    }

    #[test]
    fn self_loop_checks() {
        let m = p_loop();
        assert!(holds(&m, 0, "p"));
        assert!(holds(&m, 0, "A G p"));
        assert!(!holds(&m, 0, "F ~p"));
        let mut t = FormulaTable::new();
        let g = t.parse("G p").unwrap();
        let w = path_exists(&m, 0, &mut t, g, HueCap::default()).unwrap().unwrap();
        assert_eq!(w, Lasso { prefix: vec![], cycle: vec![0] });
        let a = t.parse("A p").unwrap();
        assert!(matches!(
            path_exists(&m, 0, &mut t, a, HueCap::default()),
            Err(ModelError::NotPathFormula)
        ));
    }

    #[test]
    fn branching_quantifiers() {
        // 0 -> 1 (p), 0 -> 2 (~p); both sinks loop
        let m = TransitionStructure::new(labels(&[&[], &["p"], &[]]), [(0, 1), (0, 2), (1, 1), (2, 2)], 0).unwrap();
        assert!(holds(&m, 0, "E X p & E X ~p"));
        assert!(!holds(&m, 0, "A X p"));
        assert!(holds(&m, 0, "A (X p | X ~p)"));
        assert!(holds(&m, 0, "A F (A G p | A G ~p)"));
    }

    #[test]
    fn witnesses_are_paths() {
        let m = TransitionStructure::new(labels(&[&["p"], &[]]), [(0, 1), (1, 0)], 0).unwrap();
        let mut t = FormulaTable::new();
        let f = t.parse("G F p & G F ~p").unwrap();
        let w = verify(&m, 0, &mut t, f, HueCap::default()).unwrap().unwrap();
        assert!(w.is_path_in(&m));
    }

    #[test]
    fn realizable_hues_form_colours() {
        let m = TransitionStructure::new(labels(&[&["p"], &[]]), [(0, 1), (1, 0), (1, 1)], 0).unwrap();
        let mut t = FormulaTable::new();
        let f = t.parse("E F ~p & A G (p -> X ~p)").unwrap();
        let c = Closure::new(&mut t, f);
        let hues = realizable_hues(&m, &c, HueCap::default()).unwrap();
        for s in 0..2 {
            assert!(is_colour(&c, &hues[s]));
            for &u in m.successors(s) {
                assert!(big_rx(&c, &hues[s], &hues[u]));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = TransitionStructure::new(labels(&[&["p", "q"], &[]]), [(0, 1), (1, 1)], 0).unwrap();
        let w = Lasso { prefix: vec![0], cycle: vec![1] };
        let text = m.to_json(Some(&w)).to_string();
        let (back, bw) = TransitionStructure::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(bw, Some(w));
        assert!(m.to_dot(None).contains("s0 -> s1;"));
    }
}
