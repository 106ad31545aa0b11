//! Abstract state machines with stochastic behaviour over a finite snapshot
//! set.
//!
//! A machine pairs a control graph with a snapshot transformation per arc and
//! a distribution over `Out(n)` for every non-terminal node and snapshot. It
//! is a model in its own right and, through [`StochasticAsm::embed_as_quantum`],
//! an independent oracle for the quantum engine.

use std::collections::BTreeMap;
use std::fmt;

use crate::automaton::AbstractQuantumAutomaton;
use crate::error::{QautError, Result};
use crate::graph::{ControlGraph, GraphViolation};
use crate::linalg::{Complex, ComplexMatrix};
use crate::quantum::{KrausFamily, OutcomeSet, QuantumOperation};
use crate::run::{choose_index, seeded_rng, RunStatus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSet {
    labels: Vec<String>,
}

impl SnapshotSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(QautError::InvalidModel("snapshot set is empty".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QautError::InvalidModel(format!("duplicate snapshot `{l}`")));
            }
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QautError::UnknownSnapshot(label.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AsmViolation {
    Graph(GraphViolation),
    MissingTransform { arc: String },
    UnknownTransformArc { arc: String },
    /// The table does not map every snapshot to a known snapshot.
    PartialTransform { arc: String },
    /// Positive probability on an arc outside `Out(n)`.
    ArcOutsideOut { node: String, snapshot: String, arc: String, probability: f64 },
    ProbabilityOutOfRange { node: String, snapshot: String, arc: String, probability: f64 },
    NotNormalized { node: String, snapshot: String, total: f64 },
    DistributionOnTerminal { node: String, snapshot: String },
    UnknownDistributionTarget { node: String },
}

impl AsmViolation {
    /// The node or arc the violation is about.
    pub fn subject(&self) -> &str {
        match self {
            Self::Graph(g) => g.subject(),
            Self::MissingTransform { arc } | Self::UnknownTransformArc { arc } | Self::PartialTransform { arc } => arc,
            Self::ArcOutsideOut { node, .. }
            | Self::ProbabilityOutOfRange { node, .. }
            | Self::NotNormalized { node, .. }
            | Self::DistributionOnTerminal { node, .. }
            | Self::UnknownDistributionTarget { node } => node,
        }
    }
}

impl fmt::Display for AsmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Graph(g) => g.fmt(f),
            Self::MissingTransform { arc } => write!(f, "arc `{arc}` has no snapshot map"),
            Self::UnknownTransformArc { arc } => write!(f, "snapshot map given for unknown arc `{arc}`"),
            Self::PartialTransform { arc } => write!(f, "snapshot map of arc `{arc}` is not total"),
            Self::ArcOutsideOut { node, snapshot, arc, probability } => write!(
                f,
                "Pr({arc}|{snapshot},{node}) = {probability} but `{arc}` does not leave node `{node}`"
            ),
            Self::ProbabilityOutOfRange { node, snapshot, arc, probability } => {
                write!(f, "Pr({arc}|{snapshot},{node}) = {probability} lies outside [0, 1]")
            }
            Self::NotNormalized { node, snapshot, total } => {
                write!(f, "probabilities at node `{node}`, snapshot `{snapshot}` sum to {total}")
            }
            Self::DistributionOnTerminal { node, snapshot } => {
                write!(f, "terminal node `{node}` has a distribution for snapshot `{snapshot}`")
            }
            Self::UnknownDistributionTarget { node } => write!(f, "distribution given for unknown node `{node}`"),
        }
    }
}

/// A stochastic abstract state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticAsm {
    name: String,
    graph: ControlGraph,
    snapshots: SnapshotSet,
    /// Per arc, the image index of every snapshot index.
    transforms: BTreeMap<String, Vec<usize>>,
    /// `(node, snapshot index)` → `(arc, probability)` in arc order as given.
    dist: Distribution,
}

pub type Distribution = BTreeMap<(String, usize), Vec<(String, f64)>>;

/// One `prob(node, snapshot)` table: the key and its `(arc, probability)` entries.
pub type DistributionEntry = ((String, usize), Vec<(String, f64)>);

impl StochasticAsm {
    pub fn from_parts(
        name: &str,
        graph: ControlGraph,
        snapshots: SnapshotSet,
        transforms: Vec<(String, Vec<usize>)>,
        dist: Vec<DistributionEntry>,
    ) -> Self {
        Self {
            name: name.to_string(),
            graph,
            snapshots,
            transforms: transforms.into_iter().collect(),
            dist: dist.into_iter().collect(),
        }
    }

    pub fn new(
        name: &str,
        graph: ControlGraph,
        snapshots: SnapshotSet,
        transforms: Vec<(String, Vec<usize>)>,
        dist: Vec<DistributionEntry>,
        tol: f64,
    ) -> Result<Self> {
        let m = Self::from_parts(name, graph, snapshots, transforms, dist);
        let v = m.validate(tol);
        if v.is_empty() {
            Ok(m)
        } else {
            Err(QautError::InvalidModel(
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &ControlGraph {
        &self.graph
    }

    pub fn snapshots(&self) -> &SnapshotSet {
        &self.snapshots
    }

    pub fn transform(&self, arc: &str) -> Option<&[usize]> {
        self.transforms.get(arc).map(Vec::as_slice)
    }

    pub fn distributions(&self) -> &Distribution {
        &self.dist
    }

    /// `Pr(a|S,n)`, zero when unspecified.
    pub fn probability(&self, node: &str, snapshot: usize, arc: &str) -> f64 {
        self.dist
            .get(&(node.to_string(), snapshot))
            .and_then(|row| row.iter().find(|(a, _)| a == arc))
            .map_or(0.0, |(_, p)| *p)
    }

    /// Positive-probability arcs at `(node, snapshot)` in `Out(n)` order.
    fn branches(&self, node: &str, snapshot: usize) -> Vec<(&str, f64)> {
        self.graph
            .arcs()
            .iter()
            .filter(|a| a.dom == node)
            .map(|a| (a.id.as_str(), self.probability(node, snapshot, &a.id)))
            .filter(|(_, p)| *p > 0.0)
            .collect()
    }

    pub fn validate(&self, tol: f64) -> Vec<AsmViolation> {
        let mut v: Vec<AsmViolation> = self.graph.validate().into_iter().map(AsmViolation::Graph).collect();
        let n_snap = self.snapshots.len();
        for arc in self.graph.arcs() {
            match self.transforms.get(&arc.id) {
                None => v.push(AsmViolation::MissingTransform { arc: arc.id.clone() }),
                Some(t) if t.len() != n_snap || t.iter().any(|&s| s >= n_snap) => {
                    v.push(AsmViolation::PartialTransform { arc: arc.id.clone() })
                }
                Some(_) => {}
            }
        }
        for arc in self.transforms.keys() {
            if self.graph.arc(arc).is_none() {
                v.push(AsmViolation::UnknownTransformArc { arc: arc.clone() });
            }
        }
        for (node, s) in self.dist.keys() {
            if !self.graph.has_node(node) {
                v.push(AsmViolation::UnknownDistributionTarget { node: node.clone() });
            } else if self.graph.is_terminal(node) {
                v.push(AsmViolation::DistributionOnTerminal {
                    node: node.clone(),
                    snapshot: self.snapshot_label(*s),
                });
            }
        }
        for node in self.graph.nodes() {
            if self.graph.is_terminal(node) {
                continue;
            }
            for s in 0..n_snap {
                let row = self.dist.get(&(node.clone(), s)).cloned().unwrap_or_default();
                let mut total = 0.0;
                for (arc, p) in &row {
                    let leaves = self.graph.arc(arc).is_some_and(|a| &a.dom == node);
                    if !leaves && *p != 0.0 {
                        v.push(AsmViolation::ArcOutsideOut {
                            node: node.clone(),
                            snapshot: self.snapshot_label(s),
                            arc: arc.clone(),
                            probability: *p,
                        });
                    }
                    if !(0.0..=1.0).contains(p) {
                        v.push(AsmViolation::ProbabilityOutOfRange {
                            node: node.clone(),
                            snapshot: self.snapshot_label(s),
                            arc: arc.clone(),
                            probability: *p,
                        });
                    }
                    if leaves {
                        total += p;
                    }
                }
                if (total - 1.0).abs() > tol {
                    v.push(AsmViolation::NotNormalized {
                        node: node.clone(),
                        snapshot: self.snapshot_label(s),
                        total,
                    });
                }
            }
        }
        v
    }

    fn snapshot_label(&self, s: usize) -> String {
        self.snapshots.labels().get(s).cloned().unwrap_or_else(|| format!("#{s}"))
    }

    /// Samples one run from `(initial, s0)`.
    pub fn sample_run(&self, s0: &str, seed: u64, max_steps: usize) -> Result<ClassicalRunTrace> {
        if max_steps == 0 {
            return Err(QautError::ZeroSteps);
        }
        let mut snapshot = self.snapshots.index_of(s0)?;
        let mut node = self.graph.initial().to_string();
        let mut rng = seeded_rng(seed);
        let mut steps = Vec::new();
        for _ in 0..max_steps {
            if self.graph.is_terminal(&node) {
                break;
            }
            let branches = self.branches(&node, snapshot);
            let weights: Vec<f64> = branches.iter().map(|(_, p)| *p).collect();
            let Some(i) = choose_index(&weights, &mut rng) else {
                return Err(QautError::InvalidModel(format!(
                    "no positive-probability arc at node `{node}`"
                )));
            };
            let arc = branches[i].0.to_string();
            steps.push(ClassicalStep {
                node: node.clone(),
                snapshot: self.snapshots.labels()[snapshot].clone(),
                arc: Some(arc.clone()),
            });
            snapshot = self.transforms[&arc][snapshot];
            node = self.graph.arc(&arc).expect("declared arc").codom.clone();
        }
        let status = if self.graph.is_terminal(&node) {
            RunStatus::Converged
        } else {
            RunStatus::StepLimitExhausted
        };
        steps.push(ClassicalStep {
            node,
            snapshot: self.snapshots.labels()[snapshot].clone(),
            arc: None,
        });
        Ok(ClassicalRunTrace { steps, status })
    }

    /// Exhaustive branching over every positive-probability arc.
    pub fn enumerate(&self, s0: &str, max_steps: usize, prune_eps: f64) -> Result<ClassicalDistribution> {
        let s0 = self.snapshots.index_of(s0)?;
        let mut out = ClassicalDistribution::default();
        self.expand(self.graph.initial(), s0, 1.0, 0, max_steps, prune_eps, &mut out);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &self,
        node: &str,
        snapshot: usize,
        mass: f64,
        depth: usize,
        max_steps: usize,
        prune_eps: f64,
        out: &mut ClassicalDistribution,
    ) {
        if self.graph.is_terminal(node) {
            *out.terminal
                .entry((node.to_string(), self.snapshots.labels()[snapshot].clone()))
                .or_insert(0.0) += mass;
            return;
        }
        if depth == max_steps || mass <= prune_eps {
            out.residual += mass;
            return;
        }
        for (arc, p) in self.branches(node, snapshot) {
            let next = self.transforms[arc][snapshot];
            let codom = &self.graph.arc(arc).expect("declared arc").codom;
            self.expand(codom, next, mass * p, depth + 1, max_steps, prune_eps, out);
        }
    }

    /// Encodes the machine as a quantum automaton on `H_d`, `d = |snapshots|`,
    /// with basis `{|S⟩}`.
    ///
    /// The block for arc `a` at its source node is
    /// `K(a) = Σ_S √Pr(a|S,n) |g_a(S)⟩⟨S|`. When `g_a` merges two snapshots that
    /// both carry positive probability, that block would break completeness,
    /// so the arc is split into one parallel arc `a@S` per source snapshot;
    /// terminal node masses are unaffected.
    pub fn embed_as_quantum(&self, tol: f64) -> Result<AbstractQuantumAutomaton> {
        let v = self.validate(tol);
        if !v.is_empty() {
            return Err(QautError::InvalidModel(
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            ));
        }
        let d = self.snapshots.len();
        let mut arcs = Vec::new();
        let mut ops: BTreeMap<String, Vec<(String, ComplexMatrix)>> = BTreeMap::new();
        for arc in self.graph.arcs() {
            let table = &self.transforms[&arc.id];
            let terminal_source = self.graph.is_terminal(&arc.dom);
            let support: Vec<usize> = (0..d)
                .filter(|&s| self.probability(&arc.dom, s, &arc.id) > 0.0)
                .collect();
            let mut images: Vec<usize> = support.iter().map(|&s| table[s]).collect();
            images.sort_unstable();
            images.dedup();
            let injective = images.len() == support.len();

            let pieces: Vec<(String, Vec<usize>)> = if injective || terminal_source {
                vec![(arc.id.clone(), support)]
            } else {
                support
                    .iter()
                    .map(|&s| (format!("{}@{}", arc.id, self.snapshots.labels()[s]), vec![s]))
                    .collect()
            };
            for (id, sources) in pieces {
                let mut k = ComplexMatrix::zeros(d, d);
                for s in sources {
                    let p = self.probability(&arc.dom, s, &arc.id);
                    k[(table[s], s)] = Complex::new(p.sqrt(), 0.0);
                }
                arcs.push((id.clone(), arc.dom.clone(), arc.codom.clone()));
                if !terminal_source {
                    ops.entry(arc.dom.clone()).or_default().push((id, k));
                }
            }
        }
        let graph = ControlGraph::new(
            self.graph.nodes().to_vec(),
            arcs,
            self.graph.initial(),
            self.graph.terminals().iter().cloned(),
        )?;
        let ops = ops
            .into_iter()
            .map(|(node, blocks)| {
                let (labels, mats): (Vec<String>, Vec<ComplexMatrix>) = blocks.into_iter().unzip();
                Ok((node, QuantumOperation::new(KrausFamily::new(OutcomeSet::new(labels)?, mats, tol)?)))
            })
            .collect::<Result<Vec<_>>>()?;
        AbstractQuantumAutomaton::new(&self.name, d, graph, ops)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalStep {
    pub node: String,
    pub snapshot: String,
    /// Arc taken from this configuration; `None` on the last step.
    pub arc: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalRunTrace {
    pub steps: Vec<ClassicalStep>,
    pub status: RunStatus,
}

impl ClassicalRunTrace {
    pub fn last(&self) -> &ClassicalStep {
        self.steps.last().expect("traces are never empty")
    }
}

/// Terminal `(node, snapshot)` masses plus the mass that did not terminate
/// within the step bound or was pruned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassicalDistribution {
    pub terminal: BTreeMap<(String, String), f64>,
    pub residual: f64,
}

impl ClassicalDistribution {
    pub fn total(&self) -> f64 {
        self.terminal.values().sum::<f64>() + self.residual
    }
}

pub fn validate_asm(m: &StochasticAsm, tol: f64) -> Vec<AsmViolation> {
    m.validate(tol)
}

pub fn sample_classical_run(m: &StochasticAsm, s0: &str, seed: u64, max_steps: usize) -> Result<ClassicalRunTrace> {
    m.sample_run(s0, seed, max_steps)
}

pub fn enumerate_classical(
    m: &StochasticAsm,
    s0: &str,
    max_steps: usize,
    prune_eps: f64,
) -> Result<ClassicalDistribution> {
    m.enumerate(s0, max_steps, prune_eps)
}

pub fn embed_as_quantum(m: &StochasticAsm) -> Result<AbstractQuantumAutomaton> {
    m.embed_as_quantum(crate::linalg::DEFAULT_TOL)
}
