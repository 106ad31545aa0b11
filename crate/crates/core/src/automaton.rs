//! Abstract quantum automata and their run semantics.
//!
//! An automaton is a control graph whose non-terminal nodes carry quantum
//! operations with outcome set `Out(n)`; the arc ids double as outcome
//! labels. A run alternates drawing an outgoing arc with the Born rule and
//! replacing the state by the normalized effect of that outcome.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{QautError, Result};
use crate::graph::{ControlGraph, GraphViolation};
use crate::linalg::{ComplexMatrix, DEFAULT_TOL};
use crate::quantum::{clamp_probability, effect_unchecked, raw_probability, DensityOperator, QuantumOperation};
use crate::run::{choose_index, seeded_rng, RunStatus};

pub use crate::quantum::partial_trace;

#[derive(Debug, Clone, PartialEq)]
pub enum AutomatonViolation {
    Graph(GraphViolation),
    ZeroDimension,
    MissingOp { node: String },
    OpOnTerminal { node: String },
    OpOnUnknownNode { node: String },
    DuplicateOp { node: String },
    OutcomeMismatch { node: String, expected: Vec<String>, found: Vec<String> },
    DimensionMismatch { node: String, expected: usize, found: usize },
    Incomplete { node: String, deviation: f64 },
}

impl AutomatonViolation {
    pub fn node(&self) -> &str {
        match self {
            Self::Graph(g) => g.subject(),
            Self::ZeroDimension => "",
            Self::MissingOp { node }
            | Self::OpOnTerminal { node }
            | Self::OpOnUnknownNode { node }
            | Self::DuplicateOp { node }
            | Self::OutcomeMismatch { node, .. }
            | Self::DimensionMismatch { node, .. }
            | Self::Incomplete { node, .. } => node,
        }
    }
}

impl fmt::Display for AutomatonViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Graph(g) => g.fmt(f),
            Self::ZeroDimension => write!(f, "state space dimension must be positive"),
            Self::MissingOp { node } => write!(f, "non-terminal node `{node}` has no operation"),
            Self::OpOnTerminal { node } => write!(f, "terminal node `{node}` carries an operation"),
            Self::OpOnUnknownNode { node } => write!(f, "operation given for unknown node `{node}`"),
            Self::DuplicateOp { node } => write!(f, "node `{node}` has more than one operation"),
            Self::OutcomeMismatch { node, expected, found } => write!(
                f,
                "outcomes of the operation at node `{node}` are {found:?}, but Out({node}) is {expected:?}"
            ),
            Self::DimensionMismatch { node, expected, found } => write!(
                f,
                "operation at node `{node}` acts on dimension {found}, automaton dimension is {expected}"
            ),
            Self::Incomplete { node, deviation } => {
                write!(f, "completeness violated at node `{node}` (deviation {deviation:e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractQuantumAutomaton {
    name: String,
    dim: usize,
    graph: ControlGraph,
    ops: Vec<(String, QuantumOperation)>,
}

impl AbstractQuantumAutomaton {
    /// Assembles an automaton without checking it.
    pub fn from_parts(name: &str, dim: usize, graph: ControlGraph, ops: Vec<(String, QuantumOperation)>) -> Self {
        Self {
            name: name.to_string(),
            dim,
            graph,
            ops,
        }
    }

    pub fn new(name: &str, dim: usize, graph: ControlGraph, ops: Vec<(String, QuantumOperation)>) -> Result<Self> {
        let a = Self::from_parts(name, dim, graph, ops);
        let v = a.validate();
        if v.is_empty() {
            Ok(a)
        } else {
            Err(QautError::InvalidModel(
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn graph(&self) -> &ControlGraph {
        &self.graph
    }

    pub fn ops(&self) -> &[(String, QuantumOperation)] {
        &self.ops
    }

    pub fn op(&self, node: &str) -> Option<&QuantumOperation> {
        self.ops.iter().find(|(n, _)| n == node).map(|(_, op)| op)
    }

    /// Replaces the operation at `node`; the result is re-validated.
    pub fn with_op(&self, node: &str, op: QuantumOperation) -> Result<Self> {
        let mut ops = self.ops.clone();
        let slot = ops
            .iter_mut()
            .find(|(n, _)| n == node)
            .ok_or_else(|| QautError::UnknownNode(node.to_string()))?;
        slot.1 = op;
        Self::new(&self.name, self.dim, self.graph.clone(), ops)
    }

    pub fn validate(&self) -> Vec<AutomatonViolation> {
        self.validate_with(DEFAULT_TOL)
    }

    pub fn validate_with(&self, tol: f64) -> Vec<AutomatonViolation> {
        let mut v: Vec<AutomatonViolation> = self.graph.validate().into_iter().map(AutomatonViolation::Graph).collect();
        if self.dim == 0 {
            v.push(AutomatonViolation::ZeroDimension);
        }
        for (i, (node, op)) in self.ops.iter().enumerate() {
            if self.ops[..i].iter().any(|(n, _)| n == node) {
                v.push(AutomatonViolation::DuplicateOp { node: node.clone() });
                continue;
            }
            if !self.graph.has_node(node) {
                v.push(AutomatonViolation::OpOnUnknownNode { node: node.clone() });
                continue;
            }
            if self.graph.is_terminal(node) {
                v.push(AutomatonViolation::OpOnTerminal { node: node.clone() });
                continue;
            }
            let expected: Vec<String> = self
                .graph
                .out_arcs(node)
                .expect("known node")
                .iter()
                .map(|a| a.id.clone())
                .collect();
            let found = op.outcomes().labels().to_vec();
            if expected != found {
                v.push(AutomatonViolation::OutcomeMismatch {
                    node: node.clone(),
                    expected,
                    found,
                });
            }
            if op.dim() != self.dim {
                v.push(AutomatonViolation::DimensionMismatch {
                    node: node.clone(),
                    expected: self.dim,
                    found: op.dim(),
                });
            }
            let deviation = op.kraus().completeness_deviation();
            if deviation > tol {
                v.push(AutomatonViolation::Incomplete {
                    node: node.clone(),
                    deviation,
                });
            }
        }
        for node in self.graph.nodes() {
            if !self.graph.is_terminal(node) && self.op(node).is_none() {
                v.push(AutomatonViolation::MissingOp { node: node.clone() });
            }
        }
        v
    }

    fn check_state(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(QautError::DimensionMismatch(format!(
                "automaton acts on dimension {}, state has dimension {}",
                self.dim,
                rho.dim()
            )));
        }
        Ok(())
    }

    /// `Pr(a|n,ρ)` for every `a ∈ Out(n)`, including negligible ones.
    pub fn step_distribution(&self, c: &Configuration) -> Result<Vec<(String, f64)>> {
        self.check_state(&c.state)?;
        if !self.graph.has_node(&c.node) {
            return Err(QautError::UnknownNode(c.node.clone()));
        }
        let op = self
            .op(&c.node)
            .ok_or_else(|| QautError::TerminalNode(c.node.clone()))?;
        op.kraus()
            .iter()
            .map(|(a, k)| Ok((a.to_string(), clamp_probability(raw_probability(k, &c.state), DEFAULT_TOL)?)))
            .collect()
    }

    /// Successor configurations with probability above `prob_floor`, in
    /// `Out(n)` order.
    pub fn step(&self, c: &Configuration, prob_floor: f64) -> Result<Vec<Branch>> {
        self.check_state(&c.state)?;
        if !self.graph.has_node(&c.node) {
            return Err(QautError::UnknownNode(c.node.clone()));
        }
        let op = self
            .op(&c.node)
            .ok_or_else(|| QautError::TerminalNode(c.node.clone()))?;
        let mut out = Vec::new();
        for (arc, k) in op.kraus().iter() {
            let raw = raw_probability(k, &c.state);
            let p = clamp_probability(raw, DEFAULT_TOL)?;
            if p <= prob_floor {
                continue;
            }
            let codom = &self.graph.arc(arc).expect("outcomes are arcs").codom;
            out.push(Branch {
                arc: arc.to_string(),
                probability: p,
                next: Configuration {
                    node: codom.clone(),
                    state: effect_unchecked(k, &c.state, raw),
                },
            });
        }
        Ok(out)
    }

    pub fn initial_configuration(&self, rho0: DensityOperator) -> Result<Configuration> {
        self.check_state(&rho0)?;
        Ok(Configuration {
            node: self.graph.initial().to_string(),
            state: rho0,
        })
    }

    /// Samples one run from `(n₀, ρ₀)`, taking at most `max_steps`
    /// transitions.
    pub fn sample_run(&self, rho0: &DensityOperator, seed: u64, max_steps: usize) -> Result<QuantumRunTrace> {
        self.sample_run_with(rho0, seed, max_steps, crate::quantum::DEFAULT_PROB_FLOOR)
    }

    pub fn sample_run_with(
        &self,
        rho0: &DensityOperator,
        seed: u64,
        max_steps: usize,
        prob_floor: f64,
    ) -> Result<QuantumRunTrace> {
        if max_steps == 0 {
            return Err(QautError::ZeroSteps);
        }
        let mut rng = seeded_rng(seed);
        let mut current = self.initial_configuration(rho0.clone())?;
        let mut steps = Vec::new();
        for _ in 0..max_steps {
            if self.graph.is_terminal(&current.node) {
                break;
            }
            let mut branches = self.step(&current, prob_floor)?;
            let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
            let i = choose_index(&weights, &mut rng).ok_or_else(|| {
                QautError::InvalidModel(format!("no outcome above the floor at node `{}`", current.node))
            })?;
            let chosen = branches.swap_remove(i);
            steps.push(QuantumStep {
                config: current,
                arc: Some(chosen.arc),
                probability: Some(chosen.probability),
            });
            current = chosen.next;
        }
        let status = if self.graph.is_terminal(&current.node) {
            RunStatus::Converged
        } else {
            RunStatus::StepLimitExhausted
        };
        steps.push(QuantumStep {
            config: current,
            arc: None,
            probability: None,
        });
        Ok(QuantumRunTrace { steps, status })
    }

    /// Depth-first expansion of every branch.
    pub fn enumerate(&self, rho0: &DensityOperator, opts: &EnumerateOptions) -> Result<BranchTree> {
        let root = self.initial_configuration(rho0.clone())?;
        let root = self.expand(root, 1.0, 0, opts)?;
        Ok(BranchTree { root })
    }

    fn expand(&self, config: Configuration, mass: f64, depth: usize, opts: &EnumerateOptions) -> Result<BranchNode> {
        if self.graph.is_terminal(&config.node) {
            return Ok(BranchNode {
                config,
                mass,
                depth,
                kind: NodeKind::Terminal,
            });
        }
        if depth >= opts.max_steps {
            return Ok(BranchNode {
                config,
                mass,
                depth,
                kind: NodeKind::Unexpanded,
            });
        }
        if depth > 0 && mass <= opts.prune_eps {
            return Ok(BranchNode {
                config,
                mass,
                depth,
                kind: NodeKind::Pruned,
            });
        }
        let branches = self.step(&config, opts.prob_floor)?;
        let kept: f64 = branches.iter().map(|b| b.probability).sum();
        // Outcomes at or below the floor are impossible by definition; their
        // (tiny) mass is accounted separately.
        let dropped = (mass * (1.0 - kept)).max(0.0);
        let children = branches
            .into_iter()
            .map(|b| {
                let child = self.expand(b.next, mass * b.probability, depth + 1, opts)?;
                Ok(BranchEdge {
                    arc: b.arc,
                    probability: b.probability,
                    child,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BranchNode {
            config,
            mass,
            depth,
            kind: NodeKind::Internal { children, dropped },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub node: String,
    pub state: DensityOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub arc: String,
    pub probability: f64,
    pub next: Configuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStep {
    pub config: Configuration,
    /// Arc taken out of this configuration; `None` on the final step.
    pub arc: Option<String>,
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRunTrace {
    pub steps: Vec<QuantumStep>,
    pub status: RunStatus,
}

impl QuantumRunTrace {
    pub fn final_config(&self) -> &Configuration {
        &self.steps.last().expect("traces are never empty").config
    }

    /// Product of the chosen arc probabilities.
    pub fn probability(&self) -> f64 {
        self.steps.iter().filter_map(|s| s.probability).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    pub max_steps: usize,
    /// Branches whose cumulative mass is at or below this are not expanded.
    pub prune_eps: f64,
    pub prob_floor: f64,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            max_steps: 64,
            prune_eps: 0.0,
            prob_floor: crate::quantum::DEFAULT_PROB_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Internal {
        children: Vec<BranchEdge>,
        /// Mass of outcomes suppressed by the probability floor.
        dropped: f64,
    },
    Terminal,
    /// The step bound was hit at a non-terminal node.
    Unexpanded,
    Pruned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchNode {
    pub config: Configuration,
    /// Cumulative probability of the path from the root.
    pub mass: f64,
    pub depth: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchEdge {
    pub arc: String,
    pub probability: f64,
    pub child: BranchNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Terminal,
    Unexpanded,
    Pruned,
}

impl LeafKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafKind::Terminal => "terminal",
            LeafKind::Unexpanded => "unexpanded",
            LeafKind::Pruned => "pruned",
        }
    }
}

/// A flattened leaf of a [`BranchTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    /// Arcs from the root to this leaf.
    pub path: Vec<String>,
    pub node: String,
    pub mass: f64,
    pub state: DensityOperator,
    pub kind: LeafKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchTree {
    pub root: BranchNode,
}

impl BranchTree {
    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<Leaf> {
        fn walk(n: &BranchNode, path: &mut Vec<String>, out: &mut Vec<Leaf>) {
            let kind = match &n.kind {
                NodeKind::Internal { children, .. } => {
                    for e in children {
                        path.push(e.arc.clone());
                        walk(&e.child, path, out);
                        path.pop();
                    }
                    return;
                }
                NodeKind::Terminal => LeafKind::Terminal,
                NodeKind::Unexpanded => LeafKind::Unexpanded,
                NodeKind::Pruned => LeafKind::Pruned,
            };
            out.push(Leaf {
                path: path.clone(),
                node: n.config.node.clone(),
                mass: n.mass,
                state: n.config.state.clone(),
                kind,
            });
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn terminal_leaves(&self) -> Vec<Leaf> {
        self.leaves().into_iter().filter(|l| l.kind == LeafKind::Terminal).collect()
    }

    pub fn terminal_mass(&self) -> f64 {
        self.terminal_leaves().iter().fold(0.0, |acc, l| acc + l.mass)
    }

    /// Mass of branches cut off by the step bound or pruning.
    pub fn residual_mass(&self) -> f64 {
        self.leaves()
            .iter()
            .filter(|l| l.kind != LeafKind::Terminal)
            .fold(0.0, |acc, l| acc + l.mass)
    }

    /// Mass of outcomes suppressed by the probability floor.
    pub fn dropped_mass(&self) -> f64 {
        fn walk(n: &BranchNode) -> f64 {
            match &n.kind {
                NodeKind::Internal { children, dropped } => dropped + children.iter().map(|e| walk(&e.child)).sum::<f64>(),
                _ => 0.0,
            }
        }
        walk(&self.root)
    }

    /// Visits every configuration in the tree, root first.
    pub fn for_each_node(&self, mut f: impl FnMut(&BranchNode)) {
        fn walk(n: &BranchNode, f: &mut dyn FnMut(&BranchNode)) {
            f(n);
            if let NodeKind::Internal { children, .. } = &n.kind {
                for e in children {
                    walk(&e.child, f);
                }
            }
        }
        walk(&self.root, &mut f);
    }

    /// Per terminal node: total mass and the mass-weighted average state.
    pub fn final_mixture(&self, tol: f64) -> Result<BTreeMap<String, FinalMixture>> {
        let residual = self.residual_mass();
        if residual > tol {
            return Err(QautError::ResidualMass(residual));
        }
        let mut acc: BTreeMap<String, (f64, ComplexMatrix)> = BTreeMap::new();
        for leaf in self.terminal_leaves() {
            let dim = leaf.state.dim();
            let entry = acc
                .entry(leaf.node.clone())
                .or_insert_with(|| (0.0, ComplexMatrix::zeros(dim, dim)));
            entry.0 += leaf.mass;
            entry.1 = &entry.1 + &leaf.state.matrix().scale_real(leaf.mass);
        }
        Ok(acc
            .into_iter()
            .filter(|(_, (mass, _))| *mass > 0.0)
            .map(|(node, (mass, m))| {
                let state = DensityOperator::from_trusted(m.scale_real(1.0 / mass));
                (node, FinalMixture { mass, state })
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalMixture {
    pub mass: f64,
    pub state: DensityOperator,
}

pub fn validate_automaton(a: &AbstractQuantumAutomaton) -> Vec<AutomatonViolation> {
    a.validate()
}

pub fn step(a: &AbstractQuantumAutomaton, c: &Configuration, prob_floor: f64) -> Result<Vec<Branch>> {
    a.step(c, prob_floor)
}

pub fn sample_run(
    a: &AbstractQuantumAutomaton,
    rho0: &DensityOperator,
    seed: u64,
    max_steps: usize,
) -> Result<QuantumRunTrace> {
    a.sample_run(rho0, seed, max_steps)
}

pub fn enumerate(
    a: &AbstractQuantumAutomaton,
    rho0: &DensityOperator,
    max_steps: usize,
    prune_eps: f64,
) -> Result<BranchTree> {
    a.enumerate(
        rho0,
        &EnumerateOptions {
            max_steps,
            prune_eps,
            ..EnumerateOptions::default()
        },
    )
}

pub fn final_mixture(t: &BranchTree) -> Result<BTreeMap<String, FinalMixture>> {
    t.final_mixture(DEFAULT_TOL)
}
