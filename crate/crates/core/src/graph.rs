//! Control graphs: directed multigraphs with an initial node and a set of
//! terminal nodes.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{QautError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub id: String,
    pub dom: String,
    pub codom: String,
}

/// A single failed control-graph condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    /// Condition (i): the initial node is terminal.
    InitialIsTerminal(String),
    /// Condition (ii): an arc leaves a terminal node.
    ArcFromTerminal { arc: String, node: String },
    /// Condition (iii): the node is not reachable from the initial node.
    Unreachable(String),
    /// Condition (iii): no terminal node is reachable from the node.
    NoPathToTerminal(String),
    DuplicateNode(String),
    DuplicateArc(String),
    UnknownEndpoint { arc: String, node: String },
    UnknownInitial(String),
    UnknownTerminal(String),
}

impl GraphViolation {
    /// The node or arc the violation is about.
    pub fn subject(&self) -> &str {
        match self {
            Self::InitialIsTerminal(n)
            | Self::Unreachable(n)
            | Self::NoPathToTerminal(n)
            | Self::DuplicateNode(n)
            | Self::UnknownInitial(n)
            | Self::UnknownTerminal(n) => n,
            Self::ArcFromTerminal { arc, .. } | Self::UnknownEndpoint { arc, .. } | Self::DuplicateArc(arc) => arc,
        }
    }
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InitialIsTerminal(n) => write!(f, "condition (i): initial node `{n}` is terminal"),
            Self::ArcFromTerminal { arc, node } => {
                write!(f, "condition (ii): arc `{arc}` leaves terminal node `{node}`")
            }
            Self::Unreachable(n) => write!(f, "condition (iii): node `{n}` is unreachable from the initial node"),
            Self::NoPathToTerminal(n) => write!(f, "condition (iii): node `{n}` cannot reach a terminal node"),
            Self::DuplicateNode(n) => write!(f, "node `{n}` declared twice"),
            Self::DuplicateArc(a) => write!(f, "arc `{a}` declared twice"),
            Self::UnknownEndpoint { arc, node } => write!(f, "arc `{arc}` refers to unknown node `{node}`"),
            Self::UnknownInitial(n) => write!(f, "initial node `{n}` is not declared"),
            Self::UnknownTerminal(n) => write!(f, "terminal node `{n}` is not declared"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlGraph {
    nodes: Vec<String>,
    arcs: Vec<Arc>,
    initial: String,
    terminals: BTreeSet<String>,
}

impl ControlGraph {
    /// Assembles a graph without checking it; see [`ControlGraph::validate`].
    pub fn from_parts<N, T>(nodes: N, arcs: Vec<(String, String, String)>, initial: &str, terminals: T) -> Self
    where
        N: IntoIterator,
        N::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        Self {
            nodes: nodes.into_iter().map(Into::into).collect(),
            arcs: arcs
                .into_iter()
                .map(|(id, dom, codom)| Arc { id, dom, codom })
                .collect(),
            initial: initial.to_string(),
            terminals: terminals.into_iter().map(Into::into).collect(),
        }
    }

    /// Assembles and validates a graph.
    pub fn new<N, T>(nodes: N, arcs: Vec<(String, String, String)>, initial: &str, terminals: T) -> Result<Self>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        let g = Self::from_parts(nodes, arcs, initial, terminals);
        let violations = g.validate();
        if violations.is_empty() {
            Ok(g)
        } else {
            Err(QautError::InvalidModel(
                violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn terminals(&self) -> &BTreeSet<String> {
        &self.terminals
    }

    pub fn has_node(&self, n: &str) -> bool {
        self.nodes.iter().any(|x| x == n)
    }

    pub fn is_terminal(&self, n: &str) -> bool {
        self.terminals.contains(n)
    }

    pub fn arc(&self, id: &str) -> Option<&Arc> {
        self.arcs.iter().find(|a| a.id == id)
    }

    /// `Out(n)` in declaration order.
    pub fn out_arcs(&self, n: &str) -> Result<Vec<&Arc>> {
        if !self.has_node(n) {
            return Err(QautError::UnknownNode(n.to_string()));
        }
        Ok(self.arcs.iter().filter(|a| a.dom == n).collect())
    }

    /// Checks conditions (i)-(iii) and referential integrity. An empty
    /// result means the graph is a valid control graph.
    pub fn validate(&self) -> Vec<GraphViolation> {
        let mut v = Vec::new();
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.as_str()) {
                v.push(GraphViolation::DuplicateNode(n.clone()));
            }
        }
        let mut seen_arcs = BTreeSet::new();
        for a in &self.arcs {
            if !seen_arcs.insert(a.id.as_str()) {
                v.push(GraphViolation::DuplicateArc(a.id.clone()));
            }
            for end in [&a.dom, &a.codom] {
                if !seen.contains(end.as_str()) {
                    v.push(GraphViolation::UnknownEndpoint {
                        arc: a.id.clone(),
                        node: end.clone(),
                    });
                }
            }
        }
        if !seen.contains(self.initial.as_str()) {
            v.push(GraphViolation::UnknownInitial(self.initial.clone()));
        }
        for t in &self.terminals {
            if !seen.contains(t.as_str()) {
                v.push(GraphViolation::UnknownTerminal(t.clone()));
            }
        }
        if self.terminals.contains(&self.initial) {
            v.push(GraphViolation::InitialIsTerminal(self.initial.clone()));
        }
        for a in &self.arcs {
            if self.terminals.contains(&a.dom) {
                v.push(GraphViolation::ArcFromTerminal {
                    arc: a.id.clone(),
                    node: a.dom.clone(),
                });
            }
        }
        let forward = self.reachable_from_initial();
        let backward = self.coreachable_to_terminals();
        for n in &self.nodes {
            if !forward.contains(n.as_str()) {
                v.push(GraphViolation::Unreachable(n.clone()));
            }
            if !backward.contains(n.as_str()) {
                v.push(GraphViolation::NoPathToTerminal(n.clone()));
            }
        }
        v
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn reachable_from_initial(&self) -> BTreeSet<&str> {
        let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
        for a in &self.arcs {
            succ.entry(a.dom.as_str()).or_default().push(a.codom.as_str());
        }
        bfs(&succ, [self.initial.as_str()])
    }

    fn coreachable_to_terminals(&self) -> BTreeSet<&str> {
        let mut pred: HashMap<&str, Vec<&str>> = HashMap::new();
        for a in &self.arcs {
            pred.entry(a.codom.as_str()).or_default().push(a.dom.as_str());
        }
        bfs(&pred, self.terminals.iter().map(String::as_str))
    }
}

fn bfs<'a>(adj: &HashMap<&'a str, Vec<&'a str>>, start: impl IntoIterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    for s in start {
        if seen.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(n) = queue.pop_front() {
        for &m in adj.get(n).map(Vec::as_slice).unwrap_or_default() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

pub fn validate(g: &ControlGraph) -> Vec<GraphViolation> {
    g.validate()
}

pub fn out_arcs<'g>(g: &'g ControlGraph, n: &str) -> Result<Vec<&'g str>> {
    Ok(g.out_arcs(n)?.into_iter().map(|a| a.id.as_str()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arcs(list: &[(&str, &str, &str)]) -> Vec<(String, String, String)> {
        list.iter()
            .map(|(a, d, c)| (a.to_string(), d.to_string(), c.to_string()))
            .collect()
    }

    fn cleaner() -> ControlGraph {
        ControlGraph::new(
            ["m", "f", "t"],
            arcs(&[("0", "m", "t"), ("1", "m", "f"), ("flip", "f", "t")]),
            "m",
            ["t"],
        )
        .unwrap()
    }

    #[test]
    fn minimal_graph_is_valid() {
        let g = ControlGraph::from_parts(["n0", "f"], arcs(&[("a", "n0", "f")]), "n0", ["f"]);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn arc_out_of_terminal_is_flagged() {
        let g = ControlGraph::from_parts(
            ["n0", "f"],
            arcs(&[("a", "n0", "f"), ("b", "f", "n0")]),
            "n0",
            ["f"],
        );
        assert_eq!(
            g.validate(),
            vec![GraphViolation::ArcFromTerminal {
                arc: "b".into(),
                node: "f".into()
            }]
        );
    }

    #[test]
    fn isolated_node_is_flagged() {
        let g = ControlGraph::from_parts(["n0", "f", "x"], arcs(&[("a", "n0", "f")]), "n0", ["f"]);
        let v = g.validate();
        assert!(v.contains(&GraphViolation::Unreachable("x".into())));
        assert!(v.contains(&GraphViolation::NoPathToTerminal("x".into())));
    }

    #[test]
    fn initial_terminal_and_references() {
        let g = ControlGraph::from_parts(["n0"], arcs(&[("a", "n0", "zz")]), "n0", ["n0", "q"]);
        let v = g.validate();
        assert!(v.contains(&GraphViolation::InitialIsTerminal("n0".into())));
        assert!(v.contains(&GraphViolation::UnknownTerminal("q".into())));
        assert!(v.contains(&GraphViolation::UnknownEndpoint {
            arc: "a".into(),
            node: "zz".into()
        }));
        let g = ControlGraph::from_parts(["n0", "f"], arcs(&[("a", "n0", "f"), ("a", "n0", "f")]), "n0", ["f"]);
        assert_eq!(g.validate(), vec![GraphViolation::DuplicateArc("a".into())]);
    }

    #[test]
    fn out_arcs_cases() {
        let g = cleaner();
        assert!(out_arcs(&g, "t").unwrap().is_empty());
        assert_eq!(out_arcs(&g, "m").unwrap(), vec!["0", "1"]);
        assert!(matches!(out_arcs(&g, "zz"), Err(QautError::UnknownNode(_))));

        let loops = ControlGraph::new(
            ["n0", "f"],
            arcs(&[("a", "n0", "n0"), ("b", "n0", "n0"), ("c", "n0", "f")]),
            "n0",
            ["f"],
        )
        .unwrap();
        assert_eq!(out_arcs(&loops, "n0").unwrap(), vec!["a", "b", "c"]);
    }

    /// Walk-based reference for condition (iii): does some walk
    /// initial → … → n → … → terminal exist? Walks without repeated nodes
    /// suffice, so a DFS over simple paths is exhaustive.
    fn on_some_walk(g: &ControlGraph, n: &str) -> bool {
        fn paths(g: &ControlGraph, at: &str, visited: &mut Vec<String>, through: &str, hit: bool) -> bool {
            let hit = hit || at == through;
            if g.is_terminal(at) {
                return hit;
            }
            for a in g.arcs().iter().filter(|a| a.dom == at) {
                if visited.contains(&a.codom) {
                    continue;
                }
                visited.push(a.codom.clone());
                let found = paths(g, &a.codom, visited, through, hit);
                visited.pop();
                if found {
                    return true;
                }
            }
            false
        }
        // A walk through n may revisit nodes before n; split at n instead.
        let mut v = vec![g.initial().to_string()];
        let reach = g.initial() == n || paths_to(g, g.initial(), n, &mut v);
        let mut v = vec![n.to_string()];
        reach && paths(g, n, &mut v, n, true)
    }

    fn paths_to(g: &ControlGraph, at: &str, target: &str, visited: &mut Vec<String>) -> bool {
        for a in g.arcs().iter().filter(|a| a.dom == at) {
            if a.codom == target {
                return true;
            }
            if visited.contains(&a.codom) {
                continue;
            }
            visited.push(a.codom.clone());
            if paths_to(g, &a.codom, target, visited) {
                return true;
            }
            visited.pop();
        }
        false
    }

    fn arbitrary_graph() -> impl Strategy<Value = ControlGraph> {
        (2usize..=5).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0..n, 0..n), 0..=8),
                prop::collection::btree_set(0..n, 1..=2),
            )
                .prop_map(|(n, edges, terms)| {
                    let nodes: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                    let arcs = edges
                        .iter()
                        .enumerate()
                        .map(|(i, (d, c))| (format!("a{i}"), nodes[*d].clone(), nodes[*c].clone()))
                        .collect();
                    let terminals: Vec<String> = terms.iter().map(|&t| nodes[t].clone()).collect();
                    ControlGraph::from_parts(nodes.clone(), arcs, "v0", terminals)
                })
        })
    }

    proptest! {
        #[test]
        fn condition_iii_matches_walk_enumeration(g in arbitrary_graph()) {
            let v = g.validate();
            for n in g.nodes() {
                let flagged = v.iter().any(|x| matches!(x,
                    GraphViolation::Unreachable(m) | GraphViolation::NoPathToTerminal(m) if m == n));
                prop_assert_eq!(!flagged, on_some_walk(&g, n), "node {}", n);
            }
        }

        #[test]
        fn valid_graphs_have_nonempty_out_sets(g in arbitrary_graph()) {
            if g.is_valid() {
                for n in g.nodes() {
                    if !g.is_terminal(n) {
                        prop_assert!(!g.out_arcs(n).unwrap().is_empty());
                    }
                }
            }
        }
    }
}
