//! Turns a syntax tree into a validated model. Every problem is reported as
//! a diagnostic at the declaration it concerns.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::diagnostic::Diagnostic;
use super::eval::{eval_operator, eval_real};
use super::lexer::Span;
use crate::asm::{AsmViolation, SnapshotSet, StochasticAsm};
use crate::automaton::{AbstractQuantumAutomaton, AutomatonViolation};
use crate::graph::{ControlGraph, GraphViolation};
use crate::quantum::{KrausFamily, OutcomeSet, QuantumOperation};

/// A model read from a source file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Automaton(AbstractQuantumAutomaton),
    Machine(StochasticAsm),
}

impl Model {
    pub fn name(&self) -> &str {
        match self {
            Model::Automaton(a) => a.name(),
            Model::Machine(m) => m.name(),
        }
    }

    pub fn graph(&self) -> &ControlGraph {
        match self {
            Model::Automaton(a) => a.graph(),
            Model::Machine(m) => m.graph(),
        }
    }
}

fn diag(span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(span, message, "")
}

fn diag_name(name: &Name, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(name.span, message, name.value.clone())
}

/// The graph part shared by both model kinds.
struct GraphDecls<'a> {
    nodes: Vec<&'a NodeDecl>,
    arcs: Vec<&'a ArcDecl>,
    graph: ControlGraph,
}

impl GraphDecls<'_> {
    fn node_span(&self, name: &str) -> Option<Span> {
        self.nodes.iter().find(|n| n.name.value == name).map(|n| n.span)
    }

    fn arc_span(&self, id: &str) -> Option<Span> {
        self.arcs.iter().find(|a| a.id.value == id).map(|a| a.span)
    }

    fn subject_span(&self, subject: &str, fallback: Span) -> Span {
        self.node_span(subject)
            .or_else(|| self.arc_span(subject))
            .unwrap_or(fallback)
    }
}

fn graph_decls<'a>(ast: &'a SpecAst, diags: &mut Vec<Diagnostic>) -> Option<GraphDecls<'a>> {
    let before = diags.len();
    let mut nodes: Vec<&NodeDecl> = Vec::new();
    for n in ast.nodes() {
        if nodes.iter().any(|m| m.name.value == n.name.value) {
            diags.push(diag_name(&n.name, format!("node `{}` declared twice", n.name.value)));
        } else {
            nodes.push(n);
        }
    }
    let initials: Vec<&&NodeDecl> = nodes.iter().filter(|n| n.initial).collect();
    match initials.as_slice() {
        [] => diags.push(diag_name(&ast.name, "no node is marked `initial`")),
        [_] => {}
        [_, rest @ ..] => {
            for n in rest {
                diags.push(diag_name(&n.name, "more than one node is marked `initial`"));
            }
        }
    }
    let mut arcs: Vec<&ArcDecl> = Vec::new();
    for a in ast.arcs() {
        if arcs.iter().any(|b| b.id.value == a.id.value) {
            diags.push(diag_name(&a.id, format!("arc `{}` declared twice", a.id.value)));
            continue;
        }
        for end in [&a.dom, &a.codom] {
            if !nodes.iter().any(|n| n.name.value == end.value) {
                diags.push(diag_name(end, format!("arc `{}` refers to unknown node `{}`", a.id.value, end.value)));
            }
        }
        arcs.push(a);
    }
    if diags.len() > before {
        return None;
    }
    let graph = ControlGraph::from_parts(
        nodes.iter().map(|n| n.name.value.clone()),
        arcs.iter()
            .map(|a| (a.id.value.clone(), a.dom.value.clone(), a.codom.value.clone()))
            .collect(),
        &initials[0].name.value,
        nodes.iter().filter(|n| n.terminal).map(|n| n.name.value.clone()),
    );
    let decls = GraphDecls { nodes, arcs, graph };
    for v in decls.graph.validate() {
        let span = match &v {
            GraphViolation::ArcFromTerminal { arc, .. } => decls.arc_span(arc),
            other => decls.node_span(other.subject()).or_else(|| decls.arc_span(other.subject())),
        }
        .unwrap_or(ast.name.span);
        diags.push(diag(span, v.to_string()));
    }
    if diags.len() > before {
        return None;
    }
    Some(decls)
}

/// Elaborates `ast` into a model, checking every well-formedness condition
/// with tolerance `tol`.
pub fn elaborate(ast: &SpecAst, tol: f64) -> Result<Model, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let model = match ast.kind {
        ModelKind::Automaton => elaborate_automaton(ast, tol, &mut diags).map(Model::Automaton),
        ModelKind::Machine => elaborate_machine(ast, tol, &mut diags).map(Model::Machine),
    };
    match model {
        Some(m) if diags.is_empty() => Ok(m),
        _ => {
            diags.sort_by_key(|d| d.span.offset);
            Err(diags)
        }
    }
}

fn elaborate_automaton(ast: &SpecAst, tol: f64, diags: &mut Vec<Diagnostic>) -> Option<AbstractQuantumAutomaton> {
    let dims: Vec<&Spanned<usize>> = ast
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Dim(d) => Some(d),
            _ => None,
        })
        .collect();
    let dim = match dims.as_slice() {
        [] => {
            diags.push(diag_name(&ast.name, "missing `dim` declaration"));
            None
        }
        [d, rest @ ..] => {
            for r in rest {
                diags.push(diag(r.span, "`dim` declared more than once"));
            }
            if d.value == 0 {
                diags.push(diag(d.span, "dimension must be positive"));
                None
            } else {
                Some(d.value)
            }
        }
    };
    let decls = graph_decls(ast, diags)?;
    let dim = dim?;
    let g = &decls.graph;

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut ops: BTreeMap<String, QuantumOperation> = BTreeMap::new();
    for op in ast.ops() {
        let node = &op.node;
        if !g.has_node(&node.value) {
            diags.push(diag_name(node, format!("operation given for unknown node `{}`", node.value)));
            continue;
        }
        if g.is_terminal(&node.value) {
            diags.push(diag_name(node, format!("terminal node `{}` carries an operation", node.value)));
            continue;
        }
        if !seen.insert(&node.value) {
            diags.push(diag_name(node, format!("node `{}` has more than one operation", node.value)));
            continue;
        }
        let out: Vec<String> = g
            .out_arcs(&node.value)
            .expect("known node")
            .iter()
            .map(|a| a.id.clone())
            .collect();
        let mut blocks: BTreeMap<&str, _> = BTreeMap::new();
        let mut ok = true;
        for (label, e) in &op.blocks {
            if !out.contains(&label.value) {
                diags.push(diag_name(
                    label,
                    format!("`{}` is not an arc leaving node `{}`", label.value, node.value),
                ));
                ok = false;
                continue;
            }
            if blocks.contains_key(label.value.as_str()) {
                diags.push(diag_name(label, format!("Kraus block `{}` given twice", label.value)));
                ok = false;
                continue;
            }
            match eval_operator(e, dim) {
                Ok(m) => {
                    blocks.insert(&label.value, m);
                }
                Err(d) => {
                    diags.push(d);
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        let missing: Vec<&String> = out.iter().filter(|x| !blocks.contains_key(x.as_str())).collect();
        if !missing.is_empty() {
            let list = missing.iter().map(|m| format!("`{m}`")).collect::<Vec<_>>().join(", ");
            diags.push(diag(
                op.span,
                format!("operation at node `{}` has no Kraus block for arc {list}", node.value),
            ));
            continue;
        }
        let ordered: Vec<_> = out.iter().map(|x| blocks[x.as_str()].clone()).collect();
        let family = KrausFamily::unchecked(OutcomeSet::new(out.clone()).expect("distinct arc ids"), ordered)
            .expect("shapes checked");
        let deviation = family.completeness_deviation();
        if deviation > tol {
            diags.push(diag(
                op.span,
                AutomatonViolation::Incomplete {
                    node: node.value.clone(),
                    deviation,
                }
                .to_string(),
            ));
            continue;
        }
        ops.insert(node.value.clone(), QuantumOperation::new(family));
    }
    for n in &decls.nodes {
        if !n.terminal && !seen.contains(n.name.value.as_str()) {
            diags.push(diag_name(
                &n.name,
                format!("non-terminal node `{}` has no operation", n.name.value),
            ));
        }
    }
    if !diags.is_empty() {
        return None;
    }
    // Operations in node declaration order.
    let ops: Vec<(String, QuantumOperation)> = g
        .nodes()
        .iter()
        .filter_map(|n| ops.remove(n).map(|op| (n.clone(), op)))
        .collect();
    let a = AbstractQuantumAutomaton::from_parts(&ast.name.value, dim, g.clone(), ops);
    for v in a.validate_with(tol) {
        diags.push(diag(decls.subject_span(v.node(), ast.name.span), v.to_string()));
    }
    diags.is_empty().then_some(a)
}

fn elaborate_machine(ast: &SpecAst, tol: f64, diags: &mut Vec<Diagnostic>) -> Option<StochasticAsm> {
    let snaps: Vec<&Spanned<Vec<Name>>> = ast
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Snapshots(s) => Some(s),
            _ => None,
        })
        .collect();
    let labels: Option<Vec<String>> = match snaps.as_slice() {
        [] => {
            diags.push(diag_name(&ast.name, "missing `snapshots` declaration"));
            None
        }
        [s, rest @ ..] => {
            for r in rest {
                diags.push(diag(r.span, "`snapshots` declared more than once"));
            }
            let mut labels: Vec<String> = Vec::new();
            for n in &s.value {
                if labels.contains(&n.value) {
                    diags.push(diag_name(n, format!("snapshot `{}` listed twice", n.value)));
                } else {
                    labels.push(n.value.clone());
                }
            }
            if labels.is_empty() {
                diags.push(diag(s.span, "a machine needs at least one snapshot"));
                None
            } else {
                Some(labels)
            }
        }
    };
    let decls = graph_decls(ast, diags)?;
    let labels = labels?;
    let g = &decls.graph;
    let snap_index = |n: &Name, diags: &mut Vec<Diagnostic>| -> Option<usize> {
        let i = labels.iter().position(|l| *l == n.value);
        if i.is_none() {
            diags.push(diag_name(n, format!("unknown snapshot `{}`", n.value)));
        }
        i
    };

    let mut prob_spans: BTreeMap<(String, usize), Span> = BTreeMap::new();
    let mut dist = Vec::new();
    let mut map_spans: BTreeMap<String, Span> = BTreeMap::new();
    let mut transforms = Vec::new();
    for item in &ast.items {
        match item {
            Item::Prob(p) => {
                if !g.has_node(&p.node.value) {
                    diags.push(diag_name(&p.node, format!("unknown node `{}`", p.node.value)));
                    continue;
                }
                if g.is_terminal(&p.node.value) {
                    diags.push(diag_name(
                        &p.node,
                        format!("terminal node `{}` cannot carry probabilities", p.node.value),
                    ));
                    continue;
                }
                let Some(s) = snap_index(&p.snapshot, diags) else { continue };
                let key = (p.node.value.clone(), s);
                if prob_spans.contains_key(&key) {
                    diags.push(diag(p.span, format!("probabilities for ({}, {}) given twice", key.0, p.snapshot.value)));
                    continue;
                }
                prob_spans.insert(key.clone(), p.span);
                let mut row: Vec<(String, f64)> = Vec::new();
                for (arc, value) in &p.entries {
                    let leaves = g.arc(&arc.value).is_some_and(|a| a.dom == p.node.value);
                    if !leaves {
                        diags.push(diag_name(
                            arc,
                            format!("`{}` is not an arc leaving node `{}`", arc.value, p.node.value),
                        ));
                        continue;
                    }
                    if row.iter().any(|(a, _)| *a == arc.value) {
                        diags.push(diag_name(arc, format!("probability of `{}` given twice", arc.value)));
                        continue;
                    }
                    match eval_real(value, tol) {
                        Ok(v) if (0.0..=1.0).contains(&v) => row.push((arc.value.clone(), v)),
                        Ok(v) => diags.push(diag(value.span, format!("probability {v} lies outside [0, 1]"))),
                        Err(d) => diags.push(d),
                    }
                }
                dist.push((key, row));
            }
            Item::Map(m) => {
                if g.arc(&m.arc.value).is_none() {
                    diags.push(diag_name(&m.arc, format!("unknown arc `{}`", m.arc.value)));
                    continue;
                }
                if map_spans.insert(m.arc.value.clone(), m.span).is_some() {
                    diags.push(diag(m.span, format!("snapshot map of arc `{}` given twice", m.arc.value)));
                    continue;
                }
                let mut table = vec![usize::MAX; labels.len()];
                for (from, to) in &m.entries {
                    let (Some(f), Some(t)) = (snap_index(from, diags), snap_index(to, diags)) else { continue };
                    if table[f] != usize::MAX {
                        diags.push(diag_name(from, format!("snapshot `{}` mapped twice", from.value)));
                        continue;
                    }
                    table[f] = t;
                }
                transforms.push((m.arc.value.clone(), table));
            }
            _ => {}
        }
    }
    if !diags.is_empty() {
        return None;
    }
    let snapshots = SnapshotSet::new(labels.clone()).expect("distinct labels");
    let machine = StochasticAsm::from_parts(&ast.name.value, g.clone(), snapshots, transforms, dist);
    for v in machine.validate(tol) {
        let span = match &v {
            AsmViolation::PartialTransform { arc } => map_spans.get(arc).copied(),
            AsmViolation::NotNormalized { node, snapshot, .. }
            | AsmViolation::ArcOutsideOut { node, snapshot, .. }
            | AsmViolation::ProbabilityOutOfRange { node, snapshot, .. } => labels
                .iter()
                .position(|l| l == snapshot)
                .and_then(|s| prob_spans.get(&(node.clone(), s)).copied()),
            _ => None,
        }
        .unwrap_or_else(|| decls.subject_span(v.subject(), ast.name.span));
        diags.push(diag(span, v.to_string()));
    }
    diags.is_empty().then_some(machine)
}
