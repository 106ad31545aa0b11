//! Seeded random generators for states, operations and models.
//!
//! Used by the test suites and by property checks; every generator takes an
//! explicit RNG so results are reproducible.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::asm::{SnapshotSet, StochasticAsm};
use crate::automaton::AbstractQuantumAutomaton;
use crate::graph::ControlGraph;
use crate::linalg::{Complex, ComplexMatrix};
use crate::quantum::{DensityOperator, KrausFamily, OutcomeSet, QuantumOperation};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(re, im)
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("finite samples")
}

/// Modified Gram-Schmidt, applied twice. Columns must be linearly
/// independent, which holds almost surely for Gaussian input.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = m.shape();
    let mut q: Vec<Vec<Complex>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    for _ in 0..2 {
        for j in 0..cols {
            for k in 0..j {
                let proj: Complex = (0..rows).map(|i| q[k][i].conj() * q[j][i]).sum();
                let qk = q[k].clone();
                for (z, w) in q[j].iter_mut().zip(&qk) {
                    *z -= proj * w;
                }
            }
            let norm = q[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut q[j] {
                *z /= norm;
            }
        }
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for (j, col) in q.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            out[(i, j)] = *z;
        }
    }
    out
}

/// Haar-like random isometry with orthonormal columns.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols);
    orthonormalize_columns(&gaussian_matrix(rng, rows, cols))
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_isometry(rng, n, n)
}

/// Labels `x0, x1, …`.
pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// Random Kraus family: orthonormalize a Gaussian `(dim·n) × dim` matrix and
/// slice it into `n` blocks.
pub fn random_kraus_family<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_outcomes: usize) -> KrausFamily {
    random_kraus_family_labelled(rng, dim, default_labels(n_outcomes))
}

pub fn random_kraus_family_labelled<R: Rng + ?Sized>(rng: &mut R, dim: usize, labels: Vec<String>) -> KrausFamily {
    let n = labels.len();
    let w = random_isometry(rng, dim * n, dim);
    let blocks = (0..n).map(|i| w.block(i * dim, 0, dim, dim)).collect();
    KrausFamily::new(OutcomeSet::new(labels).expect("distinct labels"), blocks, 1e-9)
        .expect("orthonormal columns give a complete family")
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let v = gaussian_matrix(rng, dim, 1);
    let norm = v.frobenius_norm();
    v.scale_real(1.0 / norm)
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    DensityOperator::pure(&random_unit_vector(rng, dim), 1e-9).expect("unit vector")
}

/// Random mixture of `dim` random pure states with exponential weights,
/// which is full rank almost surely.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let weights: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let ensemble: Vec<(f64, DensityOperator)> = weights
        .iter()
        .map(|w| (w / total, random_pure_state(rng, dim)))
        .collect();
    DensityOperator::mix(&ensemble, 1e-9).expect("valid ensemble")
}

/// Random valid control graph on `n_nodes` nodes (`n_nodes ≥ 2`).
///
/// Nodes `n0 … n{k-1}` form a backbone chain into the single terminal `t`;
/// up to `extra_arcs` further arcs (self-loops, back edges, parallel arcs,
/// shortcuts to `t`) are sprinkled among the non-terminal nodes.
pub fn random_control_graph<R: Rng + ?Sized>(rng: &mut R, n_nodes: usize, extra_arcs: usize) -> ControlGraph {
    assert!(n_nodes >= 2);
    let inner = n_nodes - 1;
    let mut nodes: Vec<String> = (0..inner).map(|i| format!("n{i}")).collect();
    nodes.push("t".to_string());
    let mut arcs = Vec::new();
    for i in 0..inner {
        arcs.push((nodes[i].clone(), nodes[i + 1].clone()));
    }
    for _ in 0..extra_arcs {
        let from = rng.random_range(0..inner);
        let to = rng.random_range(0..n_nodes);
        arcs.push((nodes[from].clone(), nodes[to].clone()));
    }
    let arcs = arcs
        .into_iter()
        .enumerate()
        .map(|(i, (d, c))| (format!("a{i}"), d, c))
        .collect();
    ControlGraph::new(nodes, arcs, "n0", ["t"]).expect("backbone graph is valid")
}

/// Random automaton of dimension `dim` over a random control graph.
pub fn random_automaton<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_nodes: usize,
    extra_arcs: usize,
) -> AbstractQuantumAutomaton {
    let graph = random_control_graph(rng, n_nodes, extra_arcs);
    let mut ops = Vec::new();
    for node in graph.nodes() {
        if graph.is_terminal(node) {
            continue;
        }
        let labels: Vec<String> = graph
            .out_arcs(node)
            .expect("known node")
            .iter()
            .map(|a| a.id.clone())
            .collect();
        ops.push((node.clone(), QuantumOperation::new(random_kraus_family_labelled(rng, dim, labels))));
    }
    AbstractQuantumAutomaton::new("random", dim, graph, ops).expect("generated automaton is valid")
}

/// Random stochastic machine. Distributions put mass on a random non-empty
/// subset of `Out(n)` for each snapshot.
pub fn random_asm<R: Rng + ?Sized>(
    rng: &mut R,
    n_nodes: usize,
    n_snapshots: usize,
    extra_arcs: usize,
) -> StochasticAsm {
    let graph = random_control_graph(rng, n_nodes, extra_arcs);
    let snapshots = SnapshotSet::new((0..n_snapshots).map(|i| format!("s{i}"))).expect("distinct");
    let mut transforms = Vec::new();
    for arc in graph.arcs() {
        let table: Vec<usize> = (0..n_snapshots).map(|_| rng.random_range(0..n_snapshots)).collect();
        transforms.push((arc.id.clone(), table));
    }
    let mut dist = Vec::new();
    for node in graph.nodes() {
        if graph.is_terminal(node) {
            continue;
        }
        let out: Vec<String> = graph.out_arcs(node).unwrap().iter().map(|a| a.id.clone()).collect();
        for s in 0..n_snapshots {
            let mut weights: Vec<f64> = out
                .iter()
                .map(|_| if rng.random_bool(0.7) { rng.random_range(0.05..1.0) } else { 0.0 })
                .collect();
            if weights.iter().all(|&w| w == 0.0) {
                let k = rng.random_range(0..weights.len());
                weights[k] = 1.0;
            }
            let total: f64 = weights.iter().sum();
            let row = out
                .iter()
                .cloned()
                .zip(weights.iter().map(|w| w / total))
                .filter(|(_, p)| *p > 0.0)
                .collect();
            dist.push(((node.clone(), s), row));
        }
    }
    StochasticAsm::new("random", graph, snapshots, transforms, dist, 1e-9).expect("generated machine is valid")
}
