use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qaut::asm::StochasticAsm;
use qaut::automaton::{AbstractQuantumAutomaton, EnumerateOptions};
use qaut::corpus;
use qaut::dsl::{self, format_matrix, format_name, Model, SourceDoc};
use qaut::quantum::{isometry_to_kraus, kraus_to_isometry, phase_equivalence, DensityOperator, PhaseVerdict};
use qaut::{QautError, DEFAULT_TOL};

use crate::output::*;
use crate::{Failure, Status};

pub enum Initial {
    Default,
    Text(String),
    File(PathBuf),
}

type CmdResult = Result<Status, Failure>;

pub fn tolerance_from_env() -> Result<f64, Failure> {
    match std::env::var("QAUT_TOL") {
        Err(_) => Ok(DEFAULT_TOL),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(Failure::new(Status::Usage, format!("QAUT_TOL=`{s}` is not a positive number"))),
        },
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(Status::Io, format!("qaut: cannot read {}: {e}", path.display())))
}

fn load(path: &Path, tol: f64) -> Result<Model, Failure> {
    let doc = SourceDoc::new(path.display().to_string(), read(path)?);
    dsl::load_with(&doc, tol).map_err(|d| Failure::new(Status::Model, doc.render(&d)))
}

fn load_automaton(path: &Path, tol: f64) -> Result<AbstractQuantumAutomaton, Failure> {
    match load(path, tol)? {
        Model::Automaton(a) => Ok(a),
        Model::Machine(m) => Err(Failure::new(
            Status::Model,
            format!("qaut: `{}` in {} is a machine, not an automaton", m.name(), path.display()),
        )),
    }
}

fn model_error(e: QautError) -> Failure {
    Failure::new(Status::Model, format!("qaut: {e}"))
}

fn emit_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

pub fn validate(path: &Path, tol: f64) -> CmdResult {
    let model = load(path, tol)?;
    let kind = match model {
        Model::Automaton(_) => "automaton",
        Model::Machine(_) => "machine",
    };
    println!("{}: {kind} `{}` is valid", path.display(), model.name());
    Ok(Status::Ok)
}

/// The initial density operator and a description of where it came from.
fn initial_state(init: &Initial, dim: usize, tol: f64) -> Result<(DensityOperator, String), Failure> {
    let (text, source) = match init {
        Initial::Default => return Ok((DensityOperator::basis(dim, 0), "basis state 0 (default)".into())),
        Initial::Text(t) => (t.clone(), "--initial".to_string()),
        Initial::File(p) => (read(p)?, p.display().to_string()),
    };
    let rho = dsl::parse_state(&text, dim, tol)
        .map_err(|d| Failure::new(Status::Model, SourceDoc::new(source, text.clone()).render(&d)))?;
    Ok((rho, text.trim().to_string()))
}

fn initial_snapshot(init: &Initial, m: &StochasticAsm) -> Result<String, Failure> {
    let label = match init {
        Initial::Default => return Ok(m.snapshots().labels()[0].clone()),
        Initial::Text(t) => t.trim().to_string(),
        Initial::File(p) => read(p)?.trim().to_string(),
    };
    m.snapshots().index_of(&label).map_err(model_error)?;
    Ok(label)
}

pub fn run(path: &Path, init: &Initial, seed: u64, max_steps: usize, json: bool, tol: f64) -> CmdResult {
    match load(path, tol)? {
        Model::Automaton(a) => run_automaton(&a, init, seed, max_steps, json, tol),
        Model::Machine(m) => run_machine(&m, init, seed, max_steps, json),
    }
}

fn run_automaton(
    a: &AbstractQuantumAutomaton,
    init: &Initial,
    seed: u64,
    max_steps: usize,
    json: bool,
    tol: f64,
) -> CmdResult {
    let (rho, described) = initial_state(init, a.dim(), tol)?;
    let trace = a.sample_run(&rho, seed, max_steps).map_err(model_error)?;
    if json {
        emit_json(&TraceJson {
            schema_version: SCHEMA_VERSION,
            kind: "automaton",
            automaton: a.name().to_string(),
            initial: described,
            seed,
            max_steps,
            steps: trace
                .steps
                .iter()
                .map(|s| StepJson {
                    node: s.config.node.clone(),
                    arc: s.arc.clone(),
                    probability: s.probability,
                    state: Some(matrix_json(s.config.state.matrix())),
                    snapshot: None,
                })
                .collect(),
            status: trace.status.as_str(),
        });
        return Ok(Status::Ok);
    }
    let mut out = format!(
        "automaton {}: {} after {} (seed {seed})\n",
        a.name(),
        trace.status.as_str(),
        transitions(trace.steps.len() - 1)
    );
    let rows: Vec<Vec<String>> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                s.config.node.clone(),
                s.arc.clone().unwrap_or_default(),
                s.probability.map(prob6).unwrap_or_default(),
            ]
        })
        .collect();
    out.push_str(&table(&["step", "node", "arc", "probability"], &rows));
    let last = trace.final_config();
    writeln!(out, "final state at node `{}`:", last.node).unwrap();
    out.push_str(&pretty_matrix(last.state.matrix(), "  "));
    print!("{out}");
    Ok(Status::Ok)
}

fn run_machine(m: &StochasticAsm, init: &Initial, seed: u64, max_steps: usize, json: bool) -> CmdResult {
    let s0 = initial_snapshot(init, m)?;
    let trace = m.sample_run(&s0, seed, max_steps).map_err(model_error)?;
    let probability = |i: usize| {
        let step = &trace.steps[i];
        let s = m.snapshots().index_of(&step.snapshot).expect("known snapshot");
        step.arc.as_ref().map(|a| m.probability(&step.node, s, a))
    };
    if json {
        emit_json(&TraceJson {
            schema_version: SCHEMA_VERSION,
            kind: "machine",
            automaton: m.name().to_string(),
            initial: s0,
            seed,
            max_steps,
            steps: trace
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| StepJson {
                    node: s.node.clone(),
                    arc: s.arc.clone(),
                    probability: probability(i),
                    state: None,
                    snapshot: Some(s.snapshot.clone()),
                })
                .collect(),
            status: trace.status.as_str(),
        });
        return Ok(Status::Ok);
    }
    let mut out = format!(
        "machine {}: {} after {} (seed {seed})\n",
        m.name(),
        trace.status.as_str(),
        transitions(trace.steps.len() - 1)
    );
    let rows: Vec<Vec<String>> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                s.node.clone(),
                s.snapshot.clone(),
                s.arc.clone().unwrap_or_default(),
                probability(i).map(prob6).unwrap_or_default(),
            ]
        })
        .collect();
    out.push_str(&table(&["step", "node", "snapshot", "arc", "probability"], &rows));
    print!("{out}");
    Ok(Status::Ok)
}

pub fn enumerate(path: &Path, init: &Initial, max_steps: usize, prune_eps: f64, json: bool, tol: f64) -> CmdResult {
    match load(path, tol)? {
        Model::Automaton(a) => enumerate_automaton(&a, init, max_steps, prune_eps, json, tol),
        Model::Machine(m) => enumerate_machine(&m, init, max_steps, prune_eps, json),
    }
}

fn enumerate_automaton(
    a: &AbstractQuantumAutomaton,
    init: &Initial,
    max_steps: usize,
    prune_eps: f64,
    json: bool,
    tol: f64,
) -> CmdResult {
    let (rho, described) = initial_state(init, a.dim(), tol)?;
    let opts = EnumerateOptions {
        max_steps,
        prune_eps,
        ..EnumerateOptions::default()
    };
    let tree = a.enumerate(&rho, &opts).map_err(model_error)?;
    let leaves = tree.leaves();
    let mixtures = tree.final_mixture(tol).ok();
    if json {
        emit_json(&EnumerationJson {
            schema_version: SCHEMA_VERSION,
            kind: "automaton",
            automaton: a.name().to_string(),
            initial: described,
            max_steps,
            prune_eps,
            leaves: leaves
                .iter()
                .map(|l| LeafJson {
                    path: l.path.clone(),
                    node: l.node.clone(),
                    mass: l.mass,
                    kind: l.kind.as_str(),
                    state: Some(matrix_json(l.state.matrix())),
                    snapshot: None,
                })
                .collect(),
            terminal_mass: tree.terminal_mass(),
            residual_mass: tree.residual_mass(),
            dropped_mass: tree.dropped_mass(),
            final_mixtures: mixtures.map(|m| {
                m.iter()
                    .map(|(node, fm)| MixtureJson {
                        node: node.clone(),
                        mass: fm.mass,
                        state: matrix_json(fm.state.matrix()),
                    })
                    .collect()
            }),
        });
        return Ok(Status::Ok);
    }
    let mut out = format!(
        "automaton {}: {} leaves, terminal mass {}, residual mass {}\n",
        a.name(),
        leaves.len(),
        prob6(tree.terminal_mass()),
        prob6(tree.residual_mass())
    );
    let rows: Vec<Vec<String>> = leaves
        .iter()
        .enumerate()
        .map(|(i, l)| {
            vec![
                i.to_string(),
                l.node.clone(),
                prob6(l.mass),
                l.kind.as_str().to_string(),
                l.path.join(" "),
            ]
        })
        .collect();
    out.push_str(&table(&["leaf", "node", "mass", "kind", "path"], &rows));
    match mixtures {
        Some(m) => {
            for (node, fm) in m {
                writeln!(out, "final mixture at node `{node}` (mass {}):", prob6(fm.mass)).unwrap();
                out.push_str(&pretty_matrix(fm.state.matrix(), "  "));
            }
        }
        None => writeln!(
            out,
            "no final mixture: residual mass {} exceeds tolerance {tol:e}",
            prob6(tree.residual_mass())
        )
        .unwrap(),
    }
    print!("{out}");
    Ok(Status::Ok)
}

fn enumerate_machine(m: &StochasticAsm, init: &Initial, max_steps: usize, prune_eps: f64, json: bool) -> CmdResult {
    let s0 = initial_snapshot(init, m)?;
    let dist = m.enumerate(&s0, max_steps, prune_eps).map_err(model_error)?;
    let terminal_mass: f64 = dist.terminal.values().sum();
    if json {
        emit_json(&EnumerationJson {
            schema_version: SCHEMA_VERSION,
            kind: "machine",
            automaton: m.name().to_string(),
            initial: s0,
            max_steps,
            prune_eps,
            leaves: dist
                .terminal
                .iter()
                .map(|((node, snapshot), mass)| LeafJson {
                    path: Vec::new(),
                    node: node.clone(),
                    mass: *mass,
                    kind: "terminal",
                    state: None,
                    snapshot: Some(snapshot.clone()),
                })
                .collect(),
            terminal_mass,
            residual_mass: dist.residual,
            dropped_mass: 0.0,
            final_mixtures: None,
        });
        return Ok(Status::Ok);
    }
    let mut out = format!(
        "machine {}: terminal mass {}, residual mass {}\n",
        m.name(),
        prob6(terminal_mass),
        prob6(dist.residual)
    );
    let rows: Vec<Vec<String>> = dist
        .terminal
        .iter()
        .map(|((node, snapshot), mass)| vec![node.clone(), snapshot.clone(), prob6(*mass)])
        .collect();
    out.push_str(&table(&["node", "snapshot", "mass"], &rows));
    print!("{out}");
    Ok(Status::Ok)
}

fn operation_at<'a>(
    a: &'a AbstractQuantumAutomaton,
    node: &str,
    path: &Path,
) -> Result<&'a qaut::QuantumOperation, Failure> {
    if !a.graph().has_node(node) {
        return Err(Failure::new(
            Status::Model,
            format!("qaut: {}: unknown node `{node}`", path.display()),
        ));
    }
    a.op(node).ok_or_else(|| {
        Failure::new(
            Status::Model,
            format!("qaut: {}: node `{node}` is terminal and has no operation", path.display()),
        )
    })
}

pub fn equiv(path_a: &Path, path_b: &Path, node: &str, tol: f64) -> CmdResult {
    let a = load_automaton(path_a, tol)?;
    let b = load_automaton(path_b, tol)?;
    let op_a = operation_at(&a, node, path_a)?;
    let op_b = operation_at(&b, node, path_b)?;
    match phase_equivalence(op_a, op_b, tol).map_err(model_error)? {
        PhaseVerdict::Equivalent(phases) => {
            println!("EQUIVALENT at node `{node}`");
            let rows: Vec<Vec<String>> = phases
                .iter()
                .map(|(x, theta)| vec![x.clone(), format!("{theta:.9}")])
                .collect();
            print!("{}", table(&["outcome", "theta"], &rows));
            Ok(Status::Ok)
        }
        PhaseVerdict::NotEquivalent { outcome, deviation } => {
            println!(
                "NOT-EQUIVALENT at node `{node}`: no phase matches outcome `{outcome}` (deviation {deviation:.3e})"
            );
            Ok(Status::NotEquivalent)
        }
    }
}

pub fn convert(path: &Path, node: &str, to_isometry: bool, tol: f64) -> CmdResult {
    let a = load_automaton(path, tol)?;
    let op = operation_at(&a, node, path)?;
    let w = kraus_to_isometry(op.kraus());
    let labels: Vec<String> = op.outcomes().labels().iter().map(|l| format_name(l)).collect();
    if to_isometry {
        let m = w.matrix();
        println!(
            "# node {}: isometry {}×{}, outcome blocks {}",
            format_name(node),
            m.rows(),
            m.cols(),
            labels.join(", ")
        );
        println!("{}", format_matrix(m));
    } else {
        println!("# node {}: Kraus blocks", format_name(node));
        for (label, k) in labels.iter().zip(isometry_to_kraus(&w).blocks()) {
            println!("K({label}) = {}", format_matrix(k));
        }
    }
    Ok(Status::Ok)
}

fn transitions(n: usize) -> String {
    if n == 1 {
        "1 transition".into()
    } else {
        format!("{n} transitions")
    }
}

/// First sentence of the leading comment block.
fn summary(text: &str) -> String {
    let comment: Vec<&str> = text
        .lines()
        .map_while(|l| l.strip_prefix('#'))
        .map(str::trim)
        .collect();
    let joined = comment.join(" ");
    match joined.find(". ") {
        Some(i) => joined[..=i].to_string(),
        None => joined,
    }
}

fn find_example(name: &str) -> Result<(&'static str, &'static str), Failure> {
    corpus::FILES
        .iter()
        .find(|(file, _)| *file == name || file.strip_suffix(".qaut") == Some(name))
        .copied()
        .ok_or_else(|| Failure::new(Status::Model, format!("qaut: no bundled example `{name}`")))
}

pub fn examples(show: Option<&str>, copy: Option<&Path>) -> CmdResult {
    if let Some(name) = show {
        let (_, text) = find_example(name)?;
        print!("{text}");
        return Ok(Status::Ok);
    }
    if let Some(dir) = copy {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::new(Status::Io, format!("qaut: cannot create {}: {e}", dir.display())))?;
        for (file, text) in corpus::FILES {
            let target = dir.join(file);
            if target.exists() {
                return Err(Failure::new(
                    Status::Io,
                    format!("qaut: {} already exists; not overwriting", target.display()),
                ));
            }
            fs::write(&target, text)
                .map_err(|e| Failure::new(Status::Io, format!("qaut: cannot write {}: {e}", target.display())))?;
            println!("{}", target.display());
        }
        return Ok(Status::Ok);
    }
    let rows: Vec<Vec<String>> = corpus::FILES
        .iter()
        .map(|(file, text)| {
            let kind = match corpus::model(file) {
                Model::Automaton(_) => "automaton",
                Model::Machine(_) => "machine",
            };
            vec![file.to_string(), kind.to_string(), summary(text)]
        })
        .collect();
    print!("{}", table(&["file", "kind", "description"], &rows));
    Ok(Status::Ok)
}
