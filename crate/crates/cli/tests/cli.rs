use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qaut::dsl::{format_matrix, load, Model, SourceDoc};
use qaut::linalg::{Complex, ComplexMatrix};
use serde_json::Value;

const TOL: f64 = 1e-9;

fn corpus(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(file)
}

fn qaut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaut"))
        .args(args)
        .env_remove("QAUT_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn matrix(v: &Value) -> ComplexMatrix {
    let rows: Vec<Vec<Complex>> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|z| Complex::new(z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
                .collect()
        })
        .collect();
    ComplexMatrix::from_rows(&rows).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let o = qaut(&["validate", s(&corpus("cleaner.qaut"))]);
    assert_eq!(o.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let broken = std::fs::read_to_string(corpus("cleaner.qaut"))
        .unwrap()
        .replace("K(\"1\") = [[0, 0], [0, 1]]", "K(\"1\") = [[1, 0], [0, 0]]");
    let p = write(&dir, "broken.qaut", &broken);
    let o = qaut(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("completeness violated at node `m`"), "{err}");
    assert!(err.contains("broken.qaut:14:3: error:"), "{err}");

    let o = qaut(&["validate", s(&dir.path().join("missing.qaut"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cleaner_run_ends_in_ground_state() {
    let o = qaut(&[
        "run",
        s(&corpus("cleaner.qaut")),
        "--initial",
        "pure([[1/sqrt(2)], [1/sqrt(2)]])",
        "--seed",
        "7",
        "--json",
    ]);
    let v = json(&o);
    assert_eq!(v["status"], "converged");
    let steps = v["steps"].as_array().unwrap();
    let last = steps.last().unwrap();
    assert_eq!(last["node"], "t");
    assert!(last["arc"].is_null());
    let ground = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
    assert!(matrix(&last["state"]).max_abs_diff(&ground).unwrap() <= TOL);
}

#[test]
fn teleportation_run_converges() {
    let v = json(&qaut(&["run", s(&corpus("teleportation.qaut")), "--seed", "0", "--json"]));
    assert_eq!(v["status"], "converged");
    assert!(v["steps"].as_array().unwrap().len() <= 65);
}

#[test]
fn usage_errors() {
    let o = qaut(&["run", s(&corpus("cleaner.qaut")), "--max-steps", "0"]);
    assert_eq!(o.status.code(), Some(64));
    assert_eq!(qaut(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(qaut(&["run"]).status.code(), Some(64));
    assert_eq!(qaut(&["--help"]).status.code(), Some(0));
    let o = qaut(&["run", s(&corpus("cleaner.qaut")), "--json", "--pretty"]);
    assert_eq!(o.status.code(), Some(64));

    let o = Command::new(env!("CARGO_BIN_EXE_qaut"))
        .args(["validate", s(&corpus("cleaner.qaut"))])
        .env("QAUT_TOL", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn initial_state_errors() {
    let o = qaut(&["run", s(&corpus("cleaner.qaut")), "--initial", "pure([[1], [0], [0]])"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("3×3 state in 2-dim context"), "{}", stderr(&o));
    let o = qaut(&["run", s(&corpus("cleaner.qaut")), "--initial", "[[1, 0], [0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("--initial:1:10: error: unclosed `[`"), "{}", stderr(&o));
    let o = qaut(&["run", s(&corpus("cleaner.qaut")), "--initial-file", "/nonexistent/rho"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn initial_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "rho.txt", "[[0.5, 0.5], [0.5, 0.5]]\n");
    let v = json(&qaut(&["enumerate", s(&corpus("cleaner.qaut")), "--initial-file", s(&p), "--json"]));
    assert_eq!(v["initial"], "[[0.5, 0.5], [0.5, 0.5]]");
    assert_eq!(v["leaves"].as_array().unwrap().len(), 2);
}

/// `|v⟩` as a DSL column literal.
fn ket_literal(v: &[Complex]) -> String {
    format_matrix(&ComplexMatrix::column(v).unwrap())
}

#[test]
fn teleportation_enumeration_has_four_quarter_leaves() {
    let psis = [
        [Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)],
        [Complex::new(0.28, -0.96), Complex::new(0.0, 0.0)],
        [Complex::new(0.5, 0.5), Complex::new(-0.5, 0.5)],
    ];
    for psi in psis {
        let initial = format!("pure(kron({}, [[1], [0], [0], [0]]))", ket_literal(&psi));
        let v = json(&qaut(&[
            "enumerate",
            s(&corpus("teleportation.qaut")),
            "--initial",
            &initial,
            "--json",
        ]));
        let leaves = v["leaves"].as_array().unwrap();
        assert_eq!(leaves.len(), 4);
        for l in leaves {
            assert_eq!(l["kind"], "terminal");
            assert!((l["mass"].as_f64().unwrap() - 0.25).abs() <= TOL);
        }
        // ¼ Σ_ab |ab⟩⟨ab| ⊗ |ψ⟩⟨ψ| = ¼ I₄ ⊗ |ψ⟩⟨ψ|
        let ket = ComplexMatrix::column(&psi).unwrap();
        let expected = ComplexMatrix::identity(4)
            .scale_real(0.25)
            .kron(&ket.matmul(&ket.adjoint()).unwrap());
        let mixtures = v["final_mixtures"].as_array().unwrap();
        assert_eq!(mixtures.len(), 1);
        assert!(matrix(&mixtures[0]["state"]).max_abs_diff(&expected).unwrap() <= TOL);
    }
}

#[test]
fn entangler_mixture_is_bell_projector() {
    let v = json(&qaut(&[
        "enumerate",
        s(&corpus("entangler.qaut")),
        "--initial",
        "[[0.4, 0.1, 0, 0], [0.1, 0.3, 0, 0], [0, 0, 0.2, 0.1i], [0, 0, -0.1i, 0.1]]",
        "--json",
    ]));
    let mixtures = v["final_mixtures"].as_array().unwrap();
    assert_eq!(mixtures.len(), 1);
    assert_eq!(mixtures[0]["node"], "done");
    let h = 0.5;
    let bell = ComplexMatrix::from_real(&[&[h, 0.0, 0.0, h], &[0.0; 4], &[0.0; 4], &[h, 0.0, 0.0, h]]);
    assert!(matrix(&mixtures[0]["state"]).max_abs_diff(&bell).unwrap() <= TOL);
}

const LOOP: &str = "automaton spin {
  dim = 2
  node n0 initial
  node t terminal
  arc spin: n0 -> n0
  arc halt: n0 -> t
  op n0 { K(spin) = H  K(halt) = scale(0, identity(2)) }
}
";

#[test]
fn self_loop_leaves_residual_mass() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "loop.qaut", LOOP);
    let v = json(&qaut(&["enumerate", s(&p), "--max-steps", "5", "--json"]));
    assert_eq!(v["residual_mass"].as_f64(), Some(1.0));
    assert!(v["final_mixtures"].is_null());
    let o = qaut(&["enumerate", s(&p), "--max-steps", "5"]);
    assert!(stdout(&o).contains("no final mixture"));
    let v = json(&qaut(&["run", s(&p), "--max-steps", "5", "--json"]));
    assert_eq!(v["status"], "step-limit-exhausted");
}

fn theta_column(out: &str) -> Vec<f64> {
    out.lines()
        .skip(2)
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn equivalence_verdicts() {
    let cleaner = corpus("cleaner.qaut");
    let o = qaut(&["equiv", s(&cleaner), s(&cleaner), "--node", "m"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("EQUIVALENT"));
    assert_eq!(theta_column(&out), [0.0, 0.0]);

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(&cleaner).unwrap();
    let rotated = text
        .replace("K(\"0\") = [[1, 0], [0, 0]]", "K(\"0\") = scale(exp(0.7i), [[1, 0], [0, 0]])")
        .replace("K(\"1\") = [[0, 0], [0, 1]]", "K(\"1\") = scale(exp(-2i), [[0, 0], [0, 1]])");
    let p = write(&dir, "rotated.qaut", &rotated);
    let o = qaut(&["equiv", s(&cleaner), s(&p), "--node", "m"]);
    assert_eq!(o.status.code(), Some(0));
    let thetas = theta_column(&stdout(&o));
    assert!((thetas[0] - 0.7).abs() < 1e-8);
    assert!((thetas[1] - (std::f64::consts::TAU - 2.0)).abs() < 1e-8);

    let hadamard = text
        .replace("K(\"0\") = [[1, 0], [0, 0]]", "K(\"0\") = [[0.5, 0.5], [0.5, 0.5]]")
        .replace("K(\"1\") = [[0, 0], [0, 1]]", "K(\"1\") = [[0.5, -0.5], [-0.5, 0.5]]");
    let p = write(&dir, "hadamard.qaut", &hadamard);
    let o = qaut(&["equiv", s(&cleaner), s(&p), "--node", "m"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("NOT-EQUIVALENT at node `m`: no phase matches outcome `0`"));

    let o = qaut(&["equiv", s(&cleaner), s(&corpus("entangler.qaut")), "--node", "m"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qaut(&["equiv", s(&cleaner), s(&cleaner), "--node", "t"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convert_isometry_and_back() {
    let cleaner = corpus("cleaner.qaut");
    let o = qaut(&["convert", s(&cleaner), "--node", "m", "--to", "isometry"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let literal = out.lines().nth(1).unwrap();
    let w = qaut::dsl::eval_matrix(&qaut::dsl::parse_expr(literal).unwrap(), false).unwrap();
    assert_eq!(w.shape(), (4, 2));
    for r in 0..4 {
        for c in 0..2 {
            let expected = if (r, c) == (0, 0) || (r, c) == (3, 1) { 1.0 } else { 0.0 };
            assert_eq!(w[(r, c)], Complex::new(expected, 0.0));
        }
    }

    // Blocks printed after the isometry round trip match the serializer's
    // formatting of the original blocks byte for byte.
    let tele = corpus("teleportation.qaut");
    let doc = SourceDoc::new("t", std::fs::read_to_string(&tele).unwrap());
    let Ok(Model::Automaton(a)) = load(&doc) else { panic!() };
    for node in ["m", "h1", "e"] {
        let o = qaut(&["convert", s(&tele), "--node", node, "--to", "kraus"]);
        let printed: Vec<String> = stdout(&o).lines().skip(1).map(str::to_string).collect();
        let original: Vec<String> = a
            .op(node)
            .unwrap()
            .kraus()
            .iter()
            .map(|(x, k)| format!("K({}) = {}", qaut::dsl::format_name(x), format_matrix(k)))
            .collect();
        assert_eq!(printed, original);
    }

    let o = qaut(&["convert", s(&cleaner), "--node", "t", "--to", "kraus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qaut(&["convert", s(&cleaner), "--node", "zz", "--to", "kraus"]);
    assert_eq!(o.status.code(), Some(1));
}

fn validator(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{what}: {errors:?}");
}

#[test]
fn json_output_matches_schema() {
    let trace = validator("trace.schema.json");
    let enumeration = validator("enumeration.schema.json");
    for (file, _) in qaut::corpus::FILES {
        let path = corpus(file);
        for seed in ["0", "1", "2"] {
            let v = json(&qaut(&["run", s(&path), "--seed", seed, "--json"]));
            assert_valid(&trace, &v, file);
        }
        let v = json(&qaut(&["enumerate", s(&path), "--json"]));
        assert_valid(&enumeration, &v, file);
        let v = json(&qaut(&["enumerate", s(&path), "--max-steps", "2", "--json"]));
        assert_valid(&enumeration, &v, file);
    }
    // The schema does reject malformed documents.
    let bad = serde_json::json!({"schema_version": "1", "steps": []});
    assert!(!trace.is_valid(&bad));
}

#[test]
fn commands_are_deterministic() {
    let tele = corpus("teleportation.qaut");
    for args in [
        vec!["run", s(&tele), "--seed", "11", "--json"],
        vec!["run", s(&tele), "--seed", "11"],
        vec!["enumerate", s(&tele), "--initial", "pure(kron([[1], [1i]], [[1], [0], [0], [0]]))"],
        vec!["run", s(&corpus("coin.qaut")), "--seed", "5", "--json"],
    ] {
        assert_eq!(qaut(&args).stdout, qaut(&args).stdout);
    }
}

#[test]
fn machine_commands() {
    let coin = corpus("coin.qaut");
    let v = json(&qaut(&["enumerate", s(&coin), "--json"]));
    assert_eq!(v["kind"], "machine");
    // won@fresh ½; lost@tired ½·½ / (1 − ½·¼) = ⅓ from the tired loop.
    let masses: Vec<(String, String, f64)> = v["leaves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| {
            (
                l["node"].as_str().unwrap().to_string(),
                l["snapshot"].as_str().unwrap().to_string(),
                l["mass"].as_f64().unwrap(),
            )
        })
        .collect();
    let lost = masses.iter().find(|m| m.0 == "lost").unwrap().2;
    assert!((lost - 1.0 / 3.0).abs() < 1e-9);
    let o = qaut(&["run", s(&coin), "--initial", "weary"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&qaut(&["run", s(&coin), "--initial", "tired", "--seed", "1", "--json"]));
    assert_eq!(v["steps"][0]["snapshot"], "tired");
}

#[test]
fn examples_list_show_and_copy() {
    let o = qaut(&["examples"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for (file, _) in qaut::corpus::FILES {
        assert!(out.contains(file));
    }
    let o = qaut(&["examples", "--show", "cleaner"]);
    assert_eq!(stdout(&o), qaut::corpus::source("cleaner.qaut").unwrap());
    assert_eq!(qaut(&["examples", "--show", "nothing"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("models");
    assert_eq!(qaut(&["examples", "--copy", s(&target)]).status.code(), Some(0));
    for (file, _) in qaut::corpus::FILES {
        assert_eq!(qaut(&["validate", s(&target.join(file))]).status.code(), Some(0));
    }
    assert_eq!(qaut(&["examples", "--copy", s(&target)]).status.code(), Some(2));
}
