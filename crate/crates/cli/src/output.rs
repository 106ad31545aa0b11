//! JSON documents and human-readable formatting.

use serde::Serialize;

use qaut::linalg::{Complex, ComplexMatrix};

pub const SCHEMA_VERSION: &str = "1";

/// A matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

#[derive(Debug, Serialize)]
pub struct TraceJson {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub automaton: String,
    pub initial: String,
    pub seed: u64,
    pub max_steps: usize,
    pub steps: Vec<StepJson>,
    pub status: &'static str,
}

#[derive(Debug, Serialize)]
pub struct StepJson {
    pub node: String,
    pub arc: Option<String>,
    pub probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct EnumerationJson {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub automaton: String,
    pub initial: String,
    pub max_steps: usize,
    pub prune_eps: f64,
    pub leaves: Vec<LeafJson>,
    pub terminal_mass: f64,
    pub residual_mass: f64,
    pub dropped_mass: f64,
    /// `None` when the residual mass exceeds the tolerance.
    pub final_mixtures: Option<Vec<MixtureJson>>,
}

#[derive(Debug, Serialize)]
pub struct LeafJson {
    pub path: Vec<String>,
    pub node: String,
    pub mass: f64,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct MixtureJson {
    pub node: String,
    pub mass: f64,
    pub state: MatrixJson,
}

fn fmt_entry(z: Complex) -> String {
    // Avoid printing "-0.0000".
    let clean = |v: f64| if v.abs() < 5e-5 { 0.0 } else { v };
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        format!("{re:.4}")
    } else {
        format!("{re:.4}{im:+.4}i")
    }
}

/// Matrix with 4 decimals, right-aligned per column, each row indented by `indent`.
pub fn pretty_matrix(m: &ComplexMatrix, indent: &str) -> String {
    let cells: Vec<Vec<String>> = (0..m.rows())
        .map(|r| m.row(r).iter().map(|&z| fmt_entry(z)).collect())
        .collect();
    let widths: Vec<usize> = (0..m.cols())
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in cells {
        out.push_str(indent);
        let padded: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Left-aligned text table; the last column is not padded.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let n = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == n {
                s.push_str(c);
            } else {
                s.push_str(c);
                s.push_str(&" ".repeat(widths[i] - c.chars().count() + 2));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn prob6(p: f64) -> String {
    // Adding 0.0 turns -0.0 into 0.0.
    format!("{:.6}", p + 0.0)
}
