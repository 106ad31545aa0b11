//! Canonical text form of models. Numbers are written with 17 significant
//! digits, so parsing the output reproduces every entry exactly.

use std::fmt::Write;

use super::elaborate::Model;
use crate::asm::StochasticAsm;
use crate::automaton::AbstractQuantumAutomaton;
use crate::linalg::{Complex, ComplexMatrix};

const RESERVED: &[&str] = &[
    "automaton", "machine", "dim", "node", "initial", "terminal", "arc", "op", "K", "snapshots", "prob", "map",
];

/// A name as it must appear in source: bare when it is a plain identifier,
/// quoted otherwise.
pub fn format_name(name: &str) -> String {
    let mut chars = name.chars();
    let plain = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name);
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

pub fn format_complex(z: Complex) -> String {
    match (z.re == 0.0, z.im == 0.0) {
        (_, true) => format_real(z.re),
        (true, false) => format!("{}i", format_real(z.im)),
        (false, false) => {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", format_real(z.re), format_real(z.im.abs()))
        }
    }
}

/// `[[a, b], [c, d]]`.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let cells: Vec<String> = m.row(r).iter().map(|&z| format_complex(z)).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn write_graph(out: &mut String, graph: &crate::graph::ControlGraph) {
    for n in graph.nodes() {
        let mut line = format!("  node {}", format_name(n));
        if n == graph.initial() {
            line.push_str(" initial");
        }
        if graph.is_terminal(n) {
            line.push_str(" terminal");
        }
        writeln!(out, "{line}").unwrap();
    }
    for a in graph.arcs() {
        writeln!(
            out,
            "  arc {}: {} -> {}",
            format_name(&a.id),
            format_name(&a.dom),
            format_name(&a.codom)
        )
        .unwrap();
    }
}

pub fn serialize_automaton(a: &AbstractQuantumAutomaton) -> String {
    let mut out = String::new();
    writeln!(out, "automaton {} {{", format_name(a.name())).unwrap();
    writeln!(out, "  dim = {}", a.dim()).unwrap();
    write_graph(&mut out, a.graph());
    for (node, op) in a.ops() {
        writeln!(out, "  op {} {{", format_name(node)).unwrap();
        for (label, k) in op.kraus().iter() {
            writeln!(out, "    K({}) = {}", format_name(label), format_matrix(k)).unwrap();
        }
        writeln!(out, "  }}").unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn serialize_machine(m: &StochasticAsm) -> String {
    let labels = m.snapshots().labels();
    let mut out = String::new();
    writeln!(out, "machine {} {{", format_name(m.name())).unwrap();
    let names: Vec<String> = labels.iter().map(|l| format_name(l)).collect();
    writeln!(out, "  snapshots {{ {} }}", names.join(", ")).unwrap();
    write_graph(&mut out, m.graph());
    for ((node, s), row) in m.distributions() {
        let entries: Vec<String> = row
            .iter()
            .map(|(arc, p)| format!("{}: {}", format_name(arc), format_real(*p)))
            .collect();
        let snapshot = labels.get(*s).map_or_else(|| format!("#{s}"), |l| format_name(l));
        writeln!(out, "  prob({}, {}) {{ {} }}", format_name(node), snapshot, entries.join(", ")).unwrap();
    }
    for arc in m.graph().arcs() {
        let Some(table) = m.transform(&arc.id) else { continue };
        let entries: Vec<String> = table
            .iter()
            .enumerate()
            .filter(|(_, &t)| t < labels.len())
            .map(|(s, &t)| format!("{} -> {}", format_name(&labels[s]), format_name(&labels[t])))
            .collect();
        writeln!(out, "  map({}) {{ {} }}", format_name(&arc.id), entries.join(", ")).unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn serialize(model: &Model) -> String {
    match model {
        Model::Automaton(a) => serialize_automaton(a),
        Model::Machine(m) => serialize_machine(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!(format_name("n0"), "n0");
        assert_eq!(format_name("00"), "\"00\"");
        assert_eq!(format_name("node"), "\"node\"");
        assert_eq!(format_name("a\"b"), "\"a\\\"b\"");
        assert_eq!(format_name("heads@s0"), "\"heads@s0\"");
    }

    #[test]
    fn numbers() {
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(3.0), "3");
        assert_eq!(format_real(-0.5), "-5.0000000000000000e-1");
        let x = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        assert_eq!(format_complex(Complex::new(1.0, -2.0)), "1-2i");
        assert_eq!(format_complex(Complex::new(0.0, 1.0)), "1i");
        assert_eq!(format_complex(Complex::new(0.0, -1.0)), "-1i");
    }

    #[test]
    fn matrices() {
        let m = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert_eq!(format_matrix(&m), "[[1, 0], [0, -1]]");
    }
}
