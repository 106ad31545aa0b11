//! The `.qaut` model language: lexing, parsing, elaboration into models
//! and the canonical serializer.
//!
//! ```text
//! automaton cleaner {
//!   dim = 2
//!   node m initial
//!   node f
//!   node t terminal
//!   arc "0": m -> t
//!   arc "1": m -> f
//!   arc flip: f -> t
//!   op m { K("0") = [[1, 0], [0, 0]]  K("1") = [[0, 0], [0, 1]] }
//!   op f { K(flip) = X }
//! }
//! ```

pub mod ast;
mod diagnostic;
mod elaborate;
mod eval;
mod lexer;
mod parser;
mod serialize;

pub use diagnostic::Diagnostic;
pub use elaborate::{elaborate, Model};
pub use eval::{eval_matrix, eval_operator, eval_state};
pub use lexer::{tokenize, Span, Token, TokenKind};
pub use parser::{parse, parse_expr};
pub use serialize::{format_complex, format_matrix, format_name, format_real, serialize, serialize_automaton, serialize_machine};

use crate::linalg::DEFAULT_TOL;
use crate::quantum::DensityOperator;

/// Source text together with the name used in diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDoc {
    pub name: String,
    pub text: String,
}

impl SourceDoc {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
        }
    }

    /// All diagnostics rendered one per line.
    pub fn render(&self, diags: &[Diagnostic]) -> String {
        diags.iter().map(|d| d.render(&self.name) + "\n").collect()
    }
}

/// Parses and elaborates a source with the default tolerance.
pub fn load(doc: &SourceDoc) -> Result<Model, Vec<Diagnostic>> {
    load_with(doc, DEFAULT_TOL)
}

pub fn load_with(doc: &SourceDoc, tol: f64) -> Result<Model, Vec<Diagnostic>> {
    elaborate(&parse(doc)?, tol)
}

/// Reads a state expression such as `pure([[1], [0]])` for a
/// `dim`-dimensional system.
pub fn parse_state(text: &str, dim: usize, tol: f64) -> Result<DensityOperator, Vec<Diagnostic>> {
    let e = parse_expr(text)?;
    eval_state(&e, dim, tol).map_err(|d| vec![d])
}
