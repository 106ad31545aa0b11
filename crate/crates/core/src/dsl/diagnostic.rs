use std::fmt;

use super::lexer::Span;

/// A positioned error in a model source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
    /// Source text at the reported position.
    pub lexeme: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>, lexeme: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
            lexeme: lexeme.into(),
        }
    }

    pub fn line(&self) -> usize {
        self.span.line
    }

    pub fn col(&self) -> usize {
        self.span.col
    }

    /// `name:line:col: message` rendering.
    pub fn render(&self, source_name: &str) -> String {
        if self.lexeme.is_empty() {
            format!("{source_name}:{}:{}: error: {}", self.span.line, self.span.col, self.message)
        } else {
            format!(
                "{source_name}:{}:{}: error: {} (at `{}`)",
                self.span.line, self.span.col, self.message, self.lexeme
            )
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}
