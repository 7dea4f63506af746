//! Concrete syntax for programs (`.fj`) and guidelines (`.policy`).

mod lexer;
mod policy;
mod pretty;
mod program;

use std::fmt;

use crate::syntax::{Span, WfDiagnostic};

pub use lexer::quote;
pub use policy::parse_policy;
pub use pretty::{pretty_expr, pretty_program};
pub use program::{parse_program, parse_with_main, MAIN_CLASS};

/// A syntax error with its position, or the list of well-formedness
/// violations of an otherwise parsed program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub wellformed: Vec<WfDiagnostic>,
}

impl ParseError {
    pub fn at(span: Span, message: impl Into<String>) -> ParseError {
        ParseError {
            line: span.line,
            col: span.col,
            message: message.into(),
            wellformed: Vec::new(),
        }
    }

    pub fn line(line: u32, message: impl Into<String>) -> ParseError {
        ParseError::at(Span { line, col: 1 }, message)
    }

    fn wellformed(diags: Vec<WfDiagnostic>) -> ParseError {
        let message = diags
            .iter()
            .map(|d| d.message.clone())
            .collect::<Vec<_>>()
            .join("; ");
        ParseError {
            line: 0,
            col: 0,
            message,
            wellformed: diags,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.wellformed.is_empty() {
            write!(f, "ill-formed program: {}", self.message)
        } else if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

