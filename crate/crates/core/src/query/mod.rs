//! FPQL: the OCL subset used to express dataset fingerprints.
//!
//! [`parse`] turns source text into an untyped [`ast::QueryFile`];
//! [`typecheck`] resolves it against the built-in metamodel into a
//! [`QueryAst`] whose nodes all carry a static type.

pub mod ast;
mod lexer;
pub mod metamodel;
mod parser;
mod pretty;
mod typecheck;
pub mod typed;
pub mod types;

use std::fmt;

pub use lexer::{is_keyword, tokenize, Token};
pub use parser::{parse, parse_expr};
pub use pretty::{pretty_expr, pretty_file};
pub use typecheck::typecheck;
pub use typed::{CollOp, IterKind, OpDef, OpId, QueryAst, TExpr, TKind};
pub use types::{Class, Type};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryError {
    Syntax {
        line: u32,
        col: u32,
        message: String,
        expected: Vec<String>,
    },
    Type {
        line: u32,
        col: u32,
        message: String,
        expected: String,
        actual: String,
    },
    Unknown {
        line: u32,
        col: u32,
        /// e.g. "attribute", "operation", "variable"
        what: &'static str,
        name: String,
        /// Where the lookup happened, e.g. a class name.
        scope: String,
        suggestion: Option<String>,
    },
    Definition {
        line: u32,
        col: u32,
        message: String,
    },
}

impl QueryError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            QueryError::Syntax { line, col, .. }
            | QueryError::Type { line, col, .. }
            | QueryError::Unknown { line, col, .. }
            | QueryError::Definition { line, col, .. } => (*line, *col),
        }
    }
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::Syntax {
                line,
                col,
                message,
                expected,
            } => {
                write!(f, "{line}:{col}: syntax error: {message}")?;
                if !expected.is_empty() {
                    write!(f, "; expected {}", expected.join(", "))?;
                }
                Ok(())
            }
            QueryError::Type {
                line,
                col,
                message,
                expected,
                actual,
            } => {
                write!(
                    f,
                    "{line}:{col}: type error: {message}: expected {expected}, found {actual}"
                )
            }
            QueryError::Unknown {
                line,
                col,
                what,
                name,
                scope,
                suggestion,
            } => {
                write!(f, "{line}:{col}: {scope} has no {what} `{name}`")?;
                if let Some(s) = suggestion {
                    write!(f, " (did you mean `{s}`?)")?;
                }
                Ok(())
            }
            QueryError::Definition { line, col, message } => write!(f, "{line}:{col}: {message}"),
        }
    }
}

impl std::error::Error for QueryError {}

/// Parses and typechecks in one step.
pub fn compile(source: &str) -> Result<QueryAst, QueryError> {
    typecheck(&parse(source)?)
}
