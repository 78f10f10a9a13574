//! A small vector-expression language for population update rules.
//!
//! A rule is a straight-line program that maps one target individual (plus
//! read-only views of the population) to one offspring vector:
//!
//! ```text
//! F = 0.5;
//! CR = 0.9;
//! v = r1 + F * (r2 - r3);
//! offspring = bincross(x, clamp(v), CR);
//! ```
//!
//! Leading `NAME = NUMBER;` lines declare scalar parameters. Builtin vectors
//! are `x best r1 r2 r3 mean lb ub`, builtin scalars are `cv f dim`, and the
//! functions are `rand() randn() bincross(a, b, cr) clamp(v) abs(a) min(a, b)
//! max(a, b)`. Arithmetic broadcasts scalars over vectors. The last statement
//! must assign a vector to `offspring`.
//!
//! Randomness follows a fixed draw order per target: three distinct donor
//! indices `r1, r2, r3` first, then one draw per `rand()`/`randn()` call in
//! left-to-right evaluation order, and for each `bincross` one index draw
//! (`jrand`) followed by D uniform draws.

mod ast;
mod builtins;
mod interp;
mod parser;
mod printer;

pub use ast::{Assign, BinOp, Expr, Func, Param, RuleAst, ValueType};
pub use builtins::{builtin_rule, builtin_rules, BUILTIN_SOURCES};
pub use interp::{interpret, Interpretation, RuleContext};
pub use parser::parse;
pub use printer::print;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum accepted rule source length, in characters.
pub const MAX_RULE_CHARS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleOrigin {
    Llm,
    Scripted,
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSource {
    pub text: String,
    pub origin: RuleOrigin,
}

impl RuleSource {
    pub fn new(text: impl Into<String>, origin: RuleOrigin) -> Self {
        RuleSource {
            text: text.into(),
            origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("empty rule")]
    Empty,
    #[error("rule is {len} characters long, limit is {MAX_RULE_CHARS}")]
    TooLong { len: usize },
    #[error("lexical error at {line}:{col}: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("type error at {line}:{col} in `{op}`: {msg}")]
    Type {
        line: usize,
        col: usize,
        op: String,
        msg: String,
    },
    #[error("unbound identifier `{name}` at {line}:{col}")]
    Unbound { line: usize, col: usize, name: String },
    #[error("cannot assign to builtin `{name}` at {line}:{col}")]
    Reserved { line: usize, col: usize, name: String },
    #[error("the last statement must assign `offspring`")]
    MissingOffspring,
}

impl RuleError {
    /// Stable short name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            RuleError::Empty => "empty",
            RuleError::TooLong { .. } => "too-long",
            RuleError::Lex { .. } => "lexical",
            RuleError::Syntax { .. } => "syntax",
            RuleError::Type { .. } => "type",
            RuleError::Unbound { .. } => "unbound",
            RuleError::Reserved { .. } => "reserved",
            RuleError::MissingOffspring => "missing-offspring",
        }
    }
}

/// Parses a [`RuleSource`], enforcing the source-level limits first.
pub fn parse_source(source: &RuleSource) -> Result<RuleAst, RuleError> {
    parse(&source.text)
}
