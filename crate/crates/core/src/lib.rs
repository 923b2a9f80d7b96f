//! Lowering of generator functions into closure-based state machines.
//!
//! The pipeline for a source program:
//!
//! 1. [`lexer::lex`] and [`parser::parse`] produce a validated [`ast::Program`].
//! 2. [`cfg::build_cfg`] cuts each generator body into basic blocks, and
//!    [`cfg::merge_blocks`] folds straight-line chains.
//! 3. [`transform::transform_program`] replaces each generator with a factory
//!    returning a closure that runs a `while (true)` dispatch over an
//!    instruction counter.
//! 4. [`defunc::defunctionalize`] turns those closures into environment
//!    records plus a single global `apply`.
//!
//! [`interp`] runs all three program forms, which is how the passes are
//! checked against each other.

#![no_std]

extern crate alloc;

pub mod ast;
pub mod cfg;
pub mod defunc;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod transform;
pub mod validate;

use core::fmt;

pub use ast::Program;
pub use defunc::DefuncError;
pub use interp::{RuntimeError, Value};
pub use lexer::LexError;
pub use parser::ParseError;
pub use transform::TransformError;
pub use validate::ValidationError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    Lex(LexError),
    Parse(ParseError),
    Validation(ValidationError),
    Transform(TransformError),
    Defunc(DefuncError),
    Runtime(RuntimeError),
    BudgetExceeded { limit: u64 },
}

impl Error {
    /// True for failures of a running program, as opposed to a rejected one.
    pub fn is_runtime(&self) -> bool {
        matches!(self, Error::Runtime(_) | Error::BudgetExceeded { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Lex(e) => e.fmt(f),
            Error::Parse(e) => e.fmt(f),
            Error::Validation(e) => e.fmt(f),
            Error::Transform(e) => e.fmt(f),
            Error::Defunc(e) => e.fmt(f),
            Error::Runtime(e) => e.fmt(f),
            Error::BudgetExceeded { limit } => write!(f, "budget exceeded: more than {limit} evaluation steps"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! from_error {
    ($($variant:ident($ty:ty)),*) => {$(
        impl From<$ty> for Error {
            fn from(e: $ty) -> Self {
                Error::$variant(e)
            }
        }
    )*};
}

from_error!(
    Lex(LexError),
    Parse(ParseError),
    Validation(ValidationError),
    Transform(TransformError),
    Defunc(DefuncError),
    Runtime(RuntimeError)
);

/// Parses source text into a validated program.
pub fn parse_source(source: &str) -> Result<Program, Error> {
    parser::parse(&lexer::lex(source)?)
}
