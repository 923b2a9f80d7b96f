//! Reference interpreter for source programs (with generators) and for the
//! closure and record programs the lowering passes produce.
//!
//! Execution uses an explicit frame stack rather than host recursion for
//! statement nesting, so a native generator can suspend in the middle of a
//! loop and later continue from the saved frames.

mod eval;
mod trace;
mod value;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Pos, Program};
use crate::Error;

pub use eval::MAX_CALL_DEPTH;
pub use trace::{eval_cfg, trace_generator, trace_generator_with_budget, GeneratorRun, Step, YieldTrace};
pub use value::Value;

/// Evaluation steps allowed for one run.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub message: String,
    pub pos: Pos,
    /// Zero-based index of the resumption that failed, when driven by a trace.
    pub resumption: Option<usize>,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("runtime error")?;
        if self.pos.is_known() {
            write!(f, " at {}", self.pos)?;
        }
        if let Some(i) = self.resumption {
            write!(f, " (resumption {i})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl core::error::Error for RuntimeError {}

/// Everything a program printed, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramOutput(pub Vec<Value>);

impl fmt::Display for ProgramOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A finished run: what was printed before the run ended, and the error
/// that ended it, if any.
#[derive(Debug)]
pub struct Execution {
    pub output: ProgramOutput,
    pub error: Option<Error>,
}

impl Execution {
    pub fn into_result(self) -> Result<ProgramOutput, Error> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.output),
        }
    }
}

/// Runs the entry function, keeping partial output on failure.
pub fn run_program(program: &Program, budget: u64) -> Execution {
    let mut it = eval::Interpreter::new(program, budget);
    let error = match program.func(&program.entry) {
        None => Some(it.error(alloc::format!("entry function `{}` not found", program.entry))),
        Some(main) => it.call_decl(main, Vec::new()).err(),
    };
    Execution { output: ProgramOutput(it.output), error }
}

/// Runs a program that may declare generators.
pub fn interp_native(program: &Program, budget: u64) -> Result<ProgramOutput, Error> {
    run_program(program, budget).into_result()
}

/// Runs a generator-free program, such as the output of the lowering passes.
pub fn interp(program: &Program, budget: u64) -> Result<ProgramOutput, Error> {
    if let Some(g) = program.generators().next() {
        return Err(Error::Validation(crate::validate::ValidationError {
            pos: Pos::NONE,
            message: alloc::format!("`{}` is a generator; interp only runs lowered programs", g.name),
        }));
    }
    interp_native(program, budget)
}
