//! Differential checks between a source program and its lowered forms.

use std::fs;
use std::io::Write;
use std::path::Path;

use corolower_core::interp::{run_program, trace_generator_with_budget, Execution, YieldTrace};
use corolower_core::{Error, Program, Value};

use crate::{load, lower, CmdResult, Emit, Failure, EXIT_COMPILE, EXIT_DIVERGENCE};

pub(crate) struct Check {
    pub budget: u64,
    pub resumptions: usize,
}

impl Check {
    pub(crate) fn file(&self, input: &Path, against: Option<&Path>, out: &mut dyn Write) -> CmdResult {
        let source = load(input)?;
        let forms: Vec<(String, Program)> = match against {
            Some(other) => vec![(other.display().to_string(), load(other)?)],
            None => {
                let mut forms = Vec::new();
                for (label, optimize, emit) in [
                    ("lowered-opt", true, Emit::Lowered),
                    ("lowered-noopt", false, Emit::Lowered),
                    ("first-order", true, Emit::FirstOrder),
                ] {
                    let p = lower(&source, optimize, emit)
                        .map_err(|e| Failure::compile(format!("{}: {e}", input.display())))?;
                    forms.push((label.to_string(), p));
                }
                forms
            }
        };

        let expected = run_program(&source, self.budget);
        let traced: Vec<&str> =
            source.generators().filter(|g| g.params.is_empty()).map(|g| g.name.as_str()).collect();
        let nulls = vec![Value::Null; self.resumptions];
        let native_traces: Vec<_> =
            traced.iter().map(|g| trace_generator_with_budget(&source, g, &[], &nulls, self.budget)).collect();

        for (label, program) in &forms {
            let diverged = |detail: String| Failure {
                code: EXIT_DIVERGENCE,
                message: format!("{}: divergence in {label}: {detail}", input.display()),
            };
            if let Some(detail) = compare_runs(&expected, &run_program(program, self.budget)) {
                return Err(diverged(detail));
            }
            for (name, want) in traced.iter().zip(&native_traces) {
                if program.func(name).is_none() {
                    continue;
                }
                let got = trace_generator_with_budget(program, name, &[], &nulls, self.budget);
                if let Some(detail) = compare_traces(want, &got) {
                    return Err(diverged(format!("generator `{name}`, {detail}")));
                }
            }
        }

        let labels: Vec<&str> = forms.iter().map(|(l, _)| l.as_str()).collect();
        let _ = writeln!(
            out,
            "ok: {}: native agrees with {} ({} output lines; traced generators: {}; resumptions each: {})",
            input.display(),
            labels.join(", "),
            expected.output.0.len(),
            traced.len(),
            self.resumptions
        );
        Ok(())
    }

    pub(crate) fn all(&self, dir: &Path, out: &mut dyn Write) -> CmdResult {
        let entries = fs::read_dir(dir)
            .map_err(|e| Failure::compile(format!("error: cannot read `{}`: {e}", dir.display())))?;
        let mut files: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "mini"))
            .collect();
        files.sort();

        let mut worst: Option<u8> = None;
        let mut failed = 0;
        for path in &files {
            if let Err(f) = self.file(path, None, out) {
                let _ = writeln!(out, "FAIL: {}", f.message);
                failed += 1;
                // A divergence outranks a file that did not compile.
                worst = Some(match worst {
                    Some(EXIT_DIVERGENCE) => EXIT_DIVERGENCE,
                    _ if f.code == EXIT_DIVERGENCE => EXIT_DIVERGENCE,
                    _ => EXIT_COMPILE,
                });
            }
        }
        let _ = writeln!(out, "{} files checked, {failed} failed", files.len());
        match worst {
            None => Ok(()),
            Some(code) => Err(Failure { code, message: format!("{failed} of {} files failed", files.len()) }),
        }
    }
}

fn describe_end(e: &Option<Error>) -> String {
    match e {
        None => String::from("normal exit"),
        Some(Error::Runtime(r)) => format!("runtime error `{}`", r.message),
        Some(other) => other.to_string(),
    }
}

fn show(v: Option<&Value>) -> String {
    match v {
        Some(v) => format!("`{v}`"),
        None => String::from("nothing"),
    }
}

/// Printed output and how the run ended. Runs that both exhaust the step
/// budget are compared on their common prefix, since the forms spend
/// different numbers of steps on the same work.
fn compare_runs(expected: &Execution, got: &Execution) -> Option<String> {
    let (a, b) = (&expected.output.0, &got.output.0);
    let both_out_of_budget = matches!(
        (&expected.error, &got.error),
        (Some(Error::BudgetExceeded { .. }), Some(Error::BudgetExceeded { .. }))
    );
    let len = if both_out_of_budget { a.len().min(b.len()) } else { a.len().max(b.len()) };
    if let Some(i) = (0..len).find(|&i| a.get(i) != b.get(i)) {
        return Some(format!("output line {}: expected {}, got {}", i + 1, show(a.get(i)), show(b.get(i))));
    }
    let (want, have) = (describe_end(&expected.error), describe_end(&got.error));
    (want != have).then(|| format!("expected {want}, got {have}"))
}

fn compare_traces(expected: &Result<YieldTrace, Error>, got: &Result<YieldTrace, Error>) -> Option<String> {
    match (expected, got) {
        (Ok(a), Ok(b)) => {
            let len = a.items.len().max(b.items.len());
            if let Some(i) = (0..len).find(|&i| a.items.get(i) != b.items.get(i)) {
                return Some(format!(
                    "resumption {i}: expected {}, got {}",
                    show(a.items.get(i)),
                    show(b.items.get(i))
                ));
            }
            (a.terminated != b.terminated).then(|| {
                let word = |t: bool| if t { "termination" } else { "no termination" };
                format!("after {} items: expected {}, got {}", a.items.len(), word(a.terminated), word(b.terminated))
            })
        }
        (Err(Error::BudgetExceeded { .. }), Err(Error::BudgetExceeded { .. })) => None,
        (Err(a), Err(b)) => {
            let (want, have) = (describe_end(&Some(a.clone())), describe_end(&Some(b.clone())));
            (want != have).then(|| format!("expected {want}, got {have}"))
        }
        (Ok(_), Err(e)) => Some(format!("expected a trace, got {e}")),
        (Err(e), Ok(_)) => Some(format!("expected {e}, got a trace")),
    }
}
