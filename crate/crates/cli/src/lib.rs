//! The `corolower` command line.
//!
//! Program output goes to stdout and every diagnostic to stderr. Exit codes
//! are 0 on success, 1 for unreadable or rejected input (including usage
//! errors), 2 for a runtime failure and 3 when `diff` finds a divergence.

mod diff;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use corolower_core::cfg::{build_cfg, emit_dot, merge_blocks};
use corolower_core::interp::{self, DEFAULT_STEP_BUDGET};
use corolower_core::{defunc, parse_source, printer, transform, Error, Program};

pub const EXIT_OK: u8 = 0;
pub const EXIT_COMPILE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;

/// Overrides the default evaluation step budget.
pub const BUDGET_ENV: &str = "COROLOWER_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "corolower", version, about = "Lower generator functions into closure-based state machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the lowered program.
    Compile {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Lowered)]
        emit: Emit,
        #[command(flatten)]
        opt: Optimize,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Interpret a program and print what it prints.
    Run {
        input: PathBuf,
        #[command(flatten)]
        budget: Budget,
    },
    /// Emit the control flow graph of every generator as DOT.
    Cfg {
        input: PathBuf,
        #[command(flatten)]
        opt: Optimize,
        /// Directory for `<generator>.dot` files; stdout if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check that the source and its lowered forms behave identically.
    Diff(DiffArgs),
}

#[derive(Args, Debug)]
struct DiffArgs {
    #[arg(required_unless_present = "all")]
    input: Option<PathBuf>,
    /// Compare the source against this program instead of its own lowerings.
    #[arg(long, requires = "input")]
    against: Option<PathBuf>,
    /// Check every `.mini` file in a directory.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["input", "against"])]
    all: Option<PathBuf>,
    /// Resumptions per traced generator.
    #[arg(long, default_value_t = 100)]
    resumptions: usize,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
struct Optimize {
    /// Merge blocks before rewriting (the default).
    #[arg(long, overrides_with = "no_optimize")]
    optimize: bool,
    #[arg(long)]
    no_optimize: bool,
}

impl Optimize {
    fn enabled(&self) -> bool {
        !self.no_optimize
    }
}

#[derive(Args, Debug)]
struct Budget {
    /// Evaluation steps allowed per run.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Emit {
    Lowered,
    FirstOrder,
}

/// A failed command: the exit code and what to tell the user.
#[derive(Debug)]
pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub(crate) fn compile(message: impl Into<String>) -> Self {
        Failure { code: EXIT_COMPILE, message: message.into() }
    }
}

pub(crate) type CmdResult = Result<(), Failure>;

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_COMPILE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Compile { input, emit, opt, output } => compile(&input, emit, opt.enabled(), output.as_deref(), out),
        Command::Run { input, budget } => step_budget(&budget).and_then(|b| run_file(&input, b, out)),
        Command::Cfg { input, opt, output } => cfg(&input, opt.enabled(), output.as_deref(), out, err),
        Command::Diff(args) => step_budget(&args.budget).and_then(|b| {
            let check = diff::Check { budget: b, resumptions: args.resumptions };
            match (&args.all, &args.input) {
                (Some(dir), _) => check.all(dir, out),
                (None, Some(input)) => check.file(input, args.against.as_deref(), out),
                (None, None) => Err(Failure::compile("diff needs an input file or --all DIR")),
            }
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message);
            f.code
        }
    }
}

/// Flag, then environment, then the default.
fn step_budget(flag: &Budget) -> Result<u64, Failure> {
    if let Some(b) = flag.budget {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::compile(format!("error: {BUDGET_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_STEP_BUDGET),
    }
}

pub(crate) fn load(path: &Path) -> Result<Program, Failure> {
    let source = fs::read_to_string(path)
        .map_err(|e| Failure::compile(format!("error: cannot read `{}`: {e}", path.display())))?;
    parse_source(&source).map_err(|e| Failure::compile(format!("{}: {e}", path.display())))
}

pub(crate) fn lower(program: &Program, optimize: bool, emit: Emit) -> Result<Program, Error> {
    let lowered = transform::transform_program(program, optimize)?;
    Ok(match emit {
        Emit::Lowered => lowered,
        Emit::FirstOrder => defunc::defunctionalize(&lowered)?,
    })
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::compile(format!("error: cannot write `{}`: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::compile(format!("error: {e}"))),
    }
}

fn compile(input: &Path, emit: Emit, optimize: bool, output: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let program = load(input)?;
    let lowered = lower(&program, optimize, emit).map_err(|e| Failure::compile(format!("{}: {e}", input.display())))?;
    write_output(output, &printer::print_source(&lowered), out)
}

fn run_file(input: &Path, budget: u64, out: &mut dyn Write) -> CmdResult {
    let program = load(input)?;
    let run = interp::run_program(&program, budget);
    let _ = write!(out, "{}", run.output);
    match run.error {
        None => Ok(()),
        Some(e) => Err(Failure { code: EXIT_RUNTIME, message: format!("{}: {e}", input.display()) }),
    }
}

fn cfg(input: &Path, optimize: bool, output: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let program = load(input)?;
    if !program.has_generators() {
        let _ = writeln!(err, "warning: no generators in `{}`", input.display());
        return Ok(());
    }
    for g in program.generators() {
        let mut graph = build_cfg(g);
        if optimize {
            graph = merge_blocks(&graph);
        }
        let dot = emit_dot(&g.name, &graph);
        match output {
            Some(dir) => {
                fs::create_dir_all(dir)
                    .map_err(|e| Failure::compile(format!("error: cannot create `{}`: {e}", dir.display())))?;
                write_output(Some(&dir.join(format!("{}.dot", g.name))), &dot, out)?;
            }
            None => write_output(None, &dot, out)?,
        }
    }
    Ok(())
}
