use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;

use super::eval::{Flow, Interpreter, Resumed};
use super::value::{lookup, Frame, FrameKind, GenState, RtValue, Scope, Value};
use super::{RuntimeError, DEFAULT_STEP_BUDGET};
use crate::ast::Program;
use crate::cfg::{Cfg, Terminator};
use crate::transform::{match_machine, DONE_STATE};
use crate::Error;

/// Values produced by one generator instance over a scripted sequence of
/// resumptions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YieldTrace {
    pub items: Vec<Value>,
    /// The generator finished within the script.
    pub terminated: bool,
}

/// Outcome of one resumption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Yielded(Value),
    /// The instance is done. Carries the returned value when this
    /// resumption finished it with a non-null `return`.
    Finished(Option<Value>),
}

enum Handle<'p> {
    Native(Rc<RefCell<GenState<'p>>>),
    /// A lowered factory's closure; done once its counter reads zero.
    Closure { closure: RtValue<'p>, inst_var: Option<&'p str> },
    /// A defunctionalized `{env, fn}` record; the counter is the first env field.
    Record { env: RtValue<'p>, func: RtValue<'p> },
}

/// One generator instance driven step by step. Works on native generators,
/// on lowered closure factories and on defunctionalized record factories,
/// detected from what calling `name` returns.
pub struct GeneratorRun<'p> {
    interp: Interpreter<'p>,
    handle: Handle<'p>,
    resumptions: usize,
    finished: bool,
}

impl<'p> GeneratorRun<'p> {
    pub fn start(program: &'p Program, name: &str, args: &[Value], budget: u64) -> Result<Self, Error> {
        let mut interp = Interpreter::new(program, budget);
        let decl = interp
            .func(name)
            .ok_or_else(|| interp.error(alloc::format!("unknown function `{name}`")))?;
        let mut values = Vec::with_capacity(args.len());
        for a in args {
            values.push(interp.import(a)?);
        }
        let handle = match interp.call_decl(decl, values)? {
            RtValue::Gen(g) => Handle::Native(g),
            c @ RtValue::Closure(_) => Handle::Closure { closure: c, inst_var: match_machine(decl).map(|m| m.inst_var) },
            RtValue::Record(fields) => {
                let field = |n: &str| fields.borrow().iter().find(|(k, _)| k == n).map(|(_, v)| v.clone());
                match (field("env"), field("fn")) {
                    (Some(env @ RtValue::Record(_)), Some(func)) => Handle::Record { env, func },
                    _ => return Err(interp.error(alloc::format!("`{name}` returned a record that is not a machine"))),
                }
            }
            other => {
                return Err(interp.error(alloc::format!("`{name}` returned a {}, not a generator", other.type_name())))
            }
        };
        Ok(GeneratorRun { interp, handle, resumptions: 0, finished: false })
    }

    /// Values printed so far.
    pub fn output(&self) -> &[Value] {
        &self.interp.output
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn resume(&mut self, arg: &Value) -> Result<Step, Error> {
        let index = self.resumptions;
        self.resumptions += 1;
        if self.finished {
            return Ok(Step::Finished(None));
        }
        self.step(arg).map_err(|e| match e {
            Error::Runtime(inner) => Error::Runtime(RuntimeError { resumption: Some(index), ..inner }),
            other => other,
        })
    }

    fn step(&mut self, arg: &Value) -> Result<Step, Error> {
        let arg = self.interp.import(arg)?;
        let (value, done) = match &self.handle {
            Handle::Native(g) => match self.interp.resume(&g.clone(), arg)? {
                Resumed::Yielded(v) => (v, false),
                Resumed::Returned(v) => (v, true),
                Resumed::Exhausted => (RtValue::Null, true),
            },
            Handle::Closure { closure, inst_var } => {
                let (closure, inst_var) = (closure.clone(), *inst_var);
                let v = self.interp.call_value(closure.clone(), alloc::vec![arg])?;
                let done = match (&closure, inst_var) {
                    (RtValue::Closure(c), Some(var)) => is_done(lookup(&c.env, var)),
                    _ => false,
                };
                (v, done)
            }
            Handle::Record { env, func } => {
                let (env, func) = (env.clone(), func.clone());
                let v = self.interp.call_value(func, alloc::vec![env.clone(), arg])?;
                let RtValue::Record(fields) = &env else { unreachable!("checked at start") };
                let counter = fields.borrow().first().map(|(_, v)| v.clone());
                (v, is_done(counter))
            }
        };
        if done {
            self.finished = true;
            return Ok(Step::Finished(match value {
                RtValue::Null => None,
                v => Some(v.snapshot()),
            }));
        }
        Ok(Step::Yielded(value.snapshot()))
    }
}

fn is_done(counter: Option<RtValue<'_>>) -> bool {
    matches!(counter, Some(RtValue::Int(DONE_STATE)))
}

/// Instantiates `name` with `args` and resumes it once per resume value.
/// A non-null return value is recorded as the last item.
pub fn trace_generator(program: &Program, name: &str, args: &[Value], resumes: &[Value]) -> Result<YieldTrace, Error> {
    trace_generator_with_budget(program, name, args, resumes, DEFAULT_STEP_BUDGET)
}

pub fn trace_generator_with_budget(
    program: &Program,
    name: &str,
    args: &[Value],
    resumes: &[Value],
    budget: u64,
) -> Result<YieldTrace, Error> {
    let mut run = GeneratorRun::start(program, name, args, budget)?;
    let mut trace = YieldTrace::default();
    for v in resumes {
        match run.resume(v)? {
            Step::Yielded(v) => trace.items.push(v),
            Step::Finished(last) => {
                trace.items.extend(last);
                trace.terminated = true;
                break;
            }
        }
    }
    Ok(trace)
}

/// Executes a generator's control flow graph directly, without the
/// rewriter. All locals share one flat scope seeded with `bindings`.
/// `program` supplies the functions the body may call.
pub fn eval_cfg(
    program: &Program,
    cfg: &Cfg,
    bindings: &[(String, Value)],
    resumes: &[Value],
) -> Result<YieldTrace, Error> {
    let mut it = Interpreter::new(program, DEFAULT_STEP_BUDGET);
    let scope = Scope::root();
    for (name, v) in bindings {
        let v = it.import(v)?;
        scope.borrow_mut().declare(name, v);
    }
    let mut trace = YieldTrace::default();
    let mut current = Some(cfg.entry);
    let mut receiver: Option<&str> = None;
    for (index, v) in resumes.iter().enumerate() {
        let Some(mut id) = current else { break };
        let attach = |e: Error| match e {
            Error::Runtime(inner) => Error::Runtime(RuntimeError { resumption: Some(index), ..inner }),
            other => other,
        };
        if let Some(name) = receiver.take() {
            let v = it.import(v)?;
            scope.borrow_mut().declare(name, v);
        }
        loop {
            let block = cfg.blocks.get(&id).ok_or_else(|| it.error(alloc::format!("missing block {id}")))?;
            let mut frames =
                alloc::vec![Frame { stmts: &block.stmts, pc: 0, scope: scope.clone(), kind: FrameKind::Block }];
            match it.run_frames(&mut frames).map_err(attach)? {
                Flow::FellOff => {}
                _ => return Err(it.error(alloc::format!("block {id} holds control flow"))),
            }
            match &block.terminator {
                Terminator::Goto(t) => id = *t,
                Terminator::Branch { cond, then_to, else_to } => match it.eval(cond, &scope).map_err(attach)? {
                    RtValue::Bool(b) => id = if b { *then_to } else { *else_to },
                    other => {
                        return Err(attach(it.error(alloc::format!("condition must be bool, found {}", other.type_name()))))
                    }
                },
                Terminator::YieldTo { value, receiver: r, resume } => {
                    let v = it.eval(value, &scope).map_err(attach)?;
                    trace.items.push(v.snapshot());
                    receiver = r.as_deref();
                    current = Some(*resume);
                    break;
                }
                Terminator::Finish(value) => {
                    if let Some(e) = value {
                        let v = it.eval(e, &scope).map_err(attach)?;
                        if !matches!(v, RtValue::Null) {
                            trace.items.push(v.snapshot());
                        }
                    }
                    trace.terminated = true;
                    current = None;
                    break;
                }
            }
        }
    }
    Ok(trace)
}
