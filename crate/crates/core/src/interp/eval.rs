use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;

use super::value::{assign, lookup, Closure, Frame, FrameKind, GenState, GenStatus, RtValue, Scope, ScopeRef, Value};
use super::RuntimeError;
use crate::ast::{BinOp, Block, Expr, FuncDecl, Pos, Program, Stmt, StmtKind, UnOp};
use crate::Error;

/// Nested calls each use host stack; deeper recursion is reported as an error.
pub const MAX_CALL_DEPTH: usize = 64;

/// How a statement sequence stopped.
pub(crate) enum Flow<'p> {
    Yield(RtValue<'p>, Option<&'p str>),
    Return(RtValue<'p>),
    FellOff,
}

/// Result of resuming a native generator.
pub(crate) enum Resumed<'p> {
    Yielded(RtValue<'p>),
    /// Finished during this resumption with the returned value.
    Returned(RtValue<'p>),
    /// Was already finished.
    Exhausted,
}

pub(crate) struct Interpreter<'p> {
    funcs: BTreeMap<&'p str, &'p FuncDecl>,
    pub(crate) output: Vec<Value>,
    steps: u64,
    step_limit: u64,
    depth: usize,
    pos: Pos,
}

impl<'p> Interpreter<'p> {
    pub(crate) fn new(program: &'p Program, step_limit: u64) -> Self {
        Interpreter {
            funcs: program.decls.iter().map(|d| (d.name.as_str(), d)).collect(),
            output: Vec::new(),
            steps: 0,
            step_limit,
            depth: 0,
            pos: Pos::NONE,
        }
    }

    pub(crate) fn func(&self, name: &str) -> Option<&'p FuncDecl> {
        self.funcs.get(name).copied()
    }

    pub(crate) fn error(&self, message: String) -> Error {
        Error::Runtime(RuntimeError { message, pos: self.pos, resumption: None })
    }

    fn tick(&mut self) -> Result<(), Error> {
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(Error::BudgetExceeded { limit: self.step_limit });
        }
        Ok(())
    }

    /// Converts an externally supplied value. Closures and generators
    /// cannot be passed in from outside.
    pub(crate) fn import(&self, value: &Value) -> Result<RtValue<'p>, Error> {
        Ok(match value {
            Value::Int(v) => RtValue::Int(*v),
            Value::Bool(b) => RtValue::Bool(*b),
            Value::Null => RtValue::Null,
            Value::FuncRef(name) => match self.funcs.get_key_value(name.as_str()) {
                Some((k, _)) => RtValue::FuncRef(k),
                None => return Err(self.error(alloc::format!("unknown function `{name}`"))),
            },
            Value::Record(fields) => {
                let mut out = Vec::new();
                for (n, v) in fields {
                    out.push((n.clone(), self.import(v)?));
                }
                RtValue::Record(Rc::new(RefCell::new(out)))
            }
            Value::Closure | Value::Generator => {
                return Err(self.error(String::from("closures and generators cannot be passed in from outside")))
            }
        })
    }

    // ---- calls ------------------------------------------------------------

    /// Calls any callable value: a function reference (which instantiates
    /// generators without running them) or a closure.
    pub(crate) fn call_value(&mut self, callee: RtValue<'p>, args: Vec<RtValue<'p>>) -> Result<RtValue<'p>, Error> {
        match callee {
            RtValue::FuncRef(name) => {
                let decl = self.func(name).ok_or_else(|| self.error(alloc::format!("unknown function `{name}`")))?;
                self.call_decl(decl, args)
            }
            RtValue::Closure(c) => {
                self.check_arity("closure", c.params.len(), args.len())?;
                let scope = Scope::child(&c.env);
                bind_params(&scope, c.params, args);
                self.run_body(c.body, scope)
            }
            other => Err(self.error(alloc::format!("cannot call a {}", other.type_name()))),
        }
    }

    pub(crate) fn call_decl(&mut self, decl: &'p FuncDecl, args: Vec<RtValue<'p>>) -> Result<RtValue<'p>, Error> {
        self.check_arity(&decl.name, decl.params.len(), args.len())?;
        if decl.is_generator {
            return Ok(RtValue::Gen(Rc::new(RefCell::new(GenState { decl, status: GenStatus::NotStarted(args) }))));
        }
        let scope = Scope::root();
        bind_params(&scope, &decl.params, args);
        self.run_body(&decl.body, scope)
    }

    fn check_arity(&self, what: &str, expected: usize, got: usize) -> Result<(), Error> {
        if expected != got {
            return Err(self.error(alloc::format!("`{what}` expects {expected} argument(s), got {got}")));
        }
        Ok(())
    }

    fn run_body(&mut self, body: &'p Block, scope: ScopeRef<'p>) -> Result<RtValue<'p>, Error> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(self.error(alloc::format!("call depth exceeded {MAX_CALL_DEPTH}")));
        }
        self.depth += 1;
        let saved = self.pos;
        let mut frames = alloc::vec![Frame { stmts: &body.stmts, pc: 0, scope, kind: FrameKind::Block }];
        let flow = self.run_frames(&mut frames);
        self.depth -= 1;
        let value = match flow? {
            Flow::Return(v) => v,
            Flow::FellOff => RtValue::Null,
            Flow::Yield(..) => return Err(self.error(String::from("yield outside of a generator"))),
        };
        self.pos = saved;
        Ok(value)
    }

    /// `next(g, v)`: resumes generators, applies closures to one argument.
    pub(crate) fn next_value(&mut self, target: RtValue<'p>, arg: RtValue<'p>) -> Result<RtValue<'p>, Error> {
        match target {
            RtValue::Gen(g) => Ok(match self.resume(&g, arg)? {
                Resumed::Yielded(v) | Resumed::Returned(v) => v,
                Resumed::Exhausted => RtValue::Null,
            }),
            c @ RtValue::Closure(_) => self.call_value(c, alloc::vec![arg]),
            other => Err(self.error(alloc::format!("next on non-resumable {}", other.type_name()))),
        }
    }

    pub(crate) fn resume(&mut self, gen: &Rc<RefCell<GenState<'p>>>, arg: RtValue<'p>) -> Result<Resumed<'p>, Error> {
        let (decl, status) = {
            let mut g = gen.borrow_mut();
            let status = core::mem::replace(&mut g.status, GenStatus::Running);
            (g.decl, status)
        };
        let mut frames = match status {
            GenStatus::Running => {
                return Err(self.error(alloc::format!("generator `{}` resumed while running", decl.name)))
            }
            GenStatus::Finished => {
                gen.borrow_mut().status = GenStatus::Finished;
                return Ok(Resumed::Exhausted);
            }
            GenStatus::NotStarted(args) => {
                // The value passed to the first resumption has no receiver.
                let scope = Scope::root();
                bind_params(&scope, &decl.params, args);
                alloc::vec![Frame { stmts: &decl.body.stmts, pc: 0, scope, kind: FrameKind::Block }]
            }
            GenStatus::Suspended { frames, receiver } => {
                if let Some(name) = receiver {
                    let top = frames.last().expect("suspended generators keep their frame");
                    top.scope.borrow_mut().declare(name, arg);
                }
                frames
            }
        };

        if self.depth >= MAX_CALL_DEPTH {
            gen.borrow_mut().status = GenStatus::Finished;
            return Err(self.error(alloc::format!("call depth exceeded {MAX_CALL_DEPTH}")));
        }
        self.depth += 1;
        let saved = self.pos;
        let flow = self.run_frames(&mut frames);
        self.depth -= 1;
        let (status, result) = match flow {
            Err(e) => (GenStatus::Finished, Err(e)),
            Ok(Flow::Yield(v, receiver)) => (GenStatus::Suspended { frames, receiver }, Ok(Resumed::Yielded(v))),
            Ok(Flow::Return(v)) => (GenStatus::Finished, Ok(Resumed::Returned(v))),
            Ok(Flow::FellOff) => (GenStatus::Finished, Ok(Resumed::Returned(RtValue::Null))),
        };
        gen.borrow_mut().status = status;
        if result.is_ok() {
            self.pos = saved;
        }
        result
    }

    // ---- statements -------------------------------------------------------

    /// Runs the explicit frame stack until a yield or return, or until the bottom
    /// frame completes. On yield the stack is left intact for resumption.
    pub(crate) fn run_frames(&mut self, frames: &mut Vec<Frame<'p>>) -> Result<Flow<'p>, Error> {
        loop {
            let Some(frame) = frames.last_mut() else { return Ok(Flow::FellOff) };
            if frame.pc >= frame.stmts.len() {
                if let FrameKind::Loop { cond, outer } = &frame.kind {
                    let (cond, outer) = (*cond, outer.clone());
                    if self.condition(cond, &outer)? {
                        let frame = frames.last_mut().expect("frame still on stack");
                        frame.pc = 0;
                        frame.scope = Scope::child(&outer);
                        continue;
                    }
                }
                frames.pop();
                continue;
            }
            let stmt: &'p Stmt = &frame.stmts[frame.pc];
            frame.pc += 1;
            let scope = frame.scope.clone();
            self.tick()?;
            if stmt.pos.is_known() {
                self.pos = stmt.pos;
            }
            match &stmt.kind {
                StmtKind::Let(name, e) => {
                    let v = self.eval(e, &scope)?;
                    scope.borrow_mut().declare(name, v);
                }
                StmtKind::Assign(name, e) => {
                    let v = self.eval(e, &scope)?;
                    if !assign(&scope, name, v) {
                        return Err(self.error(alloc::format!("assignment to undeclared `{name}`")));
                    }
                }
                StmtKind::FieldSet { record, field, value } => {
                    let target = self.eval(record, &scope)?;
                    let v = self.eval(value, &scope)?;
                    let RtValue::Record(fields) = target else {
                        return Err(self.error(alloc::format!("field assignment on a {}", target.type_name())));
                    };
                    let mut fields = fields.borrow_mut();
                    match fields.iter_mut().find(|(n, _)| n == field) {
                        Some(slot) => slot.1 = v,
                        None => return Err(self.error(alloc::format!("record has no field `{field}`"))),
                    }
                }
                StmtKind::LetYield(name, e) => {
                    let v = self.eval(e, &scope)?;
                    return Ok(Flow::Yield(v, Some(name.as_str())));
                }
                StmtKind::Yield(e) => {
                    let v = self.eval(e, &scope)?;
                    return Ok(Flow::Yield(v, None));
                }
                StmtKind::If { cond, then_block, else_block } => {
                    let branch = if self.condition(cond, &scope)? { Some(then_block) } else { else_block.as_ref() };
                    if let Some(b) = branch {
                        frames.push(Frame { stmts: &b.stmts, pc: 0, scope: Scope::child(&scope), kind: FrameKind::Block });
                    }
                }
                StmtKind::While { cond, body } => {
                    if self.condition(cond, &scope)? {
                        frames.push(Frame {
                            stmts: &body.stmts,
                            pc: 0,
                            scope: Scope::child(&scope),
                            kind: FrameKind::Loop { cond, outer: scope },
                        });
                    }
                }
                StmtKind::Return(e) => {
                    let v = match e {
                        Some(e) => self.eval(e, &scope)?,
                        None => RtValue::Null,
                    };
                    return Ok(Flow::Return(v));
                }
                StmtKind::Expr(e) => {
                    self.eval(e, &scope)?;
                }
                StmtKind::Print(e) => {
                    let v = self.eval(e, &scope)?;
                    self.output.push(v.snapshot());
                }
            }
        }
    }

    fn condition(&mut self, cond: &'p Expr, scope: &ScopeRef<'p>) -> Result<bool, Error> {
        match self.eval(cond, scope)? {
            RtValue::Bool(b) => Ok(b),
            other => Err(self.error(alloc::format!("condition must be bool, found {}", other.type_name()))),
        }
    }

    // ---- expressions ------------------------------------------------------

    pub(crate) fn eval(&mut self, expr: &'p Expr, scope: &ScopeRef<'p>) -> Result<RtValue<'p>, Error> {
        self.tick()?;
        Ok(match expr {
            Expr::Int(v) => RtValue::Int(*v),
            Expr::Bool(b) => RtValue::Bool(*b),
            Expr::Null => RtValue::Null,
            Expr::Var(name) => match lookup(scope, name) {
                Some(v) => v,
                None => match self.funcs.get_key_value(name.as_str()) {
                    Some((k, _)) => RtValue::FuncRef(k),
                    None => return Err(self.error(alloc::format!("unbound name `{name}`"))),
                },
            },
            Expr::FuncRef(name) => match self.funcs.get_key_value(name.as_str()) {
                Some((k, _)) => RtValue::FuncRef(k),
                None => return Err(self.error(alloc::format!("unknown function `{name}`"))),
            },
            Expr::Unary(op, operand) => {
                let v = self.eval(operand, scope)?;
                match (op, v) {
                    (UnOp::Neg, RtValue::Int(i)) => RtValue::Int(i.wrapping_neg()),
                    (UnOp::Not, RtValue::Bool(b)) => RtValue::Bool(!b),
                    (op, v) => {
                        return Err(self.error(alloc::format!("cannot apply `{}` to {}", op.symbol(), v.type_name())))
                    }
                }
            }
            Expr::Binary(op @ (BinOp::And | BinOp::Or), lhs, rhs) => {
                let l = self.eval(lhs, scope)?;
                let RtValue::Bool(l) = l else {
                    return Err(self.error(alloc::format!("`{}` needs bool operands, found {}", op.symbol(), l.type_name())));
                };
                if (*op == BinOp::And && !l) || (*op == BinOp::Or && l) {
                    return Ok(RtValue::Bool(l));
                }
                let r = self.eval(rhs, scope)?;
                let RtValue::Bool(r) = r else {
                    return Err(self.error(alloc::format!("`{}` needs bool operands, found {}", op.symbol(), r.type_name())));
                };
                RtValue::Bool(r)
            }
            Expr::Binary(op, lhs, rhs) => {
                let l = self.eval(lhs, scope)?;
                let r = self.eval(rhs, scope)?;
                self.binary(*op, l, r)?
            }
            Expr::Call(callee, args) => {
                let callee = self.eval(callee, scope)?;
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, scope)?);
                }
                self.call_value(callee, values)?
            }
            Expr::Next(target, arg) => {
                let target = self.eval(target, scope)?;
                let arg = match arg {
                    Some(a) => self.eval(a, scope)?,
                    None => RtValue::Null,
                };
                self.next_value(target, arg)?
            }
            Expr::Field(record, name) => {
                let r = self.eval(record, scope)?;
                let RtValue::Record(fields) = &r else {
                    return Err(self.error(alloc::format!("field access `.{name}` on a {}", r.type_name())));
                };
                let found = fields.borrow().iter().find(|(n, _)| n == name).map(|(_, v)| v.clone());
                match found {
                    Some(v) => v,
                    None => return Err(self.error(alloc::format!("record has no field `{name}`"))),
                }
            }
            Expr::Record(fields) => {
                let mut out: Vec<(String, RtValue<'p>)> = Vec::with_capacity(fields.len());
                for (name, e) in fields {
                    let v = self.eval(e, scope)?;
                    match out.iter_mut().find(|(n, _)| n == name) {
                        Some(slot) => slot.1 = v,
                        None => out.push((name.clone(), v)),
                    }
                }
                RtValue::Record(Rc::new(RefCell::new(out)))
            }
            Expr::Lambda(params, body) => RtValue::Closure(Rc::new(Closure { params, body, env: scope.clone() })),
        })
    }

    fn binary(&self, op: BinOp, l: RtValue<'p>, r: RtValue<'p>) -> Result<RtValue<'p>, Error> {
        match op {
            BinOp::Eq => return Ok(RtValue::Bool(l.same(&r))),
            BinOp::Ne => return Ok(RtValue::Bool(!l.same(&r))),
            _ => {}
        }
        let (RtValue::Int(a), RtValue::Int(b)) = (&l, &r) else {
            return Err(self.error(alloc::format!(
                "`{}` needs int operands, found {} and {}",
                op.symbol(),
                l.type_name(),
                r.type_name()
            )));
        };
        let (a, b) = (*a, *b);
        Ok(match op {
            BinOp::Add => RtValue::Int(a.wrapping_add(b)),
            BinOp::Sub => RtValue::Int(a.wrapping_sub(b)),
            BinOp::Mul => RtValue::Int(a.wrapping_mul(b)),
            BinOp::Div | BinOp::Rem if b == 0 => return Err(self.error(String::from("division by zero"))),
            BinOp::Div => RtValue::Int(a.wrapping_div(b)),
            BinOp::Rem => RtValue::Int(a.wrapping_rem(b)),
            BinOp::Lt => RtValue::Bool(a < b),
            BinOp::Le => RtValue::Bool(a <= b),
            BinOp::Gt => RtValue::Bool(a > b),
            BinOp::Ge => RtValue::Bool(a >= b),
            BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!("handled above"),
        })
    }
}

pub(crate) fn bind_params<'p>(scope: &ScopeRef<'p>, params: &'p [String], args: Vec<RtValue<'p>>) {
    let mut s = scope.borrow_mut();
    for (p, v) in params.iter().zip(args) {
        s.declare(p, v);
    }
}
