//! Closure elimination for lowered programs.
//!
//! Every state-machine factory `F` produced by [`crate::transform`] is split
//! into a lifted first-order function `F_fo(env, resume)` that runs the
//! dispatch loop against a mutable environment record, and a constructor
//! that returns `{env: {...}, fn: &F_fo}`. A single `apply(c, r)` calls
//! `c.fn(c.env, r)`, and every `next(g, v)` becomes `apply(g, v)`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{self, Block, Expr, FuncDecl, Program, Stmt, StmtKind};
use crate::transform::{match_machine, FreshNames};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefuncError {
    GeneratorPresent(String),
    /// A function literal that is not the body of a state-machine factory.
    UnexpectedClosure(String),
    /// The machine body reads a name that is neither captured nor global.
    FreeVariable { func: String, name: String },
}

impl fmt::Display for DefuncError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefuncError::GeneratorPresent(name) => {
                write!(f, "defunctionalization error: `{name}` is still a generator; lower it first")
            }
            DefuncError::UnexpectedClosure(name) => {
                write!(f, "defunctionalization error: `{name}` contains a function literal that is not a state machine")
            }
            DefuncError::FreeVariable { func, name } => {
                write!(f, "defunctionalization error: `{name}` is free in the state machine of `{func}`")
            }
        }
    }
}

impl core::error::Error for DefuncError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedClosure {
    /// Counter first, then parameters, then hoisted locals.
    pub env_fields: Vec<String>,
    pub lifted_fn: String,
    pub ctor_fn: String,
}

pub fn defunctionalize(program: &Program) -> Result<Program, DefuncError> {
    lift_closures(program).map(|(p, _)| p)
}

/// Defunctionalizes and reports what was lifted.
pub fn lift_closures(program: &Program) -> Result<(Program, Vec<LiftedClosure>), DefuncError> {
    if let Some(g) = program.generators().next() {
        return Err(DefuncError::GeneratorPresent(g.name.clone()));
    }
    let globals: BTreeSet<&str> = program.decls.iter().map(|d| d.name.as_str()).collect();
    let mut names = FreshNames::for_program(program);
    let has_machines = program.decls.iter().any(|d| match_machine(d).is_some());
    if !has_machines {
        if let Some(d) = program.decls.iter().find(|d| contains_lambda(&d.body)) {
            return Err(DefuncError::UnexpectedClosure(d.name.clone()));
        }
        return Ok((program.clone(), Vec::new()));
    }

    let apply = names.fresh("apply", "_d");
    let env_param = names.fresh("env", "_e");
    let mut decls = alloc::vec![apply_decl(&apply)];
    let mut lifted = Vec::new();

    for decl in &program.decls {
        let Some(shape) = match_machine(decl) else {
            if contains_lambda(&decl.body) {
                return Err(DefuncError::UnexpectedClosure(decl.name.clone()));
            }
            let mut decl = decl.clone();
            rewrite_block(&mut decl.body, &Captures::none(), &apply);
            decls.push(decl);
            continue;
        };
        if contains_lambda(shape.body) {
            return Err(DefuncError::UnexpectedClosure(decl.name.clone()));
        }

        let mut env_fields: Vec<String> = alloc::vec![String::from(shape.inst_var)];
        env_fields.extend(decl.params.iter().cloned());
        env_fields.extend(shape.hoisted.iter().map(|h| String::from(*h)));

        check_free_variables(decl, shape.body, &env_fields, shape.resume_param, &globals)?;

        let lifted_name = names.fresh(&alloc::format!("{}_fo", decl.name), "_n");
        let mut body = shape.body.clone();
        rewrite_block(&mut body, &Captures { env: &env_param, fields: &env_fields }, &apply);
        decls.push(FuncDecl {
            name: lifted_name.clone(),
            params: alloc::vec![env_param.clone(), String::from(shape.resume_param)],
            is_generator: false,
            body,
        });

        let mut env_record = Vec::new();
        env_record.push((String::from(shape.inst_var), Expr::Int(1)));
        for p in &decl.params {
            env_record.push((p.clone(), Expr::var(p.clone())));
        }
        for h in &shape.hoisted {
            env_record.push((String::from(*h), Expr::Null));
        }
        let closure = Expr::Record(alloc::vec![
            (String::from("env"), Expr::Record(env_record)),
            (String::from("fn"), Expr::FuncRef(lifted_name.clone())),
        ]);
        decls.push(FuncDecl {
            name: decl.name.clone(),
            params: decl.params.clone(),
            is_generator: false,
            body: Block::new(alloc::vec![Stmt::new(StmtKind::Return(Some(closure)))]),
        });
        lifted.push(LiftedClosure { env_fields, lifted_fn: lifted_name, ctor_fn: decl.name.clone() });
    }

    Ok((Program { decls, entry: program.entry.clone() }, lifted))
}

/// `fn apply(c, r) { return c.fn(c.env, r) }`
fn apply_decl(name: &str) -> FuncDecl {
    let c = || Expr::var("c");
    let call = Expr::call(Expr::field(c(), "fn"), alloc::vec![Expr::field(c(), "env"), Expr::var("r")]);
    FuncDecl {
        name: String::from(name),
        params: alloc::vec![String::from("c"), String::from("r")],
        is_generator: false,
        body: Block::new(alloc::vec![Stmt::new(StmtKind::Return(Some(call)))]),
    }
}

fn contains_lambda(block: &Block) -> bool {
    let mut found = false;
    ast::walk_block_exprs(block, &mut |e| found |= matches!(e, Expr::Lambda(..)));
    found
}

fn check_free_variables(
    decl: &FuncDecl,
    body: &Block,
    env_fields: &[String],
    resume_param: &str,
    globals: &BTreeSet<&str>,
) -> Result<(), DefuncError> {
    let mut locals: BTreeSet<&str> = BTreeSet::new();
    ast::walk_stmts(body, &mut |s| {
        if let StmtKind::Let(n, _) = &s.kind {
            locals.insert(n);
        }
    });
    let mut free = None;
    let mut check = |name: &str| {
        let bound = env_fields.iter().any(|f| f == name)
            || name == resume_param
            || locals.contains(name)
            || globals.contains(name);
        if !bound && free.is_none() {
            free = Some(String::from(name));
        }
    };
    ast::walk_block_exprs(body, &mut |e| {
        if let Expr::Var(n) = e {
            check(n);
        }
    });
    ast::walk_stmts(body, &mut |s| {
        if let StmtKind::Assign(n, _) = &s.kind {
            check(n);
        }
    });
    match free {
        Some(name) => Err(DefuncError::FreeVariable { func: decl.name.clone(), name }),
        None => Ok(()),
    }
}

struct Captures<'a> {
    env: &'a str,
    fields: &'a [String],
}

impl<'a> Captures<'a> {
    fn none() -> Self {
        Captures { env: "", fields: &[] }
    }

    fn captured(&self, name: &str) -> bool {
        self.fields.iter().any(|f| f == name)
    }
}

fn rewrite_block(block: &mut Block, caps: &Captures<'_>, apply: &str) {
    for stmt in &mut block.stmts {
        rewrite_stmt(stmt, caps, apply);
    }
}

fn rewrite_stmt(stmt: &mut Stmt, caps: &Captures<'_>, apply: &str) {
    match &mut stmt.kind {
        StmtKind::Assign(name, value) if caps.captured(name) => {
            rewrite_expr(value, caps, apply);
            let field = core::mem::take(name);
            let value = core::mem::replace(value, Expr::Null);
            stmt.kind = StmtKind::FieldSet { record: Expr::var(caps.env), field, value };
        }
        StmtKind::Let(_, e)
        | StmtKind::Assign(_, e)
        | StmtKind::LetYield(_, e)
        | StmtKind::Yield(e)
        | StmtKind::Expr(e)
        | StmtKind::Print(e) => rewrite_expr(e, caps, apply),
        StmtKind::FieldSet { record, value, .. } => {
            rewrite_expr(record, caps, apply);
            rewrite_expr(value, caps, apply);
        }
        StmtKind::If { cond, then_block, else_block } => {
            rewrite_expr(cond, caps, apply);
            rewrite_block(then_block, caps, apply);
            if let Some(b) = else_block {
                rewrite_block(b, caps, apply);
            }
        }
        StmtKind::While { cond, body } => {
            rewrite_expr(cond, caps, apply);
            rewrite_block(body, caps, apply);
        }
        StmtKind::Return(Some(e)) => rewrite_expr(e, caps, apply),
        StmtKind::Return(None) => {}
    }
}

fn rewrite_expr(expr: &mut Expr, caps: &Captures<'_>, apply: &str) {
    match expr {
        Expr::Var(name) if caps.captured(name) => {
            let field = core::mem::take(name);
            *expr = Expr::field(Expr::var(caps.env), field);
        }
        Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::Var(_) | Expr::FuncRef(_) => {}
        Expr::Binary(_, l, r) => {
            rewrite_expr(l, caps, apply);
            rewrite_expr(r, caps, apply);
        }
        Expr::Unary(_, e) | Expr::Field(e, _) => rewrite_expr(e, caps, apply),
        Expr::Call(callee, args) => {
            rewrite_expr(callee, caps, apply);
            for a in args {
                rewrite_expr(a, caps, apply);
            }
        }
        Expr::Next(g, v) => {
            let mut g = core::mem::replace(&mut **g, Expr::Null);
            let mut v = v.take().map(|b| *b).unwrap_or(Expr::Null);
            rewrite_expr(&mut g, caps, apply);
            rewrite_expr(&mut v, caps, apply);
            *expr = Expr::call(Expr::var(apply), alloc::vec![g, v]);
        }
        Expr::Record(fields) => {
            for (_, e) in fields {
                rewrite_expr(e, caps, apply);
            }
        }
        Expr::Lambda(_, body) => rewrite_block(body, caps, apply),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::lex;
    use crate::parser::parse;
    use crate::printer::print_source;
    use crate::transform::transform_program;

    fn lowered(src: &str) -> Program {
        transform_program(&parse(&lex(src).unwrap()).unwrap(), true).unwrap()
    }

    fn canonical(src: &str) -> String {
        print_source(&parse(&lex(src).unwrap()).unwrap())
    }

    const FIB: &str = "fn* fib() {\n  let a = 0\n  let b = 1\n  while (true) {\n    yield a\n    let c = a\n    a = b\n    b = c + a\n  }\n}\n\nfn main() {\n  let g = fib()\n  let i = 0\n  while (i < 10) {\n    print(next(g))\n    i = i + 1\n  }\n}\n";

    #[test]
    fn fibonacci_mirrors_record_and_lifted_function() {
        let (out, lifted) = lift_closures(&lowered(FIB)).unwrap();
        assert_eq!(
            lifted,
            alloc::vec![LiftedClosure {
                env_fields: alloc::vec!["inst".into(), "a".into(), "b".into(), "c".into()],
                lifted_fn: "fib_fo".into(),
                ctor_fn: "fib".into(),
            }]
        );
        let expected = canonical(
            "fn apply(c, r) {
  return c.fn(c.env, r)
}

fn fib_fo(env, resume) {
  while (true) {
    if (env.inst == 1) {
      env.a = 0
      env.b = 1
      env.inst = 2
    } else if (env.inst == 2) {
      env.inst = 3
      return env.a
    } else if (env.inst == 3) {
      env.c = env.a
      env.a = env.b
      env.b = env.c + env.a
      env.inst = 2
    } else {
      return null
    }
  }
}

fn fib() {
  return {env: {inst: 1, a: null, b: null, c: null}, fn: &fib_fo}
}

fn main() {
  let g = fib()
  let i = 0
  while (i < 10) {
    print(apply(g, null))
    i = i + 1
  }
}
",
        );
        assert_eq!(print_source(&out), expected);
    }

    #[test]
    fn receiving_coroutine_env_fields() {
        let src = "fn* f(n) {\n  let x = yield n\n  yield n + x\n}\nfn main() {\n  let g = f(5)\n  print(next(g))\n  print(next(g, 3))\n}\n";
        let (out, lifted) = lift_closures(&lowered(src)).unwrap();
        assert_eq!(lifted[0].env_fields, alloc::vec![String::from("inst"), "n".into(), "x".into()]);
        assert_eq!(lifted[0].lifted_fn, "f_fo");
        let text = print_source(&out);
        assert!(text.contains("return {env: {inst: 1, n: n, x: null}, fn: &f_fo}"), "{text}");
        assert!(text.contains("print(apply(g, 3))"), "{text}");
    }

    #[test]
    fn plain_program_is_unchanged() {
        let p = parse(&lex("fn helper(x) {\n  return x\n}\nfn main() {\n  print(helper(1))\n}").unwrap()).unwrap();
        assert_eq!(defunctionalize(&p).unwrap(), p);
    }

    #[test]
    fn rejects_generators_and_foreign_closures() {
        let p = parse(&lex("fn* g() {\n  yield 1\n}\nfn main() {\n}").unwrap()).unwrap();
        assert_eq!(defunctionalize(&p), Err(DefuncError::GeneratorPresent("g".into())));

        let p = parse(&lex("fn main() {\n  let f = fn(x) {\n    return x\n  }\n}").unwrap()).unwrap();
        assert_eq!(defunctionalize(&p), Err(DefuncError::UnexpectedClosure("main".into())));

        let mixed = alloc::format!("{FIB}\nfn other() {{\n  return fn(y) {{\n    return y\n  }}\n}}\n");
        let p = lowered(&mixed);
        assert_eq!(defunctionalize(&p), Err(DefuncError::UnexpectedClosure("other".into())));
    }

    #[test]
    fn output_has_no_function_literals() {
        let out = defunctionalize(&lowered(FIB)).unwrap();
        assert!(out.decls.iter().all(|d| !contains_lambda(&d.body)));
    }

    #[test]
    fn names_avoid_user_functions() {
        let src = "fn* g() {\n  yield 1\n}\nfn apply(x) {\n  return x\n}\nfn g_fo() {\n  return 0\n}\nfn main() {\n}\n";
        let (out, lifted) = lift_closures(&lowered(src)).unwrap();
        assert_eq!(lifted[0].lifted_fn, "g_fo_n");
        assert_eq!(out.decls[0].name, "apply_d");
    }
}
