//! Static checks run after parsing.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{walk_expr, Block, Expr, FuncDecl, Pos, Program, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub pos: Pos,
    pub message: String,
}

impl ValidationError {
    fn new(pos: Pos, message: String) -> Self {
        ValidationError { pos, message }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pos.is_known() {
            write!(f, "validation error at {}: {}", self.pos, self.message)
        } else {
            write!(f, "validation error: {}", self.message)
        }
    }
}

impl core::error::Error for ValidationError {}

/// Checks program-level invariants:
///
/// * function names are unique and `main` exists as a zero-parameter plain function;
/// * parameter lists have no duplicates;
/// * `yield` only occurs directly in generator bodies;
/// * generator bodies contain no function literals and never redeclare a
///   name that is visible from an enclosing scope (every local must map to
///   a single slot once the body is flattened into a state machine).
pub fn validate(program: &Program) -> Result<(), ValidationError> {
    let mut seen = BTreeSet::new();
    for decl in &program.decls {
        if !seen.insert(decl.name.as_str()) {
            return Err(ValidationError::new(
                first_pos(&decl.body),
                alloc::format!("duplicate function `{}`", decl.name),
            ));
        }
    }

    match program.func(&program.entry) {
        None => {
            return Err(ValidationError::new(Pos::NONE, alloc::format!("missing entry function `{}`", program.entry)))
        }
        Some(entry) if entry.is_generator => {
            return Err(ValidationError::new(
                Pos::NONE,
                alloc::format!("entry function `{}` must not be a generator", entry.name),
            ))
        }
        Some(entry) if !entry.params.is_empty() => {
            return Err(ValidationError::new(
                Pos::NONE,
                alloc::format!("entry function `{}` must take no parameters", entry.name),
            ))
        }
        Some(_) => {}
    }

    for decl in &program.decls {
        check_decl(decl)?;
    }
    Ok(())
}

fn first_pos(block: &Block) -> Pos {
    block.stmts.first().map(|s| s.pos).unwrap_or(Pos::NONE)
}

fn check_params(params: &[String], pos: Pos, owner: &str) -> Result<(), ValidationError> {
    let mut seen = BTreeSet::new();
    for p in params {
        if !seen.insert(p.as_str()) {
            return Err(ValidationError::new(pos, alloc::format!("duplicate parameter `{p}` in `{owner}`")));
        }
    }
    Ok(())
}

fn check_decl(decl: &FuncDecl) -> Result<(), ValidationError> {
    check_params(&decl.params, first_pos(&decl.body), &decl.name)?;
    if decl.is_generator {
        let mut scopes: Vec<BTreeSet<&str>> = alloc::vec![decl.params.iter().map(String::as_str).collect()];
        check_generator_block(&decl.body, &mut scopes, &decl.name)
    } else {
        check_plain_block(&decl.body, &decl.name)
    }
}

/// Plain functions and function literals: no yields anywhere.
fn check_plain_block(block: &Block, owner: &str) -> Result<(), ValidationError> {
    for stmt in &block.stmts {
        if stmt.is_yield() {
            return Err(ValidationError::new(
                stmt.pos,
                alloc::format!("`yield` outside of a generator in `{owner}`"),
            ));
        }
        match &stmt.kind {
            StmtKind::If { then_block, else_block, .. } => {
                check_plain_block(then_block, owner)?;
                if let Some(b) = else_block {
                    check_plain_block(b, owner)?;
                }
            }
            StmtKind::While { body, .. } => check_plain_block(body, owner)?,
            _ => {}
        }
        check_lambdas(stmt, owner)?;
    }
    Ok(())
}

fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match &stmt.kind {
        StmtKind::Let(_, e)
        | StmtKind::Assign(_, e)
        | StmtKind::LetYield(_, e)
        | StmtKind::Yield(e)
        | StmtKind::Expr(e)
        | StmtKind::Print(e)
        | StmtKind::If { cond: e, .. }
        | StmtKind::While { cond: e, .. }
        | StmtKind::Return(Some(e)) => alloc::vec![e],
        StmtKind::FieldSet { record, value, .. } => alloc::vec![record, value],
        StmtKind::Return(None) => Vec::new(),
    }
}

fn check_lambdas(stmt: &Stmt, owner: &str) -> Result<(), ValidationError> {
    let mut result = Ok(());
    for e in stmt_exprs(stmt) {
        walk_expr(e, &mut |e| {
            if let Expr::Lambda(params, body) = e {
                if result.is_ok() {
                    result = check_params(params, stmt.pos, owner).and_then(|_| check_plain_block(body, owner));
                }
            }
        });
    }
    result
}

fn check_generator_block<'a>(
    block: &'a Block,
    scopes: &mut Vec<BTreeSet<&'a str>>,
    owner: &str,
) -> Result<(), ValidationError> {
    scopes.push(BTreeSet::new());
    for stmt in &block.stmts {
        for e in stmt_exprs(stmt) {
            let mut has_lambda = false;
            walk_expr(e, &mut |e| has_lambda |= matches!(e, Expr::Lambda(..)));
            if has_lambda {
                return Err(ValidationError::new(
                    stmt.pos,
                    alloc::format!("function literal inside generator `{owner}`"),
                ));
            }
        }
        match &stmt.kind {
            StmtKind::Let(name, _) | StmtKind::LetYield(name, _) => {
                let (current, outer) = scopes.split_last_mut().expect("scope stack is never empty");
                if outer.iter().any(|s| s.contains(name.as_str())) {
                    return Err(ValidationError::new(
                        stmt.pos,
                        alloc::format!("`{name}` shadows an outer binding in generator `{owner}`"),
                    ));
                }
                current.insert(name.as_str());
            }
            StmtKind::If { then_block, else_block, .. } => {
                check_generator_block(then_block, scopes, owner)?;
                if let Some(b) = else_block {
                    check_generator_block(b, scopes, owner)?;
                }
            }
            StmtKind::While { body, .. } => check_generator_block(body, scopes, owner)?,
            _ => {}
        }
    }
    scopes.pop();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::lex;
    use crate::parser::parse_unvalidated;

    fn check(src: &str) -> Result<(), ValidationError> {
        validate(&parse_unvalidated(&lex(src).unwrap()).unwrap())
    }

    #[test]
    fn accepts_generator_with_sibling_redeclarations() {
        check("fn* g(x) { if (x) { let t = 1 yield t } else { let t = 2 yield t } let u = 0 let u = 1 }\nfn main() {}")
            .unwrap();
    }

    #[test]
    fn rejects_duplicate_functions() {
        let err = check("fn main() {}\nfn main() {}").unwrap_err();
        assert!(err.message.contains("duplicate function"));
    }

    #[test]
    fn rejects_missing_or_bad_entry() {
        assert!(check("fn f() {}").unwrap_err().message.contains("missing entry"));
        assert!(check("fn* main() {}").unwrap_err().message.contains("generator"));
        assert!(check("fn main(x) {}").unwrap_err().message.contains("no parameters"));
    }

    #[test]
    fn rejects_duplicate_params() {
        assert!(check("fn f(a, a) {}\nfn main() {}").is_err());
        assert!(check("fn main() { let f = fn(a, a) { } }").is_err());
    }

    #[test]
    fn rejects_yield_in_function_literal() {
        let err = check("fn main() { let f = fn() { yield 1 } }").unwrap_err();
        assert!(err.message.contains("outside of a generator"));
    }

    #[test]
    fn rejects_shadowing_in_generator() {
        assert!(check("fn* g(n) { let n = 1 }\nfn main() {}").is_err());
        assert!(check("fn* g() { let a = 1 while (true) { let a = 2 } }\nfn main() {}").is_err());
        assert!(check("fn* g() { let a = yield 1 if (true) { let a = yield 2 } }\nfn main() {}").is_err());
    }

    #[test]
    fn plain_functions_may_shadow() {
        check("fn f(n) { let n = 1 while (false) { let n = 2 } }\nfn main() {}").unwrap();
    }

    #[test]
    fn rejects_lambda_in_generator() {
        assert!(check("fn* g() { let f = fn() { } yield f }\nfn main() {}").is_err());
    }
}
