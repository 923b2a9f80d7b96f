//! Canonical pretty-printer.
//!
//! Two-space indentation, one statement per line, a blank line between
//! declarations. Parentheses are emitted only where precedence requires them.

use alloc::string::String;
use core::fmt::Write;

use crate::ast::{Block, Expr, FuncDecl, Program, Stmt, StmtKind};

const POSTFIX_PREC: u8 = 8;
const UNARY_PREC: u8 = 7;

pub fn print_source(program: &Program) -> String {
    let mut out = String::new();
    for (i, decl) in program.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_decl(&mut out, decl);
    }
    out
}

pub fn print_decl(out: &mut String, decl: &FuncDecl) {
    out.push_str("fn");
    if decl.is_generator {
        out.push('*');
    }
    out.push(' ');
    out.push_str(&decl.name);
    push_params(out, &decl.params);
    out.push(' ');
    print_block(out, &decl.body, 0);
    out.push('\n');
}

fn push_params(out: &mut String, params: &[String]) {
    out.push('(');
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(p);
    }
    out.push(')');
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Writes `{`, the statements at `level + 1`, and `}` at `level`, without a trailing newline.
fn print_block(out: &mut String, block: &Block, level: usize) {
    out.push_str("{\n");
    for stmt in &block.stmts {
        indent(out, level + 1);
        print_stmt(out, stmt, level + 1);
        out.push('\n');
    }
    indent(out, level);
    out.push('}');
}

/// Renders one statement without indentation or trailing newline.
pub fn print_stmt_line(out: &mut String, stmt: &Stmt) {
    print_stmt(out, stmt, 0)
}

fn print_stmt(out: &mut String, stmt: &Stmt, level: usize) {
    match &stmt.kind {
        StmtKind::Let(name, e) => {
            let _ = write!(out, "let {name} = ");
            print_expr(out, e, 0, level);
        }
        StmtKind::Assign(name, e) => {
            let _ = write!(out, "{name} = ");
            print_expr(out, e, 0, level);
        }
        StmtKind::FieldSet { record, field, value } => {
            print_expr(out, record, POSTFIX_PREC, level);
            let _ = write!(out, ".{field} = ");
            print_expr(out, value, 0, level);
        }
        StmtKind::LetYield(name, e) => {
            let _ = write!(out, "let {name} = yield ");
            print_expr(out, e, 0, level);
        }
        StmtKind::Yield(e) => {
            out.push_str("yield ");
            print_expr(out, e, 0, level);
        }
        StmtKind::If { .. } => print_if(out, stmt, level),
        StmtKind::While { cond, body } => {
            out.push_str("while (");
            print_expr(out, cond, 0, level);
            out.push_str(") ");
            print_block(out, body, level);
        }
        StmtKind::Return(None) => out.push_str("return"),
        StmtKind::Return(Some(e)) => {
            out.push_str("return ");
            print_expr(out, e, 0, level);
        }
        StmtKind::Expr(e) => print_expr(out, e, 0, level),
        StmtKind::Print(e) => {
            out.push_str("print(");
            print_expr(out, e, 0, level);
            out.push(')');
        }
    }
}

fn print_if(out: &mut String, stmt: &Stmt, level: usize) {
    let StmtKind::If { cond, then_block, else_block } = &stmt.kind else { unreachable!() };
    out.push_str("if (");
    print_expr(out, cond, 0, level);
    out.push_str(") ");
    print_block(out, then_block, level);
    if let Some(els) = else_block {
        out.push_str(" else ");
        match els.stmts.as_slice() {
            [only] if matches!(only.kind, StmtKind::If { .. }) => print_if(out, only, level),
            _ => print_block(out, els, level),
        }
    }
}

pub fn print_expr_string(expr: &Expr) -> String {
    let mut out = String::new();
    print_expr(&mut out, expr, 0, 0);
    out
}

fn print_expr(out: &mut String, expr: &Expr, min_prec: u8, level: usize) {
    match expr {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Null => out.push_str("null"),
        Expr::Var(name) => out.push_str(name),
        Expr::FuncRef(name) => {
            out.push('&');
            out.push_str(name);
        }
        Expr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let wrap = prec < min_prec;
            if wrap {
                out.push('(');
            }
            print_expr(out, lhs, prec, level);
            let _ = write!(out, " {} ", op.symbol());
            print_expr(out, rhs, prec + 1, level);
            if wrap {
                out.push(')');
            }
        }
        Expr::Unary(op, operand) => {
            let wrap = UNARY_PREC < min_prec;
            if wrap {
                out.push('(');
            }
            out.push_str(op.symbol());
            print_expr(out, operand, UNARY_PREC, level);
            if wrap {
                out.push(')');
            }
        }
        Expr::Call(callee, args) => {
            print_expr(out, callee, POSTFIX_PREC, level);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, a, 0, level);
            }
            out.push(')');
        }
        Expr::Next(g, v) => {
            out.push_str("next(");
            print_expr(out, g, 0, level);
            if let Some(v) = v {
                out.push_str(", ");
                print_expr(out, v, 0, level);
            }
            out.push(')');
        }
        Expr::Field(record, name) => {
            print_expr(out, record, POSTFIX_PREC, level);
            out.push('.');
            out.push_str(name);
        }
        Expr::Record(fields) => {
            out.push('{');
            for (i, (name, e)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{name}: ");
                print_expr(out, e, 0, level);
            }
            out.push('}');
        }
        Expr::Lambda(params, body) => {
            let wrap = min_prec >= POSTFIX_PREC;
            if wrap {
                out.push('(');
            }
            out.push_str("fn");
            push_params(out, params);
            out.push(' ');
            print_block(out, body, level);
            if wrap {
                out.push(')');
            }
        }
    }
}
