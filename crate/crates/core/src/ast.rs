//! Abstract syntax of the mini-language.
//!
//! The same tree describes source programs (which may declare generators)
//! and the output of the lowering passes (closures, records, function
//! references and field assignment).

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Source position of a statement. Synthesized statements carry `Pos::NONE`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const NONE: Pos = Pos { line: 0, col: 0 };

    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }

    pub fn is_known(self) -> bool {
        self.line != 0
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub decls: Vec<FuncDecl>,
    /// Name of the function run by the interpreter. Always `main` for parsed programs.
    pub entry: String,
}

impl Program {
    pub fn new(decls: Vec<FuncDecl>) -> Self {
        Program { decls, entry: String::from(ENTRY_NAME) }
    }

    pub fn func(&self, name: &str) -> Option<&FuncDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn generators(&self) -> impl Iterator<Item = &FuncDecl> {
        self.decls.iter().filter(|d| d.is_generator)
    }

    pub fn has_generators(&self) -> bool {
        self.decls.iter().any(|d| d.is_generator)
    }
}

pub const ENTRY_NAME: &str = "main";

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDecl {
    pub name: String,
    pub params: Vec<String>,
    pub is_generator: bool,
    pub body: Block,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts }
    }
}

/// A statement with the position it was parsed from.
///
/// Equality ignores the position so that re-parsed and synthesized trees
/// compare structurally.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { kind, pos: Pos::NONE }
    }

    pub fn at(kind: StmtKind, pos: Pos) -> Self {
        Stmt { kind, pos }
    }

    /// True for `yield e` and `let x = yield e`.
    pub fn is_yield(&self) -> bool {
        matches!(self.kind, StmtKind::LetYield(..) | StmtKind::Yield(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let(String, Expr),
    Assign(String, Expr),
    /// `record.field = value`; produced by defunctionalization.
    FieldSet { record: Expr, field: String, value: Expr },
    /// `let x = yield e`
    LetYield(String, Expr),
    /// `yield e`
    Yield(Expr),
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    Return(Option<Expr>),
    Expr(Expr),
    Print(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter. All binary operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Null,
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    /// `next(g)` or `next(g, v)`: the only way to resume a generator.
    Next(Box<Expr>, Option<Box<Expr>>),
    Field(Box<Expr>, String),
    Record(Vec<(String, Expr)>),
    /// `&name`
    FuncRef(String),
    /// Anonymous function literal `fn(params) { ... }`.
    Lambda(Vec<String>, Block),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn field(record: Expr, name: impl Into<String>) -> Expr {
        Expr::Field(Box::new(record), name.into())
    }

    pub fn call(callee: Expr, args: Vec<Expr>) -> Expr {
        Expr::Call(Box::new(callee), args)
    }
}

/// Depth-first visitor over every expression reachable from a block,
/// including expressions nested in function literals.
pub fn walk_block_exprs<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Expr)) {
    for stmt in &block.stmts {
        walk_stmt_exprs(stmt, f);
    }
}

pub fn walk_stmt_exprs<'a>(stmt: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    match &stmt.kind {
        StmtKind::Let(_, e)
        | StmtKind::Assign(_, e)
        | StmtKind::LetYield(_, e)
        | StmtKind::Yield(e)
        | StmtKind::Expr(e)
        | StmtKind::Print(e) => walk_expr(e, f),
        StmtKind::FieldSet { record, value, .. } => {
            walk_expr(record, f);
            walk_expr(value, f);
        }
        StmtKind::If { cond, then_block, else_block } => {
            walk_expr(cond, f);
            walk_block_exprs(then_block, f);
            if let Some(b) = else_block {
                walk_block_exprs(b, f);
            }
        }
        StmtKind::While { cond, body } => {
            walk_expr(cond, f);
            walk_block_exprs(body, f);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(e, f);
            }
        }
    }
}

pub fn walk_expr<'a>(expr: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(expr);
    match expr {
        Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::Var(_) | Expr::FuncRef(_) => {}
        Expr::Binary(_, l, r) => {
            walk_expr(l, f);
            walk_expr(r, f);
        }
        Expr::Unary(_, e) | Expr::Field(e, _) => walk_expr(e, f),
        Expr::Call(callee, args) => {
            walk_expr(callee, f);
            for a in args {
                walk_expr(a, f);
            }
        }
        Expr::Next(g, v) => {
            walk_expr(g, f);
            if let Some(v) = v {
                walk_expr(v, f);
            }
        }
        Expr::Record(fields) => {
            for (_, e) in fields {
                walk_expr(e, f);
            }
        }
        Expr::Lambda(_, body) => walk_block_exprs(body, f),
    }
}

/// Visits every statement in a block, recursing into nested blocks and
/// function literal bodies.
pub fn walk_stmts<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
    for stmt in &block.stmts {
        f(stmt);
        match &stmt.kind {
            StmtKind::If { then_block, else_block, .. } => {
                walk_stmts(then_block, f);
                if let Some(b) = else_block {
                    walk_stmts(b, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
        walk_stmt_exprs_shallow_lambdas(stmt, f);
    }
}

fn walk_stmt_exprs_shallow_lambdas<'a>(stmt: &'a Stmt, f: &mut dyn FnMut(&'a Stmt)) {
    // Lambda bodies hang off expressions; only the statement's own
    // expressions are searched here, nested blocks are handled by the caller.
    let mut lambdas: Vec<&'a Block> = Vec::new();
    let mut collect = |e: &'a Expr| {
        if let Expr::Lambda(_, body) = e {
            lambdas.push(body);
        }
    };
    match &stmt.kind {
        StmtKind::Let(_, e)
        | StmtKind::Assign(_, e)
        | StmtKind::LetYield(_, e)
        | StmtKind::Yield(e)
        | StmtKind::Expr(e)
        | StmtKind::Print(e)
        | StmtKind::If { cond: e, .. }
        | StmtKind::While { cond: e, .. } => walk_expr_no_lambda_body(e, &mut collect),
        StmtKind::FieldSet { record, value, .. } => {
            walk_expr_no_lambda_body(record, &mut collect);
            walk_expr_no_lambda_body(value, &mut collect);
        }
        StmtKind::Return(Some(e)) => walk_expr_no_lambda_body(e, &mut collect),
        StmtKind::Return(None) => {}
    }
    for body in lambdas {
        walk_stmts(body, f);
    }
}

fn walk_expr_no_lambda_body<'a>(expr: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(expr);
    match expr {
        Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::Var(_) | Expr::FuncRef(_) => {}
        Expr::Lambda(..) => {}
        Expr::Binary(_, l, r) => {
            walk_expr_no_lambda_body(l, f);
            walk_expr_no_lambda_body(r, f);
        }
        Expr::Unary(_, e) | Expr::Field(e, _) => walk_expr_no_lambda_body(e, f),
        Expr::Call(callee, args) => {
            walk_expr_no_lambda_body(callee, f);
            for a in args {
                walk_expr_no_lambda_body(a, f);
            }
        }
        Expr::Next(g, v) => {
            walk_expr_no_lambda_body(g, f);
            if let Some(v) = v {
                walk_expr_no_lambda_body(v, f);
            }
        }
        Expr::Record(fields) => {
            for (_, e) in fields {
                walk_expr_no_lambda_body(e, f);
            }
        }
    }
}

/// Every identifier spelled anywhere in the program: function names,
/// parameters, locals, variable uses, record fields and function references.
pub fn all_identifiers(program: &Program) -> alloc::collections::BTreeSet<String> {
    let mut names = alloc::collections::BTreeSet::new();
    for decl in &program.decls {
        decl_identifiers(decl, &mut names);
    }
    names
}

/// Adds every identifier spelled in `decl` to `names`.
pub fn decl_identifiers(decl: &FuncDecl, names: &mut alloc::collections::BTreeSet<String>) {
    names.insert(decl.name.clone());
    names.extend(decl.params.iter().cloned());
    walk_stmts(&decl.body, &mut |s| match &s.kind {
        StmtKind::Let(n, _) | StmtKind::Assign(n, _) | StmtKind::LetYield(n, _) => {
            names.insert(n.clone());
        }
        StmtKind::FieldSet { field, .. } => {
            names.insert(field.clone());
        }
        _ => {}
    });
    walk_block_exprs(&decl.body, &mut |e| match e {
        Expr::Var(n) | Expr::FuncRef(n) | Expr::Field(_, n) => {
            names.insert(n.clone());
        }
        Expr::Record(fields) => names.extend(fields.iter().map(|(n, _)| n.clone())),
        Expr::Lambda(params, _) => names.extend(params.iter().cloned()),
        _ => {}
    });
}
