//! Lowering of generators into closure-based state machines.
//!
//! A generator `fn* g(p...) { body }` becomes a plain function that
//! initialises an instruction counter and one slot per local, then returns a
//! one-argument function literal. That function loops over an if/else chain
//! keyed on the counter; each arm runs one basic block of the generator's
//! control flow graph and either sets the next state and loops, or sets the
//! next state and returns the yielded value. State `0` is the exhausted sink.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{self, BinOp, Block, Expr, FuncDecl, Program, Stmt, StmtKind};
use crate::cfg::{build_cfg, merge_blocks, BlockId, Cfg, Terminator};

/// The exhausted state; every resumption in it returns `null`.
pub const DONE_STATE: i64 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformError {
    NotAGenerator(String),
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::NotAGenerator(name) => write!(f, "transform error: `{name}` is not a generator"),
        }
    }
}

impl core::error::Error for TransformError {}

/// Allocates identifiers that collide with nothing already in use.
///
/// A taken `base` gets `suffix` appended, then a counter: `inst`, `inst_i`,
/// `inst_i1`, `inst_i2`, ...
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    used: BTreeSet<String>,
}

impl FreshNames {
    pub fn new(used: BTreeSet<String>) -> Self {
        FreshNames { used }
    }

    pub fn for_program(program: &Program) -> Self {
        FreshNames::new(ast::all_identifiers(program))
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(String::from(name));
    }

    pub fn fresh(&mut self, base: &str, suffix: &str) -> String {
        let mut candidate = String::from(base);
        if self.used.contains(&candidate) {
            candidate = alloc::format!("{base}{suffix}");
            let mut n = 1u32;
            while self.used.contains(&candidate) {
                candidate = alloc::format!("{base}{suffix}{n}");
                n += 1;
            }
        }
        self.used.insert(candidate.clone());
        candidate
    }
}

/// How one generator maps onto its state machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMachinePlan {
    pub func: String,
    /// Block id to instruction number. Exit blocks map to [`DONE_STATE`].
    pub states: BTreeMap<BlockId, i64>,
    /// Every local declared in the body, in order of first declaration.
    pub hoisted: Vec<String>,
    pub params: Vec<String>,
    pub resume_param: String,
    pub inst_var: String,
    /// Resume blocks that bind the resume value, with the bound name.
    pub receivers: BTreeMap<BlockId, String>,
}

impl StateMachinePlan {
    pub fn build(func: &FuncDecl, cfg: &Cfg, names: &mut FreshNames) -> StateMachinePlan {
        let mut states = BTreeMap::new();
        let state_blocks = cfg.state_blocks();
        for (i, id) in state_blocks.iter().enumerate() {
            states.insert(*id, i as i64 + 1);
        }
        for id in cfg.blocks.keys() {
            states.entry(*id).or_insert(DONE_STATE);
        }

        let mut receivers = BTreeMap::new();
        for block in cfg.blocks.values() {
            if let Terminator::YieldTo { receiver: Some(name), resume, .. } = &block.terminator {
                let previous = receivers.insert(*resume, name.clone());
                debug_assert!(previous.is_none(), "receiving resume blocks have a single predecessor");
            }
        }

        StateMachinePlan {
            func: func.name.clone(),
            states,
            hoisted: declared_locals(&func.body),
            params: func.params.clone(),
            inst_var: names.fresh("inst", "_i"),
            resume_param: names.fresh("resume", "_r"),
            receivers,
        }
    }

    /// Number of dispatch arms.
    pub fn state_count(&self) -> usize {
        self.states.values().filter(|&&s| s != DONE_STATE).count()
    }
}

/// Locals declared by `let` or `let x = yield`, first occurrence order, no duplicates.
pub fn declared_locals(body: &Block) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    ast::walk_stmts(body, &mut |s| {
        if let StmtKind::Let(name, _) | StmtKind::LetYield(name, _) = &s.kind {
            if seen.insert(name.clone()) {
                out.push(name.clone());
            }
        }
    });
    out
}

/// Rewrites one generator, with fresh names chosen against its own identifiers.
pub fn rewrite_generator(func: &FuncDecl, optimize: bool) -> Result<FuncDecl, TransformError> {
    let mut used = BTreeSet::new();
    ast::decl_identifiers(func, &mut used);
    rewrite_with(func, optimize, &mut FreshNames::new(used)).map(|(decl, _)| decl)
}

/// Rewrites one generator and returns the plan alongside the new declaration.
pub fn rewrite_with(
    func: &FuncDecl,
    optimize: bool,
    names: &mut FreshNames,
) -> Result<(FuncDecl, StateMachinePlan), TransformError> {
    if !func.is_generator {
        return Err(TransformError::NotAGenerator(func.name.clone()));
    }
    let mut cfg = build_cfg(func);
    if optimize {
        cfg = merge_blocks(&cfg);
    }
    let plan = StateMachinePlan::build(func, &cfg, names);
    let decl = emit_machine(&cfg, &plan);
    Ok((decl, plan))
}

fn emit_machine(cfg: &Cfg, plan: &StateMachinePlan) -> FuncDecl {
    let inst = || Expr::var(plan.inst_var.clone());
    let set_inst = |state: i64| Stmt::new(StmtKind::Assign(plan.inst_var.clone(), Expr::Int(state)));

    let mut arms: Vec<(i64, Vec<Stmt>)> = Vec::new();
    for (id, block) in &cfg.blocks {
        let state = plan.states[id];
        if state == DONE_STATE {
            continue;
        }
        let mut body = Vec::new();
        if let Some(receiver) = plan.receivers.get(id) {
            body.push(Stmt::new(StmtKind::Assign(receiver.clone(), Expr::var(plan.resume_param.clone()))));
        }
        for stmt in &block.stmts {
            let kind = match &stmt.kind {
                StmtKind::Let(name, e) => StmtKind::Assign(name.clone(), e.clone()),
                other => other.clone(),
            };
            body.push(Stmt::at(kind, stmt.pos));
        }
        match &block.terminator {
            Terminator::Goto(t) => body.push(set_inst(plan.states[t])),
            Terminator::Branch { cond, then_to, else_to } => body.push(Stmt::new(StmtKind::If {
                cond: cond.clone(),
                then_block: Block::new(alloc::vec![set_inst(plan.states[then_to])]),
                else_block: Some(Block::new(alloc::vec![set_inst(plan.states[else_to])])),
            })),
            Terminator::YieldTo { value, resume, .. } => {
                body.push(set_inst(plan.states[resume]));
                body.push(Stmt::new(StmtKind::Return(Some(value.clone()))));
            }
            Terminator::Finish(value) => {
                body.push(set_inst(DONE_STATE));
                body.push(Stmt::new(StmtKind::Return(Some(value.clone().unwrap_or(Expr::Null)))));
            }
        }
        arms.push((state, body));
    }
    arms.sort_by_key(|(state, _)| *state);

    // Build the chain from the innermost `else` outwards.
    let mut chain = Block::new(alloc::vec![Stmt::new(StmtKind::Return(Some(Expr::Null)))]);
    for (state, body) in arms.into_iter().rev() {
        let test = Expr::binary(BinOp::Eq, inst(), Expr::Int(state));
        chain = Block::new(alloc::vec![Stmt::new(StmtKind::If {
            cond: test,
            then_block: Block::new(body),
            else_block: Some(chain),
        })]);
    }
    let dispatch = Stmt::new(StmtKind::While { cond: Expr::Bool(true), body: chain });
    let machine = Expr::Lambda(alloc::vec![plan.resume_param.clone()], Block::new(alloc::vec![dispatch]));

    let mut stmts = alloc::vec![Stmt::new(StmtKind::Let(plan.inst_var.clone(), Expr::Int(1)))];
    for local in &plan.hoisted {
        stmts.push(Stmt::new(StmtKind::Let(local.clone(), Expr::Null)));
    }
    stmts.push(Stmt::new(StmtKind::Return(Some(machine))));

    FuncDecl { name: plan.func.clone(), params: plan.params.clone(), is_generator: false, body: Block::new(stmts) }
}

/// Rewrites every generator of the program. Plain functions are untouched;
/// `next` call sites keep working because `next` also applies closures.
pub fn transform_program(program: &Program, optimize: bool) -> Result<Program, TransformError> {
    let mut names = FreshNames::for_program(program);
    let mut decls = Vec::with_capacity(program.decls.len());
    for decl in &program.decls {
        if decl.is_generator {
            decls.push(rewrite_with(decl, optimize, &mut names)?.0);
        } else {
            decls.push(decl.clone());
        }
    }
    Ok(Program { decls, entry: program.entry.clone() })
}

/// Recognises the shape emitted by [`rewrite_generator`]: the counter
/// variable, the hoisted locals, the resume parameter and the dispatch loop
/// body. Returns `None` for anything else.
pub fn match_machine(decl: &FuncDecl) -> Option<MachineShape<'_>> {
    if decl.is_generator {
        return None;
    }
    let (last, init) = decl.body.stmts.split_last()?;
    let (first, locals) = init.split_first()?;
    let StmtKind::Let(inst_var, Expr::Int(1)) = &first.kind else { return None };
    let mut hoisted = Vec::new();
    for s in locals {
        let StmtKind::Let(name, Expr::Null) = &s.kind else { return None };
        hoisted.push(name.as_str());
    }
    let StmtKind::Return(Some(Expr::Lambda(params, body))) = &last.kind else { return None };
    let [resume_param] = params.as_slice() else { return None };
    let [dispatch] = body.stmts.as_slice() else { return None };
    let StmtKind::While { cond: Expr::Bool(true), .. } = &dispatch.kind else { return None };
    Some(MachineShape { inst_var, hoisted, resume_param, body })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineShape<'a> {
    pub inst_var: &'a str,
    pub hoisted: Vec<&'a str>,
    pub resume_param: &'a str,
    pub body: &'a Block,
}

/// Counts the arms of an emitted dispatch chain.
pub fn dispatch_state_count(decl: &FuncDecl) -> Option<usize> {
    let shape = match_machine(decl)?;
    let StmtKind::While { body, .. } = &shape.body.stmts[0].kind else { return None };
    let mut count = 0;
    let mut block = body;
    loop {
        match block.stmts.as_slice() {
            [Stmt { kind: StmtKind::If { cond: Expr::Binary(BinOp::Eq, lhs, _), else_block: Some(els), .. }, .. }]
                if **lhs == Expr::var(shape.inst_var) =>
            {
                count += 1;
                block = els;
            }
            _ => return Some(count),
        }
    }
}
