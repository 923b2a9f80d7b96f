//! Random program generators shared by the property tests and the
//! acceptance suite.
#![allow(dead_code)]

use corolower_core::ast::{BinOp, Block, Expr, FuncDecl, Program, Stmt, StmtKind, UnOp};
use proptest::prelude::*;

pub const NAMES: &[&str] = &["a", "b", "acc", "x1", "next_val"];
pub const FIELDS: &[&str] = &["f", "env", "fn", "if", "value"];

pub fn name() -> impl Strategy<Value = String> {
    prop::sample::select(NAMES).prop_map(String::from)
}

pub fn field() -> impl Strategy<Value = String> {
    prop::sample::select(FIELDS).prop_map(String::from)
}

pub fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..100_000).prop_map(Expr::Int),
        any::<bool>().prop_map(Expr::Bool),
        Just(Expr::Null),
        name().prop_map(Expr::Var),
        Just(Expr::FuncRef(String::from("helper"))),
    ]
}

pub fn expr(lambdas: bool) -> BoxedStrategy<Expr> {
    leaf()
        .prop_recursive(4, 32, 3, move |inner| {
            let mut arms = vec![
                (prop::sample::select(BinOp::ALL.to_vec()), inner.clone(), inner.clone())
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r))
                    .boxed(),
                (prop_oneof![Just(UnOp::Neg), Just(UnOp::Not)], inner.clone())
                    .prop_map(|(op, e)| Expr::Unary(op, Box::new(e)))
                    .boxed(),
                (inner.clone(), prop::collection::vec(inner.clone(), 0..3))
                    .prop_map(|(f, args)| Expr::call(f, args))
                    .boxed(),
                (inner.clone(), prop::option::of(inner.clone()))
                    .prop_map(|(g, v)| Expr::Next(Box::new(g), v.map(Box::new)))
                    .boxed(),
                (inner.clone(), field()).prop_map(|(r, f)| Expr::field(r, f)).boxed(),
                prop::collection::btree_map(field(), inner.clone(), 0..3)
                    .prop_map(|m| Expr::Record(m.into_iter().collect()))
                    .boxed(),
            ];
            if lambdas {
                arms.push(
                    (prop::collection::btree_set(name(), 0..3), prop::collection::vec(inner.clone(), 0..2))
                        .prop_map(|(params, values)| {
                            let body = values.into_iter().map(|v| Stmt::new(StmtKind::Print(v))).collect();
                            Expr::Lambda(params.into_iter().collect(), Block::new(body))
                        })
                        .boxed(),
                );
            }
            prop::strategy::Union::new(arms)
        })
        .boxed()
}

pub fn stmt(generator: bool, lambdas: bool) -> BoxedStrategy<Stmt> {
    let e = move || expr(lambdas && !generator);
    let mut simple = vec![
        (name(), e()).prop_map(|(n, v)| StmtKind::Let(n, v)).boxed(),
        (name(), e()).prop_map(|(n, v)| StmtKind::Assign(n, v)).boxed(),
        (e(), field(), e()).prop_map(|(record, field, value)| StmtKind::FieldSet { record, field, value }).boxed(),
        prop::option::of(e()).prop_map(StmtKind::Return).boxed(),
        e().prop_map(StmtKind::Expr).boxed(),
        e().prop_map(StmtKind::Print).boxed(),
    ];
    if generator {
        simple.push(e().prop_map(StmtKind::Yield).boxed());
        simple.push((name(), e()).prop_map(|(n, v)| StmtKind::LetYield(n, v)).boxed());
    }
    prop::strategy::Union::new(simple)
        .prop_map(Stmt::new)
        .prop_recursive(3, 24, 4, move |inner| {
            let block = prop::collection::vec(inner, 0..4).prop_map(Block::new);
            prop_oneof![
                (e(), block.clone(), prop::option::of(block.clone())).prop_map(|(cond, then_block, else_block)| {
                    Stmt::new(StmtKind::If { cond, then_block, else_block })
                }),
                (e(), block).prop_map(|(cond, body)| Stmt::new(StmtKind::While { cond, body })),
            ]
        })
        .boxed()
}

/// Generators may not redeclare names, so their locals get fresh ones. Every
/// pool name is a generator parameter, so nothing it reads is unbound.
pub fn rename_locals(block: &mut Block, next: &mut usize) {
    for s in &mut block.stmts {
        match &mut s.kind {
            StmtKind::Let(n, _) | StmtKind::LetYield(n, _) => {
                *n = format!("local{next}");
                *next += 1;
            }
            StmtKind::If { then_block, else_block, .. } => {
                rename_locals(then_block, next);
                if let Some(b) = else_block {
                    rename_locals(b, next);
                }
            }
            StmtKind::While { body, .. } => rename_locals(body, next),
            _ => {}
        }
    }
}

pub fn program(lambdas: bool) -> impl Strategy<Value = Program> {
    let body = move |g: bool| prop::collection::vec(stmt(g, lambdas), 0..5).prop_map(Block::new);
    (body(false), body(false), body(true)).prop_map(
        |(main, helper, mut gen)| {
            rename_locals(&mut gen, &mut 0);
            Program::new(vec![
                FuncDecl { name: "helper".into(), params: vec!["a".into(), "b".into()], is_generator: false, body: helper },
                FuncDecl { name: "gen".into(), params: NAMES.iter().map(|n| n.to_string()).collect(), is_generator: true, body: gen },
                FuncDecl { name: "main".into(), params: vec![], is_generator: false, body: main },
            ])
        },
    )
}

/// Integer expressions over the generator's parameters. Division only by
/// nonzero constants, so well-typed bodies fail only by running too long.
pub fn int_expr() -> BoxedStrategy<Expr> {
    prop_oneof![(0i64..20).prop_map(Expr::Int), name().prop_map(Expr::Var)]
        .prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul]), inner.clone(), inner.clone())
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                (prop::sample::select(vec![BinOp::Div, BinOp::Rem]), inner.clone(), 1i64..9)
                    .prop_map(|(op, l, r)| Expr::binary(op, l, Expr::Int(r))),
                inner.prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
            ]
        })
        .boxed()
}

pub fn bool_expr() -> BoxedStrategy<Expr> {
    let cmp = (prop::sample::select(vec![BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]), int_expr(), int_expr())
        .prop_map(|(op, l, r)| Expr::binary(op, l, r));
    prop_oneof![any::<bool>().prop_map(Expr::Bool), cmp]
        .prop_recursive(2, 6, 2, |inner| {
            prop_oneof![
                (prop::sample::select(vec![BinOp::And, BinOp::Or]), inner.clone(), inner.clone())
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                inner.prop_map(|e| Expr::Unary(UnOp::Not, Box::new(e))),
            ]
        })
        .boxed()
}

pub fn typed_stmt() -> BoxedStrategy<Stmt> {
    prop_oneof![
        3 => (name(), int_expr()).prop_map(|(n, v)| StmtKind::Assign(n, v)),
        3 => int_expr().prop_map(StmtKind::Yield),
        2 => int_expr().prop_map(|v| StmtKind::LetYield(String::new(), v)),
        1 => (name(), int_expr()).prop_map(|(n, v)| StmtKind::Let(n, v)),
        1 => int_expr().prop_map(StmtKind::Print),
        1 => prop::option::of(int_expr()).prop_map(StmtKind::Return),
    ]
    .prop_map(Stmt::new)
    .prop_recursive(3, 24, 4, |inner| {
        let block = prop::collection::vec(inner, 0..4).prop_map(Block::new);
        prop_oneof![
            (bool_expr(), block.clone(), prop::option::of(block.clone())).prop_map(|(cond, then_block, else_block)| {
                Stmt::new(StmtKind::If { cond, then_block, else_block })
            }),
            // Counted loops: `while (v < k) { ... v = v + 1 }`.
            (name(), 0i64..6, block).prop_map(|(v, k, mut body)| {
                let step = Expr::binary(BinOp::Add, Expr::var(&v), Expr::Int(1));
                body.stmts.push(Stmt::new(StmtKind::Assign(v.clone(), step)));
                Stmt::new(StmtKind::While { cond: Expr::binary(BinOp::Lt, Expr::var(&v), Expr::Int(k)), body })
            }),
        ]
    })
    .boxed()
}

/// Folds each receiver into `acc` right after it is bound.
pub fn bind_receivers(block: &mut Block) {
    let mut out = Vec::with_capacity(block.stmts.len());
    for mut s in std::mem::take(&mut block.stmts) {
        match &mut s.kind {
            StmtKind::LetYield(n, _) => {
                let fold = Expr::binary(BinOp::Add, Expr::var("acc"), Expr::var(n.as_str()));
                out.push(s);
                out.push(Stmt::new(StmtKind::Assign(String::from("acc"), fold)));
                continue;
            }
            StmtKind::If { then_block, else_block, .. } => {
                bind_receivers(then_block);
                if let Some(b) = else_block {
                    bind_receivers(b);
                }
            }
            StmtKind::While { body, .. } => bind_receivers(body),
            _ => {}
        }
        out.push(s);
    }
    block.stmts = out;
}

pub fn typed_program() -> impl Strategy<Value = Program> {
    prop::collection::vec(typed_stmt(), 1..6).prop_map(|stmts| {
        let mut gen = Block::new(stmts);
        rename_locals(&mut gen, &mut 0);
        bind_receivers(&mut gen);
        Program::new(vec![
            FuncDecl { name: "gen".into(), params: NAMES.iter().map(|n| n.to_string()).collect(), is_generator: true, body: gen },
            FuncDecl { name: "main".into(), params: vec![], is_generator: false, body: Block::default() },
        ])
    })
}
