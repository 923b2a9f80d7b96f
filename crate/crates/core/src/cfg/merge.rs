use super::{BasicBlock, Cfg, Terminator};
use crate::ast::Expr;

/// Folds constant branches and concatenates goto chains, to a fixpoint.
///
/// A `Branch` on a literal `true`/`false` becomes a `Goto` to the taken
/// arm. A block ending in `Goto(t)` absorbs `t` when `t` has no other
/// incoming edge. Blocks that become unreachable are dropped and the result
/// is renumbered in reverse postorder.
pub fn merge_blocks(cfg: &Cfg) -> Cfg {
    let mut g = cfg.clone();
    loop {
        let mut changed = false;

        for block in g.blocks.values_mut() {
            if let Terminator::Branch { cond: Expr::Bool(b), then_to, else_to } = block.terminator {
                block.terminator = Terminator::Goto(if b { then_to } else { else_to });
                changed = true;
            }
        }

        let ids: alloc::vec::Vec<_> = g.blocks.keys().copied().collect();
        for id in ids {
            while let Some(BasicBlock { terminator: Terminator::Goto(target), .. }) = g.blocks.get(&id) {
                let target = *target;
                if target == id || target == g.entry || g.predecessor_counts()[&target] != 1 {
                    break;
                }
                let absorbed = g.blocks.remove(&target).expect("goto target exists");
                let block = g.blocks.get_mut(&id).expect("merging block exists");
                block.stmts.extend(absorbed.stmts);
                block.terminator = absorbed.terminator;
                changed = true;
            }
        }

        g = g.renumber();
        if !changed {
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::generator;
    use super::super::{build_cfg, BasicBlock};
    use super::*;
    use crate::ast::{Stmt, StmtKind};
    use alloc::collections::BTreeMap;
    use alloc::vec;

    #[test]
    fn fibonacci_collapses_to_three_blocks() {
        let fib = generator(
            "fn* fib() { let a = 0 let b = 1 while (true) { yield a let c = a a = b b = c + a } }",
            "fib",
        );
        let merged = merge_blocks(&build_cfg(&fib));
        assert_eq!(merged.len(), 3);
        assert_eq!(merged.block(1).stmts.len(), 2);
        assert_eq!(merged.block(1).terminator, Terminator::Goto(2));
        assert!(merged.block(2).stmts.is_empty());
        assert_eq!(merged.block(2).terminator, Terminator::YieldTo { value: Expr::var("a"), receiver: None, resume: 3 });
        assert_eq!(merged.block(3).stmts.len(), 3);
        assert_eq!(merged.block(3).terminator, Terminator::Goto(2));
    }

    #[test]
    fn nothing_to_merge_is_identity() {
        let g = build_cfg(&generator("fn* g(x) { if (x) { yield 1 } else { yield 2 } yield 3 }", "g"));
        assert_eq!(merge_blocks(&g), g);
    }

    fn block(id: usize, n: i64, terminator: Terminator) -> (usize, BasicBlock) {
        (id, BasicBlock { id, stmts: vec![Stmt::new(StmtKind::Print(Expr::Int(n)))], terminator })
    }

    #[test]
    fn goto_chain_concatenates() {
        let g = Cfg {
            blocks: BTreeMap::from([
                block(1, 1, Terminator::Goto(2)),
                block(2, 2, Terminator::Goto(3)),
                block(3, 3, Terminator::Finish(None)),
            ]),
            entry: 1,
        };
        let merged = merge_blocks(&g);
        assert_eq!(merged.len(), 1);
        let printed: vec::Vec<_> = merged.block(1).stmts.iter().map(|s| s.kind.clone()).collect();
        assert_eq!(
            printed,
            vec![
                StmtKind::Print(Expr::Int(1)),
                StmtKind::Print(Expr::Int(2)),
                StmtKind::Print(Expr::Int(3))
            ]
        );
        assert_eq!(merged.block(1).terminator, Terminator::Finish(None));
    }

    #[test]
    fn constant_false_takes_else() {
        let g = build_cfg(&generator("fn* g() { if (false) { yield 1 } else { yield 2 } }", "g"));
        let merged = merge_blocks(&g);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.block(1).terminator, Terminator::YieldTo { value: Expr::Int(2), receiver: None, resume: 2 });
    }

    #[test]
    fn self_loop_is_left_alone() {
        let g = Cfg { blocks: BTreeMap::from([block(1, 1, Terminator::Goto(2)), block(2, 2, Terminator::Goto(2))]), entry: 1 };
        let merged = merge_blocks(&g);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.block(2).terminator, Terminator::Goto(2));
        assert_eq!(merge_blocks(&merged), merged);
    }

    #[test]
    fn idempotent_on_nested_loops() {
        let f = generator(
            "fn* g(n) { let i = 0 while (i < n) { while (true) { yield i if (i > 2) { return 0 } i = i + 1 } } }",
            "g",
        );
        let once = merge_blocks(&build_cfg(&f));
        assert_eq!(merge_blocks(&once), once);
        once.check_edges().unwrap();
    }
}
