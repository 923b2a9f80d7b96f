use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{BasicBlock, BlockId, Cfg, Terminator};
use crate::ast::{Block, Expr, FuncDecl, Stmt, StmtKind};

const UNPATCHED: BlockId = usize::MAX;

/// An outgoing edge whose target is not known yet.
#[derive(Debug, Clone, Copy)]
enum Hole {
    Goto(usize),
    Then(usize),
    Else(usize),
    Resume(usize),
}

/// Where control stands after a statement sequence.
enum Cursor {
    /// Inside a block that can still receive statements.
    Open(usize),
    /// Between blocks; the next block created gets these incoming edges.
    /// An empty list means the point is unreachable.
    Dangling(Vec<Hole>),
}

struct Proto {
    stmts: Vec<Stmt>,
    terminator: Option<Terminator>,
}

struct Builder {
    blocks: Vec<Proto>,
}

/// Builds the control flow graph of a generator body.
///
/// Yields end their block. A plain `yield` resumes into whatever block the
/// following code starts, so two arms that both end in a yield resume into
/// the same join block. `let x = yield e` always resumes into a fresh block
/// so that the receiver is bound in exactly one place. Statements after a
/// `return` are unreachable and dropped.
pub fn build_cfg(func: &FuncDecl) -> Cfg {
    let mut b = Builder { blocks: Vec::new() };
    let entry = b.new_block();
    let end = b.stmts(&func.body, Cursor::Open(entry));
    match end {
        Cursor::Open(id) => b.terminate(id, Terminator::Finish(None)),
        Cursor::Dangling(holes) if !holes.is_empty() => {
            let id = b.new_block();
            b.patch(&holes, id);
            b.terminate(id, Terminator::Finish(None));
        }
        Cursor::Dangling(_) => {}
    }

    let blocks: BTreeMap<BlockId, BasicBlock> = b
        .blocks
        .into_iter()
        .enumerate()
        .map(|(id, proto)| {
            let terminator = proto.terminator.expect("every block is terminated");
            (id, BasicBlock { id, stmts: proto.stmts, terminator })
        })
        .collect();
    Cfg { blocks, entry }.renumber()
}

impl Builder {
    fn new_block(&mut self) -> usize {
        self.blocks.push(Proto { stmts: Vec::new(), terminator: None });
        self.blocks.len() - 1
    }

    fn terminate(&mut self, id: usize, t: Terminator) {
        debug_assert!(self.blocks[id].terminator.is_none());
        self.blocks[id].terminator = Some(t);
    }

    fn patch(&mut self, holes: &[Hole], target: usize) {
        for hole in holes {
            let (Hole::Goto(id) | Hole::Then(id) | Hole::Else(id) | Hole::Resume(id)) = *hole;
            let t = self.blocks[id].terminator.as_mut().expect("holes belong to terminated blocks");
            match (hole, t) {
                (Hole::Goto(_), Terminator::Goto(slot))
                | (Hole::Then(_), Terminator::Branch { then_to: slot, .. })
                | (Hole::Else(_), Terminator::Branch { else_to: slot, .. })
                | (Hole::Resume(_), Terminator::YieldTo { resume: slot, .. }) => {
                    debug_assert_eq!(*slot, UNPATCHED);
                    *slot = target;
                }
                _ => unreachable!("hole does not match its terminator"),
            }
        }
    }

    /// Returns a block that can receive statements at this point.
    fn open(&mut self, cursor: Cursor) -> usize {
        match cursor {
            Cursor::Open(id) => id,
            Cursor::Dangling(holes) => {
                let id = self.new_block();
                self.patch(&holes, id);
                id
            }
        }
    }

    /// Turns the cursor into dangling edges, closing an open block with a goto.
    fn dangle(&mut self, cursor: Cursor) -> Vec<Hole> {
        match cursor {
            Cursor::Open(id) => {
                self.terminate(id, Terminator::Goto(UNPATCHED));
                alloc::vec![Hole::Goto(id)]
            }
            Cursor::Dangling(holes) => holes,
        }
    }

    fn stmts(&mut self, block: &Block, mut cursor: Cursor) -> Cursor {
        for stmt in &block.stmts {
            cursor = self.stmt(stmt, cursor);
        }
        cursor
    }

    fn stmt(&mut self, stmt: &Stmt, cursor: Cursor) -> Cursor {
        match &stmt.kind {
            StmtKind::Let(..)
            | StmtKind::Assign(..)
            | StmtKind::FieldSet { .. }
            | StmtKind::Expr(_)
            | StmtKind::Print(_) => {
                let id = self.open(cursor);
                self.blocks[id].stmts.push(stmt.clone());
                Cursor::Open(id)
            }
            StmtKind::Yield(value) => {
                let id = self.open(cursor);
                self.terminate(id, Terminator::YieldTo { value: value.clone(), receiver: None, resume: UNPATCHED });
                Cursor::Dangling(alloc::vec![Hole::Resume(id)])
            }
            StmtKind::LetYield(name, value) => {
                let id = self.open(cursor);
                let resume = self.new_block();
                self.terminate(id, Terminator::YieldTo { value: value.clone(), receiver: Some(name.clone()), resume });
                Cursor::Open(resume)
            }
            StmtKind::If { cond, then_block, else_block } => {
                let id = self.open(cursor);
                self.terminate(id, branch(cond));
                let then_end = self.stmts(then_block, Cursor::Dangling(alloc::vec![Hole::Then(id)]));
                let else_start = Cursor::Dangling(alloc::vec![Hole::Else(id)]);
                let else_end = match else_block {
                    Some(b) => self.stmts(b, else_start),
                    None => else_start,
                };
                let mut holes = self.dangle(then_end);
                holes.extend(self.dangle(else_end));
                Cursor::Dangling(holes)
            }
            StmtKind::While { cond, body } => {
                let before = self.dangle(cursor);
                let test = self.new_block();
                self.patch(&before, test);
                self.terminate(test, branch(cond));
                let body_end = self.stmts(body, Cursor::Dangling(alloc::vec![Hole::Then(test)]));
                let back = self.dangle(body_end);
                self.patch(&back, test);
                Cursor::Dangling(alloc::vec![Hole::Else(test)])
            }
            StmtKind::Return(value) => {
                let id = self.open(cursor);
                self.terminate(id, Terminator::Finish(value.clone()));
                Cursor::Dangling(Vec::new())
            }
        }
    }
}

fn branch(cond: &Expr) -> Terminator {
    Terminator::Branch { cond: cond.clone(), then_to: UNPATCHED, else_to: UNPATCHED }
}
