//! Control flow graphs of generator bodies.
//!
//! A generator body is cut into basic blocks at branches and at yields.
//! Each yield ends its block with a [`Terminator::YieldTo`] that names the
//! block execution continues in on the next resumption.

mod build;
mod dot;
mod merge;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::{Expr, Stmt};

pub use build::build_cfg;
pub use dot::emit_dot;
pub use merge::merge_blocks;

pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Goto(BlockId),
    Branch { cond: Expr, then_to: BlockId, else_to: BlockId },
    /// Suspend with `value`; on resumption bind the resume value to
    /// `receiver` (if any) and continue at `resume`.
    YieldTo { value: Expr, receiver: Option<String>, resume: BlockId },
    Finish(Option<Expr>),
}

impl Terminator {
    /// Successors in a fixed order: `then` before `else`.
    pub fn successors(&self) -> Vec<BlockId> {
        match self {
            Terminator::Goto(t) => alloc::vec![*t],
            Terminator::Branch { then_to, else_to, .. } => alloc::vec![*then_to, *else_to],
            Terminator::YieldTo { resume, .. } => alloc::vec![*resume],
            Terminator::Finish(_) => Vec::new(),
        }
    }

    fn map_targets(&mut self, mut f: impl FnMut(BlockId) -> BlockId) {
        match self {
            Terminator::Goto(t) => *t = f(*t),
            Terminator::Branch { then_to, else_to, .. } => {
                *then_to = f(*then_to);
                *else_to = f(*else_to);
            }
            Terminator::YieldTo { resume, .. } => *resume = f(*resume),
            Terminator::Finish(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicBlock {
    pub id: BlockId,
    /// Straight-line statements only: no `if`, `while`, `yield` or `return`.
    pub stmts: Vec<Stmt>,
    pub terminator: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    pub blocks: BTreeMap<BlockId, BasicBlock>,
    pub entry: BlockId,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[&id]
    }

    /// Number of incoming edges per block. A branch with both arms on the
    /// same block counts twice.
    pub fn predecessor_counts(&self) -> BTreeMap<BlockId, usize> {
        let mut counts: BTreeMap<BlockId, usize> = self.blocks.keys().map(|&id| (id, 0)).collect();
        for block in self.blocks.values() {
            for s in block.terminator.successors() {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Blocks some `YieldTo` resumes into.
    pub fn resume_targets(&self) -> Vec<BlockId> {
        let mut targets: Vec<BlockId> = self
            .blocks
            .values()
            .filter_map(|b| match &b.terminator {
                Terminator::YieldTo { resume, .. } => Some(*resume),
                _ => None,
            })
            .collect();
        targets.sort_unstable();
        targets.dedup();
        targets
    }

    /// An empty `Finish(None)` block that is neither the entry nor a resume
    /// target. It only stands for "the generator is done" and is drawn as
    /// the `end` node; the state machine compiles jumps into it as a switch
    /// to the exhausted state instead of giving it a state of its own.
    pub fn is_exit_block(&self, id: BlockId) -> bool {
        let block = self.block(id);
        id != self.entry
            && block.stmts.is_empty()
            && block.terminator == Terminator::Finish(None)
            && !self.resume_targets().contains(&id)
    }

    /// Blocks that become dispatch states: everything except exit blocks.
    pub fn state_blocks(&self) -> Vec<BlockId> {
        let resume = self.resume_targets();
        self.blocks
            .values()
            .filter(|b| {
                b.id == self.entry
                    || !b.stmts.is_empty()
                    || b.terminator != Terminator::Finish(None)
                    || resume.contains(&b.id)
            })
            .map(|b| b.id)
            .collect()
    }

    /// Checks that every terminator target exists.
    pub fn check_edges(&self) -> Result<(), BlockId> {
        if !self.blocks.contains_key(&self.entry) {
            return Err(self.entry);
        }
        for block in self.blocks.values() {
            for s in block.terminator.successors() {
                if !self.blocks.contains_key(&s) {
                    return Err(s);
                }
            }
        }
        Ok(())
    }

    /// Drops unreachable blocks and renumbers the rest densely from 1 in
    /// reverse postorder. The depth-first walk visits `else` before `then`,
    /// which places `then` arms first in the final order.
    pub(crate) fn renumber(self) -> Cfg {
        let mut postorder = Vec::new();
        let mut visited = alloc::collections::BTreeSet::new();
        let mut stack: Vec<(BlockId, Vec<BlockId>)> = Vec::new();
        visited.insert(self.entry);
        stack.push((self.entry, self.blocks[&self.entry].terminator.successors()));
        while let Some((node, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(next) => {
                    if visited.insert(next) {
                        let succ = self.blocks[&next].terminator.successors();
                        stack.push((next, succ));
                    }
                }
                None => {
                    postorder.push(*node);
                    stack.pop();
                }
            }
        }
        let order: BTreeMap<BlockId, BlockId> =
            postorder.iter().rev().enumerate().map(|(i, &old)| (old, i + 1)).collect();

        let mut blocks = BTreeMap::new();
        for (old, mut block) in self.blocks {
            let Some(&new) = order.get(&old) else { continue };
            block.id = new;
            block.terminator.map_targets(|t| order[&t]);
            blocks.insert(new, block);
        }
        Cfg { blocks, entry: 1 }
    }
}
