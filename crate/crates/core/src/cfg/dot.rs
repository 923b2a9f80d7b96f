use alloc::string::String;
use core::fmt::Write;

use super::{BlockId, Cfg, Terminator};
use crate::printer::print_expr_string;

/// Renders the graph in Graphviz DOT.
///
/// Blocks are box nodes named `bb<N>`; `start` and `end` are ovals. Branch
/// edges are labelled `yes`/`no` and yield edges are dashed with the yielded
/// expression. Exit blocks (see [`Cfg::is_exit_block`]) are drawn as `end`.
pub fn emit_dot(name: &str, cfg: &Cfg) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    out.push_str("  start [shape=oval, style=filled, fillcolor=\"#2e8b57\", fontcolor=white, label=\"start\"];\n");
    out.push_str("  end [shape=oval, style=filled, fillcolor=\"#b22222\", fontcolor=white, label=\"end\"];\n");

    let node = |id: BlockId| -> String {
        if cfg.is_exit_block(id) {
            String::from("end")
        } else {
            alloc::format!("bb{id}")
        }
    };

    for block in cfg.blocks.values() {
        if cfg.is_exit_block(block.id) {
            continue;
        }
        let mut label = alloc::format!("{}", block.id);
        for stmt in &block.stmts {
            let mut line = String::new();
            crate::printer::print_stmt_line(&mut line, stmt);
            label.push_str("\\l");
            label.push_str(&escape(&line));
        }
        if let Terminator::Branch { cond, .. } = &block.terminator {
            label.push_str("\\l");
            label.push_str(&escape(&alloc::format!("{}?", print_expr_string(cond))));
        }
        if block.stmts.is_empty() && !matches!(block.terminator, Terminator::Branch { .. }) {
            let _ = writeln!(out, "  bb{} [label=\"{}\"];", block.id, label);
        } else {
            let _ = writeln!(out, "  bb{} [label=\"{}\\l\"];", block.id, label);
        }
    }

    let _ = writeln!(out, "  start -> {};", node(cfg.entry));
    for block in cfg.blocks.values() {
        if cfg.is_exit_block(block.id) {
            continue;
        }
        let from = node(block.id);
        match &block.terminator {
            Terminator::Goto(t) => {
                let _ = writeln!(out, "  {from} -> {};", node(*t));
            }
            Terminator::Branch { then_to, else_to, .. } => {
                let _ = writeln!(out, "  {from} -> {} [label=\"yes\"];", node(*then_to));
                let _ = writeln!(out, "  {from} -> {} [label=\"no\"];", node(*else_to));
            }
            Terminator::YieldTo { value, receiver, resume } => {
                let mut label = alloc::format!("yield {}", print_expr_string(value));
                if let Some(r) = receiver {
                    label = alloc::format!("{r} = {label}");
                }
                let _ = writeln!(out, "  {from} -> {} [style=dashed, label=\"{}\"];", node(*resume), escape(&label));
            }
            Terminator::Finish(None) => {
                let _ = writeln!(out, "  {from} -> end;");
            }
            Terminator::Finish(Some(v)) => {
                let label = alloc::format!("return {}", print_expr_string(v));
                let _ = writeln!(out, "  {from} -> end [label=\"{}\"];", escape(&label));
            }
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\l"),
            _ => out.push(c),
        }
    }
    out
}
