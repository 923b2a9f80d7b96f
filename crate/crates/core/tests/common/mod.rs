#![allow(dead_code)]

pub mod strategies;

use std::fs;
use std::path::PathBuf;

use corolower_core::ast::{FuncDecl, Program};
use corolower_core::{defunc, parse_source, transform, Value};

pub const RESUMPTIONS: usize = 100;

pub struct Case {
    pub name: String,
    pub source: String,
    pub program: Program,
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn corpus() -> Vec<Case> {
    let mut paths: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mini"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let source = fs::read_to_string(&path).unwrap();
            let program = parse_source(&source).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            Case { name: path.file_stem().unwrap().to_string_lossy().into_owned(), source, program }
        })
        .collect()
}

/// The source program followed by each of its lowered forms.
pub fn forms(p: &Program) -> Vec<(&'static str, Program)> {
    let opt = transform::transform_program(p, true).unwrap();
    let noopt = transform::transform_program(p, false).unwrap();
    let fo = defunc::defunctionalize(&opt).unwrap();
    vec![("native", p.clone()), ("lowered-opt", opt), ("lowered-noopt", noopt), ("first-order", fo)]
}

/// Arguments used when tracing a generator in isolation.
pub fn sample_args(g: &FuncDecl) -> Vec<Value> {
    g.params.iter().map(|_| Value::Int(5)).collect()
}

/// Resume scripts: all nulls, and a counting sequence for receivers.
pub fn scripts() -> Vec<Vec<Value>> {
    vec![vec![Value::Null; RESUMPTIONS], (1..=RESUMPTIONS as i64).map(Value::Int).collect()]
}
