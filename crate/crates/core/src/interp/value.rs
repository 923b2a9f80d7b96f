use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::ast::{Block, FuncDecl, Stmt, Expr};

/// Snapshot of a runtime value as observed by a caller: printed, yielded or
/// passed in as an argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Null,
    Closure,
    Generator,
    Record(Vec<(String, Value)>),
    FuncRef(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Null => f.write_str("null"),
            Value::Closure => f.write_str("<closure>"),
            Value::Generator => f.write_str("<generator>"),
            Value::FuncRef(name) => write!(f, "&{name}"),
            Value::Record(fields) => {
                f.write_str("{")?;
                for (i, (name, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

pub(crate) type ScopeRef<'p> = Rc<RefCell<Scope<'p>>>;

#[derive(Default)]
pub(crate) struct Scope<'p> {
    vars: Vec<(&'p str, RtValue<'p>)>,
    parent: Option<ScopeRef<'p>>,
}

impl<'p> Scope<'p> {
    pub(crate) fn root() -> ScopeRef<'p> {
        Rc::new(RefCell::new(Scope::default()))
    }

    pub(crate) fn child(parent: &ScopeRef<'p>) -> ScopeRef<'p> {
        Rc::new(RefCell::new(Scope { vars: Vec::new(), parent: Some(parent.clone()) }))
    }

    /// Binds `name` in this scope, replacing an existing binding of the same scope.
    pub(crate) fn declare(&mut self, name: &'p str, value: RtValue<'p>) {
        match self.vars.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.vars.push((name, value)),
        }
    }
}

pub(crate) fn lookup<'p>(scope: &ScopeRef<'p>, name: &str) -> Option<RtValue<'p>> {
    let mut current = scope.clone();
    loop {
        let next = {
            let s = current.borrow();
            if let Some((_, v)) = s.vars.iter().find(|(n, _)| *n == name) {
                return Some(v.clone());
            }
            s.parent.clone()
        };
        current = next?;
    }
}

/// Updates the innermost binding of `name`; false if there is none.
pub(crate) fn assign<'p>(scope: &ScopeRef<'p>, name: &str, value: RtValue<'p>) -> bool {
    let mut current = scope.clone();
    loop {
        let next = {
            let mut s = current.borrow_mut();
            if let Some(slot) = s.vars.iter_mut().find(|(n, _)| *n == name) {
                slot.1 = value;
                return true;
            }
            s.parent.clone()
        };
        match next {
            Some(p) => current = p,
            None => return false,
        }
    }
}

#[derive(Clone)]
pub(crate) enum RtValue<'p> {
    Int(i64),
    Bool(bool),
    Null,
    Closure(Rc<Closure<'p>>),
    Gen(Rc<RefCell<GenState<'p>>>),
    Record(Rc<RefCell<Vec<(String, RtValue<'p>)>>>),
    FuncRef(&'p str),
}

pub(crate) struct Closure<'p> {
    pub params: &'p [String],
    pub body: &'p Block,
    /// Captured by reference: every call sees earlier mutations.
    pub env: ScopeRef<'p>,
}

pub(crate) struct GenState<'p> {
    pub decl: &'p FuncDecl,
    pub status: GenStatus<'p>,
}

pub(crate) enum GenStatus<'p> {
    NotStarted(Vec<RtValue<'p>>),
    Suspended { frames: Vec<Frame<'p>>, receiver: Option<&'p str> },
    Running,
    Finished,
}

/// One activation of a statement list on the explicit execution stack.
pub(crate) struct Frame<'p> {
    pub stmts: &'p [Stmt],
    pub pc: usize,
    pub scope: ScopeRef<'p>,
    pub kind: FrameKind<'p>,
}

pub(crate) enum FrameKind<'p> {
    Block,
    /// Loop body; the condition is re-evaluated in `outer` after each pass.
    Loop { cond: &'p Expr, outer: ScopeRef<'p> },
}

impl<'p> RtValue<'p> {
    pub(crate) fn type_name(&self) -> &'static str {
        match self {
            RtValue::Int(_) => "int",
            RtValue::Bool(_) => "bool",
            RtValue::Null => "null",
            RtValue::Closure(_) => "closure",
            RtValue::Gen(_) => "generator",
            RtValue::Record(_) => "record",
            RtValue::FuncRef(_) => "function reference",
        }
    }

    pub(crate) fn snapshot(&self) -> Value {
        self.snapshot_depth(0)
    }

    fn snapshot_depth(&self, depth: usize) -> Value {
        match self {
            RtValue::Int(v) => Value::Int(*v),
            RtValue::Bool(b) => Value::Bool(*b),
            RtValue::Null => Value::Null,
            RtValue::Closure(_) => Value::Closure,
            RtValue::Gen(_) => Value::Generator,
            RtValue::FuncRef(name) => Value::FuncRef(String::from(*name)),
            // Records may reach themselves through field assignment.
            RtValue::Record(_) if depth > 16 => Value::Record(Vec::new()),
            RtValue::Record(fields) => Value::Record(
                fields.borrow().iter().map(|(n, v)| (n.clone(), v.snapshot_depth(depth + 1))).collect(),
            ),
        }
    }

    /// Identity for reference values, value equality otherwise.
    pub(crate) fn same(&self, other: &RtValue<'p>) -> bool {
        match (self, other) {
            (RtValue::Int(a), RtValue::Int(b)) => a == b,
            (RtValue::Bool(a), RtValue::Bool(b)) => a == b,
            (RtValue::Null, RtValue::Null) => true,
            (RtValue::FuncRef(a), RtValue::FuncRef(b)) => a == b,
            (RtValue::Closure(a), RtValue::Closure(b)) => Rc::ptr_eq(a, b),
            (RtValue::Gen(a), RtValue::Gen(b)) => Rc::ptr_eq(a, b),
            (RtValue::Record(a), RtValue::Record(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}
