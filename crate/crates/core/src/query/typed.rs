//! Typed query tree produced by the typechecker and consumed by the engine.

use super::ast::{BinOp, Span};
use super::metamodel::{Attr, Builtin};
use super::types::{Class, Type};

/// Index into [`QueryAst::ops`].
pub type OpId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IterKind {
    Select,
    Exists,
    ForAll,
    Collect,
    Closure,
}

impl IterKind {
    pub fn name(self) -> &'static str {
        match self {
            IterKind::Select => "select",
            IterKind::Exists => "exists",
            IterKind::ForAll => "forAll",
            IterKind::Collect => "collect",
            IterKind::Closure => "closure",
        }
    }

    pub fn by_name(name: &str) -> Option<IterKind> {
        Some(match name {
            "select" => IterKind::Select,
            "exists" => IterKind::Exists,
            "forAll" => IterKind::ForAll,
            "collect" => IterKind::Collect,
            "closure" => IterKind::Closure,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollOp {
    Size,
    /// `min(size, n)`. Produced only by the optimizer; a closure source
    /// stops growing once it holds `n` elements.
    SizeUpTo(u64),
    IsEmpty,
    Includes,
    AsSet,
}

impl CollOp {
    pub fn name(self) -> &'static str {
        match self {
            CollOp::Size | CollOp::SizeUpTo(_) => "size",
            CollOp::IsEmpty => "isEmpty",
            CollOp::Includes => "includes",
            CollOp::AsSet => "asSet",
        }
    }

    pub fn by_name(name: &str) -> Option<CollOp> {
        Some(match name {
            "size" => CollOp::Size,
            "isEmpty" => CollOp::IsEmpty,
            "includes" => CollOp::Includes,
            "asSet" => CollOp::AsSet,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TKind {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    /// Frame slot. Slot 0 is `self`, then parameters, then iterator variables.
    Var(usize),
    /// Attribute navigation. With `collect`, `source` is a collection and
    /// the attribute is applied to every element, flattening the results.
    Attr {
        source: Box<TExpr>,
        attr: Attr,
        collect: bool,
    },
    Builtin {
        source: Box<TExpr>,
        op: Builtin,
        collect: bool,
    },
    UserCall {
        source: Box<TExpr>,
        op: OpId,
        args: Vec<TExpr>,
        collect: bool,
    },
    Iterate {
        source: Box<TExpr>,
        kind: IterKind,
        slot: usize,
        body: Box<TExpr>,
    },
    CollOp {
        source: Box<TExpr>,
        op: CollOp,
        arg: Option<Box<TExpr>>,
    },
    Binary {
        op: BinOp,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
    },
    Not(Box<TExpr>),
    If {
        cond: Box<TExpr>,
        then_branch: Box<TExpr>,
        else_branch: Box<TExpr>,
    },
}

impl TExpr {
    pub fn children(&self) -> Vec<&TExpr> {
        match &self.kind {
            TKind::Int(_) | TKind::Str(_) | TKind::Bool(_) | TKind::Null | TKind::Var(_) => vec![],
            TKind::Attr { source, .. } | TKind::Builtin { source, .. } => vec![source],
            TKind::UserCall { source, args, .. } => {
                std::iter::once(&**source).chain(args.iter()).collect()
            }
            TKind::Iterate { source, body, .. } => vec![source, body],
            TKind::CollOp { source, arg, .. } => {
                std::iter::once(&**source).chain(arg.as_deref()).collect()
            }
            TKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            TKind::Not(e) => vec![e],
            TKind::If {
                cond,
                then_branch,
                else_branch,
            } => vec![cond, then_branch, else_branch],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut TExpr> {
        match &mut self.kind {
            TKind::Int(_) | TKind::Str(_) | TKind::Bool(_) | TKind::Null | TKind::Var(_) => vec![],
            TKind::Attr { source, .. } | TKind::Builtin { source, .. } => vec![source],
            TKind::UserCall { source, args, .. } => std::iter::once(&mut **source)
                .chain(args.iter_mut())
                .collect(),
            TKind::Iterate { source, body, .. } => vec![source, body],
            TKind::CollOp { source, arg, .. } => std::iter::once(&mut **source)
                .chain(arg.as_deref_mut())
                .collect(),
            TKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            TKind::Not(e) => vec![e],
            TKind::If {
                cond,
                then_branch,
                else_branch,
            } => vec![cond, then_branch, else_branch],
        }
    }

    fn clear_spans(&mut self) {
        self.span = Span::default();
        for c in self.children_mut() {
            c.clear_spans();
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a TExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpDef {
    pub context: Class,
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub result: Type,
    pub body: TExpr,
    /// Number of frame slots the body needs, including `self` and parameters.
    pub frame_size: usize,
    pub span: Span,
}

/// A typechecked query file. Operations are stored sorted by
/// (context class, name), so the value does not depend on definition order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub ops: Vec<OpDef>,
    /// The `query(): Set(Origin)` operation of context Graph.
    pub entry: OpId,
}

impl QueryAst {
    pub fn op(&self, id: OpId) -> &OpDef {
        &self.ops[id]
    }

    pub fn entry_op(&self) -> &OpDef {
        &self.ops[self.entry]
    }

    /// Copy with every source position reset, for structural comparison.
    pub fn without_spans(&self) -> QueryAst {
        let mut copy = self.clone();
        for op in &mut copy.ops {
            op.span = Span::default();
            op.body.clear_spans();
        }
        copy
    }

    /// Operations that can reach themselves through the call graph.
    pub fn recursive_ops(&self) -> Vec<bool> {
        let n = self.ops.len();
        let callees: Vec<Vec<OpId>> = self
            .ops
            .iter()
            .map(|op| {
                let mut out = Vec::new();
                op.body.walk(&mut |e| {
                    if let TKind::UserCall { op, .. } = e.kind {
                        out.push(op);
                    }
                });
                out
            })
            .collect();
        (0..n)
            .map(|start| {
                let mut seen = vec![false; n];
                let mut stack = callees[start].clone();
                while let Some(id) = stack.pop() {
                    if id == start {
                        return true;
                    }
                    if !std::mem::replace(&mut seen[id], true) {
                        stack.extend_from_slice(&callees[id]);
                    }
                }
                false
            })
            .collect()
    }
}
