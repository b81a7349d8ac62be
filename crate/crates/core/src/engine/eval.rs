//! Tree-walking evaluator over a typed query.

use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::value::{Obj, SetBuilder, Text, Value};
use crate::model::{ArchiveView, Node, NodeType, Swhid};
use crate::query::ast::{BinOp, Span};
use crate::query::metamodel::{Attr, Builtin};
use crate::query::{CollOp, IterKind, OpId, QueryAst, TExpr, TKind};

/// Resource limits for one evaluation. Depth and node limits apply per
/// origin; the wall-clock limit applies to the whole run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalBudget {
    /// Maximum nesting of user-defined operation calls.
    pub max_depth: u64,
    /// Maximum number of archive node lookups.
    pub max_nodes: u64,
    pub wall_clock: Option<Duration>,
}

impl EvalBudget {
    pub const DEFAULT_DEPTH: u64 = 1_000_000;
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget {
            max_depth: Self::DEFAULT_DEPTH,
            max_nodes: u64::MAX,
            wall_clock: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{span}: null used as a boolean")]
    NullCondition { span: Span },
    #[error("{span}: `{op}` applied to null")]
    NullOperand { span: Span, op: &'static str },
    #[error("{span}: integer overflow")]
    Overflow { span: Span },
    #[error("recursion depth limit of {limit} exceeded")]
    DepthExceeded { limit: u64 },
    #[error("node visit limit of {limit} exceeded")]
    NodeBudgetExceeded { limit: u64 },
    #[error("wall-clock limit of {limit_ms} ms exceeded")]
    Timeout { limit_ms: u128 },
    #[error("archive is missing node {id}")]
    MissingNode { id: Swhid },
    #[error("internal evaluator error: {0}")]
    Internal(String),
}

impl EvalError {
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            EvalError::DepthExceeded { .. }
                | EvalError::NodeBudgetExceeded { .. }
                | EvalError::Timeout { .. }
        )
    }
}

type R<T> = Result<T, EvalError>;

enum Tail<'a> {
    Done(Value<'a>),
    Call(OpId, Value<'a>, Vec<Value<'a>>),
}

const RED_ZONE: usize = 256 * 1024;
const STACK_SEGMENT: usize = 8 * 1024 * 1024;

pub struct Evaluator<'a> {
    ast: &'a QueryAst,
    view: &'a ArchiveView<'a>,
    budget: &'a EvalBudget,
    deadline: Option<Instant>,
    depth: u64,
    nodes_visited: u64,
    steps: u64,
    last: Option<(Swhid, &'a Node)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        ast: &'a QueryAst,
        view: &'a ArchiveView<'a>,
        budget: &'a EvalBudget,
        deadline: Option<Instant>,
    ) -> Self {
        Evaluator {
            ast,
            view,
            budget,
            deadline,
            depth: 0,
            nodes_visited: 0,
            steps: 0,
            last: None,
        }
    }

    fn fetch(&mut self, id: Swhid) -> R<Obj<'a>> {
        self.nodes_visited += 1;
        if self.nodes_visited > self.budget.max_nodes {
            return Err(EvalError::NodeBudgetExceeded {
                limit: self.budget.max_nodes,
            });
        }
        // `parent = null ... parent.f()` looks up the same node twice
        if let Some((last, node)) = self.last {
            if last == id {
                return Ok(Obj::Node(id, node));
            }
        }
        let node = self.view.node(&id).ok_or(EvalError::MissingNode { id })?;
        self.last = Some((id, node));
        Ok(Obj::Node(id, node))
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps % 4096 == 0 {
            if let (Some(deadline), Some(limit)) = (self.deadline, self.budget.wall_clock) {
                if Instant::now() > deadline {
                    return Err(EvalError::Timeout {
                        limit_ms: limit.as_millis(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Evaluates an expression in a frame whose slot 0 holds `self`.
    /// Collection-typed expressions never evaluate to null: a null there
    /// (say `parent.parents` on a root revision) reads as the empty set.
    pub fn eval(&mut self, e: &'a TExpr, frame: &mut [Value<'a>]) -> R<Value<'a>> {
        // leaves need neither stack checks nor the step counter
        match &e.kind {
            TKind::Var(slot) => {
                let v = frame[*slot].clone();
                if v.is_null() && e.ty.is_collection() {
                    return Ok(Value::empty_set());
                }
                return Ok(v);
            }
            TKind::Null if !e.ty.is_collection() => return Ok(Value::Null),
            TKind::Int(v) => return Ok(Value::Int(*v)),
            _ => {}
        }
        let v = stacker::maybe_grow(RED_ZONE, STACK_SEGMENT, || self.eval_inner(e, frame))?;
        if v.is_null() && e.ty.is_collection() {
            return Ok(Value::empty_set());
        }
        Ok(v)
    }

    /// Evaluates a boolean expression; null is an error.
    pub fn eval_predicate(&mut self, e: &'a TExpr, frame: &mut [Value<'a>]) -> R<bool> {
        self.eval_bool(e, frame)
    }

    fn eval_bool(&mut self, e: &'a TExpr, frame: &mut [Value<'a>]) -> R<bool> {
        match self.eval(e, frame)? {
            Value::Bool(b) => Ok(b),
            Value::Null => Err(EvalError::NullCondition { span: e.span }),
            other => Err(EvalError::Internal(format!(
                "expected a boolean, got {other:?}"
            ))),
        }
    }

    fn eval_set(&mut self, e: &'a TExpr, frame: &mut [Value<'a>]) -> R<Rc<Vec<Value<'a>>>> {
        match self.eval(e, frame)? {
            Value::Set(items) => Ok(items),
            Value::Null => Ok(Rc::new(Vec::new())),
            other => Err(EvalError::Internal(format!(
                "expected a collection, got {other:?}"
            ))),
        }
    }

    fn eval_inner(&mut self, e: &'a TExpr, frame: &mut [Value<'a>]) -> R<Value<'a>> {
        self.tick()?;
        Ok(match &e.kind {
            TKind::Int(v) => Value::Int(*v),
            TKind::Str(s) => Value::Str(Text::Ref(s)),
            TKind::Bool(b) => Value::Bool(*b),
            TKind::Null => Value::Null,
            TKind::Var(slot) => frame[*slot].clone(),
            TKind::Attr {
                source,
                attr,
                collect,
            } => {
                let src = self.eval(source, frame)?;
                self.lift(src, *collect, |ev, obj| ev.attribute(obj, *attr))?
            }
            TKind::Builtin {
                source,
                op,
                collect,
            } => {
                let src = self.eval(source, frame)?;
                match op {
                    Builtin::OclAsSet => match src {
                        Value::Null => Value::empty_set(),
                        v @ Value::Set(_) => v,
                        v => Value::Set(Rc::new(vec![v])),
                    },
                    Builtin::IsKindOf(_) if src.is_null() && !collect => Value::Bool(false),
                    _ => self.lift(src, *collect, |ev, obj| ev.builtin(obj, *op))?,
                }
            }
            TKind::UserCall {
                source,
                op,
                args,
                collect,
            } => {
                let src = self.eval(source, frame)?;
                let mut argv = Vec::with_capacity(args.len());
                for a in args {
                    argv.push(self.eval(a, frame)?);
                }
                if src.is_null() {
                    return Ok(Value::Null);
                }
                if *collect {
                    let Value::Set(items) = src else {
                        return Err(EvalError::Internal("collect call on a scalar".into()));
                    };
                    let mut out = SetBuilder::new();
                    for item in items.iter() {
                        let v = self.call(*op, item.clone(), argv.clone())?;
                        out.extend_flat(v);
                    }
                    out.finish()
                } else {
                    self.call(*op, src, argv)?
                }
            }
            TKind::Iterate {
                source,
                kind,
                slot,
                body,
            } => {
                let items = self.eval_set(source, frame)?;
                self.iterate(&items, *kind, *slot, body, frame)?
            }
            TKind::CollOp {
                source,
                op: CollOp::SizeUpTo(cap),
                ..
            } => {
                let cap = usize::try_from(*cap).unwrap_or(usize::MAX);
                let len = match &source.kind {
                    TKind::Iterate {
                        source: seed,
                        kind: IterKind::Closure,
                        slot,
                        body,
                    } => {
                        let seed = self.eval_set(seed, frame)?;
                        self.closure(&seed, *slot, body, frame, cap)?.len()
                    }
                    _ => self.eval_set(source, frame)?.len(),
                };
                Value::Int(len.min(cap) as i64)
            }
            TKind::CollOp { source, op, arg } => {
                let items = self.eval_set(source, frame)?;
                match op {
                    CollOp::Size => Value::Int(items.len() as i64),
                    CollOp::SizeUpTo(n) => Value::Int((items.len() as u64).min(*n) as i64),
                    CollOp::IsEmpty => Value::Bool(items.is_empty()),
                    CollOp::AsSet => Value::Set(items),
                    CollOp::Includes => {
                        let x = self.eval(arg.as_deref().expect("typechecked"), frame)?;
                        Value::Bool(items.contains(&x))
                    }
                }
            }
            TKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, e.span, frame)?,
            TKind::Not(inner) => Value::Bool(!self.eval_bool(inner, frame)?),
            TKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.eval_bool(cond, frame)? {
                    self.eval(then_branch, frame)?
                } else {
                    self.eval(else_branch, frame)?
                }
            }
        })
    }

    fn lift(
        &mut self,
        src: Value<'a>,
        collect: bool,
        mut f: impl FnMut(&mut Self, Obj<'a>) -> R<Value<'a>>,
    ) -> R<Value<'a>> {
        match src {
            Value::Null => Ok(if collect {
                Value::empty_set()
            } else {
                Value::Null
            }),
            Value::Obj(obj) if !collect => f(self, obj),
            Value::Set(items) if collect => {
                let mut out = SetBuilder::new();
                for item in items.iter() {
                    match item {
                        Value::Obj(obj) => out.extend_flat(f(self, *obj)?),
                        other => {
                            return Err(EvalError::Internal(format!("navigation on {other:?}")))
                        }
                    }
                }
                Ok(out.finish())
            }
            other => Err(EvalError::Internal(format!("navigation on {other:?}"))),
        }
    }

    fn iterate(
        &mut self,
        items: &Rc<Vec<Value<'a>>>,
        kind: IterKind,
        slot: usize,
        body: &'a TExpr,
        frame: &mut [Value<'a>],
    ) -> R<Value<'a>> {
        match kind {
            IterKind::Select => {
                let mut kept = Vec::new();
                for item in items.iter() {
                    frame[slot] = item.clone();
                    if self.eval_bool(body, frame)? {
                        kept.push(item.clone());
                    }
                }
                Ok(Value::Set(Rc::new(kept)))
            }
            IterKind::Exists => {
                for item in items.iter() {
                    frame[slot] = item.clone();
                    if self.eval_bool(body, frame)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            IterKind::ForAll => {
                for item in items.iter() {
                    frame[slot] = item.clone();
                    if !self.eval_bool(body, frame)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
            IterKind::Collect => {
                let mut out = SetBuilder::new();
                for item in items.iter() {
                    frame[slot] = item.clone();
                    let v = self.eval(body, frame)?;
                    out.extend_flat(v);
                }
                Ok(out.finish())
            }
            IterKind::Closure => Ok(self.closure(items, slot, body, frame, usize::MAX)?.finish()),
        }
    }

    /// Breadth-first worklist: the result vector doubles as the queue and
    /// the builder's set as the visited set. Stops early once `cap`
    /// elements are known.
    fn closure(
        &mut self,
        seed: &Rc<Vec<Value<'a>>>,
        slot: usize,
        body: &'a TExpr,
        frame: &mut [Value<'a>],
        cap: usize,
    ) -> R<SetBuilder<'a>> {
        let mut out = SetBuilder::new();
        for item in seed.iter() {
            out.insert(item.clone());
        }
        let mut next = 0;
        while next < out.len() && out.len() < cap {
            frame[slot] = out.get(next).clone();
            next += 1;
            let v = self.eval(body, frame)?;
            out.extend_flat(v);
        }
        Ok(out)
    }

    fn binary(
        &mut self,
        op: BinOp,
        lhs: &'a TExpr,
        rhs: &'a TExpr,
        span: Span,
        frame: &mut [Value<'a>],
    ) -> R<Value<'a>> {
        match op {
            BinOp::And => Ok(Value::Bool(
                self.eval_bool(lhs, frame)? && self.eval_bool(rhs, frame)?,
            )),
            BinOp::Or => Ok(Value::Bool(
                self.eval_bool(lhs, frame)? || self.eval_bool(rhs, frame)?,
            )),
            BinOp::Eq => Ok(Value::Bool(
                self.eval(lhs, frame)? == self.eval(rhs, frame)?,
            )),
            BinOp::Ne => Ok(Value::Bool(
                self.eval(lhs, frame)? != self.eval(rhs, frame)?,
            )),
            _ => {
                let l = self.eval(lhs, frame)?;
                let r = self.eval(rhs, frame)?;
                let ord = match (&l, &r) {
                    (Value::Int(a), Value::Int(b)) => match op {
                        BinOp::Add => {
                            return a
                                .checked_add(*b)
                                .map(Value::Int)
                                .ok_or(EvalError::Overflow { span })
                        }
                        BinOp::Sub => {
                            return a
                                .checked_sub(*b)
                                .map(Value::Int)
                                .ok_or(EvalError::Overflow { span })
                        }
                        _ => a.cmp(b),
                    },
                    (Value::Str(a), Value::Str(b)) => a.cmp(b),
                    (Value::Null, _) | (_, Value::Null) => {
                        return Err(EvalError::NullOperand {
                            span,
                            op: op.symbol(),
                        })
                    }
                    _ => {
                        return Err(EvalError::Internal(format!(
                            "`{}` on {l:?} and {r:?}",
                            op.symbol()
                        )))
                    }
                };
                Ok(Value::Bool(match op {
                    BinOp::Lt => ord.is_lt(),
                    BinOp::Le => ord.is_le(),
                    BinOp::Gt => ord.is_gt(),
                    BinOp::Ge => ord.is_ge(),
                    _ => return Err(EvalError::Internal(format!("`{}` on strings", op.symbol()))),
                }))
            }
        }
    }

    /// Calls a user-defined operation. Calls in tail position of the body
    /// are looped rather than nested, so linear recursion such as walking a
    /// parent chain runs in constant stack.
    pub fn call(&mut self, op: OpId, recv: Value<'a>, args: Vec<Value<'a>>) -> R<Value<'a>> {
        let base = self.depth;
        let result = self.call_loop(op, recv, args);
        self.depth = base;
        result
    }

    fn call_loop(
        &mut self,
        mut op: OpId,
        mut recv: Value<'a>,
        mut args: Vec<Value<'a>>,
    ) -> R<Value<'a>> {
        let ast = self.ast;
        let mut frame = Vec::new();
        loop {
            self.depth += 1;
            if self.depth > self.budget.max_depth {
                return Err(EvalError::DepthExceeded {
                    limit: self.budget.max_depth,
                });
            }
            let def = ast.op(op);
            if frame.len() == def.frame_size {
                frame[1..].fill(Value::Null);
            } else {
                frame.clear();
                frame.resize(def.frame_size, Value::Null);
            }
            frame[0] = recv;
            for (slot, a) in frame[1..].iter_mut().zip(args) {
                *slot = a;
            }
            match self.eval_tail(&def.body, &mut frame)? {
                Tail::Done(v) => return Ok(v),
                Tail::Call(next, r, a) => {
                    op = next;
                    recv = r;
                    args = a;
                }
            }
        }
    }

    fn eval_tail(&mut self, e: &'a TExpr, frame: &mut [Value<'a>]) -> R<Tail<'a>> {
        match &e.kind {
            TKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.tick()?;
                if self.eval_bool(cond, frame)? {
                    self.eval_tail(then_branch, frame)
                } else {
                    self.eval_tail(else_branch, frame)
                }
            }
            TKind::UserCall {
                source,
                op,
                args,
                collect: false,
            } => {
                self.tick()?;
                let recv = self.eval(source, frame)?;
                let mut argv = Vec::with_capacity(args.len());
                for a in args {
                    argv.push(self.eval(a, frame)?);
                }
                if recv.is_null() {
                    return Ok(Tail::Done(Value::Null));
                }
                Ok(Tail::Call(*op, recv, argv))
            }
            _ => self.eval(e, frame).map(Tail::Done),
        }
    }

    fn node_value(&mut self, id: Swhid) -> R<Value<'a>> {
        Ok(Value::Obj(self.fetch(id)?))
    }

    fn attribute(&mut self, obj: Obj<'a>, attr: Attr) -> R<Value<'a>> {
        let view = self.view;
        let bad = || EvalError::Internal(format!("attribute {attr:?} on {obj:?}"));
        Ok(match (attr, obj) {
            (Attr::GraphTimestamp, Obj::Graph) => Value::Int(view.timestamp()),
            (Attr::GraphOrigins, Obj::Graph) => Value::Set(Rc::new(
                (0..view.origins().len() as u32)
                    .map(|i| Value::Obj(Obj::Origin(i)))
                    .collect(),
            )),
            (Attr::OriginUrl, Obj::Origin(i)) => {
                Value::Str(Text::Ref(view.origins()[i as usize].url()))
            }
            (Attr::OriginVisits, Obj::Origin(i)) => {
                let n = view.origins()[i as usize].visits().len() as u32;
                Value::Set(Rc::new(
                    (0..n).map(|j| Value::Obj(Obj::Visit(i, j))).collect(),
                ))
            }
            (Attr::VisitTimestamp, Obj::Visit(i, j)) => {
                Value::Int(view.origins()[i as usize].visits()[j as usize].timestamp)
            }
            (Attr::VisitSnapshot, Obj::Visit(i, j)) => {
                self.node_value(view.origins()[i as usize].visits()[j as usize].snapshot)?
            }
            (Attr::NodeSwhid, Obj::Node(id, _)) => Value::Str(Text::Id(id)),
            (Attr::SnapshotBranches, Obj::Node(id, Node::Snapshot(s))) => Value::Set(Rc::new(
                (0..s.branches.len() as u32)
                    .map(|k| Value::Obj(Obj::Branch(id, obj_node(&obj), k)))
                    .collect(),
            )),
            (Attr::BranchName, Obj::Branch(_, Node::Snapshot(s), k)) => {
                Value::Str(Text::Ref(&s.branches[k as usize].name))
            }
            (Attr::BranchTarget, Obj::Branch(_, Node::Snapshot(s), k)) => {
                self.node_value(s.branches[k as usize].target)?
            }
            (Attr::ReleaseName, Obj::Node(_, Node::Release(r))) => Value::Str(Text::Ref(&r.name)),
            (Attr::ReleaseMessage, Obj::Node(_, Node::Release(r))) => {
                Value::Str(Text::Ref(&r.message))
            }
            (Attr::ReleaseTimestamp, Obj::Node(_, Node::Release(r))) => Value::Int(r.timestamp),
            (Attr::ReleaseTarget, Obj::Node(_, Node::Release(r))) => self.node_value(r.target)?,
            (Attr::RevisionTree, Obj::Node(_, Node::Revision(r))) => self.node_value(r.tree)?,
            (Attr::RevisionParent, Obj::Node(_, Node::Revision(r))) => match r.parents.first() {
                Some(p) => self.node_value(*p)?,
                None => Value::Null,
            },
            (Attr::RevisionParents, Obj::Node(_, Node::Revision(r))) => {
                let mut out = SetBuilder::new();
                for p in &r.parents {
                    out.insert(self.node_value(*p)?);
                }
                out.finish()
            }
            (Attr::RevisionAuthor, Obj::Node(_, Node::Revision(r))) => {
                Value::Str(Text::Ref(&r.author))
            }
            (Attr::RevisionAuthorTimestamp, Obj::Node(_, Node::Revision(r))) => {
                Value::Int(r.author_timestamp)
            }
            (Attr::RevisionCommitter, Obj::Node(_, Node::Revision(r))) => {
                Value::Str(Text::Ref(&r.committer))
            }
            (Attr::RevisionCommitterTimestamp, Obj::Node(_, Node::Revision(r))) => {
                Value::Int(r.committer_timestamp)
            }
            (Attr::RevisionMessage, Obj::Node(_, Node::Revision(r))) => {
                Value::Str(Text::Ref(&r.message))
            }
            (Attr::DirectoryEntries, Obj::Node(id, Node::Directory(d))) => Value::Set(Rc::new(
                (0..d.entries.len() as u32)
                    .map(|k| Value::Obj(Obj::Entry(id, obj_node(&obj), k)))
                    .collect(),
            )),
            (Attr::EntryName, Obj::Entry(_, Node::Directory(d), k)) => {
                Value::Str(Text::Ref(&d.entries[k as usize].name))
            }
            (Attr::EntryChild, Obj::Entry(_, Node::Directory(d), k)) => {
                self.node_value(d.entries[k as usize].target)?
            }
            (Attr::EntryPerms, Obj::Entry(_, Node::Directory(d), k)) => {
                Value::Int(i64::from(d.entries[k as usize].perms))
            }
            (Attr::ContentLength, Obj::Node(_, Node::Content(c))) => {
                Value::Int(i64::try_from(c.length).unwrap_or(i64::MAX))
            }
            _ => return Err(bad()),
        })
    }

    fn builtin(&mut self, obj: Obj<'a>, op: Builtin) -> R<Value<'a>> {
        Ok(match (op, obj) {
            (Builtin::GetLastSnapshot, Obj::Origin(i)) => {
                match self.view.origins()[i as usize].last_snapshot() {
                    Some(id) => self.node_value(id)?,
                    None => Value::Null,
                }
            }
            (Builtin::GetRevision, Obj::Branch(_, Node::Snapshot(s), k)) => {
                let mut target = s.branches[k as usize].target;
                loop {
                    match target.node_type() {
                        NodeType::Revision => break self.node_value(target)?,
                        NodeType::Release => match self.fetch(target)? {
                            Obj::Node(_, Node::Release(r)) => target = r.target,
                            _ => {
                                return Err(EvalError::Internal(
                                    "release id on a non-release".into(),
                                ))
                            }
                        },
                        _ => break Value::Null,
                    }
                }
            }
            (Builtin::IsKindOf(class), obj) => Value::Bool(obj.class().is_subclass_of(class)),
            (Builtin::AsType(class), obj) => {
                if obj.class().is_subclass_of(class) {
                    Value::Obj(obj)
                } else {
                    Value::Null
                }
            }
            _ => return Err(EvalError::Internal(format!("{op:?} on {obj:?}"))),
        })
    }
}

fn obj_node<'a>(obj: &Obj<'a>) -> &'a Node {
    match *obj {
        Obj::Node(_, n) | Obj::Branch(_, n, _) | Obj::Entry(_, n, _) => n,
        _ => unreachable!("only called on node objects"),
    }
}
