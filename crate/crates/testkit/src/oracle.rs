//! Brute-force reference interpreter.
//!
//! Deliberately naive and independent of the engine: it works on the
//! archive directly (filtering visits by timestamp on every access instead
//! of using a view), represents collections as ordered sets, evaluates user
//! operations by plain recursion, and computes closures as a fixpoint. It
//! shares only the typed syntax tree with the engine.

use std::collections::BTreeSet;

use pvdb_core::model::{ArchiveGraph, Node, NodeType, Origin, OriginVisit, Swhid};
use pvdb_core::query::ast::BinOp;
use pvdb_core::query::metamodel::{Attr, Builtin};
use pvdb_core::query::{Class, CollOp, IterKind, QueryAst, TExpr, TKind};
use pvdb_core::OriginList;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum O {
    Graph,
    Origin(String),
    Visit(String, i64),
    Node(Swhid),
    Branch(Swhid, String),
    Entry(Swhid, String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum V {
    Null,
    B(bool),
    I(i64),
    S(String),
    O(O),
    Set(BTreeSet<V>),
}

pub type OracleError = String;

type R<T> = Result<T, OracleError>;

struct Oracle<'a> {
    ast: &'a QueryAst,
    archive: &'a ArchiveGraph,
    t: i64,
}

fn class_of(o: &O) -> Class {
    match o {
        O::Graph => Class::Graph,
        O::Origin(_) => Class::Origin,
        O::Visit(..) => Class::OriginVisit,
        O::Branch(..) => Class::SnapshotBranch,
        O::Entry(..) => Class::DirectoryEntry,
        O::Node(id) => match id.node_type() {
            NodeType::Content => Class::Content,
            NodeType::Directory => Class::Directory,
            NodeType::Revision => Class::Revision,
            NodeType::Release => Class::Release,
            NodeType::Snapshot => Class::Snapshot,
        },
    }
}

fn set_of(items: impl IntoIterator<Item = V>) -> V {
    V::Set(items.into_iter().filter(|v| *v != V::Null).collect())
}

fn flatten(values: impl IntoIterator<Item = V>) -> V {
    let mut out = BTreeSet::new();
    for v in values {
        match v {
            V::Null => {}
            V::Set(inner) => out.extend(inner),
            x => {
                out.insert(x);
            }
        }
    }
    V::Set(out)
}

fn as_set(v: V) -> BTreeSet<V> {
    match v {
        V::Null => BTreeSet::new(),
        V::Set(s) => s,
        x => BTreeSet::from([x]),
    }
}

impl<'a> Oracle<'a> {
    fn node(&self, id: &Swhid) -> R<&'a Node> {
        self.archive
            .node(id)
            .ok_or_else(|| format!("missing node {id}"))
    }

    fn origin(&self, url: &str) -> R<&'a Origin> {
        self.archive
            .origin(url)
            .ok_or_else(|| format!("missing origin {url}"))
    }

    fn visible(&self, origin: &'a Origin) -> Vec<&'a OriginVisit> {
        origin
            .visits
            .iter()
            .filter(|v| v.timestamp <= self.t)
            .collect()
    }

    fn universe(&self) -> Vec<&'a Origin> {
        self.archive
            .origins()
            .filter(|o| !self.visible(o).is_empty())
            .collect()
    }

    fn last_snapshot(&self, origin: &'a Origin) -> Option<Swhid> {
        self.visible(origin)
            .into_iter()
            .max_by_key(|v| v.timestamp)
            .map(|v| v.snapshot)
    }

    fn attr(&self, o: &O, attr: Attr) -> R<V> {
        let fail = || Err(format!("attribute {attr:?} on {o:?}"));
        Ok(match (o, attr) {
            (O::Graph, Attr::GraphTimestamp) => V::I(self.t),
            (O::Graph, Attr::GraphOrigins) => set_of(
                self.universe()
                    .into_iter()
                    .map(|o| V::O(O::Origin(o.url.clone()))),
            ),
            (O::Origin(url), Attr::OriginUrl) => V::S(url.clone()),
            (O::Origin(url), Attr::OriginVisits) => {
                let origin = self.origin(url)?;
                set_of(
                    self.visible(origin)
                        .into_iter()
                        .map(|v| V::O(O::Visit(url.clone(), v.timestamp))),
                )
            }
            (O::Visit(_, ts), Attr::VisitTimestamp) => V::I(*ts),
            (O::Visit(url, ts), Attr::VisitSnapshot) => {
                let origin = self.origin(url)?;
                let v = origin
                    .visits
                    .iter()
                    .find(|v| v.timestamp == *ts)
                    .ok_or("missing visit")?;
                V::O(O::Node(v.snapshot))
            }
            (O::Node(id), Attr::NodeSwhid) => V::S(id.to_string()),
            (O::Branch(snp, name), Attr::BranchName | Attr::BranchTarget) => {
                let Node::Snapshot(s) = self.node(snp)? else {
                    return fail();
                };
                let b = s
                    .branches
                    .iter()
                    .find(|b| &b.name == name)
                    .ok_or("missing branch")?;
                if attr == Attr::BranchName {
                    V::S(b.name.clone())
                } else {
                    V::O(O::Node(b.target))
                }
            }
            (O::Entry(dir, name), Attr::EntryName | Attr::EntryChild | Attr::EntryPerms) => {
                let Node::Directory(d) = self.node(dir)? else {
                    return fail();
                };
                let e = d
                    .entries
                    .iter()
                    .find(|e| &e.name == name)
                    .ok_or("missing entry")?;
                match attr {
                    Attr::EntryName => V::S(e.name.clone()),
                    Attr::EntryChild => V::O(O::Node(e.target)),
                    _ => V::I(e.perms as i64),
                }
            }
            (O::Node(id), _) => match (self.node(id)?, attr) {
                (Node::Snapshot(s), Attr::SnapshotBranches) => set_of(
                    s.branches
                        .iter()
                        .map(|b| V::O(O::Branch(*id, b.name.clone()))),
                ),
                (Node::Release(r), Attr::ReleaseName) => V::S(r.name.clone()),
                (Node::Release(r), Attr::ReleaseMessage) => V::S(r.message.clone()),
                (Node::Release(r), Attr::ReleaseTimestamp) => V::I(r.timestamp),
                (Node::Release(r), Attr::ReleaseTarget) => V::O(O::Node(r.target)),
                (Node::Revision(r), Attr::RevisionTree) => V::O(O::Node(r.tree)),
                (Node::Revision(r), Attr::RevisionParent) => match r.parents.first() {
                    Some(p) => V::O(O::Node(*p)),
                    None => V::Null,
                },
                (Node::Revision(r), Attr::RevisionParents) => {
                    set_of(r.parents.iter().map(|p| V::O(O::Node(*p))))
                }
                (Node::Revision(r), Attr::RevisionAuthor) => V::S(r.author.clone()),
                (Node::Revision(r), Attr::RevisionAuthorTimestamp) => V::I(r.author_timestamp),
                (Node::Revision(r), Attr::RevisionCommitter) => V::S(r.committer.clone()),
                (Node::Revision(r), Attr::RevisionCommitterTimestamp) => {
                    V::I(r.committer_timestamp)
                }
                (Node::Revision(r), Attr::RevisionMessage) => V::S(r.message.clone()),
                (Node::Directory(d), Attr::DirectoryEntries) => set_of(
                    d.entries
                        .iter()
                        .map(|e| V::O(O::Entry(*id, e.name.clone()))),
                ),
                (Node::Content(c), Attr::ContentLength) => {
                    V::I(c.length.min(i64::MAX as u64) as i64)
                }
                _ => return fail(),
            },
            _ => return fail(),
        })
    }

    fn builtin(&self, o: &O, op: Builtin) -> R<V> {
        Ok(match (op, o) {
            (Builtin::GetLastSnapshot, O::Origin(url)) => {
                match self.last_snapshot(self.origin(url)?) {
                    Some(s) => V::O(O::Node(s)),
                    None => V::Null,
                }
            }
            (Builtin::GetRevision, O::Branch(..)) => {
                let V::O(O::Node(mut target)) = self.attr(o, Attr::BranchTarget)? else {
                    return Err("branch without target".into());
                };
                loop {
                    match self.node(&target)? {
                        Node::Revision(_) => break V::O(O::Node(target)),
                        Node::Release(r) => target = r.target,
                        _ => break V::Null,
                    }
                }
            }
            (Builtin::IsKindOf(c), o) => V::B(class_of(o).is_subclass_of(c)),
            (Builtin::AsType(c), o) => {
                if class_of(o).is_subclass_of(c) {
                    V::O(o.clone())
                } else {
                    V::Null
                }
            }
            (Builtin::OclAsSet, o) => set_of([V::O(o.clone())]),
            _ => return Err(format!("{op:?} on {o:?}")),
        })
    }

    fn truth(&self, e: &TExpr, env: &mut Vec<V>) -> R<bool> {
        match self.eval(e, env)? {
            V::B(b) => Ok(b),
            V::Null => Err(format!("{}: null used as a boolean", e.span)),
            other => Err(format!("{}: not a boolean: {other:?}", e.span)),
        }
    }

    fn call(&self, op: usize, recv: V, args: Vec<V>) -> R<V> {
        let def = self.ast.op(op);
        let mut env = vec![V::Null; def.frame_size];
        env[0] = recv;
        for (i, a) in args.into_iter().enumerate() {
            env[i + 1] = a;
        }
        self.eval(&def.body, &mut env)
    }

    fn eval(&self, e: &TExpr, env: &mut Vec<V>) -> R<V> {
        let v = self.eval_kind(e, env)?;
        if v == V::Null && e.ty.is_collection() {
            return Ok(V::Set(BTreeSet::new()));
        }
        Ok(v)
    }

    fn eval_kind(&self, e: &TExpr, env: &mut Vec<V>) -> R<V> {
        Ok(match &e.kind {
            TKind::Int(i) => V::I(*i),
            TKind::Str(s) => V::S(s.clone()),
            TKind::Bool(b) => V::B(*b),
            TKind::Null => V::Null,
            TKind::Var(slot) => env[*slot].clone(),
            TKind::Attr { source, attr, .. } => match self.eval(source, env)? {
                V::Null => V::Null,
                V::O(o) => self.attr(&o, *attr)?,
                V::Set(items) => {
                    let mut out = Vec::new();
                    for item in items {
                        let V::O(o) = item else {
                            return Err("navigation on a scalar".into());
                        };
                        out.push(self.attr(&o, *attr)?);
                    }
                    flatten(out)
                }
                other => return Err(format!("navigation on {other:?}")),
            },
            TKind::Builtin { source, op, .. } => {
                let src = self.eval(source, env)?;
                match (op, src) {
                    (Builtin::OclAsSet, s) => V::Set(as_set(s)),
                    (Builtin::IsKindOf(_), V::Null) => {
                        if source.ty.is_collection() {
                            V::Set(BTreeSet::new())
                        } else {
                            V::B(false)
                        }
                    }
                    (_, V::Null) => V::Null,
                    (_, V::O(o)) => self.builtin(&o, *op)?,
                    (_, V::Set(items)) => {
                        let mut out = Vec::new();
                        for item in items {
                            let V::O(o) = item else {
                                return Err("operation on a scalar".into());
                            };
                            out.push(self.builtin(&o, *op)?);
                        }
                        flatten(out)
                    }
                    (_, other) => return Err(format!("{op:?} on {other:?}")),
                }
            }
            TKind::UserCall {
                source, op, args, ..
            } => {
                let recv = self.eval(source, env)?;
                let mut argv = Vec::new();
                for a in args {
                    argv.push(self.eval(a, env)?);
                }
                match recv {
                    V::Null => V::Null,
                    V::Set(items) => {
                        let mut out = Vec::new();
                        for item in items {
                            out.push(self.call(*op, item, argv.clone())?);
                        }
                        flatten(out)
                    }
                    r => self.call(*op, r, argv)?,
                }
            }
            TKind::Iterate {
                source,
                kind,
                slot,
                body,
            } => {
                let items = as_set(self.eval(source, env)?);
                match kind {
                    IterKind::Select => {
                        let mut out = BTreeSet::new();
                        for x in items {
                            env[*slot] = x.clone();
                            if self.truth(body, env)? {
                                out.insert(x);
                            }
                        }
                        V::Set(out)
                    }
                    IterKind::Exists => {
                        let mut found = false;
                        for x in items {
                            env[*slot] = x;
                            if self.truth(body, env)? {
                                found = true;
                                break;
                            }
                        }
                        V::B(found)
                    }
                    IterKind::ForAll => {
                        let mut all = true;
                        for x in items {
                            env[*slot] = x;
                            if !self.truth(body, env)? {
                                all = false;
                                break;
                            }
                        }
                        V::B(all)
                    }
                    IterKind::Collect => {
                        let mut out = Vec::new();
                        for x in items {
                            env[*slot] = x;
                            out.push(self.eval(body, env)?);
                        }
                        flatten(out)
                    }
                    IterKind::Closure => {
                        // least fixpoint of S = seed ∪ body(S)
                        let mut result = items.clone();
                        let mut frontier = items;
                        while !frontier.is_empty() {
                            let mut produced = Vec::new();
                            for x in frontier {
                                env[*slot] = x;
                                produced.push(self.eval(body, env)?);
                            }
                            let V::Set(new) = flatten(produced) else {
                                unreachable!()
                            };
                            frontier = new.difference(&result).cloned().collect();
                            result.extend(frontier.iter().cloned());
                        }
                        V::Set(result)
                    }
                }
            }
            TKind::CollOp { source, op, arg } => {
                let items = as_set(self.eval(source, env)?);
                match op {
                    CollOp::Size => V::I(items.len() as i64),
                    CollOp::SizeUpTo(n) => V::I((items.len() as u64).min(*n) as i64),
                    CollOp::IsEmpty => V::B(items.is_empty()),
                    CollOp::AsSet => V::Set(items),
                    CollOp::Includes => {
                        let x =
                            self.eval(arg.as_deref().ok_or("includes without argument")?, env)?;
                        V::B(items.contains(&x))
                    }
                }
            }
            TKind::Binary { op, lhs, rhs } => match op {
                BinOp::And => V::B(self.truth(lhs, env)? && self.truth(rhs, env)?),
                BinOp::Or => V::B(self.truth(lhs, env)? || self.truth(rhs, env)?),
                BinOp::Eq => V::B(self.eval(lhs, env)? == self.eval(rhs, env)?),
                BinOp::Ne => V::B(self.eval(lhs, env)? != self.eval(rhs, env)?),
                _ => {
                    let l = self.eval(lhs, env)?;
                    let r = self.eval(rhs, env)?;
                    let ord = match (&l, &r) {
                        (V::I(a), V::I(b)) => match op {
                            BinOp::Add => {
                                return a.checked_add(*b).map(V::I).ok_or_else(|| "overflow".into())
                            }
                            BinOp::Sub => {
                                return a.checked_sub(*b).map(V::I).ok_or_else(|| "overflow".into())
                            }
                            _ => a.cmp(b),
                        },
                        (V::S(a), V::S(b)) => a.as_bytes().cmp(b.as_bytes()),
                        _ => {
                            return Err(format!("{}: `{}` on {l:?} and {r:?}", e.span, op.symbol()))
                        }
                    };
                    V::B(match op {
                        BinOp::Lt => ord.is_lt(),
                        BinOp::Le => ord.is_le(),
                        BinOp::Gt => ord.is_gt(),
                        BinOp::Ge => ord.is_ge(),
                        _ => return Err("arithmetic on strings".into()),
                    })
                }
            },
            TKind::Not(x) => V::B(!self.truth(x, env)?),
            TKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.truth(cond, env)? {
                    self.eval(then_branch, env)?
                } else {
                    self.eval(else_branch, env)?
                }
            }
        })
    }
}

const ORACLE_STACK: usize = 1 << 30;

/// Evaluates the `query` operation at timestamp `t`.
pub fn evaluate(ast: &QueryAst, archive: &ArchiveGraph, t: i64) -> Result<OriginList, OracleError> {
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(ORACLE_STACK)
            .spawn_scoped(scope, || {
                let oracle = Oracle { ast, archive, t };
                let entry = ast.entry_op();
                let mut env = vec![V::Null; entry.frame_size];
                env[0] = V::O(O::Graph);
                let result = oracle.eval(&entry.body, &mut env)?;
                let mut entries = Vec::new();
                for v in as_set(result) {
                    let V::O(O::Origin(url)) = v else {
                        return Err(format!("query result holds a non-origin: {v:?}"));
                    };
                    let origin = oracle.origin(&url)?;
                    let snp = oracle
                        .last_snapshot(origin)
                        .ok_or("selected origin has no visit")?;
                    entries.push((url, snp));
                }
                Ok(OriginList::from_entries(entries))
            })
            .expect("spawn oracle thread")
            .join()
            .expect("oracle thread panicked")
    })
}
