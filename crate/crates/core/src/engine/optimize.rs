//! Conjunct reordering: cheap `and` operands are evaluated first.
//!
//! Every expression gets a static cost rank:
//!
//! | rank | contains |
//! |------|----------|
//! | 1 | only navigation, comparisons, built-ins |
//! | 2 | a `select`, `exists`, `forAll` or `collect` |
//! | 3 | a call to a recursive user operation |
//! | 4 | a `closure` |
//!
//! A call to a user operation also inherits the rank of the operation body.
//! Each maximal chain of `and` operands is stably sorted by rank.
//!
//! A closure whose size is only compared with a constant `n` is also capped:
//! `min(size, n + 1)` decides the comparison, so the worklist may stop there.

use crate::query::ast::BinOp;
use crate::query::{CollOp, IterKind, QueryAst, TExpr, TKind, Type};

pub type Rank = u8;

/// Rank of every operation of the query, indexed by [`crate::query::OpId`].
pub fn op_ranks(ast: &QueryAst) -> Vec<Rank> {
    let recursive = ast.recursive_ops();
    let base: Vec<Rank> = recursive.iter().map(|&r| if r { 3 } else { 1 }).collect();
    let mut ranks = base.clone();
    loop {
        let mut changed = false;
        for (i, op) in ast.ops.iter().enumerate() {
            let r = base[i].max(expr_rank(&op.body, &ranks));
            if r != ranks[i] {
                ranks[i] = r;
                changed = true;
            }
        }
        if !changed {
            return ranks;
        }
    }
}

pub fn expr_rank(e: &TExpr, op_ranks: &[Rank]) -> Rank {
    let own = match &e.kind {
        TKind::Iterate {
            kind: IterKind::Closure,
            ..
        } => 4,
        TKind::Iterate { .. } => 2,
        TKind::UserCall { op, .. } => op_ranks[*op],
        _ => 1,
    };
    e.children()
        .into_iter()
        .fold(own, |r, c| r.max(expr_rank(c, op_ranks)))
}

fn flatten_and(e: TExpr, out: &mut Vec<TExpr>) {
    match e.kind {
        TKind::Binary {
            op: BinOp::And,
            lhs,
            rhs,
        } => {
            flatten_and(*lhs, out);
            flatten_and(*rhs, out);
        }
        _ => out.push(e),
    }
}

fn reorder(e: &mut TExpr, ranks: &[Rank]) {
    if matches!(e.kind, TKind::Binary { op: BinOp::And, .. }) {
        let span = e.span;
        let mut operands = Vec::new();
        flatten_and(
            std::mem::replace(
                e,
                TExpr {
                    kind: TKind::Null,
                    ty: Type::Null,
                    span,
                },
            ),
            &mut operands,
        );
        for o in &mut operands {
            reorder(o, ranks);
        }
        operands.sort_by_key(|o| expr_rank(o, ranks));
        let mut it = operands.into_iter();
        let mut acc = it.next().expect("at least two operands");
        for rhs in it {
            acc = TExpr {
                kind: TKind::Binary {
                    op: BinOp::And,
                    lhs: Box::new(acc),
                    rhs: Box::new(rhs),
                },
                ty: Type::Boolean,
                span,
            };
        }
        *e = acc;
        return;
    }
    for c in e.children_mut() {
        reorder(c, ranks);
    }
}

fn cap_size(size: &mut TExpr, bound: &TExpr) {
    if let (
        TKind::CollOp {
            source,
            op: op @ CollOp::Size,
            ..
        },
        TKind::Int(n),
    ) = (&mut size.kind, &bound.kind)
    {
        if matches!(
            source.kind,
            TKind::Iterate {
                kind: IterKind::Closure,
                ..
            }
        ) {
            *op = CollOp::SizeUpTo(u64::try_from(n.saturating_add(1)).unwrap_or(0));
        }
    }
}

fn cap_closure_size(e: &mut TExpr) {
    if let TKind::Binary {
        op: BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge,
        lhs,
        rhs,
    } = &mut e.kind
    {
        cap_size(lhs, rhs);
        cap_size(rhs, lhs);
    }
    for c in e.children_mut() {
        cap_closure_size(c);
    }
}

/// Returns a semantically equivalent query with every `and` chain sorted by
/// static cost and closure sizes capped where a comparison allows it.
pub fn optimize(ast: &QueryAst) -> QueryAst {
    let ranks = op_ranks(ast);
    let mut out = ast.clone();
    for op in &mut out.ops {
        reorder(&mut op.body, &ranks);
        cap_closure_size(&mut op.body);
    }
    out
}
