//! Query evaluation and fingerprint execution.
//!
//! The pipeline of [`run_fingerprint`] is: parse, typecheck, optimize,
//! restrict the archive to the fingerprint timestamp, evaluate, sort, hash.
//! When the query body is a chain of `select`s over `origins`, origins are
//! evaluated independently and in parallel.

mod eval;
mod fingerprint;
mod optimize;
mod origin_list;
pub mod value;

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

pub use eval::{EvalBudget, EvalError, Evaluator};
pub use fingerprint::{Fingerprint, FingerprintError};
pub use optimize::{expr_rank, op_ranks, optimize, Rank};
pub use origin_list::{ListError, OriginList, HASH_TRAILER, HEADER as ORIGIN_LIST_HEADER};
use value::{Obj, Value};

use crate::model::{restrict_to_timestamp, ArchiveGraph, ArchiveView};
use crate::query::metamodel::Attr;
use crate::query::{compile, IterKind, QueryAst, QueryError, TExpr, TKind};
use crate::time::format_rfc3339;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(
        "fingerprint timestamp {} ({fingerprint}) is after the archive export timestamp {} ({export})",
        format_rfc3339(*fingerprint),
        format_rfc3339(*export)
    )]
    TimestampAhead { fingerprint: i64, export: i64 },
    #[error("dataset hash mismatch: expected {expected}, computed {computed}")]
    HashMismatch {
        expected: String,
        computed: String,
        list: OriginList,
    },
    #[error("while evaluating {}: {error}", origin.as_deref().unwrap_or("the query"))]
    Eval {
        origin: Option<String>,
        error: EvalError,
    },
    #[error("cannot start worker threads: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub budget: EvalBudget,
    /// Worker threads; `None` uses every core. Never affects results.
    pub threads: Option<usize>,
    pub optimize: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: EvalBudget::default(),
            threads: None,
            optimize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub list: OriginList,
    pub dataset_hash: String,
}

fn is_graph_origins(e: &TExpr) -> bool {
    matches!(
        &e.kind,
        TKind::Attr { source, attr: Attr::GraphOrigins, collect: false } if matches!(source.kind, TKind::Var(0))
    )
}

/// Splits `origins->select(p1)->select(p2)...` into its predicates.
fn origin_predicates(e: &TExpr) -> Option<Vec<(usize, &TExpr)>> {
    if is_graph_origins(e) {
        return Some(Vec::new());
    }
    match &e.kind {
        TKind::Iterate {
            source,
            kind: IterKind::Select,
            slot,
            body,
        } => {
            let mut preds = origin_predicates(source)?;
            preds.push((*slot, body));
            Some(preds)
        }
        _ => None,
    }
}

fn in_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, EngineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| EngineError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

/// Evaluates the `query` operation over a view and returns the selected
/// origins with their last snapshots.
pub fn evaluate(
    ast: &QueryAst,
    view: &ArchiveView<'_>,
    opts: &RunOptions,
) -> Result<OriginList, EngineError> {
    let deadline = opts.budget.wall_clock.map(|d| Instant::now() + d);
    let entry = ast.entry_op();
    let n = view.origins().len();

    let Some(preds) = origin_predicates(&entry.body) else {
        let mut ev = Evaluator::new(ast, view, &opts.budget, deadline);
        let mut frame = vec![Value::Null; entry.frame_size];
        frame[0] = Value::Obj(Obj::Graph);
        let result = ev
            .eval(&entry.body, &mut frame)
            .map_err(|error| EngineError::Eval {
                origin: None,
                error,
            })?;
        let mut selected = Vec::new();
        if let Value::Set(items) = result {
            for v in items.iter() {
                if let Value::Obj(Obj::Origin(i)) = v {
                    selected.push(*i as usize);
                }
            }
        }
        return Ok(OriginList::from_view(view, selected));
    };

    let check = |i: usize| -> Result<bool, EvalError> {
        let mut ev = Evaluator::new(ast, view, &opts.budget, deadline);
        let mut frame = vec![Value::Null; entry.frame_size];
        frame[0] = Value::Obj(Obj::Graph);
        for &(slot, body) in &preds {
            frame[slot] = Value::Obj(Obj::Origin(i as u32));
            if !ev.eval_predicate(body, &mut frame)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let fail = |i: usize, error| EngineError::Eval {
        origin: Some(view.origins()[i].url().to_string()),
        error,
    };

    let mut selected = Vec::new();
    if opts.threads == Some(1) {
        for i in 0..n {
            if check(i).map_err(|e| fail(i, e))? {
                selected.push(i);
            }
        }
    } else {
        let results: Vec<Result<bool, EvalError>> =
            in_pool(opts.threads, || (0..n).into_par_iter().map(check).collect())?;
        for (i, r) in results.into_iter().enumerate() {
            if r.map_err(|e| fail(i, e))? {
                selected.push(i);
            }
        }
    }
    Ok(OriginList::from_view(view, selected))
}

/// Runs a fingerprint against an archive export.
pub fn run_fingerprint(
    fp: &Fingerprint,
    archive: &ArchiveGraph,
    opts: &RunOptions,
) -> Result<RunOutput, EngineError> {
    let ast = compile(&fp.query)?;
    if fp.timestamp > archive.export_timestamp() {
        return Err(EngineError::TimestampAhead {
            fingerprint: fp.timestamp,
            export: archive.export_timestamp(),
        });
    }
    let ast = if opts.optimize { optimize(&ast) } else { ast };
    let view = restrict_to_timestamp(archive, fp.timestamp);
    let list = evaluate(&ast, &view, opts)?;
    let dataset_hash = list.dataset_hash();
    if let Some(expected) = &fp.dataset_hash {
        if *expected != dataset_hash {
            return Err(EngineError::HashMismatch {
                expected: expected.clone(),
                computed: dataset_hash,
                list,
            });
        }
    }
    Ok(RunOutput { list, dataset_hash })
}
