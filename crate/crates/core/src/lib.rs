//! Reproducible dataset extraction over an append-only, content-addressed
//! archive of version-control metadata.
//!
//! A dataset is characterised by a [`Fingerprint`](engine::Fingerprint): a
//! query written in FPQL (a small OCL dialect over the archive object model)
//! and a timestamp. Running the fingerprint against any export that is at
//! least as recent as the timestamp yields the same origin list and the same
//! dataset hash.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: Merkle-DAG node types, identifiers, integrity checks,
//!   append-only merging and time-restricted views.
//! - [`store`]: the line-delimited exchange format.
//! - [`sim`]: a seeded synthesizer of evolving archives.
//! - [`query`]: FPQL lexer, parser, pretty-printer and typechecker.
//! - [`engine`]: evaluation, conjunct reordering and fingerprint execution.
//! - [`extract`]: subgraph extraction, list diffs and per-forge statistics.

pub mod engine;
pub mod extract;
pub mod model;
pub mod query;
pub mod sim;
pub mod store;
pub mod time;

pub use engine::{run_fingerprint, EvalBudget, Fingerprint, OriginList};
pub use model::{ArchiveGraph, ArchiveView, NodeType, Swhid};
