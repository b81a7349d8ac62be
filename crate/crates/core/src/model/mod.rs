//! The archive object model: a Merkle DAG of snapshots, releases, revisions,
//! directories and contents, plus the origins whose visits point into it.

mod archive;
mod manifest;
mod node;
mod swhid;
mod view;

pub use archive::{
    merge_append_only, verify_integrity, ArchiveBuilder, ArchiveGraph, IntegrityIssue,
    IntegrityReport, IssueKind, NodeMap, Provenance,
};
pub use manifest::{compute_swhid, manifest, validate_node};
pub use node::{
    Content, Directory, DirectoryEntry, Node, Origin, OriginVisit, Release, Revision, Snapshot,
    SnapshotBranch,
};
pub(crate) use swhid::parse_lower_hex;
pub use swhid::{NodeType, Swhid, SwhidParseError};
pub use view::{restrict_to_timestamp, ArchiveView, OriginView};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid {kind} node: {reason}")]
    InvalidNode { kind: NodeType, reason: String },
    #[error("integrity conflict: two different records claim {id}")]
    IntegrityConflict { id: Swhid },
    #[error("append-only violation on origin `{url}`: {detail}")]
    AppendOnlyViolation { url: String, detail: String },
    #[error("invalid origin `{url}`: {detail}")]
    InvalidOrigin { url: String, detail: String },
    #[error("archive failed integrity verification: {0}")]
    Integrity(IntegrityReport),
}
