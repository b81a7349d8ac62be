use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;

use super::manifest::{compute_swhid, validate_node};
use super::node::{Node, Origin, OriginVisit};
use super::swhid::{NodeType, Swhid};
use super::ModelError;

pub type NodeMap = FxHashMap<Swhid, Node>;

/// Where an extracted dataset came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source_export_timestamp: i64,
    pub fingerprint_timestamp: i64,
    pub dataset_hash: String,
}

/// One immutable export of the archive.
///
/// Values are only produced through [`ArchiveBuilder::build`],
/// [`merge_append_only`] or the store loader, all of which verify integrity.
/// [`ArchiveGraph::from_parts_unverified`] exists for loaders and for tests
/// that need to observe what verification reports on damaged data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveGraph {
    export_timestamp: i64,
    origins: BTreeMap<String, Origin>,
    nodes: NodeMap,
    provenance: Option<Provenance>,
}

impl ArchiveGraph {
    pub fn empty(export_timestamp: i64) -> Self {
        ArchiveGraph {
            export_timestamp,
            origins: BTreeMap::new(),
            nodes: NodeMap::default(),
            provenance: None,
        }
    }

    pub fn from_parts_unverified(
        export_timestamp: i64,
        origins: BTreeMap<String, Origin>,
        nodes: NodeMap,
        provenance: Option<Provenance>,
    ) -> Self {
        ArchiveGraph {
            export_timestamp,
            origins,
            nodes,
            provenance,
        }
    }

    pub fn into_parts(self) -> (i64, BTreeMap<String, Origin>, NodeMap, Option<Provenance>) {
        (
            self.export_timestamp,
            self.origins,
            self.nodes,
            self.provenance,
        )
    }

    pub fn export_timestamp(&self) -> i64 {
        self.export_timestamp
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Same archive with a different provenance header.
    pub fn with_provenance(mut self, provenance: Option<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    /// Origins in bytewise url order.
    pub fn origins(&self) -> impl ExactSizeIterator<Item = &Origin> + '_ {
        self.origins.values()
    }

    pub fn origin(&self, url: &str) -> Option<&Origin> {
        self.origins.get(url)
    }

    pub fn origin_count(&self) -> usize {
        self.origins.len()
    }

    pub fn node(&self, id: &Swhid) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &Swhid) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = (&Swhid, &Node)> + '_ {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node identifiers in canonical order (kind rank, then digest).
    pub fn sorted_ids(&self) -> Vec<Swhid> {
        let mut ids: Vec<Swhid> = self.nodes.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn visit_count(&self) -> usize {
        self.origins.values().map(|o| o.visits.len()).sum()
    }
}

/// Incremental, single-writer construction of an [`ArchiveGraph`].
#[derive(Debug, Default)]
pub struct ArchiveBuilder {
    export_timestamp: i64,
    nodes: NodeMap,
    origins: BTreeMap<String, Vec<OriginVisit>>,
    provenance: Option<Provenance>,
}

impl ArchiveBuilder {
    pub fn new(export_timestamp: i64) -> Self {
        ArchiveBuilder {
            export_timestamp,
            ..Default::default()
        }
    }

    pub fn set_provenance(&mut self, provenance: Option<Provenance>) {
        self.provenance = provenance;
    }

    /// Hashes and stores a node, returning its identifier. Adding the same
    /// node twice is a no-op.
    pub fn add_node(&mut self, node: impl Into<Node>) -> Result<Swhid, ModelError> {
        let node = node.into();
        let id = compute_swhid(&node)?;
        self.nodes.entry(id).or_insert(node);
        Ok(id)
    }

    /// Stores a node under an identifier supplied by the caller. The id is
    /// checked later by [`ArchiveBuilder::build`]; a second, different body
    /// under the same id is an immediate conflict.
    pub fn insert_node(&mut self, id: Swhid, node: Node) -> Result<(), ModelError> {
        match self.nodes.get(&id) {
            Some(existing) if *existing != node => Err(ModelError::IntegrityConflict { id }),
            Some(_) => Ok(()),
            None => {
                self.nodes.insert(id, node);
                Ok(())
            }
        }
    }

    pub fn add_origin(&mut self, url: impl Into<String>) {
        self.origins.entry(url.into()).or_default();
    }

    /// Records a visit. Visits may arrive in any order; equal timestamps on
    /// one origin are rejected at build time.
    pub fn add_visit(&mut self, url: impl Into<String>, timestamp: i64, snapshot: Swhid) {
        self.origins
            .entry(url.into())
            .or_default()
            .push(OriginVisit {
                timestamp,
                snapshot,
            });
    }

    pub fn build(self) -> Result<ArchiveGraph, ModelError> {
        let mut origins = BTreeMap::new();
        for (url, mut visits) in self.origins {
            visits.sort_by_key(|v| v.timestamp);
            origins.insert(url.clone(), Origin { url, visits });
        }
        let archive = ArchiveGraph {
            export_timestamp: self.export_timestamp,
            origins,
            nodes: self.nodes,
            provenance: self.provenance,
        };
        let report = verify_integrity(&archive);
        if report.is_ok() {
            Ok(archive)
        } else {
            Err(ModelError::Integrity(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssueKind {
    /// The stored identifier does not match the recomputed manifest hash.
    IdMismatch { computed: Swhid },
    /// The record violates its structural invariants.
    InvalidNode { reason: String },
    /// The identifier is referenced but absent from the node store.
    DanglingReference { referrer: String },
    /// Something other than a node is wrong with an origin's visit history;
    /// the issue id is the visit's snapshot.
    BadVisit { url: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityIssue {
    pub id: Swhid,
    pub kind: IssueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntegrityReport {
    pub issues: Vec<IntegrityIssue>,
}

impl IntegrityReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for IntegrityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match &issue.kind {
                IssueKind::IdMismatch { computed } => {
                    write!(f, "{}: content hashes to {computed}", issue.id)?
                }
                IssueKind::InvalidNode { reason } => write!(f, "{}: {reason}", issue.id)?,
                IssueKind::DanglingReference { referrer } => {
                    write!(f, "{}: dangling reference from {referrer}", issue.id)?
                }
                IssueKind::BadVisit { url, detail } => {
                    write!(f, "{}: visit of `{url}` {detail}", issue.id)?
                }
            }
        }
        Ok(())
    }
}

/// Recomputes every node identifier and checks reference closure and the
/// visit-history invariants. Issues come back sorted by identifier.
pub fn verify_integrity(archive: &ArchiveGraph) -> IntegrityReport {
    let mut issues = Vec::new();
    for (id, node) in &archive.nodes {
        if id.node_type() != node.node_type() {
            issues.push(IntegrityIssue {
                id: *id,
                kind: IssueKind::InvalidNode {
                    reason: format!(
                        "stored as {} but record is a {}",
                        id.node_type(),
                        node.node_type()
                    ),
                },
            });
            continue;
        }
        if let Err(e) = validate_node(node) {
            issues.push(IntegrityIssue {
                id: *id,
                kind: IssueKind::InvalidNode {
                    reason: e.to_string(),
                },
            });
            continue;
        }
        match compute_swhid(node) {
            Ok(computed) if computed != *id => issues.push(IntegrityIssue {
                id: *id,
                kind: IssueKind::IdMismatch { computed },
            }),
            Ok(_) => {}
            Err(e) => issues.push(IntegrityIssue {
                id: *id,
                kind: IssueKind::InvalidNode {
                    reason: e.to_string(),
                },
            }),
        }
        for target in node.references() {
            if !archive.nodes.contains_key(&target) {
                issues.push(IntegrityIssue {
                    id: target,
                    kind: IssueKind::DanglingReference {
                        referrer: id.to_string(),
                    },
                });
            }
        }
    }
    for origin in archive.origins.values() {
        let bad = |snapshot: Swhid, detail: String| IntegrityIssue {
            id: snapshot,
            kind: IssueKind::BadVisit {
                url: origin.url.clone(),
                detail,
            },
        };
        let mut prev: Option<i64> = None;
        for visit in &origin.visits {
            if visit.snapshot.node_type() != NodeType::Snapshot {
                issues.push(bad(visit.snapshot, "does not point to a snapshot".into()));
            } else if !archive.nodes.contains_key(&visit.snapshot) {
                issues.push(IntegrityIssue {
                    id: visit.snapshot,
                    kind: IssueKind::DanglingReference {
                        referrer: format!("visit of {} at {}", origin.url, visit.timestamp),
                    },
                });
            }
            if visit.timestamp > archive.export_timestamp {
                issues.push(bad(
                    visit.snapshot,
                    format!(
                        "at {} is after the export timestamp {}",
                        visit.timestamp, archive.export_timestamp
                    ),
                ));
            }
            if let Some(p) = prev {
                if visit.timestamp <= p {
                    issues.push(bad(
                        visit.snapshot,
                        format!(
                            "at {} does not strictly follow the visit at {p}",
                            visit.timestamp
                        ),
                    ));
                }
            }
            prev = Some(visit.timestamp);
        }
        if origin.url.is_empty() {
            if let Some(v) = origin.visits.first() {
                issues.push(bad(v.snapshot, "has an empty url".into()));
            }
        }
    }
    issues.sort_by(|a, b| {
        a.id.cmp(&b.id)
            .then_with(|| format!("{:?}", a.kind).cmp(&format!("{:?}", b.kind)))
    });
    IntegrityReport { issues }
}

/// Combines two exports. Every node and visit of both inputs is kept; a node
/// id bound to two different records, or a base history that is not a prefix
/// of the merged history, is rejected.
pub fn merge_append_only(
    base: &ArchiveGraph,
    delta: &ArchiveGraph,
) -> Result<ArchiveGraph, ModelError> {
    let mut nodes = base.nodes.clone();
    for (id, node) in &delta.nodes {
        match nodes.get(id) {
            Some(existing) if existing != node => {
                return Err(ModelError::IntegrityConflict { id: *id })
            }
            Some(_) => {}
            None => {
                nodes.insert(*id, node.clone());
            }
        }
    }

    let mut origins = base.origins.clone();
    for (url, delta_origin) in &delta.origins {
        let Some(base_origin) = base.origins.get(url) else {
            origins.insert(url.clone(), delta_origin.clone());
            continue;
        };
        let mut merged: BTreeMap<i64, Swhid> = base_origin
            .visits
            .iter()
            .map(|v| (v.timestamp, v.snapshot))
            .collect();
        for v in &delta_origin.visits {
            match merged.get(&v.timestamp) {
                Some(s) if *s != v.snapshot => {
                    return Err(ModelError::AppendOnlyViolation {
                        url: url.clone(),
                        detail: format!(
                            "visit at {} rewritten from {s} to {}",
                            v.timestamp, v.snapshot
                        ),
                    })
                }
                Some(_) => {}
                None => {
                    merged.insert(v.timestamp, v.snapshot);
                }
            }
        }
        let merged: Vec<OriginVisit> = merged
            .into_iter()
            .map(|(timestamp, snapshot)| OriginVisit {
                timestamp,
                snapshot,
            })
            .collect();
        if merged[..base_origin.visits.len()] != base_origin.visits[..] {
            let inserted = merged
                .iter()
                .find(|v| !base_origin.visits.contains(v))
                .map(|v| v.timestamp)
                .unwrap_or_default();
            return Err(ModelError::AppendOnlyViolation {
                url: url.clone(),
                detail: format!("visit at {inserted} would be inserted before existing history"),
            });
        }
        origins.insert(
            url.clone(),
            Origin {
                url: url.clone(),
                visits: merged,
            },
        );
    }

    let provenance = if base.provenance == delta.provenance {
        base.provenance.clone()
    } else {
        None
    };
    let merged = ArchiveGraph {
        export_timestamp: base.export_timestamp.max(delta.export_timestamp),
        origins,
        nodes,
        provenance,
    };
    let report = verify_integrity(&merged);
    if report.is_ok() {
        Ok(merged)
    } else {
        Err(ModelError::Integrity(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::node::*;

    fn small_archive(export: i64, visits: &[(i64, &str)]) -> ArchiveGraph {
        let mut b = ArchiveBuilder::new(export);
        let cnt = b
            .add_node(Content {
                length: 3,
                payload_digest: [7; 32],
            })
            .unwrap();
        let dir = b
            .add_node(Directory::from_unsorted(vec![DirectoryEntry {
                name: "README".into(),
                target: cnt,
                perms: DirectoryEntry::FILE,
            }]))
            .unwrap();
        for (ts, msg) in visits {
            let rev = b
                .add_node(Revision {
                    tree: dir,
                    parents: vec![],
                    author: "a".into(),
                    author_timestamp: *ts,
                    committer: "a".into(),
                    committer_timestamp: *ts,
                    message: msg.to_string(),
                })
                .unwrap();
            let snp = b
                .add_node(Snapshot::from_unsorted(vec![SnapshotBranch {
                    name: "refs/heads/main".into(),
                    target: rev,
                }]))
                .unwrap();
            b.add_visit("https://example.org/r", *ts, snp);
        }
        b.build().unwrap()
    }

    #[test]
    fn fresh_archive_verifies() {
        let a = small_archive(500, &[(100, "x"), (200, "y")]);
        assert!(verify_integrity(&a).is_ok());
    }

    #[test]
    fn flipped_message_reports_only_that_revision() {
        let a = small_archive(500, &[(100, "x")]);
        let rev_id = *a
            .nodes()
            .find(|(_, n)| n.node_type() == NodeType::Revision)
            .unwrap()
            .0;
        let (ts, origins, mut nodes, prov) = a.into_parts();
        if let Some(Node::Revision(r)) = nodes.get_mut(&rev_id) {
            r.message = "y".into();
        }
        let tampered = ArchiveGraph::from_parts_unverified(ts, origins, nodes, prov);
        let report = verify_integrity(&tampered);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].id, rev_id);
        assert!(matches!(
            report.issues[0].kind,
            IssueKind::IdMismatch { .. }
        ));
    }

    #[test]
    fn missing_directory_is_dangling() {
        let a = small_archive(500, &[(100, "x")]);
        let dir_id = *a
            .nodes()
            .find(|(_, n)| n.node_type() == NodeType::Directory)
            .unwrap()
            .0;
        let (ts, origins, mut nodes, prov) = a.into_parts();
        nodes.remove(&dir_id);
        let report = verify_integrity(&ArchiveGraph::from_parts_unverified(
            ts, origins, nodes, prov,
        ));
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].id, dir_id);
        assert!(matches!(
            report.issues[0].kind,
            IssueKind::DanglingReference { .. }
        ));
    }

    #[test]
    fn builder_rejects_tied_visits_and_future_visits() {
        let mut b = ArchiveBuilder::new(100);
        let snp = b.add_node(Snapshot::default()).unwrap();
        b.add_visit("u", 50, snp);
        b.add_visit("u", 50, snp);
        assert!(b.build().is_err());
        let mut b = ArchiveBuilder::new(100);
        let snp = b.add_node(Snapshot::default()).unwrap();
        b.add_visit("u", 150, snp);
        assert!(b.build().is_err());
    }

    #[test]
    fn merge_is_idempotent_and_absorbing() {
        let g1 = small_archive(150, &[(100, "x")]);
        let g2 = small_archive(500, &[(100, "x"), (200, "y")]);
        assert_eq!(merge_append_only(&g2, &g2).unwrap(), g2);
        assert_eq!(merge_append_only(&g2, &g1).unwrap(), g2);
        assert_eq!(merge_append_only(&g1, &g2).unwrap(), g2);
    }

    #[test]
    fn merge_rejects_history_rewrite() {
        let g1 = small_archive(500, &[(100, "x"), (300, "z")]);
        let rewritten = small_archive(500, &[(100, "x"), (300, "w")]);
        assert!(matches!(
            merge_append_only(&g1, &rewritten),
            Err(ModelError::AppendOnlyViolation { .. })
        ));
        let inserted = small_archive(500, &[(200, "y")]);
        assert!(matches!(
            merge_append_only(&g1, &inserted),
            Err(ModelError::AppendOnlyViolation { .. })
        ));
    }

    #[test]
    fn merge_rejects_conflicting_nodes() {
        let g = small_archive(500, &[(100, "x")]);
        let rev_id = *g
            .nodes()
            .find(|(_, n)| n.node_type() == NodeType::Revision)
            .unwrap()
            .0;
        let (ts, origins, mut nodes, prov) = g.clone().into_parts();
        if let Some(Node::Revision(r)) = nodes.get_mut(&rev_id) {
            r.message = "tampered".into();
        }
        let other = ArchiveGraph::from_parts_unverified(ts, origins, nodes, prov);
        assert_eq!(
            merge_append_only(&g, &other),
            Err(ModelError::IntegrityConflict { id: rev_id })
        );
    }
}
