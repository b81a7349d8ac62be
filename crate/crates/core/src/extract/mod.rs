//! Dataset materialization and list reports.
//!
//! [`extract_subgraph`] turns an origin list back into an archive holding
//! just those origins and everything their snapshots reach. [`diff_lists`]
//! and [`forge_stats`] summarize lists, grouped by forge hostname.

mod report;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::OriginList;
use crate::model::{restrict_to_timestamp, ArchiveGraph, NodeMap, Origin, Provenance, Swhid};

pub use report::{render_diff, render_stats, ReportFormat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("origin list does not match the archive at {timestamp}: {detail}")]
    StaleList {
        timestamp: String,
        url: String,
        detail: String,
    },
    #[error("archive is missing node {0} reachable from a retained snapshot")]
    MissingNode(Swhid),
}

/// Builds the dataset graph of `list` as of `t`.
///
/// Retained origins keep every visit at or before `t`. The node store is
/// exactly the set of nodes reachable from the snapshots of those visits.
/// The result keeps the export timestamp of `archive`, so extracting again
/// from a dataset yields the same dataset.
pub fn extract_subgraph(
    archive: &ArchiveGraph,
    list: &OriginList,
    t: i64,
) -> Result<ArchiveGraph, ExtractError> {
    let view = restrict_to_timestamp(archive, t);
    let stale = |url: &str, detail: String| ExtractError::StaleList {
        timestamp: crate::time::format_rfc3339(t),
        url: url.to_string(),
        detail,
    };

    let mut origins = BTreeMap::new();
    let mut frontier: Vec<Swhid> = Vec::new();
    for (url, snapshot) in list.entries() {
        let Some(o) = view.origin(url) else {
            return Err(stale(
                url,
                format!("origin `{url}` has no visit at or before that time"),
            ));
        };
        if o.last_snapshot() != Some(*snapshot) {
            return Err(stale(
                url,
                format!(
                    "origin `{url}` was last captured as {}, the list says {snapshot}",
                    o.last_snapshot().expect("visible origin")
                ),
            ));
        }
        frontier.extend(o.visits().iter().map(|v| v.snapshot));
        origins.insert(
            url.clone(),
            Origin {
                url: url.clone(),
                visits: o.visits().to_vec(),
            },
        );
    }

    let mut nodes = NodeMap::default();
    while let Some(id) = frontier.pop() {
        if nodes.contains_key(&id) {
            continue;
        }
        let node = archive.node(&id).ok_or(ExtractError::MissingNode(id))?;
        frontier.extend(
            node.references()
                .into_iter()
                .filter(|r| !nodes.contains_key(r)),
        );
        nodes.insert(id, node.clone());
    }

    let provenance = Provenance {
        source_export_timestamp: archive
            .provenance()
            .map_or(archive.export_timestamp(), |p| p.source_export_timestamp),
        fingerprint_timestamp: t,
        dataset_hash: list.dataset_hash(),
    };
    let dataset = ArchiveGraph::from_parts_unverified(
        archive.export_timestamp(),
        origins,
        nodes,
        Some(provenance),
    );
    debug_assert!(crate::model::verify_integrity(&dataset).is_ok());
    Ok(dataset)
}

/// Origin list recorded in a dataset graph: each origin with its last
/// visit's snapshot.
pub fn dataset_list(dataset: &ArchiveGraph) -> OriginList {
    OriginList::from_entries(
        dataset
            .origins()
            .filter_map(|o| o.visits.last().map(|v| (o.url.clone(), v.snapshot)))
            .collect(),
    )
}

pub const UNKNOWN_HOST: &str = "(unknown)";

/// Exact hostname of a url, or [`UNKNOWN_HOST`].
pub fn forge_host(url: &str) -> String {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_string))
        .unwrap_or_else(|| UNKNOWN_HOST.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotChange {
    pub url: String,
    pub before: Swhid,
    pub after: Swhid,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForgeDelta {
    pub host: String,
    pub added: usize,
    pub removed: usize,
    pub changed: usize,
}

/// Differences from list `a` to list `b`. All vectors are in url order,
/// `per_forge` in host order and only for hosts with some difference.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListDiff {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub changed: Vec<SnapshotChange>,
    pub per_forge: Vec<ForgeDelta>,
}

impl ListDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }

    /// The diff from `b` to `a`.
    pub fn mirrored(&self) -> ListDiff {
        ListDiff {
            added: self.removed.clone(),
            removed: self.added.clone(),
            changed: self
                .changed
                .iter()
                .map(|c| SnapshotChange {
                    url: c.url.clone(),
                    before: c.after,
                    after: c.before,
                })
                .collect(),
            per_forge: self
                .per_forge
                .iter()
                .map(|d| ForgeDelta {
                    host: d.host.clone(),
                    added: d.removed,
                    removed: d.added,
                    changed: d.changed,
                })
                .collect(),
        }
    }
}

pub fn diff_lists(a: &OriginList, b: &OriginList) -> ListDiff {
    let mut diff = ListDiff::default();
    for (url, before) in a.entries() {
        match b.get(url) {
            None => diff.removed.push(url.clone()),
            Some(after) if after != *before => diff.changed.push(SnapshotChange {
                url: url.clone(),
                before: *before,
                after,
            }),
            Some(_) => {}
        }
    }
    diff.added = b
        .urls()
        .filter(|u| a.get(u).is_none())
        .map(str::to_string)
        .collect();

    let mut forges: BTreeMap<String, ForgeDelta> = BTreeMap::new();
    let mut bump = |url: &str, f: fn(&mut ForgeDelta)| {
        let host = forge_host(url);
        f(forges.entry(host.clone()).or_insert_with(|| ForgeDelta {
            host,
            ..ForgeDelta::default()
        }));
    };
    diff.added.iter().for_each(|u| bump(u, |d| d.added += 1));
    diff.removed
        .iter()
        .for_each(|u| bump(u, |d| d.removed += 1));
    diff.changed
        .iter()
        .for_each(|c| bump(&c.url, |d| d.changed += 1));
    diff.per_forge = forges.into_values().collect();
    diff
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForgeStats {
    /// `(host, count)` by descending count, ties by host.
    pub rows: Vec<(String, usize)>,
    pub total: usize,
}

pub fn forge_stats(list: &OriginList) -> ForgeStats {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for url in list.urls() {
        *counts.entry(forge_host(url)).or_default() += 1;
    }
    let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ForgeStats {
        rows,
        total: list.len(),
    }
}
