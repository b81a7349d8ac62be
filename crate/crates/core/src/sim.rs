//! Deterministic synthesizer of evolving, append-only archive series.
//!
//! Every origin's full history is a pure function of `(seed, origin index)`;
//! every random choice made while building visit `j` of origin `i` comes from
//! a generator keyed by `(seed, i, j)`. Exports are then cut from these
//! histories by visit timestamp, so a later export always contains an
//! earlier one, and generation order (or parallelism) never matters.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    compute_swhid, ArchiveBuilder, ArchiveGraph, Content, Directory, DirectoryEntry, ModelError,
    Node, Release, Revision, Snapshot, SnapshotBranch, Swhid,
};

/// Probability that a new revision also records a second (merge) parent.
pub const MERGE_PROBABILITY: f64 = 0.1;
const TAG_PROBABILITY: f64 = 0.3;
const TREE_TAG_PROBABILITY: f64 = 0.05;
const SIDE_BRANCH_PROBABILITY: f64 = 0.3;
const RENAME_DEFAULT_BRANCH_PROBABILITY: f64 = 0.03;

const AUTHORS: [&str; 6] = [
    "Ada Lovelace <ada@example.org>",
    "Alan Turing <alan@example.org>",
    "Grace Hopper <grace@example.org>",
    "Edsger Dijkstra <ewd@example.org>",
    "Barbara Liskov <liskov@example.org>",
    "Ken Thompson <ken@example.org>",
];
const MESSAGES: [&str; 6] = [
    "Fix build",
    "Update dependencies",
    "Add tests",
    "Refactor module layout",
    "Improve error messages",
    "Bump version",
];
const OWNERS: [&str; 5] = ["acme", "octo", "lab", "foss", "dev"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForgeHost {
    pub host: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub seed: u64,
    pub origin_count: usize,
    pub forge_hosts: Vec<ForgeHost>,
    /// Inclusive `[start, end]` in unix seconds.
    pub time_range: (i64, i64),
    pub visits_per_origin: (u32, u32),
    pub revisions_per_visit: (u32, u32),
    pub marker_file_probability: f64,
    #[serde(default = "default_marker")]
    pub marker_file_name: String,
    pub branch_name_pool: Vec<String>,
}

fn default_marker() -> String {
    "AndroidManifest.xml".to_string()
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            seed: 0,
            origin_count: 20,
            forge_hosts: vec![
                ForgeHost {
                    host: "github.com".into(),
                    weight: 0.7,
                },
                ForgeHost {
                    host: "gitlab.com".into(),
                    weight: 0.2,
                },
                ForgeHost {
                    host: "bitbucket.org".into(),
                    weight: 0.1,
                },
            ],
            time_range: (1_388_534_400, 1_672_531_200),
            visits_per_origin: (1, 5),
            revisions_per_visit: (1, 20),
            marker_file_probability: 0.3,
            marker_file_name: default_marker(),
            branch_name_pool: vec![
                "refs/heads/master".into(),
                "refs/heads/main".into(),
                "refs/heads/develop".into(),
            ],
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("invalid export times: {0}")]
    InvalidExportTimes(String),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("cannot read parameters from {path}: {message}")]
    Config { path: String, message: String },
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidParams(m.to_string()));
        if !(0.0..=1.0).contains(&self.marker_file_probability) {
            return bad("marker_file_probability must lie in [0, 1]");
        }
        if self.time_range.0 > self.time_range.1 {
            return bad("time_range start is after its end");
        }
        if self.visits_per_origin.0 > self.visits_per_origin.1 {
            return bad("visits_per_origin min exceeds max");
        }
        if self.revisions_per_visit.0 > self.revisions_per_visit.1 {
            return bad("revisions_per_visit min exceeds max");
        }
        if self.branch_name_pool.is_empty() || self.branch_name_pool.iter().any(|b| b.is_empty()) {
            return bad("branch_name_pool must hold non-empty names");
        }
        if self
            .forge_hosts
            .iter()
            .any(|h| !(h.weight >= 0.0) || !h.weight.is_finite())
        {
            return bad("forge host weights must be finite and non-negative");
        }
        if self.origin_count > 0 && self.forge_hosts.iter().map(|h| h.weight).sum::<f64>() <= 0.0 {
            return bad("forge host weights must not all be zero");
        }
        if self
            .forge_hosts
            .iter()
            .any(|h| h.host.is_empty() || h.host.contains('/'))
        {
            return bad("forge host names must be non-empty and contain no `/`");
        }
        if self.marker_file_name.is_empty() || self.marker_file_name.contains('/') {
            return bad("marker_file_name must be a plain file name");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| SimError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Generator for one `(seed, origin, stream)` key. Stream `u64::MAX` holds
/// origin-level choices; stream `j` holds the choices of visit `j`.
fn keyed_rng(seed: u64, origin: u64, stream: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"pvdb-forge-sim");
    hasher.update(seed.to_le_bytes());
    hasher.update(origin.to_le_bytes());
    hasher.update(stream.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

const ORIGIN_STREAM: u64 = u64::MAX;

fn payload(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    hasher.finalize().into()
}

/// A node together with the index of the first visit whose snapshot
/// reaches it.
struct Born {
    id: Swhid,
    node: Node,
    visit: usize,
}

struct OriginHistory {
    url: String,
    visits: Vec<(i64, Swhid)>,
    nodes: Vec<Born>,
}

struct HistoryWriter {
    nodes: Vec<Born>,
    visit: usize,
}

impl HistoryWriter {
    fn add(&mut self, node: impl Into<Node>) -> Swhid {
        let node = node.into();
        let id = compute_swhid(&node).expect("synthesized nodes are well formed");
        self.nodes.push(Born {
            id,
            node,
            visit: self.visit,
        });
        id
    }

    fn file(&mut self, parts: &[&[u8]], length: u64) -> Swhid {
        self.add(Content {
            length,
            payload_digest: payload(parts),
        })
    }

    fn dir(&mut self, entries: Vec<(String, Swhid)>) -> Swhid {
        let entries = entries
            .into_iter()
            .map(|(name, target)| DirectoryEntry {
                perms: if target.node_type() == crate::model::NodeType::Directory {
                    DirectoryEntry::DIR
                } else {
                    DirectoryEntry::FILE
                },
                name,
                target,
            })
            .collect();
        self.add(Directory::from_unsorted(entries))
    }
}

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, hosts: &'a [ForgeHost]) -> &'a str {
    let total: f64 = hosts.iter().map(|h| h.weight).sum();
    let mut x = rng.random::<f64>() * total;
    for h in hosts {
        if x < h.weight {
            return &h.host;
        }
        x -= h.weight;
    }
    &hosts
        .iter()
        .rev()
        .find(|h| h.weight > 0.0)
        .expect("positive weight")
        .host
}

fn generate_origin(params: &SimParams, index: usize, horizon: i64) -> OriginHistory {
    let seed = params.seed;
    let idx = index as u64;
    let mut rng = keyed_rng(seed, idx, ORIGIN_STREAM);
    let host = pick_weighted(&mut rng, &params.forge_hosts).to_string();
    let owner = OWNERS[rng.random_range(0..OWNERS.len())];
    let url = format!("https://{host}/{owner}/repo-{index}");
    let mut default_branch =
        params.branch_name_pool[rng.random_range(0..params.branch_name_pool.len())].clone();
    let has_marker = rng.random_bool(params.marker_file_probability);
    let nested_marker = rng.random_bool(0.5);

    let (start, end) = params.time_range;
    let visit_count =
        rng.random_range(params.visits_per_origin.0..=params.visits_per_origin.1) as usize;
    let mut times = Vec::with_capacity(visit_count);
    if visit_count > 0 {
        let first = rng.random_range(start..=end);
        times.push(first);
        for _ in 1..visit_count {
            if first < end {
                times.push(rng.random_range(first + 1..=end));
            }
        }
        times.sort_unstable();
        times.dedup();
    }
    let created = match times.first() {
        Some(first) => rng.random_range(start..=*first),
        None => start,
    };

    let mut w = HistoryWriter {
        nodes: Vec::new(),
        visit: 0,
    };
    let license = w.file(&[b"LICENSE"], 11_357);
    let util = w.file(&[b"util", &idx.to_le_bytes()], 640);
    let marker = has_marker.then(|| {
        w.file(
            &[params.marker_file_name.as_bytes(), &idx.to_le_bytes()],
            1_024,
        )
    });

    let mut revisions: Vec<Swhid> = Vec::new();
    let mut tags: Vec<SnapshotBranch> = Vec::new();
    let mut side_branch: Option<SnapshotBranch> = None;
    let mut visits = Vec::new();
    let mut prev_time = created;

    for (j, &visit_time) in times.iter().enumerate() {
        if visit_time > horizon {
            break;
        }
        w.visit = j;
        let mut vrng = keyed_rng(seed, idx, j as u64);
        let jb = (j as u64).to_le_bytes();

        let readme = w.file(&[b"README", &idx.to_le_bytes(), &jb], 200 + j as u64);
        let lib = w.file(&[b"lib", &idx.to_le_bytes(), &jb], 4_000 + 10 * j as u64);
        let src = w.dir(vec![("lib.rs".into(), lib), ("util.rs".into(), util)]);
        let mut root = vec![
            ("LICENSE".to_string(), license),
            ("README.md".to_string(), readme),
            ("src".to_string(), src),
        ];
        if let Some(m) = marker {
            if nested_marker {
                let main = w.dir(vec![(params.marker_file_name.clone(), m)]);
                let app_src = w.dir(vec![("main".into(), main)]);
                let app = w.dir(vec![("src".into(), app_src)]);
                root.push(("app".into(), app));
            } else {
                root.push((params.marker_file_name.clone(), m));
            }
        }
        let tree = w.dir(root);

        let mut growth =
            vrng.random_range(params.revisions_per_visit.0..=params.revisions_per_visit.1) as usize;
        if revisions.is_empty() {
            growth = growth.max(1);
        }
        let span = (visit_time - prev_time).max(0);
        for k in 0..growth {
            let committer_ts = prev_time + span * (k as i64 + 1) / (growth as i64 + 1);
            let mut parents: Vec<Swhid> = revisions.last().copied().into_iter().collect();
            if revisions.len() >= 2 && vrng.random_bool(MERGE_PROBABILITY) {
                parents.push(revisions[vrng.random_range(0..revisions.len() - 1)]);
            }
            let author = AUTHORS[vrng.random_range(0..AUTHORS.len())];
            let committer = AUTHORS[vrng.random_range(0..AUTHORS.len())];
            let message = MESSAGES[vrng.random_range(0..MESSAGES.len())];
            let rev = w.add(Revision {
                tree,
                parents,
                author: author.into(),
                author_timestamp: committer_ts - vrng.random_range(0..3_600),
                committer: committer.into(),
                committer_timestamp: committer_ts,
                message: format!("{message}\n"),
            });
            revisions.push(rev);
        }
        let head = *revisions.last().expect("at least one revision");

        if j > 0 && vrng.random_bool(RENAME_DEFAULT_BRANCH_PROBABILITY) {
            default_branch = params.branch_name_pool
                [vrng.random_range(0..params.branch_name_pool.len())]
            .clone();
        }
        if vrng.random_bool(SIDE_BRANCH_PROBABILITY) {
            let name = params.branch_name_pool[vrng.random_range(0..params.branch_name_pool.len())]
                .clone();
            let target = revisions[vrng.random_range(0..revisions.len())];
            side_branch = Some(SnapshotBranch { name, target });
        }
        if vrng.random_bool(TAG_PROBABILITY) {
            let name = format!("v0.{j}");
            let target = if vrng.random_bool(TREE_TAG_PROBABILITY) {
                tree
            } else {
                head
            };
            let rel = w.add(Release {
                name: name.clone(),
                target,
                message: format!("Release {name}\n"),
                timestamp: visit_time,
            });
            tags.push(SnapshotBranch {
                name: format!("refs/tags/{name}"),
                target: rel,
            });
        }

        let mut branches = vec![SnapshotBranch {
            name: default_branch.clone(),
            target: head,
        }];
        if let Some(side) = &side_branch {
            if side.name != default_branch {
                branches.push(side.clone());
            }
        }
        branches.extend(tags.iter().cloned());
        let snapshot = w.add(Snapshot::from_unsorted(branches));
        visits.push((visit_time, snapshot));
        prev_time = visit_time;
    }

    OriginHistory {
        url,
        visits,
        nodes: w.nodes,
    }
}

/// Builds one archive per export time. For `i < j`, export `i` is contained
/// in export `j`.
pub fn synthesize(params: &SimParams, export_times: &[i64]) -> Result<Vec<ArchiveGraph>, SimError> {
    params.validate()?;
    if export_times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::InvalidExportTimes(
            "must be strictly increasing".into(),
        ));
    }
    let (start, end) = params.time_range;
    if let Some(t) = export_times.iter().find(|t| **t < start || **t > end) {
        return Err(SimError::InvalidExportTimes(format!(
            "{t} lies outside the time range [{start}, {end}]"
        )));
    }
    let Some(&horizon) = export_times.last() else {
        return Ok(Vec::new());
    };
    let histories: Vec<OriginHistory> = (0..params.origin_count)
        .into_par_iter()
        .map(|i| generate_origin(params, i, horizon))
        .collect();

    export_times
        .iter()
        .map(|&export| {
            let mut builder = ArchiveBuilder::new(export);
            for history in &histories {
                let visible = history
                    .visits
                    .iter()
                    .take_while(|(t, _)| *t <= export)
                    .count();
                if visible == 0 {
                    continue;
                }
                for born in history.nodes.iter().filter(|b| b.visit < visible) {
                    builder.insert_node(born.id, born.node.clone())?;
                }
                for (t, snapshot) in &history.visits[..visible] {
                    builder.add_visit(history.url.clone(), *t, *snapshot);
                }
            }
            Ok(builder.build()?)
        })
        .collect()
}
