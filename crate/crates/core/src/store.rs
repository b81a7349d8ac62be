//! Line-delimited exchange format (`.pvdb.jsonl`).
//!
//! One JSON object per line, discriminated by `kind`. The first line is the
//! `meta` record. Node records carry their identifier, which covers every
//! other field of the record. Origin, visit and meta records are not part of
//! the Merkle DAG, so they carry a `check` digest over their own fields. On
//! load every field must be in canonical form (lowercase hex, `Z`-suffixed
//! timestamps, minimal octal modes), which together with the digests makes
//! any single-byte corruption of a saved file detectable.
//!
//! Saved files are canonical: records are sorted by kind rank and then by
//! identifier, url, or (url, visit timestamp).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};
use thiserror::Error;

use crate::model::{
    parse_lower_hex, verify_integrity, ArchiveGraph, Content, Directory, DirectoryEntry,
    IntegrityReport, IssueKind, Node, NodeMap, Origin, OriginVisit, Provenance, Release, Revision,
    Snapshot, SnapshotBranch, Swhid,
};
use crate::time::{format_rfc3339, parse_rfc3339};

pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = "pvdb.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported format version {version}")]
    UnsupportedVersion { line: usize, version: u32 },
    #[error("line {line}: {what} does not match its check digest")]
    CheckMismatch { line: usize, what: String },
    #[error("conflicting records for {id}")]
    Conflict { id: Swhid },
    #[error("dangling reference to {id} from {referrer}")]
    Closure { id: Swhid, referrer: String },
    #[error("integrity failure at {id}: {report}")]
    Integrity { id: Swhid, report: IntegrityReport },
}

impl StoreError {
    /// True for failures that mean the data itself is damaged or
    /// inconsistent, as opposed to unreadable input.
    pub fn is_integrity(&self) -> bool {
        matches!(
            self,
            StoreError::CheckMismatch { .. }
                | StoreError::Conflict { .. }
                | StoreError::Closure { .. }
                | StoreError::Integrity { .. }
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Meta(MetaRecord),
    Content(ContentRecord),
    Directory(DirectoryRecord),
    Revision(RevisionRecord),
    Release(ReleaseRecord),
    Snapshot(SnapshotRecord),
    Origin(OriginRecord),
    Visit(VisitRecord),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRecord {
    format_version: u32,
    export_date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<ProvenanceRecord>,
    check: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceRecord {
    source_export_date: String,
    fingerprint_date: String,
    dataset_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContentRecord {
    id: Swhid,
    length: u64,
    payload: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    name: String,
    perms: String,
    target: Swhid,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectoryRecord {
    id: Swhid,
    entries: Vec<EntryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RevisionRecord {
    id: Swhid,
    tree: Swhid,
    parents: Vec<Swhid>,
    author: String,
    author_date: String,
    committer: String,
    committer_date: String,
    message: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReleaseRecord {
    id: Swhid,
    name: String,
    target: Swhid,
    date: String,
    message: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchRecord {
    name: String,
    target: Swhid,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotRecord {
    id: Swhid,
    branches: Vec<BranchRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OriginRecord {
    url: String,
    check: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisitRecord {
    origin: String,
    date: String,
    snapshot: Swhid,
    check: String,
}

fn check_digest(kind: &str, fields: &[(&str, &str)]) -> String {
    let mut hasher = Sha1::new();
    hasher.update(kind.as_bytes());
    for (name, value) in fields {
        hasher.update(b"\n");
        hasher.update(name.as_bytes());
        hasher.update(format!(":{}:", value.len()).as_bytes());
        hasher.update(value.as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn meta_check(version: u32, export: i64, provenance: Option<&Provenance>) -> String {
    let version = version.to_string();
    let export = export.to_string();
    let mut fields = vec![
        ("format_version", version.as_str()),
        ("export", export.as_str()),
    ];
    let (src, fp);
    if let Some(p) = provenance {
        src = p.source_export_timestamp.to_string();
        fp = p.fingerprint_timestamp.to_string();
        fields.push(("source_export", &src));
        fields.push(("fingerprint", &fp));
        fields.push(("dataset_hash", &p.dataset_hash));
    }
    check_digest("meta", &fields)
}

fn origin_check(url: &str) -> String {
    check_digest("origin", &[("url", url)])
}

fn visit_check(url: &str, visit: &OriginVisit) -> String {
    check_digest(
        "visit",
        &[
            ("origin", url),
            ("date", &visit.timestamp.to_string()),
            ("snapshot", &visit.snapshot.to_string()),
        ],
    )
}

fn node_record(id: Swhid, node: &Node) -> Record {
    match node {
        Node::Content(c) => Record::Content(ContentRecord {
            id,
            length: c.length,
            payload: hex::encode(c.payload_digest),
        }),
        Node::Directory(d) => Record::Directory(DirectoryRecord {
            id,
            entries: d
                .entries
                .iter()
                .map(|e| EntryRecord {
                    name: e.name.clone(),
                    perms: format!("{:o}", e.perms),
                    target: e.target,
                })
                .collect(),
        }),
        Node::Revision(r) => Record::Revision(RevisionRecord {
            id,
            tree: r.tree,
            parents: r.parents.clone(),
            author: r.author.clone(),
            author_date: format_rfc3339(r.author_timestamp),
            committer: r.committer.clone(),
            committer_date: format_rfc3339(r.committer_timestamp),
            message: r.message.clone(),
        }),
        Node::Release(r) => Record::Release(ReleaseRecord {
            id,
            name: r.name.clone(),
            target: r.target,
            date: format_rfc3339(r.timestamp),
            message: r.message.clone(),
        }),
        Node::Snapshot(s) => Record::Snapshot(SnapshotRecord {
            id,
            branches: s
                .branches
                .iter()
                .map(|b| BranchRecord {
                    name: b.name.clone(),
                    target: b.target,
                })
                .collect(),
        }),
    }
}

fn write_record<W: Write>(out: &mut W, record: &Record) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Writes the canonical serialization of an archive.
pub fn write_archive<W: Write>(archive: &ArchiveGraph, mut out: W) -> std::io::Result<()> {
    let export = archive.export_timestamp();
    let meta = MetaRecord {
        format_version: FORMAT_VERSION,
        export_date: format_rfc3339(export),
        provenance: archive.provenance().map(|p| ProvenanceRecord {
            source_export_date: format_rfc3339(p.source_export_timestamp),
            fingerprint_date: format_rfc3339(p.fingerprint_timestamp),
            dataset_hash: p.dataset_hash.clone(),
        }),
        check: meta_check(FORMAT_VERSION, export, archive.provenance()),
    };
    write_record(&mut out, &Record::Meta(meta))?;
    for id in archive.sorted_ids() {
        let node = archive.node(&id).expect("sorted_ids yields stored ids");
        write_record(&mut out, &node_record(id, node))?;
    }
    for origin in archive.origins() {
        write_record(
            &mut out,
            &Record::Origin(OriginRecord {
                url: origin.url.clone(),
                check: origin_check(&origin.url),
            }),
        )?;
    }
    for origin in archive.origins() {
        for visit in &origin.visits {
            write_record(
                &mut out,
                &Record::Visit(VisitRecord {
                    origin: origin.url.clone(),
                    date: format_rfc3339(visit.timestamp),
                    snapshot: visit.snapshot,
                    check: visit_check(&origin.url, visit),
                }),
            )?;
        }
    }
    out.flush()
}

pub fn to_canonical_bytes(archive: &ArchiveGraph) -> Vec<u8> {
    let mut buf = Vec::new();
    write_archive(archive, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn save_archive(archive: &ArchiveGraph, path: &Path) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_archive(archive, BufWriter::new(file)).map_err(io_err)
}

pub fn load_archive(path: &Path) -> Result<ArchiveGraph, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_archive(BufReader::new(file)).map_err(|e| match e {
        StoreError::Io { source, .. } => StoreError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

struct Loader {
    nodes: NodeMap,
    declared: BTreeMap<String, ()>,
    visits: BTreeMap<String, BTreeMap<i64, (Swhid, usize)>>,
}

fn parse_err(line: usize, message: impl Into<String>) -> StoreError {
    StoreError::Parse {
        line,
        message: message.into(),
    }
}

fn timestamp(line: usize, field: &str, text: &str) -> Result<i64, StoreError> {
    parse_rfc3339(text).ok_or_else(|| {
        parse_err(
            line,
            format!("`{field}` is not a canonical RFC 3339 UTC timestamp: `{text}`"),
        )
    })
}

fn perms(line: usize, text: &str) -> Result<u32, StoreError> {
    u32::from_str_radix(text, 8)
        .ok()
        .filter(|p| format!("{p:o}") == text)
        .ok_or_else(|| parse_err(line, format!("invalid octal mode `{text}`")))
}

fn record_node(line: usize, record: Record) -> Result<Option<(Swhid, Node)>, StoreError> {
    Ok(Some(match record {
        Record::Content(r) => {
            let payload_digest = parse_lower_hex::<32>(&r.payload)
                .ok_or_else(|| parse_err(line, "payload must be 64 lowercase hex digits"))?;
            (
                r.id,
                Node::Content(Content {
                    length: r.length,
                    payload_digest,
                }),
            )
        }
        Record::Directory(r) => {
            let mut entries = Vec::with_capacity(r.entries.len());
            for e in r.entries {
                entries.push(DirectoryEntry {
                    perms: perms(line, &e.perms)?,
                    name: e.name,
                    target: e.target,
                });
            }
            (r.id, Node::Directory(Directory { entries }))
        }
        Record::Revision(r) => (
            r.id,
            Node::Revision(Revision {
                tree: r.tree,
                parents: r.parents,
                author: r.author,
                author_timestamp: timestamp(line, "author_date", &r.author_date)?,
                committer: r.committer,
                committer_timestamp: timestamp(line, "committer_date", &r.committer_date)?,
                message: r.message,
            }),
        ),
        Record::Release(r) => (
            r.id,
            Node::Release(Release {
                name: r.name,
                target: r.target,
                timestamp: timestamp(line, "date", &r.date)?,
                message: r.message,
            }),
        ),
        Record::Snapshot(r) => (
            r.id,
            Node::Snapshot(Snapshot {
                branches: r
                    .branches
                    .into_iter()
                    .map(|b| SnapshotBranch {
                        name: b.name,
                        target: b.target,
                    })
                    .collect(),
            }),
        ),
        Record::Meta(_) | Record::Origin(_) | Record::Visit(_) => return Ok(None),
    }))
}

impl Loader {
    fn add(&mut self, line: usize, record: Record) -> Result<(), StoreError> {
        match record {
            Record::Meta(_) => Err(parse_err(line, "duplicate meta record")),
            Record::Origin(r) => {
                if r.url.is_empty() {
                    return Err(parse_err(line, "empty origin url"));
                }
                if r.check != origin_check(&r.url) {
                    return Err(StoreError::CheckMismatch {
                        line,
                        what: format!("origin `{}`", r.url),
                    });
                }
                self.declared.insert(r.url, ());
                Ok(())
            }
            Record::Visit(r) => {
                let visit = OriginVisit {
                    timestamp: timestamp(line, "date", &r.date)?,
                    snapshot: r.snapshot,
                };
                if r.check != visit_check(&r.origin, &visit) {
                    return Err(StoreError::CheckMismatch {
                        line,
                        what: format!("visit of `{}`", r.origin),
                    });
                }
                let history = self.visits.entry(r.origin.clone()).or_default();
                match history.get(&visit.timestamp) {
                    Some((s, _)) if *s == visit.snapshot => Ok(()),
                    Some((_, first)) => Err(parse_err(
                        line,
                        format!(
                            "origin `{}` has two visits at {} (first on line {first})",
                            r.origin, r.date
                        ),
                    )),
                    None => {
                        history.insert(visit.timestamp, (visit.snapshot, line));
                        Ok(())
                    }
                }
            }
            node_record => {
                let (id, node) = record_node(line, node_record)?.expect("node record");
                match self.nodes.get(&id) {
                    Some(existing) if *existing != node => Err(StoreError::Conflict { id }),
                    Some(_) => Ok(()),
                    None => {
                        self.nodes.insert(id, node);
                        Ok(())
                    }
                }
            }
        }
    }
}

/// Parses an exchange stream. Record order after the meta line does not
/// matter; the result is verified before it is returned.
pub fn read_archive<R: BufRead>(reader: R) -> Result<ArchiveGraph, StoreError> {
    let mut meta: Option<(i64, Option<Provenance>)> = None;
    let mut loader = Loader {
        nodes: NodeMap::default(),
        declared: BTreeMap::new(),
        visits: BTreeMap::new(),
    };
    let mut bytes = Vec::new();
    let mut reader = reader;
    reader
        .read_to_end(&mut bytes)
        .map_err(|source| StoreError::Io {
            path: PathBuf::new(),
            source,
        })?;
    let text = std::str::from_utf8(&bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|b| **b == b'\n')
            .count()
            + 1;
        parse_err(line, "invalid UTF-8")
    })?;
    if !text.is_empty() && !text.ends_with('\n') {
        let line = text.lines().count();
        return Err(parse_err(line, "missing final newline"));
    }
    for (index, raw) in text.split_terminator('\n').enumerate() {
        let line = index + 1;
        let record: Record =
            serde_json::from_str(raw).map_err(|e| parse_err(line, e.to_string()))?;
        match (&meta, record) {
            (None, Record::Meta(m)) => {
                if m.format_version != FORMAT_VERSION {
                    return Err(StoreError::UnsupportedVersion {
                        line,
                        version: m.format_version,
                    });
                }
                let export = timestamp(line, "export_date", &m.export_date)?;
                let provenance = match m.provenance {
                    None => None,
                    Some(p) => {
                        if parse_lower_hex::<32>(&p.dataset_hash).is_none() {
                            return Err(parse_err(
                                line,
                                "dataset_hash must be 64 lowercase hex digits",
                            ));
                        }
                        Some(Provenance {
                            source_export_timestamp: timestamp(
                                line,
                                "source_export_date",
                                &p.source_export_date,
                            )?,
                            fingerprint_timestamp: timestamp(
                                line,
                                "fingerprint_date",
                                &p.fingerprint_date,
                            )?,
                            dataset_hash: p.dataset_hash,
                        })
                    }
                };
                if m.check != meta_check(m.format_version, export, provenance.as_ref()) {
                    return Err(StoreError::CheckMismatch {
                        line,
                        what: "meta record".into(),
                    });
                }
                meta = Some((export, provenance));
            }
            (None, _) => return Err(parse_err(line, "the first record must be `meta`")),
            (Some(_), record) => loader.add(line, record)?,
        }
    }
    let Some((export, provenance)) = meta else {
        return Err(parse_err(1, "empty file: missing meta record"));
    };

    let mut origins = BTreeMap::new();
    for url in loader.declared.keys() {
        origins.insert(
            url.clone(),
            Origin {
                url: url.clone(),
                visits: Vec::new(),
            },
        );
    }
    for (url, history) in loader.visits {
        let Some(origin) = origins.get_mut(&url) else {
            let line = history.values().map(|(_, l)| *l).min().unwrap_or(0);
            return Err(parse_err(
                line,
                format!("visit of undeclared origin `{url}`"),
            ));
        };
        origin.visits = history
            .into_iter()
            .map(|(timestamp, (snapshot, _))| OriginVisit {
                timestamp,
                snapshot,
            })
            .collect();
    }

    let archive = ArchiveGraph::from_parts_unverified(export, origins, loader.nodes, provenance);
    let report = verify_integrity(&archive);
    if let Some(first) = report.issues.first().cloned() {
        let only_dangling = report
            .issues
            .iter()
            .all(|i| matches!(i.kind, IssueKind::DanglingReference { .. }));
        return Err(match (only_dangling, first.kind) {
            (true, IssueKind::DanglingReference { referrer }) => StoreError::Closure {
                id: first.id,
                referrer,
            },
            _ => {
                let id = report
                    .issues
                    .iter()
                    .find(|i| !matches!(i.kind, IssueKind::DanglingReference { .. }))
                    .map(|i| i.id)
                    .unwrap_or(first.id);
                StoreError::Integrity { id, report }
            }
        });
    }
    Ok(archive)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ArchiveGraph, StoreError> {
    read_archive(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArchiveBuilder;

    fn sample() -> ArchiveGraph {
        let mut b = ArchiveBuilder::new(1_000);
        let cnt = b
            .add_node(Content {
                length: 5,
                payload_digest: [3; 32],
            })
            .unwrap();
        let dir = b
            .add_node(Directory::from_unsorted(vec![DirectoryEntry {
                name: "AndroidManifest.xml".into(),
                target: cnt,
                perms: DirectoryEntry::FILE,
            }]))
            .unwrap();
        let rev = b
            .add_node(Revision {
                tree: dir,
                parents: vec![],
                author: "a".into(),
                author_timestamp: 10,
                committer: "c".into(),
                committer_timestamp: 11,
                message: "msg \"quoted\"\n".into(),
            })
            .unwrap();
        let rel = b
            .add_node(Release {
                name: "v1".into(),
                target: rev,
                message: "".into(),
                timestamp: 12,
            })
            .unwrap();
        let snp = b
            .add_node(Snapshot::from_unsorted(vec![
                SnapshotBranch {
                    name: "refs/heads/main".into(),
                    target: rev,
                },
                SnapshotBranch {
                    name: "refs/tags/v1".into(),
                    target: rel,
                },
            ]))
            .unwrap();
        b.add_visit("https://github.com/a/b", 100, snp);
        b.add_visit("https://gitlab.com/c/d", 200, snp);
        b.build().unwrap()
    }

    #[test]
    fn meta_only_file_is_empty_archive() {
        let bytes = to_canonical_bytes(&ArchiveGraph::empty(42));
        assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), 1);
        let a = from_bytes(&bytes).unwrap();
        assert_eq!(a.export_timestamp(), 42);
        assert_eq!(a.node_count(), 0);
    }

    #[test]
    fn roundtrip_is_identity() {
        let a = sample();
        let bytes = to_canonical_bytes(&a);
        let b = from_bytes(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_canonical_bytes(&b), bytes);
    }

    #[test]
    fn shuffled_records_load_to_same_archive() {
        let bytes = to_canonical_bytes(&sample());
        let text = String::from_utf8(bytes.clone()).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let shuffled = lines.join("\n") + "\n";
        assert_eq!(from_bytes(shuffled.as_bytes()).unwrap(), sample());
    }

    #[test]
    fn unknown_version_is_hard_error() {
        let text = String::from_utf8(to_canonical_bytes(&sample())).unwrap();
        let bumped = text.replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert!(matches!(
            from_bytes(bumped.as_bytes()),
            Err(StoreError::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = String::from_utf8(to_canonical_bytes(&sample())).unwrap();
        let extra = text.replacen("{\"kind\":\"origin\",", "{\"kind\":\"origin\",\"x\":1,", 1);
        assert!(matches!(
            from_bytes(extra.as_bytes()),
            Err(StoreError::Parse { .. })
        ));
    }

    #[test]
    fn missing_node_is_closure_error() {
        let text = String::from_utf8(to_canonical_bytes(&sample())).unwrap();
        let without_content: String = text
            .lines()
            .filter(|l| !l.contains("\"kind\":\"content\""))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            from_bytes(without_content.as_bytes()),
            Err(StoreError::Closure { .. })
        ));
    }

    #[test]
    fn conflicting_duplicate_is_conflict() {
        let text = String::from_utf8(to_canonical_bytes(&sample())).unwrap();
        let rev_line = text
            .lines()
            .find(|l| l.contains("\"kind\":\"revision\""))
            .unwrap();
        let altered = rev_line.replace("\"author\":\"a\"", "\"author\":\"z\"");
        let doubled = format!("{text}{altered}\n");
        assert!(matches!(
            from_bytes(doubled.as_bytes()),
            Err(StoreError::Conflict { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = String::from_utf8(to_canonical_bytes(&sample())).unwrap();
        let broken = text.replacen("{\"kind\":\"origin\"", "{\"kind\":\"origin\"}", 1);
        let line = text
            .lines()
            .position(|l| l.contains("\"kind\":\"origin\""))
            .unwrap()
            + 1;
        match from_bytes(broken.as_bytes()) {
            Err(StoreError::Parse { line: l, .. }) => assert_eq!(l, line),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_single_byte_flip_is_detected() {
        let bytes = to_canonical_bytes(&sample());
        for pos in 0..bytes.len() {
            for mask in [0x01u8, 0x20, 0x80, 0x0f] {
                let mut damaged = bytes.clone();
                damaged[pos] ^= mask;
                assert!(
                    from_bytes(&damaged).is_err(),
                    "flip {mask:#x} at {pos} undetected"
                );
            }
        }
    }
}
