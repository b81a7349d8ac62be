//! Canonical manifests and identifier computation.
//!
//! A manifest starts with the three-byte type tag and a newline, followed by
//! `name:len:value` fields separated by `\n`, where `len` is the decimal byte
//! length of `value`. List fields contribute one field per element in stored
//! order. A child reference is written as its 40-hex digest followed by a
//! one-byte type tag. The node identifier is the SHA-1 of the manifest.

use sha1::{Digest, Sha1};

use super::node::{Content, Directory, Node, Release, Revision, Snapshot};
use super::swhid::{NodeType, Swhid};
use super::ModelError;

struct ManifestWriter {
    buf: Vec<u8>,
}

impl ManifestWriter {
    fn new(node_type: NodeType) -> Self {
        let mut buf = Vec::with_capacity(256);
        buf.extend_from_slice(node_type.tag().as_bytes());
        buf.push(b'\n');
        ManifestWriter { buf }
    }

    fn field(&mut self, name: &str, value: &[u8]) {
        if self.buf.len() > 4 {
            self.buf.push(b'\n');
        }
        self.buf.extend_from_slice(name.as_bytes());
        self.buf.push(b':');
        self.buf
            .extend_from_slice(value.len().to_string().as_bytes());
        self.buf.push(b':');
        self.buf.extend_from_slice(value);
    }
}

fn reference(id: &Swhid) -> Vec<u8> {
    let mut out = id.digest_hex().into_bytes();
    out.push(id.node_type().short_tag());
    out
}

fn invalid(kind: NodeType, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidNode {
        kind,
        reason: reason.into(),
    }
}

fn check_sorted<'a>(
    kind: NodeType,
    what: &str,
    names: impl Iterator<Item = &'a str>,
) -> Result<(), ModelError> {
    let mut prev: Option<&str> = None;
    for name in names {
        if let Some(p) = prev {
            match p.as_bytes().cmp(name.as_bytes()) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => {
                    return Err(invalid(kind, format!("duplicate {what} name `{name}`")))
                }
                std::cmp::Ordering::Greater => {
                    return Err(invalid(kind, format!("{what} `{name}` is out of order")))
                }
            }
        }
        prev = Some(name);
    }
    Ok(())
}

/// Checks the per-type structural invariants of a node record.
pub fn validate_node(node: &Node) -> Result<(), ModelError> {
    match node {
        Node::Content(_) => Ok(()),
        Node::Directory(d) => {
            for e in &d.entries {
                if e.name.is_empty() || e.name.contains('/') || e.name == "." || e.name == ".." {
                    return Err(invalid(
                        NodeType::Directory,
                        format!("illegal entry name `{}`", e.name),
                    ));
                }
                if !matches!(
                    e.target.node_type(),
                    NodeType::Directory | NodeType::Content | NodeType::Revision
                ) {
                    return Err(invalid(
                        NodeType::Directory,
                        format!("entry `{}` targets a {}", e.name, e.target.node_type()),
                    ));
                }
            }
            check_sorted(
                NodeType::Directory,
                "entry",
                d.entries.iter().map(|e| e.name.as_str()),
            )
        }
        Node::Revision(r) => {
            if r.tree.node_type() != NodeType::Directory {
                return Err(invalid(NodeType::Revision, "tree must be a directory"));
            }
            if r.parents
                .iter()
                .any(|p| p.node_type() != NodeType::Revision)
            {
                return Err(invalid(NodeType::Revision, "parents must be revisions"));
            }
            Ok(())
        }
        Node::Release(r) => {
            if r.target.node_type() == NodeType::Snapshot {
                return Err(invalid(
                    NodeType::Release,
                    "release cannot target a snapshot",
                ));
            }
            Ok(())
        }
        Node::Snapshot(s) => {
            if s.branches.iter().any(|b| b.name.is_empty()) {
                return Err(invalid(NodeType::Snapshot, "empty branch name"));
            }
            if let Some(b) = s
                .branches
                .iter()
                .find(|b| !matches!(b.target.node_type(), NodeType::Revision | NodeType::Release))
            {
                return Err(invalid(
                    NodeType::Snapshot,
                    format!("branch `{}` targets a {}", b.name, b.target.node_type()),
                ));
            }
            check_sorted(
                NodeType::Snapshot,
                "branch",
                s.branches.iter().map(|b| b.name.as_str()),
            )
        }
    }
}

fn content_manifest(c: &Content) -> Vec<u8> {
    let mut w = ManifestWriter::new(NodeType::Content);
    w.field("length", c.length.to_string().as_bytes());
    w.field("payload", hex::encode(c.payload_digest).as_bytes());
    w.buf
}

fn directory_manifest(d: &Directory) -> Vec<u8> {
    let mut w = ManifestWriter::new(NodeType::Directory);
    for e in &d.entries {
        let mut value = format!("{:o} {} ", e.perms, e.target.node_type().tag()).into_bytes();
        value.extend_from_slice(&reference(&e.target));
        value.push(b' ');
        value.extend_from_slice(e.name.as_bytes());
        w.field("entry", &value);
    }
    w.buf
}

fn revision_manifest(r: &Revision) -> Vec<u8> {
    let mut w = ManifestWriter::new(NodeType::Revision);
    w.field("tree", &reference(&r.tree));
    for p in &r.parents {
        w.field("parent", &reference(p));
    }
    w.field("author", r.author.as_bytes());
    w.field("author_ts", r.author_timestamp.to_string().as_bytes());
    w.field("committer", r.committer.as_bytes());
    w.field("committer_ts", r.committer_timestamp.to_string().as_bytes());
    w.field("message", r.message.as_bytes());
    w.buf
}

fn release_manifest(r: &Release) -> Vec<u8> {
    let mut w = ManifestWriter::new(NodeType::Release);
    w.field("name", r.name.as_bytes());
    w.field("target_type", r.target.node_type().tag().as_bytes());
    w.field("target", &reference(&r.target));
    w.field("timestamp", r.timestamp.to_string().as_bytes());
    w.field("message", r.message.as_bytes());
    w.buf
}

fn snapshot_manifest(s: &Snapshot) -> Vec<u8> {
    let mut w = ManifestWriter::new(NodeType::Snapshot);
    for b in &s.branches {
        let mut value = format!("{} ", b.target.node_type().tag()).into_bytes();
        value.extend_from_slice(&reference(&b.target));
        value.push(b' ');
        value.extend_from_slice(b.name.as_bytes());
        w.field("branch", &value);
    }
    w.buf
}

/// The exact byte string that is hashed to obtain the node identifier.
pub fn manifest(node: &Node) -> Result<Vec<u8>, ModelError> {
    validate_node(node)?;
    Ok(match node {
        Node::Content(c) => content_manifest(c),
        Node::Directory(d) => directory_manifest(d),
        Node::Revision(r) => revision_manifest(r),
        Node::Release(r) => release_manifest(r),
        Node::Snapshot(s) => snapshot_manifest(s),
    })
}

/// Computes the intrinsic identifier of a node. Unsorted or duplicate
/// entries and branches are an error; they are never re-sorted here.
pub fn compute_swhid(node: &Node) -> Result<Swhid, ModelError> {
    let bytes = manifest(node)?;
    let digest: [u8; 20] = Sha1::digest(&bytes).into();
    Ok(Swhid::new(node.node_type(), digest))
}
