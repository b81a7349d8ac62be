//! Node records of the archive graph.
//!
//! File contents are never stored; a [`Content`] only carries the length and
//! a digest of the bytes it stands for.

use super::swhid::{NodeType, Swhid};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Content {
    pub length: u64,
    pub payload_digest: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectoryEntry {
    pub name: String,
    pub target: Swhid,
    /// Octal file mode, e.g. `0o100644`.
    pub perms: u32,
}

impl DirectoryEntry {
    pub const FILE: u32 = 0o100644;
    pub const DIR: u32 = 0o040000;
}

/// Entries must be sorted bytewise by name and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Directory {
    pub entries: Vec<DirectoryEntry>,
}

impl Directory {
    /// Builds a directory from entries in any order. Names must still be
    /// unique; ordering is fixed here rather than in the hashing code.
    pub fn from_unsorted(mut entries: Vec<DirectoryEntry>) -> Self {
        entries.sort_by(|a, b| a.name.as_bytes().cmp(b.name.as_bytes()));
        Directory { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Revision {
    pub tree: Swhid,
    pub parents: Vec<Swhid>,
    pub author: String,
    pub author_timestamp: i64,
    pub committer: String,
    pub committer_timestamp: i64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Release {
    pub name: String,
    pub target: Swhid,
    pub message: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SnapshotBranch {
    pub name: String,
    pub target: Swhid,
}

/// Branches must be sorted bytewise by name and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Snapshot {
    pub branches: Vec<SnapshotBranch>,
}

impl Snapshot {
    pub fn from_unsorted(mut branches: Vec<SnapshotBranch>) -> Self {
        branches.sort_by(|a, b| a.name.as_bytes().cmp(b.name.as_bytes()));
        Snapshot { branches }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Content(Content),
    Directory(Directory),
    Revision(Revision),
    Release(Release),
    Snapshot(Snapshot),
}

impl Node {
    pub fn node_type(&self) -> NodeType {
        match self {
            Node::Content(_) => NodeType::Content,
            Node::Directory(_) => NodeType::Directory,
            Node::Revision(_) => NodeType::Revision,
            Node::Release(_) => NodeType::Release,
            Node::Snapshot(_) => NodeType::Snapshot,
        }
    }

    /// Outgoing references in manifest order.
    pub fn references(&self) -> Vec<Swhid> {
        match self {
            Node::Content(_) => Vec::new(),
            Node::Directory(d) => d.entries.iter().map(|e| e.target).collect(),
            Node::Revision(r) => std::iter::once(r.tree)
                .chain(r.parents.iter().copied())
                .collect(),
            Node::Release(r) => vec![r.target],
            Node::Snapshot(s) => s.branches.iter().map(|b| b.target).collect(),
        }
    }

    pub fn as_revision(&self) -> Option<&Revision> {
        match self {
            Node::Revision(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_directory(&self) -> Option<&Directory> {
        match self {
            Node::Directory(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_snapshot(&self) -> Option<&Snapshot> {
        match self {
            Node::Snapshot(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_release(&self) -> Option<&Release> {
        match self {
            Node::Release(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_content(&self) -> Option<&Content> {
        match self {
            Node::Content(c) => Some(c),
            _ => None,
        }
    }
}

impl From<Content> for Node {
    fn from(v: Content) -> Self {
        Node::Content(v)
    }
}
impl From<Directory> for Node {
    fn from(v: Directory) -> Self {
        Node::Directory(v)
    }
}
impl From<Revision> for Node {
    fn from(v: Revision) -> Self {
        Node::Revision(v)
    }
}
impl From<Release> for Node {
    fn from(v: Release) -> Self {
        Node::Release(v)
    }
}
impl From<Snapshot> for Node {
    fn from(v: Snapshot) -> Self {
        Node::Snapshot(v)
    }
}

/// A crawl of an origin at one instant, captured as a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OriginVisit {
    pub timestamp: i64,
    pub snapshot: Swhid,
}

/// A repository, keyed by URL. Visits are strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Origin {
    pub url: String,
    pub visits: Vec<OriginVisit>,
}
