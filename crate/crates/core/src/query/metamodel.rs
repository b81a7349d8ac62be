//! The fixed class table of the archive object model.
//!
//! ```text
//! Graph          timestamp: Integer, origins: Set(Origin)
//! Origin         url: String, visits: Set(OriginVisit), getLastSnapshot(): Snapshot
//! OriginVisit    timestamp: Integer, snapshot: Snapshot
//! Node           swhid: String
//!   Snapshot     branches: Set(SnapshotBranch)
//!   Release      name, message: String, timestamp: Integer, target: Node
//!   Revision     tree: Directory, parent: Revision, parents: Set(Revision),
//!                author, committer, message: String,
//!                authorTimestamp, commiterTimestamp (alias committerTimestamp): Integer
//!   Directory    entries: Set(DirectoryEntry)
//!   Content      length: Integer
//! SnapshotBranch name: String, target: Node, getRevision(): Revision
//! DirectoryEntry name: String, child (alias target): Node, perms: Integer
//! ```
//!
//! Every class also understands `oclIsKindOf(T)`, `oclAsType(T)` (short
//! forms `isKindOf`, `asType`) and `oclAsSet()`.

use super::types::{Class, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attr {
    GraphTimestamp,
    GraphOrigins,
    OriginUrl,
    OriginVisits,
    VisitTimestamp,
    VisitSnapshot,
    NodeSwhid,
    SnapshotBranches,
    BranchName,
    BranchTarget,
    ReleaseName,
    ReleaseMessage,
    ReleaseTimestamp,
    ReleaseTarget,
    RevisionTree,
    RevisionParent,
    RevisionParents,
    RevisionAuthor,
    RevisionAuthorTimestamp,
    RevisionCommitter,
    RevisionCommitterTimestamp,
    RevisionMessage,
    DirectoryEntries,
    EntryName,
    EntryChild,
    EntryPerms,
    ContentLength,
}

/// Built-in operations that are not attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    GetLastSnapshot,
    GetRevision,
    OclAsSet,
    IsKindOf(Class),
    AsType(Class),
}

pub struct AttrInfo {
    pub name: &'static str,
    pub attr: Attr,
    pub ty: fn() -> Type,
}

macro_rules! attrs {
    ($( $name:literal => $attr:ident : $ty:expr ),* $(,)?) => {
        &[ $( AttrInfo { name: $name, attr: Attr::$attr, ty: || $ty } ),* ]
    };
}

fn c(class: Class) -> Type {
    Type::Class(class)
}

/// Attributes declared directly on a class (not inherited).
pub fn own_attributes(class: Class) -> &'static [AttrInfo] {
    match class {
        Class::Graph => attrs![
            "timestamp" => GraphTimestamp: Type::Integer,
            "origins" => GraphOrigins: Type::set(c(Class::Origin)),
        ],
        Class::Origin => attrs![
            "url" => OriginUrl: Type::String,
            "visits" => OriginVisits: Type::set(c(Class::OriginVisit)),
        ],
        Class::OriginVisit => attrs![
            "timestamp" => VisitTimestamp: Type::Integer,
            "snapshot" => VisitSnapshot: c(Class::Snapshot),
        ],
        Class::Node => attrs!["swhid" => NodeSwhid: Type::String],
        Class::Snapshot => {
            attrs!["branches" => SnapshotBranches: Type::set(c(Class::SnapshotBranch))]
        }
        Class::SnapshotBranch => attrs![
            "name" => BranchName: Type::String,
            "target" => BranchTarget: c(Class::Node),
        ],
        Class::Release => attrs![
            "name" => ReleaseName: Type::String,
            "message" => ReleaseMessage: Type::String,
            "timestamp" => ReleaseTimestamp: Type::Integer,
            "target" => ReleaseTarget: c(Class::Node),
        ],
        Class::Revision => attrs![
            "tree" => RevisionTree: c(Class::Directory),
            "parent" => RevisionParent: c(Class::Revision),
            "parents" => RevisionParents: Type::set(c(Class::Revision)),
            "author" => RevisionAuthor: Type::String,
            "authorTimestamp" => RevisionAuthorTimestamp: Type::Integer,
            "committer" => RevisionCommitter: Type::String,
            "commiterTimestamp" => RevisionCommitterTimestamp: Type::Integer,
            "committerTimestamp" => RevisionCommitterTimestamp: Type::Integer,
            "message" => RevisionMessage: Type::String,
        ],
        Class::Directory => {
            attrs!["entries" => DirectoryEntries: Type::set(c(Class::DirectoryEntry))]
        }
        Class::DirectoryEntry => attrs![
            "name" => EntryName: Type::String,
            "child" => EntryChild: c(Class::Node),
            "target" => EntryChild: c(Class::Node),
            "perms" => EntryPerms: Type::Integer,
        ],
        Class::Content => attrs!["length" => ContentLength: Type::Integer],
    }
}

/// Looks an attribute up on a class and its superclasses.
pub fn attribute(class: Class, name: &str) -> Option<(Attr, Type)> {
    let mut cur = Some(class);
    while let Some(k) = cur {
        if let Some(info) = own_attributes(k).iter().find(|a| a.name == name) {
            return Some((info.attr, (info.ty)()));
        }
        cur = k.superclass();
    }
    None
}

/// All attribute names visible on a class, for diagnostics.
pub fn attribute_names(class: Class) -> Vec<&'static str> {
    let mut names = Vec::new();
    let mut cur = Some(class);
    while let Some(k) = cur {
        names.extend(own_attributes(k).iter().map(|a| a.name));
        cur = k.superclass();
    }
    names
}

/// Class-specific built-in operations taking no arguments.
pub fn builtin_operation(class: Class, name: &str) -> Option<(Builtin, Type)> {
    match (class, name) {
        (Class::Origin, "getLastSnapshot") => Some((Builtin::GetLastSnapshot, c(Class::Snapshot))),
        (Class::SnapshotBranch, "getRevision") => Some((Builtin::GetRevision, c(Class::Revision))),
        _ => None,
    }
}

pub fn builtin_operation_names(class: Class) -> Vec<&'static str> {
    let mut names = vec!["oclIsKindOf", "oclAsType", "oclAsSet", "isKindOf", "asType"];
    match class {
        Class::Origin => names.push("getLastSnapshot"),
        Class::SnapshotBranch => names.push("getRevision"),
        _ => {}
    }
    names
}

pub const ITERATORS: [&str; 5] = ["select", "exists", "forAll", "collect", "closure"];
pub const COLLECTION_OPS: [&str; 4] = ["size", "isEmpty", "includes", "asSet"];
