//! Runtime values of the evaluator.

use std::hash::{Hash, Hasher};
use std::rc::Rc;

use rustc_hash::FxHashSet;

use crate::model::{Node, NodeType, Swhid};
use crate::query::Class;

/// Text rendering of an identifier without allocating.
pub fn swhid_text(id: &Swhid) -> [u8; 50] {
    let mut buf = [0u8; 50];
    buf[..6].copy_from_slice(b"swh:1:");
    buf[6..9].copy_from_slice(id.node_type().tag().as_bytes());
    buf[9] = b':';
    hex::encode_to_slice(id.digest(), &mut buf[10..]).expect("fixed length");
    buf
}

/// A string value: borrowed from the archive or the query, or the text
/// form of an identifier.
#[derive(Debug, Clone, Copy)]
pub enum Text<'a> {
    Ref(&'a str),
    Id(Swhid),
}

impl Text<'_> {
    pub fn with_bytes<R>(&self, f: impl FnOnce(&[u8]) -> R) -> R {
        match self {
            Text::Ref(s) => f(s.as_bytes()),
            Text::Id(id) => f(&swhid_text(id)),
        }
    }

    pub fn to_string_lossless(&self) -> String {
        self.with_bytes(|b| String::from_utf8(b.to_vec()).expect("utf-8"))
    }
}

impl PartialEq for Text<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.with_bytes(|a| other.with_bytes(|b| a == b))
    }
}

impl Eq for Text<'_> {}

impl PartialOrd for Text<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Text<'_> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.with_bytes(|a| other.with_bytes(|b| a.cmp(b)))
    }
}

impl Hash for Text<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.with_bytes(|b| b.hash(state))
    }
}

/// Objects of the metamodel. Origins and visits are indices into the view's
/// universe; branches and entries are positions inside their parent node.
#[derive(Debug, Clone, Copy)]
pub enum Obj<'a> {
    Graph,
    Origin(u32),
    Visit(u32, u32),
    Node(Swhid, &'a Node),
    Branch(Swhid, &'a Node, u32),
    Entry(Swhid, &'a Node, u32),
}

impl Obj<'_> {
    pub fn class(&self) -> Class {
        match self {
            Obj::Graph => Class::Graph,
            Obj::Origin(_) => Class::Origin,
            Obj::Visit(..) => Class::OriginVisit,
            Obj::Node(id, _) => match id.node_type() {
                NodeType::Content => Class::Content,
                NodeType::Directory => Class::Directory,
                NodeType::Revision => Class::Revision,
                NodeType::Release => Class::Release,
                NodeType::Snapshot => Class::Snapshot,
            },
            Obj::Branch(..) => Class::SnapshotBranch,
            Obj::Entry(..) => Class::DirectoryEntry,
        }
    }

    fn key(&self) -> (u8, Option<Swhid>, u32, u32) {
        match *self {
            Obj::Graph => (0, None, 0, 0),
            Obj::Origin(i) => (1, None, i, 0),
            Obj::Visit(i, j) => (2, None, i, j),
            Obj::Node(id, _) => (3, Some(id), 0, 0),
            Obj::Branch(id, _, i) => (4, Some(id), i, 0),
            Obj::Entry(id, _, i) => (5, Some(id), i, 0),
        }
    }
}

impl PartialEq for Obj<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Obj<'_> {}

impl Hash for Obj<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

/// Collections are duplicate-free, never contain null, and keep insertion
/// order (which carries no meaning).
#[derive(Debug, Clone)]
pub enum Value<'a> {
    Null,
    Bool(bool),
    Int(i64),
    Str(Text<'a>),
    Obj(Obj<'a>),
    Set(Rc<Vec<Value<'a>>>),
}

impl<'a> Value<'a> {
    pub fn empty_set() -> Self {
        Value::Set(Rc::new(Vec::new()))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }
}

impl PartialEq for Value<'_> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Obj(a), Value::Obj(b)) => a == b,
            (Value::Set(a), Value::Set(b)) => {
                if Rc::ptr_eq(a, b) {
                    return true;
                }
                if a.len() != b.len() {
                    return false;
                }
                if a.len() <= 8 {
                    return a.iter().all(|x| b.contains(x));
                }
                let members: FxHashSet<&Value> = b.iter().collect();
                a.iter().all(|x| members.contains(x))
            }
            _ => false,
        }
    }
}

impl Eq for Value<'_> {}

impl Hash for Value<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Str(t) => t.hash(state),
            Value::Obj(o) => o.hash(state),
            // order-insensitive equality, so only the size is hashed
            Value::Set(items) => items.len().hash(state),
        }
    }
}

/// Accumulates a duplicate-free, null-free collection.
#[derive(Default)]
pub struct SetBuilder<'a> {
    items: Vec<Value<'a>>,
    seen: FxHashSet<Value<'a>>,
}

impl<'a> SetBuilder<'a> {
    pub fn new() -> Self {
        SetBuilder {
            items: Vec::new(),
            seen: FxHashSet::default(),
        }
    }

    /// Adds one element; returns whether it was new.
    pub fn insert(&mut self, v: Value<'a>) -> bool {
        if v.is_null() || self.seen.contains(&v) {
            return false;
        }
        self.seen.insert(v.clone());
        self.items.push(v);
        true
    }

    /// Adds an element, or every element of a collection.
    pub fn extend_flat(&mut self, v: Value<'a>) {
        match v {
            Value::Set(items) => {
                for x in items.iter() {
                    self.insert(x.clone());
                }
            }
            other => {
                self.insert(other);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Value<'a> {
        &self.items[i]
    }

    pub fn finish(self) -> Value<'a> {
        Value::Set(Rc::new(self.items))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifier_text_matches_display() {
        let id: Swhid = "swh:1:rev:738a47f6013d818e35c6abb37c860586b6760a28"
            .parse()
            .unwrap();
        assert_eq!(&swhid_text(&id)[..], id.to_string().as_bytes());
        assert_eq!(
            Text::Id(id),
            Text::Ref("swh:1:rev:738a47f6013d818e35c6abb37c860586b6760a28")
        );
    }

    #[test]
    fn sets_compare_without_order() {
        let a = Value::Set(Rc::new(vec![Value::Int(1), Value::Int(2)]));
        let b = Value::Set(Rc::new(vec![Value::Int(2), Value::Int(1)]));
        assert_eq!(a, b);
        let mut s = SetBuilder::new();
        s.extend_flat(a);
        s.insert(Value::Null);
        s.insert(Value::Int(2));
        assert_eq!(s.len(), 2);
    }
}
