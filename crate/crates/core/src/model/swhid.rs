use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Kind of a node in the archive graph.
///
/// The declaration order is the canonical kind rank used when sorting
/// identifiers and exchange records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeType {
    Content,
    Directory,
    Revision,
    Release,
    Snapshot,
}

impl NodeType {
    pub const ALL: [NodeType; 5] = [
        NodeType::Content,
        NodeType::Directory,
        NodeType::Revision,
        NodeType::Release,
        NodeType::Snapshot,
    ];

    /// Three-letter tag used in identifiers and manifest headers.
    pub fn tag(self) -> &'static str {
        match self {
            NodeType::Content => "cnt",
            NodeType::Directory => "dir",
            NodeType::Revision => "rev",
            NodeType::Release => "rel",
            NodeType::Snapshot => "snp",
        }
    }

    /// One-byte tag appended to child references inside manifests.
    pub fn short_tag(self) -> u8 {
        match self {
            NodeType::Content => b'c',
            NodeType::Directory => b'd',
            NodeType::Revision => b'r',
            NodeType::Release => b'l',
            NodeType::Snapshot => b's',
        }
    }

    pub fn from_tag(tag: &str) -> Option<NodeType> {
        NodeType::ALL.into_iter().find(|t| t.tag() == tag)
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Intrinsic identifier of a graph node: `swh:1:<type>:<40 lowercase hex>`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Swhid {
    node_type: NodeType,
    digest: [u8; 20],
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed identifier `{text}`: {reason}")]
pub struct SwhidParseError {
    pub text: String,
    pub reason: &'static str,
}

impl Swhid {
    pub const SCHEME_VERSION: u8 = 1;

    pub fn new(node_type: NodeType, digest: [u8; 20]) -> Self {
        Swhid { node_type, digest }
    }

    pub fn node_type(&self) -> NodeType {
        self.node_type
    }

    pub fn digest(&self) -> &[u8; 20] {
        &self.digest
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest)
    }
}

impl fmt::Display for Swhid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "swh:1:{}:{}", self.node_type.tag(), self.digest_hex())
    }
}

impl fmt::Debug for Swhid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses 40 lowercase hex digits. Uppercase is rejected so that every digest
/// has a single spelling.
pub(crate) fn parse_lower_hex<const N: usize>(text: &str) -> Option<[u8; N]> {
    if text.len() != 2 * N || !text.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(text, &mut out).ok()?;
    Some(out)
}

impl FromStr for Swhid {
    type Err = SwhidParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason| SwhidParseError {
            text: text.to_string(),
            reason,
        };
        let mut parts = text.split(':');
        if parts.next() != Some("swh") {
            return Err(err("missing `swh` scheme"));
        }
        if parts.next() != Some("1") {
            return Err(err("unsupported scheme version"));
        }
        let node_type = parts
            .next()
            .and_then(NodeType::from_tag)
            .ok_or_else(|| err("unknown node type"))?;
        let digest = parts
            .next()
            .and_then(parse_lower_hex::<20>)
            .ok_or_else(|| err("digest must be 40 lowercase hex digits"))?;
        if parts.next().is_some() {
            return Err(err("trailing components"));
        }
        Ok(Swhid { node_type, digest })
    }
}

impl Serialize for Swhid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Swhid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
