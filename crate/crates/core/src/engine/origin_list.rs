//! The selected origins and their canonical serialization.

use std::fmt::Write;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ArchiveView, Swhid};

pub const HEADER: &str = "pvdb-origin-list v1";
/// Prefix of the optional trailer line carrying the dataset hash.
pub const HASH_TRAILER: &str = "#dataset_hash ";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ListError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("embedded dataset hash {embedded} does not match content hash {computed}")]
    TrailerMismatch { embedded: String, computed: String },
}

/// Origins selected by a fingerprint, each with the snapshot of its last
/// visit at the fingerprint timestamp, sorted bytewise by url.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OriginList {
    entries: Vec<(String, Swhid)>,
}

impl OriginList {
    /// Builds a list from entries in any order. Duplicate urls keep the
    /// first entry.
    pub fn from_entries(mut entries: Vec<(String, Swhid)>) -> Self {
        entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
        entries.dedup_by(|b, a| a.0 == b.0);
        OriginList { entries }
    }

    /// The given origin indices of a view, with their last snapshots.
    pub fn from_view(view: &ArchiveView<'_>, indices: impl IntoIterator<Item = usize>) -> Self {
        let entries = indices
            .into_iter()
            .filter_map(|i| {
                let o = &view.origins()[i];
                o.last_snapshot().map(|s| (o.url().to_string(), s))
            })
            .collect();
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[(String, Swhid)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn urls(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(u, _)| u.as_str())
    }

    pub fn get(&self, url: &str) -> Option<Swhid> {
        self.entries
            .binary_search_by(|(u, _)| u.as_bytes().cmp(url.as_bytes()))
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Canonical byte stream: header line, then `url<TAB>swhid` per entry,
    /// every line LF-terminated.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(32 + self.entries.len() * 96);
        out.push_str(HEADER);
        out.push('\n');
        for (url, id) in &self.entries {
            let _ = writeln!(out, "{url}\t{id}");
        }
        out
    }

    /// SHA-256 of [`serialize`](Self::serialize), as 64 lowercase hex digits.
    pub fn dataset_hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }

    /// Serialization followed by a `#dataset_hash` trailer line.
    pub fn serialize_with_hash(&self) -> String {
        let mut out = self.serialize();
        let _ = writeln!(out, "{HASH_TRAILER}{}", self.dataset_hash());
        out
    }

    /// Parses a serialized list. Input must be canonical: sorted, unique,
    /// LF-terminated. A trailing `#dataset_hash` line is checked if present.
    pub fn parse(text: &str) -> Result<OriginList, ListError> {
        let err = |line: usize, message: String| ListError::Parse { line, message };
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(err(text.lines().count(), "missing final newline".into()));
        }
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, HEADER)) => {}
            Some((n, other)) => {
                return Err(err(
                    n,
                    format!("expected header `{HEADER}`, found `{other}`"),
                ))
            }
            None => return Err(err(1, format!("expected header `{HEADER}`"))),
        }
        let mut entries: Vec<(String, Swhid)> = Vec::new();
        let mut trailer = None;
        for (n, line) in lines {
            if trailer.is_some() {
                return Err(err(n, "content after the dataset hash trailer".into()));
            }
            if let Some(h) = line.strip_prefix(HASH_TRAILER) {
                if h.len() != 64 || !h.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
                    return Err(err(n, "malformed dataset hash".into()));
                }
                trailer = Some(h.to_string());
                continue;
            }
            let (url, id) = line
                .split_once('\t')
                .ok_or_else(|| err(n, "expected `url<TAB>swhid`".into()))?;
            if url.is_empty() {
                return Err(err(n, "empty url".into()));
            }
            let id: Swhid = id.parse().map_err(|e| err(n, format!("{e}")))?;
            if let Some((prev, _)) = entries.last() {
                if prev.as_bytes() >= url.as_bytes() {
                    return Err(err(n, format!("url `{url}` is out of order or duplicated")));
                }
            }
            entries.push((url.to_string(), id));
        }
        let list = OriginList { entries };
        if let Some(embedded) = trailer {
            let computed = list.dataset_hash();
            if embedded != computed {
                return Err(ListError::TrailerMismatch { embedded, computed });
            }
        }
        Ok(list)
    }
}
