use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{format_rfc3339, parse_rfc3339};

/// A dataset fingerprint: a query, the timestamp it is evaluated at, and
/// optionally the dataset hash a previous run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub query: String,
    pub timestamp: i64,
    pub dataset_hash: Option<String>,
}

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed fingerprint: {0}")]
    Parse(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerprintFile {
    timestamp: String,
    query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset_hash: Option<String>,
}

fn is_hash(h: &str) -> bool {
    h.len() == 64 && h.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl Fingerprint {
    pub fn new(query: impl Into<String>, timestamp: i64) -> Self {
        Fingerprint {
            query: query.into(),
            timestamp,
            dataset_hash: None,
        }
    }

    pub fn with_hash(mut self, hash: impl Into<String>) -> Self {
        self.dataset_hash = Some(hash.into());
        self
    }

    /// Parses the JSON form. A `query` starting with `@` names a file,
    /// resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, FingerprintError> {
        let file: FingerprintFile =
            serde_json::from_str(text).map_err(|e| FingerprintError::Parse(e.to_string()))?;
        let timestamp = parse_rfc3339(&file.timestamp).ok_or_else(|| {
            FingerprintError::Parse(format!(
                "timestamp `{}` is not RFC 3339 UTC with a Z suffix",
                file.timestamp
            ))
        })?;
        if let Some(h) = &file.dataset_hash {
            if !is_hash(h) {
                return Err(FingerprintError::Parse(format!(
                    "dataset_hash `{h}` is not 64 lowercase hex digits"
                )));
            }
        }
        let query = match file.query.strip_prefix('@') {
            Some(rel) => {
                let path = base_dir.join(rel);
                std::fs::read_to_string(&path)
                    .map_err(|source| FingerprintError::Io { path, source })?
            }
            None => file.query,
        };
        Ok(Fingerprint {
            query,
            timestamp,
            dataset_hash: file.dataset_hash,
        })
    }

    pub fn load(path: &Path) -> Result<Self, FingerprintError> {
        let text = std::fs::read_to_string(path).map_err(|source| FingerprintError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    /// JSON form with the query inline.
    pub fn to_json(&self) -> String {
        let file = FingerprintFile {
            timestamp: format_rfc3339(self.timestamp),
            query: self.query.clone(),
            dataset_hash: self.dataset_hash.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_file_reference() {
        let fp = Fingerprint::new(
            "context Graph def : query():Set(Origin) = origins",
            1420066800,
        )
        .with_hash("a".repeat(64));
        let back = Fingerprint::from_json(&fp.to_json(), Path::new(".")).unwrap();
        assert_eq!(back, fp);
        assert!(fp.to_json().contains("2014-12-31T23:00:00Z"));

        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("q.fpql"), "QUERY").unwrap();
        let text = r#"{"timestamp": "2015-01-01T00:00:00Z", "query": "@q.fpql"}"#;
        std::fs::write(dir.path().join("fp.json"), text).unwrap();
        let fp = Fingerprint::load(&dir.path().join("fp.json")).unwrap();
        assert_eq!(fp.query, "QUERY");
        assert_eq!(fp.timestamp, 1420070400);
    }

    #[test]
    fn rejects_bad_fields() {
        let base = Path::new(".");
        assert!(
            Fingerprint::from_json(r#"{"timestamp": "2015-01-01", "query": "x"}"#, base).is_err()
        );
        assert!(Fingerprint::from_json(
            r#"{"timestamp": "2015-01-01T00:00:00Z", "query": "x", "dataset_hash": "ABC"}"#,
            base
        )
        .is_err());
        assert!(Fingerprint::from_json(
            r#"{"timestamp": "2015-01-01T00:00:00Z", "query": "x", "extra": 1}"#,
            base
        )
        .is_err());
    }
}
