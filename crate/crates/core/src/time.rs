//! RFC 3339 rendering of unix timestamps.
//!
//! Only the `YYYY-MM-DDTHH:MM:SSZ` shape is accepted; anything else (offsets,
//! fractional seconds, lowercase separators) is rejected so that every
//! timestamp has exactly one textual form.

use chrono::{DateTime, SecondsFormat, Utc};

pub fn format_rfc3339(secs: i64) -> String {
    match DateTime::<Utc>::from_timestamp(secs, 0) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        None => format!("@{secs}"),
    }
}

/// Parses a canonical UTC timestamp. Returns `None` when the text is not the
/// exact rendering of some unix second.
pub fn parse_rfc3339(text: &str) -> Option<i64> {
    let parsed = DateTime::parse_from_rfc3339(text).ok()?;
    let secs = parsed.timestamp();
    (format_rfc3339(secs) == text).then_some(secs)
}

/// Accepts either a canonical RFC 3339 timestamp or a bare (possibly
/// negative) count of unix seconds.
pub fn parse_timestamp_arg(text: &str) -> Option<i64> {
    text.parse::<i64>().ok().or_else(|| parse_rfc3339(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_known_values() {
        assert_eq!(format_rfc3339(0), "1970-01-01T00:00:00Z");
        assert_eq!(format_rfc3339(1420066800), "2014-12-31T23:00:00Z");
        assert_eq!(parse_rfc3339("2014-12-31T23:00:00Z"), Some(1420066800));
        assert_eq!(parse_rfc3339("1969-12-31T23:59:59Z"), Some(-1));
    }

    #[test]
    fn rejects_non_canonical_forms() {
        assert_eq!(parse_rfc3339("2014-12-31t23:00:00Z"), None);
        assert_eq!(parse_rfc3339("2014-12-31T23:00:00z"), None);
        assert_eq!(parse_rfc3339("2014-12-31T23:00:00+00:00"), None);
        assert_eq!(parse_rfc3339("2014-12-31T23:00:00.0Z"), None);
    }

    #[test]
    fn timestamp_args() {
        assert_eq!(parse_timestamp_arg("1500"), Some(1500));
        assert_eq!(parse_timestamp_arg("-3"), Some(-3));
        assert_eq!(parse_timestamp_arg("1970-01-01T00:00:10Z"), Some(10));
        assert_eq!(parse_timestamp_arg("yesterday"), None);
    }
}
