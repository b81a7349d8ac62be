//! Plain-text tables and JSON-lines records for list reports.

use serde_json::json;

use super::{ForgeStats, ListDiff};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    /// Aligned columns for reading.
    #[default]
    Table,
    /// One JSON object per line.
    Records,
}

/// First column left-aligned, the others right-aligned.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            if i == 0 {
                text.push_str(&format!("{cell:<w$}"));
            } else {
                text.push_str(&format!("  {cell:>w$}"));
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

pub fn render_stats(stats: &ForgeStats, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => {
            let mut rows: Vec<Vec<String>> = stats
                .rows
                .iter()
                .map(|(h, n)| vec![h.clone(), n.to_string()])
                .collect();
            rows.push(vec!["Total".into(), stats.total.to_string()]);
            table(&["forge", "origins"], &rows)
        }
        ReportFormat::Records => {
            let mut out = String::new();
            for (host, n) in &stats.rows {
                out.push_str(&json!({ "kind": "forge", "host": host, "origins": n }).to_string());
                out.push('\n');
            }
            out.push_str(&json!({ "kind": "total", "origins": stats.total }).to_string());
            out.push('\n');
            out
        }
    }
}

pub fn render_diff(diff: &ListDiff, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => {
            let mut out = table(
                &["", "origins"],
                &[
                    vec!["added".into(), diff.added.len().to_string()],
                    vec!["removed".into(), diff.removed.len().to_string()],
                    vec!["changed".into(), diff.changed.len().to_string()],
                ],
            );
            if diff.is_empty() {
                return out;
            }
            out.push('\n');
            for url in &diff.added {
                out.push_str(&format!("+ {url}\n"));
            }
            for url in &diff.removed {
                out.push_str(&format!("- {url}\n"));
            }
            for c in &diff.changed {
                out.push_str(&format!("~ {} {} -> {}\n", c.url, c.before, c.after));
            }
            out.push('\n');
            let rows: Vec<Vec<String>> = diff
                .per_forge
                .iter()
                .map(|d| {
                    vec![
                        d.host.clone(),
                        d.added.to_string(),
                        d.removed.to_string(),
                        d.changed.to_string(),
                    ]
                })
                .collect();
            out.push_str(&table(&["forge", "added", "removed", "changed"], &rows));
            out
        }
        ReportFormat::Records => {
            let mut lines = Vec::new();
            lines.push(json!({
                "kind": "summary",
                "added": diff.added.len(),
                "removed": diff.removed.len(),
                "changed": diff.changed.len(),
            }));
            lines.extend(
                diff.added
                    .iter()
                    .map(|u| json!({ "kind": "added", "url": u })),
            );
            lines.extend(
                diff.removed
                    .iter()
                    .map(|u| json!({ "kind": "removed", "url": u })),
            );
            lines.extend(diff.changed.iter().map(|c| {
                json!({ "kind": "changed", "url": c.url, "before": c.before.to_string(), "after": c.after.to_string() })
            }));
            lines.extend(diff.per_forge.iter().map(|d| {
                json!({ "kind": "forge", "host": d.host, "added": d.added, "removed": d.removed, "changed": d.changed })
            }));
            lines.into_iter().map(|l| l.to_string() + "\n").collect()
        }
    }
}
