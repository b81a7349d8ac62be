use super::archive::ArchiveGraph;
use super::node::{Node, Origin, OriginVisit};
use super::swhid::Swhid;

/// An origin as seen through an [`ArchiveView`]: only the visits at or
/// before the view timestamp.
#[derive(Debug, Clone, Copy)]
pub struct OriginView<'a> {
    origin: &'a Origin,
    visible: usize,
}

impl<'a> OriginView<'a> {
    pub fn url(&self) -> &'a str {
        &self.origin.url
    }

    pub fn visits(&self) -> &'a [OriginVisit] {
        &self.origin.visits[..self.visible]
    }

    /// Snapshot of the most recent visible visit. Never `None` for origins
    /// of a view universe, which only holds origins with a visible visit.
    pub fn last_visit(&self) -> Option<&'a OriginVisit> {
        self.visits().last()
    }

    pub fn last_snapshot(&self) -> Option<Swhid> {
        self.last_visit().map(|v| v.snapshot)
    }
}

impl PartialEq for OriginView<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.url() == other.url() && self.visits() == other.visits()
    }
}

/// Read-only view of an archive as it stood at `timestamp`.
///
/// Each origin keeps only visits at or before the timestamp; origins left
/// with no visit are dropped from the universe. The node store is shared
/// untouched.
#[derive(Debug, Clone)]
pub struct ArchiveView<'a> {
    archive: &'a ArchiveGraph,
    timestamp: i64,
    universe: Vec<OriginView<'a>>,
}

pub fn restrict_to_timestamp(archive: &ArchiveGraph, timestamp: i64) -> ArchiveView<'_> {
    let universe = archive
        .origins()
        .filter_map(|origin| {
            let visible = origin.visits.partition_point(|v| v.timestamp <= timestamp);
            (visible > 0).then_some(OriginView { origin, visible })
        })
        .collect();
    ArchiveView {
        archive,
        timestamp,
        universe,
    }
}

impl<'a> ArchiveView<'a> {
    pub fn archive(&self) -> &'a ArchiveGraph {
        self.archive
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    /// Further restriction; the effective timestamp is the smaller one.
    pub fn restrict(&self, timestamp: i64) -> ArchiveView<'a> {
        restrict_to_timestamp(self.archive, self.timestamp.min(timestamp))
    }

    /// Origins of the universe in bytewise url order.
    pub fn origins(&self) -> &[OriginView<'a>] {
        &self.universe
    }

    pub fn origin(&self, url: &str) -> Option<&OriginView<'a>> {
        self.universe
            .binary_search_by(|o| o.url().as_bytes().cmp(url.as_bytes()))
            .ok()
            .map(|i| &self.universe[i])
    }

    pub fn node(&self, id: &Swhid) -> Option<&'a Node> {
        self.archive.node(id)
    }
}

impl PartialEq for ArchiveView<'_> {
    /// Views are equal when they expose the same origins and visits over the
    /// same node store.
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.archive, other.archive) && self.universe == other.universe
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::node::Snapshot;
    use crate::model::ArchiveBuilder;

    fn archive() -> ArchiveGraph {
        let mut b = ArchiveBuilder::new(400);
        let s1 = b.add_node(Snapshot::default()).unwrap();
        b.add_visit("https://a", 100, s1);
        b.add_visit("https://a", 200, s1);
        b.add_visit("https://a", 300, s1);
        b.add_visit("https://b", 350, s1);
        b.build().unwrap()
    }

    #[test]
    fn export_timestamp_view_is_full() {
        let a = archive();
        let v = restrict_to_timestamp(&a, a.export_timestamp());
        assert_eq!(v.origins().len(), 2);
        assert_eq!(v.origins()[0].visits().len(), 3);
    }

    #[test]
    fn early_timestamp_empties_universe() {
        let a = archive();
        assert!(restrict_to_timestamp(&a, 99).origins().is_empty());
    }

    #[test]
    fn last_visit_before_cut() {
        let a = archive();
        let v = restrict_to_timestamp(&a, 250);
        assert_eq!(v.origins().len(), 1);
        assert_eq!(
            v.origin("https://a")
                .unwrap()
                .last_visit()
                .unwrap()
                .timestamp,
            200
        );
        assert!(v.origin("https://b").is_none());
        // inclusive boundary
        let v = restrict_to_timestamp(&a, 350);
        assert_eq!(v.origin("https://b").unwrap().visits().len(), 1);
    }

    #[test]
    fn nested_restriction_takes_minimum() {
        let a = archive();
        for (t1, t2) in [(250, 120), (120, 250), (500, 350), (50, 500)] {
            assert_eq!(
                restrict_to_timestamp(&a, t1).restrict(t2),
                restrict_to_timestamp(&a, t1.min(t2))
            );
        }
    }
}
