use std::collections::BTreeSet;

use proptest::prelude::*;
use pvdb_core::engine::{run_fingerprint, Fingerprint, OriginList, RunOptions};
use pvdb_core::extract::{dataset_list, diff_lists, extract_subgraph, forge_stats};
use pvdb_core::model::{verify_integrity, Swhid};
use pvdb_core::sim::{synthesize, SimParams};
use pvdb_core::ArchiveGraph;

const EXPORT: i64 = 1_672_531_200;

const PREDICATES: [&str; 4] = [
    "true",
    "visits->size() > 1",
    "url < 'https://gitlab'",
    "getLastSnapshot().branches->exists(name = 'refs/heads/main')",
];

fn archive(seed: u64, origins: usize) -> ArchiveGraph {
    let params = SimParams {
        seed,
        origin_count: origins,
        visits_per_origin: (1, 4),
        revisions_per_visit: (1, 6),
        ..SimParams::default()
    };
    synthesize(&params, &[EXPORT]).unwrap().pop().unwrap()
}

fn fingerprint(predicate: &str, t: i64) -> Fingerprint {
    Fingerprint::new(
        format!("context Graph def : query():Set(Origin) = origins->select({predicate})"),
        t,
    )
}

fn run(fp: &Fingerprint, a: &ArchiveGraph) -> OriginList {
    run_fingerprint(fp, a, &RunOptions::default()).unwrap().list
}

/// Node ids reachable from `roots`, by repeated expansion until nothing
/// new appears.
fn reachable(a: &ArchiveGraph, roots: impl IntoIterator<Item = Swhid>) -> BTreeSet<Swhid> {
    let mut set: BTreeSet<Swhid> = roots.into_iter().collect();
    loop {
        let next: BTreeSet<Swhid> = set
            .iter()
            .flat_map(|id| a.node(id).unwrap().references())
            .chain(set.iter().copied())
            .collect();
        if next.len() == set.len() {
            return set;
        }
        set = next;
    }
}

fn node_ids(a: &ArchiveGraph) -> BTreeSet<Swhid> {
    a.nodes().map(|(id, _)| *id).collect()
}

fn list_strategy() -> impl Strategy<Value = OriginList> {
    let url = (0usize..3, 0u8..12)
        .prop_map(|(h, n)| format!("https://{}/o/{n}", ["a.org", "b.org", "c.org"][h]));
    proptest::collection::btree_map(url, 0u8..4, 0..10).prop_map(|m| {
        OriginList::from_entries(
            m.into_iter()
                .map(|(u, s)| (u, Swhid::new(pvdb_core::NodeType::Snapshot, [s; 20])))
                .collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extraction_is_closed_idempotent_and_replayable(
        seed in any::<u64>(),
        origins in 0usize..25,
        which in 0usize..PREDICATES.len(),
        cut in 0.0f64..=1.0,
    ) {
        let a = archive(seed, origins);
        let times: Vec<i64> = a.origins().flat_map(|o| o.visits.iter().map(|v| v.timestamp)).collect();
        let t = times.iter().copied().max().map_or(EXPORT, |max| {
            let min = times.iter().copied().min().unwrap();
            min + ((max - min) as f64 * cut) as i64
        });
        let fp = fingerprint(PREDICATES[which], t);
        let list = run(&fp, &a);
        let d = extract_subgraph(&a, &list, t).unwrap();

        prop_assert!(verify_integrity(&d).is_ok());
        prop_assert_eq!(dataset_list(&d), list.clone());
        prop_assert_eq!(&d.provenance().unwrap().dataset_hash, &list.dataset_hash());
        prop_assert_eq!(d.provenance().unwrap().fingerprint_timestamp, t);
        for o in d.origins() {
            prop_assert!(o.visits.iter().all(|v| v.timestamp <= t));
            prop_assert_eq!(o.visits.len(), a.origin(&o.url).unwrap().visits.iter().filter(|v| v.timestamp <= t).count());
        }
        let roots: Vec<Swhid> = d.origins().flat_map(|o| o.visits.iter().map(|v| v.snapshot)).collect();
        prop_assert_eq!(node_ids(&d), reachable(&a, roots));

        prop_assert_eq!(&extract_subgraph(&d, &list, t).unwrap(), &d);
        prop_assert_eq!(run(&fp, &d), list);
    }

    #[test]
    fn full_extraction_is_the_union_of_single_origins(seed in any::<u64>(), origins in 1usize..15) {
        let a = archive(seed, origins);
        let list = run(&fingerprint("true", EXPORT), &a);
        let full = extract_subgraph(&a, &list, EXPORT).unwrap();
        let mut union = BTreeSet::new();
        for (url, snapshot) in list.entries() {
            let one = OriginList::from_entries(vec![(url.clone(), *snapshot)]);
            union.extend(node_ids(&extract_subgraph(&a, &one, EXPORT).unwrap()));
        }
        prop_assert_eq!(node_ids(&full), union);
        prop_assert_eq!(node_ids(&full), node_ids(&a));
    }

    #[test]
    fn diffs_mirror_and_stats_partition(a in list_strategy(), b in list_strategy()) {
        let ab = diff_lists(&a, &b);
        prop_assert_eq!(diff_lists(&b, &a), ab.mirrored());
        prop_assert_eq!(ab.is_empty(), a == b);
        prop_assert_eq!(a.len() + ab.added.len() - ab.removed.len(), b.len());
        let stats = forge_stats(&a);
        prop_assert_eq!(stats.rows.iter().map(|r| r.1).sum::<usize>(), a.len());
        prop_assert_eq!(stats.total, a.len());
    }
}
