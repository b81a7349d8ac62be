use std::collections::BTreeSet;

use proptest::prelude::*;
use pvdb_core::model::{
    merge_append_only, restrict_to_timestamp, verify_integrity, ArchiveView, Node, Swhid,
};
use pvdb_core::sim::{synthesize, ForgeHost, SimParams};
use pvdb_core::store::{from_bytes, to_canonical_bytes};
use pvdb_core::ArchiveGraph;

const EXPORTS: [i64; 3] = [1_450_000_000, 1_550_000_000, 1_672_531_200];

fn series(seed: u64, origins: usize, revisions: u32) -> Vec<ArchiveGraph> {
    let params = SimParams {
        seed,
        origin_count: origins,
        visits_per_origin: (1, 5),
        revisions_per_visit: (1, revisions),
        ..SimParams::default()
    };
    synthesize(&params, &EXPORTS).unwrap()
}

fn view_summary(v: &ArchiveView<'_>) -> Vec<(String, Vec<(i64, Swhid)>)> {
    v.origins()
        .iter()
        .map(|o| {
            (
                o.url().to_string(),
                o.visits()
                    .iter()
                    .map(|v| (v.timestamp, v.snapshot))
                    .collect(),
            )
        })
        .collect()
}

fn node_ids(a: &ArchiveGraph) -> BTreeSet<Swhid> {
    a.nodes().map(|(id, _)| *id).collect()
}

fn lines(bytes: &[u8]) -> BTreeSet<String> {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesized_series_are_valid_and_append_only(seed in any::<u64>(), origins in 0usize..25, revisions in 1u32..8) {
        let g = series(seed, origins, revisions);
        for a in &g {
            prop_assert!(verify_integrity(a).is_ok());
        }
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                for o in g[i].origins() {
                    let later = g[j].origin(&o.url).unwrap();
                    prop_assert!(later.visits.starts_with(&o.visits));
                }
                prop_assert!(node_ids(&g[i]).is_subset(&node_ids(&g[j])));
            }
        }
    }

    #[test]
    fn merge_is_idempotent_associative_and_monotone(seed in any::<u64>(), origins in 1usize..20) {
        let g = series(seed, origins, 5);
        let (a, b, c) = (&g[0], &g[1], &g[2]);
        let ab = merge_append_only(a, b).unwrap();
        prop_assert_eq!(&ab, b);
        prop_assert_eq!(&merge_append_only(a, a).unwrap(), a);
        prop_assert_eq!(&merge_append_only(b, a).unwrap(), b);
        let left = merge_append_only(&ab, c).unwrap();
        let right = merge_append_only(a, &merge_append_only(b, c).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert!(verify_integrity(&left).is_ok());
        prop_assert!(node_ids(a).is_subset(&node_ids(&left)));
        prop_assert_eq!(left.export_timestamp(), c.export_timestamp());
        for o in a.origins() {
            let merged = left.origin(&o.url).unwrap();
            prop_assert!(o.visits.iter().all(|v| merged.visits.contains(v)));
        }
    }

    #[test]
    fn restriction_composes(seed in any::<u64>(), t1 in 1_388_534_400i64..1_672_531_200, t2 in 1_388_534_400i64..1_672_531_200) {
        let a = series(seed, 15, 3).pop().unwrap();
        let twice = restrict_to_timestamp(&a, t1).restrict(t2);
        let once = restrict_to_timestamp(&a, t1.min(t2));
        prop_assert_eq!(view_summary(&twice), view_summary(&once));
        for o in once.origins() {
            prop_assert!(!o.visits().is_empty());
            prop_assert!(o.visits().iter().all(|v| v.timestamp <= t1.min(t2)));
        }
    }

    #[test]
    fn store_roundtrip_and_append_only_text(seed in any::<u64>(), origins in 0usize..20) {
        let g = series(seed, origins, 4);
        for a in &g {
            let bytes = to_canonical_bytes(a);
            let loaded = from_bytes(&bytes).unwrap();
            prop_assert_eq!(&loaded, a);
            prop_assert_eq!(to_canonical_bytes(&loaded), bytes);
        }
        // apart from the header line, a later export only adds lines
        let before = lines(&to_canonical_bytes(&g[0]));
        let after = lines(&to_canonical_bytes(&merge_append_only(&g[0], &g[2]).unwrap()));
        let lost: Vec<&String> = before.difference(&after).collect();
        prop_assert!(lost.len() <= 1, "{:?}", lost);
        prop_assert!(lost.iter().all(|l| l.contains("\"kind\":\"meta\"")), "{:?}", lost);
    }
}

/// Whether the tree under `dir` has an entry called `name` at any depth.
fn tree_has(a: &ArchiveGraph, dir: Swhid, name: &str) -> bool {
    let mut stack = vec![dir];
    let mut seen = BTreeSet::new();
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(Node::Directory(d)) = a.node(&id) {
            for e in &d.entries {
                if e.name == name {
                    return true;
                }
                stack.push(e.target);
            }
        }
    }
    false
}

/// Origins whose latest snapshot has a branch head whose tree holds `name`.
fn marker_count(a: &ArchiveGraph, name: &str) -> usize {
    a.origins()
        .filter(|o| {
            let Some(Node::Snapshot(s)) = a.node(&o.visits.last().unwrap().snapshot) else {
                return false;
            };
            s.branches.iter().any(|b| match a.node(&b.target) {
                Some(Node::Revision(r)) => tree_has(a, r.tree, name),
                _ => false,
            })
        })
        .count()
}

#[test]
fn marker_fraction_tracks_probability() {
    for (seed, p) in [(1u64, 0.3), (2, 0.6), (3, 0.05)] {
        let params = SimParams {
            seed,
            origin_count: 1000,
            visits_per_origin: (1, 2),
            revisions_per_visit: (1, 2),
            marker_file_probability: p,
            ..SimParams::default()
        };
        let a = synthesize(&params, &[1_672_531_200])
            .unwrap()
            .pop()
            .unwrap();
        assert_eq!(a.origin_count(), 1000);
        let fraction = marker_count(&a, &params.marker_file_name) as f64 / 1000.0;
        assert!((fraction - p).abs() <= 0.05, "p = {p}: observed {fraction}");
    }
}

#[test]
fn host_weights_shape_the_urls() {
    let params = SimParams {
        seed: 11,
        origin_count: 1000,
        forge_hosts: vec![
            ForgeHost {
                host: "github.com".into(),
                weight: 0.9,
            },
            ForgeHost {
                host: "gitlab.com".into(),
                weight: 0.1,
            },
        ],
        visits_per_origin: (1, 1),
        revisions_per_visit: (1, 1),
        ..SimParams::default()
    };
    let a = synthesize(&params, &[1_672_531_200])
        .unwrap()
        .pop()
        .unwrap();
    let github = a
        .origins()
        .filter(|o| o.url.starts_with("https://github.com/"))
        .count();
    let gitlab = a
        .origins()
        .filter(|o| o.url.starts_with("https://gitlab.com/"))
        .count();
    assert_eq!(github + gitlab, 1000);
    // four standard deviations of Binomial(1000, 0.9)
    assert!(
        (github as i64 - 900).abs() <= 38,
        "github.com holds {github}"
    );
}
