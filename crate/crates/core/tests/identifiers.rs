//! Identifier computation against values produced by a separate serializer
//! of the manifest format (frozen here), plus determinism properties.

use proptest::prelude::*;
use pvdb_core::model::{
    compute_swhid, Content, Directory, DirectoryEntry, Node, Release, Revision, Snapshot,
    SnapshotBranch,
};

fn chain() -> Vec<(Node, &'static str)> {
    let cnt = Node::Content(Content {
        length: 42,
        payload_digest: [0x11; 32],
    });
    let cnt_id = compute_swhid(&cnt).unwrap();
    let dir = Node::Directory(Directory {
        entries: vec![DirectoryEntry {
            name: "AndroidManifest.xml".into(),
            target: cnt_id,
            perms: DirectoryEntry::FILE,
        }],
    });
    let dir_id = compute_swhid(&dir).unwrap();
    let rev = Node::Revision(Revision {
        tree: dir_id,
        parents: vec![],
        author: "Ada <ada@example.org>".into(),
        author_timestamp: 1_500_000_000,
        committer: "Ada <ada@example.org>".into(),
        committer_timestamp: 1_500_000_001,
        message: "Initial commit\n".into(),
    });
    let rev_id = compute_swhid(&rev).unwrap();
    let rev2 = Node::Revision(Revision {
        tree: dir_id,
        parents: vec![rev_id],
        author: "Bob".into(),
        author_timestamp: -5,
        committer: "Bob".into(),
        committer_timestamp: -5,
        message: String::new(),
    });
    let rev2_id = compute_swhid(&rev2).unwrap();
    let rel = Node::Release(Release {
        name: "v1.0".into(),
        target: rev2_id,
        message: "release".into(),
        timestamp: 1_600_000_000,
    });
    let rel_id = compute_swhid(&rel).unwrap();
    let snp = Node::Snapshot(Snapshot {
        branches: vec![
            SnapshotBranch {
                name: "refs/heads/main".into(),
                target: rev2_id,
            },
            SnapshotBranch {
                name: "refs/tags/v1.0".into(),
                target: rel_id,
            },
        ],
    });
    vec![
        (cnt, "swh:1:cnt:9d7432cea58be7adc2fc2f394f5159120bfff1e2"),
        (dir, "swh:1:dir:d90c77ab8e8d52b47810e6c67105eced480a3773"),
        (rev, "swh:1:rev:738a47f6013d818e35c6abb37c860586b6760a28"),
        (rev2, "swh:1:rev:ec1e1d1afc2d3681cd6919f6d729dbd6d46342e0"),
        (rel, "swh:1:rel:c3de00e11b399812a347c6476e931125557a91d4"),
        (snp, "swh:1:snp:495cd7d3f51b678f1bf4cc50e32777139d0a47c7"),
    ]
}

#[test]
fn chain_matches_independent_serializer() {
    for (node, expected) in chain() {
        assert_eq!(compute_swhid(&node).unwrap().to_string(), expected);
    }
}

#[test]
fn empty_directory_golden() {
    let id = compute_swhid(&Node::Directory(Directory::default())).unwrap();
    assert_eq!(
        id.to_string(),
        "swh:1:dir:8b71f7f8dc2a64b537b5520560c19510c835adf4"
    );
}

proptest! {
    #[test]
    fn ids_ignore_entry_insertion_order(names in proptest::collection::btree_set("[a-z]{1,6}", 0..8), seed in any::<u64>()) {
        let cnt = compute_swhid(&Node::Content(Content { length: 1, payload_digest: [2; 32] })).unwrap();
        let entries: Vec<DirectoryEntry> = names
            .iter()
            .map(|n| DirectoryEntry { name: n.clone(), target: cnt, perms: DirectoryEntry::FILE })
            .collect();
        let mut shuffled = entries.clone();
        let len = shuffled.len().max(1);
        shuffled.rotate_left((seed as usize) % len);
        shuffled.reverse();
        let a = compute_swhid(&Node::Directory(Directory::from_unsorted(entries))).unwrap();
        let b = compute_swhid(&Node::Directory(Directory::from_unsorted(shuffled))).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn distinct_messages_distinct_ids(a in ".{0,20}", b in ".{0,20}") {
        prop_assume!(a != b);
        let tree = compute_swhid(&Node::Directory(Directory::default())).unwrap();
        let rev = |m: &str| Node::Revision(Revision {
            tree, parents: vec![], author: "x".into(), author_timestamp: 0,
            committer: "x".into(), committer_timestamp: 0, message: m.into(),
        });
        prop_assert_ne!(compute_swhid(&rev(&a)).unwrap(), compute_swhid(&rev(&b)).unwrap());
    }
}
