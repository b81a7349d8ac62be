//! Hand-built archives with known answers.

use pvdb_core::model::{
    ArchiveBuilder, ArchiveGraph, Content, Directory, DirectoryEntry, ModelError, Revision,
    Snapshot, SnapshotBranch, Swhid,
};

/// The query of the running Android example, verbatim with its header.
pub const ANDROID_QUERY: &str = include_str!("../../../queries/android.fpql");

/// Lower bound on the root revision's committer timestamp in the Android
/// query (2014-12-31T23:00:00Z).
pub const ROOT_TIMESTAMP_THRESHOLD: i64 = 1_420_066_800;
pub const MIN_REVISIONS: usize = 1000;

/// Shape of one origin of the Android fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    pub revisions: usize,
    pub root_timestamp: i64,
    pub manifest: bool,
    pub branch: &'static str,
}

impl ChainSpec {
    /// Origins A to E: A matches, B is one revision short of 1000 (so 999
    /// fails `> 1000` as well), C is rooted before 2015, D only has a `dev`
    /// branch, E lacks the manifest.
    pub fn fixture(kind: char) -> ChainSpec {
        let a = ChainSpec {
            revisions: 1500,
            root_timestamp: 1_500_000_000,
            manifest: true,
            branch: "refs/heads/main",
        };
        match kind {
            'A' => a,
            'B' => ChainSpec {
                revisions: 999,
                ..a
            },
            'C' => ChainSpec {
                root_timestamp: 1_400_000_000,
                ..a
            },
            'D' => ChainSpec {
                branch: "refs/heads/dev",
                ..a
            },
            'E' => ChainSpec {
                manifest: false,
                ..a
            },
            other => panic!("no fixture origin {other}"),
        }
    }

    pub fn expected_selected(&self) -> bool {
        self.revisions > MIN_REVISIONS
            && self.root_timestamp > ROOT_TIMESTAMP_THRESHOLD
            && self.manifest
            && matches!(self.branch, "refs/heads/main" | "refs/heads/master")
    }

    pub fn head_timestamp(&self) -> i64 {
        self.root_timestamp + 60 * (self.revisions as i64 - 1)
    }
}

pub const FIXTURE_KINDS: [char; 5] = ['A', 'B', 'C', 'D', 'E'];

/// Adds the nodes of a linear chain and returns its snapshot id.
pub fn add_chain(b: &mut ArchiveBuilder, spec: &ChainSpec) -> Result<Swhid, ModelError> {
    let readme = b.add_node(Content {
        length: 120,
        payload_digest: [0x52; 32],
    })?;
    let mut entries = vec![DirectoryEntry {
        name: "README.md".into(),
        target: readme,
        perms: DirectoryEntry::FILE,
    }];
    if spec.manifest {
        let manifest = b.add_node(Content {
            length: 900,
            payload_digest: [0x4d; 32],
        })?;
        entries.push(DirectoryEntry {
            name: "AndroidManifest.xml".into(),
            target: manifest,
            perms: DirectoryEntry::FILE,
        });
    } else {
        let gradle = b.add_node(Content {
            length: 300,
            payload_digest: [0x47; 32],
        })?;
        entries.push(DirectoryEntry {
            name: "build.gradle".into(),
            target: gradle,
            perms: DirectoryEntry::FILE,
        });
    }
    let tree = b.add_node(Directory::from_unsorted(entries))?;
    let mut parent: Option<Swhid> = None;
    for i in 0..spec.revisions {
        let ts = spec.root_timestamp + 60 * i as i64;
        let rev = b.add_node(Revision {
            tree,
            parents: parent.into_iter().collect(),
            author: "Ada Lovelace <ada@example.org>".into(),
            author_timestamp: ts,
            committer: "Ada Lovelace <ada@example.org>".into(),
            committer_timestamp: ts,
            message: format!("commit {i}\n"),
        })?;
        parent = Some(rev);
    }
    let head = parent.expect("chains are non-empty");
    b.add_node(Snapshot::from_unsorted(vec![SnapshotBranch {
        name: spec.branch.into(),
        target: head,
    }]))
}

/// Visit timestamp shared by every fixture origin: after all heads.
pub const FIXTURE_VISIT: i64 = 1_600_000_000;

/// Five origins `https://github.com/fixture/{a..e}` shaped after A to E.
pub fn android_fixture() -> ArchiveGraph {
    let mut b = ArchiveBuilder::new(FIXTURE_VISIT);
    for kind in FIXTURE_KINDS {
        let snp = add_chain(&mut b, &ChainSpec::fixture(kind)).expect("fixture nodes are valid");
        b.add_visit(fixture_url(kind), FIXTURE_VISIT, snp);
    }
    b.build().expect("fixture is consistent")
}

pub fn fixture_url(kind: char) -> String {
    format!("https://github.com/fixture/{}", kind.to_ascii_lowercase())
}

/// The five fixture shapes repeated over `n` origins. Origins of the same
/// shape share their nodes, so the archive stays small.
pub fn android_fixture_scaled(n: usize) -> ArchiveGraph {
    let mut b = ArchiveBuilder::new(FIXTURE_VISIT);
    let snapshots: Vec<Swhid> = FIXTURE_KINDS
        .iter()
        .map(|k| add_chain(&mut b, &ChainSpec::fixture(*k)).expect("fixture nodes are valid"))
        .collect();
    let hosts = ["github.com", "gitlab.com", "bitbucket.org"];
    for i in 0..n {
        let url = format!("https://{}/scaled/repo-{i:05}", hosts[i % hosts.len()]);
        b.add_visit(url, FIXTURE_VISIT, snapshots[i % snapshots.len()]);
    }
    b.build().expect("fixture is consistent")
}

/// One origin whose main branch is a `len`-revision chain satisfying every
/// other condition of the Android query.
pub fn long_chain(len: usize) -> ArchiveGraph {
    let spec = ChainSpec {
        revisions: len,
        ..ChainSpec::fixture('A')
    };
    let visit = spec.head_timestamp() + 3_600;
    let mut b = ArchiveBuilder::new(visit);
    let snp = add_chain(&mut b, &spec).expect("fixture nodes are valid");
    b.add_visit("https://github.com/fixture/long", visit, snp);
    b.build().expect("fixture is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_a_is_expected() {
        let picked: Vec<char> = FIXTURE_KINDS
            .into_iter()
            .filter(|k| ChainSpec::fixture(*k).expected_selected())
            .collect();
        assert_eq!(picked, vec!['A']);
    }

    #[test]
    fn scaled_fixture_shares_nodes() {
        let small = android_fixture();
        let big = android_fixture_scaled(50);
        assert_eq!(big.origin_count(), 50);
        assert_eq!(big.node_count(), small.node_count());
    }
}
