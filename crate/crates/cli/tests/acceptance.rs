//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pvdb_cli::{run, CommandOutcome, EXIT_INTEGRITY, EXIT_MISMATCH, EXIT_OK, EXIT_USER};
use pvdb_core::engine::{evaluate, optimize, run_fingerprint, Fingerprint, OriginList, RunOptions};
use pvdb_core::model::{merge_append_only, restrict_to_timestamp, OriginVisit};
use pvdb_core::query::compile;
use pvdb_core::sim::{synthesize, SimParams};
use pvdb_core::store::{from_bytes, load_archive, save_archive, to_canonical_bytes};
use pvdb_core::ArchiveGraph;
use pvdb_testkit::fixtures::{
    android_fixture, android_fixture_scaled, fixture_url, long_chain, ChainSpec, ANDROID_QUERY,
    FIXTURE_KINDS, FIXTURE_VISIT, MIN_REVISIONS, ROOT_TIMESTAMP_THRESHOLD,
};
use pvdb_testkit::gen::{node_kinds, queries, NODE_KINDS};
use pvdb_testkit::oracle;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const EXPORT: i64 = 1_672_531_200;
const RQ_PARAMS: &str = include_str!("../../../scripts/rq-params.json");
const RQ_EXPORTS: [i64; 3] = [1_514_764_800, 1_577_836_800, 1_654_041_600];

fn pvdb<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> CommandOutcome {
    let mut argv: Vec<OsString> = vec!["pvdb".into()];
    argv.extend(args.iter().map(|a| a.as_ref().to_os_string()));
    run(argv)
}

fn save(dir: &Path, name: &str, a: &ArchiveGraph) -> PathBuf {
    let p = dir.join(name);
    save_archive(a, &p).unwrap();
    p
}

fn write_fp(dir: &Path, name: &str, fp: &Fingerprint) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, fp.to_json()).unwrap();
    p
}

fn cmd_run(fp: &Path, archive: &Path, extra: &[&str]) -> CommandOutcome {
    let mut args: Vec<OsString> = vec!["run".into(), fp.into(), archive.into()];
    args.extend(extra.iter().map(OsString::from));
    pvdb(&args)
}

fn visit_times(a: &ArchiveGraph) -> Vec<i64> {
    let mut ts: Vec<i64> = a
        .origins()
        .flat_map(|o| o.visits.iter().map(|v| v.timestamp))
        .collect();
    ts.sort();
    ts.dedup();
    ts
}

/// A timestamp at or before `limit`: a visit time, one second around it,
/// the limit itself or a time before any visit.
fn pick_timestamp(rng: &mut ChaCha8Rng, a: &ArchiveGraph, limit: i64) -> i64 {
    let ts: Vec<i64> = visit_times(a).into_iter().filter(|t| *t <= limit).collect();
    match rng.random_range(0..6) {
        0 => limit,
        1 => ts.first().map_or(limit, |t| t - 1),
        _ if ts.is_empty() => limit,
        2 => (ts.choose(rng).unwrap() + 1).min(limit),
        _ => *ts.choose(rng).unwrap(),
    }
}

fn rq_series() -> &'static Vec<ArchiveGraph> {
    static SERIES: OnceLock<Vec<ArchiveGraph>> = OnceLock::new();
    SERIES
        .get_or_init(|| synthesize(&SimParams::from_json(RQ_PARAMS).unwrap(), &RQ_EXPORTS).unwrap())
}

fn rq_timestamps() -> [i64; 3] {
    [
        "2018-01-01T00:00:00Z",
        "2020-01-01T00:00:00Z",
        "2022-06-01T00:00:00Z",
    ]
    .map(|s| pvdb_core::time::parse_rfc3339(s).unwrap())
}

/// The random (archive, query, timestamp) triples of the oracle criterion.
fn oracle_corpus() -> &'static Vec<(ArchiveGraph, String, i64)> {
    static CORPUS: OnceLock<Vec<(ArchiveGraph, String, i64)>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hosts = SimParams::default().forge_hosts;
        (0..200u64)
            .map(|i| {
                let mut params = SimParams {
                    seed: 40_000 + i,
                    origin_count: rng.random_range(0..=50),
                    visits_per_origin: (1, rng.random_range(1..=4)),
                    revisions_per_visit: (1, rng.random_range(1..=12)),
                    marker_file_probability: rng.random_range(0.0..=1.0),
                    ..SimParams::default()
                };
                params.forge_hosts = hosts[..rng.random_range(1..=hosts.len())].to_vec();
                let archive = synthesize(&params, &[EXPORT]).unwrap().pop().unwrap();
                let query = queries(400_000 + i, 1, 4).pop().unwrap();
                let t = pick_timestamp(&mut rng, &archive, EXPORT);
                (archive, query, t)
            })
            .collect()
    })
}

fn criterion_1() -> Outcome {
    let dir = TempDir::new().unwrap();
    let sizes = [5, 40, 120, 300, 1000];
    let (mut runs, mut selected, mut failed) = (0, 0, 0);
    for k in 0..20u64 {
        let params = SimParams {
            seed: 1_000 + k,
            origin_count: sizes[k as usize % sizes.len()],
            visits_per_origin: (1, 4),
            revisions_per_visit: (1, 6),
            marker_file_probability: 0.4,
            ..SimParams::default()
        };
        let archive = synthesize(&params, &[EXPORT]).unwrap().pop().unwrap();
        ensure!(archive.origin_count() <= 1000, "archive {k} is too large");
        let path = save(dir.path(), &format!("a{k}.jsonl"), &archive);
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        for (j, q) in queries(10_000 + k, 10, 4).into_iter().enumerate() {
            let fp = Fingerprint::new(q, pick_timestamp(&mut rng, &archive, EXPORT));
            let fp_path = write_fp(dir.path(), &format!("fp{k}-{j}.json"), &fp);
            let first = cmd_run(&fp_path, &path, &[]);
            for again in [
                cmd_run(&fp_path, &path, &[]),
                cmd_run(&fp_path, &path, &["--threads", "1"]),
            ] {
                runs += 1;
                ensure!(
                    again.exit == first.exit
                        && again.stdout == first.stdout
                        && again.stderr == first.stderr,
                    "archive {k}, fingerprint {j}: runs differ (exit {} vs {})",
                    first.exit,
                    again.exit
                );
            }
            if first.exit == EXIT_OK {
                let list = OriginList::parse(&first.stdout_text()).map_err(|e| e.to_string())?;
                ensure!(
                    first.stderr == format!("dataset_hash {}\n", list.dataset_hash()),
                    "archive {k}, fingerprint {j}: reported hash differs from the list"
                );
                selected += list.len();
            } else {
                failed += 1;
            }
        }
    }
    Ok(format!("200 fingerprints x 3 runs identical ({runs} reruns, {selected} selections, {failed} runs with errors)"))
}

fn criterion_2() -> Outcome {
    let dir = TempDir::new().unwrap();
    let exports = [1_500_000_000, 1_580_000_000, 1_660_000_000];
    let (mut checked, mut nonempty) = (0, 0);
    for s in 0..6u64 {
        let params = SimParams {
            seed: 2_000 + s,
            origin_count: 30 + 40 * s as usize,
            visits_per_origin: (1, 6),
            revisions_per_visit: (1, 10),
            marker_file_probability: 0.5,
            ..SimParams::default()
        };
        let series = synthesize(&params, &exports).unwrap();
        for w in series.windows(2) {
            ensure!(
                merge_append_only(&w[0], &w[1]).as_ref() == Ok(&w[1]),
                "series {s} is not append-only"
            );
        }
        let paths: Vec<PathBuf> = series
            .iter()
            .enumerate()
            .map(|(i, a)| save(dir.path(), &format!("s{s}-{i}.jsonl"), a))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(20 + s);
        let mut fps: Vec<Fingerprint> = queries(20_000 + s, 20, 4)
            .into_iter()
            .map(|q| Fingerprint::new(q, pick_timestamp(&mut rng, &series[0], exports[0])))
            .collect();
        fps.push(Fingerprint::new(ANDROID_QUERY, exports[0]));
        for (j, fp) in fps.iter().enumerate() {
            let fp_path = write_fp(dir.path(), &format!("fp{s}-{j}.json"), fp);
            let outs: Vec<CommandOutcome> =
                paths.iter().map(|p| cmd_run(&fp_path, p, &[])).collect();
            ensure!(
                outs[0].exit == EXIT_OK,
                "series {s}, fingerprint {j}: {}",
                outs[0].stderr
            );
            for (i, o) in outs.iter().enumerate().skip(1) {
                ensure!(
                    o.exit == EXIT_OK && o.stdout == outs[0].stdout && o.stderr == outs[0].stderr,
                    "series {s}, fingerprint {j}: export {i} gives a different list"
                );
            }
            checked += 1;
            nonempty += usize::from(outs[0].stdout_text().lines().count() > 1);
        }
    }
    Ok(format!(
        "{checked} fingerprints replay identically on 3 exports ({nonempty} with non-empty lists)"
    ))
}

fn criterion_3() -> Outcome {
    let dir = TempDir::new().unwrap();
    let series = rq_series();
    let latest = series.last().unwrap();
    let path = save(dir.path(), "latest.jsonl", latest);
    let ast = compile(ANDROID_QUERY).unwrap();
    let mut counts = Vec::new();
    for (i, t) in rq_timestamps().into_iter().enumerate() {
        let fp_path = write_fp(
            dir.path(),
            &format!("t{i}.json"),
            &Fingerprint::new(ANDROID_QUERY, t),
        );
        let out = cmd_run(&fp_path, &path, &[]);
        ensure!(out.exit == EXIT_OK, "run at {t}: {}", out.stderr);
        let list = OriginList::parse(&out.stdout_text()).map_err(|e| e.to_string())?;
        let expected =
            oracle::evaluate(&ast, latest, t).map_err(|e| format!("oracle at {t}: {e:?}"))?;
        ensure!(
            list == expected,
            "at {t}: engine selects {} origins, oracle {}",
            list.len(),
            expected.len()
        );
        counts.push(list.len());
    }
    ensure!(
        counts.windows(2).all(|w| w[0] < w[1]),
        "counts are not strictly increasing: {counts:?}"
    );
    Ok(format!(
        "{} origins, counts {counts:?} equal to the oracle",
        latest.origin_count()
    ))
}

fn criterion_4() -> Outcome {
    let mut kinds = BTreeSet::new();
    let (mut selections, mut errors) = (0, 0);
    for (i, (archive, query, t)) in oracle_corpus().iter().enumerate() {
        let ast = compile(query).map_err(|e| format!("pair {i}: {e}"))?;
        kinds.extend(node_kinds(&ast));
        let engine = run_fingerprint(
            &Fingerprint::new(query.clone(), *t),
            archive,
            &RunOptions::default(),
        );
        let expected = oracle::evaluate(&ast, archive, *t);
        match (engine, expected) {
            (Ok(out), Ok(list)) => {
                ensure!(
                    out.list == list,
                    "pair {i}: engine and oracle disagree on {query}"
                );
                selections += list.len();
            }
            (Err(_), Err(_)) => errors += 1,
            (e, o) => {
                return Err(format!(
                    "pair {i}: engine {:?} vs oracle {:?}",
                    e.map(|o| o.list.len()),
                    o.map(|l| l.len())
                ))
            }
        }
    }
    let missing: Vec<&&str> = NODE_KINDS.iter().filter(|k| !kinds.contains(**k)).collect();
    ensure!(missing.is_empty(), "queries never use {missing:?}");
    Ok(format!("200/200 pairs agree ({selections} selections, {errors} matching errors), all {} node kinds used", NODE_KINDS.len()))
}

fn criterion_5() -> Outcome {
    ensure!(
        ANDROID_QUERY.contains("size() >1000"),
        "query lacks the 1000-revision threshold"
    );
    ensure!(
        ANDROID_QUERY.contains("commiterTimestamp>1420066800"),
        "query lacks the root timestamp threshold"
    );
    ensure!(
        MIN_REVISIONS == 1000 && ROOT_TIMESTAMP_THRESHOLD == 1_420_066_800,
        "fixture thresholds drifted"
    );
    let dir = TempDir::new().unwrap();
    let path = save(dir.path(), "fixture.jsonl", &android_fixture());
    let fp = write_fp(
        dir.path(),
        "fp.json",
        &Fingerprint::new(ANDROID_QUERY, FIXTURE_VISIT),
    );
    let out = cmd_run(&fp, &path, &[]);
    ensure!(out.exit == EXIT_OK, "{}", out.stderr);
    let list = OriginList::parse(&out.stdout_text()).map_err(|e| e.to_string())?;
    let mut verdicts = Vec::new();
    for kind in FIXTURE_KINDS {
        let picked = list.get(&fixture_url(kind)).is_some();
        ensure!(
            picked == (kind == 'A'),
            "origin {kind} is {}",
            if picked { "selected" } else { "rejected" }
        );
        ensure!(
            picked == ChainSpec::fixture(kind).expected_selected(),
            "origin {kind} disagrees with its shape"
        );
        verdicts.push(format!(
            "{kind}={}",
            if picked { "selected" } else { "rejected" }
        ));
    }
    ensure!(list.len() == 1, "{} origins selected", list.len());
    Ok(verdicts.join(" "))
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn criterion_6() -> Outcome {
    let dir = TempDir::new().unwrap();
    let path = save(dir.path(), "latest.jsonl", rq_series().last().unwrap());
    for (i, t) in rq_timestamps().into_iter().enumerate() {
        let fp = write_fp(
            dir.path(),
            &format!("t{i}.json"),
            &Fingerprint::new(ANDROID_QUERY, t),
        );
        let a = cmd_run(&fp, &path, &[]);
        let b = cmd_run(&fp, &path, &["--no-optimize"]);
        ensure!(
            a.exit == EXIT_OK && a.stdout == b.stdout && a.stderr == b.stderr,
            "timestamp {t}: results differ"
        );
    }
    let plain = RunOptions {
        optimize: false,
        ..RunOptions::default()
    };
    for (i, (archive, query, t)) in oracle_corpus().iter().enumerate() {
        let fp = Fingerprint::new(query.clone(), *t);
        let a = run_fingerprint(&fp, archive, &RunOptions::default())
            .map(|o| o.list)
            .map_err(|e| e.to_string());
        let b = run_fingerprint(&fp, archive, &plain)
            .map(|o| o.list)
            .map_err(|e| e.to_string());
        ensure!(a == b, "pair {i}: optimized and unoptimized results differ");
    }

    let archive = android_fixture_scaled(10_000);
    let ast = compile(ANDROID_QUERY).unwrap();
    let optimized = optimize(&ast);
    let view = restrict_to_timestamp(&archive, FIXTURE_VISIT);
    let opts = RunOptions {
        threads: Some(1),
        ..RunOptions::default()
    };
    let (mut fast, mut slow) = (Vec::new(), Vec::new());
    let mut lists = BTreeSet::new();
    for _ in 0..7 {
        let start = Instant::now();
        lists.insert(evaluate(&optimized, &view, &opts).unwrap().serialize());
        fast.push(start.elapsed());
        let start = Instant::now();
        lists.insert(evaluate(&ast, &view, &opts).unwrap().serialize());
        slow.push(start.elapsed());
    }
    ensure!(lists.len() == 1, "scaled fixture results differ");
    let (fast, slow) = (median(fast), median(slow));
    ensure!(
        fast <= slow,
        "optimized median {fast:?} exceeds unoptimized {slow:?}"
    );
    Ok(format!(
        "203 corpus runs identical; 10k fixture single-threaded median {:.1} ms optimized vs {:.1} ms unoptimized",
        fast.as_secs_f64() * 1e3,
        slow.as_secs_f64() * 1e3
    ))
}

fn criterion_7() -> Outcome {
    let dir = TempDir::new().unwrap();

    // every byte of a small archive
    let small = synthesize(
        &SimParams {
            seed: 7,
            origin_count: 3,
            visits_per_origin: (1, 2),
            revisions_per_visit: (1, 2),
            ..SimParams::default()
        },
        &[EXPORT],
    )
    .unwrap()
    .pop()
    .unwrap();
    let original = to_canonical_bytes(&small);
    let target = dir.path().join("flipped.jsonl");
    let verify_flip = |bytes: &[u8], what: &str| -> Result<(), String> {
        std::fs::write(&target, bytes).unwrap();
        let out = pvdb(&[OsString::from("verify"), target.clone().into()]);
        ensure!(
            out.exit == EXIT_INTEGRITY,
            "{what}: verify exits {} ({})",
            out.exit,
            out.stderr.trim()
        );
        Ok(())
    };
    for pos in 0..original.len() {
        let mut bytes = original.clone();
        bytes[pos] ^= 0x01;
        verify_flip(&bytes, &format!("small archive, byte {pos}"))?;
    }

    // sampled positions and masks on the Android fixture
    let fixture = android_fixture();
    let fixture_bytes = to_canonical_bytes(&fixture);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2_000 {
        let pos = rng.random_range(0..fixture_bytes.len());
        let mask: u8 = rng.random_range(1..=255);
        let mut bytes = fixture_bytes.clone();
        bytes[pos] ^= mask;
        verify_flip(&bytes, &format!("fixture, byte {pos} xor {mask:#04x}"))?;
    }
    let flips = original.len() + 2_000;

    // recorded hash
    let path = save(dir.path(), "fixture.jsonl", &fixture);
    ensure!(
        pvdb(&[OsString::from("verify"), path.clone().into()]).exit == EXIT_OK,
        "original fixture fails verify"
    );
    let list = run_fingerprint(
        &Fingerprint::new(ANDROID_QUERY, FIXTURE_VISIT),
        &fixture,
        &RunOptions::default(),
    )
    .unwrap()
    .list;
    let fp = write_fp(
        dir.path(),
        "fp.json",
        &Fingerprint::new(ANDROID_QUERY, FIXTURE_VISIT).with_hash(list.dataset_hash()),
    );
    ensure!(
        cmd_run(&fp, &path, &[]).exit == EXIT_OK,
        "original archive does not reproduce the hash"
    );

    let (export, origins, nodes, provenance) = fixture.clone().into_parts();
    let a_url = fixture_url('A');
    let snapshot_of = |k: char| origins[&fixture_url(k)].visits[0].snapshot;
    let edited = |f: &dyn Fn(&mut BTreeMap<String, pvdb_core::model::Origin>)| {
        let mut o = origins.clone();
        f(&mut o);
        // a later export, so moved visits stay inside it
        ArchiveGraph::from_parts_unverified(export + 100, o, nodes.clone(), provenance.clone())
    };
    let changes: Vec<(&str, ArchiveGraph, i32)> = vec![
        (
            "drop selected origin",
            edited(&|o| {
                o.remove(&a_url);
            }),
            EXIT_MISMATCH,
        ),
        (
            "repoint selected origin",
            edited(&|o| o.get_mut(&a_url).unwrap().visits[0].snapshot = snapshot_of('B')),
            EXIT_MISMATCH,
        ),
        (
            "selected origin visited later",
            edited(&|o| o.get_mut(&a_url).unwrap().visits[0].timestamp = FIXTURE_VISIT + 1),
            EXIT_MISMATCH,
        ),
        (
            "new earlier visit selects B",
            edited(&|o| {
                let s = snapshot_of('A');
                o.get_mut(&fixture_url('B'))
                    .unwrap()
                    .visits
                    .push(OriginVisit {
                        timestamp: FIXTURE_VISIT,
                        snapshot: s,
                    });
                o.get_mut(&fixture_url('B')).unwrap().visits[0].timestamp = FIXTURE_VISIT - 10;
            }),
            EXIT_MISMATCH,
        ),
        (
            "new origin sharing A's snapshot",
            edited(&|o| {
                let s = snapshot_of('A');
                o.insert(
                    "https://gitlab.com/copy/a".into(),
                    pvdb_core::model::Origin {
                        url: "https://gitlab.com/copy/a".into(),
                        visits: vec![OriginVisit {
                            timestamp: FIXTURE_VISIT - 5,
                            snapshot: s,
                        }],
                    },
                );
            }),
            EXIT_MISMATCH,
        ),
        (
            "visit after the fingerprint",
            edited(&|o| {
                let s = snapshot_of('C');
                o.get_mut(&a_url).unwrap().visits.push(OriginVisit {
                    timestamp: FIXTURE_VISIT + 50,
                    snapshot: s,
                });
            }),
            EXIT_OK,
        ),
        (
            "rejected origin dropped",
            edited(&|o| {
                o.remove(&fixture_url('D'));
            }),
            EXIT_OK,
        ),
    ];
    for (i, (what, archive, want)) in changes.iter().enumerate() {
        let p = save(dir.path(), &format!("changed{i}.jsonl"), archive);
        ensure!(
            pvdb(&[OsString::from("verify"), p.clone().into()]).exit == EXIT_OK,
            "{what}: edited archive is invalid"
        );
        let out = cmd_run(&fp, &p, &[]);
        ensure!(
            out.exit == *want,
            "{what}: run exits {} instead of {want} ({})",
            out.exit,
            out.stderr.trim()
        );
        if *want == EXIT_MISMATCH {
            ensure!(
                out.stderr.contains(&list.dataset_hash()),
                "{what}: mismatch report lacks the recorded hash"
            );
        }
    }
    Ok(format!("{flips} corrupted files rejected with exit 3; recorded hash: 0 on original, 2 on 5 list changes, 0 on 2 neutral changes"))
}

fn criterion_8() -> Outcome {
    let dir = TempDir::new().unwrap();
    let mut archives: Vec<ArchiveGraph> = (0..17u64)
        .map(|k| {
            let params = SimParams {
                seed: 8_000 + k,
                origin_count: (k as usize * 7) % 60,
                revisions_per_visit: (1, 8),
                ..SimParams::default()
            };
            synthesize(&params, &[EXPORT]).unwrap().pop().unwrap()
        })
        .collect();
    archives.extend([android_fixture(), long_chain(50), ArchiveGraph::empty(0)]);
    for (k, a) in archives.iter().enumerate() {
        let p = save(dir.path(), &format!("r{k}.jsonl"), a);
        let bytes = std::fs::read(&p).unwrap();
        let loaded = load_archive(&p).map_err(|e| format!("archive {k}: {e}"))?;
        ensure!(&loaded == a, "archive {k}: load changes the graph");
        ensure!(
            to_canonical_bytes(&loaded) == bytes,
            "archive {k}: save after load changes the bytes"
        );
        ensure!(
            from_bytes(&bytes).ok().as_ref() == Some(a),
            "archive {k}: in-memory roundtrip differs"
        );
    }

    let mut series: Vec<Vec<ArchiveGraph>> = (0..5u64)
        .map(|s| {
            let params = SimParams {
                seed: 80 + s,
                origin_count: 25,
                visits_per_origin: (1, 8),
                ..SimParams::default()
            };
            synthesize(
                &params,
                &[
                    1_420_000_000,
                    1_480_000_000,
                    1_540_000_000,
                    1_600_000_000,
                    EXPORT,
                ],
            )
            .unwrap()
        })
        .collect();
    series.push(rq_series().clone());
    let mut pairs = 0;
    for (s, g) in series.iter().enumerate() {
        for i in 0..g.len() {
            for j in i..g.len() {
                let merged = merge_append_only(&g[i], &g[j])
                    .map_err(|e| format!("series {s}, {i}->{j}: {e}"))?;
                ensure!(
                    merged == g[j],
                    "series {s}: merging export {i} into {j} is not the later export"
                );
                for o in g[i].origins() {
                    let later = g[j]
                        .origin(&o.url)
                        .ok_or(format!("series {s}: {} vanished", o.url))?;
                    ensure!(
                        later.visits.starts_with(&o.visits),
                        "series {s}: history of {} rewritten",
                        o.url
                    );
                }
                ensure!(
                    g[i].nodes().all(|(id, _)| g[j].contains(id)),
                    "series {s}: nodes vanished"
                );
                pairs += 1;
            }
        }
    }

    // violations through the command
    let base = &series[0][2];
    let base_path = save(dir.path(), "base.jsonl", base);
    let (export, origins, nodes, _) = base.clone().into_parts();
    let victim = origins
        .values()
        .find(|o| o.visits.len() >= 2)
        .unwrap()
        .url
        .clone();
    let other_snapshot = origins.values().find(|o| o.url != victim).unwrap().visits[0].snapshot;
    let mut rewritten = origins.clone();
    rewritten.get_mut(&victim).unwrap().visits[0].snapshot = other_snapshot;
    let mut backdated = origins.clone();
    let first = backdated[&victim].visits[0].timestamp;
    backdated.get_mut(&victim).unwrap().visits.insert(
        0,
        OriginVisit {
            timestamp: first - 1,
            snapshot: other_snapshot,
        },
    );
    let mut interleaved = origins.clone();
    let v = &interleaved[&victim].visits;
    let middle = v[0].timestamp + (v[1].timestamp - v[0].timestamp) / 2;
    ensure!(middle > v[0].timestamp, "no room between the first two visits of {victim}");
    interleaved.get_mut(&victim).unwrap().visits.insert(
        1,
        OriginVisit {
            timestamp: middle,
            snapshot: other_snapshot,
        },
    );
    for (name, o) in [
        ("rewritten", rewritten),
        ("backdated", backdated),
        ("interleaved", interleaved),
    ] {
        let delta = save(
            dir.path(),
            &format!("{name}.jsonl"),
            &ArchiveGraph::from_parts_unverified(export, o, nodes.clone(), None),
        );
        let out_path = dir.path().join(format!("{name}-merged.jsonl"));
        let out = pvdb(&[
            OsString::from("merge"),
            base_path.clone().into(),
            delta.into(),
            "--out".into(),
            out_path.clone().into(),
        ]);
        ensure!(
            out.exit == EXIT_USER,
            "{name} delta: merge exits {} ({})",
            out.exit,
            out.stderr.trim()
        );
        ensure!(
            out.stderr.contains(&victim),
            "{name} delta: error does not name {victim}"
        );
        ensure!(!out_path.exists(), "{name} delta: merge wrote output");
    }
    // a delta missing old visits adds nothing
    let mut partial = origins.clone();
    partial.get_mut(&victim).unwrap().visits.remove(0);
    let partial = ArchiveGraph::from_parts_unverified(export, partial, nodes.clone(), None);
    ensure!(
        merge_append_only(base, &partial).as_ref() == Ok(base),
        "merging a partial delta changes the base"
    );
    let later = save(dir.path(), "later.jsonl", &series[0][4]);
    let out_path = dir.path().join("ok.jsonl");
    let out = pvdb(&[
        OsString::from("merge"),
        base_path.into(),
        later.clone().into(),
        "--out".into(),
        out_path.clone().into(),
    ]);
    ensure!(
        out.exit == EXIT_OK,
        "append-only merge rejected: {}",
        out.stderr
    );
    ensure!(
        std::fs::read(&out_path).unwrap() == std::fs::read(&later).unwrap(),
        "merged file differs from the later export"
    );
    Ok(format!("{} archives byte-identical; prefix property on {pairs} export pairs of {} series; 3 violations exit 1", archives.len(), series.len()))
}

fn status_kib(field: &str) -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with(field))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// Peak resident memory growth while `f` runs, when the kernel lets the
/// peak be reset.
fn peak_growth_kib<T>(f: impl FnOnce() -> T) -> (T, Option<u64>) {
    let reset = std::fs::write("/proc/self/clear_refs", "5").is_ok();
    let before = status_kib("VmRSS:");
    let value = f();
    let peak = status_kib("VmHWM:");
    match (reset, before, peak) {
        (true, Some(b), Some(p)) => (value, Some(p.saturating_sub(b))),
        _ => (value, None),
    }
}

fn criterion_9() -> Outcome {
    let mut report = Vec::new();
    // the optimizer caps `closure(parent)->size() > 1000`; the unoptimized
    // run walks the whole chain with the worklist
    for optimize in [true, false] {
        let opts = RunOptions {
            threads: Some(1),
            optimize,
            ..RunOptions::default()
        };
        let mut growth = Vec::new();
        for len in [25_000, 100_000] {
            let archive = long_chain(len);
            let fp = Fingerprint::new(ANDROID_QUERY, archive.export_timestamp());
            // a thread with a small fixed stack: deep recursion would overflow it
            let (result, kib) = std::thread::scope(|s| {
                std::thread::Builder::new()
                    .stack_size(256 * 1024)
                    .spawn_scoped(s, || {
                        peak_growth_kib(|| {
                            let start = Instant::now();
                            let out = run_fingerprint(&fp, &archive, &opts);
                            (out, start.elapsed())
                        })
                    })
                    .unwrap()
                    .join()
                    .unwrap()
            });
            let (out, elapsed) = result;
            let out = out.map_err(|e| format!("{len}-revision chain: {e}"))?;
            ensure!(out.list.len() == 1, "{len}-revision chain is not selected");
            ensure!(
                elapsed < Duration::from_secs(10),
                "{len}-revision chain took {elapsed:?}"
            );
            report.push(format!(
                "{len} revisions{} in {:.2} s, peak +{}",
                if optimize { "" } else { " (unoptimized)" },
                elapsed.as_secs_f64(),
                kib.map_or("n/a".to_string(), |k| format!(
                    "{:.1} MiB",
                    k as f64 / 1024.0
                ))
            ));
            growth.push(kib);
        }
        if let [Some(small), Some(big)] = growth[..] {
            // working memory holds the closure result, nothing per recursion level
            ensure!(big < 256 * 1024, "peak memory grew by {big} KiB");
            ensure!(
                big <= small * 8 + 16 * 1024,
                "memory grows faster than the chain ({small} -> {big} KiB)"
            );
        }
    }
    Ok(report.join("; "))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "determinism", criterion_1),
        (2, "temporal replay", criterion_2),
        (3, "temporal variation", criterion_3),
        (4, "oracle equivalence", criterion_4),
        (5, "fixture A-E", criterion_5),
        (6, "optimizer safety", criterion_6),
        (7, "integrity and hashing", criterion_7),
        (8, "roundtrip and append-only", criterion_8),
        (9, "scale", criterion_9),
    ];
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id} ({name}): FAIL: {detail} [{secs:.1} s]");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
