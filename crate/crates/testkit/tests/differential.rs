//! The engine against the brute-force interpreter on generated queries.

use pvdb_core::engine::{evaluate, optimize, RunOptions};
use pvdb_core::model::restrict_to_timestamp;
use pvdb_core::query::compile;
use pvdb_core::sim::{synthesize, SimParams};
use pvdb_core::ArchiveGraph;
use pvdb_testkit::fixtures::android_fixture;
use pvdb_testkit::{gen, oracle};

fn archives() -> Vec<ArchiveGraph> {
    let params = SimParams {
        seed: 99,
        origin_count: 14,
        revisions_per_visit: (1, 6),
        marker_file_probability: 0.5,
        ..SimParams::default()
    };
    let mut out = synthesize(&params, &[1_672_531_200]).unwrap();
    out.push(android_fixture());
    out
}

fn timestamps(a: &ArchiveGraph) -> Vec<i64> {
    let mut ts: Vec<i64> = a
        .origins()
        .flat_map(|o| o.visits.iter().map(|v| v.timestamp))
        .collect();
    ts.sort();
    vec![
        ts[0] - 1,
        ts[ts.len() / 3],
        ts[ts.len() / 2] + 1,
        a.export_timestamp(),
    ]
}

#[test]
fn engine_agrees_with_oracle() {
    let archives = archives();
    let sequential = RunOptions {
        threads: Some(1),
        ..RunOptions::default()
    };
    let parallel = RunOptions {
        threads: Some(4),
        ..RunOptions::default()
    };
    for (i, q) in gen::queries(2024, 300, 4).iter().enumerate() {
        let ast = compile(q).unwrap();
        let opt = optimize(&ast);
        for a in &archives {
            for t in timestamps(a) {
                let expected = oracle::evaluate(&ast, a, t)
                    .unwrap_or_else(|e| panic!("oracle failed on {i}: {e}\n{q}"));
                let view = restrict_to_timestamp(a, t);
                for (label, ast, opts) in
                    [("plain", &ast, &sequential), ("optimized", &opt, &parallel)]
                {
                    let got = evaluate(ast, &view, opts)
                        .unwrap_or_else(|e| panic!("{label} run of {i} failed: {e}\n{q}"));
                    assert_eq!(got, expected, "{label} run of query {i} at {t}\n{q}");
                }
            }
        }
    }
}

#[test]
fn android_query_agrees_with_oracle() {
    let a = android_fixture();
    let ast = compile(pvdb_testkit::fixtures::ANDROID_QUERY).unwrap();
    let expected = oracle::evaluate(&ast, &a, a.export_timestamp()).unwrap();
    let got = evaluate(
        &optimize(&ast),
        &restrict_to_timestamp(&a, a.export_timestamp()),
        &RunOptions::default(),
    )
    .unwrap();
    assert_eq!(got, expected);
    assert_eq!(
        got.urls().collect::<Vec<_>>(),
        vec![pvdb_testkit::fixtures::fixture_url('A')]
    );
}
