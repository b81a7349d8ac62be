use std::collections::BTreeSet;

use pvdb_core::query::{compile, parse, pretty_file};
use pvdb_testkit::gen::{node_kinds, queries, NODE_KINDS};

#[test]
fn generated_queries_typecheck_and_cover_the_language() {
    let mut seen = BTreeSet::new();
    for (i, q) in queries(7, 400, 4).iter().enumerate() {
        let ast = compile(q).unwrap_or_else(|e| panic!("query {i} rejected: {e}\n{q}"));
        seen.extend(node_kinds(&ast));
    }
    let missing: Vec<_> = NODE_KINDS.iter().filter(|r| !seen.contains(**r)).collect();
    assert!(missing.is_empty(), "generator never produced {missing:?}");
}

#[test]
fn generated_queries_survive_pretty_printing() {
    for q in queries(11, 100, 3) {
        let file = parse(&q).unwrap();
        let printed = pretty_file(&file);
        let again = parse(&printed).unwrap();
        assert_eq!(pretty_file(&again), printed);
        assert_eq!(
            compile(&q).unwrap().without_spans(),
            compile(&printed).unwrap().without_spans()
        );
    }
}

#[test]
fn generation_is_seeded() {
    assert_eq!(queries(3, 20, 4), queries(3, 20, 4));
    assert_ne!(queries(3, 20, 4), queries(4, 20, 4));
}
