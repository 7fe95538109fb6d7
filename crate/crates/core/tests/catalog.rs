mod common;

use std::fs;
use std::path::Path;

use common::data;
use nlst_core::catalog::{kb_lookup, load_dataset, relation_stats, CatalogError, MatchKind};

fn write_dataset(dir: &Path, rows: &str) {
    fs::write(
        dir.join("catalog.json"),
        r#"{"name": "t", "epoch": "day0", "relations": [{"name": "spots", "file": "spots.tsv", "attributes": [
            {"name": "name", "kind": "text", "indexed": false},
            {"name": "pos", "kind": "point", "indexed": true},
            {"name": "rating", "kind": "real", "indexed": false},
            {"name": "visits", "kind": "int", "indexed": false}]}]}"#,
    )
    .unwrap();
    fs::write(dir.join("spots.tsv"), format!("name\tpos\trating\tvisits\n{rows}")).unwrap();
}

#[test]
fn missing_catalog() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(CatalogError::MissingCatalog(_))));
}

#[test]
fn short_row_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "a\tPOINT (1 2)\t1.5\t3\nb\tPOINT (3 4)\t2.5\n");
    match load_dataset(dir.path()) {
        Err(CatalogError::SchemaMismatch { relation, row, .. }) => assert_eq!((relation.as_str(), row), ("spots", 2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_geometry_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "a\tPOINT (1 2\t1.5\t3\n");
    assert!(matches!(load_dataset(dir.path()), Err(CatalogError::BadGeometry { row: 1, .. })));
}

#[test]
fn small_dataset_loads() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "a\tPOINT (1 2)\t1.5\t3\nb\tPOINT (3 4)\t2.5\t7\n");
    let db = load_dataset(dir.path()).unwrap();
    let s = relation_stats(&db, "spots").unwrap();
    assert_eq!(s.tuple_count, 2);
    let r = s.extents["pos"].rect.unwrap();
    assert_eq!((r.xmin, r.ymin, r.xmax, r.ymax), (1.0, 2.0, 3.0, 4.0));
    assert!(matches!(relation_stats(&db, "nope"), Err(CatalogError::UnknownRelation(_))));
}

#[test]
fn loading_is_deterministic() {
    let a = serde_json::to_string(&data("minicity")).unwrap();
    let b = serde_json::to_string(&data("minicity")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lookup_examples() {
    let db = data("minicity");
    let kb = db.kb();
    let hits = kb_lookup(kb, "city of london");
    assert_eq!(hits[0].kind, MatchKind::Location);
    assert_eq!(hits[0].score, 1.0);
    assert_eq!(kb.display_name(hits[0].entry), "City of London");
    assert!(kb_lookup(kb, "zzzzqq").is_empty());
    let typo = kb_lookup(kb, "universitis");
    assert_eq!(typo[0].kind, MatchKind::Relation);
    assert_eq!(kb.display_name(typo[0].entry), "universities");
    assert!(typo[0].score >= 0.8 && typo[0].score < 1.0);
    for l in kb.locations.iter().take(50) {
        let first = &kb_lookup(kb, &l.surface_name)[0];
        assert_eq!((first.score, kb.display_name(first.entry)), (1.0, l.surface_name.as_str()));
    }
}
