use std::collections::BTreeSet;
use std::path::PathBuf;

use nlst_core::catalog::{load_dataset, Database};
use nlst_core::plan::{execute, parse_plan};
use nlst_service::geojson::{table, to_geojson};
use serde_json::Value;

fn data(name: &str) -> Database {
    load_dataset(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)).unwrap()
}

fn features(text: &str, db: &Database) -> Vec<Value> {
    let (rs, _) = execute(&parse_plan(text).unwrap(), db).unwrap();
    let g = to_geojson(&rs);
    assert_eq!(g["type"], "FeatureCollection");
    g["features"].as_array().unwrap().clone()
}

#[test]
fn empty_result_is_an_empty_collection() {
    let db = data("minicity");
    assert!(features("query pois feed filter [(false)] consume;", &db).is_empty());
}

#[test]
fn one_point_row() {
    let db = data("minicity");
    let name = db.relation("pois").unwrap().tuple_name(0).unwrap().to_string();
    let f = features(&format!("query pois feed filter [(.name = \"{name}\")] consume;"), &db);
    assert_eq!(f.len(), 1);
    assert_eq!(f[0]["geometry"]["type"], "Point");
    assert_eq!(f[0]["geometry"]["coordinates"].as_array().unwrap().len(), 2);
    let p = &f[0]["properties"];
    assert_eq!(p["name"], name.as_str());
    assert!(p["rating"].is_number());
    assert_eq!(p["attribute"], "pos");
    assert_eq!(p["row"], 0);
}

#[test]
fn region_rings_are_closed() {
    let db = data("minicity");
    for f in features("query districts feed consume;", &db) {
        assert_eq!(f["geometry"]["type"], "Polygon");
        for ring in f["geometry"]["coordinates"].as_array().unwrap() {
            let r = ring.as_array().unwrap();
            assert!(r.len() >= 4);
            assert_eq!(r.first(), r.last());
        }
    }
}

#[test]
fn nearest_neighbor_links_are_ranked() {
    let db = data("minicity");
    let plan = "query UTOrdered feed filter [(deftime(.UTrip) intersects [21600000, 21601000))] knearest[UTrip, train5, 3] consume;";
    let f = features(plan, &db);
    let links: Vec<&Value> = f.iter().filter(|x| x["properties"]["kind"] == "knn-link").collect();
    assert_eq!(links.len(), 3);
    let ranks: BTreeSet<u64> = links.iter().map(|l| l["properties"]["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, BTreeSet::from([1, 2, 3]));
    for l in &links {
        assert_eq!(l["geometry"]["type"], "LineString");
        assert!(l["properties"]["distance"].as_f64().unwrap() >= 0.0);
    }
    // trajectories carry per-vertex times
    let trips: Vec<&Value> = f.iter().filter(|x| x["properties"]["attribute"] == "UTrip").collect();
    assert_eq!(trips.len(), 3);
    for t in trips {
        let n = t["geometry"]["coordinates"].as_array().unwrap().len();
        assert_eq!(t["properties"]["t0"].as_array().unwrap().len(), n);
        assert_eq!(t["properties"]["t1"].as_array().unwrap().len(), n);
    }
}

#[test]
fn table_matches_schema() {
    let db = data("minicity");
    let (rs, _) = execute(&parse_plan("query roads feed consume;").unwrap(), &db).unwrap();
    let (cols, rows) = table(&rs);
    assert_eq!(cols, ["name", "path", "length"]);
    assert_eq!(rows.len(), rs.rows.len());
    assert!(rows.iter().all(|r| r.len() == 3));
}
