mod common;

use std::collections::BTreeSet;

use common::{data, in_rings, point_region_dist, random_plan, rings_of};
use nlst_core::catalog::relation_stats;
use nlst_core::corpus::QueryType;
use nlst_core::nlu::{coarse_tag, fine_extract, ExtractionResult};
use nlst_core::plan::{
    execute, map_query, parse_plan, render_plan, CmpOp, Expr, Func, JoinPred, MapError, PhysicalOp, PhysicalPlan,
    ResultSet,
};
use nlst_core::value::Value;
use nlst_geo::{Geometry, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TRAIN_KNN: &str = "Show me fifty nearest neighbors to the train 5 between 6am and 11am.";
const TRAIN_KNN_PLAN: &str = "query UTOrdered feed filter [(deftime(.UTrip) intersects [21600000, 39600000))] knearest[UTrip, train5, 50] consume;";

fn plan(root: PhysicalOp) -> PhysicalPlan {
    PhysicalPlan::new(root).unwrap()
}

fn names(rs: &ResultSet) -> Vec<String> {
    let i = rs.schema.iter().position(|a| a.name == "name").unwrap();
    rs.rows.iter().map(|r| r[i].to_string()).collect()
}

fn extract(nlq: &str, db: &nlst_core::catalog::Database) -> ExtractionResult {
    fine_extract(&coarse_tag(nlq).unwrap(), db.kb()).unwrap()
}

#[test]
fn renders_filter_example() {
    let p = plan(
        PhysicalOp::feed("districts")
            .filter(Expr::call(Func::Contains, vec![Expr::attr("area"), Expr::geom(Geometry::Point(Point { x: 1.0, y: 2.0 }))]))
            .consume(),
    );
    let text = render_plan(&p);
    assert_eq!(text, "query districts feed filter [(contains(.area, POINT (1 2)))] consume;");
    assert_eq!(parse_plan(&text).unwrap(), p);
}

#[test]
fn count_root_renders_count() {
    let p = plan(PhysicalOp::Count { input: Box::new(PhysicalOp::feed("pois")) });
    assert_eq!(render_plan(&p), "query pois feed count;");
}

#[test]
fn nearest_neighbor_plan_text() {
    let db = data("minicity");
    let m = map_query(QueryType::NearestNeighbor, &extract(TRAIN_KNN, &db), &db).unwrap();
    assert_eq!(m.plan.text(), TRAIN_KNN_PLAN);
    assert!(m.warnings.is_empty());
    assert_eq!(parse_plan(TRAIN_KNN_PLAN).unwrap(), m.plan);
}

#[test]
fn join_plan_for_fastfood_question() {
    let db = data("minicity-london");
    let ex = extract("What is the fastfood at each university in London?", &db);
    let p = map_query(QueryType::Join, &ex, &db).unwrap().plan;
    let PhysicalOp::Consume { input } = &p.root else { panic!("{p}") };
    let PhysicalOp::SpatialJoin { left, right, pred, .. } = input.as_ref() else { panic!("{p}") };
    assert_eq!(*pred, JoinPred::Contains);
    assert!(matches!(left.as_ref(), PhysicalOp::Feed { .. }) && matches!(right.as_ref(), PhysicalOp::Feed { .. }));
    let mut src = p.source_relations();
    src.sort();
    assert_eq!(src, ["fastfood", "universities"]);
}

#[test]
fn nearest_neighbor_needs_an_object() {
    let db = data("minicity");
    let ex = ExtractionResult { k: Some(3), nn_flag: true, ..Default::default() };
    assert_eq!(map_query(QueryType::NearestNeighbor, &ex, &db), Err(MapError::MissingSlot("object".into())));
}

#[test]
fn missing_k_defaults_to_one_with_warning() {
    let db = data("minicity");
    let ex = extract("Which vehicle is nearest to train 5 between 6am and 7am?", &db);
    let m = map_query(QueryType::NearestNeighbor, &ex, &db).unwrap();
    assert!(m.plan.text().contains("knearest[UTrip, train5, 1]"), "{}", m.plan);
    assert_eq!(m.warnings.len(), 1);
}

#[test]
fn syntax_error_names_the_token() {
    let e = parse_plan("query districts fee consume;").unwrap_err();
    assert_eq!(e.token, "fee");
    assert_eq!(e.pos, "query districts ".len());
}

#[test]
fn random_plans_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..500 {
        let p = random_plan(&mut rng);
        let text = render_plan(&p);
        let back = parse_plan(&text).unwrap_or_else(|e| panic!("case {i}: {e}\n{text}"));
        assert_eq!(back, p, "case {i}: {text}");
        assert_eq!(render_plan(&back), text);
    }
}

#[test]
fn false_filter_and_count() {
    let db = data("minicity");
    let none = plan(PhysicalOp::feed("pois").filter(Expr::Bool(false)).consume());
    assert!(execute(&none, &db).unwrap().0.rows.is_empty());
    let count = plan(PhysicalOp::Count { input: Box::new(PhysicalOp::feed("pois")) });
    let (rs, _) = execute(&count, &db).unwrap();
    assert_eq!(rs.rows.len(), 1);
    let n = relation_stats(&db, "pois").unwrap().tuple_count;
    assert_eq!(rs.rows[0][0], Value::Int(n as i64));
    assert_eq!(n, 10_000);
}

#[test]
fn containment_filter_matches_ray_casting() {
    let db = data("minicity");
    let districts = db.relation("districts").unwrap();
    let pois = db.relation("pois").unwrap();
    for d in districts.tuples.iter().take(4) {
        let Value::Region(r) = &d[1] else { panic!() };
        let rings = rings_of(r);
        let p = plan(
            PhysicalOp::feed("pois")
                .filter(Expr::call(Func::Contains, vec![Expr::geom(Geometry::Region((**r).clone())), Expr::attr("pos")]))
                .consume(),
        );
        let got: BTreeSet<String> = names(&execute(&p, &db).unwrap().0).into_iter().collect();
        let want: BTreeSet<String> = pois
            .tuples
            .iter()
            .filter(|t| matches!(&t[1], Value::Point(q) if in_rings((q.x, q.y), &rings)))
            .map(|t| t[0].to_string())
            .collect();
        assert_eq!(got, want, "{}", d[0]);
        assert!(!want.is_empty());
    }
}

#[test]
fn distance_filter_matches_brute_force() {
    let db = data("minicity");
    let london = db.kb().locations_named("City of London")[0].geometry.clone();
    let Geometry::Region(r) = &london else { panic!() };
    let rings = rings_of(r);
    for d in [0.0, 150.0, 800.0] {
        let p = plan(
            PhysicalOp::feed("pois")
                .filter(Expr::cmp(
                    CmpOp::Le,
                    Expr::call(Func::Distance, vec![Expr::attr("pos"), Expr::geom(london.clone())]),
                    Expr::Num(d),
                ))
                .consume(),
        );
        let got: BTreeSet<String> = names(&execute(&p, &db).unwrap().0).into_iter().collect();
        let want: BTreeSet<String> = db
            .relation("pois")
            .unwrap()
            .tuples
            .iter()
            .filter(|t| matches!(&t[1], Value::Point(q) if point_region_dist((q.x, q.y), &rings) <= d))
            .map(|t| t[0].to_string())
            .collect();
        assert_eq!(got, want, "d = {d}");
    }
}

#[test]
fn join_matches_nested_loop() {
    let db = data("minicity-london");
    let p = plan(
        PhysicalOp::SpatialJoin {
            left: Box::new(PhysicalOp::feed("universities")),
            right: Box::new(PhysicalOp::feed("fastfood")),
            left_attr: "campus".into(),
            right_attr: "pos".into(),
            pred: JoinPred::Contains,
        }
        .consume(),
    );
    let (rs, _) = execute(&p, &db).unwrap();
    let got: BTreeSet<(String, String)> = rs.rows.iter().map(|r| (r[0].to_string(), r[3].to_string())).collect();
    let mut want = BTreeSet::new();
    for u in &db.relation("universities").unwrap().tuples {
        let Value::Region(r) = &u[1] else { panic!() };
        let rings = rings_of(r);
        for f in &db.relation("fastfood").unwrap().tuples {
            if matches!(&f[1], Value::Point(q) if in_rings((q.x, q.y), &rings)) {
                want.insert((u[0].to_string(), f[0].to_string()));
            }
        }
    }
    assert_eq!(got, want);
    assert_eq!(rs.rows.len(), want.len());
}

#[test]
fn nearest_neighbor_execution() {
    let db = data("minicity");
    let p = parse_plan(TRAIN_KNN_PLAN).unwrap();
    let (a, _) = execute(&p, &db).unwrap();
    let (b, _) = execute(&p, &db).unwrap();
    assert_eq!(a, b);
    let links = a.knn_links.as_ref().unwrap();
    assert!(!links.is_empty());
    assert!(!names(&a).iter().any(|n| n == "train5"));
    for l in links {
        assert!(l.interval.start.0 >= 21_600_000 && l.interval.end.0 <= 39_600_000, "{l:?}");
        assert!((1..=50).contains(&l.rank));
        assert!(l.distance >= 0.0);
    }
}
