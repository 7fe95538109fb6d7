//! One pass/fail line per acceptance criterion. Lines go straight to stderr
//! so they show up without `--nocapture`.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant as Clock;

use common::{data, model_path, random_plan};
use nlst_core::catalog::{Database, MatchKind};
use nlst_core::corpus::{generate, training_corpus, CorpusEntry, QueryType, TRAINING_PER_DB};
use nlst_core::eval::evaluate;
use nlst_core::nlu::{coarse_tag, fine_extract, train_classifier, TypeClassifier};
use nlst_core::optimizer::{enumerate_candidates_with, estimate_filter_rate, optimize};
use nlst_core::plan::{execute, map_query, parse_plan, render_plan, CmpOp, Expr, Func, PhysicalOp, PhysicalPlan};
use nlst_core::value::{AttrKind, Value};
use nlst_geo::{knearest_sweep, Geometry, Instant, Line, MovingPoint, Period, Point, RTree, Rect, Region, UnitPoint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// pinned thresholds
const KNN_INSTANCES: usize = 50;
const KNN_MAX_OBJECTS: usize = 20;
const KNN_MAX_UNITS: usize = 10;
const KNN_ENDPOINT_MS: i64 = 2;
const KNN_BUDGET_S: f64 = 60.0;
const WINDOW_CASES: usize = 500;
const PLAN_PAIRS: usize = 200;
const HELD_OUT: usize = 500;
const MIN_TRANSLATABILITY: f64 = 0.90;
const MIN_PRECISION: f64 = 0.90;
const MAX_MEAN_RESPONSE_MS: f64 = 2000.0;
const CLASSIFIER_CORPUS: usize = 700;
const MIN_ACCURACY: f64 = 0.95;
const MAX_SELECTIVITY: f64 = 0.01;
const FULL_RUNS: usize = 5;
const ROUND_TRIPS: usize = 500;

const FASTFOOD_JOIN: &str = "What is the fastfood at each university in London?";
const TRAIN_KNN: &str = "Show me fifty nearest neighbors to the train 5 between 6am and 11am.";
const TRAIN_KNN_PLAN: &str = "query UTOrdered feed filter [(deftime(.UTrip) intersects [21600000, 39600000))] knearest[UTrip, train5, 50] consume;";
const DISTRICT_PHRASE: &str = "Which pois are in City of London District?";

fn report(name: &str, ok: bool, detail: String) -> bool {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// kNN: dense sampling at every millisecond.

fn random_mpoint(rng: &mut ChaCha8Rng) -> MovingPoint {
    let n = rng.gen_range(1..=KNN_MAX_UNITS);
    let mut t = rng.gen_range(0..1000i64);
    let mut p = Point::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
    let mut units = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.2) {
            t += rng.gen_range(1..200);
            p = Point::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        }
        let d = rng.gen_range(50..600);
        let q = Point::new(p.x + rng.gen_range(-60.0..60.0), p.y + rng.gen_range(-60.0..60.0));
        units.push(UnitPoint::new(Period::new(t, t + d).unwrap(), p, q).unwrap());
        t += d;
        p = q;
    }
    MovingPoint::new(units).unwrap()
}

fn topk_at(cands: &[(u64, MovingPoint)], q: &MovingPoint, period: &Period, t: i64, k: usize) -> Vec<u64> {
    if !period.contains(t) {
        return Vec::new();
    }
    let Some(qp) = q.at(Instant(t)) else { return Vec::new() };
    let mut d: Vec<(f64, u64)> =
        cands.iter().filter_map(|(id, m)| m.at(Instant(t)).map(|p| (p.dist2(qp), *id))).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut ids: Vec<u64> = d.into_iter().take(k).map(|(_, id)| id).collect();
    ids.sort_unstable();
    ids
}

fn knn_oracle() -> bool {
    let start = Clock::now();
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let (mut samples, mut off_change, mut bad_endpoints, mut endpoints) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..KNN_INSTANCES {
        let n = rng.gen_range(1..=KNN_MAX_OBJECTS);
        let cands: Vec<(u64, MovingPoint)> = (0..n as u64).map(|i| (i, random_mpoint(&mut rng))).collect();
        let q = random_mpoint(&mut rng);
        let k = [1, 3, 5][rng.gen_range(0..3)];
        let s = rng.gen_range(0..2000i64);
        let period = Period::new(s, s + rng.gen_range(500..6000)).unwrap();
        let out = knearest_sweep(&cands, &q, period, k).unwrap();
        let lo = period.start.0 - KNN_ENDPOINT_MS - 1;
        let hi = period.end.0 + KNN_ENDPOINT_MS + 1;
        let oracle: Vec<Vec<u64>> = (lo..=hi).map(|t| topk_at(&cands, &q, &period, t, k)).collect();
        let at = |t: i64| &oracle[(t - lo) as usize];
        let changes_near = |t: i64, obj: Option<u64>| {
            (t - KNN_ENDPOINT_MS..=t + KNN_ENDPOINT_MS).filter(|&u| u > lo && u <= hi).any(|u| match obj {
                Some(o) => at(u - 1).contains(&o) != at(u).contains(&o),
                None => at(u - 1) != at(u),
            })
        };
        for t in period.start.0..period.end.0 {
            samples += 1;
            let mut got: Vec<u64> = out.iter().filter(|n| n.interval.contains(t)).map(|n| n.object).collect();
            got.sort_unstable();
            if got != *at(t) && !changes_near(t, None) {
                off_change += 1;
            }
        }
        for iv in &out {
            for e in [iv.interval.start.0, iv.interval.end.0] {
                endpoints += 1;
                if !changes_near(e, Some(iv.object)) {
                    bad_endpoints += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "kNN sweep vs dense sampling",
        off_change == 0 && bad_endpoints == 0 && secs < KNN_BUDGET_S,
        format!(
            "{KNN_INSTANCES} instances, {samples} instants, {off_change} mismatches away from an oracle change, \
             {bad_endpoints}/{endpoints} endpoints off by more than {KNN_ENDPOINT_MS} ms, {secs:.1} s (< {KNN_BUDGET_S} s)"
        ),
    )
}

// Index: R-tree windows against a linear scan, indexed plans against baselines.

fn random_rect(rng: &mut ChaCha8Rng, extent: f64, max_size: f64) -> Rect {
    let (x, y) = (rng.gen_range(0.0..extent), rng.gen_range(0.0..extent));
    Rect::new(x, y, x + rng.gen_range(0.0..max_size), y + rng.gen_range(0.0..max_size)).unwrap()
}

fn in_bounds(rng: &mut ChaCha8Rng, b: &Rect) -> Point {
    Point::new(rng.gen_range(b.xmin..=b.xmax), rng.gen_range(b.ymin..=b.ymax))
}

fn random_literal(rng: &mut ChaCha8Rng, b: &Rect) -> Geometry {
    let span = (b.xmax - b.xmin).max(b.ymax - b.ymin);
    let c = in_bounds(rng, b);
    match rng.gen_range(0..3) {
        0 => Geometry::Point(c),
        1 => {
            let d = Point::new(c.x + rng.gen_range(-0.2..0.2) * span, c.y + rng.gen_range(-0.2..0.2) * span);
            Geometry::Line(Line::from_path(&[c, d]).unwrap())
        }
        _ => {
            let (w, h) = (rng.gen_range(0.01..0.3) * span, rng.gen_range(0.01..0.3) * span);
            let ring = vec![c, Point::new(c.x + w, c.y), Point::new(c.x + w, c.y + h), Point::new(c.x, c.y + h), c];
            Geometry::Region(Region::new(vec![ring]).unwrap())
        }
    }
}

fn random_predicate(rng: &mut ChaCha8Rng, attr: &str, kind: AttrKind, b: &Rect) -> Expr {
    let span = (b.xmax - b.xmin).max(b.ymax - b.ymin);
    let g = random_literal(rng, b);
    let a = Expr::attr(attr);
    match rng.gen_range(0..4) {
        // containment is defined for a region around a point
        0 if kind == AttrKind::Point => {
            let c = in_bounds(rng, b);
            let (w, h) = (rng.gen_range(0.01..0.3) * span, rng.gen_range(0.01..0.3) * span);
            let ring = vec![c, Point::new(c.x + w, c.y), Point::new(c.x + w, c.y + h), Point::new(c.x, c.y + h), c];
            Expr::call(Func::Contains, vec![Expr::geom(Geometry::Region(Region::new(vec![ring]).unwrap())), a])
        }
        0 if kind == AttrKind::Region => Expr::call(Func::Contains, vec![a, Expr::geom(Geometry::Point(in_bounds(rng, b)))]),
        0 | 1 => Expr::call(Func::Intersects, vec![a, Expr::geom(g)]),
        2 => Expr::call(Func::Intersects, vec![Expr::geom(g), a]),
        _ => {
            let d = rng.gen_range(0.0..0.15) * span;
            Expr::cmp(CmpOp::Le, Expr::call(Func::Distance, vec![a, Expr::geom(g)]), Expr::Num(d))
        }
    }
}

fn index_correctness(dbs: &[Database]) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let mut window_bad = 0;
    for case in 0..WINDOW_CASES {
        let n = rng.gen_range(1..400);
        let entries: Vec<(Rect, u64)> = (0..n).map(|i| (random_rect(&mut rng, 1000.0, 40.0), i as u64)).collect();
        let tree = RTree::bulk_load(entries.clone(), [4, 8, 16][case % 3]).unwrap();
        let w = random_rect(&mut rng, 1000.0, 300.0);
        let scan: Vec<u64> = entries.iter().filter(|(r, _)| r.intersects(&w)).map(|(_, id)| *id).collect();
        if tree.window(&w) != scan {
            window_bad += 1;
        }
    }

    let targets: Vec<(&Database, String, String, AttrKind, Rect)> = dbs
        .iter()
        .flat_map(|db| {
            db.relations().iter().flat_map(move |r| {
                r.attributes.iter().filter(|a| a.indexed).map(move |a| {
                    let b = db.all_stats().find(|s| s.relation == r.name).unwrap().extents[&a.name].rect.unwrap();
                    (db, r.name.clone(), a.name.clone(), a.kind, b)
                })
            })
        })
        .collect();
    let (mut pair_bad, mut missing, mut nonempty) = (0, 0, 0);
    for _ in 0..PLAN_PAIRS {
        let (db, rel, attr, kind, b) = &targets[rng.gen_range(0..targets.len())];
        let pred = random_predicate(&mut rng, attr, *kind, b);
        let base = PhysicalPlan::new(PhysicalOp::feed(rel).filter(pred).consume()).unwrap();
        let cands = enumerate_candidates_with(&base, db, 0.0, 1.0);
        let Some(indexed) = cands.indexed.first() else {
            missing += 1;
            continue;
        };
        let a = execute(&base, db).unwrap().0;
        let b = execute(indexed, db).unwrap().0;
        nonempty += usize::from(!a.rows.is_empty());
        if a != b {
            pair_bad += 1;
        }
    }
    report(
        "index correctness",
        window_bad == 0 && pair_bad == 0 && missing == 0,
        format!(
            "{window_bad}/{WINDOW_CASES} window queries differ from a linear scan; \
             {pair_bad}/{PLAN_PAIRS} indexed plans differ from their baseline ({missing} without an indexed variant, {nonempty} non-empty)"
        ),
    )
}

// End to end over a held-out corpus.

fn end_to_end(dbs: &[Database], clf: &TypeClassifier) -> (bool, bool) {
    let refs: Vec<&Database> = dbs.iter().collect();
    let seen: BTreeSet<String> =
        training_corpus(&refs, TRAINING_PER_DB, 7).unwrap().into_iter().map(|e| e.nlq).collect();
    let per_db = HELD_OUT / dbs.len();
    let (mut n, mut translated, mut correct, mut total_ms) = (0usize, 0usize, 0usize, 0.0);
    for (i, db) in dbs.iter().enumerate() {
        let held: Vec<CorpusEntry> = generate(db, 4 * per_db, 9000 + i as u64)
            .unwrap()
            .into_iter()
            .filter(|e| !seen.contains(&e.nlq))
            .take(per_db)
            .collect();
        assert_eq!(held.len(), per_db, "not enough unseen questions for {}", db.name);
        let r = evaluate(db, &held, clf, 11);
        n += r.n;
        translated += r.translated;
        correct += r.correct;
        total_ms += r.mean_response_ms * r.n as f64;
    }
    let t = translated as f64 / n as f64;
    let p = if translated == 0 { 0.0 } else { correct as f64 / translated as f64 };
    let mean = total_ms / n as f64;
    let ratios = report(
        "end-to-end translatability and precision",
        n == HELD_OUT && t >= MIN_TRANSLATABILITY && p >= MIN_PRECISION,
        format!(
            "n = {n}, translatability {t:.3} (>= {MIN_TRANSLATABILITY}), precision {p:.3} (>= {MIN_PRECISION})"
        ),
    );
    let timing = report(
        "end-to-end mean response time (advisory)",
        mean <= MAX_MEAN_RESPONSE_MS,
        format!("{mean:.2} ms per query (<= {MAX_MEAN_RESPONSE_MS} ms)"),
    );
    (ratios, timing)
}

// Classifier accuracy on an 80/20 split.

fn classifier(db: &Database) -> bool {
    let mut corpus = generate(db, CLASSIFIER_CORPUS, 703).unwrap();
    corpus.shuffle(&mut ChaCha8Rng::seed_from_u64(704));
    let cut = CLASSIFIER_CORPUS * 4 / 5;
    let (train, test) = corpus.split_at(cut);
    let a = train_classifier(train, 705).unwrap();
    let b = train_classifier(train, 705).unwrap();
    let same = a == b;
    let hits = test.iter().filter(|e| a.classify(&e.nlq).0 == e.query_type).count();
    let acc = hits as f64 / test.len() as f64;
    report(
        "classifier held-out accuracy",
        acc >= MIN_ACCURACY && same,
        format!("{hits}/{} = {acc:.3} (>= {MIN_ACCURACY}), retraining identical: {same}", test.len()),
    )
}

// Optimizer on the 10,000-point relation.

fn optimizer_benefit(db: &Database) -> bool {
    let pois = db.relation("pois").unwrap();
    let Value::Point(anchor) = pois.tuples[0][1] else { panic!("pois.pos is not a point") };
    let pred = |d: f64| {
        Expr::cmp(
            CmpOp::Le,
            Expr::call(Func::Distance, vec![Expr::attr("pos"), Expr::geom(Geometry::Point(anchor))]),
            Expr::Num(d),
        )
    };
    // the widest radius in a doubling ladder that stays under the selectivity cap
    let mut d = 10.0;
    while estimate_filter_rate(&pred(2.0 * d), pois, pois.tuples.len(), 0).unwrap() <= MAX_SELECTIVITY && d < 1e6 {
        d *= 2.0;
    }
    let sel = estimate_filter_rate(&pred(d), pois, pois.tuples.len(), 0).unwrap();
    let base = PhysicalPlan::new(PhysicalOp::feed("pois").filter(pred(d)).consume()).unwrap();
    let (chosen, _) = optimize(&base, db, 0.1, 706);
    let indexed = chosen.uses_index();
    let (rb, _) = execute(&base, db).unwrap();
    let (rc, _) = execute(&chosen, db).unwrap();
    let mut tb = Vec::new();
    let mut tc = Vec::new();
    for _ in 0..FULL_RUNS {
        tb.push(execute(&base, db).unwrap().1);
        tc.push(execute(&chosen, db).unwrap().1);
    }
    let (mb, mc) = (median(tb), median(tc));
    report(
        "optimizer benefit",
        pois.tuples.len() == 10_000 && sel <= MAX_SELECTIVITY && indexed && mc <= mb && rb == rc,
        format!(
            "selectivity {sel:.4} (<= {MAX_SELECTIVITY}), indexed plan chosen: {indexed}, median of {FULL_RUNS} runs \
             {mc:.3} ms vs baseline {mb:.3} ms, {} rows, identical results: {}",
            rb.rows.len(),
            rb == rc
        ),
    )
}

// Plan text.

fn grammar(db: &Database) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut bad = 0;
    for _ in 0..ROUND_TRIPS {
        let p = random_plan(&mut rng);
        if parse_plan(&render_plan(&p)).as_ref() != Ok(&p) {
            bad += 1;
        }
    }
    let ex = fine_extract(&coarse_tag(TRAIN_KNN).unwrap(), db.kb()).unwrap();
    let text = map_query(QueryType::NearestNeighbor, &ex, db).map(|m| m.plan.text()).unwrap_or_default();
    report(
        "plan grammar",
        bad == 0 && text == TRAIN_KNN_PLAN,
        format!("{bad}/{ROUND_TRIPS} round trips differ; the train question renders as `{text}`"),
    )
}

// Worked examples.

fn examples(minicity: &Database, clf: &TypeClassifier) -> bool {
    let join_type = clf.classify(FASTFOOD_JOIN).0;
    let knn_type = clf.classify(TRAIN_KNN).0;
    let ex = fine_extract(&coarse_tag(DISTRICT_PHRASE).unwrap(), minicity.kb()).unwrap();
    let m = ex.entities.iter().find(|e| e.name == "City of London");
    let grounded = m.is_some_and(|m| m.kind == MatchKind::Location)
        && ex.locations.len() == 1
        && minicity.kb().locations[ex.locations[0]].kind == AttrKind::Region
        && !ex.entities.iter().any(|e| e.name == "districts" || e.name == "area");
    report(
        "worked examples",
        join_type == QueryType::Join && knn_type == QueryType::NearestNeighbor && grounded,
        format!("fastfood question -> {join_type}, train question -> {knn_type}, district phrase -> {:?}", m.map(|m| (m.kind, &m.name))),
    )
}

#[test]
fn acceptance() {
    let minicity = data("minicity");
    let london = data("minicity-london");
    let clf = TypeClassifier::load(model_path()).unwrap();

    let knn = knn_oracle();
    let dbs = vec![minicity, london];
    let index = index_correctness(&dbs);
    let (e2e, _advisory_timing) = end_to_end(&dbs, &clf);
    let cls = classifier(&dbs[0]);
    let opt = optimizer_benefit(&dbs[0]);
    let gram = grammar(&dbs[0]);
    let exs = examples(&dbs[0], &clf);

    let hard = [("kNN", knn), ("index", index), ("end-to-end", e2e), ("classifier", cls), ("optimizer", opt), ("grammar", gram), ("examples", exs)];
    let failed: Vec<&str> = hard.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
