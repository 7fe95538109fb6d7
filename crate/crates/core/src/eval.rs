//! Translatability, precision and response time over a labelled corpus.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::catalog::Database;
use crate::corpus::{CorpusEntry, QueryType};
use crate::nlu::TypeClassifier;
use crate::pipeline::translate;
use crate::plan::{execute, ground_truth_plan};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TypeBreakdown {
    pub n: usize,
    pub translated: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalFailure {
    pub nlq: String,
    #[serde(rename = "type")]
    pub query_type: QueryType,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub translated: usize,
    pub correct: usize,
    pub translatability: f64,
    pub precision: f64,
    pub mean_response_ms: f64,
    pub p95_response_ms: f64,
    pub per_type: BTreeMap<QueryType, TypeBreakdown>,
    pub failures: Vec<EvalFailure>,
}

impl EvalReport {
    /// Equal ignoring timings.
    pub fn same_outcome(&self, other: &EvalReport) -> bool {
        (self.n, self.translated, self.correct, &self.per_type, &self.failures)
            == (other.n, other.translated, other.correct, &other.per_type, &other.failures)
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Runs every entry through the pipeline. An entry is correct when its
/// result set equals that of the plan built directly from its bound slots.
pub fn evaluate(db: &Database, corpus: &[CorpusEntry], clf: &TypeClassifier, seed: u64) -> EvalReport {
    let mut per_type: BTreeMap<QueryType, TypeBreakdown> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut times = Vec::with_capacity(corpus.len());
    let (mut translated, mut correct) = (0, 0);
    for e in corpus {
        let slot = per_type.entry(e.query_type).or_default();
        slot.n += 1;
        let start = Instant::now();
        let outcome = translate(&e.nlq, db, clf, seed)
            .map_err(|err| format!("not translated: {err}"))
            .and_then(|t| execute(&t.plan, db).map_err(|err| format!("execution failed: {err}")));
        times.push(start.elapsed().as_secs_f64() * 1e3);
        let reason = match outcome {
            Err(r) => Some(r),
            Ok((got, _)) => {
                translated += 1;
                slot.translated += 1;
                let want = ground_truth_plan(e.query_type, &e.slots, db)
                    .map_err(|err| err.to_string())
                    .and_then(|p| execute(&p, db).map_err(|err| err.to_string()));
                match want {
                    Ok((want, _)) if want.rows == got.rows && want.knn_links == got.knn_links => {
                        correct += 1;
                        slot.correct += 1;
                        None
                    }
                    Ok(_) => Some("result differs from the expected result".to_string()),
                    Err(err) => Some(format!("no reference result: {err}")),
                }
            }
        };
        if let Some(reason) = reason {
            failures.push(EvalFailure { nlq: e.nlq.clone(), query_type: e.query_type, reason });
        }
    }
    let n = corpus.len();
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    EvalReport {
        n,
        translated,
        correct,
        translatability: if n == 0 { 0.0 } else { translated as f64 / n as f64 },
        precision: if translated == 0 { 0.0 } else { correct as f64 / translated as f64 },
        mean_response_ms: if n == 0 { 0.0 } else { times.iter().sum::<f64>() / n as f64 },
        p95_response_ms: percentile(&sorted, 0.95),
        per_type,
        failures,
    }
}
