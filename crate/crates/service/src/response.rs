//! The query response document.

use nlst_core::catalog::Database;
use nlst_core::nlu::TypeClassifier;
use nlst_core::optimizer::OptimizerReport;
use nlst_core::pipeline::{run_query, ErrorCategory, QueryError, Trace, TranslateError};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::geojson::{table, to_geojson};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub db: String,
    pub nlq: String,
    #[serde(default)]
    pub optimize: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sample_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Results {
    pub geojson: Json,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Json>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub baseline_ms: f64,
    /// Absent unless the optimizer ran.
    pub optimized_ms: Option<f64>,
    pub translation_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResponse {
    pub id: u64,
    pub db: String,
    pub nlq: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_plan_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator_tree: Option<Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Results>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerReport>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<TranslateError>,
}

impl QueryResponse {
    fn failed(db: &str, nlq: &str, error: TranslateError) -> Self {
        QueryResponse {
            id: 0,
            db: db.to_string(),
            nlq: nlq.to_string(),
            trace: None,
            plan_text: None,
            baseline_plan_text: None,
            operator_tree: None,
            results: None,
            timing: None,
            optimizer: None,
            warnings: Vec::new(),
            error: Some(error),
        }
    }
}

/// Answers one question against one database. User-level failures are
/// reported inside the response.
pub fn answer(db: &Database, clf: &TypeClassifier, nlq: &str, optimize: bool, sample_fraction: f64, seed: u64) -> QueryResponse {
    match run_query(nlq, db, clf, optimize, sample_fraction, seed) {
        Err(QueryError::Translate(e)) => QueryResponse::failed(&db.name, nlq, e),
        Err(QueryError::Exec(e)) => QueryResponse::failed(
            &db.name,
            nlq,
            TranslateError {
                category: ErrorCategory::UnsupportedType,
                message: e.to_string(),
                suggestions: nlst_core::pipeline::example_questions(db, None, 3, seed),
            },
        ),
        Ok(out) => {
            let (columns, rows) = table(&out.result);
            QueryResponse {
                id: 0,
                db: db.name.clone(),
                nlq: nlq.to_string(),
                plan_text: Some(out.plan.text()),
                baseline_plan_text: Some(out.translation.plan.text()),
                operator_tree: Some(out.plan.root.to_json()),
                results: Some(Results { geojson: to_geojson(&out.result), columns, rows }),
                timing: Some(Timing {
                    baseline_ms: out.baseline_ms,
                    optimized_ms: out.optimized_ms,
                    translation_ms: out.translation.translation_ms,
                }),
                optimizer: out.optimizer,
                warnings: out.translation.warnings,
                trace: Some(out.translation.trace),
                error: None,
            }
        }
    }
}
