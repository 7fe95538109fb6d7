//! Question in, plan (and optionally results) out.

use std::time::Instant;

use serde::Serialize;

use crate::catalog::Database;
use crate::corpus::{generate, QueryType};
use crate::nlu::{coarse_tag, fine_extract, ExtractionResult, NluError, Tagging, TypeClassifier};
use crate::optimizer::{optimize, OptimizerReport};
use crate::plan::{execute, map_query, ExecError, MapError, PhysicalPlan, ResultSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    UnsupportedType,
    Syntax,
    Entity,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct TranslateError {
    pub category: ErrorCategory,
    pub message: String,
    pub suggestions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeScore {
    #[serde(rename = "type")]
    pub query_type: QueryType,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub tagging: Tagging,
    pub extraction: ExtractionResult,
    #[serde(rename = "type")]
    pub query_type: QueryType,
    /// Classifier scores, best first.
    pub scores: Vec<TypeScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub trace: Trace,
    pub plan: PhysicalPlan,
    pub warnings: Vec<String>,
    pub translation_ms: f64,
}

/// Whether the extraction carries what a query type needs.
pub fn satisfies(t: QueryType, ex: &ExtractionResult, db: &Database) -> bool {
    let relation = !ex.relations.is_empty();
    let location = !ex.locations.is_empty();
    let object = !ex.objects.is_empty();
    match t {
        QueryType::NearestNeighbor => ex.nn_flag && (object || (location && relation)),
        QueryType::Similarity => ex.similar_flag && object,
        QueryType::Join => ex.relations.len() >= 2 && ex.agg.is_none() && !ex.nn_flag,
        QueryType::Aggregation => ex.agg.is_some() && relation,
        QueryType::Range => ex.distance.is_some() && location && relation && ex.agg.is_none(),
        QueryType::BasicSpatial => {
            location && relation && ex.distance.is_none() && ex.agg.is_none() && !ex.nn_flag
        }
        QueryType::TimeInterval => {
            let moving = ex.relations.iter().any(|r| db.relation(r).is_some_and(|r| r.mpoint_attr().is_some()));
            ex.period.is_some() && (moving || object)
        }
    }
}

/// A few generated questions to show when a query cannot be handled.
pub fn example_questions(db: &Database, prefer: Option<QueryType>, n: usize, seed: u64) -> Vec<String> {
    let pool = generate(db, 7 * n.max(1), seed).unwrap_or_default();
    let mut out: Vec<String> =
        pool.iter().filter(|e| Some(e.query_type) == prefer).map(|e| e.nlq.clone()).take(n).collect();
    for e in &pool {
        if out.len() >= n {
            break;
        }
        if !out.contains(&e.nlq) {
            out.push(e.nlq.clone());
        }
    }
    out
}

fn nlu_error(e: NluError) -> TranslateError {
    let (category, suggestions) = match &e {
        NluError::UnknownEntity { suggestions, .. } => (ErrorCategory::Entity, suggestions.clone()),
        NluError::AmbiguousEntity { candidates, .. } => (ErrorCategory::Entity, candidates.clone()),
        _ => (ErrorCategory::Syntax, Vec::new()),
    };
    TranslateError { category, message: e.to_string(), suggestions }
}

fn unsupported(message: String, db: &Database, prefer: Option<QueryType>, seed: u64) -> TranslateError {
    TranslateError {
        category: ErrorCategory::UnsupportedType,
        message,
        suggestions: example_questions(db, prefer, 3, seed),
    }
}

/// Tag, extract, classify and map. The highest-scoring type whose slot
/// requirements hold is used. Errors always carry three suggestions,
/// padded with generated example questions.
pub fn translate(nlq: &str, db: &Database, clf: &TypeClassifier, seed: u64) -> Result<Translation, TranslateError> {
    translate_inner(nlq, db, clf, seed).map_err(|mut e| {
        if e.suggestions.len() < 3 {
            for q in example_questions(db, None, 3, seed) {
                if e.suggestions.len() < 3 && !e.suggestions.contains(&q) {
                    e.suggestions.push(q);
                }
            }
        }
        e
    })
}

fn translate_inner(nlq: &str, db: &Database, clf: &TypeClassifier, seed: u64) -> Result<Translation, TranslateError> {
    let start = Instant::now();
    let tagging = coarse_tag(nlq).map_err(nlu_error)?;
    let extraction = fine_extract(&tagging, db.kb()).map_err(nlu_error)?;
    let (_, raw) = clf.classify(nlq);
    let mut scores: Vec<TypeScore> =
        clf.classes.iter().zip(raw).map(|(&query_type, score)| TypeScore { query_type, score }).collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score));
    let best = scores.first().map(|s| s.query_type);
    let Some(query_type) = scores.iter().map(|s| s.query_type).find(|&t| satisfies(t, &extraction, db)) else {
        let msg = match best {
            Some(t) => format!("the question looks like a {t} query but lacks the values it needs"),
            None => "no query type fits the question".to_string(),
        };
        return Err(unsupported(msg, db, best, seed));
    };
    let mapped = map_query(query_type, &extraction, db).map_err(|e| match e {
        MapError::MissingSlot(_) | MapError::UnsupportedType(_) => unsupported(e.to_string(), db, Some(query_type), seed),
    })?;
    Ok(Translation {
        trace: Trace { tagging, extraction, query_type, scores },
        plan: mapped.plan,
        warnings: mapped.warnings,
        translation_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub translation: Translation,
    /// Plan whose results are reported; the baseline unless optimizing.
    pub plan: PhysicalPlan,
    pub result: ResultSet,
    pub baseline_ms: f64,
    pub optimized_ms: Option<f64>,
    pub optimizer: Option<OptimizerReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Full path from question to results; with `optimize` both the baseline
/// and the chosen plan run on the full data.
pub fn run_query(
    nlq: &str,
    db: &Database,
    clf: &TypeClassifier,
    optimize_plan: bool,
    sample_fraction: f64,
    seed: u64,
) -> Result<QueryOutcome, QueryError> {
    let translation = translate(nlq, db, clf, seed)?;
    let (base_rs, baseline_ms) = execute(&translation.plan, db)?;
    if !optimize_plan {
        return Ok(QueryOutcome {
            plan: translation.plan.clone(),
            translation,
            result: base_rs,
            baseline_ms,
            optimized_ms: None,
            optimizer: None,
        });
    }
    let (chosen, report) = optimize(&translation.plan, db, sample_fraction, seed);
    let (rs, optimized_ms) = if chosen == translation.plan { (base_rs, baseline_ms) } else { execute(&chosen, db)? };
    Ok(QueryOutcome {
        translation,
        plan: chosen,
        result: rs,
        baseline_ms,
        optimized_ms: Some(optimized_ms),
        optimizer: Some(report),
    })
}
