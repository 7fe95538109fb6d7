//! Template-based question corpus: generation, validation and repair.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use nlst_geo::text::format_period;
use nlst_geo::Period;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{kb_lookup, Database, EntryRef, KnowledgeBase, MatchKind};
use crate::nlu::words::number_to_words;
use crate::nlu::{format_meters, AggKind, SpatialCue};
use crate::value::{AttrKind, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryType {
    BasicSpatial,
    TimeInterval,
    Range,
    NearestNeighbor,
    Join,
    Similarity,
    Aggregation,
}

impl QueryType {
    pub const ALL: [QueryType; 7] = [
        QueryType::BasicSpatial,
        QueryType::TimeInterval,
        QueryType::Range,
        QueryType::NearestNeighbor,
        QueryType::Join,
        QueryType::Similarity,
        QueryType::Aggregation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            QueryType::BasicSpatial => "BasicSpatial",
            QueryType::TimeInterval => "TimeInterval",
            QueryType::Range => "Range",
            QueryType::NearestNeighbor => "NearestNeighbor",
            QueryType::Join => "Join",
            QueryType::Similarity => "Similarity",
            QueryType::Aggregation => "Aggregation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub nlq: String,
    #[serde(rename = "type")]
    pub query_type: QueryType,
    pub slots: BTreeMap<String, String>,
}

/// One question pattern. Placeholders: `{relation}`, `{relation2}`,
/// `{location}`, `{object}`, `{k}`, `{distance}`, `{period}`, `{measure}`
/// and `{scope}` (a database-name word, not a slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlqTemplate {
    #[serde(rename = "type")]
    pub query_type: QueryType,
    pub group: String,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relation_kinds: Vec<AttrKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relation2_kinds: Vec<AttrKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub location_kinds: Vec<AttrKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agg: Option<AggKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue: Option<SpatialCue>,
    /// Required name of the relation's default measure when the pattern
    /// implies one ("longest" means length).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_measure: Option<String>,
}

impl NlqTemplate {
    pub fn has(&self, slot: &str) -> bool {
        self.pattern.contains(&format!("{{{slot}}}"))
    }

    /// Literal words of the pattern, placeholders removed.
    pub fn literal_words(&self) -> Vec<String> {
        let mut s = self.pattern.clone();
        while let (Some(a), Some(b)) = (s.find('{'), s.find('}')) {
            if b < a {
                break;
            }
            s.replace_range(a..=b, " ");
        }
        crate::nlu::tokenize(&s).into_iter().map(|t| t.text).collect()
    }
}

pub const TEMPLATE_BANK_JSON: &str = include_str!("../../../../templates/bank.json");

pub fn default_templates() -> Vec<NlqTemplate> {
    serde_json::from_str(TEMPLATE_BANK_JSON).expect("bundled template bank parses")
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<NlqTemplate>, CorpusError> {
    let p = path.as_ref();
    let s = std::fs::read_to_string(p).map_err(|e| CorpusError::Io(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&s).map_err(|e| CorpusError::Parse { line: e.line(), msg: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("no usable template for {0} on this database")]
    NoTemplates(QueryType),
    #[error("slot '{slot}' value '{value}' has no knowledge-base match")]
    Unrepairable { slot: String, value: String },
    #[error("{0}")]
    Io(String),
    #[error("corpus line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

const K_MAX: usize = 12;
const DISTANCES: [u32; 11] = [100, 150, 200, 250, 300, 400, 500, 750, 1000, 1500, 2000];
const HOUR: i64 = 3_600_000;
const HALF: i64 = HOUR / 2;
/// Question times fall inside this window of the epoch day.
const DAY_START: i64 = 5 * HOUR;
const DAY_END: i64 = 12 * HOUR;

fn static_kinds() -> Vec<AttrKind> {
    vec![AttrKind::Point, AttrKind::Line, AttrKind::Region]
}

struct Filler<'a> {
    db: &'a Database,
    kb: &'a KnowledgeBase,
    rng: ChaCha8Rng,
    /// Locations whose name is unique in the knowledge base.
    unique_locations: Vec<usize>,
}

/// Kind of a relation's main attribute: its geometry, or `mpoint` for moving ones.
fn relation_kind(db: &Database, name: &str) -> Option<AttrKind> {
    let r = db.relation(name)?;
    r.geometry_attr().map(|i| r.attributes[i].kind).or_else(|| r.mpoint_attr().map(|_| AttrKind::Mpoint))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl Filler<'_> {
    fn pick<'b, T>(&mut self, v: &'b [T]) -> Option<&'b T> {
        v.choose(&mut self.rng)
    }

    fn relation_alias(&mut self, name: &str) -> String {
        let e = self.kb.relation_entry(name).expect("relation in kb");
        e.aliases.choose(&mut self.rng).cloned().unwrap_or_else(|| name.to_string())
    }

    fn render_k(&mut self, k: usize) -> String {
        if self.rng.gen_bool(0.5) {
            number_to_words(k as u32).unwrap_or_else(|| k.to_string())
        } else {
            k.to_string()
        }
    }

    fn render_distance(&mut self, m: u32) -> String {
        if m >= 1000 && self.rng.gen_bool(0.6) {
            let km = m as f64 / 1000.0;
            let unit = *self.pick(&["km", "kilometers", "kilometres"]).expect("non-empty");
            if km.fract() == 0.0 && self.rng.gen_bool(0.3) {
                return format!("{} {unit}", number_to_words(km as u32).expect("small"));
            }
            return if unit == "km" && self.rng.gen_bool(0.5) { format!("{km}km") } else { format!("{km} {unit}") };
        }
        match self.rng.gen_range(0..4) {
            0 => format!("{m}m"),
            1 => format!("{m} meters"),
            2 => format!("{m} metres"),
            _ => format!("{m} m"),
        }
    }

    fn clock(&mut self, ms: i64, style: u8) -> String {
        let (h, m) = (ms / HOUR, (ms % HOUR) / 60_000);
        match style {
            0 => format!("{h:02}:{m:02}"),
            _ => {
                let (h12, suffix) = match h {
                    0 => (12, "am"),
                    1..=11 => (h, "am"),
                    12 => (12, "pm"),
                    _ => (h - 12, "pm"),
                };
                match (m, style) {
                    (0, 2) => format!("{h12} {suffix}"),
                    (0, _) => format!("{h12}{suffix}"),
                    _ => format!("{h12}:{m:02}{suffix}"),
                }
            }
        }
    }

    fn render_period(&mut self, p: &Period) -> String {
        let (a, b) = (p.start.0, p.end.0);
        let whole = a % HOUR == 0 && b % HOUR == 0;
        let form = self.rng.gen_range(0..if whole { 3 } else { 2 });
        let style = self.rng.gen_range(0..3u8);
        match form {
            0 => format!("between {} and {}", self.clock(a, style), self.clock(b, style)),
            1 => format!("from {} to {}", self.clock(a, style), self.clock(b, style)),
            _ => format!("between {} and {}", a / HOUR, b / HOUR),
        }
    }

    fn random_period(&mut self) -> Period {
        let slots = (DAY_END - DAY_START) / HALF;
        loop {
            let s = self.rng.gen_range(0..slots - 1);
            let len = self.rng.gen_range(2..=6);
            if s + len <= slots {
                return Period::new(DAY_START + s * HALF, DAY_START + (s + len) * HALF).expect("valid");
            }
        }
    }

    fn render_object(&mut self, name: &str) -> String {
        let split = name.find(|c: char| c.is_ascii_digit()).filter(|&i| i > 0);
        match split {
            Some(i) if self.rng.gen_bool(0.5) => format!("{} {}", &name[..i], &name[i..]),
            _ => name.to_string(),
        }
    }

    fn relations_of_kind(&self, kinds: &[AttrKind], exclude: &[&str]) -> Vec<String> {
        self.kb
            .relations
            .iter()
            .map(|r| r.relation.clone())
            .filter(|r| !exclude.contains(&r.as_str()))
            .filter(|r| relation_kind(self.db, r).is_some_and(|k| kinds.contains(&k)))
            .collect()
    }

    fn fill(&mut self, t: &NlqTemplate) -> Option<CorpusEntry> {
        let mut slots = BTreeMap::new();
        let mut text: Vec<(&str, String)> = Vec::new();

        // object first: it pins the relation
        let mut relation: Option<String> = None;
        let mut life: Vec<Period> = Vec::new();
        if t.has("object") {
            let objs: Vec<usize> = self
                .kb
                .objects
                .iter()
                .filter(|o| self.db.companion_of(&o.relation).is_some())
                .map(|o| o.id)
                .collect();
            let oi = *self.pick(&objs)?;
            let o = &self.kb.objects[oi];
            let (name, rel) = (o.surface_name.clone(), o.relation.clone());
            let r = self.db.relation(&rel)?;
            if let Some(Value::Mpoint(m)) = r.mpoint_attr().map(|i| &r.tuples[o.tuple_id][i]) {
                life = m.deftime();
            }
            slots.insert("object".to_string(), name.clone());
            let shown = self.render_object(&name);
            text.push(("object", shown));
            relation = Some(rel);
        }
        if t.has("relation") {
            let r = match relation.clone() {
                Some(r) => r,
                None => {
                    let kinds = if t.relation_kinds.is_empty() { static_kinds() } else { t.relation_kinds.clone() };
                    let mut cands = self.relations_of_kind(&kinds, &[]);
                    if t.has("measure") {
                        cands.retain(|r| self.kb.relation_entry(r).is_some_and(|e| !e.measures.is_empty()));
                    }
                    if let Some(dm) = &t.default_measure {
                        cands.retain(|r| {
                            let rel = self.db.relation(r).expect("relation");
                            rel.measure_attr().is_some_and(|i| rel.attributes[i].name == *dm)
                        });
                    }
                    self.pick(&cands)?.clone()
                }
            };
            slots.insert("relation".to_string(), r.clone());
            let alias = self.relation_alias(&r);
            text.push(("relation", alias));
            relation = Some(r);
        }
        if t.has("relation2") {
            let r1 = relation.clone()?;
            let kinds = if t.relation2_kinds.is_empty() { static_kinds() } else { t.relation2_kinds.clone() };
            let cands = self.relations_of_kind(&kinds, &[&r1]);
            let r2 = self.pick(&cands)?.clone();
            slots.insert("relation2".to_string(), r2.clone());
            let alias = self.relation_alias(&r2);
            text.push(("relation2", alias));
        }
        if t.has("measure") {
            let e = self.kb.relation_entry(relation.as_deref()?)?;
            let m = self.pick(&e.measures)?.clone();
            slots.insert("measure".to_string(), m.clone());
            text.push(("measure", m));
        }
        if t.has("location") {
            let kinds = if t.location_kinds.is_empty() { static_kinds() } else { t.location_kinds.clone() };
            let cands: Vec<usize> = self
                .unique_locations
                .iter()
                .copied()
                .filter(|&i| {
                    let l = &self.kb.locations[i];
                    kinds.contains(&l.kind) && Some(&l.relation) != relation.as_ref()
                })
                .collect();
            let li = *self.pick(&cands)?;
            let l = &self.kb.locations[li];
            slots.insert("location".to_string(), l.surface_name.clone());
            text.push(("location", l.surface_name.clone()));
        }
        if t.has("k") {
            let k = self.rng.gen_range(1..=K_MAX);
            slots.insert("k".to_string(), k.to_string());
            let shown = self.render_k(k);
            text.push(("k", shown));
        }
        if t.has("distance") {
            let d = *self.pick(&DISTANCES)?;
            slots.insert("distance".to_string(), format_meters(d as f64));
            let shown = self.render_distance(d);
            text.push(("distance", shown));
        }
        if t.has("period") {
            // keep the object alive during at least part of the period
            let mut p = self.random_period();
            for _ in 0..50 {
                if life.is_empty() || life.iter().any(|l| l.intersects(&p)) {
                    break;
                }
                p = self.random_period();
            }
            slots.insert("period".to_string(), format_period(&p));
            let shown = self.render_period(&p);
            text.push(("period", shown));
        }
        if t.has("scope") {
            let words = self.kb.scope_words.clone();
            let w = self.pick(&words)?.clone();
            text.push(("scope", capitalize(&w)));
        }
        if let Some(a) = t.agg {
            slots.insert("agg".to_string(), a.name().to_string());
        }
        if t.query_type == crate::corpus::QueryType::Join && !slots.contains_key("distance") {
            let c = t.cue?;
            slots.insert("cue".to_string(), if c == SpatialCue::Contains { "contains" } else { "intersects" }.to_string());
        }
        let keys = crate::nlu::slot_keys(t.query_type);
        slots.retain(|k, _| keys.contains(&k.as_str()));
        let mut nlq = t.pattern.clone();
        for (slot, v) in text {
            nlq = nlq.replace(&format!("{{{slot}}}"), &v);
        }
        Some(CorpusEntry { nlq: capitalize(&nlq), query_type: t.query_type, slots })
    }
}

/// Exactly `n` entries cycling through the seven query types; deterministic
/// for a fixed database, `n` and seed.
pub fn generate(db: &Database, n: usize, seed: u64) -> Result<Vec<CorpusEntry>, CorpusError> {
    generate_with(db, &default_templates(), n, seed)
}

pub fn generate_with(db: &Database, templates: &[NlqTemplate], n: usize, seed: u64) -> Result<Vec<CorpusEntry>, CorpusError> {
    let kb = db.kb();
    let unique_locations = kb.locations.iter().filter(|l| kb.surface_count(&l.surface_name) == 1).map(|l| l.id).collect();
    let mut f = Filler { db, kb, rng: ChaCha8Rng::seed_from_u64(seed), unique_locations };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let qt = QueryType::ALL[i % QueryType::ALL.len()];
        let pool: Vec<&NlqTemplate> = templates.iter().filter(|t| t.query_type == qt).collect();
        if pool.is_empty() {
            return Err(CorpusError::NoTemplates(qt));
        }
        let mut made = None;
        let mut fallback = None;
        for _ in 0..200 {
            let t = pool[f.rng.gen_range(0..pool.len())];
            if let Some(e) = f.fill(t) {
                if !seen.contains(&e.nlq) {
                    made = Some(e);
                    break;
                }
                fallback.get_or_insert(e);
            }
        }
        let e = made.or(fallback).ok_or(CorpusError::NoTemplates(qt))?;
        seen.insert(e.nlq.clone());
        out.push(e);
    }
    Ok(out)
}

fn resolves(db: &Database, slot: &str, v: &str) -> bool {
    let kb = db.kb();
    match slot {
        "relation" | "relation2" => kb.relation_entry(v).is_some(),
        "location" => !kb.locations_named(v).is_empty(),
        "object" => !kb.objects_named(v).is_empty(),
        _ => true,
    }
}

fn replace_ci(hay: &str, needle: &str, with: &str) -> String {
    let (lh, ln) = (hay.to_lowercase(), needle.to_lowercase());
    if ln.is_empty() || lh.len() != hay.len() {
        return hay.replace(needle, with);
    }
    let mut out = String::new();
    let mut last = 0;
    for (i, _) in lh.match_indices(&ln) {
        out.push_str(&hay[last..i]);
        out.push_str(with);
        last = i + needle.len();
    }
    out.push_str(&hay[last..]);
    out
}

/// Replaces every entity slot that does not resolve with its best fuzzy
/// match of the same kind, in both the slots and the question text.
pub fn validate_repair(entry: &CorpusEntry, db: &Database) -> Result<(CorpusEntry, bool), CorpusError> {
    let kb = db.kb();
    let mut e = entry.clone();
    let mut repaired = false;
    for (slot, v) in &entry.slots {
        if resolves(db, slot, v) {
            continue;
        }
        let want = match slot.as_str() {
            "relation" | "relation2" => MatchKind::Relation,
            "location" => MatchKind::Location,
            _ => MatchKind::Object,
        };
        let m = kb_lookup(kb, v)
            .into_iter()
            .find(|m| m.kind == want)
            .ok_or_else(|| CorpusError::Unrepairable { slot: slot.clone(), value: v.clone() })?;
        let fixed = match m.entry {
            EntryRef::Relation(i) => kb.relations[i].relation.clone(),
            other => kb.display_name(other).to_string(),
        };
        e.nlq = replace_ci(&e.nlq, v, &fixed);
        e.slots.insert(slot.clone(), fixed);
        repaired = true;
    }
    Ok((e, repaired))
}

pub fn to_jsonl(entries: &[CorpusEntry]) -> String {
    entries.iter().map(|e| serde_json::to_string(e).expect("entry serializes") + "\n").collect()
}

pub fn from_jsonl(s: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    s.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CorpusError::Parse { line: i + 1, msg: e.to_string() }))
        .collect()
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    let p = path.as_ref();
    let s = std::fs::read_to_string(p).map_err(|e| CorpusError::Io(format!("{}: {e}", p.display())))?;
    from_jsonl(&s)
}

/// Seeded 80/20-style split into (train, held out).
pub fn split(entries: &[CorpusEntry], train_fraction: f64, seed: u64) -> (Vec<CorpusEntry>, Vec<CorpusEntry>) {
    let mut idx: Vec<usize> = (0..entries.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (entries.len() as f64 * train_fraction).round() as usize;
    let pick = |ids: &[usize]| ids.iter().map(|&i| entries[i].clone()).collect();
    (pick(&idx[..cut]), pick(&idx[cut..]))
}

/// Entries generated per database for the shipped classifier.
pub const TRAINING_PER_DB: usize = 1400;

/// Training corpus for the shipped classifier: `per_db` entries from each
/// database, database `i` seeded with `seed + i`.
pub fn training_corpus(dbs: &[&Database], per_db: usize, seed: u64) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut out = Vec::with_capacity(per_db * dbs.len());
    for (i, db) in dbs.iter().enumerate() {
        out.extend(generate(db, per_db, seed + i as u64)?);
    }
    Ok(out)
}
