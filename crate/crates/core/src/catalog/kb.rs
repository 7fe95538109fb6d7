//! Relation and location knowledge bases with exact and fuzzy lookup.

use std::collections::BTreeMap;

use nlst_geo::Geometry;
use serde::Serialize;

use super::Database;
use crate::value::{AttrKind, Value};

/// Minimum normalized edit similarity for a fuzzy match.
pub const FUZZY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationKBEntry {
    pub relation: String,
    pub aliases: Vec<String>,
    pub st_attributes: Vec<(String, AttrKind)>,
    /// Numeric attributes usable as aggregate measures.
    pub measures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationKBEntry {
    pub id: usize,
    pub surface_name: String,
    pub kind: AttrKind,
    pub geometry: Geometry,
    pub relation: String,
    pub tuple_id: usize,
}

/// Named tuple carrying a moving point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectKBEntry {
    pub id: usize,
    pub surface_name: String,
    pub relation: String,
    pub tuple_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum EntryRef {
    Relation(usize),
    Location(usize),
    Object(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Relation,
    Location,
    Object,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KbMatch {
    pub entry: EntryRef,
    pub kind: MatchKind,
    pub score: f64,
    /// Surface form that matched.
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct KnowledgeBase {
    pub relations: Vec<RelationKBEntry>,
    pub locations: Vec<LocationKBEntry>,
    pub objects: Vec<ObjectKBEntry>,
    /// Lowercased attribute names of every relation.
    pub attribute_words: Vec<String>,
    /// Words of the database name, treated as scope rather than entities.
    pub scope_words: Vec<String>,
    #[serde(skip)]
    surfaces: Vec<(String, EntryRef)>,
    #[serde(skip)]
    exact: BTreeMap<String, Vec<EntryRef>>,
}

/// Lowercases and collapses every non-alphanumeric run into one space.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for w in s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(w.chars().flat_map(char::to_lowercase));
    }
    out
}

/// `1 - levenshtein / max_len` over characters.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / max as f64
}

/// Relation name plus singular/plural variants.
pub fn relation_aliases(name: &str) -> Vec<String> {
    let n = normalize(name);
    let mut out = vec![n.clone()];
    let mut push = |s: String| {
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    if let Some(stem) = n.strip_suffix("ies") {
        push(format!("{stem}y"));
    } else if ["ses", "xes", "ches", "shes"].iter().any(|s| n.ends_with(s)) {
        push(n[..n.len() - 2].to_string());
    } else if let Some(stem) = n.strip_suffix('s') {
        push(stem.to_string());
    } else {
        push(format!("{n}s"));
    }
    out
}

impl KnowledgeBase {
    fn reindex(&mut self) {
        let mut surfaces = Vec::new();
        for (i, r) in self.relations.iter().enumerate() {
            for a in &r.aliases {
                surfaces.push((a.clone(), EntryRef::Relation(i)));
            }
        }
        for l in &self.locations {
            surfaces.push((normalize(&l.surface_name), EntryRef::Location(l.id)));
        }
        for o in &self.objects {
            surfaces.push((normalize(&o.surface_name), EntryRef::Object(o.id)));
        }
        let mut exact: BTreeMap<String, Vec<EntryRef>> = BTreeMap::new();
        for (s, e) in &surfaces {
            let v = exact.entry(s.clone()).or_default();
            if !v.contains(e) {
                v.push(*e);
            }
        }
        self.surfaces = surfaces;
        self.exact = exact;
    }

    pub fn relation_entry(&self, relation: &str) -> Option<&RelationKBEntry> {
        self.relations.iter().find(|r| r.relation == relation)
    }

    pub fn location(&self, id: usize) -> Option<&LocationKBEntry> {
        self.locations.get(id)
    }

    pub fn object(&self, id: usize) -> Option<&ObjectKBEntry> {
        self.objects.get(id)
    }

    pub fn kind_of(e: EntryRef) -> MatchKind {
        match e {
            EntryRef::Relation(_) => MatchKind::Relation,
            EntryRef::Location(_) => MatchKind::Location,
            EntryRef::Object(_) => MatchKind::Object,
        }
    }

    /// Display name of an entry.
    pub fn display_name(&self, e: EntryRef) -> &str {
        match e {
            EntryRef::Relation(i) => &self.relations[i].relation,
            EntryRef::Location(i) => &self.locations[i].surface_name,
            EntryRef::Object(i) => &self.objects[i].surface_name,
        }
    }

    /// Entries whose surface equals the normalized phrase.
    pub fn exact_entries(&self, phrase: &str) -> &[EntryRef] {
        self.exact.get(&normalize(phrase)).map_or(&[], Vec::as_slice)
    }

    pub fn is_attribute_word(&self, w: &str) -> bool {
        self.attribute_words.binary_search_by(|a| a.as_str().cmp(w)).is_ok()
    }

    pub fn is_scope_word(&self, w: &str) -> bool {
        self.scope_words.iter().any(|s| s == w)
    }

    /// Locations whose surface name matches exactly (normalized).
    pub fn locations_named(&self, name: &str) -> Vec<&LocationKBEntry> {
        self.exact
            .get(&normalize(name))
            .map(|v| {
                v.iter()
                    .filter_map(|e| match e {
                        EntryRef::Location(i) => self.locations.get(*i),
                        _ => None,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn objects_named(&self, name: &str) -> Vec<&ObjectKBEntry> {
        self.exact
            .get(&normalize(name))
            .map(|v| {
                v.iter()
                    .filter_map(|e| match e {
                        EntryRef::Object(i) => self.objects.get(*i),
                        _ => None,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Number of entries of any kind sharing this exact surface.
    pub fn surface_count(&self, name: &str) -> usize {
        self.exact.get(&normalize(name)).map_or(0, Vec::len)
    }

    /// Best `n` entries by similarity regardless of the fuzzy threshold.
    pub fn suggestions(&self, phrase: &str, n: usize) -> Vec<KbMatch> {
        let p = normalize(phrase);
        let mut best: BTreeMap<EntryRef, (f64, &str)> = BTreeMap::new();
        for (s, e) in &self.surfaces {
            let score = similarity(&p, s);
            let slot = best.entry(*e).or_insert((f64::MIN, s));
            if score > slot.0 {
                *slot = (score, s);
            }
        }
        let mut all: Vec<KbMatch> = best
            .into_iter()
            .map(|(e, (score, s))| KbMatch { entry: e, kind: Self::kind_of(e), score, surface: s.to_string() })
            .collect();
        sort_matches(&mut all);
        all.truncate(n);
        all
    }
    /// Entries whose surface holds every word of `phrase` as a whole word,
    /// scored by the share of the surface the phrase covers.
    pub fn containing(&self, phrase: &str) -> Vec<KbMatch> {
        let p = normalize(phrase);
        if p.is_empty() {
            return Vec::new();
        }
        let words: Vec<&str> = p.split(' ').collect();
        let mut best: BTreeMap<EntryRef, (f64, &str)> = BTreeMap::new();
        for (s, e) in &self.surfaces {
            let sw: Vec<&str> = s.split(' ').collect();
            if words.iter().all(|w| sw.contains(w)) {
                let score = p.chars().count() as f64 / s.chars().count() as f64;
                let slot = best.entry(*e).or_insert((score, s));
                if score > slot.0 {
                    *slot = (score, s);
                }
            }
        }
        let mut all: Vec<KbMatch> = best
            .into_iter()
            .map(|(e, (score, s))| KbMatch { entry: e, kind: Self::kind_of(e), score, surface: s.to_string() })
            .collect();
        sort_matches(&mut all);
        all
    }
}

fn sort_matches(v: &mut [KbMatch]) {
    v.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.entry.cmp(&b.entry)));
}

pub fn build_kb(db: &Database) -> KnowledgeBase {
    let mut kb = KnowledgeBase { scope_words: normalize(&db.name).split(' ').map(str::to_string).collect(), ..Default::default() };
    let mut words: Vec<String> = db.relations().iter().flat_map(|r| r.attributes.iter().map(|a| a.name.to_lowercase())).collect();
    words.sort();
    words.dedup();
    kb.attribute_words = words;
    for rel in db.relations().iter().filter(|r| r.derived_from.is_none()) {
        kb.relations.push(RelationKBEntry {
            relation: rel.name.clone(),
            aliases: relation_aliases(&rel.name),
            st_attributes: rel
                .attributes
                .iter()
                .filter(|a| !matches!(a.kind, AttrKind::Int | AttrKind::Real | AttrKind::Text))
                .map(|a| (a.name.clone(), a.kind))
                .collect(),
            measures: rel.attributes.iter().filter(|a| a.kind.is_numeric()).map(|a| a.name.clone()).collect(),
        });
        let Some(ni) = rel.name_attr() else { continue };
        let gi = rel.geometry_attr();
        let mi = rel.mpoint_attr();
        for (tid, t) in rel.tuples.iter().enumerate() {
            let Some(name) = t[ni].as_text() else { continue };
            if normalize(name).is_empty() {
                continue;
            }
            if let Some(g) = gi.and_then(|gi| t[gi].to_geometry()) {
                kb.locations.push(LocationKBEntry {
                    id: kb.locations.len(),
                    surface_name: name.to_string(),
                    kind: rel.attributes[gi.expect("geometry attr")].kind,
                    geometry: g,
                    relation: rel.name.clone(),
                    tuple_id: tid,
                });
            } else if mi.is_some_and(|mi| matches!(t[mi], Value::Mpoint(_))) {
                kb.objects.push(ObjectKBEntry {
                    id: kb.objects.len(),
                    surface_name: name.to_string(),
                    relation: rel.name.clone(),
                    tuple_id: tid,
                });
            }
        }
    }
    kb.reindex();
    kb
}

/// Exact (score 1.0) matches when any exist, otherwise fuzzy matches at or
/// above [`FUZZY_THRESHOLD`]; ordered by score then entry id.
pub fn kb_lookup(kb: &KnowledgeBase, phrase: &str) -> Vec<KbMatch> {
    let p = normalize(phrase);
    if p.is_empty() {
        return Vec::new();
    }
    if let Some(es) = kb.exact.get(&p) {
        let mut out: Vec<KbMatch> = es
            .iter()
            .map(|e| KbMatch { entry: *e, kind: KnowledgeBase::kind_of(*e), score: 1.0, surface: p.clone() })
            .collect();
        sort_matches(&mut out);
        return out;
    }
    let plen = p.chars().count();
    let mut best: BTreeMap<EntryRef, (f64, &str)> = BTreeMap::new();
    for (s, e) in &kb.surfaces {
        let slen = s.chars().count();
        let max = plen.max(slen) as f64;
        // similarity is bounded by 1 - |len diff| / max len
        if 1.0 - (plen.abs_diff(slen) as f64) / max < FUZZY_THRESHOLD {
            continue;
        }
        let score = similarity(&p, s);
        if score >= FUZZY_THRESHOLD {
            let slot = best.entry(*e).or_insert((score, s));
            if score > slot.0 {
                *slot = (score, s);
            }
        }
    }
    let mut out: Vec<KbMatch> = best
        .into_iter()
        .map(|(e, (score, s))| KbMatch { entry: e, kind: KnowledgeBase::kind_of(e), score, surface: s.to_string() })
        .collect();
    sort_matches(&mut out);
    out
}
