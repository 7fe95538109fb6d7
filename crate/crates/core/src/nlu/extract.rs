//! Fine-grained extraction: resolve the two lists against the knowledge base.

use nlst_geo::Period;
use serde::Serialize;

use super::tag::{Label, Tagging};
use super::words::{is_cue, is_stop, CONTAIN_WORDS, INTERSECT_WORDS, NEAREST_WORDS, SIMILAR_WORDS};
use super::{AggKind, Distance, ExtractionResult, NluError, ObjectRef, SpatialCue};
use crate::catalog::{kb_lookup, EntryRef, KbMatch, KnowledgeBase, MatchKind};

const MAX_WINDOW: usize = 6;

/// One resolved phrase of the question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityMatch {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub kind: MatchKind,
    pub name: String,
    pub relation: String,
    pub score: f64,
    #[serde(skip)]
    pub entry: EntryRef,
    #[serde(skip)]
    tokens: (usize, usize),
}

struct Ctx<'a> {
    t: &'a Tagging,
    kb: &'a KnowledgeBase,
    /// Index into `t.numbers` owning each token.
    num_owner: Vec<Option<usize>>,
    used: Vec<bool>,
    found: Vec<EntityMatch>,
}

impl Ctx<'_> {
    fn tok(&self, i: usize) -> &str {
        &self.t.tokens[i].text
    }

    fn reserved(&self, i: usize) -> bool {
        let w = self.tok(i);
        is_cue(w) || self.kb.is_attribute_word(w) || self.kb.is_scope_word(w)
    }

    fn free(&self, i: usize) -> bool {
        !self.used[i] && self.num_owner[i].is_none()
    }

    fn content(&self, i: usize) -> bool {
        self.free(i) && !is_stop(self.tok(i)) && !self.reserved(i)
    }

    fn text(&self, a: usize, b: usize) -> &str {
        &self.t.source[self.t.tokens[a].start..self.t.tokens[b - 1].end]
    }

    fn phrase(&self, a: usize, b: usize) -> String {
        (a..b).map(|i| self.tok(i)).collect::<Vec<_>>().join(" ")
    }

    fn relation_of(&self, e: EntryRef) -> String {
        match e {
            EntryRef::Relation(i) => self.kb.relations[i].relation.clone(),
            EntryRef::Location(i) => self.kb.locations[i].relation.clone(),
            EntryRef::Object(i) => self.kb.objects[i].relation.clone(),
        }
    }

    fn push(&mut self, a: usize, b: usize, e: EntryRef, score: f64) {
        for i in a..b {
            self.used[i] = true;
        }
        self.found.push(EntityMatch {
            text: self.text(a, b).to_string(),
            start: self.t.tokens[a].start,
            end: self.t.tokens[b - 1].end,
            kind: KnowledgeBase::kind_of(e),
            name: self.kb.display_name(e).to_string(),
            relation: self.relation_of(e),
            score,
            entry: e,
            tokens: (a, b),
        });
    }

    fn ambiguous(&self, a: usize, b: usize, es: &[EntryRef]) -> NluError {
        NluError::AmbiguousEntity {
            span: self.text(a, b).to_string(),
            candidates: es.iter().map(|e| format!("{} ({})", self.kb.display_name(*e), self.relation_of(*e))).collect(),
        }
    }

    /// Value-level entries win over relation entries on the same phrase.
    fn pick_exact(&self, a: usize, b: usize, es: &[EntryRef]) -> Result<EntryRef, NluError> {
        let values: Vec<EntryRef> = es.iter().copied().filter(|e| !matches!(e, EntryRef::Relation(_))).collect();
        match values.len() {
            0 => Ok(es[0]),
            1 => Ok(values[0]),
            _ => Err(self.ambiguous(a, b, &values)),
        }
    }

    /// `train 5`: a word followed by a bare integer naming an object.
    fn split_objects(&mut self) -> Result<(), NluError> {
        let n = self.t.tokens.len();
        for i in 0..n.saturating_sub(1) {
            if !self.free(i) || is_stop(self.tok(i)) {
                continue;
            }
            let Some(si) = self.num_owner[i + 1] else { continue };
            let span = &self.t.numbers[si];
            if span.label != Label::Number || span.tokens != (i + 1, i + 2) || !self.tok(i + 1).bytes().all(|b| b.is_ascii_digit()) {
                continue;
            }
            let joined = format!("{}{}", self.tok(i), self.tok(i + 1));
            let objs: Vec<EntryRef> =
                self.kb.exact_entries(&joined).iter().copied().filter(|e| matches!(e, EntryRef::Object(_))).collect();
            match objs.len() {
                0 => {}
                1 => {
                    self.num_owner[i + 1] = None;
                    self.push(i, i + 2, objs[0], 1.0);
                }
                _ => return Err(self.ambiguous(i, i + 2, &objs)),
            }
        }
        Ok(())
    }

    /// Longest-first, left-to-right exact windows.
    fn exact_windows(&mut self) -> Result<(), NluError> {
        let n = self.t.tokens.len();
        let mut i = 0;
        while i < n {
            if !self.free(i) || is_stop(self.tok(i)) {
                i += 1;
                continue;
            }
            let mut hit = None;
            for len in (1..=MAX_WINDOW.min(n - i)).rev() {
                let b = i + len;
                if !(i..b).all(|j| self.free(j)) || is_stop(self.tok(b - 1)) {
                    continue;
                }
                let es = self.kb.exact_entries(&self.phrase(i, b));
                if !es.is_empty() {
                    hit = Some((b, self.pick_exact(i, b, es)?));
                    break;
                }
            }
            match hit {
                Some((b, e)) => {
                    self.push(i, b, e, 1.0);
                    i = b;
                }
                None => i += 1,
            }
        }
        Ok(())
    }

    /// Fuzzy matching over the remaining content words; anything left is unknown.
    fn fuzzy_windows(&mut self) -> Result<(), NluError> {
        let n = self.t.tokens.len();
        let mut i = 0;
        while i < n {
            if !self.content(i) {
                i += 1;
                continue;
            }
            let mut hit: Option<(usize, KbMatch)> = None;
            for len in (1..=MAX_WINDOW.min(n - i)).rev() {
                let b = i + len;
                if !(i..b).all(|j| self.free(j)) || !self.content(b - 1) {
                    continue;
                }
                let ms = kb_lookup(self.kb, &self.phrase(i, b));
                if !ms.is_empty() {
                    hit = Some((b, pick_fuzzy(&ms).clone()));
                    break;
                }
            }
            match hit {
                Some((b, m)) => {
                    self.push(i, b, m.entry, m.score);
                    i = b;
                }
                None => {
                    let mut b = i + 1;
                    while b < n && self.content(b) {
                        b += 1;
                    }
                    let span = self.text(i, b).to_string();
                    let suggestions = self
                        .kb
                        .suggestions(&span, 3)
                        .into_iter()
                        .map(|m| self.kb.display_name(m.entry).to_string())
                        .collect();
                    return Err(NluError::UnknownEntity { span, suggestions });
                }
            }
        }
        Ok(())
    }

    /// Drops a relation mention sitting next to a location of that relation
    /// ("City of London district").
    fn drop_redundant_relations(&mut self) {
        self.found.sort_by_key(|m| m.tokens.0);
        let gap_is_stop = |a: usize, b: usize| (a..b).all(|j| is_stop(self.tok(j)));
        let mut keep = vec![true; self.found.len()];
        for (i, r) in self.found.iter().enumerate() {
            if r.kind != MatchKind::Relation {
                continue;
            }
            let next_to_value = self.found.iter().any(|v| {
                v.kind == MatchKind::Location
                    && v.relation == r.relation
                    && (v.tokens.1 <= r.tokens.0 && gap_is_stop(v.tokens.1, r.tokens.0)
                        || r.tokens.1 <= v.tokens.0 && gap_is_stop(r.tokens.1, v.tokens.0))
            });
            keep[i] = !next_to_value;
        }
        let mut k = keep.into_iter();
        self.found.retain(|_| k.next().unwrap_or(true));
    }
}

fn pick_fuzzy(ms: &[KbMatch]) -> &KbMatch {
    let top = ms[0].score;
    ms.iter().take_while(|m| m.score == top).find(|m| m.kind != MatchKind::Relation).unwrap_or(&ms[0])
}

fn agg_keyword(toks: &[&str]) -> Option<AggKind> {
    for (i, w) in toks.iter().enumerate() {
        let next = toks.get(i + 1).copied().unwrap_or("");
        let k = match *w {
            "how" if next == "many" => AggKind::Count,
            "number" if next == "of" => AggKind::Count,
            "count" => AggKind::Count,
            "average" | "mean" | "avg" => AggKind::Avg,
            "longest" | "largest" | "biggest" | "highest" | "greatest" | "maximum" | "max" => AggKind::Max,
            "shortest" | "smallest" | "lowest" | "least" | "minimum" | "min" => AggKind::Min,
            _ => continue,
        };
        return Some(k);
    }
    None
}

/// Resolves the information list against the knowledge base and reads the
/// number list into typed slots.
pub fn fine_extract(t: &Tagging, kb: &KnowledgeBase) -> Result<ExtractionResult, NluError> {
    let n = t.tokens.len();
    let mut num_owner = vec![None; n];
    for (si, s) in t.numbers.iter().enumerate() {
        for o in &mut num_owner[s.tokens.0..s.tokens.1] {
            *o = Some(si);
        }
    }
    let mut cx = Ctx { t, kb, num_owner, used: vec![false; n], found: Vec::new() };
    cx.split_objects()?;
    cx.exact_windows()?;
    cx.fuzzy_windows()?;
    cx.drop_redundant_relations();

    let toks: Vec<&str> = t.tokens.iter().map(|x| x.text.as_str()).collect();
    let has = |list: &[&str]| toks.iter().any(|w| list.contains(w));
    let mut ex = ExtractionResult {
        nn_flag: has(NEAREST_WORDS),
        similar_flag: has(SIMILAR_WORDS),
        agg: agg_keyword(&toks),
        ..Default::default()
    };
    ex.spatial_cue = if has(INTERSECT_WORDS) {
        Some(SpatialCue::Intersects)
    } else if has(CONTAIN_WORDS) {
        Some(SpatialCue::Contains)
    } else {
        None
    };

    for m in &cx.found {
        match m.entry {
            EntryRef::Relation(_) => {
                if !ex.relations.contains(&m.relation) {
                    ex.relations.push(m.relation.clone());
                }
            }
            EntryRef::Location(id) => {
                if !ex.locations.contains(&id) {
                    ex.locations.push(id);
                }
            }
            EntryRef::Object(id) => {
                let o = &kb.objects[id];
                let r = ObjectRef { relation: o.relation.clone(), tuple_id: o.tuple_id, name: o.surface_name.clone() };
                if !ex.objects.contains(&r) {
                    ex.objects.push(r);
                }
            }
        }
    }

    // numbers consumed as object suffixes are no longer owned
    let live = |i: usize| cx.num_owner[t.numbers[i].tokens.0].is_some();
    let spans: Vec<usize> = (0..t.numbers.len()).filter(|&i| live(i)).collect();
    if ex.nn_flag || ex.similar_flag {
        if let Some(&i) = spans.iter().find(|&&i| t.numbers[i].label == Label::Cardinal) {
            let k = t.numbers[i].value.unwrap_or(0.0);
            if k >= 1.0 {
                ex.k = Some(k as usize);
            }
        }
    }
    if let Some(&i) = spans.iter().find(|&&i| t.numbers[i].label == Label::Quantity) {
        let s = &t.numbers[i];
        if let (Some(v), Some(u)) = (s.value, s.unit) {
            if v > 0.0 {
                ex.distance = Some(Distance { value: v, unit: u });
            }
        }
    }
    let times: Vec<i64> =
        spans.iter().filter(|&&i| t.numbers[i].label == Label::Time).filter_map(|&i| t.numbers[i].value).map(|v| v as i64).collect();
    match times.as_slice() {
        [] => {}
        [_] => return Err(NluError::InvalidPeriod("a period needs both a start and an end time".into())),
        [a, b, ..] => {
            ex.period = Some(
                Period::new(*a, *b)
                    .ok()
                    .filter(|p| p.start.0 < p.end.0)
                    .ok_or_else(|| NluError::InvalidPeriod(format!("start {a} ms is not before end {b} ms")))?,
            );
        }
    }

    let measures: Vec<&str> = kb.relations.iter().flat_map(|r| r.measures.iter().map(String::as_str)).collect();
    ex.measure = toks.iter().find(|w| measures.iter().any(|m| m.eq_ignore_ascii_case(w))).map(|w| {
        measures.iter().find(|m| m.eq_ignore_ascii_case(w)).map(|m| m.to_string()).unwrap_or_default()
    });
    ex.entities = cx.found;
    Ok(ex)
}
