//! Tokenization and coarse-grained span labelling.

use serde::Serialize;

use super::words::{is_stop, number_word, parse_number_words};
use super::{DistUnit, NluError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Time,
    Number,
    Cardinal,
    Quantity,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggedSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub label: Label,
    /// Milliseconds for TIME, the number for the numeric labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<DistUnit>,
    /// Token index range `[first, last)`.
    #[serde(skip)]
    pub tokens: (usize, usize),
}

/// The number list and the information list for one question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tagging {
    #[serde(skip)]
    pub source: String,
    #[serde(skip)]
    pub tokens: Vec<Token>,
    pub numbers: Vec<TaggedSpan>,
    pub info: Vec<TaggedSpan>,
}

impl Tagging {
    /// Every span ordered by position.
    pub fn spans(&self) -> Vec<&TaggedSpan> {
        let mut v: Vec<&TaggedSpan> = self.numbers.iter().chain(&self.info).collect();
        v.sort_by_key(|s| s.start);
        v
    }
}

/// Alphanumeric runs; `:` and `.` stay inside a token between two digits.
pub fn tokenize(s: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i;
        while j < chars.len() {
            let c = chars[j].1;
            let joiner = (c == ':' || c == '.')
                && j > i
                && chars[j - 1].1.is_ascii_digit()
                && chars.get(j + 1).is_some_and(|n| n.1.is_ascii_digit());
            if c.is_alphanumeric() || joiner {
                j += 1;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(s.len(), |c| c.0);
        out.push(Token { text: s[start..end].to_lowercase(), start, end });
        i = j;
    }
    out
}

fn is_numeric(t: &str) -> bool {
    !t.is_empty() && t.chars().all(|c| c.is_ascii_digit() || c == '.') && t.starts_with(|c: char| c.is_ascii_digit())
}

fn is_integer(t: &str) -> bool {
    !t.is_empty() && t.chars().all(|c| c.is_ascii_digit())
}

fn unit_of(t: &str) -> Option<DistUnit> {
    match t {
        "m" | "meter" | "meters" | "metre" | "metres" => Some(DistUnit::M),
        "km" | "kilometer" | "kilometers" | "kilometre" | "kilometres" => Some(DistUnit::Km),
        _ => None,
    }
}

const HOUR: i64 = 3_600_000;
const MINUTE: i64 = 60_000;

fn hm(t: &str, max_h: i64) -> Option<(i64, i64)> {
    let (h, m) = match t.split_once(':') {
        Some((h, m)) if m.len() == 2 && is_integer(m) => (h, m.parse().ok()?),
        Some(_) => return None,
        None => (t, 0),
    };
    if !is_integer(h) || h.len() > 2 {
        return None;
    }
    let h: i64 = h.parse().ok()?;
    (h <= max_h && m < 60).then_some((h, m))
}

fn with_meridiem(h: i64, m: i64, pm: bool) -> Option<i64> {
    if !(1..=12).contains(&h) {
        return None;
    }
    let h24 = match (h, pm) {
        (12, false) => 0,
        (12, true) => 12,
        (h, false) => h,
        (h, true) => h + 12,
    };
    Some(h24 * HOUR + m * MINUTE)
}

/// `6am`, `6:30pm` or `06:00` as milliseconds after midnight.
fn clock_token(t: &str) -> Option<i64> {
    for (suffix, pm) in [("am", false), ("pm", true)] {
        if let Some(rest) = t.strip_suffix(suffix) {
            let (h, m) = hm(rest, 12)?;
            return with_meridiem(h, m, pm);
        }
    }
    if t.contains(':') {
        let (h, m) = hm(t, 24)?;
        return (h * HOUR + m * MINUTE <= 24 * HOUR).then_some(h * HOUR + m * MINUTE);
    }
    None
}

/// `500m`, `2km`, `2.5km`.
fn glued_quantity(t: &str) -> Option<(f64, DistUnit)> {
    let split = t.find(|c: char| c.is_ascii_alphabetic())?;
    let (num, unit) = t.split_at(split);
    if !is_numeric(num) {
        return None;
    }
    Some((num.parse().ok()?, unit_of(unit)?))
}

struct Builder<'a> {
    src: &'a str,
    tokens: &'a [Token],
    owner: Vec<bool>,
    spans: Vec<TaggedSpan>,
}

impl Builder<'_> {
    fn free(&self, a: usize, b: usize) -> bool {
        b <= self.tokens.len() && (a..b).all(|i| !self.owner[i])
    }

    fn add(&mut self, a: usize, b: usize, label: Label, value: Option<f64>, unit: Option<DistUnit>) {
        let (start, end) = (self.tokens[a].start, self.tokens[b - 1].end);
        for i in a..b {
            self.owner[i] = true;
        }
        self.spans.push(TaggedSpan {
            text: self.src[start..end].to_string(),
            start,
            end,
            label,
            value,
            unit,
            tokens: (a, b),
        });
    }

    fn tok(&self, i: usize) -> &str {
        self.tokens.get(i).map_or("", |t| t.text.as_str())
    }

    /// Longest run of number words starting at `i`, with its value.
    fn number_words_at(&self, i: usize) -> Option<(usize, u32)> {
        for len in [3, 2, 1] {
            if i + len > self.tokens.len() || !self.free(i, i + len) {
                continue;
            }
            let phrase: Vec<&str> = (i..i + len).map(|j| self.tok(j)).collect();
            if phrase.iter().any(|w| number_word(w).is_none() && *w != "a") {
                continue;
            }
            if let Some(v) = parse_number_words(&phrase.join(" ")) {
                return Some((len, v));
            }
        }
        None
    }
}

/// Splits a question into the number list (TIME, QUANTITY, CARDINAL, NUMBER)
/// and the information list (content-word runs).
pub fn coarse_tag(nlq: &str) -> Result<Tagging, NluError> {
    let tokens = tokenize(nlq);
    if tokens.is_empty() {
        return Err(NluError::EmptyInput);
    }
    let n = tokens.len();
    let mut b = Builder { src: nlq, tokens: &tokens, owner: vec![false; n], spans: Vec::new() };

    // TIME
    for i in 0..n {
        if !b.free(i, i + 1) {
            continue;
        }
        if let Some(ms) = clock_token(b.tok(i)) {
            b.add(i, i + 1, Label::Time, Some(ms as f64), None);
        } else if is_integer(b.tok(i)) && matches!(b.tok(i + 1), "am" | "pm") && b.free(i + 1, i + 2) {
            let h: i64 = b.tok(i).parse().unwrap_or(0);
            if let Some(ms) = with_meridiem(h, 0, b.tok(i + 1) == "pm") {
                b.add(i, i + 2, Label::Time, Some(ms as f64), None);
            }
        }
    }
    for i in 0..n {
        if b.tok(i) != "between" || b.tok(i + 2) != "and" {
            continue;
        }
        let (x, y) = (i + 1, i + 3);
        if !(b.free(x, x + 1) && b.free(y, y + 1)) || unit_of(b.tok(y + 1)).is_some() {
            continue;
        }
        if let (Some((hx, 0)), Some((hy, 0))) = (
            is_integer(b.tok(x)).then(|| hm(b.tok(x), 24)).flatten(),
            is_integer(b.tok(y)).then(|| hm(b.tok(y), 24)).flatten(),
        ) {
            b.add(x, x + 1, Label::Time, Some((hx * HOUR) as f64), None);
            b.add(y, y + 1, Label::Time, Some((hy * HOUR) as f64), None);
        }
    }

    // QUANTITY
    let mut i = 0;
    while i < n {
        if !b.free(i, i + 1) {
            i += 1;
            continue;
        }
        if let Some((v, u)) = glued_quantity(b.tok(i)) {
            b.add(i, i + 1, Label::Quantity, Some(v), Some(u));
        } else if is_numeric(b.tok(i)) {
            if let (Some(u), true) = (unit_of(b.tok(i + 1)), b.free(i + 1, i + 2)) {
                let v: f64 = b.tok(i).parse().unwrap_or(0.0);
                b.add(i, i + 2, Label::Quantity, Some(v), Some(u));
                i += 2;
                continue;
            }
        } else if let Some((len, v)) = b.number_words_at(i) {
            if let (Some(u), true) = (unit_of(b.tok(i + len)), b.free(i + len, i + len + 1)) {
                b.add(i, i + len + 1, Label::Quantity, Some(v as f64), Some(u));
                i += len + 1;
                continue;
            }
        }
        i += 1;
    }

    // CARDINAL
    const GOVERNORS: [&str; 5] = ["nearest", "closest", "similar", "most", "top"];
    let mut i = 0;
    while i < n {
        if let Some((len, v)) = b.number_words_at(i) {
            // a bare "a" is an article, not a number
            if !(len == 1 && b.tok(i) == "a") {
                b.add(i, i + len, Label::Cardinal, Some(v as f64), None);
                i += len;
                continue;
            }
        }
        if b.free(i, i + 1) && is_integer(b.tok(i)) {
            let prev = if i > 0 { b.tok(i - 1) } else { "" };
            if GOVERNORS.contains(&prev) || GOVERNORS.contains(&b.tok(i + 1)) {
                let v: f64 = b.tok(i).parse().unwrap_or(0.0);
                b.add(i, i + 1, Label::Cardinal, Some(v), None);
            }
        }
        i += 1;
    }

    // NUMBER
    for i in 0..n {
        if b.free(i, i + 1) && is_numeric(b.tok(i)) {
            let v: f64 = b.tok(i).parse().unwrap_or(0.0);
            b.add(i, i + 1, Label::Number, Some(v), None);
        }
    }

    let mut numbers = std::mem::take(&mut b.spans);
    numbers.sort_by_key(|s| s.start);

    // INFO: maximal runs of remaining non-stop words
    let mut i = 0;
    while i < n {
        if b.owner[i] || is_stop(b.tok(i)) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < n && !b.owner[j] && !is_stop(b.tok(j)) {
            j += 1;
        }
        b.add(i, j, Label::Info, None, None);
        i = j;
    }
    let info = b.spans;
    Ok(Tagging { source: nlq.to_string(), tokens, numbers, info })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(t: &Tagging) -> Vec<(Label, String)> {
        t.spans().into_iter().map(|s| (s.label, s.text.to_lowercase())).collect()
    }

    #[test]
    fn q2_lists() {
        let t = coarse_tag("Show me fifty nearest neighbors to the train 5 between 6am and 11am.").unwrap();
        let nums: Vec<(Label, &str)> = t.numbers.iter().map(|s| (s.label, s.text.as_str())).collect();
        assert_eq!(
            nums,
            vec![(Label::Cardinal, "fifty"), (Label::Number, "5"), (Label::Time, "6am"), (Label::Time, "11am")]
        );
        assert_eq!(t.numbers[2].value, Some(21_600_000.0));
        assert_eq!(t.numbers[3].value, Some(39_600_000.0));
        let info: Vec<&str> = t.info.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(info, vec!["Show", "nearest neighbors", "train"]);
    }

    #[test]
    fn quantity() {
        let t = coarse_tag("pois within 500 m of the river").unwrap();
        assert_eq!(labels(&t)[1], (Label::Quantity, "500 m".into()));
        assert_eq!(t.numbers[0].unit, Some(DistUnit::M));
        let info: Vec<&str> = t.info.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(info, vec!["pois within", "river"]);
        let t = coarse_tag("within 2km or two kilometres").unwrap();
        assert_eq!(t.numbers.len(), 2);
        assert!(t.numbers.iter().all(|s| s.label == Label::Quantity && s.value == Some(2.0)));
    }

    #[test]
    fn empty_input() {
        assert_eq!(coarse_tag("").unwrap_err(), NluError::EmptyInput);
        assert_eq!(coarse_tag("  ?! ").unwrap_err(), NluError::EmptyInput);
    }

    #[test]
    fn times() {
        let t = coarse_tag("from 06:30 to 12pm, between 7 and 9, at 12am").unwrap();
        let v: Vec<f64> = t.numbers.iter().map(|s| s.value.unwrap()).collect();
        assert_eq!(v, vec![23_400_000.0, 43_200_000.0, 25_200_000.0, 32_400_000.0, 0.0]);
        assert!(t.numbers.iter().all(|s| s.label == Label::Time));
    }

    #[test]
    fn spans_do_not_overlap() {
        let q = "How many of the 3 nearest pois lie within 2.5 km between 6 and 7 pm?";
        let t = coarse_tag(q).unwrap();
        let spans = t.spans();
        for w in spans.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
        assert!(spans.iter().all(|s| s.end <= q.len()));
    }
}
