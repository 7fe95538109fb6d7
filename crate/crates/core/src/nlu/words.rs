//! Fixed word lists used by the tagger and the extractor.

/// English function words dropped before entity matching.
pub const STOP_WORDS: &[&str] = &[
    "a", "all", "among", "an", "and", "any", "are", "as", "at", "be", "been", "between", "by", "can", "could",
    "did", "do", "does", "each", "every", "for", "from", "has", "have", "how", "i", "in", "into", "is", "it", "its",
    "me", "more", "my", "no", "of", "on", "or", "other", "please", "some", "than", "that", "the", "their", "them",
    "there", "these", "they", "this", "those", "to", "us", "was", "we", "were", "what", "when", "where", "which",
    "who", "whose", "with", "you", "your",
];

/// Query vocabulary that never names an entity.
pub const CUE_WORDS: &[&str] = &[
    "active", "am", "around", "average", "avg", "away", "biggest", "close", "closest", "compare", "compared",
    "contain", "contained", "containing", "contains", "count", "cross", "crosses", "crossing", "display",
    "distance", "during", "exist", "existed", "find", "get", "give", "greatest", "highest", "inside", "intersect",
    "intersecting", "intersects", "kilometer", "kilometers", "kilometre", "kilometres", "km", "largest", "least",
    "less", "lie", "lies", "list", "located", "long", "longest", "lowest", "m", "many", "match", "max", "maximum",
    "mean", "meter", "meters", "metre", "metres", "min", "minimum", "most", "move", "moved", "movement", "moving",
    "near", "nearest", "neighbor", "neighbors", "neighbour", "neighbours", "number", "object", "objects", "overlap",
    "overlapping", "overlaps", "pairs", "pass", "passes", "period", "pm", "present", "radius", "resemble",
    "resembles", "resembling", "return", "shortest", "show", "similar", "smallest", "tell", "through", "time",
    "top", "trajectories", "trajectory", "travel", "traveled", "travelled", "within",
];

pub fn is_stop(w: &str) -> bool {
    STOP_WORDS.contains(&w)
}

pub fn is_cue(w: &str) -> bool {
    CUE_WORDS.contains(&w)
}

pub const NEAREST_WORDS: &[&str] = &["nearest", "closest", "neighbor", "neighbors", "neighbour", "neighbours"];
pub const SIMILAR_WORDS: &[&str] = &["similar", "resemble", "resembles", "resembling"];
pub const INTERSECT_WORDS: &[&str] =
    &["intersect", "intersects", "intersecting", "cross", "crosses", "crossing", "overlap", "overlaps", "overlapping"];
pub const CONTAIN_WORDS: &[&str] = &["in", "inside", "within", "at", "contain", "contains", "containing", "located"];

const UNITS: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const TENS: [&str; 10] = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];

/// Value of a single number word (`"fifty"` is 50, `"hundred"` is 100).
pub fn number_word(w: &str) -> Option<u32> {
    if w == "hundred" {
        return Some(100);
    }
    if let Some(i) = UNITS.iter().position(|u| *u == w) {
        return (i > 0).then_some(i as u32);
    }
    TENS.iter().position(|t| !t.is_empty() && *t == w).map(|i| i as u32 * 10)
}

/// Parses a number phrase such as `"fifty"`, `"twenty five"`, `"twenty-five"` or `"one hundred"`.
pub fn parse_number_words(s: &str) -> Option<u32> {
    let words: Vec<&str> = s.split(|c: char| c == ' ' || c == '-').filter(|w| !w.is_empty()).collect();
    match words.as_slice() {
        [w] => number_word(w),
        ["one" | "a", "hundred"] => Some(100),
        [t, u] => {
            let (t, u) = (number_word(t)?, number_word(u)?);
            (t % 10 == 0 && (20..=90).contains(&t) && (1..=9).contains(&u)).then_some(t + u)
        }
        _ => None,
    }
}

/// English words for 1..=100.
pub fn number_to_words(n: u32) -> Option<String> {
    Some(match n {
        1..=19 => UNITS[n as usize].to_string(),
        100 => "hundred".to_string(),
        20..=99 if n % 10 == 0 => TENS[(n / 10) as usize].to_string(),
        20..=99 => format!("{} {}", TENS[(n / 10) as usize], UNITS[(n % 10) as usize]),
        _ => return None,
    })
}
