//! Bag-of-n-gram multinomial logistic regression over query types.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tag::tokenize;
use super::NluError;
use crate::corpus::{CorpusEntry, QueryType};

pub const MODEL_VERSION: &str = "nlst-linear-1";
pub const EPOCHS: usize = 200;
pub const LEARNING_RATE: f64 = 0.1;
const MIN_PER_CLASS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeClassifier {
    pub version: String,
    pub classes: Vec<QueryType>,
    pub vocabulary: BTreeMap<String, usize>,
    /// One row per class, one column per vocabulary entry.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Distinct unigram and bigram features; tokens holding a digit collapse to `<num>`.
pub fn features(nlq: &str) -> Vec<String> {
    let toks: Vec<String> = tokenize(nlq)
        .into_iter()
        .map(|t| if t.text.chars().any(|c| c.is_ascii_digit()) { "<num>".to_string() } else { t.text })
        .collect();
    let mut out: BTreeSet<String> = toks.iter().cloned().collect();
    for w in toks.windows(2) {
        out.insert(format!("{} {}", w[0], w[1]));
    }
    out.into_iter().collect()
}

fn softmax(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

pub fn train_classifier(corpus: &[CorpusEntry], seed: u64) -> Result<TypeClassifier, NluError> {
    let classes = QueryType::ALL.to_vec();
    for c in &classes {
        if corpus.iter().filter(|e| e.query_type == *c).count() < MIN_PER_CLASS {
            return Err(NluError::InsufficientData(*c));
        }
    }
    let feats: Vec<Vec<String>> = corpus.iter().map(|e| features(&e.nlq)).collect();
    let vocabulary: BTreeMap<String, usize> = feats
        .iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, f)| (f.clone(), i))
        .collect();
    let data: Vec<(Vec<usize>, usize)> = feats
        .iter()
        .zip(corpus)
        .map(|(fs, e)| (fs.iter().map(|f| vocabulary[f]).collect(), e.query_type.index()))
        .collect();

    let (nc, nv) = (classes.len(), vocabulary.len());
    let mut weights = vec![vec![0.0; nv]; nc];
    let mut bias = vec![0.0; nc];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![0.0; nc];
    for _ in 0..EPOCHS {
        order.shuffle(&mut rng);
        for &i in &order {
            let (fs, y) = &data[i];
            for c in 0..nc {
                p[c] = bias[c] + fs.iter().map(|&f| weights[c][f]).sum::<f64>();
            }
            softmax(&mut p);
            for c in 0..nc {
                let g = p[c] - if c == *y { 1.0 } else { 0.0 };
                bias[c] -= LEARNING_RATE * g;
                for &f in fs {
                    weights[c][f] -= LEARNING_RATE * g;
                }
            }
        }
    }
    Ok(TypeClassifier { version: MODEL_VERSION.to_string(), classes, vocabulary, weights, bias })
}

impl TypeClassifier {
    /// Arg-max class and the softmax score of every class. Unknown features
    /// are ignored, so an all-unknown question falls back to the largest bias.
    pub fn classify(&self, nlq: &str) -> (QueryType, Vec<f64>) {
        let fs: Vec<usize> = features(nlq).iter().filter_map(|f| self.vocabulary.get(f).copied()).collect();
        let mut z: Vec<f64> =
            (0..self.classes.len()).map(|c| self.bias[c] + fs.iter().map(|&f| self.weights[c][f]).sum::<f64>()).collect();
        let mut best = 0;
        for c in 1..z.len() {
            if z[c] > z[best] {
                best = c;
            }
        }
        softmax(&mut z);
        (self.classes[best], z)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NluError> {
        let m: TypeClassifier = serde_json::from_str(s).map_err(|e| NluError::Model(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(NluError::Model(format!("unsupported model version '{}'", m.version)));
        }
        let nv = m.vocabulary.len();
        if m.classes.is_empty()
            || m.weights.len() != m.classes.len()
            || m.bias.len() != m.classes.len()
            || m.weights.iter().any(|w| w.len() != nv)
            || m.vocabulary.values().any(|&i| i >= nv)
        {
            return Err(NluError::Model("inconsistent model dimensions".into()));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NluError> {
        let p = path.as_ref();
        let s = std::fs::read_to_string(p).map_err(|e| NluError::Model(format!("{}: {e}", p.display())))?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
