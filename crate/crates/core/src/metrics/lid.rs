//! Language identification.
//!
//! [`NaiveBayesLid`] is a multinomial naive-Bayes classifier over character
//! n-grams of orders 1 to 3, with add-one smoothing and a uniform prior. It is
//! meant for toy and synthetic corpora; real evaluations can plug in any
//! classifier through [`LanguageIdentifier`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::LanguageCode;

pub const UNDETERMINED: &str = "und";
const MAX_ORDER: usize = 3;

pub trait LanguageIdentifier: Send + Sync {
    /// Predicted language and a confidence in `[0, 1]`. Texts with no usable
    /// characters yield `und` with confidence 0.
    fn classify(&self, text: &str) -> (LanguageCode, f64);
}

pub fn undetermined() -> LanguageCode {
    LanguageCode::new(UNDETERMINED).expect("static")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LanguageModel {
    counts: HashMap<String, u64>,
    total: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesLid {
    languages: BTreeMap<LanguageCode, LanguageModel>,
    features: usize,
}

fn features(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let padded: Vec<char> = std::iter::once(' ').chain(word.chars()).chain(std::iter::once(' ')).collect();
        for n in 1..=MAX_ORDER {
            for w in padded.windows(n) {
                if n == 1 && w[0] == ' ' {
                    continue;
                }
                out.push(w.iter().collect());
            }
        }
    }
    out
}

impl NaiveBayesLid {
    /// Trains from `(language, text)` samples; several samples per language are pooled.
    pub fn train<'a, I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LanguageCode, &'a str)>,
    {
        let mut languages: BTreeMap<LanguageCode, LanguageModel> = BTreeMap::new();
        let mut seen = HashSet::new();
        for (lang, text) in samples {
            let model = languages.entry(lang).or_insert_with(|| LanguageModel { counts: HashMap::new(), total: 0 });
            for f in features(text) {
                model.total += 1;
                *model.counts.entry(f.clone()).or_insert(0) += 1;
                seen.insert(f);
            }
        }
        if languages.is_empty() || languages.values().any(|m| m.total == 0) {
            return Err(Error::Data("every language needs non-empty training text".into()));
        }
        Ok(Self { languages, features: seen.len() })
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageCode> {
        self.languages.keys()
    }

    /// Log-likelihood of the text under each language.
    pub fn log_likelihoods(&self, text: &str) -> Vec<(LanguageCode, f64)> {
        let feats = features(text);
        let vocab = (self.features + 1) as f64;
        self.languages
            .iter()
            .map(|(lang, m)| {
                let denom = (m.total as f64 + vocab).ln();
                let ll: f64 = feats
                    .iter()
                    .map(|f| (m.counts.get(f).copied().unwrap_or(0) as f64 + 1.0).ln() - denom)
                    .sum();
                (lang.clone(), ll)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl LanguageIdentifier for NaiveBayesLid {
    fn classify(&self, text: &str) -> (LanguageCode, f64) {
        if features(text).is_empty() {
            return (undetermined(), 0.0);
        }
        let lls = self.log_likelihoods(text);
        let best = lls
            .iter()
            .fold(None::<&(LanguageCode, f64)>, |acc, x| match acc {
                Some(a) if a.1 >= x.1 => Some(a),
                _ => Some(x),
            })
            .expect("at least one language");
        let z: f64 = lls.iter().map(|(_, ll)| (ll - best.1).exp()).sum();
        (best.0.clone(), 1.0 / z)
    }
}
