//! Top n-gram (TNG) oscillation detector.
//!
//! A hypothesis is flagged when its most frequent word n-gram occurs at least
//! `t` more times than the most frequent word n-gram of its source. Words are
//! whitespace tokens compared case-sensitively.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TngParams {
    pub n: usize,
    pub t: usize,
}

impl Default for TngParams {
    fn default() -> Self {
        Self { n: 4, t: 2 }
    }
}

impl TngParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 {
            return Err(Error::InvalidParameter(format!("TNG needs n >= 1 and t >= 1, got n={} t={}", self.n, self.t)));
        }
        Ok(())
    }
}

/// Count of the most frequent word n-gram; 0 for texts shorter than `n` words.
pub fn top_ngram_count(text: &str, n: usize) -> usize {
    let words: Vec<&str> = text.split_whitespace().collect();
    if n == 0 || words.len() < n {
        return 0;
    }
    let mut counts: HashMap<&[&str], usize> = HashMap::new();
    for w in words.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

pub fn tng_flag(src: &str, hyp: &str, params: &TngParams) -> bool {
    top_ngram_count(hyp, params.n) >= top_ngram_count(src, params.n) + params.t
}
