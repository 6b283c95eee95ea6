//! Character n-gram F-score, computed the way sacreBLEU 2.x does with the
//! signature `chrF2|nc:6|nw:0|e:yes|s:no`: whitespace is removed before
//! extracting n-grams, precision and recall are averaged over the orders
//! present in both strings, and the F-beta of those averages is reported.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChrfParams {
    pub char_order: usize,
    /// Word n-gram order; only 0 (plain chrF) is supported.
    pub word_order: usize,
    pub beta: f64,
    pub remove_whitespace: bool,
}

impl Default for ChrfParams {
    fn default() -> Self {
        Self { char_order: 6, word_order: 0, beta: 2.0, remove_whitespace: true }
    }
}

impl ChrfParams {
    fn validate(&self) -> Result<()> {
        if self.char_order == 0 {
            return Err(Error::InvalidParameter("char_order must be at least 1".into()));
        }
        if self.word_order != 0 {
            return Err(Error::InvalidParameter("word n-grams are not supported (word_order must be 0)".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Per-order (hypothesis, reference, matched) n-gram counts; additive over segments.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChrfStats {
    pub orders: Vec<[u64; 3]>,
}

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        if self.orders.len() < other.orders.len() {
            self.orders.resize(other.orders.len(), [0; 3]);
        }
        for (a, b) in self.orders.iter_mut().zip(&other.orders) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }

    /// F-beta of the precision and recall averaged over effective orders, scaled to 0..100.
    pub fn score(&self, beta: f64) -> f64 {
        let factor = beta * beta;
        let (mut avg_p, mut avg_r, mut effective) = (0.0, 0.0, 0usize);
        for &[hyp, reference, matched] in &self.orders {
            if hyp > 0 && reference > 0 {
                avg_p += matched as f64 / hyp as f64;
                avg_r += matched as f64 / reference as f64;
                effective += 1;
            }
        }
        if effective == 0 {
            return 0.0;
        }
        avg_p /= effective as f64;
        avg_r /= effective as f64;
        if avg_p + avg_r == 0.0 {
            return 0.0;
        }
        100.0 * (1.0 + factor) * avg_p * avg_r / (factor * avg_p + avg_r)
    }
}

fn is_split_whitespace(c: char) -> bool {
    // str.split() in Python also splits on the ASCII separator controls.
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

fn chars_of(text: &str, remove_whitespace: bool) -> Vec<char> {
    if remove_whitespace {
        text.chars().filter(|&c| !is_split_whitespace(c)).collect()
    } else {
        text.chars().collect()
    }
}

fn count_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics for one segment.
pub fn chrf_stats(hyp: &str, reference: &str, params: &ChrfParams) -> Result<ChrfStats> {
    params.validate()?;
    let h = chars_of(hyp, params.remove_whitespace);
    let r = chars_of(reference, params.remove_whitespace);
    let mut orders = Vec::with_capacity(params.char_order);
    for n in 1..=params.char_order {
        let hc = count_ngrams(&h, n);
        let rc = count_ngrams(&r, n);
        let matched: u64 = hc.iter().map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0))).sum();
        orders.push([hc.values().sum(), rc.values().sum(), matched]);
    }
    Ok(ChrfStats { orders })
}

/// Segment-level chrF. Two empty strings score 100.
pub fn chrf(hyp: &str, reference: &str, params: &ChrfParams) -> Result<f64> {
    let stats = chrf_stats(hyp, reference, params)?;
    if stats.orders.iter().all(|o| o[0] == 0 && o[1] == 0) {
        return Ok(100.0);
    }
    Ok(stats.score(params.beta))
}

/// Segment-level chrF2 with default parameters.
pub fn chrf2(hyp: &str, reference: &str) -> f64 {
    chrf(hyp, reference, &ChrfParams::default()).expect("default parameters are valid")
}

/// Corpus-level chrF from summed statistics.
pub fn corpus_chrf<'a, I>(pairs: I, params: &ChrfParams) -> Result<f64>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut total = ChrfStats::default();
    for (h, r) in pairs {
        total.add(&chrf_stats(h, r, params)?);
    }
    Ok(total.score(params.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_empty() {
        assert_eq!(chrf2("abc", "abc"), 100.0);
        assert_eq!(chrf2("", "abc"), 0.0);
        assert_eq!(chrf2("abc", ""), 0.0);
        assert_eq!(chrf2("", ""), 100.0);
        assert_eq!(chrf2("   ", "\t"), 100.0);
    }

    #[test]
    fn whitespace_ignored() {
        assert_eq!(chrf2("a b c", "abc"), 100.0);
    }

    #[test]
    fn word_order_rejected() {
        let p = ChrfParams { word_order: 2, ..ChrfParams::default() };
        assert!(chrf("a", "a", &p).is_err());
    }

    proptest! {
        #[test]
        fn bounded(h in "[a-c ]{0,12}", r in "[a-c ]{0,12}") {
            let s = chrf2(&h, &r);
            prop_assert!((0.0..=100.0).contains(&s));
        }

        #[test]
        fn self_match(x in "[a-zäö ]{0,20}") {
            prop_assert_eq!(chrf2(&x, &x), 100.0);
        }

        #[test]
        fn outer_whitespace_invariant(h in "[a-d ]{0,10}", r in "[a-d ]{1,10}", pad in "[ \t]{0,3}") {
            let padded = format!("{pad}{h}{pad}");
            prop_assert_eq!(chrf2(&padded, &r), chrf2(&h, &r));
            let padded = format!("{pad}{r}{pad}");
            prop_assert_eq!(chrf2(&h, &padded), chrf2(&h, &r));
        }
    }
}
