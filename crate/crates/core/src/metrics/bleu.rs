//! BLEU over caller-tokenized input, matching sacreBLEU's `compute_bleu` with
//! exponential smoothing (`s:exp`). Subword tokenization such as flores101
//! is the caller's job.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Matched and total n-gram counts per order plus lengths; additive over segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub correct: Vec<u64>,
    pub total: Vec<u64>,
    pub sys_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn new(max_order: usize) -> Self {
        Self { correct: vec![0; max_order], total: vec![0; max_order], sys_len: 0, ref_len: 0 }
    }

    pub fn add(&mut self, other: &BleuStats) {
        for (a, b) in self.correct.iter_mut().zip(&other.correct) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        self.sys_len += other.sys_len;
        self.ref_len += other.ref_len;
    }

    /// Score in 0..100. With `effective_order`, orders past the longest one
    /// with any hypothesis n-grams are left out of the geometric mean.
    pub fn score(&self, effective_order: bool) -> f64 {
        let max_order = self.correct.len();
        if self.correct.iter().all(|&c| c == 0) {
            return 0.0;
        }
        let bp = if self.sys_len >= self.ref_len {
            1.0
        } else if self.sys_len == 0 {
            0.0
        } else {
            (1.0 - self.ref_len as f64 / self.sys_len as f64).exp()
        };
        let mut precisions = vec![0.0; max_order];
        let mut smooth = 1.0;
        let mut orders = max_order;
        for (n, precision) in precisions.iter_mut().enumerate() {
            if self.total[n] == 0 {
                break;
            }
            if effective_order {
                orders = n + 1;
            }
            *precision = if self.correct[n] == 0 {
                smooth *= 2.0;
                100.0 / (smooth * self.total[n] as f64)
            } else {
                100.0 * self.correct[n] as f64 / self.total[n] as f64
            };
        }
        let log_sum: f64 = precisions[..orders].iter().map(|&p| my_log(p)).sum();
        bp * (log_sum / orders as f64).exp()
    }
}

fn my_log(x: f64) -> f64 {
    if x == 0.0 {
        -9_999_999_999.0
    } else {
        x.ln()
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics for one segment. An empty reference is an error.
pub fn bleu_stats<T: Eq + Hash>(hyp: &[T], reference: &[T], max_order: usize) -> Result<BleuStats> {
    if reference.is_empty() {
        return Err(Error::Empty("BLEU reference"));
    }
    if max_order == 0 {
        return Err(Error::InvalidParameter("max_order must be at least 1".into()));
    }
    let mut stats = BleuStats::new(max_order);
    stats.sys_len = hyp.len() as u64;
    stats.ref_len = reference.len() as u64;
    for n in 1..=max_order {
        let h = ngram_counts(hyp, n);
        let r = ngram_counts(reference, n);
        stats.total[n - 1] = h.values().sum();
        stats.correct[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    }
    Ok(stats)
}

/// Sentence-level BLEU (effective order, as in sacreBLEU's `sentence_bleu`).
pub fn bleu<T: Eq + Hash>(hyp: &[T], reference: &[T], max_order: usize) -> Result<f64> {
    Ok(bleu_stats(hyp, reference, max_order)?.score(true))
}

/// Corpus-level BLEU over whitespace-tokenized text.
pub fn corpus_bleu<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut total = BleuStats::new(MAX_ORDER);
    let mut any = false;
    for (h, r) in pairs {
        let h: Vec<&str> = h.split_whitespace().collect();
        let r: Vec<&str> = r.split_whitespace().collect();
        total.add(&bleu_stats(&h, &r, MAX_ORDER)?);
        any = true;
    }
    if !any {
        return Err(Error::Empty("BLEU corpus"));
    }
    Ok(total.score(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn brevity_case() {
        let s = bleu(&["a", "b", "c", "d"], &["a", "b", "c", "d", "e"], 4).unwrap();
        assert!((s - 100.0 * (-0.25f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn identical_and_disjoint() {
        let x = ["a", "b", "c", "d", "e"];
        assert!((bleu(&x, &x, 4).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(bleu(&["p", "q", "r", "s"], &x[..4], 4).unwrap(), 0.0);
        let empty: [&str; 0] = [];
        assert!(bleu(&x, &empty, 4).is_err());
        assert_eq!(bleu(&empty, &x, 4).unwrap(), 0.0);
    }

    #[test]
    fn exp_smoothing_of_zero_orders() {
        // unigrams 2/3, bigrams 1/2, trigrams 0/1 -> 100 / (2 * 1)
        let s = bleu(&["a", "b", "x"], &["a", "b", "c"], 4).unwrap();
        let expected = ((200.0f64 / 3.0).ln() + 50f64.ln() + 50f64.ln()) / 3.0;
        assert!((s - expected.exp()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn hundred_iff_identical(h in prop::collection::vec(0u8..3, 4..9), r in prop::collection::vec(0u8..3, 4..9)) {
            let s = bleu(&h, &r, 4).unwrap();
            prop_assert_eq!((s - 100.0).abs() < 1e-9, h == r);
            prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
        }
    }
}
