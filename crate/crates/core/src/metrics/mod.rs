//! Translation quality and failure-mode metrics.
//!
//! * [`chrf2`]: character n-gram F-score (β = 2, orders 1..6);
//! * [`bleu`]: BLEU over caller-tokenized input;
//! * [`tng_flag`]: oscillation detector comparing top n-gram counts;
//! * [`hallucination_rate`]: share of segments with chrF2 below a threshold;
//! * [`off_target_counts`]: outputs in English, in the source language, or elsewhere.

mod bleu;
mod chrf;
mod lid;
mod tng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bleu::{bleu, bleu_stats, corpus_bleu, BleuStats, MAX_ORDER};
pub use chrf::{chrf, chrf2, chrf_stats, corpus_chrf, ChrfParams, ChrfStats};
pub use lid::{undetermined, LanguageIdentifier, NaiveBayesLid, UNDETERMINED};
pub use tng::{tng_flag, top_ngram_count, TngParams};

use crate::error::{Error, Result};
use crate::vocab::LanguageCode;

pub const DEFAULT_HALLUCINATION_THRESHOLD: f64 = 10.0;
pub const ENGLISH: &str = "en";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub chrf: ChrfParams,
    pub tng: TngParams,
    /// Segments scoring below this chrF2 count as hallucinations.
    pub threshold: f64,
    pub bleu: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { chrf: ChrfParams::default(), tng: TngParams::default(), threshold: DEFAULT_HALLUCINATION_THRESHOLD, bleu: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
    pub chrf2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    pub tng_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_lang: Option<LanguageCode>,
}

impl EvalRecord {
    pub fn compute(
        source: &str,
        hypothesis: &str,
        reference: &str,
        options: &EvalOptions,
        lid: Option<&dyn LanguageIdentifier>,
    ) -> Result<Self> {
        options.tng.validate()?;
        let chrf2 = chrf(hypothesis, reference, &options.chrf)?;
        let bleu = if options.bleu && !reference.trim().is_empty() {
            let h: Vec<&str> = hypothesis.split_whitespace().collect();
            let r: Vec<&str> = reference.split_whitespace().collect();
            Some(bleu(&h, &r, MAX_ORDER)?)
        } else {
            None
        };
        Ok(Self {
            source: source.into(),
            hypothesis: hypothesis.into(),
            reference: reference.into(),
            chrf2,
            bleu,
            tng_flag: tng_flag(source, hypothesis, &options.tng),
            predicted_lang: lid.map(|l| l.classify(hypothesis).0),
        })
    }
}

/// Scores aligned `(source, hypothesis, reference)` triples in parallel, keeping order.
pub fn evaluate(
    triples: &[(String, String, String)],
    options: &EvalOptions,
    lid: Option<&dyn LanguageIdentifier>,
) -> Result<Vec<EvalRecord>> {
    triples
        .par_iter()
        .map(|(s, h, r)| EvalRecord::compute(s, h, r, options, lid))
        .collect()
}

/// Share of records with chrF2 strictly below `threshold`.
pub fn hallucination_rate(records: &[EvalRecord], threshold: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("hallucination rate over zero records"));
    }
    let n = records.iter().filter(|r| r.chrf2 < threshold).count();
    Ok(n as f64 / records.len() as f64)
}

pub fn tng_rate(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("TNG rate over zero records"));
    }
    Ok(records.iter().filter(|r| r.tng_flag).count() as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffTargetCounts {
    pub en: usize,
    pub src: usize,
    pub other: usize,
}

impl OffTargetCounts {
    pub fn total(&self) -> usize {
        self.en + self.src + self.other
    }
}

/// Buckets hypotheses not identified as `target`. English is checked before
/// the source language. Records without a stored prediction are classified
/// with `lid`.
pub fn off_target_counts(
    records: &[EvalRecord],
    target: &LanguageCode,
    source: &LanguageCode,
    lid: &dyn LanguageIdentifier,
) -> OffTargetCounts {
    let mut counts = OffTargetCounts::default();
    for r in records {
        let predicted = match &r.predicted_lang {
            Some(l) => l.clone(),
            None => lid.classify(&r.hypothesis).0,
        };
        if &predicted == target {
            continue;
        }
        if predicted.as_str() == ENGLISH {
            counts.en += 1;
        } else if &predicted == source {
            counts.src += 1;
        } else {
            counts.other += 1;
        }
    }
    counts
}

/// Corpus summary written by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub segments: usize,
    pub chrf2_mean: f64,
    /// chrF2 from statistics summed over the corpus.
    pub chrf2_corpus: f64,
    pub bleu: Option<f64>,
    pub halluc_rate: f64,
    pub tng_rate: f64,
    pub off_target: Option<OffTargetCounts>,
}

/// Summarizes records. Off-target buckets are filled when `direction`
/// (source, target) is given and a language identifier is available.
pub fn corpus_report(
    records: &[EvalRecord],
    options: &EvalOptions,
    direction: Option<(&LanguageCode, &LanguageCode)>,
    lid: Option<&dyn LanguageIdentifier>,
) -> Result<CorpusReport> {
    if records.is_empty() {
        return Err(Error::Empty("corpus report over zero records"));
    }
    let pairs = || records.iter().map(|r| (r.hypothesis.as_str(), r.reference.as_str()));
    let bleu = if options.bleu { Some(corpus_bleu(pairs())?) } else { None };
    let off_target = match (direction, lid) {
        (Some((src, tgt)), Some(lid)) => Some(off_target_counts(records, tgt, src, lid)),
        _ => None,
    };
    Ok(CorpusReport {
        segments: records.len(),
        chrf2_mean: records.iter().map(|r| r.chrf2).sum::<f64>() / records.len() as f64,
        chrf2_corpus: corpus_chrf(pairs(), &options.chrf)?,
        bleu,
        halluc_rate: hallucination_rate(records, options.threshold)?,
        tng_rate: tng_rate(records)?,
        off_target,
    })
}
