//! Next-token distributions conditioned on a context.
//!
//! A [`Scorer`] answers `p(· | prefix, context)` over a fixed vocabulary. The
//! decoder only ever talks to this trait, so table lookups, the synthetic
//! translator and remote neural models are interchangeable.

mod synthetic;
mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use synthetic::{synthetic_corpus, LanguageProfile, SyntheticConfig, SyntheticTranslator};
pub use table::TableScorer;

use crate::context::ConditioningContext;
use crate::error::{Error, Result};
use crate::vocab::{LanguageCode, SpecialTokens, TokenId, Vocabulary};

const SUM_TOLERANCE: f64 = 1e-6;

/// Probability vector over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    probs: Vec<f64>,
}

impl StepDistribution {
    /// Validates that entries lie in `[0, 1]` and sum to one within 1e-6.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidDistribution(format!("entry {i} = {} outside [0, 1]", probs[i])));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Scales non-negative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDistribution("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn one_hot(size: usize, id: TokenId) -> Self {
        let mut probs = vec![0.0; size];
        probs[id as usize] = 1.0;
        Self { probs }
    }

    pub fn uniform(size: usize) -> Self {
        Self { probs: vec![1.0 / size as f64; size] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs.get(id as usize).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Highest-probability id; lower id wins ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best as TokenId
    }
}

/// Vocabulary facts a scorer exposes without necessarily shipping its entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabInfo {
    pub size: usize,
    pub special: SpecialTokens,
    #[serde(default)]
    pub language_indicators: BTreeMap<LanguageCode, TokenId>,
}

impl From<&Vocabulary> for VocabInfo {
    fn from(v: &Vocabulary) -> Self {
        Self { size: v.len(), special: v.special(), language_indicators: v.language_indicators().clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerDescriptor {
    pub vocab: VocabInfo,
    pub supports_language_indicators: bool,
    pub supports_llm_prompting: bool,
    pub max_context_len: usize,
}

/// Which side of the translation a text belongs to, for tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextRole {
    Source,
    Target,
}

/// Conditional next-token model.
///
/// Prefixes passed to a scorer start with BOS, followed by the context's
/// forced prefix and any decoded tokens. Implementations must be
/// deterministic and usable from several threads at once.
pub trait Scorer: Send + Sync {
    fn descriptor(&self) -> &ScorerDescriptor;

    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution>;

    /// Output order matches `items`. The first failing item is reported with its index.
    fn batch_next_distributions(&self, items: &[(&ConditioningContext, &[TokenId])]) -> Result<Vec<StepDistribution>> {
        items
            .iter()
            .enumerate()
            .map(|(index, (ctx, prefix))| {
                self.next_distribution(ctx, prefix)
                    .map_err(|e| Error::BatchItem { index, source: Box::new(e) })
            })
            .collect()
    }

    fn tokenize(&self, text: &str, role: TextRole) -> Result<Vec<TokenId>>;

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn descriptor(&self) -> &ScorerDescriptor {
        (**self).descriptor()
    }
    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution> {
        (**self).next_distribution(ctx, prefix)
    }
    fn batch_next_distributions(&self, items: &[(&ConditioningContext, &[TokenId])]) -> Result<Vec<StepDistribution>> {
        (**self).batch_next_distributions(items)
    }
    fn tokenize(&self, text: &str, role: TextRole) -> Result<Vec<TokenId>> {
        (**self).tokenize(text, role)
    }
    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        (**self).detokenize(tokens)
    }
}

impl<S: Scorer + ?Sized> Scorer for std::sync::Arc<S> {
    fn descriptor(&self) -> &ScorerDescriptor {
        (**self).descriptor()
    }
    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution> {
        (**self).next_distribution(ctx, prefix)
    }
    fn batch_next_distributions(&self, items: &[(&ConditioningContext, &[TokenId])]) -> Result<Vec<StepDistribution>> {
        (**self).batch_next_distributions(items)
    }
    fn tokenize(&self, text: &str, role: TextRole) -> Result<Vec<TokenId>> {
        (**self).tokenize(text, role)
    }
    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        (**self).detokenize(tokens)
    }
}

/// Free-function form of [`Scorer::next_distribution`].
pub fn next_distribution<S: Scorer + ?Sized>(
    scorer: &S,
    ctx: &ConditioningContext,
    prefix: &[TokenId],
) -> Result<StepDistribution> {
    scorer.next_distribution(ctx, prefix)
}

/// Free-function form of [`Scorer::batch_next_distributions`].
pub fn batch_next_distributions<S: Scorer + ?Sized>(
    scorer: &S,
    items: &[(&ConditioningContext, &[TokenId])],
) -> Result<Vec<StepDistribution>> {
    scorer.batch_next_distributions(items)
}

pub(crate) fn check_prefix(descriptor: &ScorerDescriptor, prefix: &[TokenId]) -> Result<()> {
    if prefix.len() >= descriptor.max_context_len {
        return Err(Error::ContextOverflow { len: prefix.len(), max: descriptor.max_context_len });
    }
    if let Some(&id) = prefix.iter().find(|&&id| id as usize >= descriptor.vocab.size) {
        return Err(Error::TokenOutOfRange { id, size: descriptor.vocab.size });
    }
    Ok(())
}
