//! Conditioning contexts and contrastive objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{LanguageCode, TokenId};

/// How a context conditions the model: language indicator tokens (`mt`) or an
/// instruction prompt realized by the scorer (`llm`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    #[default]
    Mt,
    Llm,
}

/// One (source, target language, forced prefix) conditioning of the scorer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditioningContext {
    pub source_text: String,
    pub source_lang: LanguageCode,
    pub target_lang: LanguageCode,
    #[serde(default)]
    pub forced_prefix: Vec<TokenId>,
    #[serde(default)]
    pub mode: ContextMode,
    /// Names the instruction template an LLM scorer should realize, e.g.
    /// `positive` or `contrastive:en`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_variant: Option<String>,
}

impl ConditioningContext {
    pub fn new(source_text: impl Into<String>, source_lang: LanguageCode, target_lang: LanguageCode) -> Result<Self> {
        let source_text = source_text.into();
        if source_text.trim().is_empty() {
            return Err(Error::InvalidContext("source text is empty".into()));
        }
        Ok(Self {
            source_text,
            source_lang,
            target_lang,
            forced_prefix: Vec::new(),
            mode: ContextMode::Mt,
            prompt_variant: None,
        })
    }

    pub fn with_forced_prefix(mut self, prefix: Vec<TokenId>) -> Self {
        self.forced_prefix = prefix;
        self
    }

    pub fn with_mode(mut self, mode: ContextMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_prompt_variant(mut self, variant: impl Into<String>) -> Self {
        self.prompt_variant = Some(variant.into());
        self
    }

    /// Same context with a different source segment.
    pub fn with_source(&self, source_text: impl Into<String>) -> Result<Self> {
        let source_text = source_text.into();
        if source_text.trim().is_empty() {
            return Err(Error::InvalidContext("source text is empty".into()));
        }
        Ok(Self { source_text, ..self.clone() })
    }

    /// Same context asking for a different output language.
    pub fn with_target(&self, target_lang: LanguageCode) -> Self {
        Self { target_lang, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Negative {
    pub context: ConditioningContext,
    pub weight: f64,
}

/// Positive context plus weighted contrastive contexts.
///
/// All contexts share the hypothesis prefix during search, so their forced
/// prefixes must be token-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveObjective {
    positive: ConditioningContext,
    negatives: Vec<Negative>,
}

impl ContrastiveObjective {
    pub fn new(positive: ConditioningContext, negatives: Vec<Negative>) -> Result<Self> {
        for (i, neg) in negatives.iter().enumerate() {
            if !(neg.weight.is_finite() && neg.weight >= 0.0) {
                return Err(Error::InvalidObjective(format!("negative {i} has weight {}", neg.weight)));
            }
            if neg.context.source_text == positive.source_text && neg.context.target_lang == positive.target_lang {
                return Err(Error::InvalidObjective(format!(
                    "negative {i} has the same source text and target language as the positive context"
                )));
            }
            if neg.context.forced_prefix != positive.forced_prefix {
                return Err(Error::InvalidObjective(format!(
                    "negative {i} has a forced prefix that differs from the positive context"
                )));
            }
        }
        Ok(Self { positive, negatives })
    }

    /// Objective without contrastive terms (plain likelihood).
    pub fn plain(positive: ConditioningContext) -> Self {
        Self { positive, negatives: Vec::new() }
    }

    pub fn positive(&self) -> &ConditioningContext {
        &self.positive
    }

    pub fn negatives(&self) -> &[Negative] {
        &self.negatives
    }

    /// Positive context first, then negatives in order.
    pub fn contexts(&self) -> impl Iterator<Item = &ConditioningContext> {
        std::iter::once(&self.positive).chain(self.negatives.iter().map(|n| &n.context))
    }

    pub fn weights(&self) -> Vec<f64> {
        self.negatives.iter().map(|n| n.weight).collect()
    }

    pub fn forced_prefix(&self) -> &[TokenId] {
        &self.positive.forced_prefix
    }

    /// Copy with every negative weight replaced by zero.
    pub fn zero_weighted(&self) -> Self {
        Self {
            positive: self.positive.clone(),
            negatives: self
                .negatives
                .iter()
                .map(|n| Negative { context: n.context.clone(), weight: 0.0 })
                .collect(),
        }
    }
}

/// Ordered source segments of one input document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    segments: Vec<String>,
    lang: LanguageCode,
}

impl Document {
    pub fn new(segments: Vec<String>, lang: LanguageCode) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Empty("document has no segments"));
        }
        if let Some(i) = segments.iter().position(|s| s.trim().is_empty()) {
            return Err(Error::Data(format!("segment {i} is empty")));
        }
        Ok(Self { segments, lang })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn lang(&self) -> &LanguageCode {
        &self.lang
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}
