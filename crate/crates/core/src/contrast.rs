//! Building contrastive objectives.
//!
//! Source-contrastive negatives pair each segment with other segments of the
//! same document, picked by seeded shuffling. Language-contrastive negatives
//! keep the source and swap the requested output language for each member of
//! `{english, source} \ {target}`.

use serde::{Deserialize, Serialize};

use crate::context::{ConditioningContext, ContextMode, ContrastiveObjective, Document, Negative};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::vocab::LanguageCode;

/// Rejection-sampling budget per permutation before giving up.
const MAX_SHUFFLE_ATTEMPTS: usize = 10_000;

pub const POSITIVE_PROMPT: &str = "positive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContrastConfig {
    pub lambda_src: f64,
    pub lambda_lang: f64,
    /// Number of contrastive sources per segment; `lambda_src` is split evenly among them.
    pub num_src_contrastive: usize,
    pub english: LanguageCode,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self {
            lambda_src: 0.7,
            lambda_lang: 0.1,
            num_src_contrastive: 1,
            english: LanguageCode::new("en").expect("static"),
        }
    }
}

impl ContrastConfig {
    /// No contrastive terms at all.
    pub fn baseline() -> Self {
        Self { lambda_src: 0.0, lambda_lang: 0.0, ..Self::default() }
    }

    pub fn with_lambda_src(mut self, lambda: f64) -> Self {
        self.lambda_src = lambda;
        self
    }

    pub fn with_lambda_lang(mut self, lambda: f64) -> Self {
        self.lambda_lang = lambda;
        self
    }

    pub fn with_num_src_contrastive(mut self, k: usize) -> Self {
        self.num_src_contrastive = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_src_contrastive == 0 {
            return Err(Error::InvalidParameter("num_src_contrastive must be at least 1".into()));
        }
        for (name, v) in [("lambda_src", self.lambda_src), ("lambda_lang", self.lambda_lang)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }

    /// Whether source-contrastive negatives are needed at all.
    pub fn uses_sources(&self) -> bool {
        self.lambda_src > 0.0
    }
}

/// For each segment, `k` indices of other segments to use as contrastive
/// sources.
///
/// Each of the `k` rounds draws a full permutation and redraws it until no
/// segment is paired with itself, with a segment of identical text, or with a
/// segment it already got in an earlier round.
pub fn assign_contrastive_sources(doc: &Document, k: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    let n = doc.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if n < k + 1 {
        return Err(Error::InsufficientPool { segments: n, k });
    }
    let segments = doc.segments();
    let mut assigned: Vec<Vec<usize>> = vec![Vec::with_capacity(k); n];
    for _ in 0..k {
        let mut accepted = None;
        for _ in 0..MAX_SHUFFLE_ATTEMPTS {
            let perm = rng.permutation(n);
            let ok = perm.iter().enumerate().all(|(i, &j)| {
                j != i && segments[j] != segments[i] && !assigned[i].contains(&j)
            });
            if ok {
                accepted = Some(perm);
                break;
            }
        }
        let perm = accepted.ok_or(Error::InsufficientPool { segments: n, k })?;
        for (i, j) in perm.into_iter().enumerate() {
            assigned[i].push(j);
        }
    }
    Ok(assigned)
}

/// `{english, src} \ {tgt}`, English first, without duplicates.
pub fn contrastive_language_set(
    src: &LanguageCode,
    tgt: &LanguageCode,
    english: &LanguageCode,
) -> Result<Vec<LanguageCode>> {
    if src == tgt {
        return Err(Error::DegenerateDirection(src.to_string()));
    }
    let mut out = Vec::with_capacity(2);
    for lang in [english, src] {
        if lang != tgt && !out.contains(lang) {
            out.push(lang.clone());
        }
    }
    Ok(out)
}

/// Prompt variant naming a language-contrastive instruction.
pub fn contrastive_prompt(lang: &LanguageCode) -> String {
    format!("contrastive:{lang}")
}

/// Combines source- and language-contrastive negatives for `ctx`.
///
/// `contrast_sources` must hold exactly `num_src_contrastive` texts when
/// `lambda_src > 0`; it is ignored otherwise. Negatives with zero weight are
/// left out.
pub fn build_objective(
    ctx: &ConditioningContext,
    contrast_sources: &[String],
    config: &ContrastConfig,
) -> Result<ContrastiveObjective> {
    config.validate()?;
    let languages = contrastive_language_set(&ctx.source_lang, &ctx.target_lang, &config.english)?;
    let mut positive = ctx.clone();
    if positive.mode == ContextMode::Llm && positive.prompt_variant.is_none() {
        positive.prompt_variant = Some(POSITIVE_PROMPT.into());
    }

    let mut negatives = Vec::new();
    if config.uses_sources() {
        let k = config.num_src_contrastive;
        if contrast_sources.len() != k {
            return Err(Error::InvalidParameter(format!(
                "expected {k} contrastive sources, got {}",
                contrast_sources.len()
            )));
        }
        let weight = config.lambda_src / k as f64;
        for text in contrast_sources {
            negatives.push(Negative { context: positive.with_source(text.clone())?, weight });
        }
    }
    if config.lambda_lang > 0.0 {
        for lang in languages {
            let mut context = positive.with_target(lang.clone());
            if context.mode == ContextMode::Llm {
                context.prompt_variant = Some(contrastive_prompt(&lang));
            }
            negatives.push(Negative { context, weight: config.lambda_lang });
        }
    }
    ContrastiveObjective::new(positive, negatives)
}
