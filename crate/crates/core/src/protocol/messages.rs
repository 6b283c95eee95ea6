//! Wire messages. One JSON object per line in each direction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::context::{ConditioningContext, ContextMode};
use crate::error::{Error, Result};
use crate::scoring::{ScorerDescriptor, StepDistribution, TextRole, VocabInfo};
use crate::vocab::{LanguageCode, SpecialTokens, TokenId};

pub const PROTOCOL_VERSION: u32 = 1;
/// Vocabularies up to this size get dense rows unless the request says otherwise.
pub const DENSE_VOCAB_LIMIT: usize = 4096;
pub const DEFAULT_SPARSE_TOP_K: usize = 256;
/// Slack allowed on the total probability of a row.
pub const MASS_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestBody {
    Handshake,
    Tokenize {
        text: String,
        role: TextRole,
    },
    Detokenize {
        tokens: Vec<TokenId>,
    },
    NextLogprobs {
        context: ContextDescriptor,
        prefixes: Vec<Vec<TokenId>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        top_k: Option<usize>,
    },
}

/// Conditioning context as sent over the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDescriptor {
    pub source_text: String,
    pub source_lang: LanguageCode,
    pub target_lang: LanguageCode,
    pub mode: ContextMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_variant: Option<String>,
    /// Forced target prefix; every prefix in the request starts with BOS followed by it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forced_prefix: Vec<TokenId>,
}

impl From<&ConditioningContext> for ContextDescriptor {
    fn from(c: &ConditioningContext) -> Self {
        Self {
            source_text: c.source_text.clone(),
            source_lang: c.source_lang.clone(),
            target_lang: c.target_lang.clone(),
            mode: c.mode,
            prompt_variant: c.prompt_variant.clone(),
            forced_prefix: c.forced_prefix.clone(),
        }
    }
}

impl TryFrom<ContextDescriptor> for ConditioningContext {
    type Error = Error;

    fn try_from(d: ContextDescriptor) -> Result<Self> {
        let mut ctx = ConditioningContext::new(d.source_text, d.source_lang, d.target_lang)?
            .with_mode(d.mode)
            .with_forced_prefix(d.forced_prefix);
        ctx.prompt_variant = d.prompt_variant;
        Ok(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(flatten)]
    pub body: ResponseBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseBody {
    Handshake(Handshake),
    Tokens { tokens: Vec<TokenId> },
    Text { text: String },
    Logprobs { logprobs: Vec<LogprobRow> },
    Error { error: ErrorPayload },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol_version: u32,
    pub vocab_size: usize,
    pub special: SpecialTokens,
    #[serde(default)]
    pub language_indicators: BTreeMap<LanguageCode, TokenId>,
    pub supports: Supports,
    pub max_context_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supports {
    pub language_indicators: bool,
    pub llm_prompting: bool,
}

impl From<&ScorerDescriptor> for Handshake {
    fn from(d: &ScorerDescriptor) -> Self {
        Self {
            protocol_version: PROTOCOL_VERSION,
            vocab_size: d.vocab.size,
            special: d.vocab.special,
            language_indicators: d.vocab.language_indicators.clone(),
            supports: Supports {
                language_indicators: d.supports_language_indicators,
                llm_prompting: d.supports_llm_prompting,
            },
            max_context_len: d.max_context_len,
        }
    }
}

impl Handshake {
    pub fn descriptor(&self) -> Result<ScorerDescriptor> {
        if self.vocab_size == 0 {
            return Err(Error::Protocol("handshake reports an empty vocabulary".into()));
        }
        let s = self.special;
        if let Some(&id) = [s.bos, s.eos, s.unk, s.pad].iter().find(|&&id| id as usize >= self.vocab_size) {
            return Err(Error::Protocol(format!("special token {id} outside vocabulary of {}", self.vocab_size)));
        }
        Ok(ScorerDescriptor {
            vocab: VocabInfo {
                size: self.vocab_size,
                special: self.special,
                language_indicators: self.language_indicators.clone(),
            },
            supports_language_indicators: self.supports.language_indicators,
            supports_llm_prompting: self.supports.llm_prompting,
            max_context_len: self.max_context_len,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
}

/// Next-token log-probabilities for one prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogprobRow {
    /// One entry per vocabulary id; `null` stands for negative infinity.
    Dense(Vec<Option<f64>>),
    /// The `top` entries by id, plus the probability mass of every other id,
    /// spread uniformly over them when densified.
    Sparse {
        #[serde(deserialize_with = "ids_as_keys")]
        top: BTreeMap<TokenId, f64>,
        other_mass: f64,
    },
}

/// JSON object keys are strings; parse them as token ids.
fn ids_as_keys<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<TokenId, f64>, D::Error> {
    let raw = BTreeMap::<String, f64>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.parse::<TokenId>()
                .map(|id| (id, v))
                .map_err(|_| serde::de::Error::custom(format!("token id key {k:?} is not an integer")))
        })
        .collect()
}

impl LogprobRow {
    pub fn dense(dist: &StepDistribution) -> Self {
        LogprobRow::Dense(dist.probs().iter().map(|&p| if p > 0.0 { Some(p.ln()) } else { None }).collect())
    }

    /// Keeps the `k` most likely ids (lower id first on ties).
    pub fn sparse(dist: &StepDistribution, k: usize) -> Self {
        let mut order: Vec<usize> = (0..dist.len()).filter(|&i| dist.probs()[i] > 0.0).collect();
        order.sort_by(|&a, &b| dist.probs()[b].total_cmp(&dist.probs()[a]).then(a.cmp(&b)));
        order.truncate(k);
        let kept: f64 = order.iter().map(|&i| dist.probs()[i]).sum();
        let top = order.into_iter().map(|i| (i as TokenId, dist.probs()[i].ln())).collect();
        LogprobRow::Sparse { top, other_mass: (1.0 - kept).max(0.0) }
    }

    /// Row for `dist` given a requested `top_k` (0 means dense).
    pub fn encode(dist: &StepDistribution, top_k: usize) -> Self {
        if top_k == 0 || top_k >= dist.len() {
            Self::dense(dist)
        } else {
            Self::sparse(dist, top_k)
        }
    }

    /// Converts to probabilities, checking sign, size and total mass.
    pub fn densify(&self, vocab_size: usize) -> Result<StepDistribution> {
        let check = |lp: f64| {
            if lp.is_nan() || lp > 1e-9 {
                Err(Error::Protocol(format!("invalid log-probability {lp}")))
            } else {
                Ok(lp.min(0.0).exp())
            }
        };
        let probs = match self {
            LogprobRow::Dense(row) => {
                if row.len() != vocab_size {
                    return Err(Error::VocabMismatch { expected: vocab_size, actual: row.len() });
                }
                row.iter().map(|lp| lp.map_or(Ok(0.0), check)).collect::<Result<Vec<_>>>()?
            }
            LogprobRow::Sparse { top, other_mass } => {
                if !(other_mass.is_finite() && *other_mass >= 0.0) {
                    return Err(Error::Protocol(format!("invalid other_mass {other_mass}")));
                }
                let mut probs = vec![0.0; vocab_size];
                for (&id, &lp) in top {
                    let slot = probs
                        .get_mut(id as usize)
                        .ok_or(Error::TokenOutOfRange { id, size: vocab_size })?;
                    *slot = check(lp)?;
                }
                let rest = vocab_size - top.len();
                if rest > 0 {
                    let share = other_mass / rest as f64;
                    for (i, p) in probs.iter_mut().enumerate() {
                        if !top.contains_key(&(i as TokenId)) {
                            *p = share;
                        }
                    }
                }
                probs
            }
        };
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Protocol(format!("row probabilities sum to {total}")));
        }
        if (total - 1.0).abs() > 1e-6 {
            return StepDistribution::normalized(probs);
        }
        StepDistribution::new(probs)
    }
}

/// Server's choice of `top_k` when a request leaves it out.
pub fn default_top_k(vocab_size: usize) -> usize {
    if vocab_size <= DENSE_VOCAB_LIMIT {
        0
    } else {
        DEFAULT_SPARSE_TOP_K
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lang(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    #[test]
    fn request_shapes() {
        let r = Request { id: 1, body: RequestBody::Handshake };
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"id":1,"kind":"handshake"}"#);
        let r = Request {
            id: 2,
            body: RequestBody::NextLogprobs {
                context: ContextDescriptor {
                    source_text: "x".into(),
                    source_lang: lang("de"),
                    target_lang: lang("en"),
                    mode: ContextMode::Mt,
                    prompt_variant: None,
                    forced_prefix: vec![],
                },
                prefixes: vec![vec![0]],
                top_k: None,
            },
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"id":2,"kind":"next_logprobs","context":{"source_text":"x","source_lang":"de","target_lang":"en","mode":"mt"},"prefixes":[[0]]}"#
        );
    }

    #[test]
    fn response_shapes() {
        let d = StepDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let r = Response { id: Some(3), body: ResponseBody::Logprobs { logprobs: vec![LogprobRow::dense(&d)] } };
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(line, r#"{"id":3,"logprobs":[[-0.6931471805599453,-0.6931471805599453,null]]}"#);
        assert_eq!(serde_json::from_str::<Response>(&line).unwrap(), r);
        let sparse = LogprobRow::sparse(&d, 1);
        assert_eq!(serde_json::to_string(&sparse).unwrap(), r#"{"top":{"0":-0.6931471805599453},"other_mass":0.5}"#);
    }

    #[test]
    fn sparse_densifies_uniformly() {
        let row = LogprobRow::Sparse { top: [(1, (0.6f64).ln())].into_iter().collect(), other_mass: 0.4 };
        let d = row.densify(5).unwrap();
        assert!((d.prob(1) - 0.6).abs() < 1e-12);
        assert!((d.prob(0) - 0.1).abs() < 1e-12);
        assert!(row.densify(1).is_err());
    }

    #[test]
    fn bad_rows_rejected() {
        assert!(LogprobRow::Dense(vec![Some(0.5), None]).densify(2).is_err());
        assert!(LogprobRow::Dense(vec![Some(-0.1), Some(-0.1)]).densify(2).is_err());
        assert!(LogprobRow::Dense(vec![Some(0.0)]).densify(2).is_err());
    }

    #[test]
    fn top_k_defaults() {
        assert_eq!(default_top_k(4096), 0);
        assert_eq!(default_top_k(4097), 256);
    }

    fn arb_dist() -> impl Strategy<Value = StepDistribution> {
        prop::collection::vec(0.0f64..1.0, 1..12).prop_filter_map("zero mass", |w| StepDistribution::normalized(w).ok())
    }

    proptest! {
        #[test]
        fn dense_round_trip(d in arb_dist()) {
            let row = LogprobRow::dense(&d);
            let line = serde_json::to_string(&row).unwrap();
            let back: LogprobRow = serde_json::from_str(&line).unwrap();
            prop_assert_eq!(&back, &row);
            let dd = back.densify(d.len()).unwrap();
            for (a, b) in dd.probs().iter().zip(d.probs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn sparse_keeps_mass(d in arb_dist(), k in 1usize..6) {
            let row = LogprobRow::sparse(&d, k);
            let dd = row.densify(d.len()).unwrap();
            prop_assert!((dd.probs().iter().sum::<f64>() - 1.0).abs() < 1e-6);
            prop_assert_eq!(dd.argmax(), d.argmax());
        }

        #[test]
        fn request_round_trip(id in 1u64..1_000_000, text in "[a-z ]{1,20}", prefixes in prop::collection::vec(prop::collection::vec(0u32..50, 0..5), 0..4), top_k in prop::option::of(0usize..300)) {
            let reqs = [
                Request { id, body: RequestBody::Tokenize { text: text.clone(), role: TextRole::Source } },
                Request { id, body: RequestBody::Detokenize { tokens: prefixes.concat() } },
                Request { id, body: RequestBody::NextLogprobs {
                    context: ContextDescriptor {
                        source_text: text.clone(),
                        source_lang: lang("af"),
                        target_lang: lang("zu"),
                        mode: ContextMode::Llm,
                        prompt_variant: Some("contrastive:en".into()),
                        forced_prefix: vec![7],
                    },
                    prefixes: prefixes.clone(),
                    top_k,
                } },
            ];
            for r in reqs {
                let line = serde_json::to_string(&r).unwrap();
                prop_assert_eq!(serde_json::from_str::<Request>(&line).unwrap(), r);
            }
        }
    }
}
