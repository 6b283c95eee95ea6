//! Contrastive beam search.
//!
//! A hypothesis `Y` is scored as
//!
//! ```text
//! s(Y, X) = sum_i -log( max(eps, p(y_i | y_<i, X) - sum_j w_j * p(y_i | y_<i, X'_j)) )
//! ```
//!
//! where `X` is the positive context and each `X'_j` is a contrastive context
//! (another source segment, or the same source with another target language).
//! Every context is queried with the same prefix `y_<i`. With no negatives the
//! score is the usual negative log-likelihood. Lower is better.
//!
//! Search bookkeeping:
//! * candidates are ranked by score, then by token sequence (lower ids first);
//! * hypotheses ending in EOS (or the configured stop token) retire and keep
//!   their beam slot, so at most `beam_size - finished` hypotheses stay active;
//! * at the last allowed step (`max_len` decoded tokens) EOS is the only
//!   extension; it is scored like any other token and the hypothesis is
//!   flagged `truncated`. Every returned hypothesis therefore ends in a
//!   terminal token.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::context::ContrastiveObjective;
use crate::error::{Error, Result};
use crate::scoring::{Scorer, StepDistribution};
use crate::vocab::TokenId;

pub const DEFAULT_CLAMP_FLOOR: f64 = 1e-12;
/// Upper bound on the number of sequences [`exhaustive_decode`] will enumerate.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeParams {
    pub beam_size: usize,
    /// Maximum number of decoded tokens after the forced prefix, EOS included.
    pub max_len: usize,
    /// Floor applied to the contrastive difference before taking the log.
    pub clamp_floor: f64,
    /// Rank finished hypotheses by score per decoded token.
    pub length_normalization: bool,
    /// Extra terminal token, e.g. a newline in prompt-based decoding.
    pub stop_token: Option<TokenId>,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            beam_size: 5,
            max_len: 128,
            clamp_floor: DEFAULT_CLAMP_FLOOR,
            length_normalization: false,
            stop_token: None,
        }
    }
}

impl DecodeParams {
    pub fn with_beam_size(mut self, beam_size: usize) -> Self {
        self.beam_size = beam_size;
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn with_stop_token(mut self, stop: TokenId) -> Self {
        self.stop_token = Some(stop);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::InvalidParameter("beam_size must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::InvalidParameter("max_len must be at least 1".into()));
        }
        if !(self.clamp_floor.is_finite() && self.clamp_floor > 0.0) {
            return Err(Error::InvalidParameter(format!("clamp_floor must be positive, got {}", self.clamp_floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Forced prefix followed by decoded tokens (terminal token included).
    pub tokens: Vec<TokenId>,
    pub forced_len: usize,
    pub score: f64,
    pub finished: bool,
    pub truncated: bool,
}

impl Hypothesis {
    fn root(forced: &[TokenId]) -> Self {
        Self { tokens: forced.to_vec(), forced_len: forced.len(), score: 0.0, finished: false, truncated: false }
    }

    /// Tokens produced by search, excluding the forced prefix.
    pub fn decoded(&self) -> &[TokenId] {
        &self.tokens[self.forced_len..]
    }

    /// Decoded tokens without the terminal EOS or stop token.
    pub fn output_tokens(&self) -> &[TokenId] {
        let decoded = self.decoded();
        if self.finished && !decoded.is_empty() {
            &decoded[..decoded.len() - 1]
        } else {
            decoded
        }
    }

    fn ranking_score(&self, length_normalization: bool) -> f64 {
        if length_normalization {
            self.score / self.decoded().len().max(1) as f64
        } else {
            self.score
        }
    }
}

/// Per-token scores for one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScore {
    scores: Vec<f64>,
}

impl StepScore {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn get(&self, id: TokenId) -> f64 {
        self.scores[id as usize]
    }
}

/// `-ln(max(eps, p_pos - sum_j w_j * p_neg_j))` for every token.
pub fn combine_step(
    positive: &StepDistribution,
    negatives: &[(f64, &StepDistribution)],
    clamp_floor: f64,
) -> Result<StepScore> {
    let n = positive.len();
    for (weight, dist) in negatives {
        if dist.len() != n {
            return Err(Error::VocabMismatch { expected: n, actual: dist.len() });
        }
        if !(weight.is_finite() && *weight >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative weight {weight}")));
        }
    }
    let scores = (0..n)
        .map(|t| {
            let penalty: f64 = negatives.iter().map(|(w, d)| w * d.probs()[t]).sum();
            -(positive.probs()[t] - penalty).max(clamp_floor).ln()
        })
        .collect();
    Ok(StepScore { scores })
}

/// Ranks hypotheses by score, then by token sequence.
fn rank(a: &Hypothesis, b: &Hypothesis, length_normalization: bool) -> Ordering {
    a.ranking_score(length_normalization)
        .total_cmp(&b.ranking_score(length_normalization))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

struct Candidate {
    parent: usize,
    token: TokenId,
    score: f64,
    truncated: bool,
}

/// Contrastive beam search. Returns at most `beam_size` finished hypotheses,
/// best first.
pub fn beam_search<S: Scorer + ?Sized>(
    scorer: &S,
    objective: &ContrastiveObjective,
    params: &DecodeParams,
) -> Result<Vec<Hypothesis>> {
    params.validate()?;
    let descriptor = scorer.descriptor();
    let vocab = &descriptor.vocab;
    let eos = vocab.special.eos;
    let forced = objective.forced_prefix();
    if forced.contains(&eos) {
        return Err(Error::InvalidContext("forced prefix contains EOS".into()));
    }
    if let Some(&id) = forced.iter().find(|&&id| id as usize >= vocab.size) {
        return Err(Error::TokenOutOfRange { id, size: vocab.size });
    }

    let contexts: Vec<_> = objective.contexts().collect();
    let weights = objective.weights();
    let is_terminal = |t: TokenId| t == eos || params.stop_token == Some(t);

    let mut active = vec![Hypothesis::root(forced)];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for step in 0..params.max_len {
        let last_step = step + 1 == params.max_len;
        let prefixes: Vec<Vec<TokenId>> = active
            .iter()
            .map(|h| {
                let mut p = Vec::with_capacity(h.tokens.len() + 1);
                p.push(vocab.special.bos);
                p.extend_from_slice(&h.tokens);
                p
            })
            .collect();
        let items: Vec<_> = prefixes
            .iter()
            .flat_map(|p| contexts.iter().map(move |&c| (c, p.as_slice())))
            .collect();
        let dists = scorer.batch_next_distributions(&items)?;

        let mut candidates = Vec::with_capacity(active.len() * vocab.size);
        for (hi, hyp) in active.iter().enumerate() {
            let group = &dists[hi * contexts.len()..(hi + 1) * contexts.len()];
            let negatives: Vec<_> = weights.iter().copied().zip(&group[1..]).collect();
            let step_score = combine_step(&group[0], &negatives, params.clamp_floor)?;
            if step_score.scores.len() != vocab.size {
                return Err(Error::VocabMismatch { expected: vocab.size, actual: step_score.scores.len() });
            }
            if last_step {
                candidates.push(Candidate { parent: hi, token: eos, score: hyp.score + step_score.get(eos), truncated: true });
                continue;
            }
            for (t, &s) in step_score.scores.iter().enumerate() {
                candidates.push(Candidate { parent: hi, token: t as TokenId, score: hyp.score + s, truncated: false });
            }
        }

        let capacity = params.beam_size - finished.len();
        let order = |a: &Candidate, b: &Candidate| {
            a.score
                .total_cmp(&b.score)
                .then_with(|| active[a.parent].tokens.cmp(&active[b.parent].tokens))
                .then_with(|| a.token.cmp(&b.token))
        };
        if candidates.len() > capacity {
            candidates.select_nth_unstable_by(capacity - 1, order);
            candidates.truncate(capacity);
        }
        candidates.sort_by(order);

        let mut next = Vec::with_capacity(capacity);
        for cand in candidates {
            let parent = &active[cand.parent];
            let mut tokens = Vec::with_capacity(parent.tokens.len() + 1);
            tokens.extend_from_slice(&parent.tokens);
            tokens.push(cand.token);
            let hyp = Hypothesis {
                tokens,
                forced_len: parent.forced_len,
                score: cand.score,
                finished: cand.truncated || is_terminal(cand.token),
                truncated: cand.truncated,
            };
            if hyp.finished {
                finished.push(hyp);
            } else {
                next.push(hyp);
            }
        }
        active = next;
        if active.is_empty() || finished.len() >= params.beam_size {
            break;
        }
    }

    finished.sort_by(|a, b| rank(a, b, params.length_normalization));
    finished.truncate(params.beam_size);
    Ok(finished)
}

/// Beam search with a single beam; returns the one hypothesis.
pub fn greedy_decode<S: Scorer + ?Sized>(
    scorer: &S,
    objective: &ContrastiveObjective,
    params: &DecodeParams,
) -> Result<Hypothesis> {
    let params = DecodeParams { beam_size: 1, ..params.clone() };
    beam_search(scorer, objective, &params)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Data("decoder produced no hypothesis".into()))
}

/// Exact minimizer of the contrastive score over every EOS-terminated
/// sequence of at most `max_len` decoded tokens, found by depth-first
/// enumeration with bound pruning. Ties go to the lexicographically smaller
/// sequence.
pub fn exhaustive_decode<S: Scorer + ?Sized>(
    scorer: &S,
    objective: &ContrastiveObjective,
    max_len: usize,
    clamp_floor: f64,
) -> Result<Hypothesis> {
    let vocab = &scorer.descriptor().vocab;
    let size = (vocab.size as f64).powi(max_len as i32);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpaceTooLarge { size, limit: EXHAUSTIVE_LIMIT });
    }
    if max_len == 0 {
        return Err(Error::InvalidParameter("max_len must be at least 1".into()));
    }
    let forced = objective.forced_prefix().to_vec();
    let mut search = Exhaustive {
        scorer,
        objective,
        clamp_floor,
        eos: vocab.special.eos,
        bos: vocab.special.bos,
        max_len,
        forced_len: forced.len(),
        best: None,
    };
    let mut tokens = forced;
    search.descend(&mut tokens, 0.0, 0)?;
    search.best.ok_or_else(|| Error::Data("no EOS-terminated sequence has a finite score".into()))
}

struct Exhaustive<'a, S: ?Sized> {
    scorer: &'a S,
    objective: &'a ContrastiveObjective,
    clamp_floor: f64,
    eos: TokenId,
    bos: TokenId,
    max_len: usize,
    forced_len: usize,
    best: Option<Hypothesis>,
}

impl<S: Scorer + ?Sized> Exhaustive<'_, S> {
    fn descend(&mut self, tokens: &mut Vec<TokenId>, score: f64, depth: usize) -> Result<()> {
        if depth == self.max_len {
            return Ok(());
        }
        if let Some(best) = &self.best {
            if score > best.score {
                return Ok(());
            }
        }
        let mut prefix = Vec::with_capacity(tokens.len() + 1);
        prefix.push(self.bos);
        prefix.extend_from_slice(tokens);
        let positive = self.scorer.next_distribution(self.objective.positive(), &prefix)?;
        let negatives = self
            .objective
            .negatives()
            .iter()
            .map(|n| Ok((n.weight, self.scorer.next_distribution(&n.context, &prefix)?)))
            .collect::<Result<Vec<_>>>()?;

        for t in 0..positive.len() {
            let mut penalty = 0.0;
            for (w, d) in &negatives {
                penalty += w * d.probs()[t];
            }
            let term = -(positive.probs()[t] - penalty).max(self.clamp_floor).ln();
            let total = score + term;
            tokens.push(t as TokenId);
            if t as TokenId == self.eos {
                let candidate = Hypothesis {
                    tokens: tokens.clone(),
                    forced_len: self.forced_len,
                    score: total,
                    finished: true,
                    truncated: false,
                };
                let better = match &self.best {
                    None => true,
                    Some(b) => rank(&candidate, b, false) == Ordering::Less,
                };
                if better {
                    self.best = Some(candidate);
                }
            } else {
                self.descend(tokens, total, depth + 1)?;
            }
            tokens.pop();
        }
        Ok(())
    }
}
