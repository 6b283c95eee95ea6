//! Shared generators and reference implementations for integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use contrastive_decoding::contrast::{build_objective, ContrastConfig};
use contrastive_decoding::prelude::*;
use contrastive_decoding::vocab::SpecialTokens;

pub const BOS: TokenId = 0;
pub const EOS: TokenId = 1;
pub const FLOOR: f64 = 1e-12;

pub fn lang(s: &str) -> LanguageCode {
    s.parse().unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `<s> </s> <unk> w3 w4 ...` with `size` entries in total (at least 3).
pub fn small_vocab(size: usize) -> Vocabulary {
    let mut entries: Vec<String> = ["<s>", "</s>", "<unk>"].iter().map(|s| s.to_string()).collect();
    entries.extend((3..size).map(|i| format!("w{i}")));
    Vocabulary::new(entries, SpecialTokens { bos: 0, eos: 1, unk: 2, pad: 2 }, BTreeMap::new()).unwrap()
}

/// Probabilities of length `n`, each at least `min_prob` before normalization.
pub fn random_probs(rng: &mut Rng, n: usize, min_prob: f64) -> StepDistribution {
    let w: Vec<f64> = (0..n).map(|_| min_prob + rng.uniform()).collect();
    StepDistribution::normalized(w).unwrap()
}

pub struct Instance {
    pub scorer: TableScorer,
    pub positive: ConditioningContext,
    pub objective: ContrastiveObjective,
    pub max_len: usize,
}

/// A table scorer with its own random distribution for every context of an
/// af->zu objective and every prefix the decoder can reach within `max_len`.
pub fn random_instance(
    rng: &mut Rng,
    vocab_size: usize,
    max_len: usize,
    lambda_src: f64,
    lambda_lang: f64,
    min_prob: f64,
) -> Instance {
    let positive = ConditioningContext::new("x", lang("af"), lang("zu")).unwrap();
    let config = ContrastConfig::baseline().with_lambda_src(lambda_src).with_lambda_lang(lambda_lang);
    let sources = if lambda_src > 0.0 { vec!["y".to_string()] } else { vec![] };
    let objective = build_objective(&positive, &sources, &config).unwrap();
    let mut contexts = vec![positive.clone()];
    contexts.push(positive.with_source("y").unwrap());
    contexts.push(positive.with_target(lang("en")));
    contexts.push(positive.with_target(lang("af")));

    let mut scorer = TableScorer::new(small_vocab(vocab_size));
    let mut frontier = vec![vec![BOS]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in frontier {
            for ctx in &contexts {
                scorer.insert(ctx, prefix.clone(), random_probs(rng, vocab_size, min_prob)).unwrap();
            }
            for t in 0..vocab_size as TokenId {
                if t != EOS {
                    let mut p = prefix.clone();
                    p.push(t);
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    Instance { scorer, positive, objective, max_len }
}

/// Textbook beam search on `sum -ln p` under a single context. Hypotheses
/// that emit EOS leave the beam and take one of its slots; at the last step
/// only EOS may follow. Ties go to the smaller token sequence.
pub fn reference_beam(scorer: &dyn Scorer, ctx: &ConditioningContext, beam: usize, max_len: usize) -> Vec<TokenId> {
    let mut alive: Vec<(f64, Vec<TokenId>)> = vec![(0.0, Vec::new())];
    let mut done: Vec<(f64, Vec<TokenId>)> = Vec::new();
    for step in 0..max_len {
        let mut pool = Vec::new();
        for (score, seq) in &alive {
            let mut prefix = vec![BOS];
            prefix.extend(seq);
            let dist = scorer.next_distribution(ctx, &prefix).unwrap();
            let allowed: Vec<TokenId> =
                if step + 1 == max_len { vec![EOS] } else { (0..dist.len() as TokenId).collect() };
            for t in allowed {
                let mut s = seq.clone();
                s.push(t);
                pool.push((score - dist.prob(t).ln(), s));
            }
        }
        pool.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        pool.truncate(beam - done.len());
        alive.clear();
        for (score, seq) in pool {
            if seq.last() == Some(&EOS) {
                done.push((score, seq));
            } else {
                alive.push((score, seq));
            }
        }
        if alive.is_empty() || done.len() >= beam {
            break;
        }
    }
    done.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    done.swap_remove(0).1
}

/// Contrastive score of one full sequence, computed term by term.
pub fn reference_score(scorer: &dyn Scorer, objective: &ContrastiveObjective, seq: &[TokenId]) -> f64 {
    let mut total = 0.0;
    for i in 0..seq.len() {
        let mut prefix = vec![BOS];
        prefix.extend(objective.forced_prefix());
        prefix.extend(&seq[..i]);
        let t = seq[i];
        let mut p = scorer.next_distribution(objective.positive(), &prefix).unwrap().prob(t);
        for neg in objective.negatives() {
            p -= neg.weight * scorer.next_distribution(&neg.context, &prefix).unwrap().prob(t);
        }
        total += -(p.max(FLOOR)).ln();
    }
    total
}

/// Every EOS-terminated sequence of at most `max_len` tokens.
pub fn all_sequences(vocab_size: usize, max_len: usize) -> Vec<Vec<TokenId>> {
    let mut out = Vec::new();
    let mut open = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &open {
            let mut done: Vec<TokenId> = seq.clone();
            done.push(EOS);
            out.push(done);
            for t in 0..vocab_size as TokenId {
                if t != EOS {
                    let mut s = seq.clone();
                    s.push(t);
                    next.push(s);
                }
            }
        }
        open = next;
    }
    out
}

/// Brute-force argmin of the contrastive score; ties go to the smaller sequence.
pub fn reference_argmin(scorer: &dyn Scorer, objective: &ContrastiveObjective, vocab_size: usize, max_len: usize) -> (Vec<TokenId>, f64) {
    all_sequences(vocab_size, max_len)
        .into_iter()
        .map(|s| (reference_score(scorer, objective, &s), s))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .map(|(score, seq)| (seq, score))
        .unwrap()
}

/// chrF with averaged precision and recall over character orders 1..=6,
/// whitespace removed, beta = 2.
pub fn reference_chrf(hyp: &str, reference: &str) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() && r.is_empty() {
        return 100.0;
    }
    let grams = |s: &[char], n: usize| {
        let mut m: BTreeMap<Vec<char>, i64> = BTreeMap::new();
        for w in s.windows(n) {
            *m.entry(w.to_vec()).or_default() += 1;
        }
        m
    };
    let (mut psum, mut rsum, mut orders) = (0.0, 0.0, 0.0);
    for n in 1..=6 {
        let (hg, rg) = (grams(&h, n), grams(&r, n));
        let hn: i64 = hg.values().sum();
        let rn: i64 = rg.values().sum();
        if hn == 0 || rn == 0 {
            continue;
        }
        let m: i64 = hg.iter().map(|(g, c)| (*c).min(*rg.get(g).unwrap_or(&0))).sum();
        psum += m as f64 / hn as f64;
        rsum += m as f64 / rn as f64;
        orders += 1.0;
    }
    if orders == 0.0 {
        return 0.0;
    }
    let (p, r) = (psum / orders, rsum / orders);
    if p + r == 0.0 {
        return 0.0;
    }
    100.0 * 5.0 * p * r / (4.0 * p + r)
}
