//! A toy multilingual translator with controllable failure modes.
//!
//! Each language names a shared set of concepts with one or more word
//! variants. At every step the model mixes three sources of probability:
//!
//! * the faithful lexicon, translating the next uncovered source word
//!   (monotone one-to-one alignment), weight `1 - h - c`;
//! * a target-language bigram model that ignores the source, weight `h`;
//! * a verbatim copy of the next source word, weight `c`.
//!
//! After a step that is neither a translation nor a copy of the aligned source
//! word, the bigram weight rises to `max(h, persistence)`. The bigram model
//! cycles through a handful of attractor words, so detached output tends to
//! oscillate. A target language with `english_leak > 0` mixes English variants
//! into the faithful lexicon, and the mix becomes sticky once an English word
//! has been produced. Unknown target languages translate into English.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{check_prefix, Scorer, ScorerDescriptor, StepDistribution, TextRole, VocabInfo};
use crate::context::ConditioningContext;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::vocab::{LanguageCode, TokenId, Vocabulary};

const MAX_CONTEXT_LEN: usize = 512;
const ATTRACTORS: usize = 5;
/// Attractor successor table: self-loops on 0 and 4, and the cycle (1 2 3).
const CYCLE_NEXT: [usize; ATTRACTORS] = [0, 2, 3, 1, 4];
const ENTRY: [f64; ATTRACTORS] = [0.85, 0.05, 0.04, 0.03, 0.03];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageProfile {
    pub code: LanguageCode,
    /// Letters used for consonant slots of generated words.
    pub consonants: String,
    pub vowels: String,
    /// Fraction of concepts that get three near-equiprobable variants instead of two.
    #[serde(default)]
    pub ambiguity: f64,
    /// Weight of English variants in the faithful lexicon when this is the target.
    #[serde(default)]
    pub english_leak: f64,
}

impl LanguageProfile {
    pub fn new(code: &str, consonants: &str, vowels: &str, ambiguity: f64) -> Self {
        Self {
            code: LanguageCode::new(code).expect("static language code"),
            consonants: consonants.into(),
            vowels: vowels.into(),
            ambiguity,
            english_leak: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Seed for lexicon and language-model construction.
    pub seed: u64,
    pub concepts: usize,
    pub languages: Vec<LanguageProfile>,
    pub english: LanguageCode,
    /// Probability `h` of a step drawn from the source-blind bigram model.
    pub hallucination_rate: f64,
    /// Probability `c` of copying the next source word.
    pub copy_rate: f64,
    /// Bigram weight after a detached step (applied as `max(h, persistence)` when `h > 0`).
    pub persistence: f64,
    /// English share of the faithful lexicon right after an English word.
    pub english_stickiness: f64,
    /// Probability of staying on an attractor cycle.
    pub cycle_prob: f64,
    /// Bigram model emits no EOS before this many decoded tokens.
    pub lm_min_len: usize,
    pub lm_eos_prob: f64,
    pub min_segment_len: usize,
    pub max_segment_len: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 2023,
            concepts: 100,
            languages: vec![
                LanguageProfile::new("en", "tdnlsh", "ea", 0.0),
                LanguageProfile::new("de", "kgzbwc", "iu", 0.3),
                LanguageProfile::new("af", "vfjprs", "oe", 0.3),
                LanguageProfile::new("zu", "mqxbhl", "ao", 0.3),
                LanguageProfile::new("hr", "čšžrvt", "io", 0.3),
            ],
            english: LanguageCode::new("en").expect("static"),
            hallucination_rate: 0.0,
            copy_rate: 0.0,
            persistence: 0.9,
            english_stickiness: 0.6,
            cycle_prob: 0.8,
            lm_min_len: 10,
            lm_eos_prob: 0.3,
            min_segment_len: 4,
            max_segment_len: 12,
        }
    }
}

impl SyntheticConfig {
    pub fn with_hallucination_rate(mut self, h: f64) -> Self {
        self.hallucination_rate = h;
        self
    }

    pub fn with_copy_rate(mut self, c: f64) -> Self {
        self.copy_rate = c;
        self
    }

    /// Sets the English leak of one language's lexicon.
    pub fn with_english_leak(mut self, lang: &str, leak: f64) -> Self {
        for profile in &mut self.languages {
            if profile.code.as_str() == lang {
                profile.english_leak = leak;
            }
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let h = self.hallucination_rate;
        let c = self.copy_rate;
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("hallucination_rate", h)?;
        unit("copy_rate", c)?;
        unit("persistence", self.persistence)?;
        unit("english_stickiness", self.english_stickiness)?;
        unit("cycle_prob", self.cycle_prob)?;
        unit("lm_eos_prob", self.lm_eos_prob)?;
        if h + c > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("hallucination_rate + copy_rate = {} exceeds 1", h + c)));
        }
        for p in &self.languages {
            unit("ambiguity", p.ambiguity)?;
            unit("english_leak", p.english_leak)?;
            if p.consonants.is_empty() || p.vowels.is_empty() {
                return Err(Error::InvalidParameter(format!("language {} has an empty letter inventory", p.code)));
            }
        }
        if !self.languages.iter().any(|p| p.code == self.english) {
            return Err(Error::InvalidParameter(format!("english language {} has no profile", self.english)));
        }
        if self.min_segment_len == 0 || self.min_segment_len > self.max_segment_len {
            return Err(Error::InvalidParameter("segment length range is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SyntheticLanguage {
    code: LanguageCode,
    /// Per concept, word variants with choice probabilities, most likely first.
    variants: Vec<Vec<(TokenId, f64)>>,
    attractors: [TokenId; ATTRACTORS],
    english_leak: f64,
}

#[derive(Debug, Clone, Copy)]
enum WordKind {
    Content { lang: usize, concept: usize },
    Attractor { lang: usize },
}

/// Deterministic toy translator; see the module docs for the generative story.
#[derive(Debug, Clone)]
pub struct SyntheticTranslator {
    config: SyntheticConfig,
    vocab: Vocabulary,
    descriptor: ScorerDescriptor,
    languages: Vec<SyntheticLanguage>,
    by_code: BTreeMap<LanguageCode, usize>,
    english: usize,
    /// Indexed by token id; `None` for special tokens.
    kinds: Vec<Option<WordKind>>,
    concept_weights: Vec<f64>,
}

impl SyntheticTranslator {
    /// Language of every generated word, keyed by surface form.
    pub fn word_languages(&self) -> HashMap<String, LanguageCode> {
        let mut out = HashMap::new();
        for (id, kind) in self.kinds.iter().enumerate() {
            let lang = match kind {
                Some(WordKind::Content { lang, .. }) | Some(WordKind::Attractor { lang }) => *lang,
                None => continue,
            };
            out.insert(self.vocab.entries()[id].clone(), self.languages[lang].code.clone());
        }
        out
    }

    pub fn new(config: SyntheticConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let mut used: HashSet<String> = ["<s>", "</s>", "<unk>", "<pad>"].iter().map(|s| s.to_string()).collect();
        let mut words: Vec<String> = Vec::new();
        let mut kinds: Vec<Option<WordKind>> = vec![None; 4];
        let mut languages = Vec::with_capacity(config.languages.len());

        for (li, profile) in config.languages.iter().enumerate() {
            let mut lang_rng = rng.fork();
            let consonants: Vec<char> = profile.consonants.chars().collect();
            let vowels: Vec<char> = profile.vowels.chars().collect();
            let mut fresh = |rng: &mut Rng, syllables: usize| -> String {
                loop {
                    let mut w = String::new();
                    for _ in 0..syllables {
                        w.push(consonants[rng.below(consonants.len())]);
                        w.push(vowels[rng.below(vowels.len())]);
                    }
                    if rng.uniform() < 0.5 {
                        w.push(consonants[rng.below(consonants.len())]);
                    }
                    if used.insert(w.clone()) {
                        return w;
                    }
                }
            };

            let mut variants = Vec::with_capacity(config.concepts);
            for concept in 0..config.concepts {
                let probs = if lang_rng.uniform() < profile.ambiguity {
                    let p1 = 0.34 + 0.16 * lang_rng.uniform();
                    let p2 = 0.25 + (p1 - 0.25) * lang_rng.uniform();
                    let p3 = 1.0 - p1 - p2;
                    let mut ps = vec![p1, p2, p3];
                    ps.sort_by(|a, b| b.total_cmp(a));
                    ps
                } else {
                    let p1 = 0.75 + 0.17 * lang_rng.uniform();
                    vec![p1, 1.0 - p1]
                };
                let mut row = Vec::with_capacity(probs.len());
                for p in probs {
                    let syllables = lang_rng.range(2, 3);
                    let w = fresh(&mut lang_rng, syllables);
                    let id = (4 + words.len()) as TokenId;
                    words.push(w);
                    kinds.push(Some(WordKind::Content { lang: li, concept }));
                    row.push((id, p));
                }
                variants.push(row);
            }

            let mut attractors = [0; ATTRACTORS];
            for a in attractors.iter_mut() {
                let syllables = lang_rng.range(1, 2);
                let w = fresh(&mut lang_rng, syllables);
                *a = (4 + words.len()) as TokenId;
                words.push(w);
                kinds.push(Some(WordKind::Attractor { lang: li }));
            }

            languages.push(SyntheticLanguage {
                code: profile.code.clone(),
                variants,
                attractors,
                english_leak: profile.english_leak,
            });
        }

        let vocab = Vocabulary::with_default_specials(words)?;
        let by_code: BTreeMap<_, _> = languages.iter().enumerate().map(|(i, l)| (l.code.clone(), i)).collect();
        if by_code.len() != languages.len() {
            return Err(Error::InvalidParameter("duplicate language profile".into()));
        }
        let english = by_code[&config.english];
        let concept_weights = (0..config.concepts).map(|k| 1.0 / ((k + 1) as f64).powf(0.8)).collect();
        let descriptor = ScorerDescriptor {
            vocab: VocabInfo::from(&vocab),
            supports_language_indicators: true,
            supports_llm_prompting: false,
            max_context_len: MAX_CONTEXT_LEN,
        };
        Ok(Self { config, vocab, descriptor, languages, by_code, english, kinds, concept_weights })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn languages(&self) -> Vec<LanguageCode> {
        self.languages.iter().map(|l| l.code.clone()).collect()
    }

    pub fn supports(&self, lang: &LanguageCode) -> bool {
        self.by_code.contains_key(lang)
    }

    /// Word variants (most likely first) for translating `word` into `target`.
    pub fn translations(&self, word: TokenId, target: &LanguageCode) -> Option<&[(TokenId, f64)]> {
        let concept = self.concept_of(word)?;
        let lang = self.by_code.get(target)?;
        Some(&self.languages[*lang].variants[concept])
    }

    fn concept_of(&self, id: TokenId) -> Option<usize> {
        match self.kinds.get(id as usize).copied().flatten() {
            Some(WordKind::Content { concept, .. }) => Some(concept),
            _ => None,
        }
    }

    fn is_english_word(&self, id: TokenId) -> bool {
        matches!(self.kinds.get(id as usize).copied().flatten(), Some(WordKind::Content { lang, .. }) if lang == self.english)
    }

    /// Text of `n` words drawn from a language's lexicon and attractors, for
    /// training a language identifier.
    pub fn sample_text(&self, lang: &LanguageCode, n: usize, rng: &mut Rng) -> Result<String> {
        let li = *self.by_code.get(lang).ok_or_else(|| Error::InvalidLanguage(lang.to_string()))?;
        let language = &self.languages[li];
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let id = if rng.uniform() < 0.1 {
                language.attractors[rng.below(ATTRACTORS)]
            } else {
                let row = &language.variants[rng.below(language.variants.len().max(1))];
                row[rng.weighted_index(&row.iter().map(|v| v.1).collect::<Vec<_>>())].0
            };
            out.push(self.vocab.surface(id)?);
        }
        Ok(out.join(" "))
    }

    fn target_language(&self, code: &LanguageCode) -> &SyntheticLanguage {
        let idx = self.by_code.get(code).copied().unwrap_or(self.english);
        &self.languages[idx]
    }

    /// Bigram continuation over the target language's attractors.
    fn add_lm(&self, probs: &mut [f64], weight: f64, lang: &SyntheticLanguage, last: Option<TokenId>, decoded: usize) {
        if weight == 0.0 {
            return;
        }
        let eos = if decoded >= self.config.lm_min_len { self.config.lm_eos_prob } else { 0.0 };
        probs[self.vocab.eos() as usize] += weight * eos;
        let scale = weight * (1.0 - eos);
        let slot = last.and_then(|id| lang.attractors.iter().position(|&a| a == id));
        match slot {
            Some(slot) => {
                let stay = self.config.cycle_prob;
                let other = (1.0 - stay) / (ATTRACTORS - 1) as f64;
                for (s, &a) in lang.attractors.iter().enumerate() {
                    let p = if s == CYCLE_NEXT[slot] { stay } else { other };
                    probs[a as usize] += scale * p;
                }
            }
            None => {
                for (s, &a) in lang.attractors.iter().enumerate() {
                    probs[a as usize] += scale * ENTRY[s];
                }
            }
        }
    }

    /// Faithful lexicon for the source word at `position`.
    fn add_faithful(
        &self,
        probs: &mut [f64],
        weight: f64,
        lang: &SyntheticLanguage,
        source: &[TokenId],
        position: usize,
        english_mode: bool,
    ) {
        if weight == 0.0 {
            return;
        }
        let Some(&word) = source.get(position) else {
            probs[self.vocab.eos() as usize] += weight;
            return;
        };
        let Some(concept) = self.concept_of(word) else {
            probs[word as usize] += weight;
            return;
        };
        let english = &self.languages[self.english];
        let leak = if lang.code == english.code {
            0.0
        } else if english_mode {
            self.config.english_stickiness
        } else {
            lang.english_leak
        };
        for &(id, p) in &lang.variants[concept] {
            probs[id as usize] += weight * (1.0 - leak) * p;
        }
        if leak > 0.0 {
            for &(id, p) in &english.variants[concept] {
                probs[id as usize] += weight * leak * p;
            }
        }
    }

    fn add_copy(&self, probs: &mut [f64], weight: f64, source: &[TokenId], position: usize) {
        if weight == 0.0 {
            return;
        }
        let id = source.get(position).copied().unwrap_or(self.vocab.eos());
        probs[id as usize] += weight;
    }

    /// Whether `emitted` renders the source word at `position` (any variant in
    /// any language, or a verbatim copy).
    fn is_faithful(&self, emitted: TokenId, source: &[TokenId], position: usize) -> bool {
        match source.get(position) {
            None => false,
            Some(&word) if word == emitted => true,
            Some(&word) => match (self.concept_of(word), self.concept_of(emitted)) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }
}

impl Scorer for SyntheticTranslator {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution> {
        check_prefix(&self.descriptor, prefix)?;
        let mut decoded = prefix;
        if decoded.first() == Some(&self.vocab.bos()) {
            decoded = &decoded[1..];
        }
        if decoded.starts_with(&ctx.forced_prefix) {
            decoded = &decoded[ctx.forced_prefix.len()..];
        }

        let source = self.vocab.tokenize(&ctx.source_text);
        let lang = self.target_language(&ctx.target_lang);
        let j = decoded.len();
        let last = decoded.last().copied();

        let detached = match last {
            Some(id) => !self.is_faithful(id, &source, j - 1),
            None => false,
        };
        let english_mode = last.is_some_and(|id| self.is_english_word(id));

        let h = self.config.hallucination_rate;
        let c = self.config.copy_rate;
        let (w_faithful, w_lm, w_copy) = if detached && h > 0.0 {
            let lm = h.max(self.config.persistence);
            let rest = 1.0 - lm;
            if h < 1.0 {
                (rest * (1.0 - h - c) / (1.0 - h), lm, rest * c / (1.0 - h))
            } else {
                (0.0, lm, 0.0)
            }
        } else {
            ((1.0 - h - c).max(0.0), h, c)
        };

        let mut probs = vec![0.0; self.vocab.len()];
        self.add_faithful(&mut probs, w_faithful, lang, &source, j, english_mode);
        self.add_lm(&mut probs, w_lm, lang, last, j);
        self.add_copy(&mut probs, w_copy, &source, j);
        StepDistribution::new(probs)
    }

    fn tokenize(&self, text: &str, _role: TextRole) -> Result<Vec<TokenId>> {
        Ok(self.vocab.tokenize(text))
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        self.vocab.detokenize(tokens)
    }
}

/// `n` (source, reference) pairs in the given direction. Sources draw concepts
/// from a Zipf-like distribution; references use the most likely variant of
/// each concept.
pub fn synthetic_corpus(
    generator: &SyntheticTranslator,
    source: &LanguageCode,
    target: &LanguageCode,
    n: usize,
    seed: u64,
) -> Result<Vec<(String, String)>> {
    if generator.config.concepts == 0 {
        return Err(Error::Data("synthetic lexicon is empty".into()));
    }
    let src = *generator
        .by_code
        .get(source)
        .ok_or_else(|| Error::InvalidLanguage(source.to_string()))?;
    let tgt = generator.target_language(target);
    let src = &generator.languages[src];
    let mut rng = Rng::new(seed);
    let cfg = &generator.config;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.range(cfg.min_segment_len, cfg.max_segment_len);
        let mut s = Vec::with_capacity(len);
        let mut r = Vec::with_capacity(len);
        for _ in 0..len {
            let k = rng.weighted_index(&generator.concept_weights);
            s.push(generator.vocab.surface(src.variants[k][0].0)?);
            r.push(generator.vocab.surface(tgt.variants[k][0].0)?);
        }
        out.push((s.join(" "), r.join(" ")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    fn translator(h: f64) -> SyntheticTranslator {
        SyntheticTranslator::new(SyntheticConfig::default().with_hallucination_rate(h)).unwrap()
    }

    fn first_segment(t: &SyntheticTranslator, seed: u64) -> (String, String) {
        synthetic_corpus(t, &lang("af"), &lang("zu"), 1, seed).unwrap().remove(0)
    }

    #[test]
    fn corpus_is_deterministic() {
        let t = translator(0.0);
        let a = synthetic_corpus(&t, &lang("af"), &lang("zu"), 2, 7).unwrap();
        let b = synthetic_corpus(&t, &lang("af"), &lang("zu"), 2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(synthetic_corpus(&t, &lang("af"), &lang("zu"), 0, 7).unwrap().is_empty());
    }

    #[test]
    fn empty_lexicon_is_an_error() {
        let cfg = SyntheticConfig { concepts: 0, ..SyntheticConfig::default() };
        let t = SyntheticTranslator::new(cfg).unwrap();
        assert!(synthetic_corpus(&t, &lang("af"), &lang("zu"), 1, 0).is_err());
    }

    #[test]
    fn rejects_rates_above_one() {
        let cfg = SyntheticConfig::default().with_hallucination_rate(0.8).with_copy_rate(0.3);
        assert!(SyntheticTranslator::new(cfg).is_err());
    }

    #[test]
    fn references_use_most_likely_variant() {
        let t = translator(0.0);
        let (src, reference) = first_segment(&t, 3);
        let expected: Vec<&str> = t
            .vocabulary()
            .tokenize(&src)
            .into_iter()
            .map(|w| t.vocabulary().surface(t.translations(w, &lang("zu")).unwrap()[0].0).unwrap())
            .collect();
        assert_eq!(reference, expected.join(" "));
    }

    #[test]
    fn no_hallucination_is_pure_lexicon() {
        let t = translator(0.0);
        let (src, _) = first_segment(&t, 11);
        let ctx = ConditioningContext::new(src.clone(), lang("af"), lang("zu")).unwrap();
        let d = t.next_distribution(&ctx, &[t.vocabulary().bos()]).unwrap();
        let first = t.vocabulary().tokenize(&src)[0];
        let variants = t.translations(first, &lang("zu")).unwrap();
        let mut expected = vec![0.0; t.vocabulary().len()];
        for &(id, p) in variants {
            expected[id as usize] = p;
        }
        assert_eq!(d.probs(), expected.as_slice());
    }

    #[test]
    fn full_hallucination_ignores_source() {
        let t = translator(1.0);
        let (a, _) = first_segment(&t, 1);
        let (b, _) = first_segment(&t, 2);
        assert_ne!(a, b);
        let ca = ConditioningContext::new(a, lang("af"), lang("zu")).unwrap();
        let cb = ConditioningContext::new(b, lang("af"), lang("zu")).unwrap();
        let bos = t.vocabulary().bos();
        let some_word = t.vocabulary().tokenize(&ca.source_text)[0];
        for prefix in [vec![bos], vec![bos, some_word], vec![bos, some_word, some_word]] {
            assert_eq!(t.next_distribution(&ca, &prefix).unwrap(), t.next_distribution(&cb, &prefix).unwrap());
        }
    }

    #[test]
    fn unsupported_target_falls_back_to_english() {
        let t = translator(0.0);
        let (src, _) = first_segment(&t, 5);
        let ctx = ConditioningContext::new(src.clone(), lang("af"), lang("xx")).unwrap();
        let en = ctx.with_target(lang("en"));
        let bos = [t.vocabulary().bos()];
        assert_eq!(t.next_distribution(&ctx, &bos).unwrap(), t.next_distribution(&en, &bos).unwrap());
    }

    #[test]
    fn distributions_sum_to_one_everywhere() {
        let cfg = SyntheticConfig::default()
            .with_hallucination_rate(0.3)
            .with_copy_rate(0.1)
            .with_english_leak("zu", 0.3);
        let t = SyntheticTranslator::new(cfg).unwrap();
        let corpus = synthetic_corpus(&t, &lang("af"), &lang("zu"), 20, 9).unwrap();
        let mut rng = Rng::new(4);
        let v = t.vocabulary().len();
        for (src, _) in corpus {
            let ctx = ConditioningContext::new(src, lang("af"), lang("zu")).unwrap();
            let mut prefix = vec![t.vocabulary().bos()];
            for _ in 0..15 {
                let d = t.next_distribution(&ctx, &prefix).unwrap();
                let sum: f64 = d.probs().iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
                prefix.push(4 + rng.below(v - 4) as TokenId);
            }
        }
    }

    #[test]
    fn word_language_index_covers_vocab() {
        let t = translator(0.0);
        let index = t.word_languages();
        assert_eq!(index.len(), t.vocabulary().len() - 4);
    }
}
