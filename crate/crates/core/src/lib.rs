//! Source- and language-contrastive beam search for conditional text
//! generation, plus the metrics used to measure hallucination and off-target
//! output in machine translation.
//!
//! A decode scores every candidate token as
//! `-ln(max(eps, p(y|X) - sum_j w_j * p(y|X'_j)))`, where the negatives `X'_j`
//! are the same prefix conditioned on a shuffled source segment or on a wrong
//! target language. Models are reached through the [`scoring::Scorer`] trait,
//! either in-process or over the newline-delimited JSON protocol in
//! [`protocol`].
//!
//! ```
//! use contrastive_decoding::prelude::*;
//!
//! let vocab = Vocabulary::with_default_specials(["hund", "katze"]).unwrap();
//! let mut table = TableScorer::new(vocab);
//! let en: LanguageCode = "en".parse().unwrap();
//! let de: LanguageCode = "de".parse().unwrap();
//! let ctx = ConditioningContext::new("dog", en, de).unwrap();
//! table.insert(&ctx, vec![0], StepDistribution::one_hot(6, 4)).unwrap();
//! table.insert(&ctx, vec![0, 4], StepDistribution::one_hot(6, 1)).unwrap();
//!
//! let objective = ContrastiveObjective::plain(ctx);
//! let best = &beam_search(&table, &objective, &DecodeParams::default()).unwrap()[0];
//! assert_eq!(table.detokenize(best.output_tokens()).unwrap(), "hund");
//! ```
//!
//! Runnable walkthroughs live in `examples/`.

pub mod app;
pub mod context;
pub mod contrast;
pub mod decoder;
pub mod error;
pub mod metrics;
pub mod protocol;
pub mod rng;
pub mod scoring;
pub mod vocab;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::context::{ConditioningContext, ContextMode, ContrastiveObjective, Document, Negative};
    pub use crate::decoder::{beam_search, exhaustive_decode, greedy_decode, DecodeParams, Hypothesis};
    pub use crate::error::{Error, Result};
    pub use crate::rng::Rng;
    pub use crate::scoring::{Scorer, StepDistribution, SyntheticConfig, SyntheticTranslator, TableScorer, TextRole};
    pub use crate::vocab::{LanguageCode, TokenId, Vocabulary};
}
