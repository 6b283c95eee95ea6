//! Prompt-based decoding with a custom scorer. Contexts in `llm` mode carry a
//! prompt variant instead of language tokens; the contrastive variant asks
//! for English, which pushes English words out of the answer. The assistant
//! preamble is a forced prefix and a newline token ends the answer.

use contrastive_decoding::contrast::{build_objective, ContrastConfig};
use contrastive_decoding::scoring::{ScorerDescriptor, VocabInfo};
use contrastive_decoding::prelude::*;

struct ToyChat {
    vocab: Vocabulary,
    descriptor: ScorerDescriptor,
}

impl ToyChat {
    fn new() -> Result<Self> {
        let vocab = Vocabulary::with_default_specials(["Translation:", "<nl>", "dog", "inja"])?;
        let descriptor = ScorerDescriptor {
            vocab: VocabInfo::from(&vocab),
            supports_language_indicators: false,
            supports_llm_prompting: true,
            max_context_len: 64,
        };
        Ok(Self { vocab, descriptor })
    }

    fn id(&self, w: &str) -> TokenId {
        self.vocab.id_of(w).expect("known word")
    }
}

impl Scorer for ToyChat {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution> {
        let mut p = vec![0.0; self.vocab.len()];
        if prefix.last() == Some(&self.id("Translation:")) {
            let wants_english = ctx.prompt_variant.as_deref() == Some("contrastive:en");
            let (dog, inja) = if wants_english { (0.9, 0.05) } else { (0.45, 0.4) };
            p[self.id("dog") as usize] = dog;
            p[self.id("inja") as usize] = inja;
            p[self.vocab.eos() as usize] = 1.0 - dog - inja;
        } else {
            p[self.id("<nl>") as usize] = 0.9;
            p[self.vocab.eos() as usize] = 0.1;
        }
        StepDistribution::new(p)
    }

    fn tokenize(&self, text: &str, _role: TextRole) -> Result<Vec<TokenId>> {
        Ok(self.vocab.tokenize(text))
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        self.vocab.detokenize(tokens)
    }
}

fn main() -> Result<()> {
    let model = ToyChat::new()?;
    let ctx = ConditioningContext::new("dog", "en".parse()?, "zu".parse()?)?
        .with_mode(ContextMode::Llm)
        .with_forced_prefix(vec![model.id("Translation:")]);
    let params = DecodeParams::default().with_stop_token(model.id("<nl>"));

    for lambda_lang in [0.0, 0.5] {
        let config = ContrastConfig::baseline().with_lambda_lang(lambda_lang);
        let objective = build_objective(&ctx, &[], &config)?;
        let variants: Vec<_> = objective.contexts().map(|c| c.prompt_variant.clone().unwrap_or_default()).collect();
        let best = greedy_decode(&model, &objective, &params)?;
        println!(
            "lambda_lang={lambda_lang}: prompts {variants:?} -> {:?}",
            model.detokenize(best.output_tokens())?
        );
    }
    Ok(())
}
