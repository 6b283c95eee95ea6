//! A four-word model where the most likely first token ignores the source.
//! Penalizing what a wrong source would also predict picks the faithful word.

use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let vocab = Vocabulary::with_default_specials(["hund", "das", "katze"])?;
    let (bos, eos) = (vocab.bos(), vocab.eos());
    let [hund, das, katze] = ["hund", "das", "katze"].map(|w| vocab.id_of(w).unwrap());
    let size = vocab.len();
    let mut model = TableScorer::new(vocab);

    let en: LanguageCode = "en".parse()?;
    let de: LanguageCode = "de".parse()?;
    let dog = ConditioningContext::new("dog", en.clone(), de.clone())?;
    let cat = ConditioningContext::new("cat", en, de)?;

    let mut first = vec![0.0; size];
    first[das as usize] = 0.5;
    first[hund as usize] = 0.4;
    first[eos as usize] = 0.1;
    model.insert(&dog, vec![bos], StepDistribution::new(first)?)?;
    model.insert(&dog, vec![bos, hund], StepDistribution::one_hot(size, eos))?;
    model.insert(&dog, vec![bos, das], StepDistribution::one_hot(size, eos))?;

    // The wrong source also likes "das".
    let mut other = vec![0.0; size];
    other[das as usize] = 0.6;
    other[katze as usize] = 0.4;
    model.insert(&cat, vec![bos], StepDistribution::new(other)?)?;

    let params = DecodeParams::default();
    let baseline = ContrastiveObjective::plain(dog.clone());
    let contrastive = ContrastiveObjective::new(dog, vec![Negative { context: cat, weight: 0.7 }])?;

    for (name, objective) in [("baseline", &baseline), ("contrastive", &contrastive)] {
        let best = &beam_search(&model, objective, &params)?[0];
        println!("{name:>11}: {:?} (score {:.4})", model.detokenize(best.output_tokens())?, best.score);
    }
    Ok(())
}
