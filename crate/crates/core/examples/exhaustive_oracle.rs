//! Beam search with a beam at least as wide as the search space agrees with
//! brute-force minimization of the contrastive score.

use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let vocab = Vocabulary::with_default_specials(["a", "b"])?;
    let size = vocab.len();
    let mut rng = Rng::new(7);
    let (de, en): (LanguageCode, LanguageCode) = ("de".parse()?, "en".parse()?);
    let pos = ConditioningContext::new("x", de.clone(), en.clone())?;
    let neg = ConditioningContext::new("y", de, en)?;
    let mut model = TableScorer::new(vocab);
    let max_len = 3;

    // Random distributions for every prefix up to the length limit.
    let mut frontier = vec![vec![0]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in frontier {
            for ctx in [&pos, &neg] {
                let weights: Vec<f64> = (0..size).map(|i| if i == 0 { 0.0 } else { rng.uniform() }).collect();
                model.insert(ctx, prefix.clone(), StepDistribution::normalized(weights)?)?;
            }
            for t in 2..size as TokenId {
                let mut p = prefix.clone();
                p.push(t);
                next.push(p);
            }
        }
        frontier = next;
    }

    let objective = ContrastiveObjective::new(pos, vec![Negative { context: neg, weight: 0.3 }])?;
    let params = DecodeParams::default().with_beam_size(size.pow(max_len as u32)).with_max_len(max_len);
    let beam = beam_search(&model, &objective, &params)?.remove(0);
    let exact = exhaustive_decode(&model, &objective, max_len, params.clamp_floor)?;
    println!("beam:       {:?} score {:.6}", beam.decoded(), beam.score);
    println!("exhaustive: {:?} score {:.6}", exact.decoded(), exact.score);
    assert_eq!(beam.tokens, exact.tokens);
    Ok(())
}
