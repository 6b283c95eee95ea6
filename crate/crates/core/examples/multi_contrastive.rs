//! Several contrastive sources per segment, with the source weight split
//! evenly between them.

use contrastive_decoding::app::{run_experiment, ExperimentConfig};
use contrastive_decoding::scoring::synthetic_corpus;
use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let synthetic = SyntheticConfig::default().with_hallucination_rate(0.7);
    let model = SyntheticTranslator::new(synthetic.clone())?;
    let (af, zu): (LanguageCode, LanguageCode) = ("af".parse()?, "zu".parse()?);
    let (sources, references): (Vec<String>, Vec<String>) = synthetic_corpus(&model, &af, &zu, 500, 1)?.into_iter().unzip();
    let base = ExperimentConfig {
        synthetic,
        src_lang: Some(af),
        tgt_lang: Some(zu),
        lambda_src: 0.7,
        lambda_lang: 0.0,
        max_len: 40,
        seed: 5,
        bleu: false,
        ..ExperimentConfig::default()
    };
    for k in 1..=3 {
        let config = ExperimentConfig { num_src_contrastive: k, ..base.clone() };
        let manifest = run_experiment(&model, None, &config, &sources, Some(&references))?;
        let report = manifest.summary.report.expect("references given");
        let worst = manifest.segments.iter().map(|s| s.score).fold(f64::MIN, f64::max);
        println!(
            "k={k} (weight {:.3} each): chrF2 {:.3}, chrF2<10 {:.3}, worst segment score {worst:.2}",
            0.7 / k as f64,
            report.chrf2_mean,
            report.halluc_rate
        );
    }
    Ok(())
}
