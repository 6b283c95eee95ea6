//! Hallucination suppression on the synthetic translator: the same corpus
//! decoded with and without a shuffled-source negative.

use contrastive_decoding::app::{run_experiment, ExperimentConfig};
use contrastive_decoding::scoring::synthetic_corpus;
use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let mut config = ExperimentConfig {
        src_lang: Some("af".parse()?),
        tgt_lang: Some("zu".parse()?),
        lambda_lang: 0.0,
        max_len: 40,
        seed: 5,
        ..ExperimentConfig::default()
    };
    config.synthetic = config.synthetic.clone().with_hallucination_rate(0.3);
    let model = SyntheticTranslator::new(config.synthetic.clone())?;
    let (src, tgt) = config.direction()?;
    let (sources, references): (Vec<String>, Vec<String>) = synthetic_corpus(&model, &src, &tgt, 500, 1)?.into_iter().unzip();

    let mut runs = Vec::new();
    for lambda_src in [0.0, 0.7] {
        let point = ExperimentConfig { lambda_src, ..config.clone() };
        let manifest = run_experiment(&model, None, &point, &sources, Some(&references))?;
        let report = manifest.summary.report.clone().expect("references given");
        println!(
            "lambda_src={lambda_src}: chrF2 {:.2}, chrF2<10 rate {:.3}, TNG rate {:.3}",
            report.chrf2_mean, report.halluc_rate, report.tng_rate
        );
        runs.push(manifest);
    }

    let changed = runs[0].segments.iter().zip(&runs[1].segments).find(|(a, b)| a.hypothesis != b.hypothesis);
    if let Some((base, contrastive)) = changed {
        println!("\nsource:      {}", base.source);
        println!("reference:   {}", references[base.index]);
        println!("baseline:    {}", base.hypothesis);
        println!("contrastive: {} (contrast source #{:?})", contrastive.hypothesis, contrastive.contrast_sources);
    }
    Ok(())
}
