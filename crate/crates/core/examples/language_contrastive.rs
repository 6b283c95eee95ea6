//! Off-target suppression: a Zulu lexicon that leaks English words, decoded
//! with increasing weight on the English-target negative.

use contrastive_decoding::app::{run_experiment, synthetic_lid, ExperimentConfig};
use contrastive_decoding::metrics::LanguageIdentifier;
use contrastive_decoding::scoring::synthetic_corpus;
use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let synthetic = SyntheticConfig::default().with_english_leak("zu", 0.3);
    let model = SyntheticTranslator::new(synthetic.clone())?;
    let lid = synthetic_lid(&model, 2000, 99)?;
    let (en, zu): (LanguageCode, LanguageCode) = ("en".parse()?, "zu".parse()?);
    let (sources, references): (Vec<String>, Vec<String>) = synthetic_corpus(&model, &en, &zu, 200, 1)?.into_iter().unzip();

    let base = ExperimentConfig {
        synthetic,
        src_lang: Some(en),
        tgt_lang: Some(zu),
        lambda_src: 0.0,
        max_len: 40,
        ..ExperimentConfig::default()
    };
    println!("lambda_lang  off-target(en)  chrF2");
    for lambda_lang in [0.0, 0.1, 0.3, 0.5] {
        let config = ExperimentConfig { lambda_lang, ..base.clone() };
        let manifest = run_experiment(&model, Some(&lid as &dyn LanguageIdentifier), &config, &sources, Some(&references))?;
        let report = manifest.summary.report.expect("references given");
        let off = report.off_target.expect("lid given");
        println!("{lambda_lang:>11}  {:>14}  {:.2}", off.en, report.chrf2_mean);
    }
    Ok(())
}
