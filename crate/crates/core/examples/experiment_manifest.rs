//! Run manifests: the recorded config, its hash, the contrastive source
//! chosen for each segment, and per-segment scores. Feeding the manifest
//! back as a config reproduces the run byte for byte.

use contrastive_decoding::app::{cmd_translate, write_text, ExperimentConfig, Manifest};
use contrastive_decoding::scoring::synthetic_corpus;
use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join(format!("contradec-manifest-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let model = SyntheticTranslator::new(SyntheticConfig::default())?;
    let (de, hr): (LanguageCode, LanguageCode) = ("de".parse()?, "hr".parse()?);
    let (src, reference): (Vec<String>, Vec<String>) = synthetic_corpus(&model, &de, &hr, 20, 3)?.into_iter().unzip();
    write_text(&dir.join("src.txt"), &src)?;
    write_text(&dir.join("ref.txt"), &reference)?;

    let config = ExperimentConfig {
        src_lang: Some(de),
        tgt_lang: Some(hr),
        seed: 11,
        max_len: 30,
        input: Some(dir.join("src.txt")),
        reference: Some(dir.join("ref.txt")),
        output: Some(dir.join("hyp.txt")),
        manifest: Some(dir.join("run.json")),
        ..ExperimentConfig::default()
    };
    let manifest = cmd_translate(&config)?;
    println!("config hash {}", manifest.config_hash);
    for s in manifest.segments.iter().take(3) {
        println!("#{} contrasted with {:?}, score {:.3}: {}", s.index, s.contrast_sources, s.score, s.hypothesis);
    }

    let mut again = ExperimentConfig::from_path(dir.join("run.json"))?;
    again.output = Some(dir.join("hyp2.txt"));
    again.manifest = Some(dir.join("run2.json"));
    cmd_translate(&again)?;
    let same = std::fs::read(dir.join("run.json"))? == std::fs::read(dir.join("run2.json"))?
        && std::fs::read(dir.join("hyp.txt"))? == std::fs::read(dir.join("hyp2.txt"))?;
    println!("reproduced byte-identically: {same}");
    assert_eq!(Manifest::from_path(dir.join("run2.json"))?, manifest);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
