use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::evaluate::{read_aligned, write_text};
use super::with_workers;
use crate::context::{ConditioningContext, Document};
use crate::contrast::{assign_contrastive_sources, build_objective};
use crate::decoder::beam_search;
use crate::error::{Error, Result};
use crate::metrics::{corpus_report, evaluate, CorpusReport, LanguageIdentifier};
use crate::rng::Rng;
use crate::scoring::Scorer;
use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub index: usize,
    pub source: String,
    pub hypothesis: String,
    /// Decoded tokens including the terminal token.
    pub tokens: Vec<TokenId>,
    pub score: f64,
    /// Ended by the length limit rather than by the model.
    pub truncated: bool,
    /// Indices of the segments used as contrastive sources.
    pub contrast_sources: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub segments: usize,
    /// Present when a reference file was given.
    pub report: Option<CorpusReport>,
}

/// Record of a translation run, sufficient to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub segments: Vec<SegmentResult>,
    pub summary: RunSummary,
}

impl Manifest {
    pub fn hypotheses(&self) -> Vec<String> {
        self.segments.iter().map(|s| s.hypothesis.clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Decodes every line of `sources` as one document under the config's
/// contrastive objective. Results keep input order.
pub fn translate_lines(scorer: &dyn Scorer, config: &ExperimentConfig, sources: &[String]) -> Result<Vec<SegmentResult>> {
    config.validate()?;
    let (src, tgt) = config.direction()?;
    let contrast = config.contrast();
    let params = config.decode_params();
    let doc = Document::new(sources.to_vec(), src.clone())?;
    let assignments = if contrast.uses_sources() {
        assign_contrastive_sources(&doc, contrast.num_src_contrastive, &mut Rng::new(config.seed))?
    } else {
        vec![Vec::new(); doc.len()]
    };
    with_workers(config.workers, || {
        sources
            .par_iter()
            .zip(assignments)
            .enumerate()
            .map(|(index, (source, contrast_sources))| {
                let ctx = ConditioningContext::new(source.clone(), src.clone(), tgt.clone())?.with_mode(config.mode);
                let texts: Vec<String> = contrast_sources.iter().map(|&j| sources[j].clone()).collect();
                let objective = build_objective(&ctx, &texts, &contrast)?;
                let best = beam_search(scorer, &objective, &params)?
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Data(format!("segment {index}: no hypothesis")))?;
                Ok(SegmentResult {
                    index,
                    source: source.clone(),
                    hypothesis: scorer.detokenize(best.output_tokens())?,
                    tokens: best.decoded().to_vec(),
                    score: best.score,
                    truncated: best.truncated,
                    contrast_sources,
                })
            })
            .collect()
    })?
}

/// Translates, scores against references when available, and builds the manifest.
pub fn run_experiment(
    scorer: &dyn Scorer,
    lid: Option<&dyn LanguageIdentifier>,
    config: &ExperimentConfig,
    sources: &[String],
    references: Option<&[String]>,
) -> Result<Manifest> {
    let segments = translate_lines(scorer, config, sources)?;
    let report = match references {
        Some(refs) => {
            let triples: Vec<_> = segments
                .iter()
                .zip(refs)
                .map(|(s, r)| (s.source.clone(), s.hypothesis.clone(), r.clone()))
                .collect();
            let options = config.eval_options();
            let records = with_workers(config.workers, || evaluate(&triples, &options, lid))??;
            let (src, tgt) = config.direction()?;
            Some(corpus_report(&records, &options, Some((&src, &tgt)), lid)?)
        }
        None => None,
    };
    Ok(Manifest {
        config_hash: config.hash()?,
        seed: config.seed,
        config: config.recorded(),
        summary: RunSummary { segments: segments.len(), report },
        segments,
    })
}

/// `translate`: reads `input` (and `reference` if set), writes `output` and
/// `manifest` if set, and returns the manifest.
pub fn cmd_translate(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    config.direction()?;
    let input = config.input.as_ref().ok_or_else(|| Error::Config("translate needs an input file".into()))?;
    let (sources, references) = match &config.reference {
        Some(reference) => {
            let mut cols = read_aligned(&[input.as_path(), reference.as_path()])?;
            let refs = cols.pop();
            (cols.pop().unwrap_or_default(), refs)
        }
        None => (read_aligned(&[input.as_path()])?.pop().unwrap_or_default(), None),
    };
    let scorer = config.open_scorer()?;
    let lid = config.open_lid()?;
    let manifest = run_experiment(scorer.as_ref(), lid.as_deref(), config, &sources, references.as_deref())?;
    if let Some(path) = &config.output {
        write_text(path, &manifest.hypotheses())?;
    }
    if let Some(path) = &config.manifest {
        std::fs::write(path, manifest.to_json()?)?;
    }
    Ok(manifest)
}
