use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::evaluate::read_aligned;
use super::translate::run_experiment;
use crate::error::{Error, Result};

/// Values to try per parameter. An empty axis keeps the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub lambda_src: Vec<f64>,
    pub lambda_lang: Vec<f64>,
    pub num_src_contrastive: Vec<usize>,
    pub beam_size: Vec<usize>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.lambda_src.is_empty()
            && self.lambda_lang.is_empty()
            && self.num_src_contrastive.is_empty()
            && self.beam_size.is_empty()
    }

    /// Cartesian product in row-major order (`lambda_src` outermost).
    pub fn points(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        fn axis<T: Copy>(values: &[T], default: T) -> Vec<T> {
            if values.is_empty() {
                vec![default]
            } else {
                values.to_vec()
            }
        }
        let mut out = Vec::new();
        for ls in axis(&self.lambda_src, base.lambda_src) {
            for ll in axis(&self.lambda_lang, base.lambda_lang) {
                for k in axis(&self.num_src_contrastive, base.num_src_contrastive) {
                    for b in axis(&self.beam_size, base.beam_size) {
                        out.push(ExperimentConfig {
                            lambda_src: ls,
                            lambda_lang: ll,
                            num_src_contrastive: k,
                            beam_size: b,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

/// Parses a comma-separated list such as `0,0.1,0.3`.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Config(format!("bad list value {v:?} in {s:?}"))))
        .collect()
}

/// One grid point with its corpus metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda_src: f64,
    pub lambda_lang: f64,
    pub num_src_contrastive: usize,
    pub beam_size: usize,
    pub segments: usize,
    pub chrf2_mean: f64,
    pub chrf2_corpus: f64,
    pub bleu: Option<f64>,
    pub halluc_rate: f64,
    pub tng_rate: f64,
    pub off_target_en: Option<usize>,
    pub off_target_src: Option<usize>,
    pub off_target_other: Option<usize>,
}

/// Runs every grid point against the config's input and reference files.
/// The scorer and language identifier are opened once and shared.
pub fn cmd_sweep(config: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let points = grid.points(config);
    for p in &points {
        p.validate()?;
    }
    config.direction()?;
    let input = config.input.as_ref().ok_or_else(|| Error::Config("sweep needs an input file".into()))?;
    let reference = config.reference.as_ref().ok_or_else(|| Error::Config("sweep needs a reference file".into()))?;
    let mut cols = read_aligned(&[input.as_path(), reference.as_path()])?;
    let references = cols.pop().unwrap_or_default();
    let sources = cols.pop().unwrap_or_default();
    let scorer = config.open_scorer()?;
    let lid = config.open_lid()?;
    points
        .iter()
        .map(|point| {
            let manifest = run_experiment(scorer.as_ref(), lid.as_deref(), point, &sources, Some(&references))?;
            let report = manifest.summary.report.ok_or(Error::Empty("sweep point without report"))?;
            Ok(SweepRow {
                lambda_src: point.lambda_src,
                lambda_lang: point.lambda_lang,
                num_src_contrastive: point.num_src_contrastive,
                beam_size: point.beam_size,
                segments: report.segments,
                chrf2_mean: report.chrf2_mean,
                chrf2_corpus: report.chrf2_corpus,
                bleu: report.bleu,
                halluc_rate: report.halluc_rate,
                tng_rate: report.tng_rate,
                off_target_en: report.off_target.map(|o| o.en),
                off_target_src: report.off_target.map(|o| o.src),
                off_target_other: report.off_target.map(|o| o.other),
            })
        })
        .collect()
}

/// CSV with a header row; missing values are empty cells.
pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Data(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}
