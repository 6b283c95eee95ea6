use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::ContextMode;
use crate::contrast::ContrastConfig;
use crate::decoder::DecodeParams;
use crate::error::{Error, Result};
use crate::metrics::{ChrfParams, EvalOptions, LanguageIdentifier, NaiveBayesLid, TngParams, DEFAULT_HALLUCINATION_THRESHOLD};
use crate::protocol::{ClientOptions, RemoteScorer};
use crate::rng::Rng;
use crate::scoring::{Scorer, SyntheticConfig, SyntheticTranslator, TableScorer};
use crate::vocab::LanguageCode;

/// Where next-token distributions come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    /// [`SyntheticTranslator`] built from the config's `synthetic` section.
    Synthetic,
    /// [`TableScorer`] loaded from a JSON file.
    Table(PathBuf),
    /// Protocol server started with `sh -c <command>`.
    Stdio(String),
    /// Protocol server listening on a TCP address.
    Tcp(String),
}

impl FromStr for ScorerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown scorer spec {s:?}"));
        if s == "builtin:synthetic" {
            return Ok(Self::Synthetic);
        }
        if let Some(path) = s.strip_prefix("builtin:table:") {
            return Ok(Self::Table(PathBuf::from(path)));
        }
        if let Some(cmd) = s.strip_prefix("proto:stdio:") {
            return if cmd.trim().is_empty() { Err(bad()) } else { Ok(Self::Stdio(cmd.into())) };
        }
        if let Some(addr) = s.strip_prefix("proto:tcp:") {
            return if addr.is_empty() { Err(bad()) } else { Ok(Self::Tcp(addr.into())) };
        }
        Err(bad())
    }
}

impl fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Synthetic => write!(f, "builtin:synthetic"),
            Self::Table(p) => write!(f, "builtin:table:{}", p.display()),
            Self::Stdio(c) => write!(f, "proto:stdio:{c}"),
            Self::Tcp(a) => write!(f, "proto:tcp:{a}"),
        }
    }
}

impl Serialize for ScorerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScorerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything a run depends on. Loaded from one JSON document, then
/// overridden field by field from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scorer: ScorerSpec,
    pub synthetic: SyntheticConfig,
    pub src_lang: Option<LanguageCode>,
    pub tgt_lang: Option<LanguageCode>,
    pub mode: ContextMode,
    pub lambda_src: f64,
    pub lambda_lang: f64,
    pub num_src_contrastive: usize,
    pub beam_size: usize,
    pub max_len: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// chrF2 threshold for the hallucination proxy.
    pub threshold: f64,
    pub tng_n: usize,
    pub tng_t: usize,
    pub bleu: bool,
    /// `builtin:synthetic` or a path to a saved [`NaiveBayesLid`].
    pub lid: Option<String>,
    /// Segment-level worker threads; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let contrast = ContrastConfig::default();
        let decode = DecodeParams::default();
        let tng = TngParams::default();
        Self {
            scorer: ScorerSpec::Synthetic,
            synthetic: SyntheticConfig::default(),
            src_lang: None,
            tgt_lang: None,
            mode: ContextMode::Mt,
            lambda_src: contrast.lambda_src,
            lambda_lang: contrast.lambda_lang,
            num_src_contrastive: contrast.num_src_contrastive,
            beam_size: decode.beam_size,
            max_len: decode.max_len,
            seed: 0,
            input: None,
            reference: None,
            output: None,
            manifest: None,
            threshold: DEFAULT_HALLUCINATION_THRESHOLD,
            tng_n: tng.n,
            tng_t: tng.t,
            bleu: true,
            lid: None,
            workers: None,
        }
    }
}

/// Command-line values; each `Some` replaces the config file's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scorer: Option<ScorerSpec>,
    pub src_lang: Option<LanguageCode>,
    pub tgt_lang: Option<LanguageCode>,
    pub mode: Option<ContextMode>,
    pub lambda_src: Option<f64>,
    pub lambda_lang: Option<f64>,
    pub num_src_contrastive: Option<usize>,
    pub beam_size: Option<usize>,
    pub max_len: Option<usize>,
    pub seed: Option<u64>,
    pub hallucination_rate: Option<f64>,
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub tng_n: Option<usize>,
    pub tng_t: Option<usize>,
    pub no_bleu: bool,
    pub lid: Option<String>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Reads a config document. A run manifest is accepted too, in which case
    /// the configuration it recorded is used.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if value.get("config_hash").is_some() {
            value = value.get_mut("config").map(serde_json::Value::take).unwrap_or_default();
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = o.$field { self.$field = v; })* };
        }
        macro_rules! set_opt {
            ($($field:ident),*) => { $(if o.$field.is_some() { self.$field = o.$field; })* };
        }
        set!(scorer, mode, lambda_src, lambda_lang, num_src_contrastive, beam_size, max_len, seed, threshold, tng_n, tng_t);
        set_opt!(src_lang, tgt_lang, input, reference, output, manifest, lid, workers);
        if let Some(h) = o.hallucination_rate {
            self.synthetic.hallucination_rate = h;
        }
        if o.no_bleu {
            self.bleu = false;
        }
    }

    pub fn contrast(&self) -> ContrastConfig {
        ContrastConfig {
            lambda_src: self.lambda_src,
            lambda_lang: self.lambda_lang,
            num_src_contrastive: self.num_src_contrastive,
            ..ContrastConfig::default()
        }
    }

    pub fn decode_params(&self) -> DecodeParams {
        DecodeParams { beam_size: self.beam_size, max_len: self.max_len, ..DecodeParams::default() }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            chrf: ChrfParams::default(),
            tng: TngParams { n: self.tng_n, t: self.tng_t },
            threshold: self.threshold,
            bleu: self.bleu,
        }
    }

    /// Source and target language, both required for translation.
    pub fn direction(&self) -> Result<(LanguageCode, LanguageCode)> {
        match (&self.src_lang, &self.tgt_lang) {
            (Some(s), Some(t)) if s == t => Err(Error::DegenerateDirection(s.to_string())),
            (Some(s), Some(t)) => Ok((s.clone(), t.clone())),
            _ => Err(Error::Config("both src_lang and tgt_lang are required".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.contrast().validate()?;
        self.decode_params().validate()?;
        self.eval_options().tng.validate()?;
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// The config as recorded in a manifest: output locations and worker
    /// count do not affect results and are dropped.
    pub fn recorded(&self) -> Self {
        Self { output: None, manifest: None, workers: None, ..self.clone() }
    }

    /// Hex SHA-256 of the recorded config's JSON.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_vec(&self.recorded())?;
        Ok(hex::encode(Sha256::digest(&json)))
    }

    pub fn open_scorer(&self) -> Result<Arc<dyn Scorer>> {
        Ok(match &self.scorer {
            ScorerSpec::Synthetic => Arc::new(SyntheticTranslator::new(self.synthetic.clone())?),
            ScorerSpec::Table(path) => Arc::new(
                TableScorer::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            ),
            ScorerSpec::Stdio(cmd) => Arc::new(RemoteScorer::spawn(cmd, ClientOptions::default())?),
            ScorerSpec::Tcp(addr) => Arc::new(RemoteScorer::connect_tcp(addr.as_str(), ClientOptions::default())?),
        })
    }

    pub fn open_lid(&self) -> Result<Option<Arc<dyn LanguageIdentifier>>> {
        Ok(match self.lid.as_deref() {
            None => None,
            Some("builtin:synthetic") => {
                let translator = SyntheticTranslator::new(self.synthetic.clone())?;
                Some(Arc::new(synthetic_lid(&translator, SYNTHETIC_LID_WORDS, SYNTHETIC_LID_SEED)?))
            }
            Some(path) => Some(Arc::new(
                NaiveBayesLid::from_path(path).map_err(|e| Error::Config(format!("{path}: {e}")))?,
            )),
        })
    }
}

pub const SYNTHETIC_LID_WORDS: usize = 2000;
pub const SYNTHETIC_LID_SEED: u64 = 99;

/// Language identifier trained on text sampled from each synthetic language.
pub fn synthetic_lid(translator: &SyntheticTranslator, words: usize, seed: u64) -> Result<NaiveBayesLid> {
    let mut rng = Rng::new(seed);
    let samples = translator
        .languages()
        .into_iter()
        .map(|lang| translator.sample_text(&lang, words, &mut rng).map(|text| (lang, text)))
        .collect::<Result<Vec<_>>>()?;
    NaiveBayesLid::train(samples.iter().map(|(l, t)| (l.clone(), t.as_str())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scorer_specs_round_trip() {
        for s in ["builtin:synthetic", "builtin:table:x/y.json", "proto:stdio:python serve.py --x", "proto:tcp:127.0.0.1:9000"] {
            assert_eq!(s.parse::<ScorerSpec>().unwrap().to_string(), s);
        }
        for bad in ["synthetic", "proto:stdio:", "proto:tcp:", "builtin:other"] {
            assert!(matches!(bad.parse::<ScorerSpec>(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn command_line_wins() {
        let mut cfg = ExperimentConfig::from_json_str(r#"{"lambda_src": 0.3, "beam_size": 2, "seed": 9}"#).unwrap();
        cfg.apply(Overrides { lambda_src: Some(0.0), workers: Some(3), ..Overrides::default() });
        assert_eq!(cfg.lambda_src, 0.0);
        assert_eq!(cfg.beam_size, 2);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.workers, Some(3));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = ExperimentConfig::from_json_str(r#"{"lambda": 1}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_ignores_output_locations() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { output: Some("o.txt".into()), workers: Some(2), ..a.clone() };
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        assert!(ExperimentConfig { beam_size: 0, ..Default::default() }.validate().is_err());
        assert!(ExperimentConfig { num_src_contrastive: 0, ..Default::default() }.validate().is_err());
        assert!(ExperimentConfig { tng_t: 0, ..Default::default() }.validate().is_err());
        let same = ExperimentConfig { src_lang: "de".parse().ok(), tgt_lang: "de".parse().ok(), ..Default::default() };
        assert!(same.direction().is_err());
    }
}
