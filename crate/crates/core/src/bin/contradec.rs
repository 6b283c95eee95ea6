use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use contrastive_decoding::app::{
    cmd_evaluate, cmd_sweep, cmd_translate, parse_list, rows_to_csv, write_jsonl, write_text, EvaluateInputs,
    ExperimentConfig, Overrides, ScorerSpec, SweepGrid,
};
use contrastive_decoding::context::ContextMode;
use contrastive_decoding::protocol::{serve, serve_tcp};
use contrastive_decoding::scoring::{synthetic_corpus, SyntheticTranslator, TableScorer};
use contrastive_decoding::vocab::LanguageCode;
use contrastive_decoding::{Error, Result};

#[derive(Parser)]
#[command(name = "contradec", version, about = "Source- and language-contrastive decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a file line by line and write a run manifest.
    Translate(Run),
    /// Score hypotheses against references.
    Evaluate(Evaluate),
    /// Translate and evaluate over a grid of parameters.
    Sweep(Sweep),
    /// Serve a built-in scorer over the NDJSON protocol.
    Serve(Serve),
    /// Write a synthetic parallel corpus.
    Corpus(Corpus),
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config file or run manifest; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// builtin:synthetic | builtin:table:<path> | proto:stdio:<command> | proto:tcp:<addr>
    #[arg(long)]
    scorer: Option<ScorerSpec>,
    #[arg(long)]
    src_lang: Option<LanguageCode>,
    #[arg(long)]
    tgt_lang: Option<LanguageCode>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    lambda_src: Option<f64>,
    #[arg(long)]
    lambda_lang: Option<f64>,
    #[arg(long = "num-contrastive-sources")]
    num_src_contrastive: Option<usize>,
    #[arg(long)]
    beam_size: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hallucination rate of the built-in synthetic scorer.
    #[arg(long)]
    hallucination_rate: Option<f64>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    metrics: MetricFlags,
}

#[derive(Args)]
struct MetricFlags {
    /// chrF2 below this counts as a hallucination.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    tng_n: Option<usize>,
    #[arg(long)]
    tng_t: Option<usize>,
    #[arg(long)]
    no_bleu: bool,
    /// builtin:synthetic or a saved language identifier.
    #[arg(long)]
    lid: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mt,
    Llm,
}

impl Common {
    fn config(self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        config.apply(Overrides {
            scorer: self.scorer,
            src_lang: self.src_lang,
            tgt_lang: self.tgt_lang,
            mode: self.mode.map(|m| match m {
                Mode::Mt => ContextMode::Mt,
                Mode::Llm => ContextMode::Llm,
            }),
            lambda_src: self.lambda_src,
            lambda_lang: self.lambda_lang,
            num_src_contrastive: self.num_src_contrastive,
            beam_size: self.beam_size,
            max_len: self.max_len,
            seed: self.seed,
            hallucination_rate: self.hallucination_rate,
            input: self.input,
            reference: self.reference,
            output: self.output,
            manifest: self.manifest,
            threshold: self.metrics.threshold,
            tng_n: self.metrics.tng_n,
            tng_t: self.metrics.tng_t,
            no_bleu: self.metrics.no_bleu,
            lid: self.metrics.lid,
            workers: self.metrics.workers,
        });
        Ok(config)
    }
}

#[derive(Args)]
struct Evaluate {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    src_lang: Option<LanguageCode>,
    #[arg(long)]
    tgt_lang: Option<LanguageCode>,
    /// Config file supplying metric settings and the synthetic LID setup.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    metrics: MetricFlags,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write per-segment JSON lines here.
    #[arg(long)]
    segments: Option<PathBuf>,
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    /// Comma-separated values, e.g. 0,0.3,0.7
    #[arg(long)]
    grid_lambda_src: Option<String>,
    #[arg(long)]
    grid_lambda_lang: Option<String>,
    #[arg(long)]
    grid_num_contrastive_sources: Option<String>,
    #[arg(long)]
    grid_beam_size: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Serve {
    /// builtin:synthetic or builtin:table:<path>
    #[arg(long, default_value = "builtin:synthetic")]
    scorer: ScorerSpec,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hallucination_rate: Option<f64>,
    /// Listen on this TCP address instead of stdio.
    #[arg(long)]
    tcp: Option<String>,
}

#[derive(Args)]
struct Corpus {
    #[arg(long)]
    src_lang: LanguageCode,
    #[arg(long)]
    tgt_lang: LanguageCode,
    #[arg(long, short = 'n', default_value_t = 500)]
    segments: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    source_out: PathBuf,
    #[arg(long)]
    reference_out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Translate(args) => {
            let config = args.common.config()?;
            let manifest = cmd_translate(&config)?;
            if config.output.is_none() {
                let mut out = std::io::stdout().lock();
                for s in &manifest.segments {
                    writeln!(out, "{}", s.hypothesis)?;
                }
            }
            if let Some(report) = &manifest.summary.report {
                eprintln!("{}", serde_json::to_string(report)?);
            }
            Ok(())
        }
        Command::Evaluate(args) => {
            let mut config = match &args.config {
                Some(path) => ExperimentConfig::from_path(path)?,
                None => ExperimentConfig::default(),
            };
            config.apply(Overrides {
                src_lang: args.src_lang,
                tgt_lang: args.tgt_lang,
                threshold: args.metrics.threshold,
                tng_n: args.metrics.tng_n,
                tng_t: args.metrics.tng_t,
                no_bleu: args.metrics.no_bleu,
                lid: args.metrics.lid,
                workers: args.metrics.workers,
                ..Overrides::default()
            });
            let inputs = EvaluateInputs {
                hypotheses: args.hyp,
                references: args.reference,
                sources: args.src,
                direction: config.direction().ok(),
                workers: config.workers,
            };
            let lid = config.open_lid()?;
            let (report, records) = cmd_evaluate(&inputs, &config.eval_options(), lid.as_deref())?;
            if let Some(path) = &args.segments {
                write_jsonl(path, &records)?;
            }
            emit(args.report, serde_json::to_string_pretty(&report)? + "\n")
        }
        Command::Sweep(args) => {
            let config = args.common.config()?;
            let grid = SweepGrid {
                lambda_src: list(args.grid_lambda_src)?,
                lambda_lang: list(args.grid_lambda_lang)?,
                num_src_contrastive: list(args.grid_num_contrastive_sources)?,
                beam_size: list(args.grid_beam_size)?,
            };
            let rows = cmd_sweep(&config, &grid)?;
            let text = match args.format {
                Format::Csv => rows_to_csv(&rows)?,
                Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
            };
            emit(args.out, text)
        }
        Command::Serve(args) => {
            let mut config = match &args.config {
                Some(path) => ExperimentConfig::from_path(path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(h) = args.hallucination_rate {
                config.synthetic.hallucination_rate = h;
            }
            match (&args.scorer, args.tcp) {
                (ScorerSpec::Synthetic, tcp) => {
                    serve_with(Arc::new(SyntheticTranslator::new(config.synthetic)?), tcp)
                }
                (ScorerSpec::Table(path), tcp) => serve_with(Arc::new(TableScorer::from_path(path)?), tcp),
                (other, _) => Err(Error::Config(format!("cannot serve {other}; use a builtin scorer"))),
            }
        }
        Command::Corpus(args) => {
            let synthetic = match &args.config {
                Some(path) => ExperimentConfig::from_path(path)?.synthetic,
                None => ExperimentConfig::default().synthetic,
            };
            let translator = SyntheticTranslator::new(synthetic)?;
            let pairs = synthetic_corpus(&translator, &args.src_lang, &args.tgt_lang, args.segments, args.seed)?;
            let (src, reference): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
            write_text(&args.source_out, &src)?;
            write_text(&args.reference_out, &reference)
        }
    }
}

fn serve_with<S: contrastive_decoding::scoring::Scorer + 'static>(scorer: Arc<S>, tcp: Option<String>) -> Result<()> {
    match tcp {
        Some(addr) => serve_tcp(scorer, addr),
        None => serve(scorer.as_ref(), BufReader::new(std::io::stdin().lock()), std::io::stdout().lock()),
    }
}

fn list<T: std::str::FromStr>(s: Option<String>) -> Result<Vec<T>> {
    s.map_or(Ok(Vec::new()), |s| parse_list(&s))
}

fn emit(path: Option<PathBuf>, text: String) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
