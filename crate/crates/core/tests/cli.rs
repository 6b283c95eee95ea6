mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::*;
use contrastive_decoding::app::*;
use contrastive_decoding::prelude::*;
use contrastive_decoding::scoring::synthetic_corpus;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    /// A 60-segment af->zu synthetic corpus written to src.txt / ref.txt.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let model = SyntheticTranslator::new(SyntheticConfig::default()).unwrap();
        let pairs = synthetic_corpus(&model, &lang("af"), &lang("zu"), 60, 1).unwrap();
        let (src, reference): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
        write_text(&dir.path().join("src.txt"), &src).unwrap();
        write_text(&dir.path().join("ref.txt"), &reference).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, h: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            src_lang: Some(lang("af")),
            tgt_lang: Some(lang("zu")),
            max_len: 40,
            seed: 5,
            input: Some(self.path("src.txt")),
            reference: Some(self.path("ref.txt")),
            ..ExperimentConfig::default()
        };
        c.synthetic.hallucination_rate = h;
        c
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn zero_lambdas_equal_plain_beam_search() {
    let ws = Workspace::new();
    let config = ExperimentConfig { lambda_src: 0.0, lambda_lang: 0.0, output: Some(ws.path("hyp.txt")), ..ws.config(0.3) };
    let manifest = cmd_translate(&config).unwrap();
    let model = SyntheticTranslator::new(config.synthetic.clone()).unwrap();
    let mut expected = String::new();
    for line in read_lines(&ws.path("src.txt")).unwrap() {
        let ctx = ConditioningContext::new(line, lang("af"), lang("zu")).unwrap();
        let best = beam_search(&model, &ContrastiveObjective::plain(ctx), &config.decode_params()).unwrap().remove(0);
        expected += &model.detokenize(best.output_tokens()).unwrap();
        expected.push('\n');
    }
    assert_eq!(String::from_utf8(read(&ws.path("hyp.txt"))).unwrap(), expected);
    assert!(manifest.segments.iter().all(|s| s.contrast_sources.is_empty()));
}

#[test]
fn runs_are_deterministic_and_reproducible_from_manifest() {
    let ws = Workspace::new();
    let run = |tag: &str, config: &ExperimentConfig| {
        let c = ExperimentConfig {
            output: Some(ws.path(&format!("hyp-{tag}.txt"))),
            manifest: Some(ws.path(&format!("run-{tag}.json"))),
            workers: Some(2),
            ..config.clone()
        };
        cmd_translate(&c).unwrap();
    };
    let config = ws.config(0.3);
    run("a", &config);
    run("b", &config);
    let replay = ExperimentConfig::from_path(ws.path("run-a.json")).unwrap();
    run("c", &replay);
    for tag in ["b", "c"] {
        assert_eq!(read(&ws.path("hyp-a.txt")), read(&ws.path(&format!("hyp-{tag}.txt"))));
        assert_eq!(read(&ws.path("run-a.json")), read(&ws.path(&format!("run-{tag}.json"))));
    }

    let manifest = Manifest::from_path(ws.path("run-a.json")).unwrap();
    assert_eq!(manifest.config_hash, config.hash().unwrap());
    assert_eq!(manifest.seed, 5);
    assert_eq!(manifest.segments.len(), 60);
    for (i, s) in manifest.segments.iter().enumerate() {
        assert_eq!(s.index, i);
        assert_eq!(s.contrast_sources.len(), 1);
        assert_ne!(s.contrast_sources[0], i);
        assert!(s.score.is_finite());
    }

    run("d", &ExperimentConfig { seed: 6, ..config });
    assert_ne!(read(&ws.path("run-a.json")), read(&ws.path("run-d.json")));
}

#[test]
fn single_point_sweep_equals_translate_then_evaluate() {
    let ws = Workspace::new();
    let config = ExperimentConfig { output: Some(ws.path("hyp.txt")), ..ws.config(0.3) };
    cmd_translate(&config).unwrap();
    let inputs = EvaluateInputs {
        hypotheses: ws.path("hyp.txt"),
        references: ws.path("ref.txt"),
        sources: ws.path("src.txt"),
        direction: None,
        workers: None,
    };
    let (report, _) = cmd_evaluate(&inputs, &config.eval_options(), None).unwrap();
    let grid = SweepGrid { lambda_src: vec![config.lambda_src], ..SweepGrid::default() };
    let rows = cmd_sweep(&config, &grid).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].chrf2_mean, report.chrf2_mean);
    assert_eq!(rows[0].halluc_rate, report.halluc_rate);
    assert_eq!(rows[0].tng_rate, report.tng_rate);
    assert_eq!(rows[0].bleu, report.bleu);
}

#[test]
fn duplicate_grid_points_give_identical_rows() {
    let ws = Workspace::new();
    let grid = SweepGrid { lambda_src: vec![0.7, 0.0, 0.7], ..SweepGrid::default() };
    let rows = cmd_sweep(&ws.config(0.3), &grid).unwrap();
    assert_eq!(rows[0], rows[2]);
    assert_ne!(rows[0], rows[1]);
    assert!(matches!(cmd_sweep(&ws.config(0.3), &SweepGrid::default()), Err(Error::Config(_))));
}

#[test]
fn small_documents_cannot_supply_contrast() {
    let ws = Workspace::new();
    std::fs::write(ws.path("one.txt"), "rojepo pevefes\n").unwrap();
    let config = ExperimentConfig { input: Some(ws.path("one.txt")), reference: None, ..ws.config(0.0) };
    assert!(matches!(cmd_translate(&config), Err(Error::InsufficientPool { .. })));
    let baseline = ExperimentConfig { lambda_src: 0.0, ..config };
    assert_eq!(cmd_translate(&baseline).unwrap().segments.len(), 1);
}

fn contradec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_contradec")).args(args).output().unwrap()
}

#[test]
fn binary_translate_and_evaluate() {
    let ws = Workspace::new();
    let s = |p: &str| ws.path(p).to_string_lossy().into_owned();
    let out = contradec(&[
        "translate", "--src-lang", "af", "--tgt-lang", "zu", "--input", &s("src.txt"), "--reference", &s("ref.txt"),
        "--output", &s("hyp.txt"), "--manifest", &s("run.json"), "--max-len", "40", "--seed", "5",
        "--hallucination-rate", "0.3", "--lambda-lang", "0", "--workers", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let library = cmd_translate(&ExperimentConfig { lambda_lang: 0.0, ..ws.config(0.3) }).unwrap();
    assert_eq!(read(&ws.path("hyp.txt")), (library.hypotheses().join("\n") + "\n").into_bytes());

    let out = contradec(&["evaluate", "--hyp", &s("hyp.txt"), "--ref", &s("ref.txt"), "--src", &s("src.txt"), "--threshold", "10"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["segments"], 60);
    assert_eq!(report["chrf2_mean"].as_f64(), library.summary.report.as_ref().map(|r| r.chrf2_mean));

    let out = contradec(&["evaluate", "--hyp", &s("ref.txt"), "--ref", &s("ref.txt"), "--src", &s("src.txt")]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((report["chrf2_mean"].as_f64(), report["halluc_rate"].as_f64(), report["tng_rate"].as_f64()), (Some(100.0), Some(0.0), Some(0.0)));
}

#[test]
fn binary_sweep_csv() {
    let ws = Workspace::new();
    let s = |p: &str| ws.path(p).to_string_lossy().into_owned();
    let out = contradec(&[
        "sweep", "--src-lang", "af", "--tgt-lang", "zu", "--input", &s("src.txt"), "--reference", &s("ref.txt"),
        "--max-len", "40", "--grid-lambda-src", "0,0.7", "--no-bleu",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("0.7,"));
}

#[test]
fn binary_exit_codes() {
    let ws = Workspace::new();
    let s = |p: &str| ws.path(p).to_string_lossy().into_owned();
    std::fs::write(ws.path("bad.json"), r#"{"lamda_src": 1}"#).unwrap();
    let code = |args: &[&str]| contradec(args).status.code();
    assert_eq!(code(&["translate", "--config", &s("bad.json")]), Some(2));
    assert_eq!(code(&["translate", "--src-lang", "af", "--tgt-lang", "af", "--input", &s("src.txt")]), Some(2));
    assert_eq!(code(&["translate", "--src-lang", "af", "--tgt-lang", "zu", "--input", &s("missing.txt")]), Some(4));
    assert_eq!(
        code(&["translate", "--src-lang", "af", "--tgt-lang", "zu", "--input", &s("src.txt"), "--scorer", "proto:stdio:true"]),
        Some(3)
    );
    assert_eq!(code(&["evaluate", "--hyp", &s("src.txt"), "--ref", &s("ref.txt"), "--src", &fixture("eval_src.txt").to_string_lossy()]), Some(4));
    let table = format!("builtin:table:{}", fixture("tiny_table.json").display());
    std::fs::write(ws.path("dog.txt"), "dog\ndog\n").unwrap();
    let out = contradec(&["translate", "--scorer", &table, "--src-lang", "en", "--tgt-lang", "de", "--input", &s("dog.txt"), "--lambda-src", "0", "--lambda-lang", "0", "--max-len", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "hund\nhund\n");
}
