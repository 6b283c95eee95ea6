mod common;

use common::*;
use contrastive_decoding::app::{cmd_evaluate, EvaluateInputs};
use contrastive_decoding::metrics::*;
use contrastive_decoding::prelude::*;
use proptest::prelude::{prop, prop_assert, proptest};

fn fixture_lid() -> NaiveBayesLid {
    let en = std::fs::read_to_string(fixture("lid_en.txt")).unwrap();
    let de = std::fs::read_to_string(fixture("lid_de.txt")).unwrap();
    NaiveBayesLid::train([(lang("en"), en.as_str()), (lang("de"), de.as_str())]).unwrap()
}

fn fixture_inputs() -> EvaluateInputs {
    EvaluateInputs {
        hypotheses: fixture("eval_hyp.txt"),
        references: fixture("eval_ref.txt"),
        sources: fixture("eval_src.txt"),
        direction: Some((lang("de"), lang("en"))),
        workers: None,
    }
}

#[test]
fn chrf_edge_cases() {
    assert_eq!(chrf2("a cat", "a cat"), 100.0);
    assert_eq!(chrf2("", "a cat"), 0.0);
    assert_eq!(chrf2("a cat", ""), 0.0);
    assert_eq!(chrf2("xyz", "abc"), 0.0);
    assert!((chrf2("cat sat on", "the cat sat on the mat") - 42.3851179025738).abs() < 1e-9);
}

#[test]
fn bleu_hand_case() {
    // All precisions 1, brevity penalty exp(1 - 5/4).
    assert!((bleu(&["a", "b", "c", "d"], &["a", "b", "c", "d", "e"], 4).unwrap() - 77.880).abs() < 1e-3);
    // Precisions 5/6, 3/5, 2/4, 1/3 with equal lengths.
    let h: Vec<&str> = "the cat sat on the mat".split(' ').collect();
    let r: Vec<&str> = "the cat sat on a mat".split(' ').collect();
    let log_mean = ((5.0f64 / 6.0).ln() + 0.6f64.ln() + 0.5f64.ln() + (1.0f64 / 3.0).ln()) / 4.0;
    assert!((bleu(&h, &r, 4).unwrap() - 100.0 * log_mean.exp()).abs() < 1e-9);
    // All precisions 1, brevity penalty exp(1 - 8/6).
    let h: Vec<&str> = "a b c d e f".split(' ').collect();
    let r: Vec<&str> = "a b c d e f g h".split(' ').collect();
    assert!((bleu(&h, &r, 4).unwrap() - 100.0 * (1.0f64 - 8.0 / 6.0).exp()).abs() < 1e-9);
    assert!((bleu(&h, &r, 4).unwrap() - 71.65313105737893).abs() < 1e-9);
}

#[test]
fn tng_truth_table() {
    let p = TngParams::default();
    let loop4 = "a b c d a b c d a b c d";
    assert!(tng_flag("w x y z", loop4, &p));
    assert!(!tng_flag(loop4, loop4, &p));
    assert!(!tng_flag("w x y z", "a b c", &p));
    assert!(!tng_flag("w x y z", "a b c d a b c d", &p));
}

#[test]
fn fixture_report_pinned() {
    let lid = fixture_lid();
    let (report, records) = cmd_evaluate(&fixture_inputs(), &EvalOptions::default(), Some(&lid)).unwrap();
    assert_eq!(report.segments, 10);
    assert!((report.chrf2_mean - 57.637883750642686).abs() < 1e-9);
    assert!((report.chrf2_corpus - 59.8043755908574).abs() < 1e-9);
    assert!((report.bleu.unwrap() - 42.528961679069994).abs() < 1e-9);
    assert_eq!(report.halluc_rate, 0.1);
    assert_eq!(report.tng_rate, 0.1);
    assert_eq!(report.off_target, Some(OffTargetCounts { en: 0, src: 1, other: 0 }));

    let flagged: Vec<usize> = records.iter().enumerate().filter(|(_, r)| r.tng_flag).map(|(i, _)| i).collect();
    assert_eq!(flagged, vec![3]);
    let hallucinated: Vec<usize> = records.iter().enumerate().filter(|(_, r)| r.chrf2 < 10.0).map(|(i, _)| i).collect();
    assert_eq!(hallucinated, vec![8]);
    assert_eq!(records[5].predicted_lang, Some(lang("de")));
    for r in &records {
        assert!((r.chrf2 - reference_chrf(&r.hypothesis, &r.reference)).abs() < 1e-9);
    }
}

#[test]
fn identical_files_score_perfectly() {
    let inputs = EvaluateInputs { hypotheses: fixture("eval_ref.txt"), ..fixture_inputs() };
    let (report, _) = cmd_evaluate(&inputs, &EvalOptions::default(), None).unwrap();
    assert_eq!(report.chrf2_mean, 100.0);
    assert_eq!(report.halluc_rate, 0.0);
    assert_eq!(report.tng_rate, 0.0);
    assert_eq!(report.off_target, None);
}

#[test]
fn threshold_and_tng_overrides() {
    let options = EvalOptions { threshold: 20.0, tng: TngParams { n: 2, t: 1 }, ..EvalOptions::default() };
    let (report, _) = cmd_evaluate(&fixture_inputs(), &options, None).unwrap();
    assert_eq!(report.halluc_rate, 0.2);
    assert!(report.tng_rate >= 0.1);
}

#[test]
fn empty_and_misaligned_files_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let inputs = EvaluateInputs { hypotheses: empty.clone(), references: empty.clone(), sources: empty, ..fixture_inputs() };
    assert!(matches!(cmd_evaluate(&inputs, &EvalOptions::default(), None), Err(Error::Empty(_))));

    let short = dir.path().join("short.txt");
    std::fs::write(&short, "one line\n").unwrap();
    let inputs = EvaluateInputs { hypotheses: short, ..fixture_inputs() };
    let err = cmd_evaluate(&inputs, &EvalOptions::default(), None).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("short.txt has 1 lines") && msg.contains("eval_ref.txt has 10 lines"), "{msg}");
    assert_eq!(err.exit_code(), 4);
}

fn text() -> impl proptest::strategy::Strategy<Value = String> {
    "[abc ]{0,30}"
}

proptest! {
    #[test]
    fn chrf_matches_reference(h in text(), r in text()) {
        prop_assert!((chrf2(&h, &r) - reference_chrf(&h, &r)).abs() < 1e-9);
    }

    #[test]
    fn hallucination_rate_monotone_in_threshold(scores in prop::collection::vec(0.0f64..100.0, 1..50), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let records: Vec<EvalRecord> = scores.iter().map(|&c| EvalRecord {
            source: String::new(), hypothesis: String::new(), reference: String::new(),
            chrf2: c, bleu: None, tng_flag: false, predicted_lang: None,
        }).collect();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(hallucination_rate(&records, lo).unwrap() <= hallucination_rate(&records, hi).unwrap());
    }

    #[test]
    fn bleu_bounded(h in "[ab]{1,3}( [ab]{1,3}){0,8}", r in "[ab]{1,3}( [ab]{1,3}){0,8}") {
        let h: Vec<&str> = h.split(' ').collect();
        let r: Vec<&str> = r.split(' ').collect();
        let s = bleu(&h, &r, 4).unwrap();
        prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
    }
}
