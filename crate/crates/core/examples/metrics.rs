//! The evaluation battery on a handful of hand-written segments.

use contrastive_decoding::metrics::{
    bleu, chrf2, corpus_report, evaluate, tng_flag, EvalOptions, NaiveBayesLid, TngParams,
};
use contrastive_decoding::prelude::*;

fn main() -> Result<()> {
    println!("chrF2(identical)   = {:.2}", chrf2("the cat sat on the mat", "the cat sat on the mat"));
    println!("chrF2(partial)     = {:.4}", chrf2("cat sat on", "the cat sat on the mat"));
    let hyp: Vec<&str> = "the cat sat on the mat".split(' ').collect();
    let reference: Vec<&str> = "the cat sat on a mat".split(' ').collect();
    println!("BLEU               = {:.4}", bleu(&hyp, &reference, 4)?);

    let tng = TngParams::default();
    let loop_hyp = "a b c d a b c d a b c d";
    println!("TNG(oscillation)   = {}", tng_flag("x y z w", loop_hyp, &tng));
    println!("TNG(copy of src)   = {}", tng_flag(loop_hyp, loop_hyp, &tng));

    let lid = NaiveBayesLid::train([
        ("en".parse()?, "the cat sat on the mat and the dog ran to the house"),
        ("de".parse()?, "die katze sass auf der matte und der hund lief zum haus"),
    ])?;
    let triples = vec![
        ("der hund".to_string(), "the dog".to_string(), "the dog".to_string()),
        ("die katze".to_string(), "der katze".to_string(), "the cat".to_string()),
        ("das haus".to_string(), "mat mat mat mat mat mat mat mat".to_string(), "the house".to_string()),
    ];
    let options = EvalOptions::default();
    let records = evaluate(&triples, &options, Some(&lid))?;
    for r in &records {
        println!("{:<34} chrF2 {:>6.2}  tng {}  lang {:?}", r.hypothesis, r.chrf2, r.tng_flag, r.predicted_lang);
    }
    let (de, en): (LanguageCode, LanguageCode) = ("de".parse()?, "en".parse()?);
    let report = corpus_report(&records, &options, Some((&de, &en)), Some(&lid))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
