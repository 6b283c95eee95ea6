use std::io::Write;
use std::path::{Path, PathBuf};

use super::with_workers;
use crate::error::{Error, Result};
use crate::metrics::{corpus_report, evaluate, CorpusReport, EvalOptions, EvalRecord, LanguageIdentifier};
use crate::vocab::LanguageCode;

/// Lines of a UTF-8 text file, without line terminators.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reads several line-aligned files. Fails if they differ in length or are empty.
pub fn read_aligned(paths: &[&Path]) -> Result<Vec<Vec<String>>> {
    let columns = paths.iter().map(|p| read_lines(p)).collect::<Result<Vec<_>>>()?;
    let counts: Vec<(PathBuf, usize)> = paths.iter().zip(&columns).map(|(p, c)| (p.to_path_buf(), c.len())).collect();
    if counts.windows(2).any(|w| w[0].1 != w[1].1) {
        return Err(Error::LineCountMismatch(counts));
    }
    if columns.first().is_some_and(Vec::is_empty) {
        return Err(Error::Empty("input files have no lines"));
    }
    Ok(columns)
}

/// One line per entry, each followed by a newline.
pub fn write_text(path: &Path, lines: &[String]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// One JSON object per record.
pub fn write_jsonl(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Inputs of the `evaluate` command.
#[derive(Debug, Clone, Default)]
pub struct EvaluateInputs {
    pub hypotheses: PathBuf,
    pub references: PathBuf,
    pub sources: PathBuf,
    /// Needed for off-target buckets.
    pub direction: Option<(LanguageCode, LanguageCode)>,
    pub workers: Option<usize>,
}

/// Scores line-aligned hypothesis, reference and source files.
pub fn cmd_evaluate(
    inputs: &EvaluateInputs,
    options: &EvalOptions,
    lid: Option<&dyn LanguageIdentifier>,
) -> Result<(CorpusReport, Vec<EvalRecord>)> {
    options.tng.validate()?;
    let mut cols = read_aligned(&[&inputs.sources, &inputs.hypotheses, &inputs.references])?.into_iter();
    let (src, hyp, reference) = (cols.next().unwrap_or_default(), cols.next().unwrap_or_default(), cols.next().unwrap_or_default());
    let triples: Vec<_> = src.into_iter().zip(hyp).zip(reference).map(|((s, h), r)| (s, h, r)).collect();
    let records = with_workers(inputs.workers, || evaluate(&triples, options, lid))??;
    let direction = inputs.direction.as_ref().map(|(s, t)| (s, t));
    let report = corpus_report(&records, options, direction, lid)?;
    Ok((report, records))
}
