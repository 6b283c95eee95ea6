//! Experiment plumbing behind the `contradec` binary: configuration, scorer
//! selection, run manifests, corpus evaluation and parameter sweeps.

mod config;
mod evaluate;
mod sweep;
mod translate;

pub use config::{synthetic_lid, ExperimentConfig, Overrides, ScorerSpec, SYNTHETIC_LID_SEED, SYNTHETIC_LID_WORDS};
pub use evaluate::{cmd_evaluate, read_aligned, read_lines, write_jsonl, write_text, EvaluateInputs};
pub use sweep::{cmd_sweep, parse_list, rows_to_csv, SweepGrid, SweepRow};
pub use translate::{cmd_translate, run_experiment, translate_lines, Manifest, RunSummary, SegmentResult};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
