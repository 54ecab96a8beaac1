//! Evaluating a series of saved checkpoints on one fixed scenario set and
//! picking the one to deploy.

use std::cmp::Ordering;
use std::io::Write;
use std::path::PathBuf;

use gather_core::env::EnvConfig;

use crate::aggregate::{overall, SummaryRow};
use crate::controller::ControllerSpec;
use crate::suite::{csv_field, run_suite, ScenarioSet, SuiteResult, SuiteSpec};
use crate::BenchError;

pub const SWEEP_HEADER: &str =
    "checkpoint,episodes,errors,converged,mean_steps,conn_pct,strict_conn_pct,best,error";

/// Outcome of evaluating one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub checkpoint: PathBuf,
    /// The suite, or why the checkpoint could not be evaluated.
    pub result: Result<SuiteResult, String>,
}

impl SweepEntry {
    /// Summary over all scenarios of the set, as one group.
    pub fn totals(&self) -> Option<SummaryRow> {
        overall(&self.result.as_ref().ok()?.rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// Index into `entries` of the selected checkpoint; `None` when every
    /// checkpoint failed.
    pub best: Option<usize>,
}

impl SweepResult {
    pub fn best_entry(&self) -> Option<&SweepEntry> {
        self.best.map(|i| &self.entries[i])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SWEEP_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (i, e) in self.entries.iter().enumerate() {
            let name = csv_field(&e.checkpoint.display().to_string());
            let best = self.best == Some(i);
            match (&e.result, e.totals()) {
                (Ok(_), Some(t)) => writeln!(
                    w,
                    "{name},{},{},{},{},{},{},{best},",
                    t.episodes,
                    t.errors,
                    t.converged,
                    opt(t.mean_steps),
                    opt(t.conn_pct),
                    opt(t.strict_conn_pct)
                )?,
                (Ok(_), None) => writeln!(w, "{name},0,0,0,,,,{best},")?,
                (Err(msg), _) => writeln!(w, "{name},,,,,,,{best},{}", csv_field(msg))?,
            }
        }
        w.flush()
    }
}

/// Ranking key of a checkpoint: higher connectivity first, then fewer
/// steps. No converged episode counts as infinitely many steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub conn_pct: f64,
    pub mean_steps: Option<f64>,
}

impl Score {
    fn steps(&self) -> f64 {
        self.mean_steps.unwrap_or(f64::INFINITY)
    }

    /// `Less` means `self` ranks better.
    pub fn rank(&self, other: &Self) -> Ordering {
        other
            .conn_pct
            .total_cmp(&self.conn_pct)
            .then(self.steps().total_cmp(&other.steps()))
    }
}

/// Index of the best score; the earliest one wins a full tie. Entries that
/// are `None` (failed checkpoints) are never selected.
pub fn select_best(scores: &[Option<Score>]) -> Option<usize> {
    let mut best: Option<(usize, Score)> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(s) = s else { continue };
        if best.is_none_or(|(_, b)| s.rank(&b) == Ordering::Less) {
            best = Some((i, *s));
        }
    }
    best.map(|(i, _)| i)
}

/// Runs the deterministic policy of every checkpoint on `scenarios`.
///
/// An unreadable checkpoint becomes an error entry; the sweep itself only
/// fails on an empty checkpoint list or an invalid scenario set.
pub fn checkpoint_sweep(
    checkpoints: &[PathBuf],
    scenarios: &ScenarioSet,
    env: Option<EnvConfig>,
) -> Result<SweepResult, BenchError> {
    if checkpoints.is_empty() {
        return Err(BenchError::Spec("a sweep needs at least one checkpoint".into()));
    }
    let mut entries = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        let spec = SuiteSpec {
            env,
            ..SuiteSpec::new(scenarios.clone(), ControllerSpec::Policy(path.clone()))
        };
        let result = match run_suite(&spec) {
            Ok(r) => Ok(r),
            Err(BenchError::Checkpoint { message, .. }) => Err(message),
            Err(e) => return Err(e),
        };
        if let Err(msg) = &result {
            log::warn!("checkpoint {}: {msg}", path.display());
        }
        entries.push(SweepEntry {
            checkpoint: path.clone(),
            result,
        });
    }
    let scores: Vec<Option<Score>> = entries
        .iter()
        .map(|e| {
            e.totals().and_then(|t| {
                Some(Score {
                    conn_pct: t.conn_pct?,
                    mean_steps: t.mean_steps,
                })
            })
        })
        .collect();
    let best = select_best(&scores);
    Ok(SweepResult { entries, best })
}
