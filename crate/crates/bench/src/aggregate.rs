//! Per-group summaries of suite rows.
//!
//! Rows are grouped by (controller, swarm size, visibility ratio). Within a
//! group:
//!
//! - `mean_steps` averages only converged episodes and is empty when none
//!   converged.
//! - `conn_pct` is the mean final largest-component fraction times 100.
//! - `strict_conn_pct` is the share of episodes whose visibility graph stayed
//!   connected at every step, times 100.
//!
//! Error rows count towards `errors` and nothing else.

use std::cmp::Ordering;
use std::io::Write;

use gather_core::env::Outcome;
use serde::Serialize;

use crate::suite::{csv_field, SuiteRow};

pub const SUMMARY_HEADER: &str =
    "controller,n,VR,episodes,errors,converged,mean_steps,conn_pct,strict_conn_pct";

/// Definitions written next to the numbers in the JSON summary.
pub const STEPS_DEFINITION: &str = "mean over converged episodes only; truncated episodes excluded";
pub const CONN_DEFINITION: &str = "mean final largest-component fraction x 100";
pub const STRICT_CONN_DEFINITION: &str =
    "percentage of episodes connected at every step";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub controller: String,
    pub n: usize,
    #[serde(rename = "VR")]
    pub visibility_ratio: f64,
    /// Episodes that ran to an outcome.
    pub episodes: usize,
    pub errors: usize,
    pub converged: usize,
    pub mean_steps: Option<f64>,
    pub conn_pct: Option<f64>,
    pub strict_conn_pct: Option<f64>,
}

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&self.controller),
            self.n,
            self.visibility_ratio,
            self.episodes,
            self.errors,
            self.converged,
            opt(self.mean_steps),
            opt(self.conn_pct),
            opt(self.strict_conn_pct)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub mean_steps: &'static str,
    pub conn_pct: &'static str,
    pub strict_conn_pct: &'static str,
}

impl Default for Metadata {
    fn default() -> Self {
        Self {
            mean_steps: STEPS_DEFINITION,
            conn_pct: CONN_DEFINITION,
            strict_conn_pct: STRICT_CONN_DEFINITION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub metadata: Metadata,
    pub groups: Vec<SummaryRow>,
}

impl Summary {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for g in &self.groups {
            writeln!(w, "{}", g.csv_line())?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }

    /// The group for `(controller, n, vr)`, if any rows fell into it.
    pub fn group(&self, controller: &str, n: usize, vr: f64) -> Option<&SummaryRow> {
        self.groups
            .iter()
            .find(|g| g.controller == controller && g.n == n && g.visibility_ratio == vr)
    }
}

fn group_order(a: &SuiteRow, b: &SuiteRow) -> Ordering {
    a.controller
        .cmp(&b.controller)
        .then(a.n.cmp(&b.n))
        .then(a.visibility_ratio.total_cmp(&b.visibility_ratio))
}

/// Groups rows and computes the summary columns. Groups are sorted by
/// controller, then swarm size, then visibility ratio.
pub fn aggregate(rows: &[SuiteRow]) -> Summary {
    let mut sorted: Vec<&SuiteRow> = rows.iter().collect();
    // Stable sort: rows keep their suite order inside each group.
    sorted.sort_by(|a, b| group_order(a, b));
    let groups = sorted
        .chunk_by(|a, b| group_order(a, b) == Ordering::Equal)
        .map(summarize)
        .collect();
    Summary {
        metadata: Metadata::default(),
        groups,
    }
}

/// One summary over all rows regardless of group; `n` and `VR` are taken
/// from the first row. `None` for no rows.
pub fn overall(rows: &[SuiteRow]) -> Option<SummaryRow> {
    let all: Vec<&SuiteRow> = rows.iter().collect();
    (!all.is_empty()).then(|| summarize(&all))
}

fn summarize(rows: &[&SuiteRow]) -> SummaryRow {
    let first = rows[0];
    let episodes: Vec<_> = rows.iter().filter_map(|r| r.episode()).collect();
    let converged: Vec<f64> = episodes
        .iter()
        .filter(|e| e.outcome == Outcome::Converged)
        .map(|e| e.steps as f64)
        .collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let fractions: Vec<f64> = episodes.iter().map(|e| e.final_gather_fraction * 100.0).collect();
    let strict: Vec<f64> = episodes
        .iter()
        .map(|e| if e.connectivity_preserved { 100.0 } else { 0.0 })
        .collect();
    SummaryRow {
        controller: first.controller.clone(),
        n: first.n,
        visibility_ratio: first.visibility_ratio,
        episodes: episodes.len(),
        errors: rows.len() - episodes.len(),
        converged: converged.len(),
        mean_steps: mean(&converged),
        conn_pct: mean(&fractions),
        strict_conn_pct: mean(&strict),
    }
}
