//! Running one controller over a set of scenarios.

use std::io::Write;

use gather_core::constellation::{ConstellationSpec, Scenario, ScenarioSource};
use gather_core::env::{EnvConfig, EpisodeResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{aggregate, Summary};
use crate::controller::{ControllerSpec, ResolvedController};
use crate::BenchError;

/// Column names of the per-episode results CSV.
pub const ROW_HEADER: &str =
    "scenario_id,n,VR,seed,controller,steps,outcome,connectivity_preserved,gather_fraction,repetition,error";

/// Scenario `k` of the set is `source.scenario(k)` for `k < count`.
#[derive(Clone, Debug)]
pub struct ScenarioSet {
    pub source: ScenarioSource,
    pub count: usize,
}

impl ScenarioSet {
    /// `count` scenarios generated with seeds `template.seed`, `template.seed + 1`, ...
    pub fn generated(template: ConstellationSpec, count: usize) -> Self {
        Self {
            source: ScenarioSource::Generated(template),
            count,
        }
    }

    /// Exactly the given scenarios, in order.
    pub fn fixed(scenarios: Vec<Scenario>) -> Self {
        let count = scenarios.len();
        Self {
            source: ScenarioSource::Fixed(scenarios),
            count,
        }
    }

    /// The spec scenario `k` is generated from, before generation runs.
    fn nominal_spec(&self, k: usize) -> Option<ConstellationSpec> {
        match &self.source {
            ScenarioSource::Generated(t) => Some(t.with_seed(t.seed.wrapping_add(k as u64))),
            ScenarioSource::Fixed(list) => list.get(k).map(|s| s.spec),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteSpec {
    pub scenarios: ScenarioSet,
    pub controller: ControllerSpec,
    /// `None` derives the configuration from each scenario: its visibility
    /// and the default step cut-off for its swarm size.
    pub env: Option<EnvConfig>,
    /// Episodes per scenario. Only the random controller gives different
    /// results across repetitions.
    pub repetitions: usize,
    /// Seed of the controller's own randomness.
    pub seed: u64,
}

impl SuiteSpec {
    pub fn new(scenarios: ScenarioSet, controller: ControllerSpec) -> Self {
        Self {
            scenarios,
            controller,
            env: None,
            repetitions: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.scenarios.count == 0 {
            return Err(BenchError::Spec("a suite needs at least one scenario".into()));
        }
        if self.repetitions == 0 {
            return Err(BenchError::Spec("repetitions must be at least 1".into()));
        }
        if let ScenarioSource::Fixed(list) = &self.scenarios.source {
            if list.len() < self.scenarios.count {
                return Err(BenchError::Spec(format!(
                    "{} scenarios requested but only {} loaded",
                    self.scenarios.count,
                    list.len()
                )));
            }
        }
        if let Some(env) = &self.env {
            env.validate()?;
        }
        Ok(())
    }

    pub fn episodes(&self) -> usize {
        self.scenarios.count * self.repetitions
    }
}

/// One episode of a suite, or the reason it could not be run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteRow {
    pub scenario_id: usize,
    pub repetition: usize,
    pub n: usize,
    #[serde(rename = "VR")]
    pub visibility_ratio: f64,
    pub seed: u64,
    pub controller: String,
    pub result: Result<EpisodeResult, String>,
}

impl SuiteRow {
    pub fn episode(&self) -> Option<&EpisodeResult> {
        self.result.as_ref().ok()
    }

    /// The row as one CSV line (without the newline).
    pub fn csv_line(&self) -> String {
        let head = format!(
            "{},{},{},{},{}",
            self.scenario_id,
            self.n,
            self.visibility_ratio,
            self.seed,
            csv_field(&self.controller)
        );
        match &self.result {
            Ok(r) => format!(
                "{head},{},{},{},{},{},",
                r.steps,
                r.outcome.as_str(),
                r.connectivity_preserved,
                r.final_gather_fraction,
                self.repetition
            ),
            Err(e) => format!("{head},,error,,,{},{}", self.repetition, csv_field(e)),
        }
    }
}

/// Quotes a field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// All rows of a suite in scenario order (repetitions of one scenario adjacent).
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub controller: String,
    pub rows: Vec<SuiteRow>,
}

impl SuiteResult {
    pub fn summary(&self) -> Summary {
        aggregate(&self.rows)
    }

    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_rows_csv(&self.rows, w)
    }
}

pub fn write_rows_csv<W: Write>(rows: &[SuiteRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{ROW_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()
}

/// Runs the suite on the current rayon pool.
pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteResult, BenchError> {
    run_suite_with(spec, |_| {})
}

/// Like [`run_suite`], handing every row to `on_row` as soon as it and all
/// rows before it are finished.
///
/// Episodes are spread over the current rayon pool in blocks; each block is
/// merged in index order, so the rows and their order never depend on the
/// number of threads. A scenario that fails to generate or run becomes an
/// error row and the suite continues.
pub fn run_suite_with(
    spec: &SuiteSpec,
    mut on_row: impl FnMut(&SuiteRow),
) -> Result<SuiteResult, BenchError> {
    spec.validate()?;
    let controller = spec.controller.resolve()?;
    let label = spec.controller.to_string();
    let total = spec.episodes();
    let block = (rayon::current_num_threads() * 4).max(1);
    let mut rows = Vec::with_capacity(total);
    for start in (0..total).step_by(block) {
        let end = (start + block).min(total);
        let done: Vec<SuiteRow> = (start..end)
            .into_par_iter()
            .map(|i| run_row(spec, &controller, &label, i))
            .collect();
        for row in done {
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(SuiteResult {
        controller: label,
        rows,
    })
}

fn run_row(spec: &SuiteSpec, controller: &ResolvedController, label: &str, index: usize) -> SuiteRow {
    let scenario_id = index / spec.repetitions;
    let repetition = index % spec.repetitions;
    let nominal = spec.scenarios.nominal_spec(scenario_id);
    let mut row = SuiteRow {
        scenario_id,
        repetition,
        n: nominal.map_or(0, |s| s.n_agents),
        visibility_ratio: nominal.map_or(f64::NAN, |s| s.visibility_ratio),
        seed: nominal.map_or(0, |s| s.seed),
        controller: label.to_owned(),
        result: Err(String::new()),
    };
    row.result = spec
        .scenarios
        .source
        .scenario(scenario_id as u64)
        .map_err(|e| format!("scenario generation failed: {e}"))
        .and_then(|scenario| {
            let cfg = spec.env.unwrap_or_else(|| EnvConfig {
                visibility: scenario.spec.visibility,
                ..EnvConfig::for_swarm(scenario.state.len())
            });
            controller.run(&scenario.state, &cfg, spec.seed, index as u64, false)
        });
    if let Err(e) = &row.result {
        log::warn!("scenario {scenario_id} (repetition {repetition}): {e}");
    }
    row
}
