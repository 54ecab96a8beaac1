//! Evaluation harness for gathering controllers.
//!
//! - [`suite`]: run one controller over a scenario set, one row per episode.
//! - [`aggregate`]: group rows by (controller, N, VR) into summary tables.
//! - [`sweep`]: evaluate several checkpoints on one fixed set and pick one.
//! - [`render`]: draw a recorded episode as SVG.

pub mod aggregate;
pub mod controller;
pub mod render;
pub mod suite;
pub mod sweep;

use std::path::PathBuf;

pub use aggregate::{aggregate, Summary, SummaryRow};
pub use controller::ControllerSpec;
pub use render::{render_svg, render_trace, RenderOptions};
pub use suite::{run_suite, run_suite_with, ScenarioSet, SuiteResult, SuiteRow, SuiteSpec};
pub use sweep::{checkpoint_sweep, select_best, Score, SweepEntry, SweepResult};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid suite: {0}")]
    Spec(String),
    #[error("cannot load checkpoint {}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] gather_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
