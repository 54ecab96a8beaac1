//! Proximal policy optimization with one policy shared by every agent.
//!
//! Each agent of each environment contributes its own transition stream
//! (own observation, own per-agent reward), and all streams train the same
//! network. One environment step of an `N`-agent swarm therefore yields `N`
//! transitions, and batch sizes and step budgets count transitions.

pub mod buffer;
pub mod config;
pub mod rollout;
pub mod train;
pub mod update;

pub use buffer::{compute_gae, RolloutBuffer};
pub use config::{Phase, TrainerConfig};
pub use rollout::{Collector, EpisodeSummary};
pub use train::{train, TrainSummary, Trainer, UpdateStats};
pub use update::{clipped_surrogate, ppo_update, LossStats};

#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    #[error("invalid trainer configuration: {0}")]
    Config(String),
    #[error("environment {env} failed at step {t}: {source}")]
    Env {
        env: usize,
        t: u64,
        #[source]
        source: gather_core::Error,
    },
    #[error("non-finite loss in epoch {epoch}, minibatch {minibatch}: {dump}")]
    NonFinite {
        epoch: usize,
        minibatch: usize,
        dump: String,
    },
    #[error(transparent)]
    Network(#[from] gather_nn::NnError),
    #[error(transparent)]
    Weights(#[from] gather_nn::WeightError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
