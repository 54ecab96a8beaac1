//! Which controller a suite runs, and how to build one per episode.

use std::fmt;
use std::path::PathBuf;
use std::process::Command;
use std::str::FromStr;

use gather_core::control::{Analytical, Controller, RandomController, Stationary};
use gather_core::env::{run_episode, EnvConfig, EpisodeResult};
use gather_core::geometry::SwarmState;
use gather_nn::{load_weights, PolicyController, PolicyNet};
use gather_protocol::ExternalController;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

/// A controller named on the command line or in a suite.
///
/// Textual forms: `analytical`, `stationary`, `random`, `policy:<weights>`
/// and `external:<program> [args...]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ControllerSpec {
    Analytical,
    Stationary,
    /// Uniform random actions, seeded per episode from the suite seed.
    Random,
    /// Deterministic policy read from a weight file.
    Policy(PathBuf),
    /// A child process speaking the controller protocol on stdin/stdout.
    /// The first element is the program.
    External(Vec<String>),
}

impl FromStr for ControllerSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytical" => return Ok(Self::Analytical),
            "stationary" => return Ok(Self::Stationary),
            "random" => return Ok(Self::Random),
            _ => {}
        }
        if let Some(path) = s.strip_prefix("policy:") {
            if path.is_empty() {
                return Err(BenchError::Spec("policy controller needs a weight file".into()));
            }
            return Ok(Self::Policy(PathBuf::from(path)));
        }
        if let Some(cmd) = s.strip_prefix("external:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err(BenchError::Spec("external controller needs a command".into()));
            }
            return Ok(Self::External(argv));
        }
        Err(BenchError::Spec(format!(
            "unknown controller {s:?}; expected analytical, stationary, random, \
             policy:<weights> or external:<command>"
        )))
    }
}

impl fmt::Display for ControllerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Analytical => f.write_str("analytical"),
            Self::Stationary => f.write_str("stationary"),
            Self::Random => f.write_str("random"),
            Self::Policy(p) => write!(f, "policy:{}", p.display()),
            Self::External(argv) => write!(f, "external:{}", argv.join(" ")),
        }
    }
}

impl ControllerSpec {
    /// Loads whatever the controller needs once per suite.
    pub fn resolve(&self) -> Result<ResolvedController, BenchError> {
        Ok(match self {
            Self::Analytical => ResolvedController::Analytical,
            Self::Stationary => ResolvedController::Stationary,
            Self::Random => ResolvedController::Random,
            Self::Policy(path) => ResolvedController::Policy(Box::new(
                load_weights(path).map_err(|e| BenchError::Checkpoint {
                    path: path.clone(),
                    message: e.to_string(),
                })?,
            )),
            Self::External(argv) => ResolvedController::External(argv.clone()),
        })
    }
}

/// A controller ready to run episodes from any worker thread.
pub enum ResolvedController {
    Analytical,
    Stationary,
    Random,
    Policy(Box<PolicyNet<f32>>),
    External(Vec<String>),
}

impl ResolvedController {
    /// Runs one episode. `stream` selects the random stream of the random
    /// controller so that every episode draws its own, fixed sequence.
    pub fn run(
        &self,
        initial: &SwarmState,
        cfg: &EnvConfig,
        seed: u64,
        stream: u64,
        record_trace: bool,
    ) -> Result<EpisodeResult, String> {
        let run = |c: &mut dyn Controller| {
            run_episode(initial, cfg, c, record_trace).map_err(|e| e.to_string())
        };
        match self {
            Self::Analytical => run(&mut Analytical),
            Self::Stationary => run(&mut Stationary),
            Self::Random => run(&mut RandomController::new(episode_rng(seed, stream))),
            Self::Policy(net) => run(&mut PolicyController::new(net)),
            Self::External(argv) => {
                let mut ext = ExternalController::spawn(Command::new(&argv[0]).args(&argv[1..]))
                    .map_err(|e| format!("cannot start external controller: {e}"))?;
                let result = run(&mut ext)?;
                ext.end_episode(&result).map_err(|e| e.to_string())?;
                ext.close().map_err(|e| e.to_string())?;
                Ok(result)
            }
        }
    }
}

/// Random source of episode `stream` under `seed`.
///
/// Stream 0 is what the constellation generator uses for a given seed, so
/// episode streams start at 1 and never replay a generator sequence.
pub fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_add(1));
    rng
}
