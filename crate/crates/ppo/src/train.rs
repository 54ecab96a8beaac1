//! The training loop: collect, update, log, checkpoint.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gather_nn::weights::save_weights;
use gather_nn::{Adam, NetSpec, PolicyNet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Phase, TrainerConfig};
use crate::rollout::{Collector, EpisodeSummary};
use crate::update::ppo_update;
use crate::PpoError;

pub const LOG_FILE: &str = "train_log.csv";
pub const CONFIG_FILE: &str = "train_config.json";
pub const LOG_HEADER: &str =
    "update,steps,mean_return,mean_episode_len,connectivity_rate,policy_loss,value_loss,approx_kl";

/// One row of the training log.
///
/// Episode statistics cover the episodes that finished during the update's
/// rollout and are NaN when none did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateStats {
    pub update: u64,
    /// Transitions consumed so far, including this update.
    pub steps: u64,
    pub episodes: usize,
    pub mean_return: f64,
    pub mean_episode_len: f64,
    pub connectivity_rate: f64,
    pub convergence_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
}

impl UpdateStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.update,
            self.steps,
            self.mean_return,
            self.mean_episode_len,
            self.connectivity_rate,
            self.policy_loss,
            self.value_loss,
            self.approx_kl
        )
    }
}

fn mean_of(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Stateful trainer; [`train`] drives it to completion.
pub struct Trainer {
    cfg: TrainerConfig,
    net: PolicyNet<f32>,
    adam: Adam,
    collector: Collector,
    phase: Phase,
    steps: u64,
    updates: u64,
    sample_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(cfg: TrainerConfig) -> Result<Self, PpoError> {
        cfg.validate()?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let net = PolicyNet::new(NetSpec::standard(), &mut init_rng);
        Self::with_net(cfg, net)
    }

    /// Starts from given weights (fine-tuning or tests).
    pub fn with_net(cfg: TrainerConfig, net: PolicyNet<f32>) -> Result<Self, PpoError> {
        cfg.validate()?;
        let phase = *cfg.phase_at(0);
        let collector = Collector::new(&cfg, &phase, 0)?;
        let mut sample_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        sample_rng.set_stream(1);
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        shuffle_rng.set_stream(2);
        Ok(Self {
            adam: Adam::new(cfg.lr),
            cfg,
            net,
            collector,
            phase,
            steps: 0,
            updates: 0,
            sample_rng,
            shuffle_rng,
        })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn net(&self) -> &PolicyNet<f32> {
        &self.net
    }

    pub fn into_net(self) -> PolicyNet<f32> {
        self.net
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn collector_mut(&mut self) -> &mut Collector {
        &mut self.collector
    }

    pub fn is_finished(&self) -> bool {
        self.steps >= self.cfg.total_steps
    }

    /// One rollout plus one PPO update.
    pub fn update_once(&mut self) -> Result<UpdateStats, PpoError> {
        let phase = *self.cfg.phase_at(self.steps);
        if phase != self.phase {
            log::info!(
                "curriculum: switching to {} agents, VR {} at step {}",
                phase.n_agents,
                phase.visibility_ratio,
                self.steps
            );
            let next = self.collector.next_scenario();
            self.collector = Collector::new(&self.cfg, &phase, next)?;
            self.phase = phase;
        }
        let (mut buf, episodes) = self.collector.collect(
            &self.net,
            &mut self.sample_rng,
            self.cfg.batch_size,
            self.cfg.gamma,
            self.cfg.gae_lambda,
        )?;
        buf.normalize_advantages();
        let loss = ppo_update(&mut self.net, &mut self.adam, &buf, &self.cfg, &mut self.shuffle_rng)?;
        self.steps += buf.len() as u64;
        self.updates += 1;
        Ok(self.stats(&episodes, loss))
    }

    fn stats(&self, episodes: &[EpisodeSummary], loss: crate::update::LossStats) -> UpdateStats {
        let rate = |f: fn(&EpisodeSummary) -> bool| {
            mean_of(episodes.iter().map(|e| if f(e) { 1.0 } else { 0.0 }))
        };
        UpdateStats {
            update: self.updates,
            steps: self.steps,
            episodes: episodes.len(),
            mean_return: mean_of(episodes.iter().map(|e| e.mean_return)),
            mean_episode_len: mean_of(episodes.iter().map(|e| e.length as f64)),
            connectivity_rate: rate(|e| e.connectivity_preserved),
            convergence_rate: rate(|e| e.converged),
            policy_loss: loss.policy_loss,
            value_loss: loss.value_loss,
            approx_kl: loss.approx_kl,
        }
    }
}

/// What a finished training run produced.
#[derive(Debug)]
pub struct TrainSummary {
    pub updates: Vec<UpdateStats>,
    pub checkpoints: Vec<PathBuf>,
    pub log_path: PathBuf,
    pub net: PolicyNet<f32>,
}

pub fn checkpoint_name(steps: u64) -> String {
    format!("ckpt_{steps:010}.s2pw")
}

/// Trains until `cfg.total_steps`, writing checkpoints, the log and the
/// configuration into `out_dir`. `on_update` sees every log row.
pub fn train(
    cfg: TrainerConfig,
    out_dir: &Path,
    mut on_update: impl FnMut(&UpdateStats),
) -> Result<TrainSummary, PpoError> {
    fs::create_dir_all(out_dir)?;
    let mut trainer = Trainer::new(cfg)?;
    let cfg_json = serde_json::to_string_pretty(trainer.config()).expect("config serializes");
    fs::write(out_dir.join(CONFIG_FILE), cfg_json + "\n")?;
    let log_path = out_dir.join(LOG_FILE);
    let mut log = BufWriter::new(File::create(&log_path)?);
    writeln!(log, "{LOG_HEADER}")?;
    log.flush()?;

    let mut checkpoints = Vec::new();
    let mut save = |net: &PolicyNet<f32>, steps: u64| -> Result<(), PpoError> {
        let path = out_dir.join(checkpoint_name(steps));
        save_weights(net, &path)?;
        checkpoints.push(path);
        Ok(())
    };
    save(trainer.net(), 0)?;
    let mut updates = Vec::new();
    let mut last_saved = 0;
    while !trainer.is_finished() {
        let before = trainer.steps();
        let stats = trainer.update_once()?;
        writeln!(log, "{}", stats.csv_row())?;
        log.flush()?;
        log::info!(
            "update {} steps {} return {:.3} len {:.1} conn {:.2} conv {:.2} kl {:.2e}",
            stats.update,
            stats.steps,
            stats.mean_return,
            stats.mean_episode_len,
            stats.connectivity_rate,
            stats.convergence_rate,
            stats.approx_kl
        );
        on_update(&stats);
        updates.push(stats);
        let interval = trainer.config().checkpoint_interval;
        if stats.steps / interval > before / interval {
            save(trainer.net(), stats.steps)?;
            last_saved = stats.steps;
        }
    }
    if trainer.steps() != last_saved {
        save(trainer.net(), trainer.steps())?;
    }
    Ok(TrainSummary {
        updates,
        checkpoints,
        log_path,
        net: trainer.into_net(),
    })
}
