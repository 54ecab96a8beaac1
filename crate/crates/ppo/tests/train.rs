//! Short end-to-end training runs: output files, checkpoint cadence and
//! reproducibility.

use std::path::Path;

use gather_core::constellation::{generate, ConstellationSpec};
use gather_core::env::{run_episode, Outcome};
use gather_nn::{load_weights, PolicyController};
use gather_ppo::train::{checkpoint_name, CONFIG_FILE, LOG_FILE, LOG_HEADER};
use gather_ppo::{train, Phase, TrainSummary, TrainerConfig};

/// Two updates of 256 transitions on two-agent swarms.
fn small_config() -> TrainerConfig {
    TrainerConfig {
        batch_size: 256,
        n_envs: 2,
        total_steps: 512,
        checkpoint_interval: 256,
        curriculum: vec![Phase {
            start_step: 0,
            n_agents: 2,
            visibility_ratio: 0.5,
        }],
        ..TrainerConfig::default()
    }
}

fn run(cfg: TrainerConfig, dir: &Path) -> TrainSummary {
    train(cfg, dir, |_| {}).unwrap()
}

#[test]
fn short_run_writes_config_log_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let mut seen = Vec::new();
    let summary = train(cfg.clone(), dir.path(), |s| seen.push(s.update)).unwrap();

    assert_eq!(seen, [1, 2]);
    assert_eq!(summary.updates.len(), 2);
    assert_eq!(summary.updates[1].steps, 512);
    let names: Vec<_> = summary
        .checkpoints
        .iter()
        .map(|p| p.file_name().unwrap().to_str().unwrap().to_owned())
        .collect();
    assert_eq!(names, [checkpoint_name(0), checkpoint_name(256), checkpoint_name(512)]);

    let log = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
    let lines: Vec<_> = log.lines().collect();
    assert_eq!(lines[0], LOG_HEADER);
    assert_eq!(lines.len(), 3);
    for (line, stats) in lines[1..].iter().zip(&summary.updates) {
        assert_eq!(*line, stats.csv_row());
        assert_eq!(line.split(',').count(), LOG_HEADER.split(',').count());
    }

    let saved: TrainerConfig =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap()).unwrap();
    assert_eq!(saved, cfg);

    let last = load_weights(summary.checkpoints.last().unwrap()).unwrap();
    assert_eq!(last.params(), summary.net.params());
}

#[test]
fn identical_seeds_give_identical_runs_under_any_thread_count() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run(small_config(), dirs[0].path()));
    let b = three.install(|| run(small_config(), dirs[1].path()));
    for (x, y) in a.checkpoints.iter().zip(&b.checkpoints) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    assert_eq!(
        std::fs::read(&a.log_path).unwrap(),
        std::fs::read(&b.log_path).unwrap()
    );

    let c = run(TrainerConfig { seed: 1, ..small_config() }, dirs[2].path());
    assert_ne!(a.net.params(), c.net.params());
}

#[test]
fn updates_without_finished_episodes_report_nan_returns() {
    // 128 transitions per environment of a 4-agent swarm is 32 steps, far
    // below the cut-off, so no episode can end unless it converges early.
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainerConfig {
        batch_size: 256,
        total_steps: 256,
        curriculum: vec![Phase {
            start_step: 0,
            n_agents: 4,
            visibility_ratio: 1.0,
        }],
        ..small_config()
    };
    let summary = run(cfg, dir.path());
    let stats = summary.updates[0];
    assert_eq!(stats.episodes, 0);
    assert!(stats.mean_return.is_nan());
    assert!(stats.policy_loss.is_finite() && stats.value_loss.is_finite());
}

#[test]
fn invalid_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        TrainerConfig { batch_size: 0, ..small_config() },
        TrainerConfig { gamma: 1.5, ..small_config() },
        TrainerConfig { curriculum: vec![], ..small_config() },
        TrainerConfig {
            curriculum: vec![Phase {
                start_step: 0,
                n_agents: 2,
                visibility_ratio: 1.5,
            }],
            ..small_config()
        },
    ] {
        assert!(train(cfg, dir.path(), |_| {}).is_err());
    }
}

#[test]
fn trained_checkpoint_drives_a_swarm() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(small_config(), dir.path());
    let net = load_weights(summary.checkpoints.last().unwrap()).unwrap();
    let state = generate(&ConstellationSpec::new(2, 50.0, 0.5, 77)).unwrap();
    let env = gather_core::env::EnvConfig {
        cutoff_steps: 50,
        ..gather_core::env::EnvConfig::for_swarm(2)
    };
    let result = run_episode(&state, &env, &mut PolicyController::new(&net), false).unwrap();
    assert!(result.steps <= 50);
    assert!(matches!(result.outcome, Outcome::Converged | Outcome::Truncated));
}
