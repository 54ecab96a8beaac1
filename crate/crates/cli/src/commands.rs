//! One function per subcommand.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gather_bench::controller::{episode_rng, ResolvedController};
use gather_bench::{
    aggregate, checkpoint_sweep, render_trace, run_suite_with, ControllerSpec, RenderOptions,
    ScenarioSet, SuiteSpec,
};
use gather_core::constellation::{ConstellationSpec, Scenario};
use gather_core::control::{Analytical, Controller, RandomController, Stationary};
use gather_core::env::{EnvConfig, EpisodeTrace};
use gather_nn::PolicyController;
use gather_ppo::{Phase, TrainerConfig};
use gather_protocol::{run_controller, serve_stdio, serve_unix, SessionSettings};

use crate::cli::{
    BenchArgs, ControllerArgs, GenerateArgs, GlobalArgs, RenderArgs, RunArgs, ServeArgs,
    SweepArgs, SwarmArgs, TrainArgs,
};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SWEEP_FILE: &str = "sweep.csv";

/// `p` itself when absolute, otherwise `p` under the output directory.
fn output_path(g: &GlobalArgs, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_owned()
    } else {
        g.out_dir.join(p)
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    create_parent(path)?;
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn template(swarm: &SwarmArgs, seed: u64) -> ConstellationSpec {
    ConstellationSpec::new(swarm.n, swarm.visibility, swarm.visibility_ratio, seed)
}

/// Environment for `scenario`: its own visibility, the default cut-off for
/// its size unless overridden.
fn env_for(scenario: &Scenario, cutoff: Option<u64>) -> EnvConfig {
    let base = EnvConfig::for_swarm(scenario.state.len());
    EnvConfig {
        visibility: scenario.spec.visibility,
        cutoff_steps: cutoff.unwrap_or(base.cutoff_steps),
        ..base
    }
}

/// Scenario files of `dir` in file-name order.
fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read scenario directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    if paths.is_empty() {
        bail!("no scenario files (*.json) in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| Scenario::load(p).with_context(|| format!("cannot load scenario {}", p.display())))
        .collect()
}

pub fn generate(g: &GlobalArgs, a: &GenerateArgs) -> Result<()> {
    let mut spec = template(&a.swarm, g.seed);
    if let Some(m) = a.min_separation {
        spec.min_separation = m;
    }
    spec.validate()?;
    fs::create_dir_all(&g.out_dir)
        .with_context(|| format!("cannot create {}", g.out_dir.display()))?;
    let mut stdout = io::stdout().lock();
    for k in 0..a.count {
        let s = spec.with_seed(g.seed.wrapping_add(k as u64));
        let scenario = Scenario::generate(s).with_context(|| format!("scenario {k} (seed {})", s.seed))?;
        let path = g.out_dir.join(format!("{}_{k:04}.json", a.prefix));
        scenario
            .save(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        writeln!(stdout, "{}", path.display())?;
    }
    Ok(())
}

pub fn run(g: &GlobalArgs, a: &RunArgs) -> Result<()> {
    let scenario = match &a.scenario {
        Some(p) => Scenario::load(p).with_context(|| format!("cannot load scenario {}", p.display()))?,
        None => Scenario::generate(template(&a.swarm, g.seed))?,
    };
    let controller: ControllerSpec = a.controller.parse()?;
    let resolved = controller.resolve()?;
    let cfg = env_for(&scenario, a.cutoff);
    cfg.validate()?;
    let result = resolved
        .run(&scenario.state, &cfg, g.seed, 0, a.trace.is_some())
        .map_err(anyhow::Error::msg)?;
    if let (Some(p), Some(trace)) = (&a.trace, &result.trace) {
        let path = output_path(g, p);
        trace.write_jsonl(create_file(&path)?)?;
    }
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

pub fn bench(g: &GlobalArgs, a: &BenchArgs) -> Result<()> {
    let controller: ControllerSpec = a.controller.parse()?;
    let env = |n: usize| {
        a.cutoff.map(|c| EnvConfig {
            visibility: a.visibility,
            cutoff_steps: c,
            ..EnvConfig::for_swarm(n)
        })
    };
    let mut suites = Vec::new();
    match &a.scenario_dir {
        Some(dir) => {
            let list = load_scenario_dir(dir)?;
            let env = a.cutoff.map(|c| EnvConfig {
                cutoff_steps: c,
                ..env_for(&list[0], None)
            });
            suites.push(SuiteSpec {
                env,
                ..SuiteSpec::new(ScenarioSet::fixed(list), controller.clone())
            });
        }
        None => {
            for &n in &a.n {
                for &vr in &a.visibility_ratio {
                    let spec = ConstellationSpec::new(n, a.visibility, vr, g.seed);
                    suites.push(SuiteSpec {
                        env: env(n),
                        ..SuiteSpec::new(ScenarioSet::generated(spec, a.count), controller.clone())
                    });
                }
            }
        }
    }
    fs::create_dir_all(&g.out_dir)?;
    let results_path = g.out_dir.join(RESULTS_FILE);
    let mut results = create_file(&results_path)?;
    writeln!(results, "{}", gather_bench::suite::ROW_HEADER)?;
    let mut rows = Vec::new();
    for mut spec in suites {
        spec.repetitions = a.repetitions;
        spec.seed = g.seed;
        let mut write_err = None;
        let suite = run_suite_with(&spec, |row| {
            if write_err.is_none() {
                write_err = writeln!(results, "{}", row.csv_line()).err();
            }
        })?;
        if let Some(e) = write_err {
            return Err(e).with_context(|| format!("cannot write {}", results_path.display()));
        }
        results.flush()?;
        rows.extend(suite.rows);
    }
    let summary = aggregate(&rows);
    summary.write_csv(create_file(&g.out_dir.join(SUMMARY_CSV))?)?;
    fs::write(g.out_dir.join(SUMMARY_JSON), summary.to_json())?;
    summary.write_csv(io::stdout().lock())?;
    let errors = rows.iter().filter(|r| r.result.is_err()).count();
    if errors > 0 {
        log::warn!("{errors} of {} episodes failed; see {}", rows.len(), results_path.display());
    }
    Ok(())
}

pub fn train(g: &GlobalArgs, a: &TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<TrainerConfig>(&text)
                .with_context(|| format!("invalid trainer configuration {}", p.display()))?
        }
        None => TrainerConfig::default(),
    };
    cfg.seed = g.seed;
    if let Some(v) = a.total_steps {
        cfg.total_steps = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.n_envs {
        cfg.n_envs = v;
    }
    if let Some(v) = a.checkpoint_interval {
        cfg.checkpoint_interval = v;
    }
    if a.n.is_some() || a.visibility_ratio.is_some() {
        let first = cfg.curriculum.first().copied().unwrap_or(Phase {
            start_step: 0,
            n_agents: 4,
            visibility_ratio: 0.5,
        });
        cfg.curriculum = vec![Phase {
            start_step: 0,
            n_agents: a.n.unwrap_or(first.n_agents),
            visibility_ratio: a.visibility_ratio.unwrap_or(first.visibility_ratio),
        }];
    }
    let summary = gather_ppo::train(cfg, &g.out_dir, |s| {
        log::info!(
            "update {} steps {} mean_return {:.4} episodes {} policy_loss {:.5} value_loss {:.5}",
            s.update,
            s.steps,
            s.mean_return,
            s.episodes,
            s.policy_loss,
            s.value_loss
        );
    })?;
    for c in &summary.checkpoints {
        println!("{}", c.display());
    }
    Ok(())
}

/// Expands directories into their weight files, sorted by name.
fn expand_checkpoints(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            found.retain(|f| f.extension().is_some_and(|e| e == "s2pw"));
            found.sort();
            if found.is_empty() {
                bail!("no weight files (*.s2pw) in {}", p.display());
            }
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn sweep(g: &GlobalArgs, a: &SweepArgs) -> Result<()> {
    let checkpoints = expand_checkpoints(&a.checkpoints)?;
    let (set, env) = match &a.scenario_dir {
        Some(dir) => {
            let list = load_scenario_dir(dir)?;
            let env = a.cutoff.map(|c| EnvConfig {
                cutoff_steps: c,
                ..env_for(&list[0], None)
            });
            (ScenarioSet::fixed(list), env)
        }
        None => {
            let env = a.cutoff.map(|c| EnvConfig {
                visibility: a.swarm.visibility,
                cutoff_steps: c,
                ..EnvConfig::for_swarm(a.swarm.n)
            });
            (ScenarioSet::generated(template(&a.swarm, g.seed), a.count), env)
        }
    };
    let result = checkpoint_sweep(&checkpoints, &set, env)?;
    fs::create_dir_all(&g.out_dir)?;
    result.write_csv(create_file(&g.out_dir.join(SWEEP_FILE))?)?;
    result.write_csv(io::stdout().lock())?;
    match result.best_entry() {
        Some(best) => log::info!("selected {}", best.checkpoint.display()),
        None => bail!("no checkpoint could be evaluated"),
    }
    Ok(())
}

pub fn render(g: &GlobalArgs, a: &RenderArgs) -> Result<()> {
    let f = File::open(&a.trace).with_context(|| format!("cannot open {}", a.trace.display()))?;
    let trace = EpisodeTrace::read_jsonl(BufReader::new(f))
        .with_context(|| format!("invalid trace {}", a.trace.display()))?;
    let out = match &a.output {
        Some(p) => output_path(g, p),
        None => {
            let stem = a.trace.file_stem().unwrap_or("trace".as_ref());
            g.out_dir.join(Path::new(stem).with_extension("svg"))
        }
    };
    if !(a.width.is_finite() && a.width > 0.0) {
        bail!("--width must be positive");
    }
    let opts = RenderOptions {
        width: a.width,
        visibility_discs: a.discs,
    };
    create_parent(&out)?;
    render_trace(&trace, &out, &opts).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{}", out.display());
    Ok(())
}

pub fn serve(g: &GlobalArgs, a: &ServeArgs) -> Result<()> {
    let base = EnvConfig::for_swarm(a.swarm.n);
    let settings = SessionSettings {
        n_agents: a.swarm.n,
        visibility: a.swarm.visibility,
        visibility_ratio: a.swarm.visibility_ratio,
        s_max: base.s_max,
        conv_radius: base.conv_radius,
        cutoff_steps: a.cutoff,
        reward: base.reward,
        first_seed: g.seed,
    };
    match &a.socket {
        Some(path) => {
            let ends = serve_unix(path, settings, a.max_sessions)?;
            for (i, end) in ends.iter().enumerate() {
                log::info!("session {i} ended: {end:?}");
            }
        }
        None => {
            let end = serve_stdio(settings)?;
            log::info!("session ended: {end:?}");
        }
    }
    Ok(())
}

pub fn controller(g: &GlobalArgs, a: &ControllerArgs) -> Result<()> {
    let spec: ControllerSpec = a.controller.parse()?;
    let resolved = spec.resolve()?;
    let mut c: Box<dyn Controller + '_> = match &resolved {
        ResolvedController::Analytical => Box::new(Analytical),
        ResolvedController::Stationary => Box::new(Stationary),
        ResolvedController::Random => Box::new(RandomController::new(episode_rng(g.seed, 0))),
        ResolvedController::Policy(net) => Box::new(PolicyController::new(net)),
        ResolvedController::External(_) => bail!("an external controller cannot serve as one"),
    };
    let stdin = io::stdin();
    run_controller(&mut *c, stdin.lock(), io::stdout().lock())?;
    Ok(())
}

