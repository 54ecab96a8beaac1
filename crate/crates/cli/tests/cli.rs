//! End-to-end behavior of the `gather` binary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use gather_core::constellation::Scenario;
use gather_core::geometry::distance;

const BIN: &str = env!("CARGO_BIN_EXE_gather");

const SUBCOMMANDS: [&str; 9] = [
    "generate", "run", "bench", "train", "sweep", "render", "serve", "controller", "reference",
];
const GLOBAL_FLAGS: [&str; 4] = ["--seed", "--threads", "--out-dir", "--log-level"];

fn gather(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("GATHER_OUT_DIR")
        .env_remove("GATHER_LOG_LEVEL")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = gather(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every regular file below `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Breadth-first connectivity under `radius`, independent of the library graph code.
fn bfs_connected(points: &[gather_core::Position], radius: f64) -> bool {
    let mut seen = vec![false; points.len()];
    let mut queue = vec![0];
    seen[0] = true;
    while let Some(i) = queue.pop() {
        for j in 0..points.len() {
            if !seen[j] && distance(points[i], points[j]) <= radius {
                seen[j] = true;
                queue.push(j);
            }
        }
    }
    seen.iter().all(|&v| v)
}

fn two_agents_40(dir: &Path) -> PathBuf {
    let p = dir.join("two_agents_40.json");
    std::fs::write(
        &p,
        r#"{"version":1,"n":2,"V":50.0,"VR":1.0,"seed":0,"min_separation":1.0,"positions":[[0.0,0.0],[40.0,0.0]]}"#,
    )
    .unwrap();
    p
}

#[test]
fn help_documents_every_flag_and_exits_zero() {
    for sub in SUBCOMMANDS {
        let out = gather(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in GLOBAL_FLAGS {
            assert!(text.contains(flag), "{sub} --help misses {flag}");
        }
    }
    let run = ok(&["run", "--help"]);
    for flag in ["--scenario", "--controller", "--trace", "--cutoff", "--n", "--V", "--VR"] {
        assert!(run.contains(flag), "run --help misses {flag}");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["frobnicate"],
        vec!["generate", "--bogus"],
        vec!["generate", "--n", "ten"],
        vec!["render"],
        vec!["sweep"],
        vec![],
    ] {
        let out = gather(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("Usage") || err.contains("--help"), "{args:?}: {err}");
    }
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--scenario", "/nonexistent/s.json"],
        vec!["generate", "--VR", "1.5"],
        vec!["run", "--controller", "wizard"],
        vec!["render", "--trace", "/nonexistent/t.jsonl"],
    ] {
        let mut full = args.clone();
        full.extend(["--out-dir", s(dir.path())]);
        let out = gather(&full);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
}

#[test]
fn generate_writes_connected_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "generate", "--n", "10", "--V", "50", "--VR", "0.75", "--count", "100", "--seed", "7",
        "--out-dir", s(dir.path()),
    ]);
    assert_eq!(out.lines().count(), 100);
    let files = snapshot(dir.path());
    assert_eq!(files.len(), 100);
    for (k, name) in files.keys().enumerate() {
        let sc = Scenario::load(dir.path().join(name)).unwrap();
        assert_eq!(sc.spec.seed, 7 + k as u64);
        assert_eq!(sc.state.len(), 10);
        assert!(bfs_connected(&sc.state.positions, 37.5), "{name:?}");
    }
}

#[test]
fn run_two_agents_converges_at_step_30() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = two_agents_40(dir.path());
    let out = ok(&[
        "run", "--scenario", s(&scenario), "--controller", "analytical", "--trace", "out.jsonl",
        "--out-dir", s(dir.path()),
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["outcome"], "converged");
    assert_eq!(v["steps"], 30);
    let trace = std::fs::read_to_string(dir.path().join("out.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 31);
    let svg = ok(&["render", "--trace", s(&dir.path().join("out.jsonl")), "--out-dir", s(dir.path())]);
    assert!(svg.trim().ends_with("out.svg"));
    let svg = std::fs::read_to_string(dir.path().join("out.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["generate", "--n", "3", "--count", "2"])
        .env("GATHER_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(snapshot(dir.path()).len(), 2);
}

#[test]
fn bench_outputs_do_not_depend_on_threads() {
    let run = |threads: &str, controller: &str| {
        let dir = tempfile::tempdir().unwrap();
        ok(&[
            "bench", "--controller", controller, "--n", "4,6", "--VR", "0.5,1.0", "--count", "6",
            "--seed", "5", "--threads", threads, "--out-dir", s(dir.path()),
        ]);
        snapshot(dir.path())
    };
    for controller in ["analytical", "random"] {
        let one = run("1", controller);
        assert_eq!(one.len(), 3);
        assert_eq!(one, run("3", controller), "{controller}");
    }
}

#[test]
fn bench_summary_has_one_group_per_size_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "bench", "--controller", "stationary", "--n", "3,5", "--VR", "0.75,1", "--count", "2",
        "--out-dir", s(dir.path()),
    ]);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        // Stationary never converges: the steps column is empty.
        assert_eq!(l.split(',').nth(6), Some(""), "{l}");
    }
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 9);
}

#[test]
fn external_controller_matches_in_process_one() {
    let bench = |controller: String| {
        let dir = tempfile::tempdir().unwrap();
        ok(&[
            "bench", "--controller", &controller, "--n", "4", "--count", "3", "--out-dir",
            s(dir.path()),
        ]);
        std::fs::read_to_string(dir.path().join("results.csv")).unwrap()
    };
    let strip = |csv: String| -> Vec<String> {
        csv.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(4);
                f.join(",")
            })
            .collect()
    };
    let external = bench(format!("external:{BIN} controller"));
    assert!(external.contains(&format!("external:{BIN} controller")));
    assert_eq!(strip(external), strip(bench("analytical".into())));
}

#[test]
fn serve_answers_a_scripted_session() {
    let mut child = Command::new(BIN)
        .args(["serve", "--n", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let script = concat!(
        r#"{"type":"hello","version":1}"#,
        "\n",
        r#"{"type":"reset","positions":[[0,0],[40,0]]}"#,
        "\n",
        r#"{"type":"act","actions":[[0,1],[3.141592653589793,1]]}"#,
        "\n",
        r#"{"type":"bye"}"#,
        "\n"
    );
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let kinds: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["type"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(kinds, ["hello", "obs", "reward", "bye"]);
}

#[test]
fn train_with_zero_steps_writes_only_the_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["train", "--total-steps", "0", "--out-dir", s(dir.path())]);
    assert_eq!(out.lines().count(), 1);
    let files = snapshot(dir.path());
    let names: Vec<_> = files.keys().map(|k| k.to_str().unwrap().to_owned()).collect();
    assert_eq!(names, ["ckpt_0000000000.s2pw", "train_config.json", "train_log.csv"]);
    let sweep = ok(&[
        "sweep", s(dir.path()), "--n", "2", "--count", "2", "--cutoff", "5", "--out-dir",
        s(&dir.path().join("sweep")),
    ]);
    assert_eq!(sweep.lines().count(), 2);
    assert!(sweep.lines().nth(1).unwrap().contains(",true,"));
}

#[test]
fn reference_page_is_current() {
    let generated = ok(&["reference"]);
    let page = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/cli.md");
    let committed = std::fs::read_to_string(&page).unwrap();
    assert!(
        generated == committed,
        "docs/cli.md is stale; regenerate with `gather reference --output docs/cli.md`"
    );
}
