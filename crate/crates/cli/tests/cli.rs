use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
[domain]
kind = "gridworld"
cost = "gaussian"
cost_std = 1.0

[run]
iterations = 10
runs = 2
seed = 3
eval_interval = 5

[algorithm.q]
kind = "q"

[algorithm.g]
kind = "g"
k = 1e-3
"#;

const CLIFF: &str = r#"
[domain]
kind = "cliff"

[run]
iterations = 3000
runs = 3
seed = 5
eval_interval = 1000
exploration = "epsilon_greedy"

[algorithm.es]
kind = "expected_sarsa"

[algorithm.g]
kind = "g"
k_sweep = [1e-3, 1e-4]
"#;

fn glearn() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_glearn"));
    c.env_remove("GLEARN_WORKERS");
    c
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str], env_workers: Option<&str>) {
    let mut c = glearn();
    c.args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra);
    if let Some(w) = env_workers {
        c.env("GLEARN_WORKERS", w);
    }
    let status = c.output().unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn run_writes_expected_sample_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    run(&cfg, &out, &[], None);
    let text = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(text.starts_with(
        "iteration,algorithm,bias,mean_abs_error,policy_suboptimality,bellman_error_avg,runs\n"
    ));
    assert!(!text.contains('\r'));
    let runs = read_rows(&out.join("runs.csv"));
    for alg in ["g", "q"] {
        for run in ["0", "1"] {
            let iters: Vec<&str> = runs
                .iter()
                .filter(|r| &r[0] == run && &r[2] == alg)
                .map(|r| r.get(1).unwrap())
                .collect();
            assert_eq!(iters, ["5", "10"]);
        }
    }
    assert!(!out.join("q_state_visits.csv").exists());
}

#[test]
fn output_is_identical_across_reruns_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLIFF);
    let outs: Vec<_> = (0..4).map(|i| dir.path().join(format!("out{i}"))).collect();
    run(&cfg, &outs[0], &["--workers", "1"], None);
    run(&cfg, &outs[1], &["--workers", "1"], None);
    run(&cfg, &outs[2], &["--workers", "4"], None);
    run(&cfg, &outs[3], &[], Some("3"));
    let mut names: Vec<_> = std::fs::read_dir(&outs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 6);
    for name in &names {
        let reference = std::fs::read(outs[0].join(name)).unwrap();
        for o in &outs[1..] {
            assert_eq!(std::fs::read(o.join(name)).unwrap(), reference, "{name:?}");
        }
    }
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&cfg, &a, &[], None);
    run(&cfg, &b, &["--seed", "99"], None);
    assert_ne!(
        std::fs::read(a.join("runs.csv")).unwrap(),
        std::fs::read(b.join("runs.csv")).unwrap()
    );
}

#[test]
fn aggregate_round_trips_from_per_run_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLIFF);
    let out = dir.path().join("out");
    run(&cfg, &out, &[], None);
    let runs = read_rows(&out.join("runs.csv"));
    let agg = read_rows(&out.join("aggregate.csv"));
    assert!(!agg.is_empty());
    for row in &agg {
        let (iter, alg) = (&row[0], &row[1]);
        let matching: Vec<_> = runs
            .iter()
            .filter(|r| &r[1] == iter && &r[2] == alg)
            .collect();
        assert_eq!(matching.len().to_string(), &row[6]);
        for (agg_col, run_col) in [(2, 3), (3, 4), (4, 5), (5, 6)] {
            let mean = matching
                .iter()
                .map(|r| r[run_col].parse::<f64>().unwrap())
                .sum::<f64>()
                / matching.len() as f64;
            let stored: f64 = row[agg_col].parse().unwrap();
            assert!((mean - stored).abs() <= 1e-12 * (1.0 + stored.abs()));
        }
    }
}

#[test]
fn cliff_histograms_count_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLIFF);
    let out = dir.path().join("out");
    run(&cfg, &out, &[], None);
    for alg in ["es", "g"] {
        let visits: u64 = read_rows(&out.join(format!("{alg}_state_visits.csv")))
            .iter()
            .map(|r| r[1].parse::<u64>().unwrap())
            .sum();
        let moves: u64 = read_rows(&out.join(format!("{alg}_transitions.csv")))
            .iter()
            .map(|r| r[2].parse::<u64>().unwrap())
            .sum();
        assert_eq!(visits, 3 * 3000);
        assert_eq!(moves, 3 * 3000);
    }
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
    assert_eq!(sweep.matches(",true").count(), 1);
}

#[test]
fn sweep_reports_a_choice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLIFF);
    let out = glearn()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--ks", "1e-3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("g  1e-3"), "{text}");
    assert!(text.contains("<- chosen"));
}

#[test]
fn validate_accepts_shipped_configs() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let out = glearn()
            .args(["validate", "--config"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn invalid_configs_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("runs = 2", "runs = 0"));
    let out = glearn()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("runs must be positive"));
    assert!(!dir.path().join("out").exists());

    let out = glearn()
        .args(["run", "--config"])
        .arg(&cfg)
        .env("GLEARN_WORKERS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn custom_map_paths_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.txt"), "...\n.#.\n..G\n").unwrap();
    let text = SMALL.replace(
        "kind = \"gridworld\"",
        "kind = \"gridworld\"\nmap = \"tiny.txt\"",
    );
    let cfg = write_config(dir.path(), &text);
    let out = glearn()
        .args(["validate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("8 states, 9 actions"));
}
