use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_disentangle"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &str = "[env]\npattern = \"RRR\"\n\
    [policy]\nhidden_sizes = [8]\nlatent_dim = 4\nhead_hidden = [4]\ncritic_hidden = [8]\n\
    [pqc]\nqubits = 2\nlayers = 1\n\
    [train]\nupdates = 2\nepisodes_per_update = 3\n\
    [eval]\nn_states = 4\n";

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    dir
}

#[test]
fn help_lists_commands_and_flags() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "train",
        "eval",
        "trace",
        "sweep",
        "config-template",
        "DISENTANGLE_WORKERS",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from --help");
    }
    let out = bin().args(["eval", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--config", "--seed", "--out", "--patterns", "--n-states", "--force"] {
        assert!(text.contains(flag), "{flag} missing from eval --help");
    }
}

#[test]
fn template_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("config-template").output().unwrap();
    assert!(out.status.success());
    fs::write(dir.path().join("c.toml"), &out.stdout).unwrap();
    let cfg = disentangle_cli::config::RunConfig::load(&dir.path().join("c.toml")).unwrap();
    assert_eq!(cfg, disentangle_cli::config::RunConfig::default());
}

#[test]
fn unknown_keys_fail_with_all_names() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[pqc]\nqubit = 3\n[train]\nlr = 1\n").unwrap();
    let out = run(&["train", "--config", "bad.toml", "--out", "o"], dir.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("pqc.qubit") && err.contains("train.lr"), "{err}");
}

#[test]
fn train_eval_and_trace_round_trip() {
    let dir = workspace();
    let p = dir.path();
    let out = run(&["--workers", "2", "train", "--config", "tiny.toml", "--out", "t"], p);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in [
        "manifest.json",
        "checkpoint.json",
        "train_report.csv",
        "timing.csv",
        "metrics.csv",
        "entropy_histogram.csv",
        "table.csv",
    ] {
        assert!(p.join("t").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("t/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "succeeded");
    assert_eq!(manifest["command"], "train");
    let report = fs::read_to_string(p.join("t/train_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(!report.contains("second"), "wall-clock belongs in timing.csv");

    // a second run into the same directory needs --force
    let again = run(&["train", "--config", "tiny.toml", "--out", "t"], p);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--force"));

    let out = run(
        &[
            "eval",
            "--checkpoint",
            "t/checkpoint.json",
            "--patterns",
            "RRR,RR-R",
            "--n-states",
            "0",
            "--out",
            "e",
        ],
        p,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let metrics = fs::read_to_string(p.join("e/metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("RRR,0,0,--,--,--,"), "{}", rows[1]);
    assert!(rows[2].starts_with("RR-R,0,0,--,--,--,"), "{}", rows[2]);

    let out = run(
        &[
            "trace",
            "--checkpoint",
            "t/checkpoint.json",
            "--config",
            "tiny.toml",
            "--seed",
            "3",
            "--out",
            "tr",
        ],
        p,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let lines = fs::read_to_string(p.join("tr/trace.jsonl")).unwrap();
    let steps: Vec<serde_json::Value> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!steps.is_empty());
    assert_eq!(steps.last().unwrap()["done"], true);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("tr/episode.json")).unwrap()).unwrap();
    assert_eq!(summary["gate_count"].as_u64().unwrap() as usize, steps.len());
}

#[test]
fn eval_rejects_mismatched_config() {
    let dir = workspace();
    let p = dir.path();
    assert!(run(&["train", "--config", "tiny.toml", "--out", "t"], p)
        .status
        .success());
    fs::write(p.join("other.toml"), TINY.replace("layers = 1", "layers = 2")).unwrap();
    let out = run(
        &[
            "eval",
            "--checkpoint",
            "t/checkpoint.json",
            "--config",
            "other.toml",
            "--out",
            "e",
        ],
        p,
    );
    assert!(!out.status.success());
    let manifest = fs::read_to_string(p.join("e/manifest.json"));
    // the checkpoint is checked before any output directory is created
    assert!(manifest.is_err());
}

#[test]
fn scripted_bell_trace() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    fs::write(
        p.join("bell.json"),
        format!(r#"{{"num_qubits": 2, "amplitudes": [[{h}, 0], [0, 0], [0, 0], [{h}, 0]]}}"#),
    )
    .unwrap();
    let out = run(&["trace", "--state", "bell.json", "--actions", "0-1", "--out", "b"], p);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = fs::read_to_string(p.join("b/trace.jsonl")).unwrap();
    let step: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!((step["reward"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert_eq!(step["success"], true);

    // actions past the end of the episode are an error
    let out = run(&["trace", "--state", "bell.json", "--actions", "0,0", "--out", "b2"], p);
    assert!(!out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("b2/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");

    let out = run(&["trace", "--state", "bell.json", "--out", "b3"], p);
    assert!(!out.status.success(), "needs a policy or a script");
}

#[test]
fn sweep_axis_and_failures() {
    let dir = workspace();
    let p = dir.path();
    let out = run(
        &[
            "sweep",
            "--config",
            "tiny.toml",
            "--axis",
            "pqc.layers",
            "--values",
            "1,2",
            "--out",
            "s",
        ],
        p,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(p.join("s/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("hybrid-q2-l1,hybrid,2,1,"));
    assert!(rows[1].starts_with("hybrid-q2-l2,hybrid,2,2,"));
    assert!(p.join("s/runs/hybrid-q2-l2/checkpoint.json").exists());

    let out = run(
        &["sweep", "--config", "tiny.toml", "--axis", "pqc.layers", "--out", "s2"],
        p,
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--values"));

    let out = run(&["sweep", "--config", "tiny.toml", "--out", "s3"], p);
    assert!(!out.status.success(), "needs --axis or --grid");
}

#[test]
fn sweep_records_failed_runs() {
    let dir = workspace();
    let p = dir.path();
    let out = run(
        &[
            "sweep",
            "--config",
            "tiny.toml",
            "--axis",
            "pqc.layers",
            "--values",
            "1,99",
            "--out",
            "s",
        ],
        p,
    );
    assert!(!out.status.success());
    let csv = fs::read_to_string(p.join("s/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(",ok"), "{}", rows[0]);
    assert!(
        rows[1].starts_with("hybrid-q2-l99,") && rows[1].contains("failed"),
        "{}",
        rows[1]
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("s/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
}

#[test]
fn training_does_not_depend_on_worker_count() {
    let dir = workspace();
    let p = dir.path();
    for (workers, out) in [("1", "w1"), ("3", "w3")] {
        let o = bin()
            .args(["train", "--config", "tiny.toml", "--out", out])
            .env("DISENTANGLE_WORKERS", workers)
            .current_dir(p)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["metrics.csv", "train_report.csv", "checkpoint.json"] {
        assert_eq!(
            fs::read(p.join("w1").join(f)).unwrap(),
            fs::read(p.join("w3").join(f)).unwrap(),
            "{f}"
        );
    }
}
