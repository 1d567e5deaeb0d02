use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use disentangle::env::{action_from_pair, DisentangleEnv, EnvConfig};
use disentangle::policy::{HeadType, Policy};
use disentangle::qsim::{Statevector, StatevectorJson};
use disentangle::trainer::{evaluate, greedy_rollout, train, PatternMetrics, TrainReport, UpdateRow};
use disentangle::EntanglementPattern;
use serde::Serialize;

use crate::args::{Cli, Command, EvalArgs, SweepArgs, SweepAxis, TraceArgs, TrainArgs};
use crate::config::{parse_pattern, RunConfig};
use crate::manifest::{RunDir, RunManifest};
use crate::report;

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        ensure!(n > 0, "--workers must be positive");
        // a pool may already exist when called more than once in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Trace(a) => cmd_trace(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::ConfigTemplate => {
            print!("{}", RunConfig::default().to_toml());
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

/// Runs `body` inside a fresh output directory and records the outcome in the
/// manifest.
fn with_run_dir(
    out: &Path,
    force: bool,
    manifest: RunManifest,
    body: impl FnOnce(&mut RunDir) -> Result<()>,
) -> Result<()> {
    let mut dir = RunDir::create(out, force, manifest)?;
    let result = body(&mut dir);
    dir.finish(&result)?;
    result
}

/// Result of [`train_and_evaluate`].
pub struct TrainedRun {
    pub policy: Policy,
    pub report: TrainReport,
    pub metrics: Vec<PatternMetrics>,
}

/// Trains with `cfg`, writes `checkpoint.json`, `train_report.csv`,
/// `timing.csv`, `metrics.csv` and `entropy_histogram.csv` into `dir`.
pub fn train_and_evaluate(cfg: &RunConfig, dir: &mut RunDir, label: &str) -> Result<TrainedRun> {
    let pattern = cfg.pattern()?;
    let mut policy = Policy::new(cfg.policy_config()?, cfg.train.seed)?;
    let updates = cfg.train.updates;
    let every = (updates / 10).max(1);
    let report = train(
        &mut policy,
        &cfg.train,
        &pattern,
        &cfg.env_config(),
        |row: &UpdateRow| {
            if row.update.is_multiple_of(every) || row.update == updates {
                eprintln!(
                    "[{label}] update {}/{}: return {:.3}, train success {:.3}, entropy {:.3}{}",
                    row.update,
                    updates,
                    row.mean_return,
                    row.success_rate,
                    row.entropy,
                    row.eval_success_rate
                        .map(|s| format!(", eval success {s:.3}"))
                        .unwrap_or_default()
                );
            }
        },
    )?;
    policy.save(&dir.output("checkpoint.json"))?;
    report::write_train_report(&dir.output("train_report.csv"), &report)?;
    report::write_timing(&dir.output("timing.csv"), &report)?;

    let metrics = evaluate(
        &policy,
        &cfg.eval_patterns()?,
        cfg.eval.n_states,
        cfg.train.seed,
        &cfg.env_config(),
        cfg.eval.refinement,
    )?;
    report::write_metrics(&dir.output("metrics.csv"), &metrics)?;
    report::write_histogram(&dir.output("entropy_histogram.csv"), &metrics)?;
    Ok(TrainedRun {
        policy,
        report,
        metrics,
    })
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    let manifest = RunManifest::new("train", config_json(&cfg), cfg.train.seed);
    with_run_dir(&args.output.out, args.output.force, manifest, |dir| {
        fs::write(dir.output("config.toml"), cfg.to_toml())?;
        let run = train_and_evaluate(&cfg, dir, "train")?;
        let head = report::head_columns(cfg.policy.head, cfg.pqc.qubits, cfg.pqc.layers);
        let rows: Vec<Vec<String>> = run.metrics.iter().map(|m| report::table_row(head.clone(), m)).collect();
        println!("{}", report::TABLE_HEADER.join(","));
        for r in &rows {
            println!("{}", r.join(","));
        }
        report::write_table(&dir.output("table.csv"), rows)
    })
}

fn load_policy(checkpoint: &Path, cfg: Option<&RunConfig>) -> Result<Policy> {
    let expected = cfg.map(RunConfig::policy_config).transpose()?;
    Policy::load(checkpoint, expected.as_ref()).with_context(|| format!("loading {}", checkpoint.display()))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let file_cfg = args.config.as_deref().map(RunConfig::load).transpose()?;
    let policy = load_policy(&args.checkpoint, file_cfg.as_ref())?;
    let cfg = file_cfg.unwrap_or_default();
    let patterns: Vec<EntanglementPattern> = if !args.patterns.is_empty() {
        args.patterns
            .iter()
            .map(|p| parse_pattern(p.trim()))
            .collect::<Result<_, _>>()?
    } else if args.config.is_some() {
        cfg.eval_patterns()?
    } else {
        vec![EntanglementPattern::fully_entangled(policy.config().num_qubits)?]
    };
    for p in &patterns {
        ensure!(
            p.num_qubits() == policy.config().num_qubits,
            "pattern {p} has {} qubits, checkpoint expects {}",
            p.num_qubits(),
            policy.config().num_qubits
        );
    }
    let n_states = args.n_states.unwrap_or(cfg.eval.n_states);
    let seed = args.seed.unwrap_or(cfg.train.seed);
    let refinement = !args.no_refinement && cfg.eval.refinement;

    let mut manifest = RunManifest::new("eval", config_json(&cfg), seed);
    manifest.config = serde_json::json!({
        "config": config_json(&cfg),
        "checkpoint": args.checkpoint.display().to_string(),
        "patterns": patterns.iter().map(|p| p.label()).collect::<Vec<_>>(),
        "n_states": n_states,
        "refinement": refinement,
    });
    with_run_dir(&args.output.out, args.output.force, manifest, |dir| {
        let metrics = evaluate(&policy, &patterns, n_states, seed, &cfg.env_config(), refinement)?;
        report::write_metrics(&dir.output("metrics.csv"), &metrics)?;
        report::write_histogram(&dir.output("entropy_histogram.csv"), &metrics)?;
        println!("{}", report::METRICS_HEADER.join(","));
        for m in &metrics {
            println!("{}", report::metrics_row(m).join(","));
        }
        Ok(())
    })
}

fn parse_actions(tokens: &[String], num_qubits: usize) -> Result<Vec<usize>> {
    tokens
        .iter()
        .map(|t| {
            let t = t.trim();
            let action = match t.split_once('-') {
                Some((a, b)) => {
                    let pair = (a.trim().parse::<usize>()?, b.trim().parse::<usize>()?);
                    action_from_pair(num_qubits, pair)?
                }
                None => t.parse::<usize>()?,
            };
            ensure!(
                action < num_qubits * (num_qubits - 1) / 2,
                "action {t} out of range for {num_qubits} qubits"
            );
            Ok(action)
        })
        .collect()
}

#[derive(Serialize)]
struct TraceSummary {
    pattern: String,
    seed: Option<u64>,
    num_qubits: usize,
    initial_entropies: Vec<f64>,
    scripted: bool,
    success: bool,
    gate_count: usize,
    final_mean_entropy: f64,
}

pub fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let file_cfg = args.config.as_deref().map(RunConfig::load).transpose()?;
    let policy = args
        .checkpoint
        .as_deref()
        .map(|c| load_policy(c, file_cfg.as_ref()))
        .transpose()?;
    let cfg = file_cfg.clone().unwrap_or_default();
    let seed = args.seed.unwrap_or(cfg.train.seed);

    let initial = args
        .state
        .as_deref()
        .map(|p| -> Result<Statevector<f64>> {
            let json: StatevectorJson =
                serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?;
            Ok(Statevector::from_json(&json)?)
        })
        .transpose()?;
    let pattern = match (&args.pattern, &initial, &policy) {
        (Some(p), _, _) => parse_pattern(p)?,
        (None, Some(s), _) => EntanglementPattern::fully_entangled(s.num_qubits())?,
        (None, None, _) if file_cfg.is_some() => cfg.pattern()?,
        (None, None, Some(pol)) => EntanglementPattern::fully_entangled(pol.config().num_qubits)?,
        (None, None, None) => cfg.pattern()?,
    };
    let n = pattern.num_qubits();
    if let Some(s) = &initial {
        ensure!(
            s.num_qubits() == n,
            "initial state has {} qubits, pattern {pattern} has {n}",
            s.num_qubits()
        );
    }
    if let Some(pol) = &policy {
        ensure!(
            pol.config().num_qubits == n,
            "checkpoint expects {} qubits, pattern {pattern} has {n}",
            pol.config().num_qubits
        );
    }
    let script = parse_actions(&args.actions, n)?;
    if script.is_empty() && policy.is_none() {
        bail!("trace needs --checkpoint or --actions");
    }

    let manifest = RunManifest::new("trace", config_json(&cfg), seed);
    with_run_dir(&args.output.out, args.output.force, manifest, |dir| {
        let env_cfg = EnvConfig {
            record: true,
            ..cfg.env_config()
        };
        let mut env = DisentangleEnv::<f64>::new(pattern.clone(), env_cfg)?;
        let obs = match initial.clone() {
            Some(s) => env.reset_with_state(s, "state")?,
            None => env.reset(seed)?,
        };
        if script.is_empty() {
            let policy = policy.as_ref().expect("checked above");
            greedy_rollout(policy, &mut env, obs, cfg.eval.refinement)?;
        } else {
            for (k, &a) in script.iter().enumerate() {
                ensure!(
                    !env.is_done(),
                    "episode ended after {k} of {} scripted actions",
                    script.len()
                );
                env.step(a)?;
            }
        }
        let record = env.take_record().expect("recording enabled");
        let summary = record.summary();
        let file = File::create(dir.output("trace.jsonl"))?;
        record.write_jsonl(BufWriter::new(file))?;
        let out = TraceSummary {
            pattern: record.initial_pattern.clone(),
            seed: record.seed,
            num_qubits: n,
            initial_entropies: record.initial_entropies.clone(),
            scripted: !script.is_empty(),
            success: summary.success,
            gate_count: summary.gate_count,
            final_mean_entropy: summary.final_mean_entropy,
        };
        fs::write(dir.output("episode.json"), serde_json::to_string_pretty(&out)?)?;
        println!(
            "{} steps, success {}, final mean entropy {:e}",
            out.gate_count, out.success, out.final_mean_entropy
        );
        Ok(())
    })
}

/// One sweep point: head type plus PQC shape.
#[derive(Clone, Copy, Debug)]
struct SweepPoint {
    head: HeadType,
    qubits: usize,
    layers: usize,
}

impl SweepPoint {
    fn name(&self) -> String {
        match self.head {
            HeadType::Mlp => "mlp".into(),
            HeadType::Hybrid => format!("hybrid-q{}-l{}", self.qubits, self.layers),
        }
    }
}

fn sweep_points(args: &SweepArgs, cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    // out-of-range values fail their own run and are reported in the table
    let check = |name: &str, vals: &[usize]| -> Result<()> {
        ensure!(!vals.is_empty(), "{name} needs at least one value");
        Ok(())
    };
    let hybrid = |qubits, layers| SweepPoint {
        head: HeadType::Hybrid,
        qubits,
        layers,
    };
    if args.grid {
        check("--qubits", &args.qubits)?;
        check("--layers", &args.layers)?;
        let mut points = vec![SweepPoint {
            head: HeadType::Mlp,
            qubits: cfg.pqc.qubits,
            layers: cfg.pqc.layers,
        }];
        for &q in &args.qubits {
            for &l in &args.layers {
                points.push(hybrid(q, l));
            }
        }
        return Ok(points);
    }
    match args.axis {
        Some(SweepAxis::PqcQubits) => {
            check("--values", &args.values)?;
            Ok(args.values.iter().map(|&q| hybrid(q, cfg.pqc.layers)).collect())
        }
        Some(SweepAxis::PqcLayers) => {
            check("--values", &args.values)?;
            Ok(args.values.iter().map(|&l| hybrid(cfg.pqc.qubits, l)).collect())
        }
        None => bail!("sweep needs --axis or --grid"),
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut base = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        base.train.seed = seed;
    }
    let points = sweep_points(args, &base)?;
    let manifest = RunManifest::new("sweep", config_json(&base), base.train.seed);
    with_run_dir(&args.output.out, args.output.force, manifest, |dir| {
        let mut rows = Vec::with_capacity(points.len());
        let mut table = Vec::with_capacity(points.len());
        let mut failures = Vec::new();
        for point in &points {
            let name = point.name();
            let mut cfg = base.clone();
            cfg.policy.head = point.head;
            cfg.pqc.qubits = point.qubits;
            cfg.pqc.layers = point.layers;
            let [h, q, l] = report::head_columns(point.head, point.qubits, point.layers);
            let sub = dir.root().join("runs").join(&name);
            let result = cfg.validate().map_err(anyhow::Error::from).and_then(|()| {
                let manifest = RunManifest::new("sweep-run", config_json(&cfg), cfg.train.seed);
                let mut run_dir = RunDir::create(&sub, true, manifest)?;
                let r = train_and_evaluate(&cfg, &mut run_dir, &name);
                let status = r.as_ref().map(|_| ()).map_err(|e| anyhow::anyhow!("{e:#}"));
                run_dir.finish(&status)?;
                r
            });
            match result {
                Ok(run) => {
                    let m = &run.metrics[0];
                    table.push(report::table_row([h.clone(), q.clone(), l.clone()], m));
                    rows.push(vec![
                        name,
                        h,
                        q,
                        l,
                        m.parameter_count.to_string(),
                        m.n_states.to_string(),
                        m.successes.to_string(),
                        m.success_rate
                            .map_or(report::ABSENT.into(), |r| format!("{:.2}", 100.0 * r)),
                        m.mean_gates.map_or(report::ABSENT.into(), |g| format!("{g:.2}")),
                        m.gate_std.map_or(report::ABSENT.into(), |g| format!("{g:.2}")),
                        "ok".into(),
                    ]);
                }
                Err(e) => {
                    eprintln!("[{name}] failed: {e:#}");
                    failures.push(name.clone());
                    let mut row = vec![name, h, q, l];
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    row.push(format!("failed: {e:#}"));
                    rows.push(row);
                }
            }
        }
        report::write_sweep(&dir.output("sweep.csv"), rows)?;
        report::write_table(&dir.output("table.csv"), table)?;
        println!("{}", fs::read_to_string(dir.root().join("sweep.csv"))?.trim_end());
        ensure!(failures.is_empty(), "sweep runs failed: {}", failures.join(", "));
        Ok(())
    })
}
