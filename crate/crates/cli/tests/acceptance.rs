//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use disentangle::env::{action_from_pair, DisentangleEnv, EnvConfig};
use disentangle::nn::Activation;
use disentangle::policy::{EncoderConfig, HeadType, Policy, PolicyConfig};
use disentangle::pqc::{CircuitConfig, Entangler};
use disentangle::qsim::Statevector;
use disentangle::scalar::C;
use disentangle::EntanglementPattern;
use disentangle_cli::args::{OutputArgs, SweepArgs, TrainArgs};
use disentangle_cli::commands::{cmd_sweep, cmd_train};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{full_density, oracle_suite, partial_trace, qubit_entropy_oracle, solver_suite};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let elapsed = start.elapsed();
    if elapsed > limit {
        return Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}"));
    }
    Ok(format!("{detail}; {elapsed:.1?}"))
}

fn solver_correctness() -> Outcome {
    timed(Duration::from_secs(60), || {
        let d = solver_suite(1000, 1);
        let msg = format!(
            "{} states: off-diagonal {:.1e}, concurrence {:.1e}, unitarity {:.1e}",
            d.states, d.off_diagonal, d.concurrence, d.unitarity
        );
        if d.states >= 1000 && d.off_diagonal < 1e-9 && d.concurrence < 1e-9 && d.unitarity < 1e-10 {
            Ok(msg)
        } else {
            Err(msg)
        }
    })
}

fn oracle_equivalence() -> Outcome {
    timed(Duration::from_secs(120), || {
        let d = oracle_suite(10_000, 2);
        let msg = format!("{} checks, max deviation {:.1e}", d.checks, d.max());
        if d.checks >= 10_000 && d.max() < 1e-10 {
            Ok(msg)
        } else {
            Err(format!("{msg}: {d:?}"))
        }
    })
}

fn random_config(rng: &mut ChaCha8Rng) -> PolicyConfig {
    let n = rng.random_range(2..=4);
    let head = if rng.random_bool(0.75) {
        HeadType::Hybrid
    } else {
        HeadType::Mlp
    };
    let hidden = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=8)).collect()
    };
    let entangler = if rng.random_bool(0.5) {
        Entangler::Chain
    } else {
        Entangler::Ring
    };
    PolicyConfig {
        num_qubits: n,
        encoder: EncoderConfig {
            hidden_sizes: hidden(rng),
            latent_dim: rng.random_range(2..=6),
            activation: if rng.random_bool(0.5) {
                Activation::Tanh
            } else {
                Activation::Relu
            },
        },
        head,
        pqc: CircuitConfig::new(rng.random_range(1..=4), rng.random_range(1..=3), entangler).unwrap(),
        head_hidden: hidden(rng),
        critic_hidden: hidden(rng),
    }
}

fn close(analytic: f64, numeric: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= 1e-6 || err <= 1e-4 * analytic.abs().max(numeric.abs())
}

fn gradient_check() -> Outcome {
    timed(Duration::from_secs(300), || {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0usize;
        let mut hybrid = 0usize;
        for cfg_index in 0..50 {
            let cfg = random_config(&mut rng);
            hybrid += (cfg.head == HeadType::Hybrid) as usize;
            let policy = Policy::new(cfg.clone(), rng.random()).map_err(|e| e.to_string())?;
            let mut env = DisentangleEnv::<f64>::new(
                EntanglementPattern::fully_entangled(cfg.num_qubits).unwrap(),
                EnvConfig::default(),
            )
            .unwrap();
            let obs = env.reset(rng.random()).unwrap();
            let action = rng.random_range(0..cfg.num_actions());

            let (_, actor_grad) = policy.log_prob_gradient(&obs, action).unwrap();
            let pass = policy.critic_pass(&obs).unwrap();
            let mut critic_grad = vec![0.0; policy.num_parameters()];
            policy.critic_backward(&pass, 1.0, &mut critic_grad);

            for k in 0..policy.num_parameters() {
                let eval = |delta: f64| {
                    let mut p = policy.clone();
                    p.parameters_mut()[k] += delta;
                    (p.forward(&obs).unwrap().log_prob(action), p.critic_value(&obs).unwrap())
                };
                let (lp_plus, v_plus) = eval(h);
                let (lp_minus, v_minus) = eval(-h);
                let fd_actor = (lp_plus - lp_minus) / (2.0 * h);
                let fd_critic = (v_plus - v_minus) / (2.0 * h);
                if !close(actor_grad[k], fd_actor) || !close(critic_grad[k], fd_critic) {
                    return Err(format!(
                        "config {cfg_index} ({cfg:?}) parameter {k}: log-prob {} vs {fd_actor}, critic {} vs {fd_critic}",
                        actor_grad[k], critic_grad[k]
                    ));
                }
                checked += 2;
            }
        }
        Ok(format!(
            "50 configurations ({hybrid} hybrid), {checked} partial derivatives"
        ))
    })
}

fn entropies_oracle(state: &Statevector<f64>) -> Vec<f64> {
    let n = state.num_qubits();
    let rho = full_density(state.amplitudes());
    (0..n)
        .map(|q| qubit_entropy_oracle(&partial_trace(&rho, n, &[q])))
        .collect()
}

fn analytic_cases() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64| C::new(re, 0.0);

    let bell = Statevector::from_amplitudes(2, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
    let before = entropies_oracle(&bell);
    // both qubits end in a product state: full relative gain, nothing left entangled
    let expected_bell = before.iter().filter(|&&s| s > 1e-12).count() as f64;
    let mut env = DisentangleEnv::<f64>::new(EntanglementPattern::parse("RR").unwrap(), EnvConfig::default()).unwrap();
    env.reset_with_state(bell, "bell").unwrap();
    let out = env.step(0).unwrap();
    if (expected_bell - 2.0).abs() > 1e-12 || (out.reward - expected_bell).abs() > 1e-10 || !out.success || !out.done {
        return Err(format!(
            "Bell: reward {} (oracle {expected_bell}), success {}",
            out.reward, out.success
        ));
    }

    let mut amps = vec![c(0.0); 8];
    amps[0] = c(h);
    amps[7] = c(h);
    let ghz = Statevector::from_amplitudes(3, amps).unwrap();
    let before = entropies_oracle(&ghz);
    let mut env = DisentangleEnv::<f64>::new(EntanglementPattern::parse("RRR").unwrap(), EnvConfig::default()).unwrap();
    env.reset_with_state(ghz, "ghz").unwrap();
    let out = env.step(action_from_pair(3, (0, 1)).unwrap()).unwrap();
    // a gate on (0, 1) cannot change qubit 2, which stays maximally mixed
    let after = &out.per_qubit_entropy;
    let still_entangled = after.iter().filter(|&&s| s > 1e-3).count();
    let gain: f64 = before
        .iter()
        .zip(after)
        .map(|(&b, &a)| if b.max(a) < 1e-12 { 0.0 } else { (b - a) / b.max(a) })
        .sum();
    let expected_ghz = gain - still_entangled as f64;
    if (after[2] - before[2]).abs() > 1e-10
        || (expected_ghz + 1.0).abs() > 1e-10
        || (out.reward - expected_ghz).abs() > 1e-10
    {
        return Err(format!(
            "GHZ: reward {} (oracle {expected_ghz}), entropies {after:?}",
            out.reward
        ));
    }
    Ok(format!(
        "Bell reward {expected_bell:.12}, GHZ first-step reward {:.12}",
        out.reward
    ))
}

fn output(dir: &Path) -> OutputArgs {
    OutputArgs {
        out: dir.to_path_buf(),
        force: true,
    }
}

fn training_target(root: &Path) -> Outcome {
    let limit = Duration::from_secs(2 * 3600);
    let mut attempts = Vec::new();
    for seed in [0u64, 1, 2] {
        let dir = root.join(format!("train-seed{seed}"));
        let start = Instant::now();
        cmd_train(&TrainArgs {
            config: None,
            seed: Some(seed),
            output: output(&dir),
        })
        .map_err(|e| format!("seed {seed}: {e:#}"))?;
        let elapsed = start.elapsed();
        let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
        let row: Vec<String> = metrics.lines().nth(1).unwrap().split(',').map(String::from).collect();
        let n_states: usize = row[1].parse().unwrap();
        let rate: f64 = row[3].parse().unwrap_or(0.0);
        let msg = format!(
            "seed {seed}: success {rate:.3} over {n_states} states, avg gates {}, {elapsed:.0?}",
            row[4]
        );
        if n_states == 500 && rate >= 0.90 && elapsed <= limit {
            attempts.push(msg);
            return Ok(attempts.join("; "));
        }
        attempts.push(msg);
    }
    Err(attempts.join("; "))
}

fn tiny_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let text = format!(
        "[env]\npattern = \"RRRR\"\n{extra}\n\
         [policy]\nhidden_sizes = [16]\nlatent_dim = 8\nhead_hidden = [8]\ncritic_hidden = [16]\n\
         [train]\nupdates = 2\nepisodes_per_update = 4\nminibatch_size = 16\nseed = 5\n\
         [eval]\nn_states = 6\n"
    );
    fs::create_dir_all(dir).unwrap();
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn sweep_grid(root: &Path) -> Outcome {
    let dir = root.join("sweep");
    // one gate cannot disentangle four Haar-random qubits, so no run succeeds
    let config = tiny_config(&dir, "max_budget = 1");
    cmd_sweep(&SweepArgs {
        config: Some(config),
        seed: None,
        axis: None,
        values: vec![],
        grid: true,
        qubits: vec![2, 3, 4, 5],
        layers: vec![2, 3, 4],
        output: output(&dir.join("out")),
    })
    .map_err(|e| format!("{e:#}"))?;
    let text = fs::read_to_string(dir.join("out/sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let mut expected = vec![("mlp".to_string(), "--".to_string(), "--".to_string())];
    for q in [2, 3, 4, 5] {
        for l in [2, 3, 4] {
            expected.push(("hybrid".into(), q.to_string(), l.to_string()));
        }
    }
    let got: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| (r[1].to_string(), r[2].to_string(), r[3].to_string()))
        .collect();
    if got != expected {
        return Err(format!("grid rows {got:?}"));
    }
    let zero = rows.iter().filter(|r| r[6] == "0").count();
    if zero == 0 {
        return Err("no zero-success run to exercise the absent marker".into());
    }
    if let Some(r) = rows.iter().find(|r| r[6] == "0" && (r[8] != "--" || r[9] != "--")) {
        return Err(format!("zero-success row without marker: {r:?}"));
    }
    if let Some(r) = rows.iter().find(|r| r[10] != "ok") {
        return Err(format!("run failed: {r:?}"));
    }
    Ok(format!(
        "{} runs (classical + 4x3 hybrid grid), {zero} with zero successes report --",
        rows.len()
    ))
}

fn reproducibility(root: &Path) -> Outcome {
    let dir = root.join("repro");
    let config = tiny_config(&dir, "");
    let files = [
        "metrics.csv",
        "entropy_histogram.csv",
        "train_report.csv",
        "table.csv",
        "checkpoint.json",
    ];
    let mut contents = Vec::new();
    for run in ["a", "b"] {
        let out = dir.join(run);
        cmd_train(&TrainArgs {
            config: Some(config.clone()),
            seed: Some(11),
            output: output(&out),
        })
        .map_err(|e| format!("{e:#}"))?;
        contents.push(files.map(|f| fs::read(out.join(f)).unwrap()));
    }
    for (k, f) in files.iter().enumerate() {
        if contents[0][k] != contents[1][k] {
            return Err(format!("{f} differs between runs"));
        }
    }
    Ok(format!("{} identical across two runs", files.join(", ")))
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("1 solver correctness", Box::new(solver_correctness)),
        ("2 oracle equivalence", Box::new(oracle_equivalence)),
        ("3 gradient check", Box::new(gradient_check)),
        ("4 environment analytic cases", Box::new(analytic_cases)),
        (
            "5 desk-scale training target",
            Box::new(|| training_target(root.path())),
        ),
        ("6 ablation sweep grid", Box::new(|| sweep_grid(root.path()))),
        ("7 reproducibility", Box::new(|| reproducibility(root.path()))),
    ];
    let only = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check) in &criteria {
        if only.as_ref().is_some_and(|o| !name.contains(o.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
