//! Clipped-surrogate actor-critic training with generalized advantage
//! estimation, plus greedy evaluation.
//!
//! Rollouts and gradient accumulation run on the rayon pool. Results do not
//! depend on the number of worker threads: every episode draws from its own
//! derived seed, and per-sample gradients are summed in fixed-size chunks
//! whose partial sums are combined in index order.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{DisentangleEnv, EnvConfig, Environment, Observation};
use crate::error::{invalid, Error, Result};
use crate::policy::{select_action, Policy, SelectionHistory, SelectionMode};
use crate::qsim::EntanglementPattern;

/// Samples per parallel gradient chunk.
const GRAD_CHUNK: usize = 16;
const ADVANTAGE_VAR_FLOOR: f64 = 1e-8;

const STREAM_ROLLOUT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_EVAL: u64 = 3;
const STREAM_EPISODE_ENV: u64 = 4;
const STREAM_EPISODE_ACTION: u64 = 5;

/// `index`-th seed of an independent ChaCha stream keyed by `(base, stream)`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Ratio clip `ε`; `f64::INFINITY` disables clipping.
    pub clip_ratio: f64,
    pub learning_rate: f64,
    pub episodes_per_update: usize,
    pub updates: usize,
    /// Passes over each batch.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    /// Evaluate every this many updates; 0 disables periodic evaluation.
    pub eval_every: usize,
    pub eval_states: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            learning_rate: 3e-4,
            episodes_per_update: 32,
            updates: 1000,
            epochs: 1,
            minibatch_size: 64,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            eval_every: 0,
            eval_states: 500,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 10] = [
            (self.gamma > 0.0 && self.gamma <= 1.0, "gamma must be in (0, 1]"),
            ((0.0..=1.0).contains(&self.gae_lambda), "gae_lambda must be in [0, 1]"),
            (self.clip_ratio > 0.0, "clip_ratio must be positive"),
            (
                self.learning_rate > 0.0 && self.learning_rate.is_finite(),
                "learning_rate must be positive",
            ),
            (self.episodes_per_update > 0, "episodes_per_update must be positive"),
            (self.epochs > 0, "epochs must be positive"),
            (self.minibatch_size > 0, "minibatch_size must be positive"),
            (
                self.entropy_coef >= 0.0 && self.value_coef >= 0.0,
                "loss coefficients must be nonnegative",
            ),
            (self.max_grad_norm > 0.0, "max_grad_norm must be positive"),
            (
                self.eval_states > 0 || self.eval_every == 0,
                "eval_states must be positive",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(invalid(*msg)),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub observation: Observation<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    /// Ended by success rather than by the budget.
    pub terminated: bool,
    /// Critic estimate of the state after the last step, used when truncated.
    pub bootstrap_value: f64,
    pub success: bool,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Batch {
    pub trajectories: Vec<Trajectory>,
}

impl Batch {
    pub fn num_samples(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.trajectories.iter().flat_map(|t| &t.transitions)
    }

    pub fn mean_return(&self) -> f64 {
        mean(self.trajectories.iter().map(Trajectory::total_reward))
    }

    pub fn success_rate(&self) -> f64 {
        mean(self.trajectories.iter().map(|t| if t.success { 1.0 } else { 0.0 }))
    }

    /// Mean episode length over successful episodes.
    pub fn mean_success_length(&self) -> Option<f64> {
        let lens: Vec<f64> = self
            .trajectories
            .iter()
            .filter(|t| t.success)
            .map(|t| t.len() as f64)
            .collect();
        (!lens.is_empty()).then(|| mean(lens.iter().copied()))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn run_episode<E: Environment>(policy: &Policy, env: &mut E, env_seed: u64, action_seed: u64) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(action_seed);
    let mut obs = env.reset(env_seed)?;
    let mut transitions = Vec::new();
    let none = SelectionHistory::default();
    loop {
        let dist = policy.forward(&obs)?;
        let value = policy.critic_value(&obs)?;
        let action = select_action(&dist, SelectionMode::Sample, false, &none, &mut rng);
        let out = env.step(action)?;
        if !out.reward.is_finite() {
            return Err(Error::Numeric(format!("non-finite reward {}", out.reward)));
        }
        transitions.push(Transition {
            observation: obs,
            action,
            log_prob: dist.log_prob(action),
            reward: out.reward,
            value,
            done: out.done,
        });
        if out.done {
            let bootstrap_value = if out.success {
                0.0
            } else {
                policy.critic_value(&out.next_observation)?
            };
            return Ok(Trajectory {
                transitions,
                terminated: out.success,
                bootstrap_value,
                success: out.success,
            });
        }
        obs = out.next_observation;
    }
}

/// Runs `n` sampled episodes, each in a fresh environment from `make_env`.
/// The batch is a pure function of the policy parameters and `seed`.
pub fn collect_rollouts<E, F>(policy: &Policy, make_env: F, n: usize, seed: u64) -> Result<Batch>
where
    E: Environment,
    F: Fn() -> Result<E> + Sync,
{
    if n == 0 {
        return Err(invalid("collect_rollouts needs at least one episode"));
    }
    let trajectories = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut env = make_env()?;
            run_episode(
                policy,
                &mut env,
                derive_seed(seed, STREAM_EPISODE_ENV, i),
                derive_seed(seed, STREAM_EPISODE_ACTION, i),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Batch { trajectories })
}

/// Per-sample training targets, in batch order.
#[derive(Clone, Debug, PartialEq)]
pub struct Advantages {
    /// GAE values before normalization.
    pub raw: Vec<f64>,
    /// Zero mean, unit variance (variance floored at 1e-8).
    pub normalized: Vec<f64>,
    /// Critic targets `raw + value`.
    pub returns: Vec<f64>,
}

/// `δ_t = r_t + γ V_{t+1} - V_t`, `A_t = δ_t + γ λ A_{t+1}`, restarted at every
/// episode end. Truncated episodes bootstrap from the critic.
pub fn compute_advantages(batch: &Batch, gamma: f64, lambda: f64) -> Advantages {
    let mut raw = Vec::with_capacity(batch.num_samples());
    let mut returns = Vec::with_capacity(batch.num_samples());
    for traj in &batch.trajectories {
        let t_len = traj.len();
        let mut adv = vec![0.0; t_len];
        let mut next_adv = 0.0;
        let mut next_value = if traj.terminated { 0.0 } else { traj.bootstrap_value };
        for t in (0..t_len).rev() {
            let tr = &traj.transitions[t];
            let delta = tr.reward + gamma * next_value - tr.value;
            next_adv = delta + gamma * lambda * next_adv;
            adv[t] = next_adv;
            next_value = tr.value;
        }
        for (a, tr) in adv.iter().zip(&traj.transitions) {
            raw.push(*a);
            returns.push(a + tr.value);
        }
    }
    let normalized = normalize(&raw);
    Advantages {
        raw,
        normalized,
        returns,
    }
}

fn normalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let m = mean(x.iter().copied());
    let var = mean(x.iter().map(|v| (v - m) * (v - m)));
    let sd = var.max(ADVANTAGE_VAR_FLOOR).sqrt();
    x.iter().map(|v| (v - m) / sd).collect()
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_parameters: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_parameters],
            v: vec![0.0; num_parameters],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Minibatch loss terms, averaged over samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

impl LossStats {
    fn add(&mut self, o: &LossStats) {
        self.policy_loss += o.policy_loss;
        self.value_loss += o.value_loss;
        self.entropy += o.entropy;
        self.approx_kl += o.approx_kl;
        self.clip_fraction += o.clip_fraction;
    }

    fn scaled(mut self, s: f64) -> Self {
        self.policy_loss *= s;
        self.value_loss *= s;
        self.entropy *= s;
        self.approx_kl *= s;
        self.clip_fraction *= s;
        self
    }

    pub fn total(&self, config: &TrainConfig) -> f64 {
        self.policy_loss + config.value_coef * self.value_loss - config.entropy_coef * self.entropy
    }

    fn is_finite(&self) -> bool {
        [self.policy_loss, self.value_loss, self.entropy, self.approx_kl]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Gradient of `L = L_clip + c_v · ½(V - R)² - c_e · H`, averaged over
/// `indices` (positions in batch order).
pub fn loss_gradient(
    policy: &Policy,
    samples: &[&Transition],
    adv: &Advantages,
    indices: &[usize],
    config: &TrainConfig,
) -> Result<(Vec<f64>, LossStats)> {
    let n_params = policy.num_parameters();
    let scale = 1.0 / indices.len() as f64;
    let partials = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<(Vec<f64>, LossStats)> {
            let mut grad = vec![0.0; n_params];
            let mut stats = LossStats::default();
            for &i in chunk {
                let tr = samples[i];
                let a = adv.normalized[i];
                let pass = policy.actor_forward(&tr.observation)?;
                let dist = &pass.distribution;
                let logp = dist.log_prob(tr.action);
                let log_ratio = logp - tr.log_prob;
                let ratio = log_ratio.exp();
                let eps = config.clip_ratio;
                let surr1 = ratio * a;
                let surr2 = ratio.clamp(1.0 - eps, 1.0 + eps) * a;
                let clipped = surr2 < surr1;
                // ∂L/∂log π
                let d_logp = if clipped { 0.0 } else { -ratio * a };
                let p = dist.probabilities();
                let entropy = dist.entropy();
                let d_logits: Vec<f64> = (0..p.len())
                    .map(|k| {
                        let onehot = if k == tr.action { 1.0 } else { 0.0 };
                        let d_ent = if p[k] > 0.0 {
                            p[k] * (dist.log_prob(k) + entropy)
                        } else {
                            0.0
                        };
                        scale * (d_logp * (onehot - p[k]) + config.entropy_coef * d_ent)
                    })
                    .collect();
                policy.actor_backward(&pass, &d_logits, &mut grad);

                let critic = policy.critic_pass(&tr.observation)?;
                let err = critic.value - adv.returns[i];
                policy.critic_backward(&critic, scale * config.value_coef * err, &mut grad);

                stats.add(&LossStats {
                    policy_loss: -surr1.min(surr2),
                    value_loss: 0.5 * err * err,
                    entropy,
                    approx_kl: (ratio - 1.0) - log_ratio,
                    clip_fraction: if (ratio - 1.0).abs() > eps { 1.0 } else { 0.0 },
                });
            }
            Ok((grad, stats))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grad = vec![0.0; n_params];
    let mut stats = LossStats::default();
    for (g, s) in &partials {
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc += x;
        }
        stats.add(s);
    }
    Ok((grad, stats.scaled(scale)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: LossStats,
    /// Mean pre-clipping gradient norm over minibatches.
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// `epochs` passes of shuffled minibatch steps over `batch`. On a non-finite
/// loss or gradient, parameters and optimizer state are restored and an error
/// describing the offending minibatch is returned.
pub fn update(
    policy: &mut Policy,
    optimizer: &mut Adam,
    batch: &Batch,
    config: &TrainConfig,
    seed: u64,
) -> Result<UpdateStats> {
    if batch.num_samples() == 0 {
        return Err(invalid("update needs a nonempty batch"));
    }
    let adv = compute_advantages(batch, config.gamma, config.gae_lambda);
    let samples: Vec<&Transition> = batch.transitions().collect();
    let snapshot = (policy.parameters().to_vec(), optimizer.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut total = UpdateStats::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (mb, idx) in order.chunks(config.minibatch_size).enumerate() {
            let (mut grad, stats) = loss_gradient(policy, &samples, &adv, idx, config)?;
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !stats.is_finite() || !norm.is_finite() {
                policy.parameters_mut().copy_from_slice(&snapshot.0);
                *optimizer = snapshot.1;
                return Err(Error::Numeric(format!(
                    "non-finite loss in epoch {epoch}, minibatch {mb}: {stats:?}, gradient norm {norm}"
                )));
            }
            if norm > config.max_grad_norm {
                let s = config.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            optimizer.step(policy.parameters_mut(), &grad, config.learning_rate);
            total.loss.add(&stats);
            total.grad_norm += norm;
            total.minibatches += 1;
        }
    }
    if policy.parameters().iter().any(|p| !p.is_finite()) {
        policy.parameters_mut().copy_from_slice(&snapshot.0);
        *optimizer = snapshot.1;
        return Err(Error::Numeric("parameters became non-finite".into()));
    }
    let s = 1.0 / total.minibatches as f64;
    total.loss = total.loss.scaled(s);
    total.grad_norm *= s;
    Ok(total)
}

/// Evaluation summary for one pattern.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternMetrics {
    pub pattern: String,
    pub n_states: usize,
    pub successes: usize,
    /// `None` when `n_states == 0`.
    pub success_rate: Option<f64>,
    /// Over successful episodes; `None` without successes.
    pub mean_gates: Option<f64>,
    /// Population standard deviation over successful episodes.
    pub gate_std: Option<f64>,
    pub parameter_count: usize,
    /// Mean single-qubit entropy at the end of every episode, in state order.
    pub final_mean_entropy: Vec<f64>,
    /// Gates applied per episode, in state order.
    pub gate_counts: Vec<usize>,
    pub success_flags: Vec<bool>,
}

/// Greedy evaluation on `n_states` fresh states per pattern. Evaluation state
/// `i` of pattern `p` is seeded from `(seed, p, i)` so different policies see
/// the same states.
pub fn evaluate(
    policy: &Policy,
    patterns: &[EntanglementPattern],
    n_states: usize,
    seed: u64,
    env_config: &EnvConfig,
    refinement: bool,
) -> Result<Vec<PatternMetrics>> {
    patterns
        .iter()
        .enumerate()
        .map(|(p, pattern)| {
            let base = derive_seed(seed, STREAM_EVAL, p as u64);
            let runs = (0..n_states as u64)
                .into_par_iter()
                .map(|i| {
                    let mut env = DisentangleEnv::<f64>::new(pattern.clone(), env_config.clone())?;
                    greedy_episode(policy, &mut env, derive_seed(base, STREAM_EVAL, i), refinement)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(pattern.label(), policy.num_parameters(), runs))
        })
        .collect()
}

fn summarize(pattern: String, parameter_count: usize, runs: Vec<(bool, usize, f64)>) -> PatternMetrics {
    let gates: Vec<f64> = runs.iter().filter(|r| r.0).map(|r| r.1 as f64).collect();
    let n = runs.len();
    let (mean_gates, gate_std) = if gates.is_empty() {
        (None, None)
    } else {
        let m = mean(gates.iter().copied());
        (Some(m), Some(mean(gates.iter().map(|g| (g - m) * (g - m))).sqrt()))
    };
    PatternMetrics {
        pattern,
        n_states: n,
        successes: gates.len(),
        success_rate: (n > 0).then(|| gates.len() as f64 / n as f64),
        mean_gates,
        gate_std,
        parameter_count,
        final_mean_entropy: runs.iter().map(|r| r.2).collect(),
        gate_counts: runs.iter().map(|r| r.1).collect(),
        success_flags: runs.iter().map(|r| r.0).collect(),
    }
}

/// Plays one greedy episode from `env.reset(seed)`; returns
/// `(success, gates, final mean entropy)`.
pub fn greedy_episode(
    policy: &Policy,
    env: &mut DisentangleEnv<f64>,
    seed: u64,
    refinement: bool,
) -> Result<(bool, usize, f64)> {
    let obs = env.reset(seed)?;
    greedy_rollout(policy, env, obs, refinement)
}

/// Continues an already reset episode greedily until it ends; returns
/// `(success, gates, final mean entropy)`.
pub fn greedy_rollout(
    policy: &Policy,
    env: &mut DisentangleEnv<f64>,
    mut obs: Observation<f64>,
    refinement: bool,
) -> Result<(bool, usize, f64)> {
    let mut history = SelectionHistory::default();
    // greedy selection never draws
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    loop {
        if env.is_done() {
            let m = mean(env.entropies().iter().copied());
            return Ok((env.is_success(), env.steps_taken(), m));
        }
        let dist = policy.forward(&obs)?;
        let action = select_action(&dist, SelectionMode::Greedy, refinement, &history, &mut rng);
        let before = env.entropies().to_vec();
        let out = env.step(action)?;
        history.record(action, &before, &out.per_qubit_entropy);
        obs = out.next_observation;
    }
}

/// One row per update.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpdateRow {
    pub update: usize,
    pub episodes: usize,
    pub samples: usize,
    pub mean_return: f64,
    pub success_rate: f64,
    pub mean_gates: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub eval_success_rate: Option<f64>,
    pub eval_mean_gates: Option<f64>,
    pub eval_gate_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub rows: Vec<UpdateRow>,
    /// Seconds spent in each update, kept apart from `rows` so that rows are
    /// reproducible bit for bit.
    pub wall_clock_seconds: Vec<f64>,
}

/// Trains `policy` on fresh states of `pattern`. `on_update` sees every row as
/// it is produced.
pub fn train(
    policy: &mut Policy,
    config: &TrainConfig,
    pattern: &EntanglementPattern,
    env_config: &EnvConfig,
    mut on_update: impl FnMut(&UpdateRow),
) -> Result<TrainReport> {
    config.validate()?;
    if pattern.num_qubits() != policy.config().num_qubits {
        return Err(invalid(format!(
            "pattern {pattern} has {} qubits, policy expects {}",
            pattern.num_qubits(),
            policy.config().num_qubits
        )));
    }
    let mut optimizer = Adam::new(policy.num_parameters());
    let mut report = TrainReport {
        rows: Vec::with_capacity(config.updates),
        wall_clock_seconds: Vec::with_capacity(config.updates),
    };
    let make_env = || DisentangleEnv::<f64>::new(pattern.clone(), env_config.clone());
    for u in 0..config.updates {
        let started = std::time::Instant::now();
        let batch = collect_rollouts(
            policy,
            make_env,
            config.episodes_per_update,
            derive_seed(config.seed, STREAM_ROLLOUT, u as u64),
        )?;
        let stats = update(
            policy,
            &mut optimizer,
            &batch,
            config,
            derive_seed(config.seed, STREAM_SHUFFLE, u as u64),
        )?;
        let number = u + 1;
        let eval = if config.eval_every > 0 && number % config.eval_every == 0 {
            let seed = derive_seed(config.seed, STREAM_EVAL, u as u64);
            evaluate(
                policy,
                std::slice::from_ref(pattern),
                config.eval_states,
                seed,
                env_config,
                true,
            )?
            .pop()
        } else {
            None
        };
        let row = UpdateRow {
            update: number,
            episodes: batch.trajectories.len(),
            samples: batch.num_samples(),
            mean_return: batch.mean_return(),
            success_rate: batch.success_rate(),
            mean_gates: batch.mean_success_length(),
            policy_loss: stats.loss.policy_loss,
            value_loss: stats.loss.value_loss,
            entropy: stats.loss.entropy,
            approx_kl: stats.loss.approx_kl,
            clip_fraction: stats.loss.clip_fraction,
            grad_norm: stats.grad_norm,
            eval_success_rate: eval.as_ref().and_then(|m| m.success_rate),
            eval_mean_gates: eval.as_ref().and_then(|m| m.mean_gates),
            eval_gate_std: eval.as_ref().and_then(|m| m.gate_std),
        };
        on_update(&row);
        report.rows.push(row);
        report.wall_clock_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(report)
}
