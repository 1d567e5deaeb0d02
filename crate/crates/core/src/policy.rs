//! Modular policy `f_post ∘ f_PQC ∘ f_pre` and its critic.
//!
//! All trainable reals live in one flat vector, split into contiguous module
//! blocks: encoder, projection, PQC angles, head, critic. The classical
//! variant has no projection or PQC block and its head reads the latent
//! vector directly.

use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{num_actions, Observation, FEATURES_PER_PAIR};
use crate::error::{invalid, Error, Result};
use crate::nn::{Activation, Mlp, MlpCache};
use crate::pqc::{count_pqc_parameters, pqc_forward, pqc_gradient, CircuitConfig, Entangler, PqcJacobian};
use crate::qsim::MAX_QUBITS;

/// Refinement treats a step as zero-progress below this total entropy drop.
pub const REPEAT_PROGRESS_TOL: f64 = 1e-9;

/// Output layer gain of the actor head at initialization; keeps the initial
/// policy close to uniform.
const HEAD_OUTPUT_GAIN: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadType {
    /// Projection, PQC and postprocessor MLP.
    Hybrid,
    /// Plain MLP head on the latent vector.
    Mlp,
}

impl std::fmt::Display for HeadType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HeadType::Hybrid => "hybrid",
            HeadType::Mlp => "mlp",
        })
    }
}

impl std::str::FromStr for HeadType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(HeadType::Hybrid),
            "mlp" => Ok(HeadType::Mlp),
            other => Err(invalid(format!("unknown head {other:?} (expected hybrid or mlp)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub hidden_sizes: Vec<usize>,
    pub latent_dim: usize,
    pub activation: Activation,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![128, 64],
            latent_dim: 32,
            activation: Activation::Tanh,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Qubits of the system being disentangled.
    pub num_qubits: usize,
    pub encoder: EncoderConfig,
    pub head: HeadType,
    /// Latent circuit; ignored by the classical head.
    pub pqc: CircuitConfig,
    /// Hidden widths of the postprocessor (hybrid) or the head (classical).
    pub head_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl PolicyConfig {
    /// Defaults: encoder `[input → 128 → 64 → 32]`, PQC 4 qubits × 3 layers
    /// (chain), head hidden `[32]`, critic `[input → 128 → 64 → 1]`.
    pub fn new(num_qubits: usize, head: HeadType) -> Self {
        Self {
            num_qubits,
            encoder: EncoderConfig::default(),
            head,
            pqc: CircuitConfig {
                num_qubits: 4,
                num_layers: 3,
                entangler: Entangler::Chain,
            },
            head_hidden: vec![32],
            critic_hidden: vec![128, 64],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_QUBITS).contains(&self.num_qubits) {
            return Err(invalid(format!(
                "system qubits must be in [2, {MAX_QUBITS}], got {}",
                self.num_qubits
            )));
        }
        if self.encoder.latent_dim == 0 {
            return Err(invalid("encoder latent_dim must be at least 1"));
        }
        for (name, sizes) in [
            ("encoder hidden_sizes", &self.encoder.hidden_sizes),
            ("head_hidden", &self.head_hidden),
            ("critic_hidden", &self.critic_hidden),
        ] {
            if sizes.contains(&0) {
                return Err(invalid(format!("{name} must be positive, got {sizes:?}")));
            }
        }
        if self.head == HeadType::Hybrid {
            self.pqc.validate()?;
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        num_actions(self.num_qubits) * FEATURES_PER_PAIR
    }

    pub fn num_actions(&self) -> usize {
        num_actions(self.num_qubits)
    }
}

/// Trainable reals per module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    pub encoder: usize,
    pub projection: usize,
    pub pqc: usize,
    pub head: usize,
    pub critic: usize,
    /// Encoder, projection, PQC and head.
    pub actor: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    encoder: Range<usize>,
    projection: Range<usize>,
    pqc: Range<usize>,
    head: Range<usize>,
    critic: Range<usize>,
}

#[derive(Clone, Debug)]
struct Networks {
    encoder: Mlp,
    projection: Option<Mlp>,
    head: Mlp,
    critic: Mlp,
}

impl Networks {
    fn build(config: &PolicyConfig) -> Result<Self> {
        config.validate()?;
        let enc = &config.encoder;
        let mut enc_sizes = vec![config.input_dim()];
        enc_sizes.extend(&enc.hidden_sizes);
        enc_sizes.push(enc.latent_dim);
        let head_in = match config.head {
            HeadType::Hybrid => config.pqc.num_qubits,
            HeadType::Mlp => enc.latent_dim,
        };
        let mut head_sizes = vec![head_in];
        head_sizes.extend(&config.head_hidden);
        head_sizes.push(config.num_actions());
        let mut critic_sizes = vec![config.input_dim()];
        critic_sizes.extend(&config.critic_hidden);
        critic_sizes.push(1);
        Ok(Self {
            encoder: Mlp::new(enc_sizes, enc.activation)?,
            projection: match config.head {
                HeadType::Hybrid => Some(Mlp::new(vec![enc.latent_dim, config.pqc.num_qubits], Activation::Tanh)?),
                HeadType::Mlp => None,
            },
            head: Mlp::new(head_sizes, enc.activation)?,
            critic: Mlp::new(critic_sizes, enc.activation)?,
        })
    }

    fn layout(&self, config: &PolicyConfig) -> Layout {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let encoder = take(self.encoder.num_parameters());
        let projection = take(self.projection.as_ref().map_or(0, Mlp::num_parameters));
        let pqc = take(match config.head {
            HeadType::Hybrid => count_pqc_parameters(&config.pqc),
            HeadType::Mlp => 0,
        });
        let head = take(self.head.num_parameters());
        let critic = take(self.critic.num_parameters());
        Layout {
            encoder,
            projection,
            pqc,
            head,
            critic,
        }
    }
}

/// Softmax distribution over pair actions.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDistribution {
    logits: Vec<f64>,
    probabilities: Vec<f64>,
}

impl ActionDistribution {
    pub fn from_logits(logits: Vec<f64>) -> Result<Self> {
        if logits.is_empty() {
            return Err(invalid("empty logit vector"));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::Numeric(format!("non-finite logits {logits:?}")));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        let probabilities = exp.iter().map(|e| e / total).collect();
        Ok(Self { logits, probabilities })
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn num_actions(&self) -> usize {
        self.logits.len()
    }

    /// Computed from the logits, so it stays finite for tiny probabilities.
    pub fn log_prob(&self, action: usize) -> f64 {
        let max = self.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + self.logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        self.logits[action] - lse
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        (0..self.num_actions())
            .filter(|&a| self.probabilities[a] > 0.0)
            .map(|a| -self.probabilities[a] * self.log_prob(a))
            .sum()
    }

    /// Most probable action, lowest index on ties.
    pub fn argmax(&self) -> usize {
        self.ranked()[0]
    }

    /// Actions by descending probability, lower index first on ties.
    pub fn ranked(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_actions()).collect();
        order.sort_by(|&a, &b| self.probabilities[b].total_cmp(&self.probabilities[a]).then(a.cmp(&b)));
        order
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        WeightedIndex::new(&self.probabilities)
            .expect("softmax weights are positive and finite")
            .sample(rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Sample,
    Greedy,
}

/// What the previous step did, as seen by action refinement.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SelectionHistory {
    pub previous_action: Option<usize>,
    /// `Σ_j S_j(before) - Σ_j S_j(after)` of the previous step.
    pub previous_reduction: f64,
}

impl SelectionHistory {
    pub fn record(&mut self, action: usize, entropies_before: &[f64], entropies_after: &[f64]) {
        self.previous_action = Some(action);
        self.previous_reduction = entropies_before.iter().sum::<f64>() - entropies_after.iter().sum::<f64>();
    }
}

/// Picks an action. With refinement on, a pair that was just applied without
/// reducing total entropy is not chosen again immediately; the best-ranked
/// other pair is taken instead (in sample mode the draw is repeated without
/// the blocked pair).
pub fn select_action<R: Rng + ?Sized>(
    dist: &ActionDistribution,
    mode: SelectionMode,
    refinement: bool,
    history: &SelectionHistory,
    rng: &mut R,
) -> usize {
    let blocked = match history.previous_action {
        Some(a) if refinement && history.previous_reduction < REPEAT_PROGRESS_TOL && dist.num_actions() > 1 => Some(a),
        _ => None,
    };
    match mode {
        SelectionMode::Greedy => dist
            .ranked()
            .into_iter()
            .find(|&a| Some(a) != blocked)
            .expect("at least one unblocked action"),
        SelectionMode::Sample => {
            let Some(b) = blocked else {
                return dist.sample(rng);
            };
            let mut w = dist.probabilities.clone();
            w[b] = 0.0;
            match WeightedIndex::new(&w) {
                Ok(d) => d.sample(rng),
                // all remaining mass underflowed
                Err(_) => dist.ranked().into_iter().find(|&a| a != b).unwrap(),
            }
        }
    }
}

/// Intermediate values of one actor forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ActorPass {
    encoder: MlpCache,
    hybrid: Option<HybridPass>,
    head: MlpCache,
    pub distribution: ActionDistribution,
}

#[derive(Clone, Debug)]
struct HybridPass {
    projection: MlpCache,
    /// `tanh` of the projection output.
    squashed: Vec<f64>,
    jacobian: PqcJacobian<f64>,
}

#[derive(Clone, Debug)]
pub struct CriticPass {
    cache: MlpCache,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Policy {
    config: PolicyConfig,
    nets: Networks,
    layout: Layout,
    params: Vec<f64>,
}

impl Policy {
    /// Xavier-uniform weights, zero biases, actor output layer scaled by 0.01,
    /// PQC angles uniform in `[-π, π)`.
    pub fn new(config: PolicyConfig, seed: u64) -> Result<Self> {
        let nets = Networks::build(&config)?;
        let layout = nets.layout(&config);
        let mut params = vec![0.0; layout.critic.end];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        nets.encoder.init(&mut params[layout.encoder.clone()], 1.0, &mut rng);
        if let Some(p) = &nets.projection {
            p.init(&mut params[layout.projection.clone()], 1.0, &mut rng);
        }
        for a in &mut params[layout.pqc.clone()] {
            *a = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        }
        nets.head
            .init(&mut params[layout.head.clone()], HEAD_OUTPUT_GAIN, &mut rng);
        nets.critic.init(&mut params[layout.critic.clone()], 1.0, &mut rng);
        Ok(Self {
            config,
            nets,
            layout,
            params,
        })
    }

    pub fn from_parameters(config: PolicyConfig, params: Vec<f64>) -> Result<Self> {
        let nets = Networks::build(&config)?;
        let layout = nets.layout(&config);
        if params.len() != layout.critic.end {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                layout.critic.end,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(Self {
            config,
            nets,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.len()
    }

    pub fn count_parameters(&self) -> ParameterCount {
        let l = &self.layout;
        let actor = l.encoder.len() + l.projection.len() + l.pqc.len() + l.head.len();
        ParameterCount {
            encoder: l.encoder.len(),
            projection: l.projection.len(),
            pqc: l.pqc.len(),
            head: l.head.len(),
            critic: l.critic.len(),
            actor,
            total: actor + l.critic.len(),
        }
    }

    /// Flat-vector ranges of the module blocks, in storage order.
    pub fn module_ranges(&self) -> [(&'static str, Range<usize>); 5] {
        let l = &self.layout;
        [
            ("encoder", l.encoder.clone()),
            ("projection", l.projection.clone()),
            ("pqc", l.pqc.clone()),
            ("head", l.head.clone()),
            ("critic", l.critic.clone()),
        ]
    }

    fn input(&self, obs: &Observation<f64>) -> Result<Vec<f64>> {
        if obs.num_qubits() != self.config.num_qubits {
            return Err(invalid(format!(
                "policy expects {}-qubit observations, got {}",
                self.config.num_qubits,
                obs.num_qubits()
            )));
        }
        Ok(obs.flat())
    }

    /// Latent vector `z = f_pre(observation)`.
    pub fn encode(&self, obs: &Observation<f64>) -> Result<Vec<f64>> {
        let x = self.input(obs)?;
        Ok(self
            .nets
            .encoder
            .forward(&self.params[self.layout.encoder.clone()], &x)
            .output()
            .to_vec())
    }

    /// Dispatches on the configured head.
    pub fn forward(&self, obs: &Observation<f64>) -> Result<ActionDistribution> {
        Ok(self.actor_pass(obs, false)?.distribution)
    }

    pub fn forward_hybrid(&self, obs: &Observation<f64>) -> Result<ActionDistribution> {
        if self.config.head != HeadType::Hybrid {
            return Err(invalid("policy has a classical head"));
        }
        self.forward(obs)
    }

    pub fn forward_classical(&self, obs: &Observation<f64>) -> Result<ActionDistribution> {
        if self.config.head != HeadType::Mlp {
            return Err(invalid("policy has a hybrid head"));
        }
        self.forward(obs)
    }

    pub fn critic_value(&self, obs: &Observation<f64>) -> Result<f64> {
        Ok(self.critic_pass(obs)?.value)
    }

    /// Forward pass that keeps everything needed by [`Policy::actor_backward`].
    pub fn actor_forward(&self, obs: &Observation<f64>) -> Result<ActorPass> {
        self.actor_pass(obs, true)
    }

    fn actor_pass(&self, obs: &Observation<f64>, with_jacobian: bool) -> Result<ActorPass> {
        let x = self.input(obs)?;
        let l = &self.layout;
        let encoder = self.nets.encoder.forward(&self.params[l.encoder.clone()], &x);
        let (hybrid, head_input) = match &self.nets.projection {
            Some(proj) => {
                let projection = proj.forward(&self.params[l.projection.clone()], encoder.output());
                let squashed: Vec<f64> = projection.output().iter().map(|u| u.tanh()).collect();
                let angles: Vec<f64> = squashed.iter().map(|t| std::f64::consts::PI * t).collect();
                let theta = &self.params[l.pqc.clone()];
                let jacobian = if with_jacobian {
                    pqc_gradient(&self.config.pqc, theta, &angles)?
                } else {
                    PqcJacobian {
                        outputs: pqc_forward(&self.config.pqc, theta, &angles)?,
                        d_angles: Vec::new(),
                        d_inputs: Vec::new(),
                    }
                };
                let m = jacobian.outputs.clone();
                (
                    Some(HybridPass {
                        projection,
                        squashed,
                        jacobian,
                    }),
                    m,
                )
            }
            None => (None, encoder.output().to_vec()),
        };
        let head = self.nets.head.forward(&self.params[l.head.clone()], &head_input);
        let distribution = ActionDistribution::from_logits(head.output().to_vec())?;
        Ok(ActorPass {
            encoder,
            hybrid,
            head,
            distribution,
        })
    }

    /// Accumulates `∂L/∂params` into `grad` given `∂L/∂logits`.
    pub fn actor_backward(&self, pass: &ActorPass, d_logits: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let l = &self.layout;
        let d_head_in = self.nets.head.backward(
            &self.params[l.head.clone()],
            &pass.head,
            d_logits,
            &mut grad[l.head.clone()],
        );
        let d_z = match (&self.nets.projection, &pass.hybrid) {
            (Some(proj), Some(h)) => {
                assert!(
                    !h.jacobian.d_angles.is_empty(),
                    "actor pass was computed without the circuit Jacobian"
                );
                let (d_theta, d_angles) = h.jacobian.vjp(&d_head_in);
                for (g, d) in grad[l.pqc.clone()].iter_mut().zip(&d_theta) {
                    *g += d;
                }
                let d_u: Vec<f64> = d_angles
                    .iter()
                    .zip(&h.squashed)
                    .map(|(d, t)| d * std::f64::consts::PI * (1.0 - t * t))
                    .collect();
                proj.backward(
                    &self.params[l.projection.clone()],
                    &h.projection,
                    &d_u,
                    &mut grad[l.projection.clone()],
                )
            }
            _ => d_head_in,
        };
        self.nets.encoder.backward(
            &self.params[l.encoder.clone()],
            &pass.encoder,
            &d_z,
            &mut grad[l.encoder.clone()],
        );
    }

    pub fn critic_pass(&self, obs: &Observation<f64>) -> Result<CriticPass> {
        let x = self.input(obs)?;
        let cache = self.nets.critic.forward(&self.params[self.layout.critic.clone()], &x);
        let value = cache.output()[0];
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite critic value {value}")));
        }
        Ok(CriticPass { cache, value })
    }

    /// Accumulates `d_value · ∂V/∂params` into `grad`.
    pub fn critic_backward(&self, pass: &CriticPass, d_value: f64, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let r = self.layout.critic.clone();
        self.nets
            .critic
            .backward(&self.params[r.clone()], &pass.cache, &[d_value], &mut grad[r]);
    }

    /// `log π(action | obs)` and its gradient.
    pub fn log_prob_gradient(&self, obs: &Observation<f64>, action: usize) -> Result<(f64, Vec<f64>)> {
        let pass = self.actor_forward(obs)?;
        let p = pass.distribution.probabilities();
        let mut d_logits: Vec<f64> = p.iter().map(|&x| -x).collect();
        d_logits[action] += 1.0;
        let mut grad = vec![0.0; self.params.len()];
        self.actor_backward(&pass, &d_logits, &mut grad);
        Ok((pass.distribution.log_prob(action), grad))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            checksum: checksum(&self.config, &self.params),
            parameter_count: self.params.len(),
            config: self.config.clone(),
            parameters: self.params.clone(),
        }
    }

    /// Restores a policy. With `expected` set, the stored configuration must
    /// match it exactly.
    pub fn from_checkpoint(ck: Checkpoint, expected: Option<&PolicyConfig>) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                ck.format, ck.version
            )));
        }
        let actual = checksum(&ck.config, &ck.parameters);
        if actual != ck.checksum {
            return Err(Error::Checkpoint(format!(
                "checksum mismatch: stored {}, computed {actual}",
                ck.checksum
            )));
        }
        if let Some(cfg) = expected {
            if *cfg != ck.config {
                return Err(Error::Checkpoint(format!(
                    "checkpoint config {} does not match requested config {}",
                    serde_json::to_string(&ck.config)?,
                    serde_json::to_string(cfg)?
                )));
            }
        }
        if ck.parameter_count != ck.parameters.len() {
            return Err(Error::Checkpoint(
                "parameter count does not match stored parameters".into(),
            ));
        }
        Self::from_parameters(ck.config, ck.parameters).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(&self.to_checkpoint())?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path, expected: Option<&PolicyConfig>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let ck: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_checkpoint(ck, expected)
    }
}

pub const CHECKPOINT_FORMAT: &str = "disentangle-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON checkpoint: config echo, flat parameters and a SHA-256 of both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: PolicyConfig,
    pub parameter_count: usize,
    pub parameters: Vec<f64>,
    pub checksum: String,
}

fn checksum(config: &PolicyConfig, params: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    for p in params {
        h.update(p.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DisentangleEnv, EnvConfig};
    use crate::qsim::EntanglementPattern;

    fn obs(n: usize, seed: u64) -> Observation<f64> {
        let mut env =
            DisentangleEnv::<f64>::new(EntanglementPattern::fully_entangled(n).unwrap(), EnvConfig::default()).unwrap();
        env.reset(seed).unwrap()
    }

    fn small(n: usize, head: HeadType) -> PolicyConfig {
        let mut c = PolicyConfig::new(n, head);
        c.encoder.hidden_sizes = vec![12];
        c.encoder.latent_dim = 6;
        c.pqc = CircuitConfig::new(3, 2, Entangler::Chain).unwrap();
        c.head_hidden = vec![5];
        c.critic_hidden = vec![7];
        c
    }

    #[test]
    fn default_parameter_counts() {
        let p = Policy::new(PolicyConfig::new(4, HeadType::Hybrid), 0).unwrap();
        let c = p.count_parameters();
        assert_eq!(c.encoder, 96 * 128 + 128 + 128 * 64 + 64 + 64 * 32 + 32);
        assert_eq!(c.projection, 32 * 4 + 4);
        assert_eq!(c.pqc, 24);
        assert_eq!(c.head, 4 * 32 + 32 + 32 * 6 + 6);
        assert_eq!(c.critic, 96 * 128 + 128 + 128 * 64 + 64 + 64 + 1);
        assert_eq!(c.total, p.num_parameters());
        let ranges = p.module_ranges();
        assert_eq!(ranges.iter().map(|(_, r)| r.len()).sum::<usize>(), c.total);
    }

    #[test]
    fn encoder_example_count() {
        // 6 qubits: 15 pairs × 16 = 240 inputs
        let mut c = PolicyConfig::new(6, HeadType::Mlp);
        c.encoder.hidden_sizes = vec![64];
        let p = Policy::new(c, 0).unwrap();
        assert_eq!(p.count_parameters().encoder, 17_504);
    }

    #[test]
    fn head_variants_differ_by_module_sums() {
        let h = Policy::new(PolicyConfig::new(5, HeadType::Hybrid), 1)
            .unwrap()
            .count_parameters();
        let m = Policy::new(PolicyConfig::new(5, HeadType::Mlp), 1)
            .unwrap()
            .count_parameters();
        assert_eq!(h.encoder, m.encoder);
        assert_eq!(h.critic, m.critic);
        assert_eq!(m.projection + m.pqc, 0);
        assert_eq!(m.head, 32 * 32 + 32 + 32 * 10 + 10);
        assert_eq!(
            h.total as i64 - m.total as i64,
            (h.projection + h.pqc + h.head) as i64 - m.head as i64
        );
    }

    #[test]
    fn zero_encoder_weights_give_bias() {
        let mut p = Policy::new(small(3, HeadType::Hybrid), 2).unwrap();
        let r = p.module_ranges()[0].1.clone();
        let bias_start = r.end - 6;
        for (k, v) in p.parameters_mut()[r.clone()].iter_mut().enumerate() {
            *v = if r.start + k >= bias_start { 0.1 * k as f64 } else { 0.0 };
        }
        let z = p.encode(&obs(3, 1)).unwrap();
        let want: Vec<f64> = (bias_start..r.end).map(|k| 0.1 * (k - r.start) as f64).collect();
        assert_eq!(z, want);
        assert_eq!(z, p.encode(&obs(3, 1)).unwrap());
    }

    #[test]
    fn zero_head_gives_uniform() {
        for head in [HeadType::Hybrid, HeadType::Mlp] {
            let mut p = Policy::new(small(4, head), 3).unwrap();
            let r = p.module_ranges()[3].1.clone();
            p.parameters_mut()[r].fill(0.0);
            let d = p.forward(&obs(4, 2)).unwrap();
            assert!(d.probabilities().iter().all(|&q| (q - 1.0 / 6.0).abs() < 1e-15));
            assert_eq!(d.argmax(), 0);
        }
    }

    #[test]
    fn head_type_guards() {
        let p = Policy::new(small(3, HeadType::Mlp), 0).unwrap();
        assert!(p.forward_hybrid(&obs(3, 0)).is_err());
        assert!(p.forward_classical(&obs(3, 0)).is_ok());
        assert!(p.forward(&obs(4, 0)).is_err());
    }

    #[test]
    fn softmax_properties() {
        let d = ActionDistribution::from_logits(vec![0.3, -1.2, 2.0, 0.0]).unwrap();
        assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted = ActionDistribution::from_logits(vec![100.3, 98.8, 102.0, 100.0]).unwrap();
        for (a, b) in d.probabilities().iter().zip(shifted.probabilities()) {
            assert!((a - b).abs() < 1e-12);
        }
        for a in 0..4 {
            assert!((d.log_prob(a) - d.probabilities()[a].ln()).abs() < 1e-12);
        }
        assert!(ActionDistribution::from_logits(vec![f64::NAN]).is_err());
    }

    #[test]
    fn selection_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let uniform = ActionDistribution::from_logits(vec![0.0; 6]).unwrap();
        let none = SelectionHistory::default();
        assert_eq!(
            select_action(&uniform, SelectionMode::Greedy, false, &none, &mut rng),
            0
        );

        let d = ActionDistribution::from_logits(vec![0.1, 2.0, 1.0]).unwrap();
        let mut h = SelectionHistory::default();
        // first application of pair 1 removes one bit
        h.record(1, &[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]);
        assert_eq!(select_action(&d, SelectionMode::Greedy, true, &h, &mut rng), 1);
        // repeating it changes nothing
        h.record(1, &[0.5, 0.5, 0.2], &[0.5, 0.5, 0.2]);
        assert_eq!(select_action(&d, SelectionMode::Greedy, false, &h, &mut rng), 1);
        assert_eq!(select_action(&d, SelectionMode::Greedy, true, &h, &mut rng), 2);
        for _ in 0..100 {
            assert_ne!(select_action(&d, SelectionMode::Sample, true, &h, &mut rng), 1);
        }
    }

    fn check_grad(analytic: &[f64], numeric: &[f64]) {
        for (k, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            let tol = 1e-4 * a.abs().max(n.abs()).max(1e-2);
            assert!((a - n).abs() <= tol, "param {k}: analytic {a}, numeric {n}");
        }
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let h = 1e-5;
        for head in [HeadType::Hybrid, HeadType::Mlp] {
            let p = Policy::new(small(4, head), 11).unwrap();
            let o = obs(4, 5);
            let (_, grad) = p.log_prob_gradient(&o, 3).unwrap();
            let numeric: Vec<f64> = (0..p.num_parameters())
                .map(|k| {
                    let mut a = p.clone();
                    a.params[k] += h;
                    let mut b = p.clone();
                    b.params[k] -= h;
                    (a.forward(&o).unwrap().log_prob(3) - b.forward(&o).unwrap().log_prob(3)) / (2.0 * h)
                })
                .collect();
            check_grad(&grad, &numeric);
        }
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let h = 1e-5;
        let p = Policy::new(small(3, HeadType::Hybrid), 12).unwrap();
        let o = obs(3, 9);
        let pass = p.critic_pass(&o).unwrap();
        let mut grad = vec![0.0; p.num_parameters()];
        p.critic_backward(&pass, 1.0, &mut grad);
        let critic = p.module_ranges()[4].1.clone();
        assert!(grad[..critic.start].iter().all(|&g| g == 0.0));
        for k in critic {
            let mut a = p.clone();
            a.params[k] += h;
            let mut b = p.clone();
            b.params[k] -= h;
            let fd = (a.critic_value(&o).unwrap() - b.critic_value(&o).unwrap()) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn checkpoint_round_trip_and_tamper() {
        let p = Policy::new(small(3, HeadType::Hybrid), 4).unwrap();
        let dir = std::env::temp_dir().join(format!("ck-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("policy.json");
        p.save(&path).unwrap();
        let q = Policy::load(&path, Some(p.config())).unwrap();
        assert_eq!(q.parameters(), p.parameters());

        let other = small(3, HeadType::Mlp);
        assert!(matches!(Policy::load(&path, Some(&other)), Err(Error::Checkpoint(_))));

        let mut ck = p.to_checkpoint();
        ck.parameters[0] += 1e-12;
        assert!(matches!(Policy::from_checkpoint(ck, None), Err(Error::Checkpoint(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
