//! Partially observed disentangling environment.
//!
//! The hidden state is a [`Statevector`]; the agent only ever sees an
//! [`Observation`] built from the two-qubit reduced states. An action picks a
//! pair, the local solver acts on it, and the reward is the normalized
//! single-qubit entropy reduction minus the number of qubits still entangled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::qsim::{sample_pattern_state, EntanglementPattern, PairDensityMatrix, Statevector};
use crate::scalar::{c, Real};
use crate::solver::{apply_local_solver, DisentanglingGate, GateJson};

pub const DEFAULT_MAX_BUDGET: usize = 128;

/// Mean single-qubit entropy (bits) below which a state counts as disentangled.
/// The same threshold decides whether an individual qubit is still entangled.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

/// A reward summand is zero when both entropies are below this.
pub const ZERO_ENTROPY_FLOOR: f64 = 1e-12;

pub const FEATURES_PER_PAIR: usize = 16;

/// `L(L-1)/2`.
pub fn num_actions(num_qubits: usize) -> usize {
    num_qubits * num_qubits.saturating_sub(1) / 2
}

/// Lexicographic action index -> pair.
pub fn pair_from_action(num_qubits: usize, action: usize) -> Result<(usize, usize)> {
    if action >= num_actions(num_qubits) {
        return Err(invalid(format!(
            "action {action} out of range for {num_qubits} qubits ({} actions)",
            num_actions(num_qubits)
        )));
    }
    let mut a = action;
    for i in 0..num_qubits {
        let row = num_qubits - 1 - i;
        if a < row {
            return Ok((i, i + 1 + a));
        }
        a -= row;
    }
    unreachable!("action bounds checked above")
}

/// Pair -> lexicographic action index.
pub fn action_from_pair(num_qubits: usize, (i, j): (usize, usize)) -> Result<usize> {
    if !(i < j && j < num_qubits) {
        return Err(invalid(format!("pair ({i}, {j}) invalid for {num_qubits} qubits")));
    }
    let before: usize = (0..i).map(|r| num_qubits - 1 - r).sum();
    Ok(before + (j - i - 1))
}

const UPPER: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Real feature vector of a pair state: the 4 diagonal entries, then real and
/// imaginary parts of the strict upper triangle in row-major order.
pub fn featurize_pair<T: Real>(rho: &PairDensityMatrix<T>) -> [T; FEATURES_PER_PAIR] {
    let m = rho.matrix();
    let mut out = [T::zero(); FEATURES_PER_PAIR];
    for k in 0..4 {
        out[k] = m[(k, k)].re;
    }
    for (n, &(r, s)) in UPPER.iter().enumerate() {
        out[4 + 2 * n] = m[(r, s)].re;
        out[5 + 2 * n] = m[(r, s)].im;
    }
    out
}

/// Inverse of [`featurize_pair`], validating the density-matrix invariants within `1e-8`.
pub fn reconstruct_pair<T: Real>(
    pair: (usize, usize),
    features: &[T; FEATURES_PER_PAIR],
) -> Result<PairDensityMatrix<T>> {
    let mut m = CMatrix::zeros(4);
    for k in 0..4 {
        m[(k, k)] = c(features[k], T::zero());
    }
    for (n, &(r, s)) in UPPER.iter().enumerate() {
        let z = c(features[4 + 2 * n], features[5 + 2 * n]);
        m[(r, s)] = z;
        m[(s, r)] = z.conj();
    }
    PairDensityMatrix::new(pair, m, 1e-8)
}

/// Feature vectors of every pair reduced state, pairs in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation<T> {
    num_qubits: usize,
    features: Vec<[T; FEATURES_PER_PAIR]>,
}

impl<T: Real> Observation<T> {
    pub fn new(num_qubits: usize, features: Vec<[T; FEATURES_PER_PAIR]>) -> Result<Self> {
        if num_qubits < 2 {
            return Err(invalid("observations need at least two qubits"));
        }
        if features.len() != num_actions(num_qubits) {
            return Err(invalid(format!(
                "expected {} pair feature vectors, got {}",
                num_actions(num_qubits),
                features.len()
            )));
        }
        Ok(Self { num_qubits, features })
    }

    pub(crate) fn from_state(state: &Statevector<T>) -> Self {
        let features = state.all_pair_densities().iter().map(featurize_pair).collect();
        Self {
            num_qubits: state.num_qubits(),
            features,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_pairs(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[[T; FEATURES_PER_PAIR]] {
        &self.features
    }

    /// All pair features concatenated in pair order.
    pub fn flat(&self) -> Vec<T> {
        self.features.iter().flatten().copied().collect()
    }

    pub fn flat_len(&self) -> usize {
        self.features.len() * FEATURES_PER_PAIR
    }

    /// Reduced state of the `k`-th pair.
    pub fn pair_density(&self, k: usize) -> Result<PairDensityMatrix<T>> {
        let pair = pair_from_action(self.num_qubits, k)?;
        reconstruct_pair(pair, &self.features[k])
    }
}

/// Result of one environment transition.
#[derive(Clone, Debug)]
pub struct StepOutcome<T> {
    pub reward: T,
    pub next_observation: Observation<T>,
    pub done: bool,
    pub success: bool,
    /// Entropy of every qubit after the step, in bits.
    pub per_qubit_entropy: Vec<T>,
    /// Qubits with entropy above the success threshold.
    pub entangled_count: usize,
    pub gate: Option<DisentanglingGate<T>>,
}

/// `true` iff the mean entropy is below [`SUCCESS_THRESHOLD`].
pub fn is_success<T: Real>(per_qubit_entropy: &[T]) -> bool {
    if per_qubit_entropy.is_empty() {
        return true;
    }
    let mean = per_qubit_entropy.iter().copied().sum::<T>() / T::lit(per_qubit_entropy.len() as f64);
    mean < T::lit(SUCCESS_THRESHOLD)
}

pub fn entangled_count<T: Real>(per_qubit_entropy: &[T]) -> usize {
    let eps = T::lit(SUCCESS_THRESHOLD);
    per_qubit_entropy.iter().filter(|&&s| s > eps).count()
}

/// `Σ_j (S_before - S_after) / max(S_before, S_after) - n(after)`.
pub fn step_reward<T: Real>(before: &[T], after: &[T]) -> T {
    assert_eq!(before.len(), after.len());
    let floor = T::lit(ZERO_ENTROPY_FLOOR);
    let gain: T = before
        .iter()
        .zip(after)
        .map(|(&b, &a)| {
            let m = b.max(a);
            if m < floor {
                T::zero()
            } else {
                (b - a) / m
            }
        })
        .sum();
    gain - T::lit(entangled_count(after) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub max_budget: usize,
    /// Keep a per-step [`EpisodeRecord`] (gate matrices included).
    pub record: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            max_budget: DEFAULT_MAX_BUDGET,
            record: false,
        }
    }
}

/// One line of an episode trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: usize,
    pub pair: (usize, usize),
    pub reward: f64,
    pub entropies: Vec<f64>,
    pub mean_entropy: f64,
    pub done: bool,
    pub success: bool,
    pub gate: GateJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub initial_pattern: String,
    pub seed: Option<u64>,
    pub num_qubits: usize,
    pub initial_entropies: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub success: bool,
    pub gate_count: usize,
}

/// Summary row: `pattern, seed, success, gate_count, final_mean_entropy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub pattern: String,
    pub seed: Option<u64>,
    pub success: bool,
    pub gate_count: usize,
    pub final_mean_entropy: f64,
}

impl EpisodeRecord {
    /// Writes one JSON object per step.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn summary(&self) -> EpisodeSummary {
        let last = self
            .steps
            .last()
            .map(|s| s.entropies.as_slice())
            .unwrap_or(&self.initial_entropies);
        let final_mean_entropy = if last.is_empty() {
            0.0
        } else {
            last.iter().sum::<f64>() / last.len() as f64
        };
        EpisodeSummary {
            pattern: self.initial_pattern.clone(),
            seed: self.seed,
            success: self.success,
            gate_count: self.gate_count,
            final_mean_entropy,
        }
    }
}

/// Disentangling environment over a fixed initial-state pattern.
///
/// The hidden state is not reachable through the public API:
///
/// ```compile_fail
/// use disentangle::env::{DisentangleEnv, EnvConfig};
/// use disentangle::qsim::EntanglementPattern;
/// let mut env = DisentangleEnv::<f64>::new(EntanglementPattern::parse("RRRR").unwrap(), EnvConfig::default()).unwrap();
/// env.reset(0).unwrap();
/// let amplitudes = env.state.unwrap().amplitudes().to_vec();
/// ```
#[derive(Clone, Debug)]
pub struct DisentangleEnv<T> {
    config: EnvConfig,
    pattern: EntanglementPattern,
    state: Option<Statevector<T>>,
    entropies: Vec<T>,
    steps: usize,
    done: bool,
    success: bool,
    record: Option<EpisodeRecord>,
}

impl<T: Real> DisentangleEnv<T> {
    pub fn new(pattern: EntanglementPattern, config: EnvConfig) -> Result<Self> {
        if pattern.num_qubits() < 2 {
            return Err(invalid("the environment needs at least two qubits"));
        }
        if config.max_budget == 0 {
            return Err(invalid("max_budget must be positive"));
        }
        Ok(Self {
            config,
            pattern,
            state: None,
            entropies: Vec::new(),
            steps: 0,
            done: false,
            success: false,
            record: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.pattern.num_qubits()
    }

    pub fn num_actions(&self) -> usize {
        num_actions(self.num_qubits())
    }

    pub fn pattern(&self) -> &EntanglementPattern {
        &self.pattern
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Samples a fresh hidden state from the pattern with a seeded generator.
    pub fn reset(&mut self, seed: u64) -> Result<Observation<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = sample_pattern_state(&self.pattern, &mut rng)?;
        Ok(self.start(state, self.pattern.label(), Some(seed)))
    }

    /// Switches pattern (same qubit count) and resets.
    pub fn reset_with_pattern(&mut self, pattern: EntanglementPattern, seed: u64) -> Result<Observation<T>> {
        if pattern.num_qubits() != self.num_qubits() {
            return Err(invalid(format!(
                "pattern {pattern} has {} qubits, environment has {}",
                pattern.num_qubits(),
                self.num_qubits()
            )));
        }
        self.pattern = pattern;
        self.reset(seed)
    }

    /// Starts an episode from a caller-supplied state.
    pub fn reset_with_state(&mut self, state: Statevector<T>, label: &str) -> Result<Observation<T>> {
        if state.num_qubits() != self.num_qubits() {
            return Err(invalid(format!(
                "state has {} qubits, environment has {}",
                state.num_qubits(),
                self.num_qubits()
            )));
        }
        Ok(self.start(state, label.to_string(), None))
    }

    fn start(&mut self, state: Statevector<T>, label: String, seed: Option<u64>) -> Observation<T> {
        self.entropies = state.single_qubit_entropies();
        let obs = Observation::from_state(&state);
        self.record = self.config.record.then(|| EpisodeRecord {
            initial_pattern: label,
            seed,
            num_qubits: state.num_qubits(),
            initial_entropies: self.entropies.iter().map(|e| e.as_f64()).collect(),
            steps: Vec::new(),
            success: false,
            gate_count: 0,
        });
        self.state = Some(state);
        self.steps = 0;
        self.done = false;
        self.success = false;
        obs
    }

    /// Applies the local solver to the pair encoded by `action`.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome<T>> {
        let num_qubits = self.num_qubits();
        let Some(state) = self.state.as_mut() else {
            return Err(Error::Protocol("step called before reset".into()));
        };
        if self.done {
            return Err(Error::Protocol("step called after the episode finished".into()));
        }
        let pair = pair_from_action(num_qubits, action)?;
        let gate = apply_local_solver(state, pair)?;
        let after = state.single_qubit_entropies();
        let reward = step_reward(&self.entropies, &after);
        self.steps += 1;
        let success = is_success(&after);
        let done = success || self.steps >= self.config.max_budget;
        let next_observation = Observation::from_state(state);
        self.entropies = after;
        self.done = done;
        self.success = success;

        if let Some(rec) = self.record.as_mut() {
            let entropies: Vec<f64> = self.entropies.iter().map(|e| e.as_f64()).collect();
            let mean_entropy = entropies.iter().sum::<f64>() / entropies.len() as f64;
            rec.steps.push(StepRecord {
                step: self.steps,
                action,
                pair,
                reward: reward.as_f64(),
                entropies,
                mean_entropy,
                done,
                success,
                gate: gate.to_json(),
            });
            rec.gate_count = self.steps;
            rec.success = success;
        }

        Ok(StepOutcome {
            reward,
            next_observation,
            done,
            success,
            entangled_count: entangled_count(&self.entropies),
            per_qubit_entropy: self.entropies.clone(),
            gate: Some(gate),
        })
    }

    pub fn observation(&self) -> Option<Observation<T>> {
        self.state.as_ref().map(Observation::from_state)
    }

    /// Current single-qubit entropies (bits).
    pub fn entropies(&self) -> &[T] {
        &self.entropies
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn is_success(&self) -> bool {
        self.success
    }

    pub fn record(&self) -> Option<&EpisodeRecord> {
        self.record.as_ref()
    }

    pub fn take_record(&mut self) -> Option<EpisodeRecord> {
        self.record.take()
    }
}

/// Episodic environment interface used by the trainer.
pub trait Environment {
    fn num_qubits(&self) -> usize;

    fn num_actions(&self) -> usize {
        num_actions(self.num_qubits())
    }

    fn reset(&mut self, seed: u64) -> Result<Observation<f64>>;

    fn step(&mut self, action: usize) -> Result<StepOutcome<f64>>;

    /// Single-qubit entropies of the current state.
    fn entropies(&self) -> Vec<f64>;
}

impl Environment for DisentangleEnv<f64> {
    fn num_qubits(&self) -> usize {
        DisentangleEnv::num_qubits(self)
    }

    fn reset(&mut self, seed: u64) -> Result<Observation<f64>> {
        DisentangleEnv::reset(self, seed)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<f64>> {
        DisentangleEnv::step(self, action)
    }

    fn entropies(&self) -> Vec<f64> {
        self.entropies.clone()
    }
}
