//! Hardware-efficient parameterized circuit used as a latent block.
//!
//! Circuit on `n` qubits starting from `|0...0>`:
//! 1. encoding layer `R_y(x_q)` on every qubit;
//! 2. per layer, `R_y(θʸ) R_z(θᶻ)` on every qubit (`R_z` acts first), then CZ
//!    on neighbours `(q, q + 1)` (plus `(n - 1, 0)` for a ring);
//! 3. readout `m_q = <Z_q>`.
//!
//! Expectations are exact. Gradients use the parameter-shift rule, which is
//! exact for rotations generated by Pauli operators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::{Statevector, MAX_QUBITS};
use crate::scalar::{c, c_real, Real, C};

pub const MAX_LAYERS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    /// Open chain, no wrap-around.
    #[default]
    Chain,
    Ring,
}

impl fmt::Display for Entangler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entangler::Chain => "chain",
            Entangler::Ring => "ring",
        })
    }
}

impl FromStr for Entangler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Entangler::Chain),
            "ring" => Ok(Entangler::Ring),
            other => Err(invalid(format!("unknown entangler {other:?} (expected chain or ring)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub num_qubits: usize,
    pub num_layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
}

impl CircuitConfig {
    pub fn new(num_qubits: usize, num_layers: usize, entangler: Entangler) -> Result<Self> {
        let cfg = Self {
            num_qubits,
            num_layers,
            entangler,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_QUBITS).contains(&self.num_qubits) {
            return Err(invalid(format!(
                "pqc qubits must be in [1, {MAX_QUBITS}], got {}",
                self.num_qubits
            )));
        }
        if !(1..=MAX_LAYERS).contains(&self.num_layers) {
            return Err(invalid(format!(
                "pqc layers must be in [1, {MAX_LAYERS}], got {}",
                self.num_layers
            )));
        }
        Ok(())
    }

    /// Rotation angles only; encoding angles are inputs.
    pub fn num_parameters(&self) -> usize {
        count_pqc_parameters(self)
    }

    fn entangling_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_qubits;
        let mut pairs: Vec<_> = (0..n.saturating_sub(1)).map(|q| (q, q + 1)).collect();
        if self.entangler == Entangler::Ring && n > 2 {
            pairs.push((n - 1, 0));
        }
        pairs
    }
}

/// `2 · qubits · layers`.
pub fn count_pqc_parameters(config: &CircuitConfig) -> usize {
    2 * config.num_qubits * config.num_layers
}

/// Rotation angles, laid out `[layer][qubit][(θʸ, θᶻ)]` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PqcParameters<T> {
    angles: Vec<T>,
}

impl<T: Real> PqcParameters<T> {
    pub fn new(config: &CircuitConfig, angles: Vec<T>) -> Result<Self> {
        if angles.len() != config.num_parameters() {
            return Err(invalid(format!(
                "expected {} pqc angles, got {}",
                config.num_parameters(),
                angles.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("pqc angles must be finite"));
        }
        Ok(Self { angles })
    }

    pub fn zeros(config: &CircuitConfig) -> Self {
        Self {
            angles: vec![T::zero(); config.num_parameters()],
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.angles
    }

    /// `(θʸ, θᶻ)` of `qubit` in `layer`.
    pub fn get(&self, num_qubits: usize, layer: usize, qubit: usize) -> (T, T) {
        let k = 2 * (layer * num_qubits + qubit);
        (self.angles[k], self.angles[k + 1])
    }
}

/// Index of `θʸ` (`axis = 0`) or `θᶻ` (`axis = 1`) in the flat angle slice.
pub fn angle_index(config: &CircuitConfig, layer: usize, qubit: usize, axis: usize) -> usize {
    2 * (layer * config.num_qubits + qubit) + axis
}

fn ry<T: Real>(theta: T) -> [C<T>; 4] {
    let half = theta * T::lit(0.5);
    let (s, co) = half.sin_cos();
    [c_real(co), c_real(-s), c_real(s), c_real(co)]
}

fn rz<T: Real>(theta: T) -> [C<T>; 4] {
    let half = theta * T::lit(0.5);
    let (s, co) = half.sin_cos();
    [
        c(co, -s),
        C::new(T::zero(), T::zero()),
        C::new(T::zero(), T::zero()),
        c(co, s),
    ]
}

fn check_shapes<T: Real>(config: &CircuitConfig, angles: &[T], inputs: &[T]) -> Result<()> {
    config.validate()?;
    if angles.len() != config.num_parameters() {
        return Err(invalid(format!(
            "expected {} pqc angles, got {}",
            config.num_parameters(),
            angles.len()
        )));
    }
    if inputs.len() != config.num_qubits {
        return Err(invalid(format!(
            "expected {} input angles, got {}",
            config.num_qubits,
            inputs.len()
        )));
    }
    if inputs.iter().chain(angles).any(|x| !x.is_finite()) {
        return Err(invalid("pqc angles must be finite"));
    }
    Ok(())
}

fn run<T: Real>(config: &CircuitConfig, angles: &[T], inputs: &[T]) -> Vec<T> {
    let n = config.num_qubits;
    let mut state = Statevector::<T>::zero_state(n).expect("qubit count validated");
    for (q, &x) in inputs.iter().enumerate() {
        state.apply_single_unchecked(q, ry(x));
    }
    let pairs = config.entangling_pairs();
    for layer in 0..config.num_layers {
        for q in 0..n {
            let k = 2 * (layer * n + q);
            state.apply_single_unchecked(q, rz(angles[k + 1]));
            state.apply_single_unchecked(q, ry(angles[k]));
        }
        for &(a, b) in &pairs {
            state.apply_cz_unchecked(a, b);
        }
    }
    state.z_expectations()
}

/// Measurement vector `(<Z_0>, ..., <Z_{n-1}>)`.
pub fn pqc_forward<T: Real>(config: &CircuitConfig, angles: &[T], inputs: &[T]) -> Result<Vec<T>> {
    check_shapes(config, angles, inputs)?;
    Ok(run(config, angles, inputs))
}

/// Jacobians of the measurement vector, row `q` holding `∂m_q / ∂·`.
#[derive(Clone, Debug, PartialEq)]
pub struct PqcJacobian<T> {
    pub outputs: Vec<T>,
    /// `[n_q][num_parameters]`.
    pub d_angles: Vec<Vec<T>>,
    /// `[n_q][n_q]`.
    pub d_inputs: Vec<Vec<T>>,
}

impl<T: Real> PqcJacobian<T> {
    /// Vector-Jacobian products `(gᵀ ∂m/∂θ, gᵀ ∂m/∂x)`.
    pub fn vjp(&self, upstream: &[T]) -> (Vec<T>, Vec<T>) {
        let contract = |jac: &[Vec<T>]| -> Vec<T> {
            let cols = jac.first().map_or(0, Vec::len);
            (0..cols)
                .map(|k| upstream.iter().zip(jac).map(|(&g, row)| g * row[k]).sum())
                .collect()
        };
        (contract(&self.d_angles), contract(&self.d_inputs))
    }
}

/// Parameter-shift gradient: `∂m/∂θ = (m(θ + π/2) - m(θ - π/2)) / 2` for every
/// rotation angle, encoding angles included.
pub fn pqc_gradient<T: Real>(config: &CircuitConfig, angles: &[T], inputs: &[T]) -> Result<PqcJacobian<T>> {
    check_shapes(config, angles, inputs)?;
    let n = config.num_qubits;
    let shift = T::FRAC_PI_2();
    let half = T::lit(0.5);
    let outputs = run(config, angles, inputs);

    let mut d_angles = vec![vec![T::zero(); angles.len()]; n];
    let mut shifted = angles.to_vec();
    for k in 0..angles.len() {
        shifted[k] = angles[k] + shift;
        let plus = run(config, &shifted, inputs);
        shifted[k] = angles[k] - shift;
        let minus = run(config, &shifted, inputs);
        shifted[k] = angles[k];
        for q in 0..n {
            d_angles[q][k] = (plus[q] - minus[q]) * half;
        }
    }

    let mut d_inputs = vec![vec![T::zero(); n]; n];
    let mut xs = inputs.to_vec();
    for k in 0..n {
        xs[k] = inputs[k] + shift;
        let plus = run(config, angles, &xs);
        xs[k] = inputs[k] - shift;
        let minus = run(config, angles, &xs);
        xs[k] = inputs[k];
        for q in 0..n {
            d_inputs[q][k] = (plus[q] - minus[q]) * half;
        }
    }
    Ok(PqcJacobian {
        outputs,
        d_angles,
        d_inputs,
    })
}
