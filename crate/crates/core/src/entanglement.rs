//! Two-qubit entanglement measures: spin flip, Wootters concurrence and
//! entanglement of formation.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::CMatrix;
use crate::qsim::PairDensityMatrix;
use crate::scalar::{c_real, Real};

/// Concurrence together with the spectrum it was computed from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcurrenceReport<T> {
    pub concurrence: T,
    /// Square roots of the eigenvalues of `ρ ρ̃`, descending.
    pub sqrt_eigs: [T; 4],
    /// Entanglement of formation in bits.
    pub eof: T,
}

/// `σy ⊗ σy`, which happens to be real.
fn sigma_yy<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(4);
    m[(0, 3)] = c_real(-T::one());
    m[(1, 2)] = c_real(T::one());
    m[(2, 1)] = c_real(T::one());
    m[(3, 0)] = c_real(-T::one());
    m
}

/// `(σy ⊗ σy) ρ* (σy ⊗ σy)`.
pub fn spin_flip<T: Real>(rho: &PairDensityMatrix<T>) -> CMatrix<T> {
    spin_flip_matrix(rho.matrix())
}

pub(crate) fn spin_flip_matrix<T: Real>(rho: &CMatrix<T>) -> CMatrix<T> {
    let yy = sigma_yy();
    &(&yy * &rho.conj()) * &yy
}

/// Wootters concurrence of a two-qubit state.
///
/// The spectrum of `ρ ρ̃` is obtained through an equivalent Hermitian
/// problem; see [`ConcurrenceReport::sqrt_eigs`].
pub fn concurrence<T: Real>(rho: &PairDensityMatrix<T>) -> Result<ConcurrenceReport<T>> {
    concurrence_of_matrix(rho.matrix())
}

pub(crate) fn concurrence_of_matrix<T: Real>(rho: &CMatrix<T>) -> Result<ConcurrenceReport<T>> {
    let sqrt_eigs = flip_singular_values(rho)?;
    let c = (sqrt_eigs[0] - sqrt_eigs[1] - sqrt_eigs[2] - sqrt_eigs[3])
        .max(T::zero())
        .min(T::one());
    Ok(ConcurrenceReport {
        concurrence: c,
        sqrt_eigs,
        eof: eof_from_concurrence(c),
    })
}

/// Square roots of the eigenvalues of `ρ ρ̃`, descending.
///
/// With `ρ = Ψ Ψ†`, `Ψ = V Λ^½`, these are the singular values of the complex
/// symmetric `τ = Ψᵀ (σy ⊗ σy) Ψ`: `τ†τ` has the same nonzero spectrum as
/// `√ρ ρ̃ √ρ`. Singular values are read off the Hermitian
/// dilation `[[0, τ], [τ†, 0]]`, whose spectrum is `±σ_k`; this keeps absolute
/// accuracy at round-off instead of the square root of it. Eigenvalues of `ρ`
/// at round-off level are zeroed first.
fn flip_singular_values<T: Real>(rho: &CMatrix<T>) -> Result<[T; 4]> {
    let e = rho.eigh()?;
    let cutoff = T::lit(4.0) * T::epsilon() * rho.trace().re.abs().max(T::one());
    let mut psi = e.vectors.clone();
    for k in 0..4 {
        let s = if e.values[k] > cutoff {
            e.values[k].sqrt()
        } else {
            T::zero()
        };
        for i in 0..4 {
            psi[(i, k)] = psi[(i, k)] * s;
        }
    }
    // Ψᵀ = conj(Ψ†)
    let psi_t = psi.dagger().conj();
    let tau = &(&psi_t * &sigma_yy()) * &psi;
    let mut dilation = CMatrix::zeros(8);
    for i in 0..4 {
        for j in 0..4 {
            dilation[(i, 4 + j)] = tau[(i, j)];
            dilation[(4 + j, i)] = tau[(i, j)].conj();
        }
    }
    let vals = dilation.eigh()?.values;
    Ok([0, 1, 2, 3].map(|k| vals[k].max(T::zero())))
}

/// `E_f = h((1 + sqrt(1 - C²)) / 2)`.
pub fn eof_from_concurrence<T: Real>(c: T) -> T {
    let half = T::lit(0.5);
    let x = half * (T::one() + (T::one() - c * c).max(T::zero()).sqrt());
    binary_entropy_unchecked(x.min(T::one()))
}

/// Binary entropy in bits; `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    let slack = T::lit(1e-12);
    if !(x >= -slack && x <= T::one() + slack) {
        return Err(invalid(format!("binary entropy argument {x} outside [0, 1]")));
    }
    Ok(binary_entropy_unchecked(x.max(T::zero()).min(T::one())))
}

fn binary_entropy_unchecked<T: Real>(x: T) -> T {
    let term = |p: T| if p.is_zero() { T::zero() } else { -p * p.log2() };
    term(x) + term(T::one() - x)
}
