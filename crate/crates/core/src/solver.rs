//! The fixed local disentangling rule.
//!
//! For a selected pair the solver diagonalizes the pair's reduced state and
//! builds the two-qubit unitary that sends the eigenvector of the k-th
//! largest eigenvalue to the k-th computational basis state
//! (`|00>, |01>, |10>, |11>`). Applying it to the full register leaves the
//! pair's reduced state diagonal, hence separable with zero concurrence.
//!
//! Eigenvectors are made unique so trajectories are reproducible:
//! - inside a degenerate cluster (gap < `1e-9`) the basis is rebuilt from the
//!   cluster projector applied to computational basis vectors, largest
//!   projection first;
//! - each eigenvector's largest-magnitude component is made real positive.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::qsim::{PairDensityMatrix, Statevector};
use crate::scalar::{c_real, Real, C};

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Ties in projection weight or component magnitude below this resolve to the lower index.
const TIE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Eig4<T> {
    /// Descending.
    pub values: [T; 4],
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix<T>,
}

/// Eigendecomposition of a 4x4 Hermitian matrix with a canonical eigenbasis.
pub fn hermitian_eig4<T: Real>(matrix: &CMatrix<T>) -> Result<Eig4<T>> {
    if matrix.dim() != 4 {
        return Err(invalid(format!("expected a 4x4 matrix, got {0}x{0}", matrix.dim())));
    }
    let herm = matrix.hermiticity_deviation();
    if !(herm <= T::tol(1e-8)) {
        return Err(invalid(format!("matrix is not Hermitian (deviation {herm:e})")));
    }
    let e = matrix.eigh()?;
    let mut cols: Vec<Vec<C<T>>> = (0..4).map(|k| e.vectors.column(k)).collect();

    let gap = T::lit(DEGENERACY_GAP);
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && e.values[end - 1] - e.values[end] < gap {
            end += 1;
        }
        if end - start > 1 {
            let aligned = align_cluster(&cols[start..end]);
            cols.splice(start..end, aligned);
        }
        start = end;
    }

    for v in &mut cols {
        fix_phase(v);
    }
    let mut vectors = CMatrix::zeros(4);
    for (k, v) in cols.iter().enumerate() {
        for i in 0..4 {
            vectors[(i, k)] = v[i];
        }
    }
    let values = [e.values[0], e.values[1], e.values[2], e.values[3]];
    Ok(Eig4 { values, vectors })
}

/// Re-chooses an orthonormal basis of span(`cluster`) aligned with the
/// computational basis.
fn align_cluster<T: Real>(cluster: &[Vec<C<T>>]) -> Vec<Vec<C<T>>> {
    let n = cluster[0].len();
    // columns of the cluster projector
    let proj: Vec<Vec<C<T>>> = (0..n)
        .map(|b| {
            (0..n)
                .map(|i| cluster.iter().fold(C::zero(), |acc, v| acc + v[i] * v[b].conj()))
                .collect()
        })
        .collect();
    let slack = T::lit(TIE_SLACK);
    let mut chosen: Vec<Vec<C<T>>> = Vec::with_capacity(cluster.len());
    let mut used = vec![false; n];
    while chosen.len() < cluster.len() {
        let mut best: Option<(usize, Vec<C<T>>, T)> = None;
        for b in (0..n).filter(|&b| !used[b]) {
            let mut r = proj[b].clone();
            for u in &chosen {
                let ov = dot(u, &r);
                for (ri, ui) in r.iter_mut().zip(u) {
                    *ri = *ri - *ui * ov;
                }
            }
            let norm = r.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            if best.as_ref().is_none_or(|(_, _, bn)| norm > *bn + slack) {
                best = Some((b, r, norm));
            }
        }
        let Some((b, r, norm)) = best else { break };
        used[b] = true;
        if norm <= T::lit(1e-6) {
            // cluster not spanned by the remaining projections: keep the solver's vectors
            return cluster.to_vec();
        }
        let inv = T::one() / norm;
        chosen.push(r.into_iter().map(|z| z * inv).collect());
    }
    chosen
}

/// `<u|v>`.
fn dot<T: Real>(u: &[C<T>], v: &[C<T>]) -> C<T> {
    u.iter().zip(v).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b)
}

/// Rotates the global phase so the largest component (lowest index on ties) is real positive.
fn fix_phase<T: Real>(v: &mut [C<T>]) {
    let max = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if max.is_zero() {
        return;
    }
    let slack = T::lit(TIE_SLACK);
    let lead = v.iter().position(|z| z.norm() >= max - slack).expect("nonempty");
    let phase = v[lead] / v[lead].norm();
    let rot = phase.conj();
    for z in v.iter_mut() {
        *z = *z * rot;
    }
    v[lead] = c_real(v[lead].re);
}

/// Two-qubit unitary that diagonalizes a pair's reduced state.
#[derive(Clone, Debug)]
pub struct DisentanglingGate<T> {
    pub pair: (usize, usize),
    pub unitary: CMatrix<T>,
    /// Eigenvalues of the reduced state, descending; the diagonal after the gate.
    pub eigenvalues_used: [T; 4],
}

/// Serialized gate for trajectory logs: rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub pair: (usize, usize),
    pub unitary: Vec<Vec<[f64; 2]>>,
    pub eigenvalues: [f64; 4],
}

impl<T: Real> DisentanglingGate<T> {
    pub fn to_json(&self) -> GateJson {
        GateJson {
            pair: self.pair,
            unitary: self.unitary.to_pairs(),
            eigenvalues: self.eigenvalues_used.map(Real::as_f64),
        }
    }
}

/// Builds `U` with `U |φ_k> = |b_k>`, eigenvalues taken in descending order.
pub fn build_disentangling_gate<T: Real>(rho: &PairDensityMatrix<T>) -> Result<DisentanglingGate<T>> {
    let eig = hermitian_eig4(rho.matrix())?;
    // rows of U are the conjugated eigenvectors
    let unitary = eig.vectors.dagger();

    let dev = unitary.unitarity_deviation();
    if !(dev <= T::tol(1e-10)) {
        return Err(Error::Numeric(format!(
            "disentangling gate not unitary (deviation {dev:e})"
        )));
    }
    let rotated = &(&unitary * rho.matrix()) * &unitary.dagger();
    let off = rotated.max_off_diagonal();
    if !(off <= T::tol(1e-9)) {
        return Err(Error::Numeric(format!(
            "disentangling gate leaves off-diagonal weight {off:e}"
        )));
    }
    Ok(DisentanglingGate {
        pair: rho.pair(),
        unitary,
        eigenvalues_used: eig.values,
    })
}

/// Applies the local solver for `pair` to the full register and returns the gate used.
pub fn apply_local_solver<T: Real>(state: &mut Statevector<T>, pair: (usize, usize)) -> Result<DisentanglingGate<T>> {
    let rho = state.reduced_density_pair(pair)?;
    let gate = build_disentangling_gate(&rho)?;
    state.apply_two_qubit_unchecked(pair, &gate.unitary);
    Ok(gate)
}
