//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of an amplitude index: for `L` qubits,
//! qubit `q` lives at bit position `L - 1 - q`. Two-qubit operators on a pair
//! `(i, j)` with `i < j` use local index `2 * bit_i + bit_j`, and the same
//! convention orders the rows of every pair reduced density matrix.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{c, c_real, Real, C};

pub const MAX_QUBITS: usize = 8;

/// Eigenvalues below this are dropped from entropy sums.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;

/// Tolerance for accepting a matrix as a density matrix in entropy evaluation.
pub const DENSITY_CHECK_TOL: f64 = 1e-8;

/// Tolerance for accepting a gate as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector<T> {
    num_qubits: usize,
    amplitudes: Vec<C<T>>,
}

fn check_num_qubits(num_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&num_qubits) {
        Ok(())
    } else {
        Err(invalid(format!(
            "num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}"
        )))
    }
}

#[inline]
fn bit_mask(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

impl<T: Real> Statevector<T> {
    /// `|0...0>`.
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        Self::basis_state(num_qubits, 0)
    }

    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        check_num_qubits(num_qubits)?;
        let dim = 1 << num_qubits;
        if index >= dim {
            return Err(invalid(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![C::zero(); dim];
        amplitudes[index] = C::one();
        Ok(Self { num_qubits, amplitudes })
    }

    /// Wraps raw amplitudes. The vector must already be normalized within `1e-8`;
    /// it is renormalized exactly on the way in.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<C<T>>) -> Result<Self> {
        check_num_qubits(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(invalid(format!(
                "expected {} amplitudes for {num_qubits} qubits, got {}",
                1usize << num_qubits,
                amplitudes.len()
            )));
        }
        let mut sv = Self { num_qubits, amplitudes };
        let dev = (sv.norm_sqr() - T::one()).abs();
        if !(dev <= T::tol(1e-8)) {
            return Err(invalid(format!("state is not normalized (|norm^2 - 1| = {dev:e})")));
        }
        sv.normalize();
        Ok(sv)
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_unnormalized(num_qubits: usize, amplitudes: Vec<C<T>>) -> Result<Self> {
        check_num_qubits(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(invalid("amplitude count does not match 2^num_qubits"));
        }
        let mut sv = Self { num_qubits, amplitudes };
        let n = sv.norm_sqr();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        sv.normalize();
        Ok(sv)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let inv = T::one() / self.norm_sqr().sqrt();
        for a in &mut self.amplitudes {
            *a = *a * inv;
        }
    }

    /// `self ⊗ other`, with `self` occupying the lower-numbered qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_num_qubits(num_qubits)?;
        let mut amplitudes = Vec::with_capacity(1 << num_qubits);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(Self { num_qubits, amplitudes })
    }

    fn check_pair(&self, (i, j): (usize, usize)) -> Result<()> {
        if i < j && j < self.num_qubits {
            Ok(())
        } else {
            Err(invalid(format!(
                "pair ({i}, {j}) must satisfy i < j < {}",
                self.num_qubits
            )))
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.num_qubits {
            Ok(())
        } else {
            Err(invalid(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )))
        }
    }

    /// Applies a 4x4 unitary to qubits `(i, j)`, identity elsewhere.
    pub fn apply_two_qubit_gate(&mut self, pair: (usize, usize), gate: &CMatrix<T>) -> Result<()> {
        self.check_pair(pair)?;
        if gate.dim() != 4 {
            return Err(invalid(format!("two-qubit gate must be 4x4, got {0}x{0}", gate.dim())));
        }
        let dev = gate.unitarity_deviation();
        if !(dev <= T::tol(UNITARY_TOL)) {
            return Err(invalid(format!("gate is not unitary (max |UU† - I| = {dev:e})")));
        }
        self.apply_two_qubit_unchecked(pair, gate);
        Ok(())
    }

    pub(crate) fn apply_two_qubit_unchecked(&mut self, (i, j): (usize, usize), gate: &CMatrix<T>) {
        let mi = bit_mask(self.num_qubits, i);
        let mj = bit_mask(self.num_qubits, j);
        let g = gate.as_slice();
        for base in 0..self.amplitudes.len() {
            if base & (mi | mj) != 0 {
                continue;
            }
            let idx = [base, base | mj, base | mi, base | mi | mj];
            let v = idx.map(|k| self.amplitudes[k]);
            for (r, &k) in idx.iter().enumerate() {
                let row = &g[4 * r..4 * r + 4];
                self.amplitudes[k] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }

    /// Applies a 2x2 unitary to `qubit`.
    pub fn apply_single_qubit_gate(&mut self, qubit: usize, gate: &CMatrix<T>) -> Result<()> {
        self.check_qubit(qubit)?;
        if gate.dim() != 2 {
            return Err(invalid("single-qubit gate must be 2x2"));
        }
        let dev = gate.unitarity_deviation();
        if !(dev <= T::tol(UNITARY_TOL)) {
            return Err(invalid(format!("gate is not unitary (max |UU† - I| = {dev:e})")));
        }
        let g = gate.as_slice();
        self.apply_single_unchecked(qubit, [g[0], g[1], g[2], g[3]]);
        Ok(())
    }

    pub(crate) fn apply_single_unchecked(&mut self, qubit: usize, g: [C<T>; 4]) {
        let m = bit_mask(self.num_qubits, qubit);
        for base in 0..self.amplitudes.len() {
            if base & m != 0 {
                continue;
            }
            let a0 = self.amplitudes[base];
            let a1 = self.amplitudes[base | m];
            self.amplitudes[base] = g[0] * a0 + g[1] * a1;
            self.amplitudes[base | m] = g[2] * a0 + g[3] * a1;
        }
    }

    /// Controlled-Z between two distinct qubits.
    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(invalid("CZ needs two distinct qubits"));
        }
        self.apply_cz_unchecked(a, b);
        Ok(())
    }

    pub(crate) fn apply_cz_unchecked(&mut self, a: usize, b: usize) {
        let mask = bit_mask(self.num_qubits, a) | bit_mask(self.num_qubits, b);
        for (k, amp) in self.amplitudes.iter_mut().enumerate() {
            if k & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// `<Z_q>` for every qubit, qubit 0 first.
    pub fn z_expectations(&self) -> Vec<T> {
        let n = self.num_qubits;
        let mut out = vec![T::zero(); n];
        for (k, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            for (q, z) in out.iter_mut().enumerate() {
                if k & bit_mask(n, q) == 0 {
                    *z = *z + p;
                } else {
                    *z = *z - p;
                }
            }
        }
        out
    }

    /// Two-qubit reduced density matrix of `pair`, tracing out every other qubit.
    pub fn reduced_density_pair(&self, pair: (usize, usize)) -> Result<PairDensityMatrix<T>> {
        self.check_pair(pair)?;
        let mi = bit_mask(self.num_qubits, pair.0);
        let mj = bit_mask(self.num_qubits, pair.1);
        let mut rho = [[C::<T>::zero(); 4]; 4];
        for base in 0..self.amplitudes.len() {
            if base & (mi | mj) != 0 {
                continue;
            }
            let v = [base, base | mj, base | mi, base | mi | mj].map(|k| self.amplitudes[k]);
            for r in 0..4 {
                if v[r].is_zero() {
                    continue;
                }
                for s in 0..4 {
                    rho[r][s] = rho[r][s] + v[r] * v[s].conj();
                }
            }
        }
        let matrix = CMatrix::from_row_major(4, rho.iter().flatten().copied().collect());
        Ok(PairDensityMatrix { pair, matrix })
    }

    /// Every pair reduced state, pairs in lexicographic order.
    pub fn all_pair_densities(&self) -> Vec<PairDensityMatrix<T>> {
        let n = self.num_qubits;
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.reduced_density_pair((i, j)).expect("valid pair"));
            }
        }
        out
    }

    /// One-qubit reduced density matrix.
    pub fn reduced_density_single(&self, qubit: usize) -> Result<CMatrix<T>> {
        self.check_qubit(qubit)?;
        let m = bit_mask(self.num_qubits, qubit);
        let (mut p0, mut p1, mut coh) = (T::zero(), T::zero(), C::<T>::zero());
        for base in 0..self.amplitudes.len() {
            if base & m != 0 {
                continue;
            }
            let a0 = self.amplitudes[base];
            let a1 = self.amplitudes[base | m];
            p0 = p0 + a0.norm_sqr();
            p1 = p1 + a1.norm_sqr();
            coh = coh + a0 * a1.conj();
        }
        Ok(CMatrix::from_row_major(
            2,
            vec![c_real(p0), coh, coh.conj(), c_real(p1)],
        ))
    }

    /// Entanglement entropy (bits) of every qubit with the rest of the register.
    pub fn single_qubit_entropies(&self) -> Vec<T> {
        (0..self.num_qubits)
            .map(|q| {
                let rho = self.reduced_density_single(q).expect("valid qubit");
                von_neumann_entropy(&rho).expect("reduced state of a normalized vector")
            })
            .collect()
    }

    pub fn to_json(&self) -> StatevectorJson {
        StatevectorJson {
            num_qubits: self.num_qubits,
            amplitudes: self.amplitudes.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
        }
    }

    pub fn from_json(json: &StatevectorJson) -> Result<Self> {
        let amps = json
            .amplitudes
            .iter()
            .map(|[re, im]| c(T::lit(*re), T::lit(*im)))
            .collect();
        Self::from_amplitudes(json.num_qubits, amps)
    }
}

/// JSON form of a statevector: `{"num_qubits": L, "amplitudes": [[re, im], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatevectorJson {
    pub num_qubits: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Reduced state of the ordered pair `(i, j)`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDensityMatrix<T> {
    pair: (usize, usize),
    matrix: CMatrix<T>,
}

impl<T: Real> PairDensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity within `tol`.
    pub fn new(pair: (usize, usize), matrix: CMatrix<T>, tol: f64) -> Result<Self> {
        if pair.0 >= pair.1 {
            return Err(invalid(format!("pair ({}, {}) must have i < j", pair.0, pair.1)));
        }
        if matrix.dim() != 4 {
            return Err(invalid("pair density matrix must be 4x4"));
        }
        check_density(&matrix, tol)?;
        Ok(Self { pair, matrix })
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    /// Reduced state of qubit `i` (traces out `j`).
    pub fn trace_out_second(&self) -> CMatrix<T> {
        let mut out = CMatrix::zeros(2);
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = self.matrix[(2 * a, 2 * b)] + self.matrix[(2 * a + 1, 2 * b + 1)];
            }
        }
        out
    }

    /// Reduced state of qubit `j` (traces out `i`).
    pub fn trace_out_first(&self) -> CMatrix<T> {
        let mut out = CMatrix::zeros(2);
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = self.matrix[(a, b)] + self.matrix[(2 + a, 2 + b)];
            }
        }
        out
    }
}

/// Checks density-matrix invariants (Hermitian, unit trace, PSD) within `tol`.
pub fn check_density<T: Real>(rho: &CMatrix<T>, tol: f64) -> Result<()> {
    let tol_t = T::tol(tol);
    let herm = rho.hermiticity_deviation();
    if !(herm <= tol_t) {
        return Err(invalid(format!("matrix is not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace();
    if !((tr.re - T::one()).abs() <= tol_t && tr.im.abs() <= tol_t) {
        return Err(invalid(format!("trace is {tr}, expected 1")));
    }
    let min_eig = hermitian_eigenvalues(rho)?.last().copied().unwrap_or_else(T::zero);
    if min_eig < -tol_t {
        return Err(invalid(format!("matrix has negative eigenvalue {min_eig:e}")));
    }
    Ok(())
}

/// Descending eigenvalues of a Hermitian matrix, closed form for 2x2.
fn hermitian_eigenvalues<T: Real>(rho: &CMatrix<T>) -> Result<Vec<T>> {
    if rho.dim() == 2 {
        let a = rho[(0, 0)].re;
        let d = rho[(1, 1)].re;
        let b = (rho[(0, 1)] + rho[(1, 0)].conj()).norm() * T::lit(0.5);
        let half = T::lit(0.5);
        let mean = (a + d) * half;
        let r = ((a - d) * half).hypot(b);
        return Ok(vec![mean + r, mean - r]);
    }
    Ok(rho.eigh()?.values)
}

/// Von Neumann entropy in bits, `-Σ λ log2 λ`.
///
/// Eigenvalues below `1e-12` contribute nothing; the result is clamped to
/// `[0, log2(dim)]`.
pub fn von_neumann_entropy<T: Real>(rho: &CMatrix<T>) -> Result<T> {
    check_density(rho, DENSITY_CHECK_TOL)?;
    let cutoff = T::lit(EIGENVALUE_CUTOFF);
    let s: T = hermitian_eigenvalues(rho)?
        .into_iter()
        .filter(|&l| l >= cutoff)
        .map(|l| -l * l.log2())
        .sum();
    let max = T::lit(rho.dim() as f64).log2();
    Ok(s.max(T::zero()).min(max))
}

/// Haar-random pure state: i.i.d. standard complex normal amplitudes, normalized.
pub fn haar_random_state<T: Real, R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Statevector<T>> {
    check_num_qubits(num_qubits)?;
    let dim = 1usize << num_qubits;
    let amps = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(T::lit(re), T::lit(im))
        })
        .collect();
    Statevector::from_unnormalized(num_qubits, amps)
}

/// Block structure of an initial state, e.g. `RR-RR-RR` = `[2, 2, 2]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntanglementPattern {
    blocks: Vec<usize>,
}

impl EntanglementPattern {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("pattern needs at least one block"));
        }
        if blocks.contains(&0) {
            return Err(invalid("pattern blocks must be positive"));
        }
        let total: usize = blocks.iter().sum();
        if total > MAX_QUBITS {
            return Err(invalid(format!(
                "pattern covers {total} qubits, maximum is {MAX_QUBITS}"
            )));
        }
        Ok(Self { blocks })
    }

    /// A single block spanning all qubits.
    pub fn fully_entangled(num_qubits: usize) -> Result<Self> {
        Self::new(vec![num_qubits])
    }

    /// Parses labels of the form `R+(-R+)*`.
    pub fn parse(label: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut run = 0usize;
        let mut last = 0usize;
        for (pos, ch) in label.chars().enumerate() {
            last = pos + 1;
            match ch {
                'R' => run += 1,
                '-' if run > 0 => {
                    blocks.push(run);
                    run = 0;
                }
                '-' => {
                    return Err(Error::Parse {
                        position: pos,
                        found: "'-'".into(),
                        reason: "a block must contain at least one R",
                    })
                }
                other => {
                    return Err(Error::Parse {
                        position: pos,
                        found: format!("{other:?}"),
                        reason: "only 'R' and '-' are allowed",
                    })
                }
            }
        }
        if run == 0 {
            return Err(Error::Parse {
                position: last,
                found: "end of input".into(),
                reason: "expected 'R'",
            });
        }
        blocks.push(run);
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_qubits(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn label(&self) -> String {
        self.blocks.iter().map(|&b| "R".repeat(b)).collect::<Vec<_>>().join("-")
    }

    /// Qubit ranges `[start, end)` covered by each block.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|&b| {
                let r = start..start + b;
                start += b;
                r
            })
            .collect()
    }
}

impl fmt::Display for EntanglementPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for EntanglementPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl TryFrom<String> for EntanglementPattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<EntanglementPattern> for String {
    fn from(p: EntanglementPattern) -> String {
        p.label()
    }
}

/// Tensor product of independent Haar-random block states on consecutive qubits.
pub fn sample_pattern_state<T: Real, R: Rng + ?Sized>(
    pattern: &EntanglementPattern,
    rng: &mut R,
) -> Result<Statevector<T>> {
    let mut blocks = pattern.blocks().iter();
    let first = *blocks.next().expect("pattern has a block");
    let mut state = haar_random_state(first, rng)?;
    for &b in blocks {
        state = state.tensor(&haar_random_state(b, rng)?)?;
    }
    Ok(state)
}
