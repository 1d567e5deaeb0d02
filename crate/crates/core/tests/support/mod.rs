//! Brute-force reference implementations working on full `2^n`-dimensional
//! objects. Only plain matrix arithmetic from the library is reused.
#![allow(dead_code)]

use disentangle::linalg::CMatrix;
use disentangle::scalar::C;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = C<f64>;

pub fn bit(n: usize, index: usize, q: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_state_amplitudes<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..1 << n).map(|_| random_complex(rng)).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// Haar unitary from Gram-Schmidt on Gaussian columns.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMatrix<f64> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| random_complex(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let mut m = CMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &a) in col.iter().enumerate() {
            m[(i, j)] = a;
        }
    }
    m
}

/// Full-register matrix of a two-qubit gate on `(i, j)`, where `gate` uses
/// local index `2·b_i + b_j`.
pub fn embed_two_qubit(n: usize, (i, j): (usize, usize), gate: &CMatrix<f64>) -> CMatrix<f64> {
    let dim = 1 << n;
    let mut m = CMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            let rest_equal = (0..n)
                .filter(|&q| q != i && q != j)
                .all(|q| bit(n, r, q) == bit(n, c, q));
            if rest_equal {
                let lr = 2 * bit(n, r, i) + bit(n, r, j);
                let lc = 2 * bit(n, c, i) + bit(n, c, j);
                m[(r, c)] = gate[(lr, lc)];
            }
        }
    }
    m
}

pub fn full_density(amps: &[C64]) -> CMatrix<f64> {
    CMatrix::outer(amps, amps)
}

/// `Tr_{rest} ρ` onto qubits `keep` (in the given order, first = most
/// significant local bit).
pub fn partial_trace(rho: &CMatrix<f64>, n: usize, keep: &[usize]) -> CMatrix<f64> {
    let k = keep.len();
    let mut out = CMatrix::zeros(1 << k);
    let local = |idx: usize| keep.iter().fold(0, |acc, &q| 2 * acc + bit(n, idx, q));
    for r in 0..1 << n {
        for c in 0..1 << n {
            let rest_equal = (0..n)
                .filter(|q| !keep.contains(q))
                .all(|q| bit(n, r, q) == bit(n, c, q));
            if rest_equal {
                let (a, b) = (local(r), local(c));
                out[(a, b)] += rho[(r, c)];
            }
        }
    }
    out
}

/// `vᵀ (σy ⊗ σy) w`.
fn yy_form(v: &[C64], w: &[C64]) -> C64 {
    -v[0] * w[3] + v[1] * w[2] + v[2] * w[1] - v[3] * w[0]
}

/// Concurrence of the pair `(i, j)` of a pure `n`-qubit state, `n ≤ 4`.
///
/// * `n = 2`: `2 |ψ₀₀ψ₁₁ - ψ₀₁ψ₁₀|`.
/// * `n = 3`: the pair state has rank two; with the conditional vectors `v_k`
///   of the traced qubit, `τ_kl = v_kᵀ (σy⊗σy) v_l` and `C = σ₁ - σ₂`, where
///   `(σ₁ - σ₂)² = ‖τ‖²_F - 2 |det τ|`.
/// * `n = 4`: square roots of the eigenvalues of `√ρ ρ̃ √ρ`.
pub fn concurrence_oracle(amps: &[C64], n: usize, (i, j): (usize, usize)) -> f64 {
    match n {
        2 => 2.0 * (amps[0] * amps[3] - amps[1] * amps[2]).norm(),
        3 => {
            let other = (0..3).find(|&q| q != i && q != j).unwrap();
            let v: Vec<Vec<C64>> = (0..2)
                .map(|k| {
                    let mut v = vec![C64::new(0.0, 0.0); 4];
                    for idx in 0..8 {
                        if bit(3, idx, other) == k {
                            v[2 * bit(3, idx, i) + bit(3, idx, j)] = amps[idx];
                        }
                    }
                    v
                })
                .collect();
            let t = [
                [yy_form(&v[0], &v[0]), yy_form(&v[0], &v[1])],
                [yy_form(&v[1], &v[0]), yy_form(&v[1], &v[1])],
            ];
            let frob: f64 = t.iter().flatten().map(|z| z.norm_sqr()).sum();
            let det = (t[0][0] * t[1][1] - t[0][1] * t[1][0]).norm();
            (frob - 2.0 * det).max(0.0).sqrt()
        }
        4 => {
            let rho = partial_trace(&full_density(amps), 4, &[i, j]);
            let e = rho.eigh().unwrap();
            let sqrt_vals: Vec<f64> = e.values.iter().map(|v| v.max(0.0).sqrt()).collect();
            let sqrt_rho = CMatrix::from_spectrum(&sqrt_vals, &e.vectors);
            let mut yy = CMatrix::zeros(4);
            yy[(0, 3)] = C64::new(-1.0, 0.0);
            yy[(1, 2)] = C64::new(1.0, 0.0);
            yy[(2, 1)] = C64::new(1.0, 0.0);
            yy[(3, 0)] = C64::new(-1.0, 0.0);
            let flipped = &(&yy * &rho.conj()) * &yy;
            let m = &(&sqrt_rho * &flipped) * &sqrt_rho;
            let mut l: Vec<f64> = m
                .hermitian_part()
                .eigh()
                .unwrap()
                .values
                .iter()
                .map(|v| v.max(0.0).sqrt())
                .collect();
            l.sort_by(|a, b| b.total_cmp(a));
            (l[0] - l[1] - l[2] - l[3]).max(0.0)
        }
        _ => panic!("oracle covers up to four qubits"),
    }
}

/// Von Neumann entropy in bits from a 2x2 density matrix, closed form.
pub fn qubit_entropy_oracle(rho: &CMatrix<f64>) -> f64 {
    let a = rho[(0, 0)].re;
    let d = rho[(1, 1)].re;
    let b = rho[(0, 1)].norm();
    let disc = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    let h = |p: f64| if p <= 1e-15 { 0.0 } else { -p * p.log2() };
    h((a + d) / 2.0 + disc) + h((a + d) / 2.0 - disc)
}

/// Worst deviations seen by [`oracle_suite`].
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleDeviations {
    pub checks: usize,
    pub pair_trace: f64,
    pub single_trace: f64,
    pub gate: f64,
    pub concurrence: f64,
    pub entropy: f64,
}

impl OracleDeviations {
    pub fn max(&self) -> f64 {
        [
            self.pair_trace,
            self.single_trace,
            self.gate,
            self.concurrence,
            self.entropy,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Randomized comparisons of library routines against the dense oracles on
/// 2–4 qubit states, cycling through qubit counts until `checks` comparisons
/// have been made.
pub fn oracle_suite(checks: usize, seed: u64) -> OracleDeviations {
    use disentangle::entanglement::concurrence;
    use disentangle::qsim::Statevector;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut dev = OracleDeviations::default();
    let mut round = 0;
    while dev.checks < checks {
        let n = 2 + round % 3;
        round += 1;
        let amps = random_state_amplitudes(&mut rng, n);
        let state = Statevector::from_amplitudes(n, amps.clone()).unwrap();
        let rho = full_density(&amps);
        let i = rng.random_range(0..n - 1);
        let j = rng.random_range(i + 1..n);

        let want = partial_trace(&rho, n, &[i, j]);
        let got = state.reduced_density_pair((i, j)).unwrap();
        dev.pair_trace = dev.pair_trace.max(got.matrix().max_abs_diff(&want));

        let q = rng.random_range(0..n);
        let single = partial_trace(&rho, n, &[q]);
        dev.single_trace = dev
            .single_trace
            .max(state.reduced_density_single(q).unwrap().max_abs_diff(&single));
        let s = state.single_qubit_entropies()[q];
        dev.entropy = dev.entropy.max((s - qubit_entropy_oracle(&single)).abs());

        let u = random_unitary(&mut rng, 4);
        let mut evolved = state.clone();
        evolved.apply_two_qubit_gate((i, j), &u).unwrap();
        let dense = embed_two_qubit(n, (i, j), &u).mul_vec(&amps);
        let gate_dev = evolved
            .amplitudes()
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        dev.gate = dev.gate.max(gate_dev);

        let c = concurrence(&got).unwrap().concurrence;
        dev.concurrence = dev.concurrence.max((c - concurrence_oracle(&amps, n, (i, j))).abs());

        dev.checks += 5;
    }
    dev
}

/// Worst post-gate figures seen by [`solver_suite`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SolverDeviations {
    pub states: usize,
    pub off_diagonal: f64,
    pub concurrence: f64,
    pub unitarity: f64,
}

/// Applies the local solver to a random pair of `states` Haar-random
/// 4–6 qubit states.
pub fn solver_suite(states: usize, seed: u64) -> SolverDeviations {
    use disentangle::entanglement::concurrence;
    use disentangle::qsim::haar_random_state;
    use disentangle::solver::apply_local_solver;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut dev = SolverDeviations::default();
    for k in 0..states {
        let n = 4 + k % 3;
        let mut state = haar_random_state::<f64, _>(n, &mut rng).unwrap();
        let i = rng.random_range(0..n - 1);
        let j = rng.random_range(i + 1..n);
        let gate = apply_local_solver(&mut state, (i, j)).unwrap();
        let rho = state.reduced_density_pair((i, j)).unwrap();
        dev.off_diagonal = dev.off_diagonal.max(rho.matrix().max_off_diagonal());
        dev.concurrence = dev.concurrence.max(concurrence(&rho).unwrap().concurrence);
        dev.unitarity = dev.unitarity.max(gate.unitary.unitarity_deviation());
        dev.states += 1;
    }
    dev
}
