//! Small dense complex matrices and a Hermitian eigensolver.
//!
//! Matrices here are at most a few dozen rows (2x2 and 4x4 reduced states,
//! small dense oracles), so everything is stored row-major in a flat `Vec`
//! and operations are written out directly.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{c_real, Real, C};

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = C::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = c_real(d);
        }
        m
    }

    /// Builds a matrix from row-major entries. Panics if `data.len()` is not `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data must have dim^2 entries");
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix must be square");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &[C<T>], b: &[C<T>]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).map(|k| self[(k, k)]).fold(C::zero(), |a, b| a + b)
    }

    pub fn diagonal_real(&self) -> Vec<T> {
        (0..self.dim).map(|k| self[(k, k)].re).collect()
    }

    /// `self ⊗ other` with `self` on the more significant index.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).fold(C::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `max |U U† - I|`.
    pub fn unitarity_deviation(&self) -> T {
        (self * &self.dagger()).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn max_off_diagonal(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    dev = dev.max(self[(i, j)].norm());
                }
            }
        }
        dev
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = c_real(T::lit(0.5));
        (self + &self.dagger()).scale(half)
    }

    /// `V diag(values) V†` from eigenpairs stored as the columns of `vectors`.
    pub fn from_spectrum(values: &[T], vectors: &Self) -> Self {
        let dim = vectors.dim;
        assert_eq!(values.len(), dim);
        let mut out = Self::zeros(dim);
        for (k, &lam) in values.iter().enumerate() {
            if lam.is_zero() {
                continue;
            }
            for i in 0..dim {
                let vik = vectors[(i, k)] * lam;
                for j in 0..dim {
                    out[(i, j)] = out[(i, j)] + vik * vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Rows as `[re, im]` pairs, the serialization used in logs and checkpoints.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect())
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "matrix row has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend(row.iter().map(|[re, im]| C::new(T::lit(*re), T::lit(*im))));
        }
        Ok(Self { dim, data })
    }

    /// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
    ///
    /// Only the Hermitian part of `self` is used. Eigenvalues come back in
    /// descending order; eigenvectors are the matching columns of `vectors`.
    pub fn eigh(&self) -> Result<Eigh<T>> {
        if !self.is_finite() {
            return Err(Error::Numeric("eigensolver input contains non-finite entries".into()));
        }
        let n = self.dim;
        let mut a = self.hermitian_part();
        let mut v = Self::identity(n);
        let scale = a.frobenius_norm();
        if scale.is_zero() {
            return Ok(Eigh {
                values: vec![T::zero(); n],
                vectors: v,
            });
        }
        let eps = T::epsilon();
        let converged_at = eps * scale;
        let mut converged = false;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let off = a.off_diagonal_norm();
            if off <= converged_at {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    a.jacobi_rotate(&mut v, p, q, eps, scale);
                }
            }
        }
        if !converged && a.off_diagonal_norm() > converged_at * T::lit(16.0) {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }

        let mut order: Vec<usize> = (0..n).collect();
        let diag = a.diagonal_real();
        order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&k| diag[k]).collect();
        let mut vectors = Self::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            for i in 0..n {
                vectors[(i, dst)] = v[(i, src)];
            }
        }
        Ok(Eigh { values, vectors })
    }

    fn off_diagonal_norm(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    acc = acc + self[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// One rotation in the (p, q) plane: `A <- J† A J`, `V <- V J`.
    fn jacobi_rotate(&mut self, v: &mut Self, p: usize, q: usize, eps: T, scale: T) {
        let g = self[(p, q)];
        let mag = g.norm();
        if mag <= eps * eps * scale {
            return;
        }
        let phase = g / mag;
        let alpha = self[(p, p)].re;
        let beta = self[(q, q)].re;
        let theta = (beta - alpha) / (mag + mag);
        let t = if theta.abs() * eps > T::one() {
            T::lit(0.5) / theta
        } else {
            let sgn = if theta < T::zero() { -T::one() } else { T::one() };
            sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
        };
        let cs = T::one() / (t * t + T::one()).sqrt();
        let sn = t * cs;
        let pc = phase.conj();
        let jpp = c_real(cs);
        let jpq = c_real(sn);
        let jqp = pc * (-sn);
        let jqq = pc * cs;

        let n = self.dim;
        for k in 0..n {
            let akp = self[(k, p)];
            let akq = self[(k, q)];
            self[(k, p)] = akp * jpp + akq * jqp;
            self[(k, q)] = akp * jpq + akq * jqq;
        }
        for k in 0..n {
            let apk = self[(p, k)];
            let aqk = self[(q, k)];
            self[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
            self[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
        }
        self[(p, q)] = C::zero();
        self[(q, p)] = C::zero();
        self[(p, p)] = c_real(self[(p, p)].re);
        self[(q, q)] = c_real(self[(q, q)].re);
        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * jpp + vkq * jqp;
            v[(k, q)] = vkp * jpq + vkq * jqq;
        }
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues (descending) and eigenvectors (columns) of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim.max(1)) {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}
