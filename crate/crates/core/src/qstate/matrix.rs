//! Dense complex matrices for systems of at most a few qubits.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Row-major complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if let Some(k) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(k / cols.max(1), k % cols.max(1)));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| re(x)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// `|v><w|` for column vectors `v`, `w`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self(DMatrix::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj()))
    }

    /// Diagonal matrix with real entries.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { re(values[i]) } else { ZERO }))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Kronecker product `self ⊗ other`; `self` indexes the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Self) -> Self {
        Self(&self.0 * &rho.0 * self.0.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch in max_abs_diff");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && (self * &self.dagger()).max_abs_diff(&Self::identity(self.rows())) <= tol
    }

    /// `(self + self^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * re(0.5))
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Only the Hermitian part is used. Eigenvalues come back ascending, with the
    /// matching eigenvectors as columns of the returned matrix.
    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        let n = self.rows();
        let eig = self.hermitian_part().0.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, Self(vectors))
    }

    pub fn eigvalsh(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .hermitian_part()
            .0
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self.0[(i, j)]).collect()
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.eigh();
        let mapped: Vec<f64> = vals.into_iter().map(f).collect();
        let d = Self::diag(&mapped);
        vecs.conjugate(&d)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Single- and two-qubit gates used across the crate.
pub mod gates {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]).unwrap()
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    /// `[I, X, Y, Z]`.
    pub fn paulis() -> [ComplexMatrix; 4] {
        [identity(), pauli_x(), pauli_y(), pauli_z()]
    }

    pub fn hadamard() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, 2, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap()
    }

    /// CNOT with the first (most significant) qubit as control.
    pub fn cnot() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        )
        .unwrap()
    }

    /// `exp(-i theta X / 2)`.
    pub fn rx(theta: f64) -> ComplexMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        ComplexMatrix::new(2, 2, vec![re(co), c(0.0, -s), c(0.0, -s), re(co)]).unwrap()
    }

    /// `exp(-i theta Y / 2)`.
    pub fn ry(theta: f64) -> ComplexMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        ComplexMatrix::from_real_rows(2, 2, &[co, -s, s, co]).unwrap()
    }

    /// `exp(-i phi Z / 2)`.
    pub fn rz(phi: f64) -> ComplexMatrix {
        ComplexMatrix::new(
            2,
            2,
            vec![
                C64::from_polar(1.0, -phi / 2.0),
                ZERO,
                ZERO,
                C64::from_polar(1.0, phi / 2.0),
            ],
        )
        .unwrap()
    }

    /// Operator `op` acting on qubit `target` of an `n`-qubit register (qubit 0 most significant).
    pub fn embed(op: &ComplexMatrix, target: usize, n: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::identity(1);
        for q in 0..n {
            out = if q == target {
                out.kron(op)
            } else {
                out.kron(&identity())
            };
        }
        out
    }

    /// Two-qubit `op` on qubits `q1`, `q2` of an `n`-qubit register; `q1` is the
    /// first tensor factor of `op`.
    pub fn embed_pair(op: &ComplexMatrix, q1: usize, q2: usize, n: usize) -> ComplexMatrix {
        assert!(q1 != q2 && q1 < n && q2 < n && op.rows() == 4 && op.cols() == 4);
        let (s1, s2) = (n - 1 - q1, n - 1 - q2);
        let dim = 1usize << n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for col in 0..dim {
            let sub_in = (((col >> s1) & 1) << 1) | ((col >> s2) & 1);
            let rest = col & !(1 << s1) & !(1 << s2);
            for sub_out in 0..4 {
                let v = op.get(sub_out, sub_in);
                if v != ZERO {
                    let row = rest | ((sub_out >> 1) << s1) | ((sub_out & 1) << s2);
                    m.set(row, col, v);
                }
            }
        }
        m
    }
}
