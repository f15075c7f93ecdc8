use super::matrix::{gates, re, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance for the Hermitian, trace and PSD checks on every constructed state.
pub const STATE_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semi-definite matrix over a register of
/// subsystems. `dims[0]` is the most significant factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

fn check_dims(n: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidSubsystems(format!("bad subsystem dims {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(Error::DimensionMismatch(prod, n));
    }
    Ok(())
}

impl DensityMatrix {
    /// Validates and wraps `matrix`. The stored matrix is the exact Hermitian part.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare(matrix.rows(), matrix.cols()));
        }
        check_dims(matrix.rows(), &dims)?;
        let defect = matrix.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let matrix = matrix.hermitian_part();
        let min = matrix.eigvalsh()[0];
        if min < -STATE_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix, dims })
    }

    /// Renormalizes the trace and symmetrizes before validating. For outputs of
    /// trace-preserving numerics that carry rounding noise.
    pub(crate) fn from_numeric(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(matrix.hermitian_part().scale_real(1.0 / tr), dims)
    }

    /// `|psi><psi|`; the vector must be normalized within 1e-10.
    pub fn pure(psi: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Self::new(ComplexMatrix::outer(psi, psi), dims)
    }

    /// Computational basis state `|index><index|`.
    pub fn basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if index >= n {
            return Err(Error::InvalidSubsystems(format!("basis index {index} >= {n}")));
        }
        let mut v = vec![ZERO; n];
        v[index] = ONE;
        Self::pure(&v, dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            matrix: ComplexMatrix::identity(n).scale_real(1.0 / n as f64),
            dims,
        }
    }

    /// `(|00> + |11>)/sqrt(2)` projector.
    pub fn bell_phi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure(&[re(h), ZERO, ZERO, re(h)], vec![2, 2]).unwrap()
    }

    /// `F |Φ+><Φ+| + (1 - F) I/4`, the Werner family as parameterized in the
    /// closed-form literature this crate reproduces. Valid for F in [-1/3, 1].
    pub fn werner_paper(f: f64) -> Result<Self> {
        if !(-1.0 / 3.0..=1.0).contains(&f) {
            return Err(Error::OutOfRange {
                name: "F",
                value: f,
                range: "[-1/3, 1]",
            });
        }
        let bell = Self::bell_phi_plus();
        let mixed = Self::maximally_mixed(vec![2, 2]);
        let m = &bell.matrix.scale_real(f) + &mixed.matrix.scale_real(1.0 - f);
        Self::new(m, vec![2, 2])
    }

    /// Output of the depolarizing channel with parameter `p` acting on the second
    /// qubit of `|Φ+>`: `(1-p) ρ + p/3 (XρX + YρY + ZρZ)` evaluated directly.
    /// Equals `werner_paper(1 - 4p/3)`.
    pub fn werner_from_channel(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                name: "p",
                value: p,
                range: "[0, 1]",
            });
        }
        let bell = Self::bell_phi_plus();
        let [_, x, y, z] = gates::paulis();
        let mut acc = bell.matrix.scale_real(1.0 - p);
        for pauli in [x, y, z] {
            let op = gates::identity().kron(&pauli);
            acc = &acc + &op.conjugate(&bell.matrix).scale_real(p / 3.0);
        }
        Self::from_numeric(acc, vec![2, 2])
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.eigvalsh()
    }

    /// Kronecker product; subsystem lists are concatenated.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: self.matrix.kron(&other.matrix),
            dims,
        }
    }

    /// `U ρ U^dagger` for a unitary of matching dimension.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch(u.rows(), self.dim()));
        }
        Self::from_numeric(u.conjugate(&self.matrix), self.dims.clone())
    }

    /// Convex combination `Σ w_i ρ_i`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidSubsystems("empty mixture".into()))?
            .1;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::OutOfRange {
                    name: "mixture weight",
                    value: *w,
                    range: "[0, 1]",
                });
            }
            if rho.dims != first.dims {
                return Err(Error::DimensionMismatch(rho.dim(), first.dim()));
            }
            acc = &acc + &rho.matrix.scale_real(*w);
        }
        Self::new(acc, first.dims.clone())
    }

    /// `<psi| ρ |psi>`.
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let v = self.matrix.mul_vec(psi);
        psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }

    /// Reduced state on the subsystems listed in `keep` (ascending order is kept).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let m = self.dims.len();
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= m) {
            return Err(Error::InvalidSubsystems(format!(
                "keep {keep:?} against {m} subsystems"
            )));
        }
        if keep_sorted.is_empty() {
            return Err(Error::InvalidSubsystems("cannot trace out every subsystem".into()));
        }
        let traced: Vec<usize> = (0..m).filter(|k| !keep_sorted.contains(k)).collect();
        let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| self.dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| self.dims[k]).collect();
        let nk: usize = kept_dims.iter().product();
        let nt: usize = traced_dims.iter().product();

        // Full index from (kept multi-index, traced multi-index).
        let full_index = |ki: usize, ti: usize| -> usize {
            let mut digits = vec![0usize; m];
            let mut r = ki;
            for (pos, &k) in keep_sorted.iter().enumerate().rev() {
                digits[k] = r % kept_dims[pos];
                r /= kept_dims[pos];
            }
            let mut r = ti;
            for (pos, &k) in traced.iter().enumerate().rev() {
                digits[k] = r % traced_dims[pos];
                r /= traced_dims[pos];
            }
            digits.iter().zip(&self.dims).fold(0, |acc, (&d, &dim)| acc * dim + d)
        };

        let mut out = ComplexMatrix::zeros(nk, nk);
        for i in 0..nk {
            for j in 0..nk {
                let mut s = ZERO;
                for t in 0..nt {
                    s += self.matrix.get(full_index(i, t), full_index(j, t));
                }
                out.set(i, j, s);
            }
        }
        Self::from_numeric(out, kept_dims)
    }

    /// Transpose on one factor of a bipartite state. The result may fail PSD.
    pub fn partial_transpose(&self, subsystem: usize) -> Result<ComplexMatrix> {
        if self.dims.len() != 2 {
            return Err(Error::InvalidSubsystems(format!(
                "partial transpose needs a bipartite state, got dims {:?}",
                self.dims
            )));
        }
        if subsystem > 1 {
            return Err(Error::InvalidSubsystems(format!("subsystem {subsystem} of 2")));
        }
        Ok(partial_transpose_bipartite(
            &self.matrix,
            self.dims[0],
            self.dims[1],
            subsystem,
        ))
    }

    /// Smallest eigenvalue of the partial transpose on the second factor.
    pub fn min_pt_eigenvalue(&self) -> Result<f64> {
        Ok(self.partial_transpose(1)?.eigvalsh()[0])
    }

    /// Positive partial transpose within `STATE_TOL`. For two qubits this is
    /// equivalent to separability.
    pub fn is_ppt(&self) -> Result<bool> {
        Ok(self.min_pt_eigenvalue()? >= -STATE_TOL)
    }
}

fn partial_transpose_bipartite(m: &ComplexMatrix, da: usize, db: usize, subsystem: usize) -> ComplexMatrix {
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n, n);
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    let v = m.get(a * db + b, a2 * db + b2);
                    let (i, j) = if subsystem == 0 {
                        (a2 * db + b, a * db + b2)
                    } else {
                        (a * db + b2, a2 * db + b)
                    };
                    out.set(i, j, v);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::matrix::c;

    fn ket0() -> DensityMatrix {
        DensityMatrix::basis(0, vec![2]).unwrap()
    }

    #[test]
    fn constructor_rejects_invalid_matrices() {
        let not_herm = ComplexMatrix::new(2, 2, vec![re(0.5), re(0.1), re(0.0), re(0.5)]).unwrap();
        assert!(matches!(
            DensityMatrix::new(not_herm, vec![2]),
            Err(Error::NotHermitian(_))
        ));
        let bad_trace = ComplexMatrix::diag(&[0.5, 0.6]);
        assert!(matches!(
            DensityMatrix::new(bad_trace, vec![2]),
            Err(Error::InvalidTrace(_))
        ));
        let not_psd = ComplexMatrix::diag(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(not_psd, vec![2]), Err(Error::NotPsd(_))));
        let wrong_dims = ComplexMatrix::diag(&[0.5, 0.5]);
        assert!(DensityMatrix::new(wrong_dims, vec![2, 2]).is_err());
        assert!(matches!(
            DensityMatrix::pure(&[ONE, ONE], vec![2]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn tensor_of_pure_and_mixed() {
        let t = ket0().tensor(&ket0());
        assert_eq!(t.dims(), &[2, 2]);
        assert!(
            t.matrix()
                .max_abs_diff(DensityMatrix::basis(0, vec![2, 2]).unwrap().matrix())
                < 1e-15
        );
        let half = DensityMatrix::maximally_mixed(vec![2]);
        let quarter = half.tensor(&half);
        assert!(
            quarter
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(vec![2, 2]).matrix())
                < 1e-15
        );
    }

    #[test]
    fn partial_trace_examples() {
        let bell = DensityMatrix::bell_phi_plus();
        let red = bell.partial_trace(&[0]).unwrap();
        assert!(
            red.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(vec![2]).matrix())
                < 1e-15
        );

        let prod = DensityMatrix::basis(0, vec![2, 2]).unwrap();
        assert!(prod.partial_trace(&[0]).unwrap().matrix().max_abs_diff(ket0().matrix()) < 1e-15);

        let w = DensityMatrix::werner_paper(0.8).unwrap();
        for k in [0, 1] {
            let r = w.partial_trace(&[k]).unwrap();
            assert!(
                r.matrix()
                    .max_abs_diff(DensityMatrix::maximally_mixed(vec![2]).matrix())
                    < 1e-15
            );
        }

        assert!(bell.partial_trace(&[2]).is_err());
        assert!(bell.partial_trace(&[0, 0]).is_err());
        assert!(bell.partial_trace(&[]).is_err());
    }

    #[test]
    fn partial_trace_of_unequal_dims_keeps_trace() {
        // |0><0| (dim 2) ⊗ diag(0.2, 0.3, 0.5) (dim 3)
        let a = ket0();
        let b = DensityMatrix::new(ComplexMatrix::diag(&[0.2, 0.3, 0.5]), vec![3]).unwrap();
        let ab = a.tensor(&b);
        let rb = ab.partial_trace(&[1]).unwrap();
        assert!(rb.matrix().max_abs_diff(b.matrix()) < 1e-15);
        let ra = ab.partial_trace(&[0]).unwrap();
        assert!(ra.matrix().max_abs_diff(a.matrix()) < 1e-15);
    }

    #[test]
    fn partial_transpose_examples() {
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(mixed.partial_transpose(1).unwrap().max_abs_diff(mixed.matrix()) < 1e-15);
        let bell = DensityMatrix::bell_phi_plus();
        let min = bell.min_pt_eigenvalue().unwrap();
        assert!((min + 0.5).abs() < 1e-12);
        let single = ket0();
        assert!(single.partial_transpose(0).is_err());
    }

    #[test]
    fn werner_pt_crosses_zero_at_one_half() {
        // Bisection oracle on the 4x4 eigensolve: min PT eigenvalue of werner_paper(F)
        // is (1 - 3F)/4, so entanglement starts at F = 1/3; under the Bell-weight
        // parameter λ = (1+3F)/4 that is λ = 1/2.
        let f = |x: f64| DensityMatrix::werner_paper(x).unwrap().min_pt_eigenvalue().unwrap();
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 1.0 / 3.0).abs() < 1e-12, "crossing at {lo}");
        let lambda = (1.0 + 3.0 * lo) / 4.0;
        assert!((lambda - 0.5).abs() < 1e-12);
        // In the channel parameterization (Bell weight 1-p) the crossing is at weight 1/2.
        let g = |p: f64| {
            DensityMatrix::werner_from_channel(p)
                .unwrap()
                .min_pt_eigenvalue()
                .unwrap()
        };
        assert!(g(0.49) < 0.0 && g(0.51) > 0.0);
    }

    #[test]
    fn werner_channel_matches_rescaled_paper_family() {
        for p in [0.0, 0.1, 0.2, 0.5, 0.75] {
            let a = DensityMatrix::werner_from_channel(p).unwrap();
            let b = DensityMatrix::werner_paper(1.0 - 4.0 * p / 3.0).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
        }
    }

    #[test]
    fn evolve_and_expectation() {
        let h = gates::hadamard();
        let plus = ket0().evolve(&h).unwrap();
        assert!((plus.expectation(&[re(std::f64::consts::FRAC_1_SQRT_2); 2]) - 1.0).abs() < 1e-14);
        let y = gates::pauli_y();
        let one = ket0().evolve(&y).unwrap();
        assert!((one.expectation(&[ZERO, c(0.0, 1.0)]) - 1.0).abs() < 1e-14);
    }
}
