//! Bell-diagonal two-qubit states.
//!
//! Basis order, used everywhere in the crate:
//!
//! | index | name | vector |
//! |-------|------|--------|
//! | 0 | Φ+ | (\|00⟩ + \|11⟩)/√2, the target pair |
//! | 1 | Ψ+ | (\|01⟩ + \|10⟩)/√2 |
//! | 2 | Ψ− | (\|01⟩ − \|10⟩)/√2 |
//! | 3 | Φ− | (\|00⟩ − \|11⟩)/√2 |
//!
//! A Pauli error on the second qubit of Φ+ maps it to Ψ+ (X), Ψ− (Y, up to
//! phase) and Φ− (Z).

use std::f64::consts::FRAC_1_SQRT_2 as H;

use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::matrix::{re, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

pub const BELL_SUM_TOL: f64 = 1e-12;

pub fn bell_vector(index: usize) -> [C64; 4] {
    match index {
        0 => [re(H), ZERO, ZERO, re(H)],
        1 => [ZERO, re(H), re(H), ZERO],
        2 => [ZERO, re(H), re(-H), ZERO],
        3 => [re(H), ZERO, ZERO, re(-H)],
        _ => panic!("Bell index {index} out of range"),
    }
}

/// Unitary whose columns are the Bell vectors in basis order.
pub fn bell_basis() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for k in 0..4 {
        let v = bell_vector(k);
        for (i, z) in v.iter().enumerate() {
            m.set(i, k, *z);
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalState {
    coefficients: [f64; 4],
}

impl BellDiagonalState {
    pub fn new(coefficients: [f64; 4]) -> Result<Self> {
        if let Some(c) = coefficients.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidBellCoefficients(format!(
                "coefficient {c} outside [0, 1]"
            )));
        }
        let sum: f64 = coefficients.iter().sum();
        if (sum - 1.0).abs() > BELL_SUM_TOL {
            return Err(Error::InvalidBellCoefficients(format!("sum {sum} != 1")));
        }
        Ok(Self { coefficients })
    }

    /// Clamps tiny negative rounding noise and renormalizes before validating.
    pub(crate) fn from_numeric(mut coefficients: [f64; 4]) -> Result<Self> {
        for c in coefficients.iter_mut() {
            if *c < 0.0 && *c > -1e-12 {
                *c = 0.0;
            }
        }
        let sum: f64 = coefficients.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidBellCoefficients(format!("sum {sum}")));
        }
        Self::new(coefficients.map(|c| c / sum))
    }

    pub fn perfect() -> Self {
        Self {
            coefficients: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// Bell weights of `werner_paper(F)`: ((1+3F)/4, (1-F)/4, (1-F)/4, (1-F)/4).
    pub fn werner_paper(f: f64) -> Result<Self> {
        let w = (1.0 - f) / 4.0;
        Self::new([1.0 - 3.0 * w, w, w, w])
    }

    /// Bell weights of the depolarizing channel output: (1-p, p/3, p/3, p/3).
    pub fn werner_channel(p: f64) -> Result<Self> {
        Self::new([1.0 - p, p / 3.0, p / 3.0, p / 3.0])
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.coefficients
    }

    /// Overlap with Φ+.
    pub fn fidelity(&self) -> f64 {
        self.coefficients[0]
    }

    /// Largest coefficient and its index (first index on ties).
    pub fn max_coefficient(&self) -> (usize, f64) {
        self.coefficients
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, c)| if c > best.1 { (i, c) } else { best },
            )
    }

    pub fn to_density(&self) -> DensityMatrix {
        let diag = ComplexMatrix::diag(&self.coefficients);
        let m = bell_basis().conjugate(&diag);
        DensityMatrix::from_numeric(m, vec![2, 2]).expect("Bell-diagonal state is valid")
    }

    /// Diagonal of `rho` in the Bell basis (the Bell twirl), without checking that
    /// the off-diagonal part vanishes.
    pub fn twirl(rho: &DensityMatrix) -> Result<Self> {
        if rho.dims() != [2, 2] {
            return Err(Error::InvalidSubsystems(format!(
                "two qubits needed, got {:?}",
                rho.dims()
            )));
        }
        let c = std::array::from_fn(|k| rho.expectation(&bell_vector(k)));
        Self::from_numeric(c)
    }

    /// Exact conversion; fails when `rho` has Bell-basis coherences above `tol`.
    pub fn from_density(rho: &DensityMatrix, tol: f64) -> Result<Self> {
        let state = Self::twirl(rho)?;
        let in_bell = bell_basis().dagger().conjugate(rho.matrix());
        let mut off = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off = off.max(in_bell.get(i, j).norm());
                }
            }
        }
        if off > tol {
            return Err(Error::NotBellDiagonal(off));
        }
        Ok(state)
    }

    /// Convex combination of Bell-diagonal states.
    pub fn mixture(parts: &[(f64, BellDiagonalState)]) -> Result<Self> {
        let mut c = [0.0; 4];
        for (w, s) in parts {
            for (ck, sk) in c.iter_mut().zip(s.coefficients) {
                *ck += w * sk;
            }
        }
        Self::from_numeric(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        assert!(bell_basis().is_unitary(1e-15));
    }

    #[test]
    fn rejects_invalid_coefficients() {
        assert!(BellDiagonalState::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(BellDiagonalState::new([1.1, -0.1, 0.0, 0.0]).is_err());
        assert!(BellDiagonalState::new([0.25; 4]).is_ok());
    }

    #[test]
    fn round_trip_through_density() {
        let s = BellDiagonalState::new([0.7, 0.1, 0.15, 0.05]).unwrap();
        let back = BellDiagonalState::from_density(&s.to_density(), 1e-12).unwrap();
        for (a, b) in s.coefficients().iter().zip(back.coefficients()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn werner_families_agree_with_density_constructors() {
        let s = BellDiagonalState::werner_paper(0.8).unwrap();
        let d = DensityMatrix::werner_paper(0.8).unwrap();
        assert!(s.to_density().matrix().max_abs_diff(d.matrix()) < 1e-14);
        let s = BellDiagonalState::werner_channel(0.2).unwrap();
        let d = DensityMatrix::werner_from_channel(0.2).unwrap();
        assert!(s.to_density().matrix().max_abs_diff(d.matrix()) < 1e-14);
    }

    #[test]
    fn non_bell_diagonal_is_rejected() {
        let prod = DensityMatrix::basis(0, vec![2, 2]).unwrap();
        assert!(matches!(
            BellDiagonalState::from_density(&prod, 1e-10),
            Err(Error::NotBellDiagonal(_))
        ));
        let tw = BellDiagonalState::twirl(&prod).unwrap();
        assert!((tw.coefficients()[0] - 0.5).abs() < 1e-15);
        assert!((tw.coefficients()[3] - 0.5).abs() < 1e-15);
    }
}
