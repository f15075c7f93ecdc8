//! Entropy functionals. All logarithms are base 2.

use super::density::DensityMatrix;
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exact zeros before taking logarithms.
pub const EIG_CLAMP: f64 = 1e-12;

/// `-Σ p log2 p` with `0 log 0 = 0`; entries below `EIG_CLAMP` are dropped.
pub fn shannon_entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > EIG_CLAMP)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            range: "[0, 1]",
        });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(rho.eigenvalues())
}

/// `S(ρ‖σ) = Tr ρ (log2 ρ − log2 σ)`, or `f64::INFINITY` when the support of
/// `ρ` is not contained in the support of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let (svals, svecs) = sigma.matrix().eigh();
    let mut cross = 0.0;
    for (k, &lambda) in svals.iter().enumerate() {
        let weight = rho.expectation(&svecs.column(k));
        if lambda <= EIG_CLAMP {
            if weight > EIG_CLAMP {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross -= weight * lambda.log2();
    }
    Ok((cross - von_neumann_entropy(rho)).max(0.0))
}

/// `(Tr ρ², d/(d−1) (1 − Tr ρ²))`.
pub fn purity_and_mixedness(rho: &DensityMatrix) -> (f64, f64) {
    let m = rho.matrix();
    let purity = (m * m).trace().re;
    let d = rho.dim() as f64;
    let linear = if rho.dim() > 1 {
        (d / (d - 1.0) * (1.0 - purity)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (purity, linear)
}
