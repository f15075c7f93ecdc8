//! The two pipelines being compared: recurrence distillation after the channel
//! and shaping before it.

mod dejmps;
mod pes;

use serde::Serialize;

pub use dejmps::{
    dejmps_branch_map, dejmps_monte_carlo, dejmps_recursive, run_rng, Branch, DistillationOutcome, Estimate,
    MonteCarloSettings, MonteCarloStats,
};
pub use pes::{
    effective_channel, pes_pipeline, pre_rotation, pre_rotation_search_ad, GridPoint, PesOutcome, PreRotationSearch,
};

use crate::convention::Convention;
use crate::entanglement::{er_werner, WernerBridge};
use crate::error::{Error, Result};
use crate::qstate::{binary_entropy, gates, ComplexMatrix};

/// `(I ⊗ X) · CNOT · (H ⊗ I)`.
pub fn u_pre() -> ComplexMatrix {
    let ix = gates::identity().kron(&gates::pauli_x());
    let hi = gates::hadamard().kron(&gates::identity());
    &(&ix * &gates::cnot()) * &hi
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HashingRate {
    pub value: f64,
    /// Set when the value is below zero, i.e. no yield at this noise level.
    pub negative: bool,
}

/// `1 − H₂(p) − p log₂ 3`, unclamped.
pub fn hashing_rate(p: f64) -> Result<HashingRate> {
    if !(0.0..=0.75).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 3/4]",
        });
    }
    let value = 1.0 - binary_entropy(p)? - p * 3f64.log2();
    Ok(HashingRate {
        value,
        negative: value < 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub convention: Convention,
    pub p: f64,
    pub target_er: f64,
    /// Depolarizing parameter whose per-pair E_R equals the target.
    pub p_prime: f64,
    /// `γ_sd / f_DD = ln(p / p′)`; negative when `p′ > p`.
    pub log_ratio: f64,
    /// Whether a non-negative noise density reaches `p′`.
    pub feasible: bool,
}

/// Solves `pair_er(p′) = target` for `p′` by bisection (E_R decreases in `p′`).
pub fn calibrate_pes(p: f64, target_er: f64, convention: Convention) -> Result<Calibration> {
    let f = |x: f64| convention.pair_er(x);
    let hi_bound = match convention {
        Convention::Paper => 1.0,
        Convention::Oracle => 0.5,
    };
    if !(target_er > 0.0 && target_er <= f(0.0)?) {
        return Err(Error::OutOfRange {
            name: "target E_R",
            value: target_er,
            range: "(0, 1]",
        });
    }
    let (mut lo, mut hi) = (0.0, hi_bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target_er {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let p_prime = 0.5 * (lo + hi);
    let log_ratio = (p / p_prime).ln();
    Ok(Calibration {
        convention,
        p,
        target_er,
        p_prime,
        log_ratio,
        feasible: p_prime <= p,
    })
}

/// Werner-parameter E_R under both bridges, `(λ = (1+F)/2, λ = (1+3F)/4)`.
pub fn er_werner_both(f: f64) -> Result<(f64, f64)> {
    Ok((
        er_werner(f, WernerBridge::OnePlusFOverTwo)?,
        er_werner(f, WernerBridge::OnePlusThreeFOverFour)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{c, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2 as H;

    #[test]
    fn u_pre_examples() {
        let u = u_pre();
        assert!(u.is_unitary(1e-12));
        let v = u.mul_vec(&[c(1.0, 0.0), ZERO, ZERO, ZERO]);
        let expect = [0.0, H, H, 0.0];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - c(b, 0.0)).norm() < 1e-15);
        }
        // Eigenvalues of a unitary lie on the unit circle.
        let m = nalgebra::Matrix4::from_fn(|i, j| u.get(i, j));
        let (_, t) = m.schur().unpack();
        for k in 0..4 {
            assert!((t[(k, k)].norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hashing_rate_examples() {
        assert_eq!(hashing_rate(0.0).unwrap().value, 1.0);
        let r = hashing_rate(0.2).unwrap();
        assert!(r.negative && (r.value + 0.039).abs() < 1e-3);
        let direct = 1.0 + 0.1 * 0.1f64.log2() + 0.9 * 0.9f64.log2() - 0.1 * 3f64.log2();
        assert!((hashing_rate(0.1).unwrap().value - direct).abs() < 1e-14);
        assert!((direct - 0.373).abs() < 1e-3);
        assert!(hashing_rate(0.8).is_err());
    }

    #[test]
    fn calibration_inverts_the_closed_form() {
        for conv in Convention::ALL {
            let cal = calibrate_pes(0.2, 0.187, conv).unwrap();
            assert!((conv.pair_er(cal.p_prime).unwrap() - 0.187).abs() < 1e-12);
            assert!(cal.p_prime > 0.2 && !cal.feasible && cal.log_ratio < 0.0);
        }
        let cal = calibrate_pes(0.2, Convention::Oracle.pair_er(0.17).unwrap(), Convention::Oracle).unwrap();
        assert!((cal.p_prime - 0.17).abs() < 1e-12 && cal.feasible);
    }
}
