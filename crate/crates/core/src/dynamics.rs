//! Werner-fidelity decay `F(t) = F0 e^{−pt}`, the entanglement production
//! rate along it, the time-integrated suppression between two decay rates,
//! and the sliced amplitude-damping analogue.

use serde::{Deserialize, Serialize};

use crate::channels::amplitude_damping;
use crate::entanglement::{er_two_qubit, er_werner, SolverSettings, WernerBridge};
use crate::error::{Error, Result};
use crate::qstate::DensityMatrix;

/// Which closed form maps a Werner parameter to E_R along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryForm {
    /// `1 − H₂((1+F)/2)` for `F > 1/2`, zero otherwise.
    Paper,
    /// `1 − H₂((1+3F)/4)`, zero once that weight drops to 1/2.
    Oracle,
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::OutOfRange {
            name,
            value: x,
            range: "[0, ∞)",
        });
    }
    Ok(())
}

pub fn fidelity_decay(f0: f64, p: f64, t: f64) -> Result<f64> {
    if !(f0 > 0.0 && f0 <= 1.0) {
        return Err(Error::OutOfRange {
            name: "F0",
            value: f0,
            range: "(0, 1]",
        });
    }
    check_nonneg("p", p)?;
    check_nonneg("t", t)?;
    Ok(f0 * (-p * t).exp())
}

/// `1 − F0 e^{−pt}` without cancellation near `F0 = 1`, `pt = 0`.
pub(crate) fn one_minus_fidelity(f0: f64, p: f64, t: f64) -> f64 {
    (1.0 - f0) - f0 * (-p * t).exp_m1()
}

/// E_R of the Werner state with parameter `f` under `form`.
pub fn werner_er(f: f64, form: TrajectoryForm) -> Result<f64> {
    match form {
        TrajectoryForm::Paper if f <= 0.5 => Ok(0.0),
        TrajectoryForm::Paper => er_werner(f, WernerBridge::OnePlusFOverTwo),
        TrajectoryForm::Oracle => er_werner(f, WernerBridge::OnePlusThreeFOverFour),
    }
}

/// `−(pF/2) log₂((1+F)/(1−F))`, the time derivative of `1 − H₂((1+F)/2)` along
/// `Ḟ = −pF`.
pub fn er_production_rate(f: f64, p: f64) -> Result<f64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::OutOfRange {
            name: "F",
            value: f,
            range: "(0, 1)",
        });
    }
    check_nonneg("p", p)?;
    Ok(rate_with_gap(f, 1.0 - f, p))
}

pub(crate) fn rate_with_gap(f: f64, one_minus_f: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    -(p * f / 2.0) * ((1.0 + f) / one_minus_f).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaEr {
    /// `E_R(F0 e^{−p′T}) − E_R(F0 e^{−pT})`; positive when the slower decay keeps more.
    pub value: f64,
    /// `p′ < p`.
    pub hypothesis_holds: bool,
}

pub fn delta_er(p: f64, p_prime: f64, f0: f64, t_end: f64, form: TrajectoryForm) -> Result<DeltaEr> {
    check_nonneg("p'", p_prime)?;
    if !(t_end > 0.0) {
        return Err(Error::OutOfRange {
            name: "T",
            value: t_end,
            range: "(0, ∞)",
        });
    }
    let slow = werner_er(fidelity_decay(f0, p_prime, t_end)?, form)?;
    let fast = werner_er(fidelity_decay(f0, p, t_end)?, form)?;
    Ok(DeltaEr {
        value: slow - fast,
        hypothesis_holds: p_prime < p,
    })
}

/// Suppression summed over `n` independent pairs.
pub fn delta_er_pairs(n: usize, p: f64, p_prime: f64, f0: f64, t_end: f64, form: TrajectoryForm) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..n {
        total += delta_er(p, p_prime, f0, t_end, form)?.value;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub fidelity: f64,
    pub er_bits: f64,
    pub mixedness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryParams {
    /// Decay rate of this trajectory.
    pub rate: f64,
    pub p: f64,
    pub p_prime: f64,
    pub f0: f64,
    pub t_end: f64,
    pub step: f64,
    pub form: TrajectoryForm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyTrajectory {
    pub samples: Vec<Sample>,
    pub params: TrajectoryParams,
}

/// Linear entropy `(4/3)(1 − Tr ρ²) = 1 − F²` of `F|Φ+⟩⟨Φ+| + (1 − F) I/4`.
pub fn werner_mixedness(f: f64) -> f64 {
    1.0 - f * f
}

/// Post (`p`) and shaped (`p′`) trajectories on the grid `0, step, 2 step, …, T`
/// (the last point is `T` itself).
pub fn trajectory(
    p: f64,
    p_prime: f64,
    f0: f64,
    t_end: f64,
    step: f64,
    form: TrajectoryForm,
) -> Result<(EntropyTrajectory, EntropyTrajectory)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            range: "(0, ∞)",
        });
    }
    check_nonneg("T", t_end)?;
    let n = ((t_end / step) - 1e-9).ceil().max(0.0) as usize;
    let times: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(t_end)).collect();
    let build = |rate: f64| -> Result<EntropyTrajectory> {
        let mut samples = Vec::with_capacity(times.len());
        for &t in &times {
            let f = fidelity_decay(f0, rate, t)?;
            samples.push(Sample {
                t,
                fidelity: f,
                er_bits: werner_er(f, form)?,
                mixedness: werner_mixedness(f),
            });
        }
        Ok(EntropyTrajectory {
            samples,
            params: TrajectoryParams {
                rate,
                p,
                p_prime,
                f0,
                t_end,
                step,
                form,
            },
        })
    };
    Ok((build(p)?, build(p_prime)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DampingPoint {
    pub t: f64,
    pub post_er: f64,
    pub shaped_er: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DampingSuppression {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub slices: usize,
    pub points: Vec<DampingPoint>,
    /// Final `E_R(shaped) − E_R(post)`.
    pub delta: f64,
    /// Same quantity with twice the slices.
    pub delta_doubled: f64,
    pub all_converged: bool,
}

/// Evolves Φ+ under amplitude damping with total strength `gamma` (post) and
/// `gamma_prime` (shaped), each split into `slices` equal compositional steps
/// `1 − (1 − γ)^{1/m}`, evaluating E_R at `samples + 1` evenly spaced slice counts.
pub fn damping_suppression(
    gamma: f64,
    gamma_prime: f64,
    slices: usize,
    samples: usize,
    settings: &SolverSettings,
) -> Result<DampingSuppression> {
    if slices == 0 || samples == 0 || samples > slices {
        return Err(Error::Config("need 1 <= samples <= slices".into()));
    }
    for (name, g) in [("gamma", gamma), ("gamma'", gamma_prime)] {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::OutOfRange {
                name,
                value: g,
                range: "[0, 1]",
            });
        }
    }
    let run = |g: f64, m: usize, marks: &[usize]| -> Result<(Vec<f64>, bool)> {
        let slice = amplitude_damping(1.0 - (1.0 - g).powf(1.0 / m as f64))?;
        let mut rho = DensityMatrix::bell_phi_plus();
        let mut ers = Vec::new();
        let mut ok = true;
        for k in 0..=m {
            if k > 0 {
                rho = slice.apply(&rho, 1)?;
            }
            if marks.contains(&k) {
                let r = er_two_qubit(&rho, settings)?;
                ok &= r.converged;
                ers.push(r.value);
            }
        }
        Ok((ers, ok))
    };
    let marks: Vec<usize> = (0..=samples).map(|j| j * slices / samples).collect();
    let (post, ok1) = run(gamma, slices, &marks)?;
    let (shaped, ok2) = run(gamma_prime, slices, &marks)?;
    let (post2, ok3) = run(gamma, 2 * slices, &[2 * slices])?;
    let (shaped2, ok4) = run(gamma_prime, 2 * slices, &[2 * slices])?;
    let points: Vec<DampingPoint> = marks
        .iter()
        .zip(post.iter().zip(&shaped))
        .map(|(&k, (&a, &b))| DampingPoint {
            t: k as f64 / slices as f64,
            post_er: a,
            shaped_er: b,
        })
        .collect();
    let last = points.last().expect("samples >= 1");
    Ok(DampingSuppression {
        gamma,
        gamma_prime,
        slices,
        delta: last.shaped_er - last.post_er,
        delta_doubled: shaped2[0] - post2[0],
        points,
        all_converged: ok1 && ok2 && ok3 && ok4,
    })
}
