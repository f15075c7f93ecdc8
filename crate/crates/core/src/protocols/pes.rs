//! Pre-channel shaping: optional local pre-unitary on Bob's halves, transmission
//! through a decoupled channel, no post-selection.

use rayon::prelude::*;
use serde::Serialize;

use super::u_pre;
use crate::channels::{amplitude_damping, DDConfig, DDMode, QuantumChannel};
use crate::entanglement::{er_two_qubit, ERResult, SolverSettings};
use crate::error::{Error, Result};
use crate::qstate::{gates, ComplexMatrix, DensityMatrix};

#[derive(Clone, Debug)]
pub struct PesOutcome {
    /// Output blocks in pair order: two-pair blocks when the pre-unitary is
    /// used (plus a trailing single pair for odd counts), single pairs otherwise.
    /// Qubit order inside a block is `(A1, B1, A2, B2)`.
    pub blocks: Vec<DensityMatrix>,
    pub effective_channel: QuantumChannel,
    /// E_R of each pair's reduced state.
    pub pair_er: Vec<ERResult>,
    pub per_pair_er: f64,
    pub n_pairs: usize,
    pub used_u_pre: bool,
}

impl PesOutcome {
    /// Product of the blocks, for up to four pairs.
    pub fn output_state(&self) -> Result<DensityMatrix> {
        if self.n_pairs > 4 {
            return Err(Error::Unsupported(format!("materializing {} pairs", self.n_pairs)));
        }
        Ok(self
            .blocks
            .iter()
            .cloned()
            .reduce(|a, b| a.tensor(&b))
            .expect("at least one block"))
    }

    pub fn pair_state(&self, index: usize) -> Result<DensityMatrix> {
        let mut seen = 0;
        for b in &self.blocks {
            let pairs = b.dims().len() / 2;
            if index < seen + pairs {
                let k = index - seen;
                return b.partial_trace(&[2 * k, 2 * k + 1]);
            }
            seen += pairs;
        }
        Err(Error::InvalidSubsystems(format!("pair {index} of {}", self.n_pairs)))
    }
}

/// Channel after decoupling, or the channel itself without a DD configuration.
pub fn effective_channel(channel: &QuantumChannel, dd: Option<&DDConfig>) -> Result<QuantumChannel> {
    match dd {
        None => Ok(channel.clone()),
        Some(cfg) => match cfg.mode {
            DDMode::Parametric => channel.dd_effective_parametric(cfg),
            DDMode::PulseAverage => channel.dd_effective_pulse_average(cfg),
        },
    }
}

fn two_pair_block(channel: &QuantumChannel) -> Result<DensityMatrix> {
    let phi = DensityMatrix::bell_phi_plus();
    let u = gates::embed_pair(&u_pre(), 1, 3, 4);
    let shaped = phi.tensor(&phi).evolve(&u)?;
    let sent = channel.apply_each(&shaped, &[1, 3])?;
    sent.evolve(&u.dagger())
}

/// Sends `n_pairs` copies of Φ+ through the decoupled channel. With `use_u_pre`
/// the pre-unitary acts on Bob's two qubits of each two-pair block before the
/// channel and is undone after it.
pub fn pes_pipeline(
    n_pairs: usize,
    channel: &QuantumChannel,
    dd: Option<&DDConfig>,
    use_u_pre: bool,
    settings: &SolverSettings,
) -> Result<PesOutcome> {
    if n_pairs == 0 {
        return Err(Error::Config("pair count must be >= 1".into()));
    }
    if channel.dim() != 2 {
        return Err(Error::Unsupported("PES needs a qubit channel".into()));
    }
    let eff = effective_channel(channel, dd)?;
    let single = eff.apply(&DensityMatrix::bell_phi_plus(), 1)?;
    let mut blocks = Vec::new();
    if use_u_pre && n_pairs >= 2 {
        let block = two_pair_block(&eff)?;
        blocks.extend(std::iter::repeat_n(block, n_pairs / 2));
        if n_pairs % 2 == 1 {
            blocks.push(single.clone());
        }
    } else {
        blocks.extend(std::iter::repeat_n(single, n_pairs));
    }

    let mut out = PesOutcome {
        blocks,
        effective_channel: eff,
        pair_er: Vec::new(),
        per_pair_er: 0.0,
        n_pairs,
        used_u_pre: use_u_pre && n_pairs >= 2,
    };
    // Identical blocks give identical pairs; evaluate each distinct reduced state once.
    let mut cache: Vec<(DensityMatrix, ERResult)> = Vec::new();
    for i in 0..n_pairs {
        let state = out.pair_state(i)?;
        let er = match cache.iter().find(|(s, _)| *s == state) {
            Some((_, r)) => r.clone(),
            None => {
                let r = er_two_qubit(&state, settings)?;
                cache.push((state, r.clone()));
                r
            }
        };
        out.pair_er.push(er);
    }
    out.per_pair_er = out.pair_er.iter().map(|r| r.value).sum::<f64>() / n_pairs as f64;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub theta: f64,
    pub phi: f64,
    pub er: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreRotationSearch {
    pub best_theta: f64,
    pub best_phi: f64,
    pub best_er: f64,
    /// Grid points within `tie_tolerance` of the best value.
    pub ties: usize,
    pub tie_tolerance: f64,
    pub grid: Vec<GridPoint>,
}

/// `Rz(φ) Ry(θ)`.
pub fn pre_rotation(theta: f64, phi: f64) -> ComplexMatrix {
    &gates::rz(phi) * &gates::ry(theta)
}

/// Grid search over Bob's pre-rotation `Rz(φ) Ry(θ)` before amplitude damping,
/// `θ` on `grid` points in `[0, π]` and `φ` on `grid` points in `[0, 2π)`.
/// The first point (scan order θ-major) within `tie_tolerance` of the maximum wins.
pub fn pre_rotation_search_ad(
    gamma: f64,
    grid: usize,
    tie_tolerance: f64,
    settings: &SolverSettings,
) -> Result<PreRotationSearch> {
    if grid == 0 {
        return Err(Error::Config("grid must have at least one point".into()));
    }
    let channel = amplitude_damping(gamma)?;
    let thetas: Vec<f64> = (0..grid)
        .map(|i| {
            if grid == 1 {
                0.0
            } else {
                std::f64::consts::PI * i as f64 / (grid - 1) as f64
            }
        })
        .collect();
    let phis: Vec<f64> = (0..grid)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / grid as f64)
        .collect();
    let points: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| phis.iter().map(move |&p| (t, p))).collect();
    let evaluated: Result<Vec<GridPoint>> = points
        .par_iter()
        .map(|&(theta, phi)| {
            let r = gates::identity().kron(&pre_rotation(theta, phi));
            let shaped = DensityMatrix::bell_phi_plus().evolve(&r)?;
            let out = channel.apply(&shaped, 1)?;
            let er = er_two_qubit(&out, settings)?;
            Ok(GridPoint {
                theta,
                phi,
                er: er.value,
                converged: er.converged,
            })
        })
        .collect();
    let grid_points = evaluated?;
    let max = grid_points.iter().map(|g| g.er).fold(f64::NEG_INFINITY, f64::max);
    let best = grid_points
        .iter()
        .find(|g| g.er >= max - tie_tolerance)
        .expect("non-empty grid");
    Ok(PreRotationSearch {
        best_theta: best.theta,
        best_phi: best.phi,
        best_er: best.er,
        ties: grid_points.iter().filter(|g| g.er >= max - tie_tolerance).count(),
        tie_tolerance,
        grid: grid_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::depolarizing;

    #[test]
    fn without_decoupling_matches_plain_channel() {
        let ch = depolarizing(0.2).unwrap();
        let cfg = DDConfig::parametric(3.0, 0.0);
        let out = pes_pipeline(3, &ch, Some(&cfg), false, &SolverSettings::default()).unwrap();
        let plain = ch.apply(&DensityMatrix::bell_phi_plus(), 1).unwrap();
        for b in &out.blocks {
            assert!(b.matrix().max_abs_diff(plain.matrix()) < 1e-14);
        }
        let h = -(0.8f64 * 0.8f64.log2() + 0.2 * 0.2f64.log2());
        assert!((out.per_pair_er - (1.0 - h)).abs() < 1e-12);
    }

    #[test]
    fn compressed_parameter_gives_closed_form() {
        let ch = depolarizing(0.2).unwrap();
        let cfg = DDConfig::parametric_for_target(0.2, 0.17);
        let out = pes_pipeline(4, &ch, Some(&cfg), false, &SolverSettings::default()).unwrap();
        let h = -(0.83f64 * 0.83f64.log2() + 0.17 * 0.17f64.log2());
        assert!((out.per_pair_er - (1.0 - h)).abs() < 1e-12);
        assert!(out
            .pair_er
            .iter()
            .all(|r| r.kind == crate::entanglement::ErKind::ClosedForm));
    }

    #[test]
    fn u_pre_blocks_are_valid_and_reproducible() {
        let ch = depolarizing(0.2).unwrap();
        let s = SolverSettings::default();
        let a = pes_pipeline(4, &ch, None, true, &s).unwrap();
        let b = pes_pipeline(4, &ch, None, true, &s).unwrap();
        assert_eq!(a.blocks.len(), 2);
        assert_eq!(a.blocks, b.blocks);
        assert_eq!(a.per_pair_er.to_bits(), b.per_pair_er.to_bits());
        assert_eq!(a.output_state().unwrap().dim(), 256);
    }

    #[test]
    fn pre_rotation_endpoints() {
        let s = SolverSettings::default();
        let r = pre_rotation_search_ad(0.0, 3, 1e-4, &s).unwrap();
        assert_eq!((r.best_theta, r.best_phi), (0.0, 0.0));
        assert!((r.best_er - 1.0).abs() < 1e-6);
        assert_eq!(r.ties, 9);
        let r = pre_rotation_search_ad(1.0, 2, 1e-4, &s).unwrap();
        assert!(r.grid.iter().all(|g| g.er < 1e-4));
    }
}
