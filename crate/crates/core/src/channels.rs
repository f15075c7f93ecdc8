//! Quantum channels in Kraus form, their Choi states, the entanglement-breaking
//! test, and the two dynamical-decoupling channel transformations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{gates, ComplexMatrix, DensityMatrix, STATE_TOL};

/// Completeness tolerance for `Σ K† K = I`.
pub const KRAUS_TOL: f64 = 1e-10;

/// Kraus operators with Frobenius norm below this are dropped after composition.
pub const KRAUS_PRUNE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ChannelFamily {
    Depolarizing { p: f64 },
    AmplitudeDamping { gamma: f64 },
    Custom,
}

#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    family: ChannelFamily,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, family: ChannelFamily) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let d = first.rows();
        for k in &kraus {
            if !k.is_square() {
                return Err(Error::NotSquare(k.rows(), k.cols()));
            }
            if k.rows() != d {
                return Err(Error::DimensionMismatch(k.rows(), d));
            }
        }
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &kraus {
            sum = &sum + &(&k.dagger() * k);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev > KRAUS_TOL {
            return Err(Error::KrausIncomplete(dev));
        }
        Ok(Self { kraus, family })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![ComplexMatrix::identity(d)],
            family: ChannelFamily::Custom,
        }
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn family(&self) -> ChannelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    /// Applies the channel to subsystem `target` of `rho`.
    pub fn apply(&self, rho: &DensityMatrix, target: usize) -> Result<DensityMatrix> {
        let dims = rho.dims();
        if target >= dims.len() {
            return Err(Error::InvalidSubsystems(format!(
                "target {target} of {} subsystems",
                dims.len()
            )));
        }
        if dims[target] != self.dim() {
            return Err(Error::DimensionMismatch(dims[target], self.dim()));
        }
        let left: usize = dims[..target].iter().product();
        let right: usize = dims[target + 1..].iter().product();
        let (il, ir) = (ComplexMatrix::identity(left), ComplexMatrix::identity(right));
        let mut out = ComplexMatrix::zeros(rho.dim(), rho.dim());
        for k in &self.kraus {
            let full = il.kron(k).kron(&ir);
            out = &out + &full.conjugate(rho.matrix());
        }
        DensityMatrix::from_numeric(out, dims.to_vec())
    }

    /// Applies the channel on every listed subsystem, in order.
    pub fn apply_each(&self, rho: &DensityMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        targets.iter().try_fold(rho.clone(), |acc, &t| self.apply(&acc, t))
    }

    /// `after ∘ self` as a Kraus-set product, pruning negligible operators.
    pub fn then(&self, after: &QuantumChannel) -> Result<QuantumChannel> {
        if after.dim() != self.dim() {
            return Err(Error::DimensionMismatch(after.dim(), self.dim()));
        }
        let kraus: Vec<ComplexMatrix> = after
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .filter(|k| k.frobenius_norm() > KRAUS_PRUNE)
            .collect();
        let family = match (self.family, after.family) {
            (ChannelFamily::AmplitudeDamping { gamma: a }, ChannelFamily::AmplitudeDamping { gamma: b }) => {
                ChannelFamily::AmplitudeDamping {
                    gamma: 1.0 - (1.0 - a) * (1.0 - b),
                }
            }
            _ => ChannelFamily::Custom,
        };
        QuantumChannel::new(kraus, family)
    }

    /// Channel `ρ ↦ N(U ρ U†)`: Kraus set `{K_i U}`.
    pub fn precomposed_with(&self, u: &ComplexMatrix) -> Result<QuantumChannel> {
        if u.rows() != self.dim() || !u.is_unitary(1e-10) {
            return Err(Error::DimensionMismatch(u.rows(), self.dim()));
        }
        QuantumChannel::new(self.kraus.iter().map(|k| k * u).collect(), ChannelFamily::Custom)
    }

    fn require_qubit(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::Unsupported(format!(
                "a {}-dimensional channel (qubit only)",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `(I ⊗ N)(|Φ+><Φ+|)`.
    pub fn choi(&self) -> Result<DensityMatrix> {
        self.require_qubit()?;
        self.apply(&DensityMatrix::bell_phi_plus(), 1)
    }

    /// PPT test on the Choi state, exact for qubit channels.
    pub fn is_entanglement_breaking(&self) -> Result<EbWitness> {
        let min = self.choi()?.min_pt_eigenvalue()?;
        Ok(EbWitness {
            entanglement_breaking: min >= -STATE_TOL,
            min_pt_eigenvalue: min,
        })
    }

    /// Parametric decoupling: same family, noise parameter multiplied by
    /// `exp(−γ_sd / f_DD)`.
    pub fn dd_effective_parametric(&self, cfg: &DDConfig) -> Result<QuantumChannel> {
        cfg.validate()?;
        if cfg.mode != DDMode::Parametric {
            return Err(Error::Config("parametric DD requires mode = parametric".into()));
        }
        let factor = cfg.compression_factor();
        match self.family {
            ChannelFamily::Depolarizing { p } => depolarizing(p * factor),
            ChannelFamily::AmplitudeDamping { gamma } => amplitude_damping(gamma * factor),
            ChannelFamily::Custom => Err(Error::Unsupported("parametric decoupling of a custom channel".into())),
        }
    }

    /// Pulse-averaged channel `(1/M) Σ_k N(P_k ρ P_k†)`, with `P_k` cycling through
    /// the pulse set. Kraus set `{sqrt(c_k/M) K_i P_k}` where `c_k` counts repeats of
    /// each distinct pulse. With `frame_corrected` the pulse is undone after the
    /// channel, giving `{sqrt(c_k/M) P_k† K_i P_k}` (a twirl).
    pub fn dd_effective_pulse_average(&self, cfg: &DDConfig) -> Result<QuantumChannel> {
        cfg.validate()?;
        if cfg.mode != DDMode::PulseAverage {
            return Err(Error::Config("pulse-average DD requires mode = pulse_average".into()));
        }
        if cfg.pulse_set.is_empty() {
            return Err(Error::Config("empty pulse set".into()));
        }
        for p in &cfg.pulse_set {
            if p.rows() != self.dim() || !p.is_unitary(1e-10) {
                return Err(Error::Config(format!(
                    "pulse must be a {}-dimensional unitary",
                    self.dim()
                )));
            }
        }
        let m = cfg.pulse_count;
        let n_set = cfg.pulse_set.len();
        let mut counts = vec![0usize; n_set];
        for k in 0..m {
            counts[k % n_set] += 1;
        }
        let mut kraus = Vec::new();
        for (pulse, &count) in cfg.pulse_set.iter().zip(&counts) {
            if count == 0 {
                continue;
            }
            let w = (count as f64 / m as f64).sqrt();
            for k in &self.kraus {
                let op = if cfg.frame_corrected {
                    &(&pulse.dagger() * k) * pulse
                } else {
                    k * pulse
                };
                kraus.push(op.scale_real(w));
            }
        }
        QuantumChannel::new(kraus, ChannelFamily::Custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EbWitness {
    pub entanglement_breaking: bool,
    pub min_pt_eigenvalue: f64,
}

/// `{√(1−p) I, √(p/3) X, √(p/3) Y, √(p/3) Z}` for `p ∈ [0, 3/4]`.
pub fn depolarizing(p: f64) -> Result<QuantumChannel> {
    if !(0.0..=0.75).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 3/4]",
        });
    }
    let [i, x, y, z] = gates::paulis();
    let a = (1.0 - p).sqrt();
    let b = (p / 3.0).sqrt();
    QuantumChannel::new(
        vec![i.scale_real(a), x.scale_real(b), y.scale_real(b), z.scale_real(b)],
        ChannelFamily::Depolarizing { p },
    )
}

/// `K0 = |0><0| + √(1−γ)|1><1|`, `K1 = √γ |0><1|`.
pub fn amplitude_damping(gamma: f64) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "[0, 1]",
        });
    }
    let k0 = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()])?;
    let k1 = ComplexMatrix::from_real_rows(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
    QuantumChannel::new(vec![k0, k1], ChannelFamily::AmplitudeDamping { gamma })
}

/// Local Z measurement with the outcome discarded (qubit dephasing).
pub fn measure_and_discard() -> QuantumChannel {
    let p0 = ComplexMatrix::diag(&[1.0, 0.0]);
    let p1 = ComplexMatrix::diag(&[0.0, 1.0]);
    QuantumChannel::new(vec![p0, p1], ChannelFamily::Custom).expect("projectors are complete")
}

/// Smallest depolarizing parameter whose Choi state is PPT, by bisection on the
/// minimal partial-transpose eigenvalue.
pub fn depolarizing_eb_threshold(tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 0.75);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let min = depolarizing(mid)?.choi()?.min_pt_eigenvalue()?;
        if min < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DDMode {
    Parametric,
    PulseAverage,
}

/// Dynamical-decoupling settings. `noise_spectral_density` is a rate in the same
/// inverse-time units as `pulse_frequency`; it is unrelated to the damping γ of
/// the amplitude-damping family.
#[derive(Clone, Debug)]
pub struct DDConfig {
    pub mode: DDMode,
    pub pulse_count: usize,
    pub pulse_frequency: f64,
    pub noise_spectral_density: f64,
    pub pulse_set: Vec<ComplexMatrix>,
    pub frame_corrected: bool,
}

impl DDConfig {
    pub fn parametric(pulse_frequency: f64, noise_spectral_density: f64) -> Self {
        Self {
            mode: DDMode::Parametric,
            pulse_count: 1,
            pulse_frequency,
            noise_spectral_density,
            pulse_set: gates::paulis().to_vec(),
            frame_corrected: false,
        }
    }

    /// Parametric settings whose compression factor is exactly `target / p`,
    /// i.e. `γ_sd / f_DD = ln(p / target)` at unit pulse frequency.
    pub fn parametric_for_target(p: f64, target: f64) -> Self {
        Self::parametric(1.0, (p / target).ln())
    }

    pub fn pulse_average(pulse_count: usize, pulse_set: Vec<ComplexMatrix>) -> Self {
        Self {
            mode: DDMode::PulseAverage,
            pulse_count,
            pulse_frequency: 1.0,
            noise_spectral_density: 0.0,
            pulse_set,
            frame_corrected: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulse_count < 1 {
            return Err(Error::Config("pulse count M must be >= 1".into()));
        }
        if !(self.pulse_frequency > 0.0) || !self.pulse_frequency.is_finite() {
            return Err(Error::Config(format!("f_DD = {} must be > 0", self.pulse_frequency)));
        }
        if !(self.noise_spectral_density >= 0.0) || !self.noise_spectral_density.is_finite() {
            return Err(Error::Config(format!(
                "noise spectral density {} must be >= 0",
                self.noise_spectral_density
            )));
        }
        Ok(())
    }

    /// `exp(−γ_sd / f_DD)`.
    pub fn compression_factor(&self) -> f64 {
        (-self.noise_spectral_density / self.pulse_frequency).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{c, re, BellDiagonalState, C64, ZERO};

    fn plus_state() -> DensityMatrix {
        DensityMatrix::basis(0, vec![2])
            .unwrap()
            .evolve(&gates::hadamard())
            .unwrap()
    }

    fn sample_qubit_states() -> Vec<DensityMatrix> {
        let mut v = vec![
            DensityMatrix::basis(0, vec![2]).unwrap(),
            DensityMatrix::basis(1, vec![2]).unwrap(),
            plus_state(),
            DensityMatrix::maximally_mixed(vec![2]),
        ];
        let psi = [re(0.6), c(0.0, 0.8)];
        v.push(DensityMatrix::pure(&psi, vec![2]).unwrap());
        v
    }

    #[test]
    fn constructors_check_ranges_and_completeness() {
        assert!(depolarizing(-0.1).is_err());
        assert!(depolarizing(0.8).is_err());
        assert!(amplitude_damping(1.2).is_err());
        for p in [0.0, 0.2, 0.75] {
            assert_eq!(depolarizing(p).unwrap().kraus().len(), 4);
        }
        let bad = vec![ComplexMatrix::identity(2).scale_real(0.9)];
        assert!(matches!(
            QuantumChannel::new(bad, ChannelFamily::Custom),
            Err(Error::KrausIncomplete(_))
        ));
        assert!(matches!(
            QuantumChannel::new(vec![], ChannelFamily::Custom),
            Err(Error::EmptyKraus)
        ));
    }

    #[test]
    fn depolarizing_endpoints() {
        for rho in sample_qubit_states() {
            let out = depolarizing(0.0).unwrap().apply(&rho, 0).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
            let out = depolarizing(0.75).unwrap().apply(&rho, 0).unwrap();
            assert!(
                out.matrix()
                    .max_abs_diff(DensityMatrix::maximally_mixed(vec![2]).matrix())
                    < 1e-14
            );
        }
    }

    #[test]
    fn depolarizing_on_half_a_bell_pair() {
        let out = depolarizing(0.2)
            .unwrap()
            .apply(&DensityMatrix::bell_phi_plus(), 1)
            .unwrap();
        let bd = BellDiagonalState::from_density(&out, 1e-12).unwrap();
        let expect = [0.8, 0.2 / 3.0, 0.2 / 3.0, 0.2 / 3.0];
        for (a, b) in bd.coefficients().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((bd.fidelity() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_examples() {
        for rho in sample_qubit_states() {
            let out = amplitude_damping(0.0).unwrap().apply(&rho, 0).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
            let out = amplitude_damping(1.0).unwrap().apply(&rho, 0).unwrap();
            assert!(
                out.matrix()
                    .max_abs_diff(DensityMatrix::basis(0, vec![2]).unwrap().matrix())
                    < 1e-14
            );
        }
        // Oracle: branch vectors K0 ⊗ I and K1 on Bob of (|00>+|11>)/√2, summed by hand.
        let g: f64 = 0.3;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b0 = [re(h), ZERO, ZERO, re(h * (1.0 - g).sqrt())];
        let b1 = [ZERO, ZERO, re(h * g.sqrt()), ZERO];
        let phi = [re(h), ZERO, ZERO, re(h)];
        let overlap = |v: &[C64; 4]| -> f64 { v.iter().zip(&phi).map(|(a, b)| b.conj() * a).sum::<C64>().norm_sqr() };
        let oracle_fid = overlap(&b0) + overlap(&b1);
        let out = amplitude_damping(g)
            .unwrap()
            .apply(&DensityMatrix::bell_phi_plus(), 1)
            .unwrap();
        assert!((out.expectation(&phi) - oracle_fid).abs() < 1e-14);
        assert!((oracle_fid - 0.843_330_013).abs() < 1e-8);
    }

    #[test]
    fn apply_rejects_bad_targets() {
        let ch = depolarizing(0.1).unwrap();
        let rho = DensityMatrix::bell_phi_plus();
        assert!(ch.apply(&rho, 2).is_err());
        let qutrit = DensityMatrix::maximally_mixed(vec![3]);
        assert!(matches!(ch.apply(&qutrit, 0), Err(Error::DimensionMismatch(3, 2))));
    }

    #[test]
    fn choi_examples() {
        let id = QuantumChannel::identity(2);
        assert!(
            id.choi()
                .unwrap()
                .matrix()
                .max_abs_diff(DensityMatrix::bell_phi_plus().matrix())
                < 1e-15
        );
        let full = depolarizing(0.75).unwrap().choi().unwrap();
        for ev in full.eigenvalues() {
            assert!((ev - 0.25).abs() < 1e-12);
        }
        let ad = amplitude_damping(0.3).unwrap().choi().unwrap();
        assert!((ad.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(ad.eigenvalues()[0] > -1e-12);
        assert!(QuantumChannel::identity(3).choi().is_err());
    }

    #[test]
    fn entanglement_breaking_threshold() {
        assert!(
            !QuantumChannel::identity(2)
                .is_entanglement_breaking()
                .unwrap()
                .entanglement_breaking
        );
        let w = depolarizing(0.1).unwrap().is_entanglement_breaking().unwrap();
        assert!(!w.entanglement_breaking);
        assert!(w.min_pt_eigenvalue < 0.0);
        // Choi weights are (1-p, p/3, p/3, p/3): PPT iff 1 - p <= 1/2.
        let t = depolarizing_eb_threshold(1e-10).unwrap();
        assert!((t - 0.5).abs() < 1e-9, "threshold {t}");
        assert!(
            depolarizing(0.6)
                .unwrap()
                .is_entanglement_breaking()
                .unwrap()
                .entanglement_breaking
        );
    }

    #[test]
    fn parametric_dd() {
        let ch = depolarizing(0.2).unwrap();
        let cfg = DDConfig::parametric(5.0, 0.0);
        match ch.dd_effective_parametric(&cfg).unwrap().family() {
            ChannelFamily::Depolarizing { p } => assert_eq!(p, 0.2),
            f => panic!("wrong family {f:?}"),
        }
        let cfg = DDConfig::parametric_for_target(0.2, 0.17);
        match ch.dd_effective_parametric(&cfg).unwrap().family() {
            ChannelFamily::Depolarizing { p } => assert!((p - 0.17).abs() < 1e-14),
            f => panic!("wrong family {f:?}"),
        }
        // exp(-γ/f) -> 1 as f -> ∞: the compressed parameter returns to p.
        let cfg = DDConfig::parametric(1e12, 1.0);
        match ch.dd_effective_parametric(&cfg).unwrap().family() {
            ChannelFamily::Depolarizing { p } => assert!((p - 0.2).abs() < 1e-12),
            f => panic!("wrong family {f:?}"),
        }
        let ad = amplitude_damping(0.4)
            .unwrap()
            .dd_effective_parametric(&DDConfig::parametric(1.0, 0.5))
            .unwrap();
        match ad.family() {
            ChannelFamily::AmplitudeDamping { gamma } => assert!((gamma - 0.4 * (-0.5f64).exp()).abs() < 1e-15),
            f => panic!("wrong family {f:?}"),
        }
        assert!(QuantumChannel::identity(2)
            .dd_effective_parametric(&DDConfig::parametric(1.0, 1.0))
            .is_err());
        assert!(ch.dd_effective_parametric(&DDConfig::parametric(0.0, 1.0)).is_err());
        assert!(ch.dd_effective_parametric(&DDConfig::parametric(1.0, -1.0)).is_err());
    }

    #[test]
    fn parametric_dd_is_monotone() {
        let p = 0.3;
        let mut last = f64::INFINITY;
        for g in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let v = p * DDConfig::parametric(2.0, g).compression_factor();
            assert!(v <= last);
            last = v;
        }
        let mut last = 0.0;
        for f in [0.1, 0.5, 1.0, 10.0, 100.0] {
            let v = p * DDConfig::parametric(f, 1.0).compression_factor();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn pulse_average_single_identity_pulse_is_original() {
        let ch = amplitude_damping(0.3).unwrap();
        let cfg = DDConfig::pulse_average(1, vec![gates::identity()]);
        let eff = ch.dd_effective_pulse_average(&cfg).unwrap();
        for rho in sample_qubit_states() {
            let a = eff.apply(&rho, 0).unwrap();
            let b = ch.apply(&rho, 0).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
        }
        let empty = DDConfig::pulse_average(4, vec![]);
        assert!(ch.dd_effective_pulse_average(&empty).is_err());
    }

    #[test]
    fn pulse_average_matches_brute_force() {
        let ch = amplitude_damping(0.3).unwrap();
        let cfg = DDConfig::pulse_average(4, gates::paulis().to_vec());
        let eff = ch.dd_effective_pulse_average(&cfg).unwrap();
        for rho in sample_qubit_states() {
            let mut acc = ComplexMatrix::zeros(2, 2);
            for p in gates::paulis() {
                let out = ch.apply(&rho.evolve(&p).unwrap(), 0).unwrap();
                acc = &acc + &out.matrix().scale_real(0.25);
            }
            assert!(eff.apply(&rho, 0).unwrap().matrix().max_abs_diff(&acc) < 1e-14);
        }
    }

    #[test]
    fn pauli_pulse_average_cannot_compress_depolarizing() {
        // Pauli covariance: N_p(PρP) = P N_p(ρ) P, so undoing each pulse frame
        // returns N_p exactly; nothing is compressed.
        let ch = depolarizing(0.2).unwrap();
        let mut cfg = DDConfig::pulse_average(100, gates::paulis().to_vec());
        for rho in sample_qubit_states() {
            for p in gates::paulis() {
                let lhs = ch.apply(&rho.evolve(&p).unwrap(), 0).unwrap();
                let rhs = ch.apply(&rho, 0).unwrap().evolve(&p).unwrap();
                assert!(lhs.matrix().max_abs_diff(rhs.matrix()) < 1e-14);
            }
        }
        cfg.frame_corrected = true;
        let twirled = ch.dd_effective_pulse_average(&cfg).unwrap();
        for rho in sample_qubit_states() {
            let a = twirled.apply(&rho, 0).unwrap();
            let b = ch.apply(&rho, 0).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
        }
    }

    #[test]
    fn verbatim_full_pauli_average_is_a_replacement_channel() {
        // (1/4) Σ P ρ P = Tr(ρ) I/2, so the displayed average outputs N(I/2) for every input.
        let ch = amplitude_damping(0.3).unwrap();
        let cfg = DDConfig::pulse_average(4, gates::paulis().to_vec());
        let eff = ch.dd_effective_pulse_average(&cfg).unwrap();
        let fixed = ch.apply(&DensityMatrix::maximally_mixed(vec![2]), 0).unwrap();
        for rho in sample_qubit_states() {
            assert!(eff.apply(&rho, 0).unwrap().matrix().max_abs_diff(fixed.matrix()) < 1e-14);
        }
        assert!(eff.is_entanglement_breaking().unwrap().entanglement_breaking);
    }

    #[test]
    fn composition_of_amplitude_damping() {
        let a = amplitude_damping(0.2).unwrap();
        let b = amplitude_damping(0.5).unwrap();
        let ab = a.then(&b).unwrap();
        let direct = amplitude_damping(1.0 - 0.8 * 0.5).unwrap();
        match ab.family() {
            ChannelFamily::AmplitudeDamping { gamma } => assert!((gamma - 0.6).abs() < 1e-15),
            f => panic!("{f:?}"),
        }
        let rho = DensityMatrix::bell_phi_plus();
        let x = ab.apply(&rho, 1).unwrap();
        let y = direct.apply(&rho, 1).unwrap();
        assert!(x.matrix().max_abs_diff(y.matrix()) < 1e-14);
        // K1·K1 vanishes and is pruned.
        assert_eq!(ab.kraus().len(), 3);
    }

    #[test]
    fn precomposition_with_unitary() {
        let ch = amplitude_damping(0.3).unwrap();
        let u = gates::hadamard();
        let pre = ch.precomposed_with(&u).unwrap();
        let rho = DensityMatrix::basis(1, vec![2]).unwrap();
        let a = pre.apply(&rho, 0).unwrap();
        let b = ch.apply(&rho.evolve(&u).unwrap(), 0).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
    }
}
