//! Relative entropy of entanglement: closed forms for pure and Bell-diagonal
//! states, and a numerical upper bound over explicit separable ansätze.

mod solver;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{binary_entropy, von_neumann_entropy, BellDiagonalState, ComplexMatrix, DensityMatrix, C64};

pub use solver::SolverSettings;

/// Two single-qubit pure states `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub theta_a: f64,
    pub phi_a: f64,
    pub theta_b: f64,
    pub phi_b: f64,
}

pub(crate) fn qubit(theta: f64, phi: f64) -> Vector2<C64> {
    Vector2::new(
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    )
}

pub(crate) fn kron2(a: &Vector2<C64>, b: &Vector2<C64>) -> Vector4<C64> {
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

/// Bloch angles of a (not necessarily normalized) qubit vector, global phase dropped.
pub(crate) fn angles_of(v: &Vector2<C64>) -> (f64, f64) {
    let (na, nb) = (v[0].norm(), v[1].norm());
    let theta = 2.0 * nb.atan2(na);
    let phi = if nb < 1e-15 {
        0.0
    } else if na < 1e-15 {
        v[1].arg()
    } else {
        v[1].arg() - v[0].arg()
    };
    (theta, phi)
}

impl ProductState {
    pub fn new(theta_a: f64, phi_a: f64, theta_b: f64, phi_b: f64) -> Self {
        Self {
            theta_a,
            phi_a,
            theta_b,
            phi_b,
        }
    }

    pub fn ket(&self) -> [C64; 4] {
        let v = kron2(&qubit(self.theta_a, self.phi_a), &qubit(self.theta_b, self.phi_b));
        [v[0], v[1], v[2], v[3]]
    }
}

/// Mixture of product pure states, optionally floored towards `I/4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableAnsatz {
    pub weights: Vec<f64>,
    pub product_states: Vec<ProductState>,
    /// `σ = (1 − floor) Σ w_k |a_k b_k⟩⟨a_k b_k| + floor · I/4`.
    pub floor: f64,
}

impl SeparableAnsatz {
    pub fn assemble(&self) -> Result<DensityMatrix> {
        if self.weights.len() != self.product_states.len() || self.weights.is_empty() {
            return Err(Error::DimensionMismatch(self.weights.len(), self.product_states.len()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidBellCoefficients("negative ansatz weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTrace(total));
        }
        if !(0.0..=1.0).contains(&self.floor) {
            return Err(Error::OutOfRange {
                name: "floor",
                value: self.floor,
                range: "[0, 1]",
            });
        }
        let mut m = ComplexMatrix::identity(4).scale_real(self.floor / 4.0);
        for (w, ps) in self.weights.iter().zip(&self.product_states) {
            let k = ps.ket();
            m = &m + &ComplexMatrix::outer(&k, &k).scale_real((1.0 - self.floor) * w);
        }
        DensityMatrix::from_numeric(m, vec![2, 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErKind {
    ClosedForm,
    NumericUpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ERResult {
    /// Bits.
    pub value: f64,
    pub kind: ErKind,
    pub certificate: Option<SeparableAnsatz>,
    pub iterations: usize,
    pub converged: bool,
}

impl ERResult {
    fn closed(value: f64, certificate: Option<SeparableAnsatz>) -> Self {
        Self {
            value: value.max(0.0),
            kind: ErKind::ClosedForm,
            certificate,
            iterations: 0,
            converged: true,
        }
    }
}

/// Entanglement entropy `S(ρ_A)` of a bipartite pure state with local dims `dims`.
pub fn er_pure(psi: &[C64], dims: [usize; 2]) -> Result<ERResult> {
    let rho = DensityMatrix::pure(psi, dims.to_vec())?;
    let reduced = rho.partial_trace(&[0])?;
    Ok(ERResult::closed(von_neumann_entropy(&reduced), None))
}

/// `0` if the largest Bell weight `λ ≤ 1/2`, else `1 − H₂(λ)`. The certificate is
/// the optimal Bell-diagonal separable state written as 16 product states.
pub fn er_bell_diagonal(state: &BellDiagonalState) -> Result<ERResult> {
    let state = BellDiagonalState::new(state.coefficients())?;
    let (_, lambda) = state.max_coefficient();
    let value = if lambda <= 0.5 {
        0.0
    } else {
        1.0 - binary_entropy(lambda)?
    };
    let sigma = closest_separable_bell_diagonal(&state.coefficients());
    let certificate = SeparableAnsatz {
        weights: Vec::new(),
        product_states: Vec::new(),
        floor: 0.0,
    };
    let certificate = with_octahedron_atoms(certificate, &sigma, 1.0);
    Ok(ERResult::closed(value, Some(certificate)))
}

/// Relation between a Werner parameter `F` and the largest Bell weight `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WernerBridge {
    /// `λ = (1 + F) / 2`.
    OnePlusFOverTwo,
    /// `λ = (1 + 3F) / 4`, the largest eigenvalue of `F|Φ+⟩⟨Φ+| + (1 − F) I/4`.
    OnePlusThreeFOverFour,
}

impl WernerBridge {
    pub fn lambda(self, f: f64) -> f64 {
        match self {
            WernerBridge::OnePlusFOverTwo => (1.0 + f) / 2.0,
            WernerBridge::OnePlusThreeFOverFour => (1.0 + 3.0 * f) / 4.0,
        }
    }
}

/// `max(0, 1 − H₂(λ(F)))` under the chosen bridge.
pub fn er_werner(f: f64, bridge: WernerBridge) -> Result<f64> {
    let lambda = bridge.lambda(f);
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            name: "F",
            value: f,
            range: "parameter mapping to a Bell weight in [0, 1]",
        });
    }
    if lambda <= 0.5 {
        return Ok(0.0);
    }
    Ok(1.0 - binary_entropy(lambda)?)
}

/// Numerical upper bound from a separable ansatz; the certificate reproduces the value.
pub fn er_numeric(rho: &DensityMatrix, settings: &SolverSettings) -> Result<ERResult> {
    if rho.dims() != [2, 2] {
        return Err(Error::Unsupported(format!("numeric E_R on dims {:?}", rho.dims())));
    }
    solver::minimize(rho, settings)
}

/// Closed form when `rho` is Bell-diagonal within `1e-10`, numeric otherwise.
pub fn er_two_qubit(rho: &DensityMatrix, settings: &SolverSettings) -> Result<ERResult> {
    match BellDiagonalState::from_density(rho, 1e-10) {
        Ok(bd) => er_bell_diagonal(&bd),
        Err(Error::NotBellDiagonal(_)) => er_numeric(rho, settings),
        Err(e) => Err(e),
    }
}

/// Sum of the magnitudes of the negative partial-transpose eigenvalues.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = rho.partial_transpose(1)?;
    Ok(pt.eigvalsh().iter().filter(|&&x| x < 0.0).map(|x| -x).sum())
}

/// Largest-weight Bell projection onto the separable set: caps `λ_max` at 1/2 and
/// rescales the others proportionally.
pub(crate) fn closest_separable_bell_diagonal(lambda: &[f64; 4]) -> [f64; 4] {
    let (imax, lmax) = lambda
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    if lmax <= 0.5 {
        return *lambda;
    }
    let rest = 1.0 - lmax;
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = if i == imax {
            0.5
        } else if rest < 1e-15 {
            1.0 / 6.0
        } else {
            lambda[i] * 0.5 / rest
        };
    }
    out
}

const P: f64 = FRAC_PI_2;

/// Bell-index couples `(i j | k l)` and the product pairs realising
/// `½(|i⟩⟨i| + |j⟩⟨j|)` and `½(|k⟩⟨k| + |l⟩⟨l|)` in the Bell basis.
type Vertex = [ProductState; 2];
fn octahedron() -> [([usize; 4], Vertex, Vertex); 3] {
    let ps = ProductState::new;
    [
        (
            [0, 3, 1, 2],
            [ps(0.0, 0.0, 0.0, 0.0), ps(PI, 0.0, PI, 0.0)],
            [ps(0.0, 0.0, PI, 0.0), ps(PI, 0.0, 0.0, 0.0)],
        ),
        (
            [0, 1, 2, 3],
            [ps(P, 0.0, P, 0.0), ps(P, PI, P, PI)],
            [ps(P, 0.0, P, PI), ps(P, PI, P, 0.0)],
        ),
        (
            [0, 2, 1, 3],
            [ps(P, P, P, -P), ps(P, -P, P, P)],
            [ps(P, P, P, P), ps(P, -P, P, -P)],
        ),
    ]
}

/// Appends the 12 product states whose mixture is the separable Bell-diagonal
/// state `mu`, scaled by `scale`.
pub(crate) fn with_octahedron_atoms(mut ansatz: SeparableAnsatz, mu: &[f64; 4], scale: f64) -> SeparableAnsatz {
    let couples = octahedron();
    let d: Vec<f64> = couples
        .iter()
        .map(|(ix, _, _)| mu[ix[0]] + mu[ix[1]] - mu[ix[2]] - mu[ix[3]])
        .collect();
    let slack = ((1.0 - d.iter().map(|x| x.abs()).sum::<f64>()) / 3.0).max(0.0);
    for ((_, plus, minus), dx) in couples.iter().zip(&d) {
        let t = dx.abs() + slack;
        let wp = ((t + dx) / 2.0).max(0.0);
        let wm = ((t - dx) / 2.0).max(0.0);
        for atom in plus {
            ansatz.weights.push(scale * wp / 2.0);
            ansatz.product_states.push(*atom);
        }
        for atom in minus {
            ansatz.weights.push(scale * wm / 2.0);
            ansatz.product_states.push(*atom);
        }
    }
    ansatz
}
