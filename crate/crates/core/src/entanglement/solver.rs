//! Alternating minimization of `S(ρ‖σ)` over mixtures of product pure states.
//!
//! Each outer iteration runs a few multiplicative weight updates with a line
//! search (the objective is convex in the weights), one gradient step on the
//! Bloch angles of all atoms, and periodically swaps the lightest atom for the
//! product state with the steepest descent direction.

use std::f64::consts::{LN_2, PI};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    angles_of, closest_separable_bell_diagonal, kron2, qubit, with_octahedron_atoms, ERResult, ErKind, ProductState,
    SeparableAnsatz,
};
use crate::error::{Error, Result};
use crate::qstate::{relative_entropy, von_neumann_entropy, BellDiagonalState, DensityMatrix, C64};

type M4 = Matrix4<C64>;
type V4 = Vector4<C64>;
type V2 = Vector2<C64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub ansatz_size: usize,
    /// Weight of `I/4` mixed into the initial separable state.
    pub init_mixing: f64,
    /// `σ → (1 − floor) σ + floor · I/4` before logarithms.
    pub floor: f64,
    /// Stop once the value improved by less than this over `window` iterations.
    pub tolerance: f64,
    pub window: usize,
    pub max_iterations: usize,
    /// Iterations between atom-replacement attempts.
    pub insertion_interval: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            ansatz_size: 16,
            init_mixing: 1e-3,
            floor: 1e-9,
            tolerance: 1e-7,
            window: 25,
            max_iterations: 5000,
            insertion_interval: 5,
            seed: 0x5eed,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("solver: {what}")));
        if self.ansatz_size == 0 {
            return bad("ansatz size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.init_mixing) {
            return bad("init mixing must be in [0, 1)");
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return bad("floor must be in (0, 1)");
        }
        if !(self.tolerance > 0.0) || self.window == 0 || self.max_iterations == 0 {
            return bad("tolerance, window and max iterations must be positive");
        }
        if self.insertion_interval == 0 {
            return bad("insertion interval must be >= 1");
        }
        Ok(())
    }
}

struct Spectrum {
    vals: [f64; 4],
    vecs: M4,
}

struct Solver {
    rho: M4,
    entropy_nats: f64,
    floor: f64,
    atoms: Vec<ProductState>,
    kets: Vec<V4>,
    weights: Vec<f64>,
    eta: f64,
    rng: ChaCha8Rng,
}

fn d_theta(theta: f64, phi: f64) -> V2 {
    V2::new(
        C64::new(-0.5 * (theta / 2.0).sin(), 0.0),
        C64::from_polar(0.5 * (theta / 2.0).cos(), phi),
    )
}

fn d_phi(theta: f64, phi: f64) -> V2 {
    V2::new(
        C64::new(0.0, 0.0),
        C64::from_polar((theta / 2.0).sin(), phi) * C64::new(0.0, 1.0),
    )
}

fn ket_of(ps: &ProductState) -> V4 {
    kron2(&qubit(ps.theta_a, ps.phi_a), &qubit(ps.theta_b, ps.phi_b))
}

fn expect(m: &M4, v: &V4) -> f64 {
    v.dotc(&(m * v)).re
}

fn random_atom(rng: &mut ChaCha8Rng) -> ProductState {
    let mut side = || ((2.0 * rng.gen::<f64>() - 1.0).acos(), 2.0 * PI * rng.gen::<f64>());
    let (ta, pa) = side();
    let (tb, pb) = side();
    ProductState::new(ta, pa, tb, pb)
}

fn top_eigvec(m: Matrix2<C64>) -> V2 {
    let e = SymmetricEigen::new(m);
    let k = if e.eigenvalues[0] >= e.eigenvalues[1] { 0 } else { 1 };
    e.eigenvectors.column(k).into_owned()
}

impl Solver {
    fn new(rho: &DensityMatrix, s: &SolverSettings) -> Result<Self> {
        let m = rho.matrix();
        let rho4 = M4::from_fn(|i, j| m.get(i, j));
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);

        let bd = BellDiagonalState::twirl(rho)?;
        let mu = closest_separable_bell_diagonal(&bd.coefficients());
        let empty = SeparableAnsatz {
            weights: Vec::new(),
            product_states: Vec::new(),
            floor: s.floor,
        };
        let mut init = with_octahedron_atoms(empty, &mu, 1.0 - s.init_mixing);
        for idx in 0..4 {
            let ta = if idx & 2 == 0 { 0.0 } else { PI };
            let tb = if idx & 1 == 0 { 0.0 } else { PI };
            init.product_states.push(ProductState::new(ta, 0.0, tb, 0.0));
            init.weights.push(s.init_mixing / 4.0);
        }
        let mut pairs: Vec<(f64, ProductState)> = init.weights.into_iter().zip(init.product_states).collect();
        if pairs.len() > s.ansatz_size {
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
            pairs.truncate(s.ansatz_size);
        }
        while pairs.len() < s.ansatz_size {
            pairs.push((0.0, random_atom(&mut rng)));
        }
        let total: f64 = pairs.iter().map(|p| p.0).sum();
        let weights: Vec<f64> = pairs.iter().map(|p| p.0 / total).collect();
        let atoms: Vec<ProductState> = pairs.into_iter().map(|p| p.1).collect();
        let kets = atoms.iter().map(ket_of).collect();
        Ok(Self {
            rho: rho4,
            entropy_nats: von_neumann_entropy(rho) * LN_2,
            floor: s.floor,
            atoms,
            kets,
            weights,
            eta: 0.5,
            rng,
        })
    }

    fn sigma(&self, w: &[f64], kets: &[V4]) -> M4 {
        let mut s = M4::identity() * C64::new(self.floor / 4.0, 0.0);
        for (wk, k) in w.iter().zip(kets) {
            if *wk > 0.0 {
                s += k * k.adjoint() * C64::new((1.0 - self.floor) * wk, 0.0);
            }
        }
        s
    }

    fn spectrum(&self, sigma: M4) -> Spectrum {
        let e = SymmetricEigen::new(sigma);
        let tiny = self.floor * 1e-3;
        Spectrum {
            vals: std::array::from_fn(|k| e.eigenvalues[k].max(tiny)),
            vecs: e.eigenvectors,
        }
    }

    /// Objective in bits.
    fn objective(&self, sp: &Spectrum) -> f64 {
        let mut cross = 0.0;
        for k in 0..4 {
            let v: V4 = sp.vecs.column(k).into_owned();
            cross -= expect(&self.rho, &v) * sp.vals[k].ln();
        }
        (cross - self.entropy_nats) / LN_2
    }

    fn value(&self, w: &[f64], kets: &[V4]) -> f64 {
        self.objective(&self.spectrum(self.sigma(w, kets)))
    }

    /// Fréchet derivative of `ln` at the current `σ`, applied to `ρ`. The
    /// gradient of the objective with respect to the unfloored mixture is
    /// `−(1 − floor)/ln 2` times this operator.
    fn log_derivative(&self) -> M4 {
        let sp = self.spectrum(self.sigma(&self.weights, &self.kets));
        let m = sp.vecs.adjoint() * self.rho * sp.vecs;
        let g = M4::from_fn(|i, j| {
            let (a, b) = (sp.vals[i], sp.vals[j]);
            let gamma = if (a - b).abs() <= 1e-10 * a.max(b) {
                2.0 / (a + b)
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            m[(i, j)] * gamma
        });
        sp.vecs * g * sp.vecs.adjoint()
    }

    fn clean(w: &mut [f64]) {
        for x in w.iter_mut() {
            *x = x.max(0.0);
        }
        let total: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= total;
        }
    }

    fn weight_step(&mut self, f: &mut f64) -> bool {
        let d = self.log_derivative();
        let g: Vec<f64> = self.kets.iter().map(|k| expect(&d, k)).collect();
        let s: f64 = self.weights.iter().zip(&g).map(|(w, g)| w * g).sum();
        if !(s > 0.0) {
            return false;
        }
        let dir: Vec<f64> = self
            .weights
            .iter()
            .zip(&g)
            .map(|(w, gk)| w * (gk / s).max(0.0) - w)
            .collect();
        let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        if slope <= 1e-15 {
            return false;
        }
        let t_max = self
            .weights
            .iter()
            .zip(&dir)
            .filter(|(_, d)| **d < 0.0)
            .map(|(w, d)| w / -d)
            .fold(f64::INFINITY, f64::min);
        let at = |t: f64| -> Vec<f64> {
            let mut w: Vec<f64> = self.weights.iter().zip(&dir).map(|(w, d)| w + t * d).collect();
            Self::clean(&mut w);
            w
        };
        let mut t = 1.0;
        let mut best: Option<(f64, f64)> = None;
        for _ in 0..30 {
            let fc = self.value(&at(t), &self.kets);
            if fc < *f {
                best = Some((t, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((mut bt, mut bf)) = best else {
            return false;
        };
        for _ in 0..20 {
            let t2 = (2.0 * bt).min(t_max);
            if t2 <= bt {
                break;
            }
            let fc = self.value(&at(t2), &self.kets);
            if fc < bf {
                bt = t2;
                bf = fc;
            } else {
                break;
            }
        }
        self.weights = at(bt);
        *f = bf;
        true
    }

    fn angle_step(&mut self, f: &mut f64) -> bool {
        let d = self.log_derivative();
        let mut grads = vec![[0.0; 4]; self.atoms.len()];
        let mut slope = 0.0;
        let mut scale: f64 = 0.0;
        for (k, ps) in self.atoms.iter().enumerate() {
            if self.weights[k] <= 0.0 {
                continue;
            }
            let a = qubit(ps.theta_a, ps.phi_a);
            let b = qubit(ps.theta_b, ps.phi_b);
            let dv = d * kron2(&a, &b);
            let parts = [
                kron2(&d_theta(ps.theta_a, ps.phi_a), &b),
                kron2(&d_phi(ps.theta_a, ps.phi_a), &b),
                kron2(&a, &d_theta(ps.theta_b, ps.phi_b)),
                kron2(&a, &d_phi(ps.theta_b, ps.phi_b)),
            ];
            for (j, p) in parts.iter().enumerate() {
                let gj = 2.0 * p.dotc(&dv).re;
                grads[k][j] = gj;
                slope += self.weights[k] * gj * gj;
                scale = scale.max(gj.abs());
            }
        }
        if slope < 1e-14 || scale == 0.0 {
            return false;
        }
        let c = (1.0 - self.floor) / LN_2;
        let rate = c * slope / scale;
        let mut eta = self.eta;
        for _ in 0..40 {
            let step = eta / scale;
            let atoms: Vec<ProductState> = self
                .atoms
                .iter()
                .zip(&grads)
                .map(|(ps, g)| {
                    ProductState::new(
                        ps.theta_a + step * g[0],
                        ps.phi_a + step * g[1],
                        ps.theta_b + step * g[2],
                        ps.phi_b + step * g[3],
                    )
                })
                .collect();
            let kets: Vec<V4> = atoms.iter().map(ket_of).collect();
            let fc = self.value(&self.weights, &kets);
            if fc <= *f - 1e-4 * eta * rate {
                self.atoms = atoms;
                self.kets = kets;
                *f = fc;
                self.eta = (2.0 * eta).min(1.0);
                return true;
            }
            eta *= 0.5;
        }
        self.eta = eta.max(1e-9);
        false
    }

    /// Product state maximizing `⟨ab|D|ab⟩`, by alternating top-eigenvector
    /// updates from several starting points.
    fn best_product(&mut self, d: &M4) -> (ProductState, f64) {
        let h = std::f64::consts::FRAC_PI_2;
        let mut seeds: Vec<(f64, f64)> = vec![(0.0, 0.0), (PI, 0.0), (h, 0.0), (h, PI), (h, h), (h, -h)];
        for _ in 0..2 {
            let r = random_atom(&mut self.rng);
            seeds.push((r.theta_b, r.phi_b));
        }
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.sort_by(|&i, &j| self.weights[j].total_cmp(&self.weights[i]));
        for &i in order.iter().take(2) {
            seeds.push((self.atoms[i].theta_b, self.atoms[i].phi_b));
        }
        let mut best = (ProductState::new(0.0, 0.0, 0.0, 0.0), f64::NEG_INFINITY);
        for (tb, pb) in seeds {
            let mut b = qubit(tb, pb);
            let mut a = V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
            for _ in 0..25 {
                let ma = Matrix2::from_fn(|i, j| {
                    let mut s = C64::new(0.0, 0.0);
                    for k in 0..2 {
                        for l in 0..2 {
                            s += b[k].conj() * d[(2 * i + k, 2 * j + l)] * b[l];
                        }
                    }
                    s
                });
                a = top_eigvec(ma);
                let mb = Matrix2::from_fn(|k, l| {
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..2 {
                        for j in 0..2 {
                            s += a[i].conj() * d[(2 * i + k, 2 * j + l)] * a[j];
                        }
                    }
                    s
                });
                b = top_eigvec(mb);
            }
            let v = expect(d, &kron2(&a, &b));
            if v > best.1 {
                let (ta, pa) = angles_of(&a);
                let (tb, pb) = angles_of(&b);
                best = (ProductState::new(ta, pa, tb, pb), v);
            }
        }
        best
    }

    fn insertion_step(&mut self, f: &mut f64) -> bool {
        let d = self.log_derivative();
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.kets)
            .map(|(w, k)| w * expect(&d, k))
            .sum();
        let (ps, g) = self.best_product(&d);
        if g <= s * (1.0 + 1e-12) {
            return false;
        }
        let idx = self
            .weights
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, w)| if *w < b.1 { (i, *w) } else { b })
            .0;
        let mut base = self.weights.clone();
        base[idx] = 0.0;
        let rest: f64 = base.iter().sum();
        if rest <= 0.0 {
            return false;
        }
        let mut kets = self.kets.clone();
        kets[idx] = ket_of(&ps);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for t in [0.5, 0.2, 0.1, 0.03, 0.01, 1e-3, 1e-4] {
            let mut w: Vec<f64> = base.iter().map(|x| x / rest * (1.0 - t)).collect();
            w[idx] = t;
            let fc = self.value(&w, &kets);
            if best.as_ref().is_none_or(|b| fc < b.1) {
                best = Some((w, fc));
            }
        }
        match best {
            Some((w, fc)) if fc < *f => {
                self.weights = w;
                self.kets = kets;
                self.atoms[idx] = ps;
                *f = fc;
                true
            }
            _ => false,
        }
    }
}

pub(super) fn minimize(rho: &DensityMatrix, settings: &SolverSettings) -> Result<ERResult> {
    settings.validate()?;
    let mut s = Solver::new(rho, settings)?;
    let mut f = s.value(&s.weights, &s.kets);
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=settings.max_iterations {
        iterations = it;
        for _ in 0..10 {
            if !s.weight_step(&mut f) {
                break;
            }
        }
        s.angle_step(&mut f);
        if it % settings.insertion_interval == 0 {
            s.insertion_step(&mut f);
        }
        history.push(f);
        let n = history.len();
        if n > settings.window && history[n - 1 - settings.window] - f < settings.tolerance {
            converged = true;
            break;
        }
    }
    let certificate = SeparableAnsatz {
        weights: s.weights,
        product_states: s.atoms,
        floor: s.floor,
    };
    let value = relative_entropy(rho, &certificate.assemble()?)?;
    Ok(ERResult {
        value,
        kind: ErKind::NumericUpperBound,
        certificate: Some(certificate),
        iterations,
        converged,
    })
}
