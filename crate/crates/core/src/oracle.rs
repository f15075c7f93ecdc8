//! Independent reference computations used by the self-check and the tests:
//! numerical quadrature, fourth-order Runge-Kutta, central differences, and the
//! textbook Bell-weight recurrence for one distillation step.

use crate::dynamics::{one_minus_fidelity, rate_with_gap};
use crate::error::Result;
use crate::qstate::BellDiagonalState;

/// Tanh-sinh quadrature of `f` on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, abs_tol).integral
}

/// `F(t)` for `Ḟ = −pF` by classical RK4 with `steps` equal steps.
pub fn rk4_decay(f0: f64, p: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let rhs = |f: f64| -p * f;
    let mut f = f0;
    for _ in 0..steps {
        let k1 = rhs(f);
        let k2 = rhs(f + 0.5 * h * k1);
        let k3 = rhs(f + 0.5 * h * k2);
        let k4 = rhs(f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    f
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `∫_0^T [rate(F0 e^{−p′t}, p′) − rate(F0 e^{−pt}, p)] dt` for the
/// `1 − H₂((1+F)/2)` form; valid while both fidelities stay in `(0, 1)` away
/// from `t = 0` (the logarithmic endpoint singularity at `F0 = 1` is integrable).
pub fn delta_er_by_quadrature(p: f64, p_prime: f64, f0: f64, t_end: f64) -> f64 {
    let rate = |q: f64, t: f64| rate_with_gap(f0 * (-q * t).exp(), one_minus_fidelity(f0, q, t), q);
    integrate(|t| rate(p_prime, t) - rate(p, t), 0.0, t_end, 1e-12)
}

/// Success probability and kept Bell weights for one step on two copies of `s`,
/// from the recurrence with weights `(A, B, C, D)` on `(Φ+, Ψ−, Ψ+, Φ−)`.
pub fn recurrence_step(s: &BellDiagonalState) -> Result<(f64, BellDiagonalState)> {
    let [a, c, b, d] = s.coefficients();
    let n = (a + b).powi(2) + (c + d).powi(2);
    let a2 = (a * a + b * b) / n;
    let b2 = 2.0 * c * d / n;
    let c2 = (c * c + d * d) / n;
    let d2 = 2.0 * a * b / n;
    Ok((n, BellDiagonalState::new([a2, c2, b2, d2])?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_tracks_exponential() {
        let exact = (-0.2f64).exp();
        assert!((rk4_decay(1.0, 0.2, 1.0, 100) - exact).abs() < 1e-8);
    }

    #[test]
    fn quadrature_on_polynomial() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-10);
    }

    #[test]
    fn recurrence_fixed_point_at_half() {
        let s = BellDiagonalState::werner_channel(0.5).unwrap();
        let (_, out) = recurrence_step(&s).unwrap();
        assert!((out.fidelity() - 0.5).abs() < 1e-12);
    }
}
