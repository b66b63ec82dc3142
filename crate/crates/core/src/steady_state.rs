//! Thermal-like dressed steady state `ρ ∝ exp(-ξ R_z)` of a collective
//! two-level ensemble.
//!
//! The collective dressed inversion takes the values `m = 2k − N`,
//! `k = 0..=N`, so `Z = Σ exp(-ξ m)` is a finite geometric series and
//! `⟨R_z⟩ = -∂ ln Z / ∂ξ` has the closed form
//!
//! ```text
//! ⟨R_z⟩ = −[(N+1) coth((N+1)ξ) − coth ξ] = −[(N+1) L((N+1)ξ) − L(ξ)]
//! ```
//!
//! with `L(y) = coth y − 1/y` the Langevin function. Writing it with `L`
//! removes the `1/ξ` poles analytically, so the difference never cancels
//! catastrophically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{generalized_rabi, mixing_angle, DressedSteadyState, EnsembleParams};

/// Below this argument the Langevin function is summed from its odd Taylor series.
pub const LANGEVIN_SERIES_THRESHOLD: f64 = 0.1;

/// Inputs for the inversion exponent of one ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiInputs {
    pub theta: f64,
    pub gamma: f64,
    pub r: f64,
}

/// Inversion exponent `ξ` with
/// `2ξ = ln([γ cos⁴θ + r sin²2θ/4] / [γ sin⁴θ + r sin²2θ/4])`.
pub fn xi(inputs: &XiInputs) -> Result<f64> {
    let XiInputs { theta, gamma, r } = *inputs;
    let two_theta = 2.0 * theta;
    xi_from_double_angle(two_theta.cos(), two_theta.sin(), gamma, r)
}

/// Same as [`xi`], parameterized by `cos 2θ` and `sin 2θ`.
///
/// `cos⁴θ − sin⁴θ = cos 2θ`, so the log-ratio is evaluated as
/// `ln(1 + γ cos 2θ / den)`, which stays accurate as `θ → π/4`.
pub(crate) fn xi_from_double_angle(cos2: f64, sin2: f64, gamma: f64, r: f64) -> Result<f64> {
    let dephasing = 0.25 * r * sin2 * sin2;
    let num = 0.25 * gamma * (1.0 + cos2).powi(2) + dephasing;
    let den = 0.25 * gamma * (1.0 - cos2).powi(2) + dephasing;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::DegenerateParameters(format!(
            "population ratio {num}/{den} is undefined (gamma = {gamma}, r = {r}, cos 2θ = {cos2})"
        )));
    }
    let x = (gamma * cos2 / den).ln_1p();
    if x.is_finite() {
        Ok(0.5 * x)
    } else {
        Ok(0.5 * (num.ln() - den.ln()))
    }
}

/// `ln Z` with `Z = Σ_{k=0}^{N} exp(-ξ(2k − N))`, evaluated in the log domain.
pub fn log_partition(xi: f64, n: u32) -> f64 {
    let a = xi.abs();
    let m = f64::from(n) + 1.0;
    if a == 0.0 {
        return m.ln();
    }
    // Z is even in ξ: Z = e^{aN} (1 − e^{−2a(N+1)}) / (1 − e^{−2a})
    a * f64::from(n) + (-(-2.0 * a * m).exp_m1()).ln() - (-(-2.0 * a).exp_m1()).ln()
}

/// Langevin function `L(y) = coth y − 1/y`.
pub fn langevin(y: f64) -> f64 {
    let a = y.abs();
    let v = if a < LANGEVIN_SERIES_THRESHOLD {
        // Σ 2^{2n} B_{2n} y^{2n−1} / (2n)!
        const C: [f64; 7] = [
            1.0 / 3.0,
            -1.0 / 45.0,
            2.0 / 945.0,
            -1.0 / 4725.0,
            2.0 / 93555.0,
            -1382.0 / 638_512_875.0,
            4.0 / 18_243_225.0,
        ];
        let a2 = a * a;
        a * C.iter().rev().fold(0.0, |acc, c| acc * a2 + c)
    } else {
        1.0 + 2.0 / (2.0 * a).exp_m1() - 1.0 / a
    };
    v.copysign(y)
}

/// Collective dressed inversion `⟨R_z⟩ = -∂ ln Z / ∂ξ`, in `[-N, N]`.
///
/// Odd in `ξ` by construction.
pub fn dressed_inversion(xi: f64, n: u32) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    let m = f64::from(n) + 1.0;
    let a = xi.abs();
    let v = m * langevin(m * a) - langevin(a);
    -v.min(f64::from(n)).copysign(xi)
}

/// Dressed steady state of one ensemble.
pub fn solve_ensemble(params: &EnsembleParams) -> Result<DressedSteadyState> {
    params.validate()?;
    let theta = mixing_angle(params.delta, params.omega)?;
    let omega_tilde = generalized_rabi(params.omega, params.delta)?;
    let (cos2, sin2) = params.double_angle();
    let xi = xi_from_double_angle(cos2, sin2, params.gamma, params.r)?;
    Ok(DressedSteadyState {
        theta,
        xi,
        omega_tilde,
        omega_bar: omega_tilde / params.collective_rate(),
        log_partition: log_partition(xi, params.n),
        rz: dressed_inversion(xi, params.n),
    })
}
