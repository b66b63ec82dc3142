//! Physical parameters and per-ensemble dressed-state geometry.
//!
//! Every rate (decay `gamma`, collisional `r`, detuning `delta`, half Rabi
//! frequency `omega`) is expressed in units of a reference decay rate, which
//! in practice is the decay rate of ensemble `a`. Physical units only enter
//! through [`SampleGeometry`] and the dimensionless density prefactor
//! `s = N̄ d² / (γ ħ)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two atomic species an ensemble belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    A,
    B,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::A => write!(f, "a"),
            Label::B => write!(f, "b"),
        }
    }
}

/// One laser-driven ensemble of identical two-level atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub label: Label,
    /// Number of atoms.
    #[serde(alias = "N")]
    pub n: u32,
    /// Spontaneous decay rate.
    pub gamma: f64,
    /// Collisional (pure dephasing) rate.
    pub r: f64,
    /// Laser detuning, atomic transition frequency minus laser frequency.
    pub delta: f64,
    /// Half Rabi frequency.
    pub omega: f64,
    /// `N̄ d² / (γ ħ)`; scales this ensemble's contribution to the susceptibility.
    #[serde(default = "unit_prefactor")]
    pub density_prefactor: f64,
}

fn unit_prefactor() -> f64 {
    1.0
}

impl EnsembleParams {
    pub fn new(label: Label, n: u32, gamma: f64, r: f64, delta: f64, omega: f64) -> Self {
        EnsembleParams {
            label,
            n,
            gamma,
            r,
            delta,
            omega,
            density_prefactor: 1.0,
        }
    }

    pub fn with_density_prefactor(mut self, s: f64) -> Self {
        self.density_prefactor = s;
        self
    }

    /// Checks the invariants required by the analytic steady state.
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("gamma", self.gamma),
            ("r", self.r),
            ("delta", self.delta),
            ("omega", self.omega),
            ("density_prefactor", self.density_prefactor),
        ] {
            if !v.is_finite() {
                return Err(Error::param(field, format!("must be finite, got {v}")));
            }
        }
        if self.n == 0 {
            return Err(Error::param("n", "atom count must be at least 1"));
        }
        if self.gamma < 0.0 {
            return Err(Error::param("gamma", "must be non-negative"));
        }
        if self.r < 0.0 {
            return Err(Error::param("r", "must be non-negative"));
        }
        if self.gamma + self.r <= 0.0 {
            return Err(Error::param("gamma", "gamma + r must be positive"));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidRegime(format!(
                "ensemble {}: omega must be positive, got {}",
                self.label, self.omega
            )));
        }
        if self.density_prefactor < 0.0 {
            return Err(Error::param("density_prefactor", "must be non-negative"));
        }
        Ok(())
    }

    /// Collective decay scale `γ N`.
    pub fn collective_rate(&self) -> f64 {
        self.gamma * f64::from(self.n)
    }

    /// `Δ / (2Ω)`, the cotangent of twice the mixing angle.
    pub fn detuning_ratio(&self) -> f64 {
        self.delta / (2.0 * self.omega)
    }

    /// `(cos 2θ, sin 2θ)` computed from `Δ/2` and `Ω` directly, so that zero
    /// detuning gives an exactly vanishing cosine.
    pub fn double_angle(&self) -> (f64, f64) {
        let rabi = (self.omega).hypot(0.5 * self.delta);
        (0.5 * self.delta / rabi, self.omega / rabi)
    }
}

/// Dressed-basis steady state of one ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedSteadyState {
    /// Mixing angle in `(0, π/2)`.
    pub theta: f64,
    /// Inversion exponent of the thermal-like steady state `∝ exp(-ξ R_z)`.
    pub xi: f64,
    /// Generalized Rabi frequency `Ω̃`.
    pub omega_tilde: f64,
    /// `Ω̃ / (γ N)`.
    pub omega_bar: f64,
    /// `ln Z`.
    pub log_partition: f64,
    /// Collective dressed inversion `⟨R_z⟩`, in `[-N, N]`.
    pub rz: f64,
}

/// Sample geometry used for the switching-time estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGeometry {
    /// Sample length in units of the wavelength.
    pub length_l: f64,
    /// Cross-section in units of the wavelength squared.
    pub area_s: f64,
    /// Wavelength in cm.
    pub lambda: f64,
    /// Physical decay rate in 1/s.
    pub gamma_phys: f64,
    /// Speed of light in cm/s.
    #[serde(default = "speed_of_light")]
    pub c: f64,
}

fn speed_of_light() -> f64 {
    2.997_924_58e10
}

impl SampleGeometry {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("length_l", self.length_l),
            ("area_s", self.area_s),
            ("lambda", self.lambda),
            ("gamma_phys", self.gamma_phys),
            ("c", self.c),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(
                    field,
                    format!("must be strictly positive, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Physical sample length in cm.
    pub fn length_cm(&self) -> f64 {
        self.length_l * self.lambda
    }
}

/// Mixing angle `θ ∈ (0, π/2)` with `cot 2θ = Δ / (2Ω)`.
///
/// Uses the `(0, π)` branch of arccot, so `sin θ` and `cos θ` are both
/// non-negative; infinite detunings map onto the closed endpoints.
pub fn mixing_angle(delta: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if delta.is_nan() {
        return Err(Error::param("delta", "must not be NaN"));
    }
    Ok(0.5 * (2.0 * omega).atan2(delta))
}

/// `Ω̃ = √(Ω² + (Δ/2)²)`.
pub fn generalized_rabi(omega: f64, delta: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "omega must be positive, got {omega}"
        )));
    }
    Ok(omega.hypot(0.5 * delta))
}

/// Rabi frequency `2Ω` must exceed the collective width `γN` by this factor.
pub const INTENSE_FIELD_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleValidity {
    pub label: Label,
    /// `2Ω ≥ 10 γ N`.
    pub intense_field: bool,
    /// `N γ ≤ Δω`: cross-damping may be neglected.
    pub cross_damping_negligible: bool,
    /// `Δω < Ω̃`.
    pub splitting_below_rabi: bool,
}

/// Outcome of the secular-approximation checks. Never blocks a computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecularReport {
    /// `|Δ_a − Δ_b|`.
    pub delta_omega: f64,
    pub ensembles: [EnsembleValidity; 2],
}

impl SecularReport {
    pub fn all_pass(&self) -> bool {
        self.ensembles
            .iter()
            .all(|e| e.intense_field && e.cross_damping_negligible && e.splitting_below_rabi)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.ensembles {
            if !e.intense_field {
                out.push(format!(
                    "ensemble {}: 2Ω < {INTENSE_FIELD_FACTOR}·γN, intense-field limit not reached",
                    e.label
                ));
            }
            if !e.cross_damping_negligible {
                out.push(format!(
                    "ensemble {}: Nγ > Δω = {}, cross-damping not negligible",
                    e.label, self.delta_omega
                ));
            }
            if !e.splitting_below_rabi {
                out.push(format!(
                    "ensemble {}: Δω = {} is not below the generalized Rabi frequency",
                    e.label, self.delta_omega
                ));
            }
        }
        out
    }
}

pub fn secular_validity_check(a: &EnsembleParams, b: &EnsembleParams) -> SecularReport {
    let delta_omega = (a.delta - b.delta).abs();
    let check = |p: &EnsembleParams| {
        let rabi = p.omega.hypot(0.5 * p.delta);
        EnsembleValidity {
            label: p.label,
            intense_field: 2.0 * p.omega >= INTENSE_FIELD_FACTOR * p.collective_rate(),
            cross_damping_negligible: p.collective_rate() <= delta_omega,
            splitting_below_rabi: delta_omega < rabi,
        }
    };
    SecularReport {
        delta_omega,
        ensembles: [check(a), check(b)],
    }
}
