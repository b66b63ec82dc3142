//! Numerical Kramers-Kronig check on a uniformly sampled spectrum.
//!
//! For a response analytic in the upper half plane,
//! `χ′(x) = (1/π) P∫ χ″(y) / (y − x) dy`.

use crate::error::{Error, Result};

/// Principal-value Hilbert transform of `chi_im` on a uniform grid, evaluated
/// at the sample indices in `at`.
///
/// Uses the trapezoid rule on the sub-grid of opposite parity to the
/// evaluation point (step `2h`), which is symmetric about the singularity
/// and therefore cancels the pole exactly.
pub fn dispersion_from_absorption(x: &[f64], chi_im: &[f64], at: &[usize]) -> Result<Vec<f64>> {
    if x.len() != chi_im.len() || x.len() < 3 {
        return Err(Error::Usage(
            "grid and samples must match and hold at least 3 points".into(),
        ));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Usage("grid must be increasing".into()));
    }
    at.iter()
        .map(|&i| {
            if i >= x.len() {
                return Err(Error::Usage(format!("index {i} outside the grid")));
            }
            let xi = x[i];
            let start = if i % 2 == 0 { 1 } else { 0 };
            let sum: f64 = (start..x.len())
                .step_by(2)
                .map(|j| chi_im[j] / (x[j] - xi))
                .sum();
            Ok(2.0 * h * sum / std::f64::consts::PI)
        })
        .collect()
}

/// Result of comparing a transformed absorption against the dispersion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KramersKronigCheck {
    /// Largest `|Hχ″ − χ′|` over the checked window.
    pub max_abs_error: f64,
    /// Largest `|χ′|` over the checked window.
    pub peak: f64,
}

impl KramersKronigCheck {
    /// Error relative to the dispersion peak in the window.
    pub fn relative_error(&self) -> f64 {
        self.max_abs_error / self.peak
    }
}

/// Transforms `chi_im` and compares with `chi_re` on the central third of the grid.
pub fn check_central_third(
    x: &[f64],
    chi_re: &[f64],
    chi_im: &[f64],
) -> Result<KramersKronigCheck> {
    if chi_re.len() != x.len() {
        return Err(Error::Usage("grid and samples must match".into()));
    }
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let third = (hi - lo) / 3.0;
    let idx: Vec<usize> = (0..x.len())
        .filter(|&i| x[i] >= lo + third && x[i] <= hi - third)
        .collect();
    let transformed = dispersion_from_absorption(x, chi_im, &idx)?;
    let mut out = KramersKronigCheck {
        max_abs_error: 0.0,
        peak: 0.0,
    };
    for (&i, t) in idx.iter().zip(&transformed) {
        out.max_abs_error = out.max_abs_error.max((t - chi_re[i]).abs());
        out.peak = out.peak.max(chi_re[i].abs());
    }
    Ok(out)
}
