//! Weak-probe response of the driven ensembles in the secular,
//! symmetric-decoupling approximation.
//!
//! Each ensemble contributes a pair of complex Lorentzians centred on the
//! dressed sidebands `Δ̃_p = ±2Ω̄`:
//!
//! ```text
//! χ_i = s_i (⟨R_z⟩/N) [ cos⁴θ / (Δ̃_p − 2Ω̄ + iγ̃) − sin⁴θ / (Δ̃_p + 2Ω̄ + iγ̃) ]
//! ```
//!
//! whose real and imaginary parts are the dispersion `χ′` and absorption
//! `χ″`. Probe detunings are scaled per ensemble, `Δ̃_p = Δ_p / (γN)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DressedSteadyState, EnsembleParams, SampleGeometry};
use crate::steady_state::solve_ensemble;

/// Probe frequency relative to atom `a` and to the drive laser.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    /// `ν − ω_a`.
    pub nu_minus_omega_a: f64,
    /// `Δ_p = ν − ω_L = (ν − ω_a) + Δ_a`.
    pub delta_p: f64,
}

impl ProbePoint {
    /// Probe at a fixed offset from the atom-`a` resonance, for laser detuning `Δ_a`.
    pub fn from_offset(nu_minus_omega_a: f64, delta_a: f64) -> Self {
        ProbePoint {
            nu_minus_omega_a,
            delta_p: nu_minus_omega_a + delta_a,
        }
    }

    /// Probe at a fixed detuning from the laser.
    pub fn from_delta_p(delta_p: f64, delta_a: f64) -> Self {
        ProbePoint {
            nu_minus_omega_a: delta_p - delta_a,
            delta_p,
        }
    }

    /// `Δ̃_p = Δ_p / (γN)` for one ensemble.
    pub fn delta_p_tilde(&self, params: &EnsembleParams) -> f64 {
        self.delta_p / params.collective_rate()
    }
}

/// Whether the collective damping `γ_c` enters the linewidth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collectivity {
    #[default]
    Collective,
    /// `γ_c := 0`, the independent-atom linewidth.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingRates {
    pub gamma_s: f64,
    pub gamma_c: f64,
    /// `(γ_s − γ_c) / (γN)`.
    pub gamma_tilde: f64,
}

pub fn damping_rates(theta: f64, gamma: f64, r: f64, rz: f64, n: u32) -> DampingRates {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let gamma_s = gamma * (s2 * s2 + c.powi(4) + s.powi(4)) + r * (c2 * c2 + 0.5 * s2 * s2);
    let gamma_c = gamma * c2 * rz;
    DampingRates {
        gamma_s,
        gamma_c,
        gamma_tilde: (gamma_s - gamma_c) / (gamma * f64::from(n)),
    }
}

/// An ensemble together with its dressed steady state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvedEnsemble {
    pub params: EnsembleParams,
    pub state: DressedSteadyState,
}

impl SolvedEnsemble {
    pub fn solve(params: EnsembleParams) -> Result<Self> {
        let state = solve_ensemble(&params)?;
        Ok(SolvedEnsemble { params, state })
    }

    pub fn damping(&self, mode: Collectivity) -> DampingRates {
        let p = &self.params;
        let mut d = damping_rates(self.state.theta, p.gamma, p.r, self.state.rz, p.n);
        if mode == Collectivity::Independent {
            d.gamma_c = 0.0;
            d.gamma_tilde = d.gamma_s / p.collective_rate();
        }
        d
    }

    fn check(&self) -> Result<()> {
        let p = &self.params;
        if !(p.gamma > 0.0) {
            return Err(Error::Usage(format!(
                "ensemble {}: the susceptibility is scaled by 1/γ and needs gamma > 0",
                p.label
            )));
        }
        let expected = p.omega.hypot(0.5 * p.delta) / p.collective_rate();
        let st = &self.state;
        if !(st.rz.is_finite() && st.rz.abs() <= f64::from(p.n))
            || (st.omega_bar - expected).abs() > 1e-9 * expected
        {
            return Err(Error::Usage(format!(
                "ensemble {}: steady state was not solved for these parameters",
                p.label
            )));
        }
        Ok(())
    }

    /// The two sideband terms `(cos⁴θ, 1/(x₋ + iγ̃))`, `(sin⁴θ, 1/(x₊ + iγ̃))`
    /// with the common weight `s (⟨R_z⟩/N)`.
    fn lorentzians(&self, probe: &ProbePoint, mode: Collectivity) -> (f64, Complex64, Complex64) {
        let p = &self.params;
        let st = &self.state;
        let x = probe.delta_p_tilde(p);
        let g = self.damping(mode).gamma_tilde;
        let weight = p.density_prefactor * st.rz / f64::from(p.n);
        let lower = Complex64::new(x - 2.0 * st.omega_bar, g);
        let upper = Complex64::new(x + 2.0 * st.omega_bar, g);
        (weight, lower, upper)
    }
}

/// Complex susceptibility `χ′ + iχ″` summed over ensembles.
pub fn susceptibility(
    probe: &ProbePoint,
    ensembles: &[SolvedEnsemble],
    mode: Collectivity,
) -> Result<Complex64> {
    if ensembles.is_empty() {
        return Err(Error::Usage("no ensembles given".into()));
    }
    let mut chi = Complex64::new(0.0, 0.0);
    for e in ensembles {
        e.check()?;
        let (s, c) = e.state.theta.sin_cos();
        let (w, lower, upper) = e.lorentzians(probe, mode);
        chi += w * (c.powi(4) / lower - s.powi(4) / upper);
    }
    Ok(chi)
}

/// `dχ′/dΔ_p` at fixed laser frequency, in units of `1/γ_ref`.
///
/// Since `Δ_p = ν − ω_L`, this is also `dχ′/dν`.
pub fn chi_prime_derivative(
    probe: &ProbePoint,
    ensembles: &[SolvedEnsemble],
    mode: Collectivity,
) -> Result<f64> {
    if ensembles.is_empty() {
        return Err(Error::Usage("no ensembles given".into()));
    }
    let mut d = 0.0;
    for e in ensembles {
        e.check()?;
        let (s, c) = e.state.theta.sin_cos();
        let (w, lower, upper) = e.lorentzians(probe, mode);
        let dz = -w * (c.powi(4) / (lower * lower) - s.powi(4) / (upper * upper));
        d += dz.re / e.params.collective_rate();
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefractiveIndex {
    /// `√(1 + sχ′)`; NaN when the probe cannot propagate.
    pub n: f64,
    /// `1 + sχ′ > 0`.
    pub propagating: bool,
}

/// `n ≈ √(1 + sχ′)`.
pub fn refractive_index(chi_prime: f64, s: f64) -> RefractiveIndex {
    let arg = 1.0 + s * chi_prime;
    if arg >= 0.0 {
        RefractiveIndex {
            n: arg.sqrt(),
            propagating: arg > 0.0,
        }
    } else {
        RefractiveIndex {
            n: f64::NAN,
            propagating: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupIndex {
    pub n_g: f64,
    /// `v_g / c = 1 / n_g`.
    pub v_g_over_c: f64,
}

/// `n_g = n + ν dn/dν` with `dn/dν = s (dχ′/dν) / (2n)`.
///
/// `nu_over_gamma` is the probe carrier frequency in units of `γ_ref` and
/// `dchi_prime` is `dχ′/dΔ_p` in units of `1/γ_ref`.
pub fn group_index(n: f64, nu_over_gamma: f64, dchi_prime: f64, s: f64) -> Result<GroupIndex> {
    if n == 0.0 {
        return Err(Error::SingularIndex);
    }
    if !n.is_finite() || n < 0.0 {
        return Err(Error::Usage(format!(
            "group index needs a propagating index, got n = {n}"
        )));
    }
    let n_g = n + nu_over_gamma * s * dchi_prime / (2.0 * n);
    Ok(GroupIndex {
        n_g,
        v_g_over_c: 1.0 / n_g,
    })
}

/// Collective switching time `τ_s ≈ 2L / (λ γ N)` in seconds.
pub fn switching_time(geom: &SampleGeometry, n: u32) -> Result<f64> {
    geom.validate()?;
    if n == 0 {
        return Err(Error::param("n", "atom count must be at least 1"));
    }
    // L = length_l·λ, so λ cancels
    Ok(2.0 * geom.length_l / (geom.gamma_phys * f64::from(n)))
}

/// One probe evaluation: dispersion, absorption, slope and indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub delta_a_over_2omega: f64,
    pub chi_prime: f64,
    pub chi_double_prime: f64,
    pub dchi_prime: f64,
    pub n: f64,
    pub n_g: f64,
    pub propagating: bool,
}

/// Evaluates the full response at one probe point.
///
/// `s` scales `χ′` inside `n`; pass `1.0` when the ensembles' own density
/// prefactors already carry the physical scale. `n_g` is NaN when
/// `nu_over_gamma` is absent or the probe does not propagate.
pub fn response_sample(
    probe: &ProbePoint,
    ensembles: &[SolvedEnsemble],
    mode: Collectivity,
    s: f64,
    nu_over_gamma: Option<f64>,
) -> Result<ResponseSample> {
    let chi = susceptibility(probe, ensembles, mode)?;
    let dchi = chi_prime_derivative(probe, ensembles, mode)?;
    let idx = refractive_index(chi.re, s);
    let n_g = match nu_over_gamma {
        Some(nu) if idx.propagating => group_index(idx.n, nu, dchi, s)?.n_g,
        _ => f64::NAN,
    };
    let a = &ensembles[0].params;
    Ok(ResponseSample {
        delta_a_over_2omega: a.detuning_ratio(),
        chi_prime: chi.re,
        chi_double_prime: chi.im,
        dchi_prime: dchi,
        n: idx.n,
        n_g,
        propagating: idx.propagating,
    })
}

/// Absorption below this magnitude counts as vanishing.
pub const ZERO_ABSORPTION_TOL: f64 = 1e-10;

/// Locates the sign changes of `f` between consecutive grid points and
/// refines each by bisection until `|f| < ZERO_ABSORPTION_TOL` or the
/// bracket collapses to adjacent floats.
pub fn find_sign_changes<F>(grid: &[f64], mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut roots = Vec::new();
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        values.push(f(x)?);
    }
    for i in 0..grid.len().saturating_sub(1) {
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let (mut flo, fhi) = (values[i], values[i + 1]);
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() || fhi == 0.0 {
            continue;
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid)?;
            if fm.abs() < ZERO_ABSORPTION_TOL {
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(mid);
    }
    if let (Some(&x), Some(&v)) = (grid.last(), values.last()) {
        if v == 0.0 {
            roots.push(x);
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Label;
    use std::f64::consts::FRAC_PI_4;

    /// N = 1000, 2Ω/(Nγ) = 10, Δω/(2Ω) = 0.1, r/γ = 0.3.
    fn pair(ratio: f64) -> Vec<SolvedEnsemble> {
        let omega = 5000.0;
        let da = ratio * 2.0 * omega;
        let a = EnsembleParams::new(Label::A, 1000, 1.0, 0.3, da, omega);
        let b = EnsembleParams::new(Label::B, 1000, 1.0, 0.3, da - 0.2 * omega, omega);
        vec![
            SolvedEnsemble::solve(a).unwrap(),
            SolvedEnsemble::solve(b).unwrap(),
        ]
    }

    fn dispersion_vs_drive(n: u32, ratio: f64) -> f64 {
        let omega = 5000.0;
        let da = ratio * 2.0 * omega;
        let ens = [
            SolvedEnsemble::solve(EnsembleParams::new(Label::A, n, 1.0, 0.3, da, omega)).unwrap(),
            SolvedEnsemble::solve(EnsembleParams::new(
                Label::B,
                n,
                1.0,
                0.3,
                da - 0.2 * omega,
                omega,
            ))
            .unwrap(),
        ];
        let probe = ProbePoint::from_offset(0.35 * 2.0 * omega, da);
        susceptibility(&probe, &ens, Collectivity::Collective)
            .unwrap()
            .re
    }

    #[test]
    fn collective_switching_steepens_dispersion() {
        let h = 1e-6;
        let slope = |n| (dispersion_vs_drive(n, h) - dispersion_vs_drive(n, -h)).abs() / (2.0 * h);
        let (many, one) = (slope(1000), slope(1));
        assert!(many > one, "{many} vs {one}");
        assert!(many > 100.0 * one);
    }

    #[test]
    fn damping_examples() {
        let d = damping_rates(FRAC_PI_4, 1.0, 0.3, 123.0, 10);
        assert!((d.gamma_s - 1.65).abs() < 1e-15);
        assert!(d.gamma_c.abs() < 1e-13);

        let n = 50;
        let d = damping_rates(0.0, 1.0, 0.0, -f64::from(n), n);
        assert_eq!(d.gamma_s, 1.0);
        assert_eq!(d.gamma_c, -50.0);
        assert!((d.gamma_tilde - (1.0 + 1.0 / 50.0)).abs() < 1e-15);

        // cot 2θ = 0.1, r = 0.3, N = 1000; 50-digit substitution
        let e =
            SolvedEnsemble::solve(EnsembleParams::new(Label::A, 1000, 1.0, 0.3, 0.2, 1.0)).unwrap();
        let d = e.damping(Collectivity::Collective);
        assert!((d.gamma_s - 1.646_534_653_465_346_5).abs() < 1e-14);
        assert!((d.gamma_c + 98.949_757_393_485_26).abs() < 1e-11);
        assert!((d.gamma_tilde - 0.100_596_292_046_950_6).abs() < 1e-14);
    }

    /// Real and imaginary parts written out term by term.
    fn literal(probe: &ProbePoint, e: &SolvedEnsemble) -> (f64, f64) {
        let p = &e.params;
        let st = &e.state;
        let x = probe.delta_p / (p.gamma * f64::from(p.n));
        let g = e.damping(Collectivity::Collective).gamma_tilde;
        let (c4, s4) = (st.theta.cos().powi(4), st.theta.sin().powi(4));
        let ob = st.omega_bar;
        let w = p.density_prefactor * st.rz / f64::from(p.n);
        let re = w
            * (c4 * (x - 2.0 * ob) / (g * g + (x - 2.0 * ob).powi(2))
                - s4 * (x + 2.0 * ob) / (g * g + (x + 2.0 * ob).powi(2)));
        let im = w
            * (s4 * g / (g * g + (x + 2.0 * ob).powi(2))
                - c4 * g / (g * g + (x - 2.0 * ob).powi(2)));
        (re, im)
    }

    #[test]
    fn complex_regrouping_matches_real_expressions() {
        for ratio in [-0.3, -0.01, 0.001, 0.05, 0.4] {
            let ens = pair(ratio);
            for off in [-2.0, -0.5, 0.0, 0.35, 2.0] {
                let probe = ProbePoint::from_offset(off * 1e4, ens[0].params.delta);
                let chi = susceptibility(&probe, &ens, Collectivity::Collective).unwrap();
                let (mut re, mut im) = (0.0, 0.0);
                for e in &ens {
                    let (r, i) = literal(&probe, e);
                    re += r;
                    im += i;
                }
                let scale = chi.norm().max(1e-300);
                assert!((chi.re - re).abs() < 1e-12 * scale, "{ratio} {off}");
                assert!((chi.im - im).abs() < 1e-12 * scale, "{ratio} {off}");
            }
        }
    }

    #[test]
    fn two_ensembles_add() {
        let ens = pair(0.0013);
        let probe = ProbePoint::from_offset(-1e4, ens[0].params.delta);
        let both = susceptibility(&probe, &ens, Collectivity::Collective).unwrap();
        let a = susceptibility(&probe, &ens[..1], Collectivity::Collective).unwrap();
        let b = susceptibility(&probe, &ens[1..], Collectivity::Collective).unwrap();
        assert_eq!(both, a + b);
    }

    #[test]
    fn lorentzian_tails() {
        let ens = pair(0.02);
        let chi_at = |dp: f64| {
            let probe = ProbePoint::from_delta_p(dp, ens[0].params.delta);
            susceptibility(&probe, &ens, Collectivity::Collective).unwrap()
        };
        let (c1, c2) = (chi_at(1e9), chi_at(1e10));
        assert!((c1.re / c2.re - 10.0).abs() < 1e-3);
        assert!((c1.im / c2.im - 100.0).abs() < 1e-1);
    }

    #[test]
    fn independent_mode_drops_collective_width() {
        let ens = pair(0.01);
        let d = ens[0].damping(Collectivity::Independent);
        assert_eq!(d.gamma_c, 0.0);
        assert_eq!(d.gamma_tilde, d.gamma_s / 1000.0);
        let c = ens[0].damping(Collectivity::Collective);
        assert!(c.gamma_tilde > d.gamma_tilde);
    }

    #[test]
    fn derivative_at_line_centre() {
        // single ensemble with the cos⁴ line at the probe: slope cos⁴θ·s·(rz/N)/(γ̃²γN)
        let e = SolvedEnsemble::solve(
            EnsembleParams::new(Label::A, 1000, 1.0, 0.3, 0.1 * 2.0 * 5000.0, 5000.0)
                .with_density_prefactor(0.7),
        )
        .unwrap();
        let probe = ProbePoint::from_delta_p(2.0 * e.state.omega_tilde, e.params.delta);
        let d = chi_prime_derivative(&probe, std::slice::from_ref(&e), Collectivity::Collective)
            .unwrap();
        let g = e.damping(Collectivity::Collective).gamma_tilde;
        let c4 = e.state.theta.cos().powi(4);
        let s4 = e.state.theta.sin().powi(4);
        let w = 0.7 * e.state.rz / 1000.0;
        let x = 4.0 * e.state.omega_bar;
        let far = -s4 * (g * g - x * x) / (g * g + x * x).powi(2);
        let want = w * (c4 / (g * g) + far) / 1000.0;
        assert!((d - want).abs() < 1e-12 * want.abs(), "{d} vs {want}");
    }

    #[test]
    fn derivative_matches_resolved_finite_difference() {
        // step well below the narrowest linewidth
        for ratio in [-0.02, 0.0005, 0.001, 0.03] {
            let ens = pair(ratio);
            let h = 1e-4
                * ens
                    .iter()
                    .map(|e| e.damping(Collectivity::Collective).gamma_tilde * 1000.0)
                    .fold(f64::INFINITY, f64::min);
            for off in [-1e4, 1e4] {
                let da = ens[0].params.delta;
                let chi_re = |dp: f64| {
                    susceptibility(
                        &ProbePoint::from_delta_p(dp, da),
                        &ens,
                        Collectivity::Collective,
                    )
                    .unwrap()
                    .re
                };
                let probe = ProbePoint::from_offset(off, da);
                let fd = (chi_re(probe.delta_p + h) - chi_re(probe.delta_p - h)) / (2.0 * h);
                let an = chi_prime_derivative(&probe, &ens, Collectivity::Collective).unwrap();
                assert!(
                    (fd - an).abs() < 1e-6 * an.abs(),
                    "{ratio} {off}: {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn refractive_index_examples() {
        assert_eq!(
            refractive_index(0.0, 3.0),
            RefractiveIndex {
                n: 1.0,
                propagating: true
            }
        );
        assert_eq!(refractive_index(6.3, 10.0).n, 8.0);
        assert_eq!(refractive_index(63.0, 1.0).n, 8.0);
        let r = refractive_index(-2.0, 1.0);
        assert!(!r.propagating && r.n.is_nan());
        let r = refractive_index(-1.0, 1.0);
        assert!(!r.propagating);
        assert_eq!(r.n, 0.0);
    }

    #[test]
    fn group_index_examples() {
        let g = group_index(1.3, 1e8, 0.0, 0.1).unwrap();
        assert_eq!(g.n_g, 1.3);
        // n = 1, ν dn/dν = −2: s·ν·dχ′/(2n) = −2
        let g = group_index(1.0, 1.0, -4.0, 1.0).unwrap();
        assert_eq!(g.n_g, -1.0);
        assert_eq!(g.v_g_over_c, -1.0);
        assert!(matches!(
            group_index(0.0, 1e8, 1.0, 0.1),
            Err(Error::SingularIndex)
        ));
        assert!(group_index(f64::NAN, 1e8, 1.0, 0.1).is_err());
    }

    #[test]
    fn switching_time_examples() {
        let g = SampleGeometry {
            length_l: 5.0,
            area_s: 2.0,
            lambda: 1e-4,
            gamma_phys: 1e7,
            c: 3e10,
        };
        assert_eq!(switching_time(&g, 1000).unwrap(), 1e-9);
        assert_eq!(switching_time(&g, 2000).unwrap(), 0.5e-9);
        let g10 = SampleGeometry {
            length_l: 10.0,
            ..g
        };
        assert_eq!(switching_time(&g10, 1000).unwrap(), 2e-9);
        assert!(switching_time(&g, 0).is_err());
    }

    #[test]
    fn susceptibility_rejects_mismatched_state() {
        let mut ens = pair(0.01);
        ens[0].state = ens[1].state;
        let probe = ProbePoint::from_offset(-1e4, ens[0].params.delta);
        assert!(matches!(
            susceptibility(&probe, &ens, Collectivity::Collective),
            Err(Error::Usage(_))
        ));
        assert!(susceptibility(&probe, &[], Collectivity::Collective).is_err());
    }

    #[test]
    fn sign_changes_of_a_cubic() {
        let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * f64::from(i)).collect();
        let roots = find_sign_changes(&grid, |x| Ok((x - 0.5) * (x + 1.234) * (x - 1.77))).unwrap();
        assert_eq!(roots.len(), 3);
        for (r, want) in roots.iter().zip([-1.234, 0.5, 1.77]) {
            assert!((r - want).abs() < 1e-9, "{r}");
        }
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn gamma_tilde_positive(theta in 0.01f64..1.5608, n in prop::sample::select(vec![1u32, 10, 1000]), r in prop::sample::select(vec![0.0, 0.3, 3.0])) {
            let (s2, c2) = (2.0 * theta).sin_cos();
            let xi = crate::steady_state::xi_from_double_angle(c2, s2, 1.0, r).unwrap();
            let rz = crate::steady_state::dressed_inversion(xi, n);
            let d = damping_rates(theta, 1.0, r, rz, n);
            prop_assert!(d.gamma_c <= 0.0 || c2.abs() < 1e-12);
            prop_assert!(d.gamma_tilde > 0.0);
        }
    }
}
