//! Brute-force reference model: the collective master equation in the
//! symmetric Dicke basis, solved exactly as a dense Liouvillian.
//!
//! The master equation is built term by term as written,
//!
//! ```text
//! ρ̇ = −i[H₀, ρ] − Σ_{ij} ( √(γ_iγ_j) [S₊⁽ⁱ⁾, S₋⁽ʲ⁾ρ] + √(r_ir_j) [S_z⁽ⁱ⁾, S_z⁽ʲ⁾ρ] ) + h.c.
//! H₀ = Σ_j Δ_j S_z⁽ʲ⁾ + Ω_j (S₊⁽ʲ⁾ + S₋⁽ʲ⁾)
//! ```
//!
//! with the `i ≠ j` terms switched on only when cross-damping is requested.
//! Density matrices are vectorized row-major, `vec(ρ)[iD + j] = ρ_ij`, so
//! `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.
//!
//! Probe spectra follow from the quantum regression theorem:
//! `∫₀^∞ e^{iΔ_pτ} ⟨[S₋(τ), S₊]⟩ dτ = −Tr[S₋ (L + iΔ_p)⁻¹ (S₊ρ − ρS₊)]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{mixing_angle, EnsembleParams};

type CMatrix = DMatrix<Complex64>;

/// Largest atom number per ensemble.
pub const MAX_ATOMS: u32 = 12;
/// Largest Liouvillian row count `D²` accepted for the dense solve.
pub const MAX_LIOUVILLE_ROWS: usize = 1600;
/// Relative singular-value threshold for the null-space rank decision.
pub const NULL_SPACE_RTOL: f64 = 1e-9;
/// Eigenvalues of the steady state may dip this far below zero.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Spin-`N/2` ladder operators in the basis `|S, m⟩`, `m = S, S−1, …, −S`.
///
/// Index 0 is the fully excited state, so for `N = 1` the ordering is
/// `{|2⟩, |1⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveOperators {
    pub dim: usize,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
    pub s_z: CMatrix,
}

pub fn build_operators(n: u32) -> Result<CollectiveOperators> {
    if n == 0 || n > MAX_ATOMS {
        return Err(Error::Size(format!(
            "atom number {n} outside 1..={MAX_ATOMS}"
        )));
    }
    let dim = n as usize + 1;
    let s = 0.5 * f64::from(n);
    let m = |k: usize| s - k as f64;
    let mut s_plus = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        // S₊|S, m⟩ = √(S(S+1) − m(m+1)) |S, m+1⟩
        let mk = m(k);
        s_plus[(k - 1, k)] = Complex64::from((s * (s + 1.0) - mk * (mk + 1.0)).sqrt());
    }
    let s_minus = s_plus.adjoint();
    let s_z = CMatrix::from_diagonal(&DVector::from_fn(dim, |k, _| Complex64::from(m(k))));
    Ok(CollectiveOperators {
        dim,
        s_plus,
        s_minus,
        s_z,
    })
}

/// Dense Liouvillian of one or two driven ensembles.
#[derive(Clone, Debug)]
pub struct OracleModel {
    pub ensembles: Vec<EnsembleParams>,
    pub include_cross_damping: bool,
    /// Joint Hilbert-space dimension `Π (N_i + 1)`.
    pub dim: usize,
    pub hamiltonian: CMatrix,
    /// `vec(ρ̇) = L vec(ρ)`.
    pub liouvillian: CMatrix,
    joint: Vec<CollectiveOperators>,
}

impl OracleModel {
    /// Collective operators of ensemble `idx` embedded in the joint space.
    pub fn operators(&self, idx: usize) -> &CollectiveOperators {
        &self.joint[idx]
    }

    /// Applies the Liouvillian to a density matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec(&(&self.liouvillian * vectorize(rho)), self.dim)
    }
}

fn validate_oracle_params(p: &EnsembleParams) -> Result<()> {
    if p.n == 0 || p.n > MAX_ATOMS {
        return Err(Error::Size(format!(
            "ensemble {}: atom number {} outside 1..={MAX_ATOMS}",
            p.label, p.n
        )));
    }
    for (field, v) in [("gamma", p.gamma), ("r", p.r), ("omega", p.omega)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param(
                field,
                format!("must be finite and non-negative, got {v}"),
            ));
        }
    }
    if !p.delta.is_finite() || !p.density_prefactor.is_finite() {
        return Err(Error::param("delta", "must be finite"));
    }
    Ok(())
}

fn kron_identity(op: &CMatrix, before: usize, after: usize) -> CMatrix {
    let d = op.nrows();
    let dim = before * d * after;
    let mut out = CMatrix::zeros(dim, dim);
    for b in 0..before {
        for i in 0..d {
            for k in 0..d {
                let v = op[(i, k)];
                if v == ZERO {
                    continue;
                }
                for a in 0..after {
                    out[((b * d + i) * after + a, (b * d + k) * after + a)] = v;
                }
            }
        }
    }
    out
}

/// `L += coeff · (A ⊗ Bᵀ)`, i.e. the superoperator of `ρ ↦ coeff · AρB`.
fn add_sandwich(l: &mut CMatrix, coeff: Complex64, a: &CMatrix, b: &CMatrix) {
    let d = a.nrows();
    let a_nz: Vec<(usize, usize, Complex64)> = nonzeros(a);
    let b_nz: Vec<(usize, usize, Complex64)> = nonzeros(b);
    for &(i, k, av) in &a_nz {
        for &(lr, j, bv) in &b_nz {
            // (AρB)_ij = Σ_kl A_ik ρ_kl B_lj
            l[(i * d + j, k * d + lr)] += coeff * av * bv;
        }
    }
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Adds `−c ([A, Bρ] + h.c.)`.
fn add_damping_pair(l: &mut CMatrix, c: f64, a: &CMatrix, b: &CMatrix, id: &CMatrix) {
    if c == 0.0 {
        return;
    }
    let coeff = Complex64::from(-c);
    let ad = a.adjoint();
    let bd = b.adjoint();
    // [A, Bρ] = ABρ − BρA ; its adjoint is ρB†A† − A†ρB†
    add_sandwich(l, coeff, &(a * b), id);
    add_sandwich(l, -coeff, b, a);
    add_sandwich(l, coeff, id, &(&bd * &ad));
    add_sandwich(l, -coeff, &ad, &bd);
}

/// Builds the master-equation superoperator for one or two ensembles.
pub fn build_liouvillian(ensembles: &[EnsembleParams], include_cross: bool) -> Result<OracleModel> {
    if ensembles.is_empty() || ensembles.len() > 2 {
        return Err(Error::Usage(format!(
            "oracle takes one or two ensembles, got {}",
            ensembles.len()
        )));
    }
    for p in ensembles {
        validate_oracle_params(p)?;
    }
    let local: Vec<CollectiveOperators> = ensembles
        .iter()
        .map(|p| build_operators(p.n))
        .collect::<Result<_>>()?;
    let dims: Vec<usize> = local.iter().map(|o| o.dim).collect();
    let dim: usize = dims.iter().product();
    let rows = dim * dim;
    if rows > MAX_LIOUVILLE_ROWS {
        return Err(Error::DimensionOverflow {
            rows,
            limit: MAX_LIOUVILLE_ROWS,
        });
    }

    let joint: Vec<CollectiveOperators> = local
        .iter()
        .enumerate()
        .map(|(idx, o)| {
            let before: usize = dims[..idx].iter().product();
            let after: usize = dims[idx + 1..].iter().product();
            CollectiveOperators {
                dim,
                s_plus: kron_identity(&o.s_plus, before, after),
                s_minus: kron_identity(&o.s_minus, before, after),
                s_z: kron_identity(&o.s_z, before, after),
            }
        })
        .collect();

    let mut h = CMatrix::zeros(dim, dim);
    for (p, o) in ensembles.iter().zip(&joint) {
        h +=
            &o.s_z * Complex64::from(p.delta) + (&o.s_plus + &o.s_minus) * Complex64::from(p.omega);
    }

    let id = CMatrix::identity(dim, dim);
    let mut l = CMatrix::zeros(rows, rows);
    // −i[H, ρ] = −iHρ + iρH
    add_sandwich(&mut l, -I, &h, &id);
    add_sandwich(&mut l, I, &id, &h);
    for (i, (pi, oi)) in ensembles.iter().zip(&joint).enumerate() {
        for (j, (pj, oj)) in ensembles.iter().zip(&joint).enumerate() {
            if i != j && !include_cross {
                continue;
            }
            add_damping_pair(
                &mut l,
                (pi.gamma * pj.gamma).sqrt(),
                &oi.s_plus,
                &oj.s_minus,
                &id,
            );
            add_damping_pair(&mut l, (pi.r * pj.r).sqrt(), &oi.s_z, &oj.s_z, &id);
        }
    }

    Ok(OracleModel {
        ensembles: ensembles.to_vec(),
        include_cross_damping: include_cross,
        dim,
        hamiltonian: h,
        liouvillian: l,
        joint,
    })
}

pub fn vectorize(rho: &CMatrix) -> DVector<Complex64> {
    let d = rho.nrows();
    DVector::from_fn(d * d, |k, _| rho[(k / d, k % d)])
}

pub fn unvec(v: &DVector<Complex64>, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| v[i * dim + j])
}

/// Steady state from the one-dimensional null space of the Liouvillian.
pub fn steady_rho(model: &OracleModel) -> Result<CMatrix> {
    let d = model.dim;
    let svd = model.liouvillian.clone().svd(false, true);
    let sv = &svd.singular_values;
    let largest = sv.max();
    let threshold = NULL_SPACE_RTOL * largest;
    let null_dim = sv.iter().filter(|&&s| s <= threshold).count();
    if null_dim != 1 {
        return Err(Error::DegenerateSteadyState(null_dim));
    }
    let k = sv.imin();
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    // L v = 0 for v = (row k of V†)†
    let v = DVector::from_fn(d * d, |i, _| v_t[(k, i)].conj());
    let mut rho = unvec(&v, d);
    let tr = rho.trace();
    if tr.norm() == 0.0 {
        return Err(Error::Numerical("null vector has zero trace".into()));
    }
    rho /= tr;
    let rho = (&rho + rho.adjoint()) * Complex64::from(0.5);
    let eig = SymmetricEigen::new(rho.clone());
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL {
        return Err(Error::Numerical(format!(
            "steady state has negative eigenvalue {min}"
        )));
    }
    Ok(rho)
}

pub fn expectation(rho: &CMatrix, op: &CMatrix) -> Complex64 {
    (op * rho).trace()
}

/// `⟨R_z⟩` of ensemble `idx`, with `R_z = 2cos2θ S_z + sin2θ (S₊ + S₋)` the
/// dressed inversion for the same mixing-angle convention as the analytic model.
pub fn dressed_inversion_expectation(
    model: &OracleModel,
    rho: &CMatrix,
    idx: usize,
) -> Result<f64> {
    let p = model
        .ensembles
        .get(idx)
        .ok_or_else(|| Error::Usage(format!("no ensemble {idx}")))?;
    let theta = mixing_angle(p.delta, p.omega)?;
    let (s2, c2) = (2.0 * theta).sin_cos();
    let o = &model.joint[idx];
    let rz = &o.s_z * Complex64::from(2.0 * c2) + (&o.s_plus + &o.s_minus) * Complex64::from(s2);
    Ok(expectation(rho, &rz).re)
}

/// Regression-theorem probe spectrum.
#[derive(Clone, Debug, Default)]
pub struct OracleSpectrum {
    /// `(Δ_p, χ)` pairs, in the susceptibility units of the analytic model.
    pub points: Vec<(f64, Complex64)>,
    /// Grid points where `L + iΔ_p` could not be inverted.
    pub skipped: Vec<f64>,
}

/// `χ(Δ_p) = Σ_j s_j γ_j · i ∫₀^∞ e^{iΔ_pτ} ⟨[S₋⁽ʲ⁾(τ), S₊⁽ʲ⁾]⟩ dτ`.
///
/// The prefactor `s_j γ_j` matches the secular closed form term by term, so
/// both are expressed in units of the density prefactor.
pub fn regression_spectrum(model: &OracleModel, rho: &CMatrix, grid: &[f64]) -> OracleSpectrum {
    let d = model.dim;
    let sources: Vec<DVector<Complex64>> = model
        .joint
        .iter()
        .map(|o| vectorize(&(&o.s_plus * rho - rho * &o.s_plus)))
        .collect();
    let weights: Vec<Complex64> = model
        .ensembles
        .iter()
        .map(|p| I * (p.density_prefactor * p.gamma))
        .collect();

    // The sources are traceless, so shifting the steady-state projector
    // |ρ⟩⟨⟨1| leaves their resolvent unchanged and lifts the zero mode at Δ_p = 0.
    let kappa = 1.0
        + (0..d * d)
            .map(|k| model.liouvillian[(k, k)].norm())
            .fold(0.0, f64::max);
    let mut shifted = model.liouvillian.clone();
    for a in 0..d * d {
        let v = rho[(a / d, a % d)];
        if v != ZERO {
            for i in 0..d {
                shifted[(a, i * d + i)] -= kappa * v;
            }
        }
    }

    let results: Vec<(f64, Option<Complex64>)> = grid
        .par_iter()
        .map(|&dp| {
            let mut a = shifted.clone();
            for k in 0..d * d {
                a[(k, k)] += I * dp;
            }
            let lu = a.lu();
            let mut chi = ZERO;
            for ((o, x), w) in model.joint.iter().zip(&sources).zip(&weights) {
                let Some(y) = lu.solve(x) else {
                    return (dp, None);
                };
                // Tr[S₋ Y] with Y = −unvec(y)
                let mut tr = ZERO;
                for (i, j, v) in nonzeros(&o.s_minus) {
                    tr -= v * y[j * d + i];
                }
                chi += w * tr;
            }
            if chi.re.is_finite() && chi.im.is_finite() {
                (dp, Some(chi))
            } else {
                (dp, None)
            }
        })
        .collect();

    let mut out = OracleSpectrum::default();
    for (dp, chi) in results {
        match chi {
            Some(c) => out.points.push((dp, c)),
            None => out.skipped.push(dp),
        }
    }
    out
}
