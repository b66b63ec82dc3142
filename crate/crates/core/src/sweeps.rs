//! Configuration ingestion, parameter sweeps, figure presets and oracle
//! comparison reports.
//!
//! A sweep moves the drive laser: each grid point sets `Δ_a / (2Ω_a)` and
//! shifts `Δ_b` by the same amount, so `Δω = Δ_a − Δ_b` stays as configured.
//! Alternatively the probe offset `(ν − ω_a) / (2Ω_a)` is swept at fixed drive.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    secular_validity_check, DressedSteadyState, EnsembleParams, Label, SampleGeometry,
};
use crate::oracle::{self, build_liouvillian, dressed_inversion_expectation, steady_rho};
use crate::response::{response_sample, susceptibility, Collectivity, ProbePoint, SolvedEnsemble};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    #[serde(rename = "delta_a_over_2omega")]
    DeltaAOver2omega,
    ProbeOffset,
}

impl SweepVariable {
    /// CSV header of the sweep coordinate.
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::DeltaAOver2omega => "delta_a_over_2omega",
            SweepVariable::ProbeOffset => "nu_minus_omega_a_over_2omega",
        }
    }

    fn from_column(s: &str) -> Option<Self> {
        [SweepVariable::DeltaAOver2omega, SweepVariable::ProbeOffset]
            .into_iter()
            .find(|v| v.column() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn grid(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == last {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

/// Probe-spectrum comparison against the master-equation solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub points: usize,
    #[serde(default = "default_spectrum_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    /// Drive strengths `Ω/γ` at which to solve; detuning ratios come from the ensembles.
    pub omega_over_gamma: Vec<f64>,
    /// Relative tolerance on the dressed inversion.
    #[serde(default = "default_inversion_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub include_cross_damping: bool,
    /// Optional cap on the atom number, below the solver's own limit.
    #[serde(default)]
    pub max_atoms: Option<u32>,
    #[serde(default)]
    pub spectrum: Option<SpectrumBlock>,
}

fn default_inversion_tolerance() -> f64 {
    0.05
}

fn default_spectrum_tolerance() -> f64 {
    0.1
}

fn default_one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Ensembles `a` and `b` at the reference drive.
    pub ensembles: Vec<EnsembleParams>,
    pub sweep: SweepRange,
    /// `(ν − ω_a) / (2Ω_a)`, held fixed in a drive sweep.
    #[serde(default)]
    pub probe_offset_over_2omega: f64,
    /// Drive ratio `Δ_a / (2Ω_a)` held fixed in a probe sweep; defaults to the ensemble's own.
    #[serde(default)]
    pub delta_a_over_2omega: Option<f64>,
    #[serde(default)]
    pub geometry: Option<SampleGeometry>,
    /// Probe carrier frequency in units of `γ_ref`, needed for `n_g`.
    #[serde(default)]
    pub nu_over_gamma: Option<f64>,
    /// Scale applied to `χ′` inside the refractive and group indices.
    #[serde(default = "default_one")]
    pub density_prefactor: f64,
    #[serde(default)]
    pub collectivity: Collectivity,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensembles.len() != 2 {
            return Err(config_err(format!(
                "ensembles: expected two entries (a and b), got {}",
                self.ensembles.len()
            )));
        }
        if self.ensembles[0].label != Label::A || self.ensembles[1].label != Label::B {
            return Err(config_err("ensembles: expected labels a then b"));
        }
        for e in &self.ensembles {
            e.validate()?;
        }
        let s = &self.sweep;
        if !(s.lo.is_finite() && s.hi.is_finite() && s.lo < s.hi) {
            return Err(config_err(format!(
                "sweep: need finite lo < hi, got [{}, {}]",
                s.lo, s.hi
            )));
        }
        if s.points < 2 {
            return Err(config_err(format!(
                "sweep.points: need at least 2, got {}",
                s.points
            )));
        }
        if !self.probe_offset_over_2omega.is_finite() {
            return Err(config_err("probe_offset_over_2omega: must be finite"));
        }
        if let Some(d) = self.delta_a_over_2omega {
            if !d.is_finite() {
                return Err(config_err("delta_a_over_2omega: must be finite"));
            }
        }
        if !(self.density_prefactor.is_finite() && self.density_prefactor >= 0.0) {
            return Err(config_err(
                "density_prefactor: must be finite and non-negative",
            ));
        }
        if let Some(nu) = self.nu_over_gamma {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(config_err("nu_over_gamma: must be positive"));
            }
        }
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        if let Some(o) = &self.oracle {
            if o.omega_over_gamma.is_empty()
                || o.omega_over_gamma
                    .iter()
                    .any(|w| !(w.is_finite() && *w > 0.0))
            {
                return Err(config_err(
                    "oracle.omega_over_gamma: need one or more positive values",
                ));
            }
            if !(o.tolerance > 0.0) {
                return Err(config_err("oracle.tolerance: must be positive"));
            }
            if let Some(sp) = &o.spectrum {
                if sp.points < 2 || !(sp.tolerance > 0.0) {
                    return Err(config_err(
                        "oracle.spectrum: need points >= 2 and a positive tolerance",
                    ));
                }
            }
        }
        Ok(())
    }

    fn two_omega_a(&self) -> f64 {
        2.0 * self.ensembles[0].omega
    }

    /// Ensembles and probe at one sweep coordinate.
    fn point(&self, x: f64) -> ([EnsembleParams; 2], ProbePoint) {
        let w = self.two_omega_a();
        let (ratio, offset) = match self.sweep.variable {
            SweepVariable::DeltaAOver2omega => (x, self.probe_offset_over_2omega),
            SweepVariable::ProbeOffset => (
                self.delta_a_over_2omega
                    .unwrap_or(self.ensembles[0].detuning_ratio()),
                x,
            ),
        };
        let shift = ratio * w - self.ensembles[0].delta;
        let [a, b] = [&self.ensembles[0], &self.ensembles[1]].map(|e| EnsembleParams {
            delta: e.delta + shift,
            ..e.clone()
        });
        let a = EnsembleParams {
            delta: ratio * w,
            ..a
        };
        let probe = ProbePoint::from_offset(offset * w, a.delta);
        ([a, b], probe)
    }
}

/// One output row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataRow {
    pub x: f64,
    pub rz_a_over_n: f64,
    pub rz_b_over_n: f64,
    pub chi_prime: f64,
    pub chi_double_prime: f64,
    pub dchi_prime: f64,
    pub n: f64,
    pub n_g: f64,
    pub propagating: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub variable: SweepVariable,
    pub rows: Vec<DataRow>,
}

const VALUE_COLUMNS: [&str; 8] = [
    "rz_a_over_N",
    "rz_b_over_N",
    "chi_prime",
    "chi_double_prime",
    "dchi_prime",
    "n",
    "n_g",
    "propagating",
];

/// Twelve significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

impl Dataset {
    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec![self.variable.column()];
        h.extend(VALUE_COLUMNS);
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec: Vec<String> = [
                r.x,
                r.rz_a_over_n,
                r.rz_b_over_n,
                r.chi_prime,
                r.chi_double_prime,
                r.dchi_prime,
                r.n,
                r.n_g,
            ]
            .iter()
            .map(|&v| format_value(v))
            .collect();
            rec.push(r.propagating.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Numerical(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(input);
        let header = r.headers()?.clone();
        let variable = header
            .get(0)
            .and_then(SweepVariable::from_column)
            .ok_or_else(|| config_err(format!("unrecognized sweep column in header {header:?}")))?;
        if header.len() != 9
            || header
                .iter()
                .skip(1)
                .zip(VALUE_COLUMNS)
                .any(|(a, b)| a != b)
        {
            return Err(config_err(format!("unexpected CSV header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| config_err(format!("column {}: {e}", header[i].to_string())))
            };
            let propagating = rec[8]
                .parse::<bool>()
                .map_err(|e| config_err(format!("column propagating: {e}")))?;
            rows.push(DataRow {
                x: num(0)?,
                rz_a_over_n: num(1)?,
                rz_b_over_n: num(2)?,
                chi_prime: num(3)?,
                chi_double_prime: num(4)?,
                dchi_prime: num(5)?,
                n: num(6)?,
                n_g: num(7)?,
                propagating,
            });
        }
        Ok(Dataset { variable, rows })
    }
}

/// Sweep output: the dataset plus the dressed states behind each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub dataset: Dataset,
    pub states: Vec<[DressedSteadyState; 2]>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let grid = config.sweep.grid();
    let evaluated: Vec<(DataRow, [DressedSteadyState; 2])> = grid
        .par_iter()
        .map(|&x| {
            let ([a, b], probe) = config.point(x);
            let solved = [SolvedEnsemble::solve(a)?, SolvedEnsemble::solve(b)?];
            let s = response_sample(
                &probe,
                &solved,
                config.collectivity,
                config.density_prefactor,
                config.nu_over_gamma,
            )?;
            let per_n = |e: &SolvedEnsemble| e.state.rz / f64::from(e.params.n);
            let row = DataRow {
                x,
                rz_a_over_n: per_n(&solved[0]),
                rz_b_over_n: per_n(&solved[1]),
                chi_prime: s.chi_prime,
                chi_double_prime: s.chi_double_prime,
                dchi_prime: s.dchi_prime,
                n: s.n,
                n_g: s.n_g,
                propagating: s.propagating,
            };
            Ok((row, [solved[0].state, solved[1].state]))
        })
        .collect::<Result<_>>()?;
    let (rows, states) = evaluated.into_iter().unzip();
    Ok(SweepOutput {
        dataset: Dataset {
            variable: config.sweep.variable,
            rows,
        },
        states,
    })
}

/// Sidecar written next to every dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    pub columns: Vec<String>,
    pub config: SweepConfig,
    pub assumptions: Vec<String>,
    pub secular_warnings: Vec<String>,
}

impl Metadata {
    pub fn new(
        config: &SweepConfig,
        figure: Option<&str>,
        series: Option<&str>,
        assumptions: Vec<String>,
    ) -> Self {
        let report = secular_validity_check(&config.ensembles[0], &config.ensembles[1]);
        let mut columns = vec![config.sweep.variable.column().to_string()];
        columns.extend(VALUE_COLUMNS.iter().map(|c| c.to_string()));
        Metadata {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            figure: figure.map(Into::into),
            series: series.map(Into::into),
            columns,
            config: config.clone(),
            assumptions,
            secular_warnings: report.warnings(),
        }
    }
}

/// `path` with its extension replaced by `.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the CSV and its JSON sidecar.
pub fn write_dataset(path: &Path, dataset: &Dataset, meta: &Metadata) -> Result<()> {
    fs::write(path, dataset.to_csv_string()?)?;
    let mut json = serde_json::to_string_pretty(meta)?;
    json.push('\n');
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig2a,
        Figure::Fig2b,
        Figure::Fig3a,
        Figure::Fig3b,
        Figure::Fig3c,
        Figure::Fig3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig3c => "fig3c",
            Figure::Fig3d => "fig3d",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Parameters shared by all presets.
pub const FIG_R_OVER_GAMMA: f64 = 0.3;
pub const FIG_DELTA_OMEGA_OVER_2OMEGA: f64 = 0.1;
pub const FIG_TWO_OMEGA_OVER_N_GAMMA: f64 = 10.0;
pub const FIG_N: u32 = 1000;
pub const FIG2B_PROBE_OFFSET: f64 = 0.35;
/// Carrier frequency used for the `n_g` column of the presets.
pub const FIG_NU_OVER_GAMMA: f64 = 1e8;

/// Configuration for the reference ensemble pair at `Δ_a = 0`.
pub fn preset_config(n: u32, probe_offset: f64, lo: f64, hi: f64, points: usize) -> SweepConfig {
    let gamma = 1.0;
    let omega = 0.5 * FIG_TWO_OMEGA_OVER_N_GAMMA * f64::from(n) * gamma;
    let delta_omega = FIG_DELTA_OMEGA_OVER_2OMEGA * 2.0 * omega;
    let r = FIG_R_OVER_GAMMA * gamma;
    SweepConfig {
        ensembles: vec![
            EnsembleParams::new(Label::A, n, gamma, r, 0.0, omega),
            EnsembleParams::new(Label::B, n, gamma, r, -delta_omega, omega),
        ],
        sweep: SweepRange {
            variable: SweepVariable::DeltaAOver2omega,
            lo,
            hi,
            points,
        },
        probe_offset_over_2omega: probe_offset,
        delta_a_over_2omega: None,
        geometry: None,
        nu_over_gamma: Some(FIG_NU_OVER_GAMMA),
        density_prefactor: 1.0,
        collectivity: Collectivity::Collective,
        oracle: None,
    }
}

/// One dataset of a figure preset.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureSeries {
    /// Suffix for multi-series figures.
    pub series: Option<String>,
    pub config: SweepConfig,
}

pub fn figure_series(fig: Figure) -> Vec<FigureSeries> {
    let single = |offset: f64, lo: f64, hi: f64, points: usize| {
        vec![FigureSeries {
            series: None,
            config: preset_config(FIG_N, offset, lo, hi, points),
        }]
    };
    match fig {
        Figure::Fig2a => [FIG_N, 1]
            .into_iter()
            .map(|n| FigureSeries {
                series: Some(format!("n{n}")),
                config: preset_config(n, FIG2B_PROBE_OFFSET, -0.5, 0.5, 1001),
            })
            .collect(),
        Figure::Fig2b => single(FIG2B_PROBE_OFFSET, -0.5, 0.5, 1001),
        Figure::Fig3a => single(-1.0, -0.05, 0.05, 2001),
        Figure::Fig3b => single(-1.0, -0.0025, 0.0025, 2001),
        Figure::Fig3c => single(1.0, -0.05, 0.05, 2001),
        Figure::Fig3d => single(1.0, -0.0025, 0.0025, 2001),
    }
}

fn figure_assumptions(fig: Figure) -> Vec<String> {
    let mut out = vec![
        "rates in units of gamma_a = gamma_b = 1".to_string(),
        "delta_b = delta_a - delta_omega with delta_omega = 0.1 * 2 Omega".to_string(),
        format!(
            "n_g column evaluated at nu/gamma = {FIG_NU_OVER_GAMMA:e} with density prefactor 1"
        ),
    ];
    out.push(match fig {
        Figure::Fig2a | Figure::Fig2b => "sweep window [-0.5, 0.5] read off the figure axis".into(),
        Figure::Fig3a | Figure::Fig3c => {
            "sweep window [-0.05, 0.05] read off the figure axis".into()
        }
        Figure::Fig3b | Figure::Fig3d => {
            "enlargement window [-0.0025, 0.0025] around the zero-absorption crossing".into()
        }
    });
    if fig == Figure::Fig2a {
        out.push(
            "probe offset 0.35 * 2 Omega shared with fig2b; only rz columns are plotted".into(),
        );
    }
    out
}

/// Computes a figure preset and writes `out` (plus `<stem>_<series>.csv`
/// for multi-series figures). Returns the paths written.
pub fn run_figure(fig: Figure, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for s in figure_series(fig) {
        let path = match &s.series {
            None => out.to_path_buf(),
            Some(suffix) => {
                let stem = out
                    .file_stem()
                    .and_then(|v| v.to_str())
                    .unwrap_or(fig.name());
                out.with_file_name(format!("{stem}_{suffix}.csv"))
            }
        };
        let result = run_sweep(&s.config)?;
        let meta = Metadata::new(
            &s.config,
            Some(fig.name()),
            s.series.as_deref(),
            figure_assumptions(fig),
        );
        write_dataset(&path, &result.dataset, &meta)?;
        written.push(path);
    }
    Ok(written)
}

/// Analytic and master-equation probe spectra on a common grid.
#[derive(Clone, Debug)]
pub struct SpectrumComparison {
    /// `Δ_p / (γ_a N_a)`.
    pub delta_p_tilde: Vec<f64>,
    pub analytic: Vec<Complex64>,
    /// Oracle values divided by `scale`.
    pub oracle: Vec<Complex64>,
    /// Oracle-to-analytic ratio of `χ″` at the strongest analytic absorption.
    pub scale: f64,
    pub reference: usize,
    /// Within one linewidth of a sideband of any ensemble.
    pub near_line_center: Vec<bool>,
    pub skipped: Vec<f64>,
}

impl SpectrumComparison {
    pub fn relative_errors(&self) -> Vec<f64> {
        self.analytic
            .iter()
            .zip(&self.oracle)
            .map(|(a, o)| (o - a).norm() / a.norm())
            .collect()
    }

    /// Largest pointwise relative error away from the sideband centres.
    pub fn max_relative_error(&self) -> f64 {
        self.relative_errors()
            .into_iter()
            .zip(&self.near_line_center)
            .filter(|(_, near)| !**near)
            .map(|(e, _)| e)
            .fold(0.0, f64::max)
    }

    /// Points away from the sideband centres whose relative error exceeds `tol`.
    pub fn failures(&self, tol: f64) -> Vec<(f64, f64)> {
        self.relative_errors()
            .into_iter()
            .enumerate()
            .filter(|&(i, e)| !self.near_line_center[i] && !(e <= tol))
            .map(|(i, e)| (self.delta_p_tilde[i], e))
            .collect()
    }

    /// `max |χ_oracle − χ_analytic| / max |χ_analytic|` over the whole grid.
    pub fn shape_error(&self) -> f64 {
        let peak = self.analytic.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let worst = self
            .analytic
            .iter()
            .zip(&self.oracle)
            .map(|(a, o)| (o - a).norm())
            .fold(0.0, f64::max);
        worst / peak
    }
}

/// Compares the closed-form susceptibility with the regression-theorem
/// spectrum over `Δ̃_p ∈ [−4Ω̄_a, 4Ω̄_a]`.
pub fn compare_spectra(
    ensembles: &[EnsembleParams],
    points: usize,
    include_cross: bool,
    mode: Collectivity,
) -> Result<SpectrumComparison> {
    if points < 2 {
        return Err(Error::Usage(
            "spectrum comparison needs at least 2 points".into(),
        ));
    }
    let solved: Vec<SolvedEnsemble> = ensembles
        .iter()
        .cloned()
        .map(SolvedEnsemble::solve)
        .collect::<Result<_>>()?;
    let a = &solved[0];
    let rate_a = a.params.collective_rate();
    let span = 4.0 * a.state.omega_bar;
    let grid: Vec<f64> = (0..points)
        .map(|i| -span + 2.0 * span * i as f64 / (points - 1) as f64)
        .collect();
    let delta_p: Vec<f64> = grid.iter().map(|x| x * rate_a).collect();

    let model = build_liouvillian(ensembles, include_cross)?;
    let rho = steady_rho(&model)?;
    let spectrum = oracle::regression_spectrum(&model, &rho, &delta_p);

    let mut out = SpectrumComparison {
        delta_p_tilde: Vec::new(),
        analytic: Vec::new(),
        oracle: Vec::new(),
        scale: 1.0,
        reference: 0,
        near_line_center: Vec::new(),
        skipped: spectrum.skipped.iter().map(|d| d / rate_a).collect(),
    };
    for &(dp, chi) in &spectrum.points {
        let probe = ProbePoint::from_delta_p(dp, a.params.delta);
        out.delta_p_tilde.push(dp / rate_a);
        out.analytic.push(susceptibility(&probe, &solved, mode)?);
        out.oracle.push(chi);
        let near = solved.iter().any(|e| {
            let x = dp / e.params.collective_rate();
            let g = e.damping(mode).gamma_tilde;
            let c = 2.0 * e.state.omega_bar;
            (x - c).abs() <= g || (x + c).abs() <= g
        });
        out.near_line_center.push(near);
    }
    if out.analytic.is_empty() {
        return Err(Error::Numerical("every spectrum point was singular".into()));
    }
    let reference = (0..out.analytic.len())
        .max_by(|&i, &j| {
            out.analytic[i]
                .im
                .abs()
                .total_cmp(&out.analytic[j].im.abs())
        })
        .unwrap_or(0);
    let scale = out.oracle[reference].im / out.analytic[reference].im;
    if !(scale.is_finite() && scale != 0.0) {
        return Err(Error::Numerical(format!(
            "cannot fix the global scale (ratio {scale})"
        )));
    }
    for o in &mut out.oracle {
        *o /= scale;
    }
    out.scale = scale;
    out.reference = reference;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InversionPoint {
    pub omega_over_gamma: f64,
    pub label: Label,
    pub analytic: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub omega_over_gamma: f64,
    pub points: usize,
    pub skipped: usize,
    pub scale: f64,
    pub max_rel_error: f64,
    pub shape_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub inversion: Vec<InversionPoint>,
    /// Per ensemble, the inversion error shrinks strictly as the drive grows.
    pub monotone: bool,
    pub spectrum: Option<SpectrumSummary>,
    pub all_pass: bool,
}

fn scaled_ensembles(ensembles: &[EnsembleParams], omega_over_gamma: f64) -> Vec<EnsembleParams> {
    ensembles
        .iter()
        .map(|e| {
            let omega = omega_over_gamma * e.gamma;
            EnsembleParams {
                omega,
                delta: e.detuning_ratio() * 2.0 * omega,
                ..e.clone()
            }
        })
        .collect()
}

/// Solves the master equation at each configured drive strength and reports
/// the dressed inversion (and optionally the probe spectrum) against the
/// closed forms.
pub fn compare_oracle(config: &SweepConfig) -> Result<OracleReport> {
    config.validate()?;
    let block = config
        .oracle
        .as_ref()
        .ok_or_else(|| config_err("oracle: block required for an oracle comparison"))?;
    let cap = block
        .max_atoms
        .unwrap_or(oracle::MAX_ATOMS)
        .min(oracle::MAX_ATOMS);
    for e in &config.ensembles {
        if e.n > cap {
            return Err(Error::Size(format!(
                "ensemble {}: N = {} exceeds the cap {cap}",
                e.label, e.n
            )));
        }
    }

    let mut omegas = block.omega_over_gamma.clone();
    omegas.sort_by(f64::total_cmp);
    let mut inversion = Vec::new();
    for &w in &omegas {
        let ens = scaled_ensembles(&config.ensembles, w);
        let model = build_liouvillian(&ens, block.include_cross_damping)?;
        let rho = steady_rho(&model)?;
        for (idx, e) in ens.iter().enumerate() {
            let analytic = SolvedEnsemble::solve(e.clone())?.state.rz;
            let got = dressed_inversion_expectation(&model, &rho, idx)?;
            let abs_error = (got - analytic).abs();
            let rel_error = abs_error / analytic.abs();
            inversion.push(InversionPoint {
                omega_over_gamma: w,
                label: e.label,
                analytic,
                oracle: got,
                abs_error,
                rel_error,
                pass: rel_error <= block.tolerance,
            });
        }
    }
    let monotone = config.ensembles.iter().all(|e| {
        let errs: Vec<f64> = inversion
            .iter()
            .filter(|p| p.label == e.label)
            .map(|p| p.abs_error)
            .collect();
        errs.windows(2).all(|w| w[1] < w[0])
    });

    let spectrum = match &block.spectrum {
        None => None,
        Some(sp) => {
            let w = omegas[omegas.len() - 1];
            let ens = scaled_ensembles(&config.ensembles, w);
            let cmp = compare_spectra(
                &ens,
                sp.points,
                block.include_cross_damping,
                config.collectivity,
            )?;
            let max_rel_error = cmp.max_relative_error();
            Some(SpectrumSummary {
                omega_over_gamma: w,
                points: cmp.analytic.len(),
                skipped: cmp.skipped.len(),
                scale: cmp.scale,
                max_rel_error,
                shape_error: cmp.shape_error(),
                tolerance: sp.tolerance,
                pass: max_rel_error <= sp.tolerance,
            })
        }
    };
    let all_pass = inversion.iter().all(|p| p.pass) && spectrum.as_ref().is_none_or(|s| s.pass);
    Ok(OracleReport {
        inversion,
        monotone,
        spectrum,
        all_pass,
    })
}
