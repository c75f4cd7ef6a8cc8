//! Parameter sweeps, the figure presets, and the idler-amplitude optimizer.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuations::CoefficientMode;
use crate::metrics::{evaluate_point, PointEvaluation, TransferMetrics};
use crate::model::{validate, validate_drive, AnalyzingFrequency, CavityParams, DriveParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// `β₂/ε_th`
    Beta2Norm,
    /// `β₃/ε_th`
    Beta3Norm,
    /// `Ω = ωτ/γ`
    OmegaNorm,
    /// `ρ = ρ₃`, swept together.
    RhoBoth,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Beta2Norm => "beta2_norm",
            SweepVariable::Beta3Norm => "beta3_norm",
            SweepVariable::OmegaNorm => "omega_norm",
            SweepVariable::RhoBoth => "rho_both",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "beta2_norm" => Ok(SweepVariable::Beta2Norm),
            "beta3_norm" => Ok(SweepVariable::Beta3Norm),
            "omega_norm" => Ok(SweepVariable::OmegaNorm),
            "rho_both" => Ok(SweepVariable::RhoBoth),
            other => Err(format!(
                "unknown sweep variable `{other}` (expected beta2_norm, beta3_norm, omega_norm or rho_both)"
            )),
        }
    }
}

/// Linearly spaced grid `start..=stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepRange {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        SweepRange { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.start + span * k as f64 / last)
            .collect()
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

/// Parses `start:stop:count`.
impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(format!("range `{s}` must have the form start:stop:count"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("range `{s}`: {e}"))
        };
        Ok(SweepRange {
            start: num(start)?,
            stop: num(stop)?,
            count: count
                .trim()
                .parse()
                .map_err(|e| format!("range `{s}`: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub range: SweepRange,
    /// Cavity parameters; `rho` and `rho3` are overridden when sweeping `rho_both`.
    pub params: CavityParams,
    pub beta2_norm: f64,
    pub beta3_norm: f64,
    pub omega_norm: f64,
    pub coefficient_mode: CoefficientMode,
    /// Choices not fixed by the physical setup, carried into output metadata.
    pub assumptions: Vec<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.range.count < 2 {
            problems.push(format!("point_count ≥ 2 (got {})", self.range.count));
        }
        let ordered = self.range.start <= self.range.stop;
        if !ordered {
            problems.push(format!(
                "start ≤ stop (got {} > {})",
                self.range.start, self.range.stop
            ));
        }
        let swept_nonnegative = match self.variable {
            SweepVariable::OmegaNorm => true,
            _ => self.range.start >= 0.0,
        };
        if !swept_nonnegative {
            problems.push(format!("swept {} ≥ 0", self.variable));
        }
        let report = validate(&self.params);
        problems.extend(report.violations.iter().map(|v| v.to_string()));
        let drive = validate_drive(&DriveParams::new(self.beta2_norm, self.beta3_norm));
        problems.extend(drive.violations.iter().map(|v| v.to_string()));
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Threshold used to normalize drive amplitudes. Taken from the fixed parameters,
    /// so a loss sweep holds the physical drive constant.
    pub fn threshold(&self) -> f64 {
        self.params.threshold()
    }

    /// Fully resolved inputs at one grid value.
    pub fn point(&self, value: f64) -> (CavityParams, DriveParams, AnalyzingFrequency) {
        let mut params = self.params;
        let (mut b2n, mut b3n, mut wn) = (self.beta2_norm, self.beta3_norm, self.omega_norm);
        match self.variable {
            SweepVariable::Beta2Norm => b2n = value,
            SweepVariable::Beta3Norm => b3n = value,
            SweepVariable::OmegaNorm => wn = value,
            SweepVariable::RhoBoth => {
                params.rho = value;
                params.rho3 = value;
            }
        }
        let eps = self.threshold();
        let drive = DriveParams::new(b2n * eps, b3n * eps);
        (
            params,
            drive,
            AnalyzingFrequency::from_normalized(wn, &params),
        )
    }
}

/// One grid point. Solver failures leave the numeric cells empty and set `error`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept: f64,
    pub beta2_norm: f64,
    pub beta3_norm: f64,
    pub omega_norm: f64,
    pub rho: f64,
    pub rho3: f64,
    pub eta: Option<f64>,
    pub t_x: Option<f64>,
    pub t_y: Option<f64>,
    pub var_x: Option<f64>,
    pub var_y: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub alpha3: Option<f64>,
    pub residual: Option<f64>,
    pub stable: Option<bool>,
    pub defined: bool,
    pub error: Option<&'static str>,
}

impl SweepRow {
    fn new(spec: &SweepSpec, value: f64, outcome: Result<PointEvaluation>) -> Self {
        let (params, drive, freq) = spec.point(value);
        let eps = spec.threshold();
        let mut row = SweepRow {
            swept: value,
            beta2_norm: drive.beta2 / eps,
            beta3_norm: drive.beta3 / eps,
            omega_norm: freq.normalized(&params),
            rho: params.rho,
            rho3: params.rho3,
            eta: None,
            t_x: None,
            t_y: None,
            var_x: None,
            var_y: None,
            alpha1: None,
            alpha2: None,
            alpha3: None,
            residual: None,
            stable: None,
            defined: false,
            error: None,
        };
        // Report the grid value itself rather than a round-tripped division.
        match spec.variable {
            SweepVariable::Beta2Norm => row.beta2_norm = value,
            SweepVariable::Beta3Norm => row.beta3_norm = value,
            SweepVariable::OmegaNorm => row.omega_norm = value,
            SweepVariable::RhoBoth => {}
        }
        if spec.variable != SweepVariable::Beta2Norm {
            row.beta2_norm = spec.beta2_norm;
        }
        if spec.variable != SweepVariable::Beta3Norm {
            row.beta3_norm = spec.beta3_norm;
        }
        if spec.variable != SweepVariable::OmegaNorm {
            row.omega_norm = spec.omega_norm;
        }
        match outcome {
            Ok(e) => {
                let m = e.metrics;
                row.eta = m.eta;
                row.t_x = m.t_x;
                row.t_y = m.t_y;
                row.var_x = Some(m.var_x);
                row.var_y = Some(m.var_y);
                row.alpha1 = Some(e.steady_state.alpha1);
                row.alpha2 = Some(e.steady_state.alpha2);
                row.alpha3 = Some(e.steady_state.alpha3);
                row.residual = Some(e.steady_state.residual);
                row.stable = Some(m.stable);
                row.defined = m.defined;
                if !m.defined {
                    row.error = Some(Error::UndefinedMetric.code());
                }
            }
            Err(err) => row.error = Some(err.code()),
        }
        row
    }
}

pub fn evaluate_at(spec: &SweepSpec, value: f64) -> Result<PointEvaluation> {
    let (params, drive, freq) = spec.point(value);
    evaluate_point(&params, &drive, freq, spec.coefficient_mode)
}

/// Evaluates every grid point. Points are computed in parallel; rows come back in grid
/// order and are bit-identical between runs.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .range
        .values()
        .into_par_iter()
        .map(|v| SweepRow::new(spec, v, evaluate_at(spec, v)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigurePreset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3,
    Fig4,
    Fig5,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 7] = [
        FigurePreset::Fig2a,
        FigurePreset::Fig2b,
        FigurePreset::Fig2c,
        FigurePreset::Fig2d,
        FigurePreset::Fig3,
        FigurePreset::Fig4,
        FigurePreset::Fig5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigurePreset::Fig2a => "fig2a",
            FigurePreset::Fig2b => "fig2b",
            FigurePreset::Fig2c => "fig2c",
            FigurePreset::Fig2d => "fig2d",
            FigurePreset::Fig3 => "fig3",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
        }
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigurePreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FigurePreset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown figure preset `{s}`"))
    }
}

/// Optimal idler injection used by the pump, frequency and loss studies.
pub const OPERATING_BETA2_NORM: f64 = 2.2;
/// Far-below-threshold pump used by the frequency and loss studies.
pub const OPERATING_BETA3_NORM: f64 = 0.1;

pub fn figure_preset(preset: FigurePreset) -> SweepSpec {
    let base = SweepSpec {
        variable: SweepVariable::Beta2Norm,
        range: SweepRange::new(0.0, 6.0, 301),
        params: CavityParams::reference(),
        beta2_norm: OPERATING_BETA2_NORM,
        beta3_norm: OPERATING_BETA3_NORM,
        omega_norm: 0.0,
        coefficient_mode: CoefficientMode::default(),
        assumptions: Vec::new(),
    };
    let idler_sweep = |beta3_norm: f64| SweepSpec {
        beta3_norm,
        assumptions: vec!["beta2_norm range 0..6 with 301 points (assumed)".into()],
        ..base.clone()
    };
    match preset {
        FigurePreset::Fig2a => idler_sweep(0.1),
        FigurePreset::Fig2b => idler_sweep(0.5),
        FigurePreset::Fig2c => idler_sweep(0.95),
        FigurePreset::Fig2d => idler_sweep(3.0),
        FigurePreset::Fig3 => SweepSpec {
            variable: SweepVariable::Beta3Norm,
            range: SweepRange::new(0.01, 1.2, 120),
            assumptions: vec!["beta3_norm range 0.01..1.2 with 120 points (assumed)".into()],
            ..base
        },
        FigurePreset::Fig4 => SweepSpec {
            variable: SweepVariable::OmegaNorm,
            range: SweepRange::new(0.0, 5.0, 101),
            assumptions: vec![
                "beta2_norm = 2.2 (assumed)".into(),
                "omega_norm range 0..5 with 101 points (assumed)".into(),
            ],
            ..base
        },
        FigurePreset::Fig5 => SweepSpec {
            variable: SweepVariable::RhoBoth,
            range: SweepRange::new(0.0, 0.05, 51),
            assumptions: vec![
                "rho = rho3 range 0..0.05 with 51 points (assumed)".into(),
                "drive normalized by the lossless threshold and held fixed while rho varies".into(),
            ],
            ..base
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdlerOptimum {
    pub beta2_star: f64,
    pub beta2_star_norm: f64,
    pub metrics: TransferMetrics,
}

/// Default coarse-grid size of [`optimize_idler`].
pub const OPTIMIZER_GRID_POINTS: usize = 400;

/// Maximizes `min(η, T_X, T_Y)` over `β₂ ∈ (0, 10ε_th]`.
pub fn optimize_idler(
    params: &CavityParams,
    beta3: f64,
    freq: AnalyzingFrequency,
    mode: CoefficientMode,
) -> Result<IdlerOptimum> {
    optimize_idler_on_grid(params, beta3, freq, mode, OPTIMIZER_GRID_POINTS)
}

/// [`optimize_idler`] with an explicit coarse grid: `grid_points` uniform samples,
/// then golden-section refinement between the neighbours of the best sample down to
/// `|Δβ₂| ≤ 10⁻⁴ ε_th`. Unstable or failed points never win.
pub fn optimize_idler_on_grid(
    params: &CavityParams,
    beta3: f64,
    freq: AnalyzingFrequency,
    mode: CoefficientMode,
    grid_points: usize,
) -> Result<IdlerOptimum> {
    let report = validate(params);
    if !report.is_ok() {
        return Err(Error::InvalidParams(report.to_string()));
    }
    let driven = beta3 > 0.0;
    if !driven || grid_points < 2 {
        return Err(Error::InvalidParams(format!(
            "need beta3 > 0 and at least two grid points (got {beta3}, {grid_points})"
        )));
    }
    let eps = params.threshold();
    let upper = 10.0 * eps;
    let objective = |beta2: f64| -> Option<(f64, TransferMetrics)> {
        let drive = DriveParams::new(beta2, beta3);
        let e = evaluate_point(params, &drive, freq, mode).ok()?;
        if !e.metrics.stable {
            return None;
        }
        Some((e.metrics.worst()?, e.metrics))
    };
    let score = |beta2: f64| objective(beta2).map_or(f64::NEG_INFINITY, |(f, _)| f);

    let grid: Vec<f64> = (1..=grid_points)
        .map(|k| upper * k as f64 / grid_points as f64)
        .collect();
    let scores: Vec<f64> = grid.par_iter().map(|&b| score(b)).collect();
    let (best, best_score) =
        scores
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
            );
    if best_score == f64::NEG_INFINITY {
        return Err(Error::NoStablePoint);
    }

    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_max(score, lo, hi, 1e-4 * eps);
    let (beta2_star, metrics) = [refined, grid[best]]
        .into_iter()
        .filter_map(|b| objective(b).map(|(f, m)| (b, f, m)))
        .fold(None::<(f64, f64, TransferMetrics)>, |acc, cand| match acc {
            Some(a) if a.1 >= cand.1 => Some(a),
            _ => Some(cand),
        })
        .map(|(b, _, m)| (b, m))
        .ok_or(Error::NoStablePoint)?;
    Ok(IdlerOptimum {
        beta2_star,
        beta2_star_norm: beta2_star / eps,
        metrics,
    })
}

/// Golden-section search for a maximum of `f` on `[a, b]`, stopping when the bracket
/// is narrower than `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}
