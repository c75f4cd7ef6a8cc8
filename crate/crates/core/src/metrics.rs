//! Conversion efficiency and quadrature noise figures of the pump-to-signal transfer.
//!
//! The pump input has mean quadratures `⟨X₃ⁱⁿ⟩ = ⟨Y₃ⁱⁿ⟩ = β₃/√2` and unit variance;
//! the signal output has `⟨X₁ᵒᵘᵗ⟩ = ⟨Y₁ᵒᵘᵗ⟩ = √(2γ)ᾱ₁/√2`. The noise figure is the
//! ratio of output to input signal-to-noise ratios, so `T_q · δ²Q₁ᵒᵘᵗ = η`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuations::{
    closed_form_coefficients, output_variances_closed_form, CoefficientMode, OutputVariances,
};
use crate::model::{AnalyzingFrequency, CavityParams, DriveParams};
use crate::steady_state::{solve_steady_state, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMetrics {
    /// `None` when the pump input is zero.
    pub eta: Option<f64>,
    pub t_x: Option<f64>,
    pub t_y: Option<f64>,
    pub var_x: f64,
    pub var_y: f64,
    pub stable: bool,
    pub defined: bool,
}

impl TransferMetrics {
    /// `min(η, T_X, T_Y)`, the figure of merit for faithful transfer.
    pub fn worst(&self) -> Option<f64> {
        Some(self.eta?.min(self.t_x?).min(self.t_y?))
    }
}

/// Output signal intensity over input pump intensity, `2γᾱ₁²/β₃²`.
pub fn conversion_efficiency(
    ss: &SteadyState,
    drive: &DriveParams,
    params: &CavityParams,
) -> Result<f64> {
    if drive.beta3 == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    let out = (2.0 * params.gamma).sqrt() * ss.alpha1;
    Ok(out * out / (drive.beta3 * drive.beta3))
}

/// `(T_X, T_Y)` from the signal amplitude and the output variances.
pub fn noise_figures(
    ss: &SteadyState,
    drive: &DriveParams,
    params: &CavityParams,
    variances: &OutputVariances,
) -> Result<(f64, f64)> {
    if drive.beta3 == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    let signal = 2.0 * params.gamma * ss.alpha1 * ss.alpha1;
    let pump = drive.beta3 * drive.beta3;
    Ok((
        signal / (pump * variances.var_x),
        signal / (pump * variances.var_y),
    ))
}

pub fn transfer_metrics(
    ss: &SteadyState,
    drive: &DriveParams,
    params: &CavityParams,
    variances: &OutputVariances,
) -> TransferMetrics {
    let eta = conversion_efficiency(ss, drive, params).ok();
    let figures = noise_figures(ss, drive, params, variances).ok();
    TransferMetrics {
        eta,
        t_x: figures.map(|f| f.0),
        t_y: figures.map(|f| f.1),
        var_x: variances.var_x,
        var_y: variances.var_y,
        stable: ss.stable,
        defined: eta.is_some(),
    }
}

/// Noiseless, lossless transfer: unit output variances and unit efficiency within `tol`.
pub fn is_ideal_transfer(metrics: &TransferMetrics, tol: f64) -> bool {
    let Some(eta) = metrics.eta else {
        return false;
    };
    (metrics.var_x - 1.0).abs() <= tol
        && (metrics.var_y - 1.0).abs() <= tol
        && (eta - 1.0).abs() <= tol
}

/// Everything computed at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEvaluation {
    pub steady_state: SteadyState,
    pub variances: OutputVariances,
    pub metrics: TransferMetrics,
}

/// Steady state, closed-form variances in `mode`, and metrics.
pub fn evaluate_point(
    params: &CavityParams,
    drive: &DriveParams,
    freq: AnalyzingFrequency,
    mode: CoefficientMode,
) -> Result<PointEvaluation> {
    let steady_state = solve_steady_state(params, drive)?;
    let qt = closed_form_coefficients(&steady_state, params, freq, mode);
    let variances = output_variances_closed_form(&qt)?;
    let metrics = transfer_metrics(&steady_state, drive, params, &variances);
    Ok(PointEvaluation {
        steady_state,
        variances,
        metrics,
    })
}
