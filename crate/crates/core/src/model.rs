//! Physical parameters of the three-mode cavity and the fixed conventions of the model.
//!
//! All rates are dimensionless per-roundtrip quantities. The roundtrip time only ever
//! appears in the product `ωτ`, which is carried by [`AnalyzingFrequency`].
//!
//! Conventions fixed here and used everywhere else:
//! - input phases `θ₁₀ = θ₂₀ = 0`, `θ₃₀ = π/4`, signal input in vacuum;
//! - quadratures `X = (a + a†)/2`, `Y = (a − a†)/(2i)`;
//! - every input port carries unit quadrature variance (vacuum = 1).

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Input phase of the signal mode.
pub const SIGNAL_INPUT_PHASE: f64 = 0.0;
/// Input phase of the idler mode.
pub const IDLER_INPUT_PHASE: f64 = 0.0;
/// Input phase of the pump mode.
pub const PUMP_INPUT_PHASE: f64 = FRAC_PI_4;

/// Intracavity steady-state phases `(θ₁, θ₂, θ₃)`; `θ₁ = θ₃ − θ₂ = θ₃₀ − θ₂₀`.
pub const STEADY_STATE_PHASES: (f64, f64, f64) = (FRAC_PI_4, 0.0, FRAC_PI_4);

/// Variance of a vacuum (or coherent) input quadrature.
pub const VACUUM_VARIANCE: f64 = 1.0;

/// Formula used for the oscillation threshold `ε_th`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdConvention {
    /// `(γ₃+ρ₃)(γ+ρ)/χ`. Under this normalization the reference cavity has its best
    /// transfer at `β₂ = 2.2ε_th`, so it is the default.
    #[default]
    #[serde(rename = "printed")]
    AsPrinted,
    /// `(γ₃+ρ₃)(γ+ρ)/(χ√(2γ₃))`: the input pump amplitude at which the undriven-idler
    /// steady state reaches `χᾱ₃ = γ+ρ`.
    Derived,
}

impl ThresholdConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdConvention::AsPrinted => "printed",
            ThresholdConvention::Derived => "derived",
        }
    }
}

impl fmt::Display for ThresholdConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Static configuration of the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Coupling-mirror loss of signal and idler (`γ₁ = γ₂ = γ`).
    pub gamma: f64,
    /// Coupling-mirror loss of the pump.
    pub gamma3: f64,
    /// Extra intracavity loss of signal and idler.
    pub rho: f64,
    /// Extra intracavity loss of the pump.
    pub rho3: f64,
    /// Effective nonlinear coupling.
    pub chi: f64,
    #[serde(default)]
    pub threshold_convention: ThresholdConvention,
}

impl CavityParams {
    /// `γ = γ₃ = 0.1`, `ρ = ρ₃ = 0`, `χ = 0.001`: the reference cavity.
    pub fn reference() -> Self {
        CavityParams {
            gamma: 0.1,
            gamma3: 0.1,
            rho: 0.0,
            rho3: 0.0,
            chi: 1e-3,
            threshold_convention: ThresholdConvention::default(),
        }
    }

    pub fn with_convention(mut self, convention: ThresholdConvention) -> Self {
        self.threshold_convention = convention;
        self
    }

    /// Total signal/idler damping `γ + ρ`.
    #[inline]
    pub fn signal_damping(&self) -> f64 {
        self.gamma + self.rho
    }

    /// Total pump damping `γ₃ + ρ₃`.
    #[inline]
    pub fn pump_damping(&self) -> f64 {
        self.gamma3 + self.rho3
    }

    /// Threshold under the configured convention.
    pub fn threshold(&self) -> f64 {
        threshold_with(self, self.threshold_convention)
    }
}

impl Default for CavityParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Real input amplitudes of the injected idler and the pump.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveParams {
    pub beta2: f64,
    pub beta3: f64,
}

impl DriveParams {
    pub fn new(beta2: f64, beta3: f64) -> Self {
        DriveParams { beta2, beta3 }
    }

    /// Drive given in units of the threshold of `params`.
    pub fn normalized(params: &CavityParams, beta2_norm: f64, beta3_norm: f64) -> Self {
        let eps = params.threshold();
        DriveParams {
            beta2: beta2_norm * eps,
            beta3: beta3_norm * eps,
        }
    }
}

/// Sideband frequency at which fluctuation spectra are evaluated, stored as `ωτ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalyzingFrequency {
    pub omega_tau: f64,
}

impl AnalyzingFrequency {
    pub const ZERO: AnalyzingFrequency = AnalyzingFrequency { omega_tau: 0.0 };

    pub fn new(omega_tau: f64) -> Self {
        AnalyzingFrequency { omega_tau }
    }

    /// From the normalized frequency `Ω = ωτ/γ`.
    pub fn from_normalized(omega_norm: f64, params: &CavityParams) -> Self {
        AnalyzingFrequency {
            omega_tau: omega_norm * params.gamma,
        }
    }

    pub fn normalized(&self, params: &CavityParams) -> f64 {
        self.omega_tau / params.gamma
    }
}

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: &'static str,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (got {} = {})",
            self.constraint, self.field, self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn constraints(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.constraint).collect()
    }

    fn check(&mut self, ok: bool, field: &'static str, constraint: &'static str, value: f64) {
        // NaN fails every comparison and lands here too.
        if !ok {
            self.violations.push(Violation {
                field,
                constraint,
                value,
            });
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("pass");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate(params: &CavityParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.check(params.gamma > 0.0, "gamma", "gamma > 0", params.gamma);
    report.check(params.gamma3 > 0.0, "gamma3", "gamma3 > 0", params.gamma3);
    report.check(params.chi > 0.0, "chi", "chi > 0", params.chi);
    report.check(params.rho >= 0.0, "rho", "rho ≥ 0", params.rho);
    report.check(params.rho3 >= 0.0, "rho3", "rho3 ≥ 0", params.rho3);
    report
}

pub fn validate_drive(drive: &DriveParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.check(drive.beta2 >= 0.0, "beta2", "beta2 ≥ 0", drive.beta2);
    report.check(drive.beta3 >= 0.0, "beta3", "beta3 ≥ 0", drive.beta3);
    report
}

/// Oscillation threshold under the configured convention.
pub fn threshold(params: &CavityParams) -> f64 {
    params.threshold()
}

pub fn threshold_with(params: &CavityParams, convention: ThresholdConvention) -> f64 {
    let printed = params.pump_damping() * params.signal_damping() / params.chi;
    match convention {
        ThresholdConvention::AsPrinted => printed,
        ThresholdConvention::Derived => printed / (2.0 * params.gamma3).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reference_params_validate() {
        assert!(validate(&CavityParams::reference()).is_ok());
    }

    #[test]
    fn zero_gamma_is_rejected() {
        let p = CavityParams {
            gamma: 0.0,
            ..CavityParams::reference()
        };
        assert_eq!(validate(&p).constraints(), vec!["gamma > 0"]);
    }

    #[test]
    fn negative_rho_is_rejected() {
        let p = CavityParams {
            rho: -0.01,
            ..CavityParams::reference()
        };
        let report = validate(&p);
        assert_eq!(report.constraints(), vec!["rho ≥ 0"]);
        assert_eq!(report.violations[0].field, "rho");
    }

    #[test]
    fn nan_is_rejected() {
        let p = CavityParams {
            chi: f64::NAN,
            ..CavityParams::reference()
        };
        assert_eq!(validate(&p).constraints(), vec!["chi > 0"]);
    }

    #[test]
    fn negative_drive_is_rejected() {
        let report = validate_drive(&DriveParams::new(-1.0, 0.0));
        assert_eq!(report.constraints(), vec!["beta2 ≥ 0"]);
    }

    #[test]
    fn printed_threshold_at_reference() {
        assert_relative_eq!(
            CavityParams::reference().threshold(),
            10.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn derived_threshold_at_reference() {
        let p = CavityParams::reference().with_convention(ThresholdConvention::Derived);
        assert_relative_eq!(p.threshold(), 10.0 / 0.2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(p.threshold(), 22.360679774997898, max_relative = 1e-14);
    }

    #[test]
    fn derived_threshold_is_oscillation_onset() {
        // Scan β₃ on the undriven-idler branch: ᾱ₃ = √(2γ₃)β₃/(γ₃+ρ₃). The idler/signal
        // pair has parametric gain χᾱ₃ against loss γ+ρ; onset is where they cross.
        let p = CavityParams {
            rho: 0.02,
            rho3: 0.01,
            ..CavityParams::reference()
        };
        let onset = (1..100_000)
            .map(|k| k as f64 * 1e-3)
            .find(|&b3| {
                let a3 = (2.0 * p.gamma3).sqrt() * b3 / p.pump_damping();
                p.chi * a3 >= p.signal_damping()
            })
            .unwrap();
        let derived = threshold_with(&p, ThresholdConvention::Derived);
        assert!((onset - derived).abs() <= 1e-3, "{onset} vs {derived}");
    }

    #[test]
    fn doubling_chi_halves_threshold() {
        let p = CavityParams::reference();
        let q = CavityParams {
            chi: 2.0 * p.chi,
            ..p
        };
        assert_relative_eq!(q.threshold(), 0.5 * p.threshold(), max_relative = 1e-14);
    }

    #[test]
    fn normalized_frequency_round_trip() {
        let p = CavityParams::reference();
        let f = AnalyzingFrequency::from_normalized(3.0, &p);
        assert_relative_eq!(f.omega_tau, 0.3, max_relative = 1e-15);
        assert_relative_eq!(f.normalized(&p), 3.0, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn threshold_scaling(
            gamma in 0.01f64..1.0, gamma3 in 0.01f64..1.0,
            rho in 0.0f64..0.5, rho3 in 0.0f64..0.5,
            chi in 1e-5f64..1e-1, k in 0.1f64..10.0,
        ) {
            let p = CavityParams { gamma, gamma3, rho, rho3, chi, threshold_convention: ThresholdConvention::AsPrinted };
            for conv in [ThresholdConvention::AsPrinted, ThresholdConvention::Derived] {
                let base = threshold_with(&p, conv);
                let scaled_chi = threshold_with(&CavityParams { chi: k * chi, ..p }, conv);
                prop_assert!((scaled_chi * k - base).abs() <= 1e-12 * base);
                // Linear in (γ₃+ρ₃) at fixed γ₃: scale ρ₃ only through the damping sum.
                let extra = CavityParams { rho3: rho3 + (k - 1.0).abs() * (gamma3 + rho3), ..p };
                let ratio = threshold_with(&extra, conv) / base;
                prop_assert!((ratio - extra.pump_damping() / p.pump_damping()).abs() <= 1e-12 * ratio);
                let extra = CavityParams { rho: rho + (k - 1.0).abs() * (gamma + rho), ..p };
                let ratio = threshold_with(&extra, conv) / base;
                prop_assert!((ratio - extra.signal_damping() / p.signal_damping()).abs() <= 1e-12 * ratio);
            }
            let ratio = threshold_with(&p, ThresholdConvention::Derived)
                / threshold_with(&p, ThresholdConvention::AsPrinted);
            prop_assert!((ratio - 1.0 / (2.0 * gamma3).sqrt()).abs() <= 1e-12 * ratio);
        }
    }
}
