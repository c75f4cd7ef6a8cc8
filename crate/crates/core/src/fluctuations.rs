//! Linearized output-fluctuation transfer of the signal mode.
//!
//! Two independent routes are provided. The closed form evaluates the rational
//! coefficients `C±, η₃ⱼ±, κ₃ⱼ±`; the oracle solves the 3×3 quadrature drift system in
//! the frequency domain and applies the output boundary condition directly. The `+`
//! branch belongs to the amplitude quadrature `X`, the `−` branch to the phase
//! quadrature `Y`.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnalyzingFrequency, CavityParams, VACUUM_VARIANCE};
use crate::steady_state::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    Y,
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quadrature::X => f.write_str("X"),
            Quadrature::Y => f.write_str("Y"),
        }
    }
}

/// Which transcription of the closed-form coefficients to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CoefficientMode {
    /// The literal coefficient list: the direct signal reflection `−C⁻`
    /// sits in `η₃₁⁻`, and the `ᾱ₁ᾱ₂χ` term of `η₃₂±` carries the branch sign.
    #[serde(rename = "printed")]
    AsPrinted,
    /// Consistent with the drift system: `−C⁻` belongs to `η₃₃⁻`, and the `ᾱ₁ᾱ₂χ`
    /// term of `η₃₂±`, `κ₃₂±` carries the opposite branch sign. Agrees with the
    /// matrix oracle to rounding, so it is the default.
    #[default]
    #[serde(rename = "corrected")]
    Corrected,
}

impl CoefficientMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientMode::AsPrinted => "printed",
            CoefficientMode::Corrected => "corrected",
        }
    }
}

impl fmt::Display for CoefficientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Values of one coefficient on the `X` (`plus`) and `Y` (`minus`) branches.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CoefficientPair {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl CoefficientPair {
    fn get(&self, q: Quadrature) -> Complex64 {
        match q {
            Quadrature::X => self.plus,
            Quadrature::Y => self.minus,
        }
    }
}

/// Coefficients of the signal output quadratures in terms of the six input ports:
/// pump, idler and signal mirror inputs (`η₃₁, η₃₂, η₃₃`) and the matching loss-port
/// vacua (`κ₃₁, κ₃₂, κ₃₃`), all over the common denominator `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureTransfer {
    pub c: CoefficientPair,
    pub eta31: CoefficientPair,
    pub eta32: CoefficientPair,
    pub eta33: CoefficientPair,
    pub kappa31: CoefficientPair,
    pub kappa32: CoefficientPair,
    pub kappa33: CoefficientPair,
    /// Sum of the magnitudes of the terms of `C`, for cancellation checks.
    pub c_scale: f64,
    pub omega_tau: f64,
}

impl QuadratureTransfer {
    /// The six port coefficients of one quadrature, divided by its denominator.
    pub fn port_transfer(&self, q: Quadrature) -> [Complex64; 6] {
        let c = self.c.get(q);
        [
            self.eta31,
            self.eta32,
            self.eta33,
            self.kappa31,
            self.kappa32,
            self.kappa33,
        ]
        .map(|pair| pair.get(q) / c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarianceSource {
    ClosedForm,
    MatrixOracle,
}

/// Output signal quadrature variances, in units of the vacuum variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputVariances {
    pub var_x: f64,
    pub var_y: f64,
    pub source: VarianceSource,
}

impl OutputVariances {
    pub fn get(&self, q: Quadrature) -> f64 {
        match q {
            Quadrature::X => self.var_x,
            Quadrature::Y => self.var_y,
        }
    }
}

pub fn closed_form_coefficients(
    ss: &SteadyState,
    params: &CavityParams,
    freq: AnalyzingFrequency,
    mode: CoefficientMode,
) -> QuadratureTransfer {
    let [a1, a2, a3] = ss.amplitudes();
    let CavityParams {
        gamma,
        gamma3,
        rho,
        rho3,
        chi,
        ..
    } = *params;
    let w = freq.omega_tau;
    let iw = Complex64::new(0.0, w);
    let s = gamma + rho + iw;
    let s3 = gamma3 + rho3 + iw;

    let denominator = |sign: f64| {
        sign * 2.0 * a1 * a2 * a3 * chi.powi(3) + a1 * a1 * chi * chi * s + a2 * a2 * chi * chi * s
            - a3 * a3 * chi * chi * s3
            + s * s * s3
    };
    let c = CoefficientPair {
        plus: denominator(1.0),
        minus: denominator(-1.0),
    };

    // Shared brackets of the pump-port and signal-port coefficients.
    let pump_bracket = |sign: f64| a2 * gamma + a2 * rho + sign * a1 * a3 * chi + iw * a2;
    let idler_bracket = |sign: f64| a3 * gamma3 + a3 * rho3 + sign * a1 * a2 * chi + iw * a3;
    let signal_bracket =
        gamma * gamma3 + gamma3 * rho + gamma * rho3 + rho * rho3 + a1 * a1 * chi * chi - w * w
            + iw * (gamma + gamma3 + rho + rho3);

    let pump_gain = 2.0 * (gamma3 * gamma).sqrt() * chi;
    let idler_gain = 2.0 * gamma * chi;
    let signal_gain = 2.0 * gamma;
    let pump_loss_gain = 2.0 * (gamma * rho3).sqrt() * chi;
    let idler_loss_gain = 2.0 * (gamma * rho).sqrt() * chi;
    let signal_loss_gain = 2.0 * (gamma * rho).sqrt();

    let pair = |f: &dyn Fn(f64) -> Complex64| CoefficientPair {
        plus: f(1.0),
        minus: f(-1.0),
    };

    let eta31 = pair(&|sign| pump_gain * pump_bracket(sign));
    let kappa31 = pair(&|sign| pump_loss_gain * pump_bracket(sign));
    let eta33 = pair(&|_| signal_gain * signal_bracket);
    let kappa33 = pair(&|_| signal_loss_gain * signal_bracket);

    let (eta32, kappa32) = match mode {
        CoefficientMode::AsPrinted => (
            pair(&|sign| sign * idler_gain * idler_bracket(sign)),
            pair(&|sign| sign * idler_loss_gain * idler_bracket(1.0)),
        ),
        CoefficientMode::Corrected => (
            pair(&|sign| sign * idler_gain * idler_bracket(-sign)),
            pair(&|sign| sign * idler_loss_gain * idler_bracket(-sign)),
        ),
    };

    let c_scale = 2.0 * (a1 * a2 * a3).abs() * chi.powi(3)
        + (a1 * a1 + a2 * a2) * chi * chi * s.norm()
        + a3 * a3 * chi * chi * s3.norm()
        + s.norm_sqr() * s3.norm();

    let mut qt = QuadratureTransfer {
        c,
        c_scale,
        eta31,
        eta32,
        eta33,
        kappa31,
        kappa32,
        kappa33,
        omega_tau: w,
    };
    // Direct reflection of the signal input at the coupling mirror.
    qt.eta33.plus -= c.plus;
    match mode {
        CoefficientMode::AsPrinted => qt.eta31.minus -= c.minus,
        CoefficientMode::Corrected => qt.eta33.minus -= c.minus,
    }
    qt
}

pub fn output_variances_closed_form(qt: &QuadratureTransfer) -> Result<OutputVariances> {
    let var = |q: Quadrature| -> Result<f64> {
        if qt.c.get(q).norm() <= 1e-13 * qt.c_scale {
            return Err(Error::SingularSystem(q));
        }
        Ok(VACUUM_VARIANCE
            * qt.port_transfer(q)
                .iter()
                .map(|t| t.norm_sqr())
                .sum::<f64>())
    };
    Ok(OutputVariances {
        var_x: var(Quadrature::X)?,
        var_y: var(Quadrature::Y)?,
        source: VarianceSource::ClosedForm,
    })
}

/// Quadrature drift matrices `(M_X, M_Y)` of the linearized intracavity fluctuations,
/// ordered (signal, idler, pump).
pub fn drift_matrices(ss: &SteadyState, params: &CavityParams) -> (Matrix3<f64>, Matrix3<f64>) {
    drift_matrices_for(ss.amplitudes(), params)
}

fn drift_matrices_for(amplitudes: [f64; 3], params: &CavityParams) -> (Matrix3<f64>, Matrix3<f64>) {
    let [a1, a2, a3] = amplitudes;
    let chi = params.chi;
    let g = params.signal_damping();
    let g3 = params.pump_damping();
    #[rustfmt::skip]
    let mx = Matrix3::new(
        -g,        chi * a3,  chi * a2,
        chi * a3,  -g,        chi * a1,
        -chi * a2, -chi * a1, -g3,
    );
    let mut my = mx;
    my[(0, 1)] = -mx[(0, 1)];
    my[(1, 0)] = -mx[(1, 0)];
    (mx, my)
}

/// Frequency-domain solve of the drift system for every input port. Each port has unit
/// quadrature variance and the ports are uncorrelated.
pub fn output_variances_oracle(
    ss: &SteadyState,
    params: &CavityParams,
    freq: AnalyzingFrequency,
) -> Result<OutputVariances> {
    let (mx, my) = drift_matrices(ss, params);
    let mirror = [
        (2.0 * params.gamma).sqrt(),
        (2.0 * params.gamma).sqrt(),
        (2.0 * params.gamma3).sqrt(),
    ];
    let loss = [
        (2.0 * params.rho).sqrt(),
        (2.0 * params.rho).sqrt(),
        (2.0 * params.rho3).sqrt(),
    ];
    let out_coupling = (2.0 * params.gamma).sqrt();
    let iw = Complex64::new(0.0, freq.omega_tau);

    let variance = |m: &Matrix3<f64>, q: Quadrature| -> Result<f64> {
        let a: Matrix3<Complex64> = Matrix3::identity() * iw - m.map(Complex64::from);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lu = a.lu();
        if lu.determinant().norm() <= 1e-14 * scale.powi(3) {
            return Err(Error::SingularSystem(q));
        }
        let mut total = 0.0;
        for (mode, &k) in mirror.iter().enumerate() {
            for (port_coupling, is_signal_mirror) in [(k, mode == 0), (loss[mode], false)] {
                if port_coupling == 0.0 {
                    continue;
                }
                let mut b = Vector3::<Complex64>::zeros();
                b[mode] = Complex64::from(port_coupling);
                let v = lu.solve(&b).ok_or(Error::SingularSystem(q))?;
                let mut t = v[0] * out_coupling;
                if is_signal_mirror {
                    t -= 1.0;
                }
                total += t.norm_sqr();
            }
        }
        Ok(VACUUM_VARIANCE * total)
    };

    Ok(OutputVariances {
        var_x: variance(&mx, Quadrature::X)?,
        var_y: variance(&my, Quadrature::Y)?,
        source: VarianceSource::MatrixOracle,
    })
}

/// Routh–Hurwitz test on the characteristic cubic `λ³ + c₂λ² + c₁λ + c₀`.
pub fn is_hurwitz(m: &Matrix3<f64>) -> bool {
    let c2 = -m.trace();
    let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let c0 = -m.determinant();
    c2 > 0.0 && c0 > 0.0 && c2 * c1 > c0
}

/// Both quadrature drift matrices are Hurwitz.
pub fn stability(ss: &SteadyState, params: &CavityParams) -> bool {
    let (mx, my) = drift_matrices(ss, params);
    is_hurwitz(&mx) && is_hurwitz(&my)
}
