//! Stationary intracavity amplitudes, output amplitudes and the photon-flux balance.
//!
//! With the input phases fixed by the model, the steady state has phases
//! `θ₁ = θ₃ = π/4`, `θ₂ = 0` and real amplitudes. Eliminating `ᾱ₁` and `ᾱ₂` leaves a
//! single equation for the pump amplitude,
//!
//! ```text
//! (γ₃+ρ₃)·ᾱ₃ + 2γχ²β₂²·ᾱ₃ / ((γ+ρ)·D²) = √(2γ₃)·β₃,   D = γ+ρ − χ²ᾱ₃²/(γ+ρ)
//! ```
//!
//! which is a quintic once the denominators are cleared. In the dimensionless variable
//! `u = χᾱ₃/(γ+ρ)` it reads `u⁵ − q u⁴ − 2u³ + 2q u² + (1+p) u − q = 0` with
//! `p = 2γχ²β₂²/((γ₃+ρ₃)(γ+ρ)³)` and `q = √(2γ₃)χβ₃/((γ₃+ρ₃)(γ+ρ))`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuations;
use crate::model::{CavityParams, DriveParams, STEADY_STATE_PHASES};

/// Roots closer than this (relative to `γ+ρ`) to the zero of `D` are rejected.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Relative bound on the raw steady-state residual accepted for a root.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Largest modulus among the three steady-state equations at the solution.
    pub residual: f64,
    /// Both quadrature drift matrices are Hurwitz.
    pub stable: bool,
    /// Number of admissible real roots found.
    pub branch_count: usize,
}

impl SteadyState {
    pub fn amplitudes(&self) -> [f64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }

    /// Residual scaled as in [`residual_bound`].
    pub fn relative_residual(&self, params: &CavityParams) -> f64 {
        self.residual / residual_scale(self.alpha3, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputAmplitudes {
    pub a1_out: f64,
    pub a2_out: f64,
    pub a3_out: f64,
}

/// Coefficients of the cleared pump equation in `ᾱ₃`, lowest degree first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPolynomial {
    pub coefficients: [f64; 6],
}

impl PumpPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }
}

/// `(γ₃+ρ₃)ᾱ₃P² + 2γχ²β₂²(γ+ρ)ᾱ₃ − √(2γ₃)β₃P²` with `P = (γ+ρ)² − χ²ᾱ₃²`.
pub fn pump_polynomial(params: &CavityParams, drive: &DriveParams) -> PumpPolynomial {
    let g = params.signal_damping();
    let g3 = params.pump_damping();
    let chi2 = params.chi * params.chi;
    let src = (2.0 * params.gamma3).sqrt() * drive.beta3;
    let idler = 2.0 * params.gamma * chi2 * drive.beta2 * drive.beta2 * g;
    let g2 = g * g;
    // P² = g⁴ − 2g²χ²x² + χ⁴x⁴
    let p2 = [g2 * g2, 0.0, -2.0 * g2 * chi2, 0.0, chi2 * chi2];
    let mut c = [0.0; 6];
    for (k, &pk) in p2.iter().enumerate() {
        c[k + 1] += g3 * pk;
        c[k] -= src * pk;
    }
    c[1] += idler;
    PumpPolynomial { coefficients: c }
}

/// Dimensionless drive strengths `(p, q)` of the pump equation in `u = χᾱ₃/(γ+ρ)`.
fn reduced_drive(params: &CavityParams, drive: &DriveParams) -> (f64, f64) {
    let g = params.signal_damping();
    let g3 = params.pump_damping();
    let chi = params.chi;
    let p = 2.0 * params.gamma * chi * chi * drive.beta2 * drive.beta2 / (g3 * g * g * g);
    let q = (2.0 * params.gamma3).sqrt() * chi * drive.beta3 / (g3 * g);
    (p, q)
}

/// Pump equation in its fractional form, as a function of `u`, with its derivative.
fn reduced_equation(u: f64, p: f64, q: f64) -> (f64, f64) {
    let w = (1.0 - u) * (1.0 + u);
    let f = u + p * u / (w * w) - q;
    let df = 1.0 + p * (1.0 + 3.0 * u * u) / (w * w * w);
    (f, df)
}

/// Newton iteration kept inside a sign-changing bracket, falling back to bisection.
fn bracketed_root(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let (flo, _) = f(lo);
    let rising = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == rising {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || (hi - lo).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Real roots of `u⁵ − q u⁴ − 2u³ + 2q u² + (1+p) u − q` for `p, q ≥ 0`, ascending.
///
/// For `p > 0` the fractional form `f(u) = u + pu/(1−u²)² − q` increases from −∞ to
/// +∞ on `(−1, 1)`, so exactly one root lies there. On `(1, ∞)`, `f′` increases from
/// −∞ to 1, so `f` has a single minimum and zero, one or two roots. For `q ≥ 0`,
/// `f < 0` on `(−∞, −1)`.
fn reduced_real_roots(p: f64, q: f64) -> Vec<f64> {
    if p == 0.0 {
        // Factors exactly as (u − q)(1 − u²)²; the double roots at ±1 are poles.
        return vec![q];
    }
    let f = |u: f64| reduced_equation(u, p, q);
    let mut roots = Vec::with_capacity(3);

    // Inner bracket: move the ends towards ±1 until f changes sign.
    let mut d = 0.5;
    while f(-1.0 + d).0 >= 0.0 || f(1.0 - d).0 <= 0.0 {
        d *= 0.5;
        if d < f64::EPSILON {
            break;
        }
    }
    roots.push(bracketed_root(f, -1.0 + d, 1.0 - d));

    // Minimum of f on (1, ∞): root of f′, which is increasing there.
    let df = |u: f64| {
        let (_, d1) = f(u);
        let w = (1.0 - u) * (1.0 + u);
        let d2 = 12.0 * p * u * (1.0 + u * u) / (w * w * w * w);
        (d1, d2)
    };
    let mut hi = 2.0;
    while df(hi).0 <= 0.0 {
        hi = 1.0 + 2.0 * (hi - 1.0);
    }
    let mut lo = 1.0 + 0.5 * (hi - 1.0);
    while df(lo).0 >= 0.0 {
        lo = 1.0 + 0.5 * (lo - 1.0);
    }
    let u_min = bracketed_root(df, lo, hi);
    let f_min = f(u_min).0;
    if f_min == 0.0 {
        roots.push(u_min);
    } else if f_min < 0.0 {
        let mut near = 1.0 + 0.5 * (u_min - 1.0);
        while f(near).0 <= 0.0 {
            near = 1.0 + 0.5 * (near - 1.0);
        }
        roots.push(bracketed_root(f, near, u_min));
        let mut far = 2.0 * u_min;
        while f(far).0 <= 0.0 {
            far *= 2.0;
        }
        roots.push(bracketed_root(f, u_min, far));
    }
    roots
}

fn residual_scale(alpha3: f64, params: &CavityParams) -> f64 {
    1.0f64.max(alpha3.abs() * params.pump_damping())
}

/// Absolute residual allowed for a solution with pump amplitude `alpha3`.
pub fn residual_bound(alpha3: f64, params: &CavityParams) -> f64 {
    RESIDUAL_TOLERANCE * residual_scale(alpha3, params)
}

/// Largest modulus of the three complex steady-state equations with the fixed phases.
pub fn steady_state_residual(
    amplitudes: [f64; 3],
    params: &CavityParams,
    drive: &DriveParams,
) -> f64 {
    let [a1, a2, a3] = amplitudes;
    let (t1, t2, t3) = STEADY_STATE_PHASES;
    let g = params.signal_damping();
    let g3 = params.pump_damping();
    let chi = params.chi;
    let e = |theta: f64| Complex64::from_polar(1.0, theta);
    let pump_in = (2.0 * params.gamma3).sqrt() * drive.beta3 * e(crate::model::PUMP_INPUT_PHASE);
    let idler_in = (2.0 * params.gamma).sqrt() * drive.beta2 * e(crate::model::IDLER_INPUT_PHASE);

    let r1 = -g * a1 * e(t1) + chi * a2 * a3 * e(t3 - t2);
    let r2 = -g * a2 * e(t2) + chi * a1 * a3 * e(t3 - t1) + idler_in;
    let r3 = -g3 * a3 * e(t3) - chi * a1 * a2 * e(t1 + t2) + pump_in;
    r1.norm().max(r2.norm()).max(r3.norm())
}

/// Residual of the eliminated pump equation in its fractional form.
pub fn pump_equation_residual(alpha3: f64, params: &CavityParams, drive: &DriveParams) -> f64 {
    let g = params.signal_damping();
    let d = g - alpha3 * alpha3 * params.chi * params.chi / g;
    let lhs = params.pump_damping() * alpha3
        + 2.0 * params.gamma * params.chi * params.chi * drive.beta2 * drive.beta2 * alpha3
            / (g * d * d);
    lhs - (2.0 * params.gamma3).sqrt() * drive.beta3
}

/// Signal and idler amplitudes for a given pump amplitude.
fn complete(alpha3: f64, params: &CavityParams, drive: &DriveParams) -> ([f64; 3], f64) {
    let g = params.signal_damping();
    let chi = params.chi;
    let d = g - alpha3 * alpha3 * chi * chi / g;
    let s = (2.0 * params.gamma).sqrt() * drive.beta2;
    let alpha2 = s / d;
    let alpha1 = s * chi * alpha3 / (g * d);
    ([alpha1, alpha2, alpha3], d)
}

/// Every admissible stationary point, ordered by `|ᾱ₃|`.
pub fn steady_state_branches(params: &CavityParams, drive: &DriveParams) -> Vec<SteadyState> {
    let g = params.signal_damping();
    let alphas3: Vec<f64> = if params.chi == 0.0 {
        vec![(2.0 * params.gamma3).sqrt() * drive.beta3 / params.pump_damping()]
    } else {
        let (p, q) = reduced_drive(params, drive);
        reduced_real_roots(p, q)
            .into_iter()
            .map(|u| g * u / params.chi)
            .collect()
    };

    let mut branches: Vec<SteadyState> = alphas3
        .into_iter()
        .filter_map(|alpha3| {
            let (amps, d) = complete(alpha3, params, drive);
            if d == 0.0 || amps.iter().any(|a| !a.is_finite()) {
                return None;
            }
            let residual = steady_state_residual(amps, params, drive);
            if residual > residual_bound(alpha3, params) {
                return None;
            }
            let mut ss = SteadyState {
                alpha1: amps[0],
                alpha2: amps[1],
                alpha3,
                residual,
                stable: false,
                branch_count: 0,
            };
            ss.stable = fluctuations::stability(&ss, params);
            Some(ss)
        })
        .collect();
    branches.sort_by(|a, b| a.alpha3.abs().total_cmp(&b.alpha3.abs()));
    let count = branches.len();
    for b in &mut branches {
        b.branch_count = count;
    }
    branches
}

/// Solves for the branch continued from the empty cavity: the smallest-`|ᾱ₃|` stable
/// root, or the smallest-`|ᾱ₃|` root flagged unstable when none is stable.
pub fn solve_steady_state(params: &CavityParams, drive: &DriveParams) -> Result<SteadyState> {
    let branches = steady_state_branches(params, drive);
    let selected = branches
        .iter()
        .find(|b| b.stable)
        .or_else(|| branches.first())
        .copied()
        .ok_or(Error::NoAdmissibleRoot)?;
    if params.chi != 0.0 {
        let g = params.signal_damping();
        let d = g - selected.alpha3 * selected.alpha3 * params.chi * params.chi / g;
        if d.abs() < POLE_TOLERANCE * g {
            return Err(Error::PoleProximity { denominator: d });
        }
    }
    Ok(selected)
}

/// Input-output boundary condition `aᵢ_out = √(2γᵢ)ᾱᵢ − βᵢ` with a vacuum signal input.
pub fn output_amplitudes(
    ss: &SteadyState,
    drive: &DriveParams,
    params: &CavityParams,
) -> OutputAmplitudes {
    let t = (2.0 * params.gamma).sqrt();
    OutputAmplitudes {
        a1_out: t * ss.alpha1,
        a2_out: t * ss.alpha2 - drive.beta2,
        a3_out: (2.0 * params.gamma3).sqrt() * ss.alpha3 - drive.beta3,
    }
}

/// Net photon fluxes exchanged by each mode with the outside world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonFluxes {
    /// Signal photons leaving the cavity.
    pub signal: f64,
    /// Idler photons gained on reflection.
    pub idler: f64,
    /// Pump photons lost on reflection.
    pub pump: f64,
    /// Intracavity pair-creation rate `2χᾱ₁ᾱ₂ᾱ₃`.
    pub pair_rate: f64,
}

impl PhotonFluxes {
    pub fn defect(&self) -> f64 {
        let (a, b, c) = (self.signal, self.idler, self.pump);
        (a - b).abs().max((b - c).abs()).max((a - c).abs())
    }
}

pub fn photon_fluxes(ss: &SteadyState, drive: &DriveParams, params: &CavityParams) -> PhotonFluxes {
    let out = output_amplitudes(ss, drive, params);
    PhotonFluxes {
        signal: out.a1_out * out.a1_out,
        idler: (out.a2_out - drive.beta2) * (out.a2_out + drive.beta2),
        pump: (drive.beta3 - out.a3_out) * (drive.beta3 + out.a3_out),
        pair_rate: 2.0 * params.chi * ss.alpha1 * ss.alpha2 * ss.alpha3,
    }
}

/// Largest pairwise disagreement among the three photon fluxes. Exactly zero (up to
/// rounding) without extra losses; with losses it measures what the loss ports absorb.
pub fn manley_rowe_defect(ss: &SteadyState, drive: &DriveParams, params: &CavityParams) -> f64 {
    photon_fluxes(ss, drive, params).defect()
}
