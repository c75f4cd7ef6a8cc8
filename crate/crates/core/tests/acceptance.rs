//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.
//!
//! Runs without the libtest harness so the lines always appear in `cargo test` output.

use std::process::{Command, ExitCode};

use nopa::fluctuations::{
    closed_form_coefficients, output_variances_closed_form, output_variances_oracle,
    CoefficientMode,
};
use nopa::metrics::evaluate_point;
use nopa::model::{AnalyzingFrequency, CavityParams, DriveParams, ThresholdConvention};
use nopa::steady_state::{photon_fluxes, solve_steady_state, SteadyState};
use nopa::sweeps::{figure_preset, run_sweep, FigurePreset, SweepRow, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_2011;

/// Every row any criterion looked at, for the residual and metric-identity audits.
#[derive(Default)]
struct Audit {
    rows: Vec<(CavityParams, SweepRow)>,
}

impl Audit {
    fn sweep(&mut self, spec: &SweepSpec) -> Vec<SweepRow> {
        let rows = run_sweep(spec).expect("preset specs are valid");
        for r in &rows {
            let (params, _, _) = spec.point(r.swept);
            self.rows.push((params, r.clone()));
        }
        rows
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{id:<4} {}  {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn worst(r: &SweepRow) -> f64 {
    r.eta.unwrap().min(r.t_x.unwrap()).min(r.t_y.unwrap())
}

fn argmax_by(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> usize {
    (0..rows.len())
        .max_by(|&a, &b| f(&rows[a]).total_cmp(&f(&rows[b])))
        .unwrap()
}

type Column = fn(&SweepRow) -> f64;

fn columns() -> [(&'static str, Column); 3] {
    [
        ("eta", |r| r.eta.unwrap()),
        ("t_x", |r| r.t_x.unwrap()),
        ("t_y", |r| r.t_y.unwrap()),
    ]
}

fn fig2a_with(convention: ThresholdConvention) -> SweepSpec {
    let spec = figure_preset(FigurePreset::Fig2a);
    SweepSpec {
        params: spec.params.with_convention(convention),
        ..spec
    }
}

/// Uniform draw within ±50% of `v`.
fn around(rng: &mut ChaCha8Rng, v: f64) -> f64 {
    v * rng.random_range(0.5..1.5)
}

/// A random stable, sub-threshold, lossless operating point near the reference.
fn random_point(
    rng: &mut ChaCha8Rng,
) -> (CavityParams, DriveParams, AnalyzingFrequency, SteadyState) {
    let base = CavityParams::reference();
    loop {
        let params = CavityParams {
            gamma: around(rng, base.gamma),
            gamma3: around(rng, base.gamma3),
            chi: around(rng, base.chi),
            ..base
        };
        // Below the derived oscillation threshold in printed units: β₃ < ε_th/√(2γ₃).
        let ceiling = 1.0 / (2.0 * params.gamma3).sqrt();
        let b3n = rng.random_range(0.01..0.9) * ceiling;
        let b2n = rng.random_range(0.0..6.0);
        let drive = DriveParams::normalized(&params, b2n, b3n);
        let freq = AnalyzingFrequency::from_normalized(rng.random_range(0.0..5.0), &params);
        if let Ok(ss) = solve_steady_state(&params, &drive) {
            if ss.stable {
                return (params, drive, freq, ss);
            }
        }
    }
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let mut audit = Audit::default();

    // Convention determination: where does the fig2a joint optimum land?
    let mut frozen = None;
    for convention in [ThresholdConvention::AsPrinted, ThresholdConvention::Derived] {
        let rows = run_sweep(&fig2a_with(convention)).unwrap();
        let at = rows[argmax_by(&rows, worst)].beta2_norm;
        let hit = (at - 2.2).abs() <= 0.15;
        println!(
            "conv {convention:<7} joint optimum at beta2_norm = {at:.2}{}",
            if hit { "  <- matches 2.2" } else { "" }
        );
        if hit && frozen.is_none() {
            frozen = Some(convention);
        }
    }
    let default = CavityParams::reference().threshold_convention;
    report.line(
        "C1",
        frozen == Some(default),
        format!("frozen threshold convention = {default}, determined = {frozen:?}"),
    );

    // A1
    let fig2a = audit.sweep(&figure_preset(FigurePreset::Fig2a));
    let star = argmax_by(&fig2a, worst);
    let peak = &fig2a[star];
    let mut a1 = (peak.beta2_norm - 2.2).abs() <= 0.15;
    let mut notes = Vec::new();
    for (name, col) in columns() {
        let up = fig2a[..=star].windows(2).all(|w| col(&w[1]) > col(&w[0]));
        let down = fig2a[star..].windows(2).all(|w| col(&w[1]) < col(&w[0]));
        let high = col(peak) >= 0.98;
        a1 &= up && down && high;
        notes.push(format!(
            "{name}={:.6}{}{}",
            col(peak),
            if up { "" } else { " not-rising" },
            if down { "" } else { " not-falling" }
        ));
    }
    report.line(
        "A1",
        a1,
        format!("beta2*/eps = {:.2}; {}", peak.beta2_norm, notes.join(", ")),
    );

    // A2, plus the refutation of the other coefficient mode.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut corrected, mut printed) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (params, _, freq, ss) = random_point(&mut rng);
        let oracle = output_variances_oracle(&ss, &params, freq).unwrap();
        for (mode, worst_dev) in [
            (CoefficientMode::Corrected, &mut corrected),
            (CoefficientMode::AsPrinted, &mut printed),
        ] {
            let qt = closed_form_coefficients(&ss, &params, freq, mode);
            let v = output_variances_closed_form(&qt).unwrap();
            let dev = ((v.var_x - oracle.var_x).abs() / oracle.var_x)
                .max((v.var_y - oracle.var_y).abs() / oracle.var_y);
            *worst_dev = worst_dev.max(dev);
        }
    }
    println!("mode corrected max rel dev {corrected:.2e}; printed max rel dev {printed:.2e}");
    report.line(
        "C2",
        CoefficientMode::default() == CoefficientMode::Corrected
            && corrected <= 1e-9
            && printed > 1e-9,
        format!("frozen coefficient mode = {}", CoefficientMode::default()),
    );
    report.line(
        "A2",
        corrected <= 1e-9,
        format!("100 random points, max |closed - oracle|/oracle = {corrected:.2e}"),
    );

    // A3
    let tx_gap = fig2a
        .iter()
        .map(|r| (r.t_x.unwrap() - r.eta.unwrap()).abs())
        .fold(0.0, f64::max);
    let proxy = fig2a
        .iter()
        .map(|r| (r.var_x.unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let proxy_at = fig2a[argmax_by(&fig2a, |r| (r.var_x.unwrap() - 1.0).abs())].beta2_norm;
    report.line(
        "A3",
        tx_gap <= 1e-2,
        format!(
            "max |T_X - eta| = {tx_gap:.2e}; note: max |var_x - 1| = {proxy:.2e} at beta2_norm = {proxy_at:.2} (eta = 0 there)"
        ),
    );

    // A4
    let mut a4 = true;
    let mut a4_notes = Vec::new();
    for preset in [FigurePreset::Fig2b, FigurePreset::Fig2c] {
        let rows = audit.sweep(&figure_preset(preset));
        let hit = rows.iter().find(|r| {
            (r.t_x.unwrap() - 1.0).abs() <= 0.03
                && (r.eta.unwrap() - 1.0).abs() <= 0.03
                && r.t_y.unwrap() < 1.0
        });
        a4 &= hit.is_some();
        a4_notes.push(match hit {
            Some(r) => format!(
                "{preset}: beta2_norm={:.2} eta={:.4} t_x={:.4} t_y={:.4}",
                r.beta2_norm,
                r.eta.unwrap(),
                r.t_x.unwrap(),
                r.t_y.unwrap()
            ),
            None => format!("{preset}: no qualifying row"),
        });
    }
    report.line("A4", a4, a4_notes.join("; "));

    // A5
    let fig3 = audit.sweep(&figure_preset(FigurePreset::Fig3));
    let weak = fig3
        .iter()
        .filter(|r| r.beta3_norm <= 0.1 + 1e-12)
        .map(worst)
        .fold(f64::INFINITY, f64::min);
    let band: Vec<&SweepRow> = fig3
        .iter()
        .filter(|r| r.beta3_norm >= 0.1 - 1e-12 && r.beta3_norm <= 1.0 + 1e-12)
        .collect();
    let falling = band
        .windows(2)
        .all(|w| w[1].t_y.unwrap() < w[0].t_y.unwrap());
    report.line(
        "A5",
        weak >= 0.97 && falling,
        format!(
            "min(eta,T_X,T_Y) for beta3 <= 0.1 eps = {weak:.6}; T_Y strictly falling on [0.1, 1.0] ({} rows): {falling}",
            band.len()
        ),
    );

    // A6
    let fig4 = audit.sweep(&figure_preset(FigurePreset::Fig4));
    let drift = |col: Column| {
        fig4.iter()
            .map(|r| (col(r) - col(&fig4[0])).abs())
            .fold(0.0, f64::max)
    };
    let (dx, dy) = (drift(|r| r.t_x.unwrap()), drift(|r| r.t_y.unwrap()));
    report.line(
        "A6",
        dx <= 1e-2 && dy <= 1e-2,
        format!("max |T_X(W) - T_X(0)| = {dx:.2e}, max |T_Y(W) - T_Y(0)| = {dy:.2e} (beta2 = 2.2 eps assumed)"),
    );

    // A7
    let fig5 = audit.sweep(&figure_preset(FigurePreset::Fig5));
    let reference_row = fig2a
        .iter()
        .find(|r| (r.beta2_norm - 2.2).abs() < 1e-12)
        .expect("fig2a grid contains 2.2");
    let mut a7 = true;
    let mut a7_notes = Vec::new();
    for (name, col) in columns() {
        let non_increasing = fig5.windows(2).all(|w| col(&w[1]) <= col(&w[0]));
        let rel = (col(&fig5[0]) - col(reference_row)).abs() / col(reference_row);
        a7 &= non_increasing && rel <= 1e-6;
        a7_notes.push(format!(
            "{name}: {:.4} -> {:.4}, rel dev at rho=0 {rel:.1e}",
            col(&fig5[0]),
            col(fig5.last().unwrap())
        ));
    }
    report.line("A7", a7, a7_notes.join("; "));

    // A8
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xa8);
    let mut defect = 0.0f64;
    for _ in 0..100 {
        let (params, drive, _, ss) = random_point(&mut rng);
        let f = photon_fluxes(&ss, &drive, &params);
        if f.pair_rate > 0.0 {
            defect = defect.max(f.defect() / f.pair_rate);
        }
    }
    report.line(
        "A8",
        defect <= 1e-10,
        format!("100 random lossless points, max flux defect / pair rate = {defect:.2e}"),
    );

    // A9
    let mut residual = 0.0f64;
    let mut unsolved = 0;
    for (params, r) in &audit.rows {
        match (r.residual, r.alpha3) {
            (Some(res), Some(a3)) => {
                residual = residual.max(res / 1.0f64.max(a3.abs() * params.pump_damping()));
            }
            _ => unsolved += 1,
        }
    }
    report.line(
        "A9",
        residual <= 1e-10 && unsolved == 0,
        format!(
            "{} solved points, max relative residual = {residual:.2e}, unsolved = {unsolved}",
            audit.rows.len()
        ),
    );

    // A10
    let empty = CavityParams {
        chi: 0.0,
        ..CavityParams::reference()
    };
    let mut a10 = 0.0f64;
    for wn in [0.0, 1.0, 5.0] {
        let freq = AnalyzingFrequency::from_normalized(wn, &empty);
        let drive = DriveParams::new(3.0, 1.0);
        let ss = solve_steady_state(&empty, &drive).unwrap();
        let closed = evaluate_point(&empty, &drive, freq, CoefficientMode::default())
            .unwrap()
            .variances;
        let oracle = output_variances_oracle(&ss, &empty, freq).unwrap();
        for v in [closed.var_x, closed.var_y, oracle.var_x, oracle.var_y] {
            a10 = a10.max((v - 1.0).abs());
        }
    }
    report.line(
        "A10",
        a10 <= 1e-12,
        format!("chi = 0, W in {{0, 1, 5}}, both paths: max |var - 1| = {a10:.2e}"),
    );

    // A11
    let mut identity = 0.0f64;
    let mut checked = 0;
    for (_, r) in &audit.rows {
        let (Some(eta), Some(tx), Some(ty)) = (r.eta, r.t_x, r.t_y) else {
            continue;
        };
        checked += 1;
        for (t, v) in [(tx, r.var_x.unwrap()), (ty, r.var_y.unwrap())] {
            if eta > 0.0 {
                identity = identity.max((t * v - eta).abs() / eta);
            } else {
                identity = identity.max((t * v).abs());
            }
        }
    }
    report.line(
        "A11",
        identity <= 1e-12 && checked > 0,
        format!("{checked} points, max |T*var - eta|/eta = {identity:.2e}"),
    );

    // A12
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("run1.csv"), dir.path().join("run2.csv")];
    let mut ran = true;
    for p in &paths {
        let status = Command::new(env!("CARGO_BIN_EXE_nopa"))
            .args(["figure", "fig2a", "-o"])
            .arg(p)
            .status()
            .unwrap();
        ran &= status.success();
    }
    let (a, b) = (
        std::fs::read(&paths[0]).unwrap_or_default(),
        std::fs::read(&paths[1]).unwrap_or_default(),
    );
    report.line(
        "A12",
        ran && !a.is_empty() && a == b,
        format!(
            "two `figure fig2a` runs, {} bytes each, identical: {}",
            a.len(),
            a == b
        ),
    );

    println!("acceptance: {} failed", report.failures);
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
