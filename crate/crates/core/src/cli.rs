//! Command-line front end.
//!
//! Flags may appear before or after the subcommand. A `--config` file supplies the same
//! keys in TOML (`beta2-norm = 2.2` or `beta2_norm = 2.2`); flags win over the file.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::fluctuations::{output_variances_oracle, CoefficientMode};
use crate::metrics::evaluate_point;
use crate::model::{
    threshold_with, validate, validate_drive, AnalyzingFrequency, CavityParams, DriveParams,
    ThresholdConvention,
};
use crate::steady_state::{manley_rowe_defect, output_amplitudes};
use crate::sweeps::{
    figure_preset, optimize_idler, run_sweep, FigurePreset, SweepRange, SweepRow, SweepSpec,
    SweepVariable, OPERATING_BETA2_NORM, OPERATING_BETA3_NORM,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

pub const CSV_HEADER: &str = "swept,beta2_norm,beta3_norm,omega_norm,rho,rho3,eta,t_x,t_y,var_x,var_y,alpha1,alpha2,alpha3,residual,stable,defined,error";

#[derive(Debug, Parser)]
#[command(
    name = "nopa",
    version,
    about = "Frequency down-conversion in a nondegenerate OPA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one operating point and print a JSON object.
    Point,
    /// Sweep one variable over a linear grid.
    Sweep {
        #[arg(long = "var", value_parser = parse_variable)]
        variable: SweepVariable,
        /// `start:stop:count`
        #[arg(long, value_parser = parse_range)]
        range: SweepRange,
    },
    /// Run a named figure preset.
    Figure {
        #[arg(value_parser = parse_preset)]
        preset: FigurePreset,
    },
    /// Find the idler amplitude maximizing min(η, T_X, T_Y).
    Optimize,
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<SweepRange, String> {
    s.parse()
}

fn parse_preset(s: &str) -> Result<FigurePreset, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ConventionArg {
    Printed,
    Derived,
}

impl From<ConventionArg> for ThresholdConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Printed => ThresholdConvention::AsPrinted,
            ConventionArg::Derived => ThresholdConvention::Derived,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Printed,
    Corrected,
}

impl From<ModeArg> for CoefficientMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Printed => CoefficientMode::AsPrinted,
            ModeArg::Corrected => CoefficientMode::Corrected,
        }
    }
}

/// Settings shared by every subcommand. Unset flags fall through to the config file,
/// then to the defaults.
#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct Flags {
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    gamma3: Option<f64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    rho3: Option<f64>,
    #[arg(long, global = true)]
    chi: Option<f64>,
    #[arg(long, global = true)]
    #[serde(alias = "beta2_norm")]
    beta2_norm: Option<f64>,
    #[arg(long, global = true)]
    #[serde(alias = "beta3_norm")]
    beta3_norm: Option<f64>,
    #[arg(long, global = true)]
    #[serde(alias = "omega_norm")]
    omega_norm: Option<f64>,
    #[arg(long, global = true, value_enum)]
    #[serde(alias = "threshold_convention")]
    threshold_convention: Option<ConventionArg>,
    #[arg(long, global = true, value_enum)]
    #[serde(alias = "coefficient_mode")]
    coefficient_mode: Option<ModeArg>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[arg(short = 'o', long, global = true)]
    #[serde(alias = "out")]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Flags {
    /// Fills every unset field from `file`.
    fn layered_over(self, file: Flags) -> Flags {
        Flags {
            gamma: self.gamma.or(file.gamma),
            gamma3: self.gamma3.or(file.gamma3),
            rho: self.rho.or(file.rho),
            rho3: self.rho3.or(file.rho3),
            chi: self.chi.or(file.chi),
            beta2_norm: self.beta2_norm.or(file.beta2_norm),
            beta3_norm: self.beta3_norm.or(file.beta3_norm),
            omega_norm: self.omega_norm.or(file.omega_norm),
            threshold_convention: self.threshold_convention.or(file.threshold_convention),
            coefficient_mode: self.coefficient_mode.or(file.coefficient_mode),
            format: self.format.or(file.format),
            output: self.output.or(file.output),
            config: self.config,
        }
    }
}

/// Fully resolved inputs of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: CavityParams,
    pub beta2_norm: f64,
    pub beta3_norm: f64,
    pub omega_norm: f64,
    pub coefficient_mode: CoefficientMode,
    pub format: Option<OutputFormat>,
    pub output: Option<PathBuf>,
    pub config_file: Option<PathBuf>,
}

impl RunConfig {
    fn resolve(flags: Flags) -> Result<Self, String> {
        let flags = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                let file: Flags = toml::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
                flags.layered_over(file)
            }
            None => flags,
        };
        let reference = CavityParams::reference();
        let params = CavityParams {
            gamma: flags.gamma.unwrap_or(reference.gamma),
            gamma3: flags.gamma3.unwrap_or(reference.gamma3),
            rho: flags.rho.unwrap_or(reference.rho),
            rho3: flags.rho3.unwrap_or(reference.rho3),
            chi: flags.chi.unwrap_or(reference.chi),
            threshold_convention: flags
                .threshold_convention
                .map(Into::into)
                .unwrap_or_default(),
        };
        let report = validate(&params);
        if !report.is_ok() {
            return Err(format!("invalid parameters: {report}"));
        }
        let config = RunConfig {
            params,
            beta2_norm: flags.beta2_norm.unwrap_or(OPERATING_BETA2_NORM),
            beta3_norm: flags.beta3_norm.unwrap_or(OPERATING_BETA3_NORM),
            omega_norm: flags.omega_norm.unwrap_or(0.0),
            coefficient_mode: flags.coefficient_mode.map(Into::into).unwrap_or_default(),
            format: flags.format,
            output: flags.output,
            config_file: flags.config,
        };
        let drive = validate_drive(&DriveParams::new(config.beta2_norm, config.beta3_norm));
        if !drive.is_ok() {
            return Err(format!("invalid drive: {drive}"));
        }
        if !config.omega_norm.is_finite() {
            return Err(format!(
                "omega-norm must be finite (got {})",
                config.omega_norm
            ));
        }
        Ok(config)
    }

    pub fn drive(&self) -> DriveParams {
        DriveParams::normalized(&self.params, self.beta2_norm, self.beta3_norm)
    }

    pub fn frequency(&self) -> AnalyzingFrequency {
        AnalyzingFrequency::from_normalized(self.omega_norm, &self.params)
    }

    fn config_label(&self) -> String {
        self.config_file
            .as_deref()
            .map_or_else(|| "none".to_string(), |p| p.display().to_string())
    }

    /// Resolved configuration as a JSON object.
    fn to_json(&self) -> Map<String, Value> {
        let p = &self.params;
        let mut m = Map::new();
        m.insert("gamma".into(), json!(p.gamma));
        m.insert("gamma3".into(), json!(p.gamma3));
        m.insert("rho".into(), json!(p.rho));
        m.insert("rho3".into(), json!(p.rho3));
        m.insert("chi".into(), json!(p.chi));
        m.insert("beta2_norm".into(), json!(self.beta2_norm));
        m.insert("beta3_norm".into(), json!(self.beta3_norm));
        m.insert("omega_norm".into(), json!(self.omega_norm));
        m.insert(
            "threshold_convention".into(),
            json!(p.threshold_convention.as_str()),
        );
        m.insert(
            "coefficient_mode".into(),
            json!(self.coefficient_mode.as_str()),
        );
        m.insert("config".into(), json!(self.config_label()));
        m
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let config = match RunConfig::resolve(cli.flags) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.command {
        Command::Point => cmd_point(&config, stderr),
        Command::Sweep { variable, range } => {
            let spec = SweepSpec {
                variable,
                range,
                params: config.params,
                beta2_norm: config.beta2_norm,
                beta3_norm: config.beta3_norm,
                omega_norm: config.omega_norm,
                coefficient_mode: config.coefficient_mode,
                assumptions: Vec::new(),
            };
            cmd_sweep(&config, &spec, None, stderr)
        }
        Command::Figure { preset } => {
            let spec = SweepSpec {
                params: config.params,
                coefficient_mode: config.coefficient_mode,
                ..figure_preset(preset)
            };
            cmd_sweep(&config, &spec, Some(preset), stderr)
        }
        Command::Optimize => cmd_optimize(&config),
    };
    let text = match outcome {
        Ok(text) => text,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
        Err(Failure::Solver(err)) => {
            let _ = writeln!(stderr, "error [{}]: {err}", err.code());
            return EXIT_SOLVER;
        }
    };
    match &config.output {
        Some(path) => match write_file(path, &text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                EXIT_USAGE
            }
        },
        None => match stdout.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(_) => EXIT_USAGE,
        },
    }
}

fn write_file(path: &Path, text: &str) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.flush()
}

enum Failure {
    Usage(String),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::InvalidParams(msg) => Failure::Usage(msg),
            other => Failure::Solver(other),
        }
    }
}

fn cmd_point(config: &RunConfig, stderr: &mut dyn Write) -> Result<String, Failure> {
    let params = &config.params;
    let drive = config.drive();
    let freq = config.frequency();
    let e = evaluate_point(params, &drive, freq, config.coefficient_mode)?;
    let ss = &e.steady_state;
    let m = &e.metrics;
    if !m.stable {
        let _ = writeln!(stderr, "warning: operating point is unstable");
    }
    let oracle = output_variances_oracle(ss, params, freq).ok();
    let out = output_amplitudes(ss, &drive, params);

    let mut obj = Map::new();
    obj.insert("swept".into(), Value::Null);
    obj.insert("beta2_norm".into(), json!(config.beta2_norm));
    obj.insert("beta3_norm".into(), json!(config.beta3_norm));
    obj.insert("omega_norm".into(), json!(config.omega_norm));
    obj.insert("rho".into(), json!(params.rho));
    obj.insert("rho3".into(), json!(params.rho3));
    obj.insert("eta".into(), json!(m.eta));
    obj.insert("t_x".into(), json!(m.t_x));
    obj.insert("t_y".into(), json!(m.t_y));
    obj.insert("var_x".into(), json!(m.var_x));
    obj.insert("var_y".into(), json!(m.var_y));
    obj.insert("alpha1".into(), json!(ss.alpha1));
    obj.insert("alpha2".into(), json!(ss.alpha2));
    obj.insert("alpha3".into(), json!(ss.alpha3));
    obj.insert("residual".into(), json!(ss.residual));
    obj.insert("stable".into(), json!(m.stable));
    obj.insert("defined".into(), json!(m.defined));
    obj.insert(
        "error".into(),
        json!((!m.defined).then(|| Error::UndefinedMetric.code())),
    );
    obj.insert(
        "threshold_printed".into(),
        json!(threshold_with(params, ThresholdConvention::AsPrinted)),
    );
    obj.insert(
        "threshold_derived".into(),
        json!(threshold_with(params, ThresholdConvention::Derived)),
    );
    obj.insert("var_x_oracle".into(), json!(oracle.map(|v| v.var_x)));
    obj.insert("var_y_oracle".into(), json!(oracle.map(|v| v.var_y)));
    obj.insert("branch_count".into(), json!(ss.branch_count));
    obj.insert("a1_out".into(), json!(out.a1_out));
    obj.insert("a2_out".into(), json!(out.a2_out));
    obj.insert("a3_out".into(), json!(out.a3_out));
    obj.insert(
        "manley_rowe_defect".into(),
        json!(manley_rowe_defect(ss, &drive, params)),
    );
    for (k, v) in config.to_json() {
        obj.entry(k).or_insert(v);
    }
    obj.insert("assumptions".into(), json!(Vec::<String>::new()));

    match config.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => Ok(json_text(&Value::Object(obj))),
        OutputFormat::Csv => {
            let row = SweepRow {
                swept: f64::NAN,
                beta2_norm: config.beta2_norm,
                beta3_norm: config.beta3_norm,
                omega_norm: config.omega_norm,
                rho: params.rho,
                rho3: params.rho3,
                eta: m.eta,
                t_x: m.t_x,
                t_y: m.t_y,
                var_x: Some(m.var_x),
                var_y: Some(m.var_y),
                alpha1: Some(ss.alpha1),
                alpha2: Some(ss.alpha2),
                alpha3: Some(ss.alpha3),
                residual: Some(ss.residual),
                stable: Some(m.stable),
                defined: m.defined,
                error: (!m.defined).then(|| Error::UndefinedMetric.code()),
            };
            Ok(csv_text(config, "point", &[], &[row]))
        }
    }
}

fn cmd_sweep(
    config: &RunConfig,
    spec: &SweepSpec,
    preset: Option<FigurePreset>,
    stderr: &mut dyn Write,
) -> Result<String, Failure> {
    let rows = run_sweep(spec)?;
    let unstable = rows.iter().filter(|r| r.stable == Some(false)).count();
    if unstable > 0 {
        let _ = writeln!(
            stderr,
            "warning: {unstable} of {} points are unstable",
            rows.len()
        );
    }
    let label = match preset {
        Some(p) => format!("figure {p}"),
        None => "sweep".to_string(),
    };
    let describe = format!("{label}, variable={}, range={}", spec.variable, spec.range);
    // The resolved fixed values are those of the spec, which a preset may override.
    let resolved = RunConfig {
        beta2_norm: spec.beta2_norm,
        beta3_norm: spec.beta3_norm,
        omega_norm: spec.omega_norm,
        ..config.clone()
    };
    match config.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => Ok(csv_text(&resolved, &describe, &spec.assumptions, &rows)),
        OutputFormat::Json => {
            let mut meta = resolved.to_json();
            meta.insert("run".into(), json!(describe));
            meta.insert("assumptions".into(), json!(spec.assumptions));
            let rows: Vec<Value> = rows.iter().map(row_json).collect();
            Ok(json_text(&json!({ "meta": meta, "rows": rows })))
        }
    }
}

fn cmd_optimize(config: &RunConfig) -> Result<String, Failure> {
    let params = &config.params;
    let opt = optimize_idler(
        params,
        config.drive().beta3,
        config.frequency(),
        config.coefficient_mode,
    )?;
    let mut obj = Map::new();
    obj.insert("beta2_star".into(), json!(opt.beta2_star));
    obj.insert("beta2_star_norm".into(), json!(opt.beta2_star_norm));
    obj.insert("eta".into(), json!(opt.metrics.eta));
    obj.insert("t_x".into(), json!(opt.metrics.t_x));
    obj.insert("t_y".into(), json!(opt.metrics.t_y));
    obj.insert("stable".into(), json!(opt.metrics.stable));
    obj.insert("config".into(), Value::Object(config.to_json()));
    Ok(json_text(&Value::Object(obj)))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn row_json(r: &SweepRow) -> Value {
    serde_json::to_value(r).expect("rows always serialize")
}

/// `{:.16e}` gives 17 significant digits, independent of locale.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn csv_meta_line(config: &RunConfig, run: &str, assumptions: &[String]) -> String {
    let p = &config.params;
    format!(
        "# meta: threshold_convention={}, coefficient_mode={}, assumptions=[{}], config={{run={run}, gamma={}, gamma3={}, rho={}, rho3={}, chi={}, beta2_norm={}, beta3_norm={}, omega_norm={}, threshold={}, file={}}}",
        p.threshold_convention,
        config.coefficient_mode,
        assumptions.join("; "),
        p.gamma,
        p.gamma3,
        p.rho,
        p.rho3,
        p.chi,
        config.beta2_norm,
        config.beta3_norm,
        config.omega_norm,
        p.threshold(),
        config.config_label(),
    )
}

fn csv_text(config: &RunConfig, run: &str, assumptions: &[String], rows: &[SweepRow]) -> String {
    let mut s = csv_meta_line(config, run, assumptions);
    s.push('\n');
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.swept),
            num(r.beta2_norm),
            num(r.beta3_norm),
            num(r.omega_norm),
            num(r.rho),
            num(r.rho3),
            opt_num(r.eta),
            opt_num(r.t_x),
            opt_num(r.t_y),
            opt_num(r.var_x),
            opt_num(r.var_y),
            opt_num(r.alpha1),
            opt_num(r.alpha2),
            opt_num(r.alpha3),
            opt_num(r.residual),
            r.stable.map(|b| b.to_string()).unwrap_or_default(),
            r.defined,
            r.error.unwrap_or(""),
        );
    }
    s
}
