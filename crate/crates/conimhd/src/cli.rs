//! Command-line front end.
//!
//! Five subcommands: `speeds` (one-state spectrum report), `classify`
//! (type-map CSV over a field), `residual` (residual CSV over a field),
//! `pseudo` (pseudo-time spectrum for one state and direction), and `verify`
//! (the full oracle suite with a JSON report). Configuration comes from a
//! TOML file plus flag overrides; flags win.
//!
//! Exit codes: 0 success, 1 verification-suite failure, 2 input/config
//! error, 3 numerical error.

use crate::characteristics::{self, FlowType, Spectrum};
use crate::geometry::Chart;
use crate::pseudotime::{self, Direction};
use crate::residual::{self, fmt_f64, FieldGrid, MetricGrid};
use crate::state::{GasLaw, StateRecord, SurfaceState};
use crate::verify::{self, PencilValue};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error in {operation}: {message}")]
    Numerical {
        operation: &'static str,
        message: String,
    },
    #[error("verification failed; see report")]
    SuiteFailure,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SuiteFailure => 1,
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    fn numerical(operation: &'static str, err: impl std::fmt::Display) -> CliError {
        CliError::Numerical {
            operation,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "conimhd",
    about = "Conical ideal-MHD characteristic analysis on the unit sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady eigenvalues, closed forms, quartic residuals, and type for one state (JSON).
    Speeds {
        /// State as an inline JSON record {"rho":…, "v1":…, …, "mu":…, "gamma":…}.
        #[arg(long)]
        state: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Chart point "xi1,xi2" at which to take the metric (default: domain center).
        #[arg(long)]
        xi: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Absolute |Im λ| threshold for the type label.
        #[arg(long = "tol-imag")]
        tol_imag: Option<f64>,
    },
    /// Type-map CSV for a field; prints H/E/D node counts.
    Classify {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "tol-imag")]
        tol_imag: Option<f64>,
    },
    /// Residual CSV for a field; prints the max-norm per equation.
    Residual {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pseudo-time speeds, c_f, c_s, and formula/numeric deviation (JSON).
    Pseudo {
        #[arg(long)]
        state: String,
        /// Covariant direction "w1,w2" (normalized internally).
        #[arg(long)]
        w: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        xi: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs every verification suite and writes the JSON report.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub chart: ChartConfig,
    #[serde(default)]
    pub gas: GasConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Embedding name when kind = "embedding".
    pub name: Option<String>,
    #[serde(default = "default_theta")]
    pub theta: [f64; 2],
    #[serde(default = "default_phi")]
    pub phi: [f64; 2],
    #[serde(default = "default_true")]
    pub periodic_phi: bool,
    #[serde(default = "default_theta_min")]
    pub theta_min: f64,
    /// Embedding charts: ξ-domain rectangle and per-axis periodicity.
    pub domain: Option<[[f64; 2]; 2]>,
    pub periodic: Option<[bool; 2]>,
}

fn default_kind() -> String {
    "spherical".into()
}
fn default_theta() -> [f64; 2] {
    [0.0, std::f64::consts::PI]
}
fn default_phi() -> [f64; 2] {
    [0.0, 2.0 * std::f64::consts::PI]
}
fn default_true() -> bool {
    true
}
fn default_theta_min() -> f64 {
    crate::geometry::DEFAULT_THETA_MIN
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig {
            kind: default_kind(),
            name: None,
            theta: default_theta(),
            phi: default_phi(),
            periodic_phi: true,
            theta_min: default_theta_min(),
            domain: None,
            periodic: None,
        }
    }
}

impl ChartConfig {
    pub fn build(&self) -> Result<Chart, CliError> {
        match self.kind.as_str() {
            "spherical" => {
                Chart::spherical_clipped(self.theta, self.phi, self.periodic_phi, self.theta_min)
                    .map_err(|e| CliError::Config(e.to_string()))
            }
            "embedding" => {
                let name = self
                    .name
                    .as_deref()
                    .ok_or_else(|| CliError::Config("embedding chart needs a name".into()))?;
                let domain = self.domain.unwrap_or([self.theta, self.phi]);
                let periodic = self.periodic.unwrap_or([false, self.periodic_phi]);
                Chart::embedding(name, domain, periodic)
                    .map_err(|e| CliError::Config(e.to_string()))
            }
            other => Err(CliError::Config(format!(
                "unknown chart kind '{other}' (expected 'spherical' or 'embedding')"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
}

fn default_gamma() -> f64 {
    1.4
}
fn default_mu() -> f64 {
    1.0
}

impl Default for GasConfig {
    fn default() -> Self {
        GasConfig {
            gamma: default_gamma(),
            mu: default_mu(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n1: usize,
    #[serde(default = "default_n")]
    pub n2: usize,
}

fn default_n() -> usize {
    64
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n1: default_n(),
            n2: default_n(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Absolute |Im λ| threshold; when absent, 1e−7·max|λ| floored at 1e−9.
    pub tau_imag: Option<f64>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if config.grid.n1 < 3 || config.grid.n2 < 3 {
        return Err(CliError::Config("grid dims must be at least 3".into()));
    }
    if let Some(t) = config.tolerances.tau_imag {
        if !(t > 0.0) {
            return Err(CliError::Config("tau_imag must be positive".into()));
        }
    }
    if config.gas.gamma <= 1.0 {
        return Err(CliError::Config("gamma must exceed 1".into()));
    }
    if config.gas.mu <= 0.0 {
        return Err(CliError::Config("mu must be positive".into()));
    }
    Ok(config)
}

fn parse_pair(raw: &str, what: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!(
            "{what} must be 'a,b', got '{raw}'"
        )));
    }
    let a = parts[0]
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{what}: {e}")))?;
    let b = parts[1]
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{what}: {e}")))?;
    Ok([a, b])
}

fn parse_state(raw: &str) -> Result<(SurfaceState, GasLaw), CliError> {
    let record: StateRecord =
        serde_json::from_str(raw).map_err(|e| CliError::Config(format!("--state JSON: {e}")))?;
    record
        .into_parts()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn metric_at_point(
    chart: &Chart,
    xi: Option<&str>,
) -> Result<(crate::geometry::MetricData, [f64; 2]), CliError> {
    let point = match xi {
        Some(raw) => parse_pair(raw, "--xi")?,
        None => [
            0.5 * (chart.domain[0][0] + chart.domain[0][1]),
            0.5 * (chart.domain[1][0] + chart.domain[1][1]),
        ],
    };
    let metric = chart
        .metric_at(point)
        .map_err(|e| CliError::numerical("metric_at", e))?;
    Ok((metric, point))
}

fn write_output(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = out {
        fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    writeln!(stdout, "{text}").map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON payloads
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct EigenvalueJson {
    re: f64,
    im: f64,
    infinite: bool,
}

fn eigenvalues_json(spectrum: &Spectrum) -> Vec<EigenvalueJson> {
    spectrum
        .eigenvalues
        .iter()
        .map(|v| match v {
            PencilValue::Finite(z) => EigenvalueJson {
                re: z.re,
                im: z.im,
                infinite: false,
            },
            PencilValue::Infinite => EigenvalueJson {
                re: f64::INFINITY,
                im: 0.0,
                infinite: true,
            },
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SpeedsReport {
    xi: [f64; 2],
    #[serde(rename = "type")]
    flow_type: String,
    max_imag: f64,
    n_infinite: usize,
    eigenvalues: Vec<EigenvalueJson>,
    /// Streamline/Alfvén closed forms; absent when a denominator vanishes.
    explicit: Option<[f64; 4]>,
    explicit_error: Option<String>,
    /// Relative deviation of each closed form from its matched eigenvalue.
    explicit_deviation: Option<[f64; 4]>,
    /// Quartic residual at each of the four deflated roots (None where the
    /// relation's preconditions fail).
    quartic_residuals: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
struct PseudoReport {
    xi: [f64; 2],
    w: [f64; 2],
    speeds: [f64; 8],
    c_fast: f64,
    c_slow: f64,
    /// max |Im| of the numeric spectrum, scale-normalized.
    numeric_max_imag: f64,
    /// max sorted formula/numeric mismatch, scale-normalized.
    formula_numeric_deviation: f64,
}

// ---------------------------------------------------------------------------
// Command bodies
// ---------------------------------------------------------------------------

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Speeds {
            state,
            config,
            xi,
            out,
            tol_imag,
        } => cmd_speeds(
            &state,
            config.as_deref(),
            xi.as_deref(),
            out.as_deref(),
            tol_imag,
            stdout,
        ),
        Command::Classify {
            field,
            config,
            out,
            tol_imag,
        } => cmd_classify(&field, config.as_deref(), out.as_deref(), tol_imag, stdout),
        Command::Residual { field, config, out } => {
            cmd_residual(&field, config.as_deref(), out.as_deref(), stdout)
        }
        Command::Pseudo {
            state,
            w,
            config,
            xi,
            out,
        } => cmd_pseudo(
            &state,
            &w,
            config.as_deref(),
            xi.as_deref(),
            out.as_deref(),
            stdout,
        ),
        Command::Verify { seed, out } => cmd_verify(seed, out.as_deref(), stdout),
    }
}

fn cmd_speeds(
    state_json: &str,
    config: Option<&Path>,
    xi: Option<&str>,
    out: Option<&Path>,
    tol_imag: Option<f64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = load_config(config)?;
    let (state, gas) = parse_state(state_json)?;
    let chart = config.chart.build()?;
    let (metric, point) = metric_at_point(&chart, xi)?;
    let tau = tol_imag.or(config.tolerances.tau_imag);
    let spectrum = characteristics::full_spectrum_with_tau(&state, &metric, &gas, tau)
        .map_err(|e| CliError::numerical("full_spectrum", e))?;

    let (explicit, explicit_error, explicit_deviation, quartic_residuals) =
        match characteristics::explicit_speeds(&state, &metric) {
            Ok(values) => {
                let (matched, deflated) = characteristics::deflate(&spectrum, &values);
                let mut deviation = [0.0f64; 4];
                for (k, (cf, num)) in values.iter().zip(&matched).enumerate() {
                    deviation[k] =
                        (num - num_complex::Complex64::new(*cf, 0.0)).norm() / cf.abs().max(1e-9);
                }
                let residuals = deflated
                    .iter()
                    .map(|lambda| {
                        characteristics::quartic_residual_complex(&state, &metric, &gas, *lambda)
                            .ok()
                    })
                    .collect();
                (Some(values), None, Some(deviation), residuals)
            }
            Err(e) => (None, Some(e.to_string()), None, Vec::new()),
        };

    let report = SpeedsReport {
        xi: point,
        flow_type: spectrum.flow_type.letter().to_string(),
        max_imag: spectrum.max_imag,
        n_infinite: spectrum.n_infinite,
        eigenvalues: eigenvalues_json(&spectrum),
        explicit,
        explicit_error,
        explicit_deviation,
        quartic_residuals,
    };
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    write_output(out, &text, stdout)
}

fn load_field(field_path: &Path, config: &RunConfig) -> Result<FieldGrid, CliError> {
    let chart = config.chart.build()?;
    let file = fs::File::open(field_path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", field_path.display())))?;
    residual::read_field_csv(
        file,
        chart,
        GasLaw::Ideal {
            gamma: config.gas.gamma,
        },
        config.gas.mu,
    )
    .map_err(|e| CliError::Config(format!("{}: {e}", field_path.display())))
}

fn cmd_classify(
    field_path: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    tol_imag: Option<f64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = load_config(config)?;
    let field = load_field(field_path, &config)?;
    let tau = tol_imag.or(config.tolerances.tau_imag);
    let entries =
        characteristics::type_map(&field, tau).map_err(|e| CliError::numerical("type_map", e))?;

    let mut counts = [0usize; 4]; // H, E, D, errors
    for entry in &entries {
        match entry {
            Ok(sp) => match sp.flow_type {
                FlowType::Hyperbolic => counts[0] += 1,
                FlowType::Elliptic => counts[1] += 1,
                FlowType::Degenerate => counts[2] += 1,
            },
            Err(_) => counts[3] += 1,
        }
    }
    let mut buf = Vec::new();
    characteristics::write_type_map_csv(&field.grid, &entries, &mut buf)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = out {
        fs::write(path, &buf)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    } else {
        stdout
            .write_all(&buf)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    writeln!(
        stdout,
        "nodes: H={} E={} D={} errors={}",
        counts[0], counts[1], counts[2], counts[3]
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}

fn cmd_residual(
    field_path: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = load_config(config)?;
    let field = load_field(field_path, &config)?;
    let metrics = MetricGrid::compute(&field.chart, &field.grid)
        .map_err(|e| CliError::numerical("metric_at", e))?;
    let residuals = residual::assemble_residual(&field, &metrics)
        .map_err(|e| CliError::numerical("assemble_residual", e))?;

    let mut buf = Vec::new();
    residual::write_residual_csv(&field.grid, &residuals, &mut buf)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = out {
        fs::write(path, &buf)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    } else {
        stdout
            .write_all(&buf)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let names = [
        "mass", "mom1", "mom2", "mom3", "energy", "mag1", "mag2", "mag3",
    ];
    let mut norms = [0.0f64; 8];
    for r in &residuals {
        for k in 0..8 {
            norms[k] = norms[k].max(r.0[k].abs());
        }
    }
    for (name, norm) in names.iter().zip(&norms) {
        writeln!(stdout, "max |r_{name}| = {}", fmt_f64(*norm))
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn cmd_pseudo(
    state_json: &str,
    w_raw: &str,
    config: Option<&Path>,
    xi: Option<&str>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = load_config(config)?;
    let (state, gas) = parse_state(state_json)?;
    let chart = config.chart.build()?;
    let (metric, point) = metric_at_point(&chart, xi)?;
    let w = parse_pair(w_raw, "--w")?;
    let direction = Direction::new(w[0], w[1]);
    let formula = pseudotime::pseudo_speeds_formula(&state, &metric, &gas, &direction)
        .map_err(|e| CliError::numerical("pseudo_speeds_formula", e))?;
    let numeric = pseudotime::pseudo_speeds_numeric(&state, &metric, &gas, &direction)
        .map_err(|e| CliError::numerical("pseudo_speeds_numeric", e))?;

    let scale = formula.speeds.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let numeric_max_imag = numeric.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    let mut reals: Vec<f64> = numeric.iter().map(|z| z.re).collect();
    reals.sort_by(f64::total_cmp);
    let deviation = reals
        .iter()
        .zip(&formula.speeds)
        .map(|(n, f)| (n - f).abs() / scale)
        .fold(0.0, f64::max);
    let normalized = direction
        .normalized(&metric)
        .map_err(|e| CliError::numerical("direction_normalize", e))?;

    let report = PseudoReport {
        xi: point,
        w: normalized.w,
        speeds: formula.speeds,
        c_fast: formula.c_fast,
        c_slow: formula.c_slow,
        numeric_max_imag,
        formula_numeric_deviation: deviation,
    };
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    write_output(out, &text, stdout)
}

fn cmd_verify(seed: u64, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = verify::run_all_suites(seed);
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    write_output(out, &text, stdout)?;
    for suite in &report.suites {
        writeln!(
            stdout,
            "{}: {} (cases {}, max deviation {:.3e}, tolerance {:.1e})",
            suite.name,
            if suite.pass { "pass" } else { "FAIL" },
            suite.cases,
            suite.max_deviation,
            suite.tolerance,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::SuiteFailure)
    }
}
