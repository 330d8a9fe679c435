//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 hung universe.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use admissible_core::dynamics::{collapse_probability, deferred_probability, run_ensemble, Scenario};
use admissible_core::experiments::{builtin_scenario, zeno_scenario, ZenoParams, BUILTIN_NAMES};
use admissible_core::scenario_file::{FileError, ScenarioFile};
use admissible_core::SimError;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_HUNG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "admissible", version, about = "Admissibility-constrained collapse simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZenoMode {
    Deferred,
    Collapse,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble of trajectories and report terminal qualia frequencies.
    Run {
        /// Scenario file path or `builtin:<name>`.
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trajectories: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format; defaults to text on stdout and json with --out.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Tabulate pulsed-decay survival for deferred and collapsing readout.
    Zeno {
        /// Rotation per pulse in radians, in [0, π/2].
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 2)]
        pulses: usize,
        #[arg(long, value_enum, default_value_t = ZenoMode::Both)]
        mode: ZenoMode,
        /// Hold the total rotation fixed: row N uses theta = total / N.
        #[arg(long)]
        total_angle: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a scenario file against the schema and scenario invariants.
    Validate {
        scenario: String,
    },
    /// Write a builtin scenario as a JSON document.
    Export {
        /// Builtin name, with or without the `builtin:` prefix.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match (e.root(), &e) {
            (SimError::HungUniverse, SimError::Trajectory { index, .. }) => Self {
                code: EXIT_HUNG,
                message: format!("hung universe in trajectory {index}: no admissible candidate overlaps the state"),
            },
            (SimError::HungUniverse, _) => Self {
                code: EXIT_HUNG,
                message: e.to_string(),
            },
            _ => Failure::input(e.to_string()),
        }
    }
}

/// Formats like C's `%.{digits}g`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits.saturating_sub(1), x);
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        return format!("{}e{}", trim_zeros(mantissa), e);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Loads `builtin:<name>` or a JSON file, returning the scenario and the
/// digest of its document.
fn load(source: &str) -> Result<(Scenario, String), Failure> {
    let doc = match source.strip_prefix("builtin:") {
        Some(name) => ScenarioFile::from_scenario(&builtin_scenario(name)?),
        None => ScenarioFile::read(std::path::Path::new(source))?,
    };
    let sc = doc.to_scenario()?;
    Ok((sc, doc.digest()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeLine {
    pub qualia: String,
    pub count: u64,
    pub frequency: f64,
    pub three_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub digest: String,
    pub seed: u64,
    pub trajectories: u64,
    pub outcomes: Vec<OutcomeLine>,
    pub projection_events: u64,
    pub lints: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("scenario          {}\n", self.scenario));
        s.push_str(&format!("digest            {}\n", self.digest));
        s.push_str(&format!("seed              {}\n", self.seed));
        s.push_str(&format!("trajectories      {}\n", self.trajectories));
        for lint in &self.lints {
            s.push_str(&format!("warning           {lint}\n"));
        }
        s.push_str(&format!("{:<16}  {:>10}  {:>10}  {:>10}\n", "qualia", "count", "frequency", "±3σ"));
        for o in &self.outcomes {
            s.push_str(&format!(
                "{:<16}  {:>10}  {:>10}  {:>10}\n",
                o.qualia,
                o.count,
                fmt_sig(o.frequency, 6),
                fmt_sig(o.three_sigma, 6)
            ));
        }
        s.push_str(&format!("projection events {}\n", self.projection_events));
        s.push_str(&format!("wall time         {} s\n", fmt_sig(self.wall_time_s, 6)));
        s
    }
}

pub fn run_report(source: &str, seed: u64, trajectories: u64, workers: usize) -> Result<RunReport, (i32, String)> {
    let go = || -> Result<RunReport, Failure> {
        let (sc, digest) = load(source)?;
        let started = Instant::now();
        let stats = run_ensemble(&sc, trajectories, seed, workers)?;
        Ok(RunReport {
            scenario: if sc.name().is_empty() { source.to_string() } else { sc.name().to_string() },
            digest,
            seed,
            trajectories,
            outcomes: stats
                .rows()
                .into_iter()
                .map(|r| OutcomeLine {
                    qualia: r.qualia.to_string(),
                    count: r.count,
                    frequency: r.frequency,
                    three_sigma: 3.0 * r.sigma,
                })
                .collect(),
            projection_events: stats.projection_events,
            lints: sc.lints(),
            wall_time_s: started.elapsed().as_secs_f64(),
        })
    };
    go().map_err(|f| (f.code, f.message))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoRow {
    pub pulses: usize,
    pub theta: f64,
    pub deferred: Option<f64>,
    pub collapse: Option<f64>,
    pub abs_diff: Option<f64>,
}

pub fn zeno_table(theta: f64, pulses: usize, mode: ZenoMode, total_angle: Option<f64>) -> Result<Vec<ZenoRow>, String> {
    let max = std::f64::consts::FRAC_PI_2;
    if let Some(total) = total_angle {
        if !(0.0..=max).contains(&total) {
            return Err(format!("--total-angle {total} outside [0, π/2]"));
        }
    } else if !(0.0..=max).contains(&theta) {
        return Err(format!("--theta {theta} outside [0, π/2]"));
    }
    let first = if total_angle.is_some() { 1 } else { 0 };
    let mut rows = Vec::new();
    for n in first..=pulses {
        let theta_n = total_angle.map_or(theta, |t| t / n as f64);
        let z = ZenoParams::new(theta_n, n).map_err(|e| e.to_string())?;
        let target = z.survival_label();
        let deferred = match mode {
            ZenoMode::Collapse => None,
            _ => Some(
                deferred_probability(&zeno_scenario(z, true).map_err(|e| e.to_string())?, &target)
                    .map_err(|e| e.to_string())?,
            ),
        };
        let collapse = match mode {
            ZenoMode::Deferred => None,
            _ => Some(
                collapse_probability(&zeno_scenario(z, false).map_err(|e| e.to_string())?, &target)
                    .map_err(|e| e.to_string())?,
            ),
        };
        let abs_diff = deferred.zip(collapse).map(|(d, c)| (d - c).abs());
        rows.push(ZenoRow {
            pulses: n,
            theta: theta_n,
            deferred,
            collapse,
            abs_diff,
        });
    }
    Ok(rows)
}

fn zeno_text(rows: &[ZenoRow]) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| fmt_sig(v, 6));
    let mut s = format!("{:>6}  {:>10}  {:>10}  {:>10}  {:>10}\n", "N", "theta", "deferred", "collapse", "|diff|");
    for r in rows {
        s.push_str(&format!(
            "{:>6}  {:>10}  {:>10}  {:>10}  {:>10}\n",
            r.pulses,
            fmt_sig(r.theta, 6),
            opt(r.deferred),
            opt(r.collapse),
            r.abs_diff.map_or_else(|| "-".to_string(), |d| format!("{d:.3e}"))
        ));
    }
    s
}

fn write_output(out: &Option<PathBuf>, body: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| Failure::input(format!("cannot write output: {e}"))),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            trajectories,
            workers,
            out,
            format,
        } => {
            let report = run_report(&scenario, seed, trajectories, workers).map_err(|(code, message)| Failure { code, message })?;
            let format = format.unwrap_or(if out.is_some() { Format::Json } else { Format::Text });
            let body = match format {
                Format::Text => report.to_text(),
                Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
            };
            write_output(&out, &body, stdout)
        }
        Command::Zeno {
            theta,
            pulses,
            mode,
            total_angle,
            format,
        } => {
            let rows = zeno_table(theta, pulses, mode, total_angle).map_err(Failure::input)?;
            let body = match format {
                Format::Text => zeno_text(&rows),
                Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
            };
            write_output(&None, &body, stdout)
        }
        Command::Validate { scenario } => {
            let (sc, digest) = load(&scenario)?;
            let mut body = format!("ok {digest}\n");
            for lint in sc.lints() {
                body.push_str(&format!("warning: {lint}\n"));
            }
            write_output(&None, &body, stdout)
        }
        Command::Export { name, out } => {
            let name = name.strip_prefix("builtin:").unwrap_or(&name);
            let sc = builtin_scenario(name).map_err(|_| {
                Failure::input(format!("unknown builtin `{name}` (known: {})", BUILTIN_NAMES.join(", ")))
            })?;
            let body = ScenarioFile::from_scenario(&sc).to_json_pretty() + "\n";
            write_output(&out, &body, stdout)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
