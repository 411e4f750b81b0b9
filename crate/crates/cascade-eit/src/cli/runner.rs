//! Dispatch from a validated configuration to the solvers, plus the CSV,
//! manifest, and validation-report writers. All computation finishes before
//! any file is touched, and numbers are written in the shortest decimal form
//! that round-trips, so identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig, TransitionName};
use super::CliError;
use crate::correlations::{g2, Transition};
use crate::lindblad::build_liouvillian;
use crate::params::SystemParams;
use crate::spectra::{steady_row, sweep_probe_detuning};
use crate::steady::solve_steady_state;
use crate::trajectory::{channel_rate_statistics, g2_and_steady_from_trajectories};

/// Delays at which the validate mode compares the stochastic oracle against
/// the master-equation correlation curve.
const VALIDATE_TAUS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
/// Observation span for the validate mode's jump-rate bookkeeping check.
const VALIDATE_RATE_WINDOW: f64 = 50.0;
/// Monte Carlo agreement margin: three standard errors plus round-off slack.
const SE_MULTIPLE: f64 = 3.0;
const ABS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CliOptions {
    /// Directory receiving all output files; created if missing.
    pub output_dir: PathBuf,
    /// Overrides the config's seed (validate mode only).
    pub seed: Option<u64>,
    /// Overrides the config's trajectory count (validate mode only).
    pub ntraj: Option<usize>,
}

impl Default for CliOptions {
    fn default() -> Self {
        CliOptions { output_dir: PathBuf::from("."), seed: None, ntraj: None }
    }
}

/// Reproducibility record written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config: RunConfig,
    pub version: String,
    pub duration_ms: u64,
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Files written, primary output first.
    pub files: Vec<PathBuf>,
    /// True when validate mode ran and at least one oracle check failed.
    pub checks_failed: bool,
}

/// Executes one configured run. The caller maps `CliError` and
/// `checks_failed` onto process exit codes.
pub fn run(config: &RunConfig, opts: &CliOptions) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let resolved = merge_flags(config, opts)?;
    let start = Instant::now();

    let (content, checks_failed) = match resolved.mode {
        Mode::Steady => (steady_csv(&resolved)?, false),
        Mode::Spectrum => (spectrum_csv(&resolved)?, false),
        Mode::G2 => (g2_csv(&resolved)?, false),
        Mode::Validate => validate_report(&resolved)?,
    };

    fs::create_dir_all(&opts.output_dir)
        .map_err(|e| io_error(&opts.output_dir, &e))?;
    let out_path = opts.output_dir.join(&resolved.output);
    fs::write(&out_path, content).map_err(|e| io_error(&out_path, &e))?;

    let manifest = Manifest {
        config: resolved.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_ms: start.elapsed().as_millis() as u64,
    };
    let manifest_path = opts
        .output_dir
        .join(format!("{}.manifest.json", resolved.output));
    let manifest_text = serde_json::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail");
    fs::write(&manifest_path, manifest_text + "\n")
        .map_err(|e| io_error(&manifest_path, &e))?;

    Ok(RunOutcome { files: vec![out_path, manifest_path], checks_failed })
}

fn io_error(path: &Path, err: &std::io::Error) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}

/// Seed and trajectory count may come from the config or the command line
/// (flags win); they are meaningless outside validate mode.
fn merge_flags(config: &RunConfig, opts: &CliOptions) -> Result<RunConfig, CliError> {
    let mut resolved = config.clone();
    if config.mode == Mode::Validate {
        if opts.seed.is_some() {
            resolved.seed = opts.seed;
        }
        if opts.ntraj.is_some() {
            resolved.ntraj = opts.ntraj;
        }
        if resolved.seed.is_none() {
            return Err(CliError::Config(
                "validate mode needs a seed (config field `seed` or --seed)".to_string(),
            ));
        }
        if resolved.ntraj.is_none() {
            return Err(CliError::Config(
                "validate mode needs a trajectory count (config field `ntraj` or --ntraj)"
                    .to_string(),
            ));
        }
    } else {
        if opts.seed.is_some() {
            return Err(CliError::Config(
                "--seed only applies to validate mode".to_string(),
            ));
        }
        if opts.ntraj.is_some() {
            return Err(CliError::Config(
                "--ntraj only applies to validate mode".to_string(),
            ));
        }
    }
    Ok(resolved)
}

/// Shortest decimal representation that parses back to the same double.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Sweep members as (column label suffix, parameter set) pairs; a run
/// without a sweep is a single unlabeled member.
fn members(config: &RunConfig) -> Result<Vec<(Option<String>, SystemParams)>, CliError> {
    match &config.sweep {
        None => Ok(vec![(None, config.params)]),
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| {
                let p = config
                    .params
                    .with_field(&sweep.field, v)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok((Some(format!("{}={}", sweep.field, fmt_f64(v))), p))
            })
            .collect(),
    }
}

fn column_name(base: &str, label: &Option<String>) -> String {
    match label {
        None => base.to_string(),
        Some(l) => format!("{base}_{l}"),
    }
}

fn csv_table(first_header: &str, first: &[f64], columns: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    out.push_str(first_header);
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, &x) in first.iter().enumerate() {
        out.push_str(&fmt_f64(x));
        for (_, values) in columns {
            out.push(',');
            out.push_str(&fmt_f64(values[i]));
        }
        out.push('\n');
    }
    out
}

fn steady_csv(config: &RunConfig) -> Result<String, CliError> {
    let l = build_liouvillian(&config.params)?;
    let sol = solve_steady_state(&l)?;
    let row = steady_row(sol.rho_ss.matrix());
    let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
    Ok(format!(
        "rho11,rho22,rho33,re_rho12,im_rho12,re_rho13,im_rho13,re_rho23,im_rho23,pop_diff_21\n{}\n",
        cells.join(",")
    ))
}

fn spectrum_csv(config: &RunConfig) -> Result<String, CliError> {
    let grid = config.grid.as_ref().expect("validated").values();
    let mut columns = Vec::new();
    for (label, params) in members(config)? {
        let curve = sweep_probe_detuning(&params, &grid)?;
        columns.push((column_name("im_rho21", &label), curve.im_rho21));
    }
    Ok(csv_table("delta_p", &grid, &columns))
}

fn g2_column_base(transition: Transition) -> &'static str {
    // The column carries the emitting level's label: the probe line radiates
    // from level 2, the pump line from level 3.
    match transition {
        Transition::Probe => "g22",
        Transition::Pump => "g33",
    }
}

fn g2_csv(config: &RunConfig) -> Result<String, CliError> {
    let taus = config.grid.as_ref().expect("validated").values();
    let transition = config
        .transition
        .unwrap_or(TransitionName::Probe)
        .to_transition();
    let base = g2_column_base(transition);
    let mut columns = Vec::new();
    for (label, params) in members(config)? {
        let l = build_liouvillian(&params)?;
        let sol = solve_steady_state(&l)?;
        let curve = g2(&l, &sol, transition, &taus)?;
        columns.push((column_name(base, &label), curve.values));
    }
    Ok(csv_table("tau", &taus, &columns))
}

struct Check {
    passed: bool,
    line: String,
}

fn check_agreement(name: String, estimate: f64, se: f64, exact: f64) -> Check {
    let passed = (estimate - exact).abs() <= SE_MULTIPLE * se + ABS_SLACK;
    let status = if passed { "PASS" } else { "FAIL" };
    Check {
        passed,
        line: format!(
            "{status} {name}: oracle {} (se {}) vs solver {}",
            fmt_f64(estimate),
            fmt_f64(se),
            fmt_f64(exact)
        ),
    }
}

/// Runs the full oracle battery for one parameter set and renders a report.
/// Returns the report text and whether any check failed.
fn validate_report(config: &RunConfig) -> Result<(String, bool), CliError> {
    let params = config.params;
    let seed = config.seed.expect("merged");
    let n = config.ntraj.expect("merged");
    let transition = config
        .transition
        .unwrap_or(TransitionName::Probe)
        .to_transition();
    let g2_name = g2_column_base(transition);

    let l = build_liouvillian(&params)?;
    let sol = solve_steady_state(&l)?;
    let exact_pops = sol.rho_ss.populations();
    let exact_g2 = g2(&l, &sol, transition, &VALIDATE_TAUS)?;

    let (g2_est, pop_est) =
        g2_and_steady_from_trajectories(&params, transition, &VALIDATE_TAUS, n, seed)?;
    let rates = channel_rate_statistics(&params, VALIDATE_RATE_WINDOW, n, seed)?;

    let mut checks = Vec::new();
    for (level, est) in pop_est.iter().enumerate() {
        checks.push(check_agreement(
            format!("steady population level {}", level + 1),
            est.mean,
            est.std_error,
            exact_pops[level],
        ));
    }
    for (est, (&tau, &exact)) in g2_est
        .iter()
        .zip(VALIDATE_TAUS.iter().zip(exact_g2.values.iter()))
    {
        checks.push(check_agreement(
            format!("{g2_name}(tau={})", fmt_f64(tau)),
            est.mean,
            est.std_error,
            exact,
        ));
    }
    for s in &rates {
        let passed =
            (s.observed_rate - s.predicted_rate).abs() <= SE_MULTIPLE * s.difference_se + ABS_SLACK;
        let status = if passed { "PASS" } else { "FAIL" };
        checks.push(Check {
            passed,
            line: format!(
                "{status} jump rate {}->{}: observed {} vs predicted {} (se of difference {})",
                s.channel.from + 1,
                s.channel.to + 1,
                fmt_f64(s.observed_rate),
                fmt_f64(s.predicted_rate),
                fmt_f64(s.difference_se)
            ),
        });
    }

    let total = checks.len();
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut report = String::new();
    report.push_str("oracle validation report\n");
    report.push_str(&format!("version: {}\n", env!("CARGO_PKG_VERSION")));
    report.push_str(&format!("seed: {seed}\n"));
    report.push_str(&format!("trajectories: {n}\n"));
    report.push_str(&format!("transition: {}\n", transition.name()));
    report.push_str(&format!(
        "params: gamma21={} gamma32={} lambda12={} lambda13={} omega_p={} omega_c={} delta_p={} delta_c={}\n\n",
        fmt_f64(params.gamma21),
        fmt_f64(params.gamma32),
        fmt_f64(params.lambda12),
        fmt_f64(params.lambda13),
        fmt_f64(params.omega_p),
        fmt_f64(params.omega_c),
        fmt_f64(params.delta_p),
        fmt_f64(params.delta_c)
    ));
    for c in &checks {
        report.push_str(&c.line);
        report.push('\n');
    }
    let verdict = if passed == total { "PASS" } else { "FAIL" };
    report.push_str(&format!("\nRESULT: {verdict} ({passed}/{total} checks)\n"));
    Ok((report, passed != total))
}
