//! Subcommand implementations. Each returns a value the binary turns into
//! printed output and an exit status.

use std::fs;
use std::path::{Path, PathBuf};

use advgd_core::init_state;
use serde::Serialize;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;
use crate::experiment::{initial_verdict, run_experiment, run_sweep, step_check, RunSummary, SweepSummary};
use crate::output::{write_json, write_run_csv, write_sweep_csv};
use crate::plot::{read_series, render_svg};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub csv: PathBuf,
    pub summary_path: PathBuf,
    pub plot: Option<PathBuf>,
}

fn load(config_path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    cfg.apply(overrides);
    cfg.validate(config_path)?;
    Ok(cfg)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn guard_outputs(config_path: &Path, outputs: &[&Path]) -> Result<(), CliError> {
    match outputs.iter().find(|o| same_file(config_path, o)) {
        Some(o) => Err(CliError::validation(
            config_path,
            format!("output {} would overwrite the config", o.display()),
        )),
        None => Ok(()),
    }
}

pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let cfg = load(config_path, overrides)?;
    let csv = cfg.resolve(&cfg.outputs.csv, overrides);
    let summary_path = cfg.resolve(&cfg.outputs.summary, overrides);
    let plot_path = cfg.outputs.plot.as_ref().map(|p| cfg.resolve(p, overrides));
    let mut outputs = vec![csv.as_path(), summary_path.as_path()];
    outputs.extend(plot_path.as_deref());
    guard_outputs(config_path, &outputs)?;
    let (summary, results) = run_experiment(&cfg)?;
    write_run_csv(&csv, &results, cfg.graph.n())?;
    write_json(&summary_path, &summary)?;
    if let Some(out) = &plot_path {
        cmd_plot(&csv, out)?;
    }
    Ok(RunOutcome {
        summary,
        csv,
        summary_path,
        plot: plot_path,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub csv: PathBuf,
    pub summary_path: PathBuf,
}

fn with_suffix(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

/// Sweep outputs sit next to the run outputs as `<csv stem>_sweep.csv` and
/// `<summary stem>_sweep.json`.
pub fn cmd_sweep(config_path: &Path, counts: &[usize], overrides: &Overrides) -> Result<SweepOutcome, CliError> {
    if counts.is_empty() {
        return Err(CliError::validation(config_path, "no adversary counts given"));
    }
    let cfg = load(config_path, overrides)?;
    let csv = with_suffix(&cfg.resolve(&cfg.outputs.csv, overrides), "_sweep", "csv");
    let summary_path = with_suffix(&cfg.resolve(&cfg.outputs.summary, overrides), "_sweep", "json");
    guard_outputs(config_path, &[&csv, &summary_path])?;
    let (summary, rows) = run_sweep(&cfg, counts)?;
    write_sweep_csv(&csv, &rows)?;
    write_json(&summary_path, &summary)?;
    Ok(SweepOutcome {
        summary,
        csv,
        summary_path,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub alpha: f64,
    pub mu: f64,
    pub lip: f64,
    pub c1: f64,
    pub c2: f64,
    pub rho: f64,
    pub upper_ok: bool,
    pub window_ok: bool,
    pub admissible: bool,
    /// `None` when no agent perturbs.
    pub initial_condition_ok: Option<bool>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.admissible && self.initial_condition_ok != Some(false)
    }

    pub fn render(&self) -> String {
        let verdict = |b: bool| if b { "pass" } else { "FAIL" };
        let init = match self.initial_condition_ok {
            Some(b) => verdict(b),
            None => "n/a (no attack)",
        };
        format!(
            "alpha={} mu={} L={}\n\
             c1={} c2={} rho={}\n\
             upper test:  alpha < 2/(mu+L)                       {}\n\
             window test: (mu+L)/(4muL) < alpha < (mu+L)/(2muL)  {}\n\
             step size admissible: {}\n\
             initial condition:    {}\n",
            self.alpha,
            self.mu,
            self.lip,
            self.c1,
            self.c2,
            self.rho,
            verdict(self.upper_ok),
            verdict(self.window_ok),
            verdict(self.admissible),
            init
        )
    }
}

/// Admissibility and initial-condition verdicts for the first replication,
/// without simulating.
pub fn cmd_check(config_path: &Path, overrides: &Overrides) -> Result<CheckOutcome, CliError> {
    let cfg = load(config_path, overrides)?;
    let invalid = |e: advgd_core::Error| CliError::validation(config_path, e);
    let sim = cfg.simulation(cfg.replication_seed(0)).map_err(invalid)?;
    let check = step_check(&sim).map_err(invalid)?;
    let x0 = init_state(&sim).map_err(invalid)?;
    Ok(CheckOutcome {
        alpha: check.alpha,
        mu: check.mu,
        lip: check.lip,
        c1: check.c1,
        c2: check.c2,
        rho: check.rho(),
        upper_ok: check.upper_ok,
        window_ok: check.window_ok,
        admissible: check.admissible,
        initial_condition_ok: initial_verdict(&sim, &x0),
    })
}

pub fn cmd_plot(csv_path: &Path, out_path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let series = read_series(&text, csv_path)?;
    let title = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run");
    crate::output::write_atomic(out_path, render_svg(title, &series).as_bytes())
}
