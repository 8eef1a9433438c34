//! Running replications and turning trajectories into verdicts.

use std::time::Instant;

use advgd_core::analysis::{bound_curve_geometric, individual_initial_condition_ok};
use advgd_core::{
    bound_curve, bound_domination_report, error_series, initial_condition_ok, run,
    step_size_check, AnalysisReport, AttackMode, BoundCurve, BoundKind, ErrorSeries,
    NetworkState, SimulationConfig, StepSizeCheck, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AttackBlock, ExperimentConfig};
use crate::error::CliError;

/// Rounds averaged for the steady-state error.
pub const STEADY_STATE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub replication: usize,
    pub seed: u64,
    /// `None` when no agent perturbs.
    pub initial_condition_ok: Option<bool>,
    pub final_avg_error: f64,
    pub final_regular_avg_error: Option<f64>,
    pub steady_state_error: f64,
    /// `sqrt(2) ||eps||`
    pub bound_asymptote: f64,
    pub first_bound_violation: Option<usize>,
    pub first_geometric_violation: Option<usize>,
    /// 1-based `(k, agent)` of the first exit from the feasible ball.
    pub first_bound_exit: Option<(usize, usize)>,
    pub analysis: AnalysisReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub config: ExperimentConfig,
    pub step_size: StepSizeCheck,
    pub admissible: bool,
    pub replications: Vec<ReplicationSummary>,
    /// Kept out of the file so identical configs give identical summaries.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub summary: ReplicationSummary,
    pub series: ErrorSeries,
    pub bound_paper: Option<BoundCurve>,
    pub bound_geometric: Option<BoundCurve>,
}

pub fn step_check(sim: &SimulationConfig) -> Result<StepSizeCheck, advgd_core::Error> {
    let obj = sim.objective();
    step_size_check(sim.alpha(), obj.mu(), obj.lip())
}

/// Initial-condition verdict before any round is run. With a shared vector
/// the network average is tested; with per-agent vectors every adversary's
/// own iterate is tested against its first perturbation.
pub fn initial_verdict(sim: &SimulationConfig, x0: &NetworkState) -> Option<bool> {
    let attack = sim.attack();
    let x_star = sim.objective().x_star();
    let p = sim.p();
    match attack.mode() {
        AttackMode::None => None,
        AttackMode::CooperativeFixed => {
            let eps = attack.common_epsilon(p)?;
            initial_condition_ok(&x0.average(), x_star, &eps).ok()
        }
        AttackMode::IndependentPerStep => {
            let rows: Vec<_> = (0..sim.n()).map(|i| x0.agent(i)).collect();
            let eps: Vec<_> = (0..sim.n()).map(|i| attack.epsilon_for(i, 0, p)).collect();
            individual_initial_condition_ok(&rows, x_star, &eps).ok()
        }
    }
}

/// Perturbation magnitude the bounds are evaluated with: the shared vector's
/// norm, or the largest per-agent norm actually applied.
pub fn attack_magnitude(sim: &SimulationConfig, traj: &Trajectory) -> f64 {
    let attack = sim.attack();
    match attack.mode() {
        AttackMode::None => 0.0,
        AttackMode::CooperativeFixed => attack.common_epsilon(sim.p()).map_or(0.0, |e| e.norm()),
        AttackMode::IndependentPerStep => {
            let applied = traj
                .eps_log
                .iter()
                .flat_map(|round| round.values())
                .map(|e| e.norm())
                .fold(0.0, f64::max);
            if traj.eps_log.is_empty() {
                attack
                    .adversaries()
                    .iter()
                    .filter_map(|&i| attack.epsilon_for(i, 0, sim.p()))
                    .map(|e| e.norm())
                    .fold(0.0, f64::max)
            } else {
                applied
            }
        }
    }
}

pub fn assess(
    sim: &SimulationConfig,
    traj: &Trajectory,
    replication: usize,
    seed: u64,
) -> Result<ReplicationResult, advgd_core::Error> {
    let check = step_check(sim)?;
    let obj = sim.objective();
    let series = error_series(traj, obj.x_star(), sim.attack().adversaries());
    let r0 = series.avg_error[0];
    let eps_norm = attack_magnitude(sim, traj);
    let (bound_paper, bound_geometric) = if check.admissible {
        type Builder = fn(BoundKind, f64, f64, f64, f64, f64, usize) -> advgd_core::Result<BoundCurve>;
        let build = |f: Builder| {
            f(BoundKind::Average, r0, eps_norm, sim.alpha(), obj.mu(), obj.lip(), sim.iterations())
        };
        (Some(build(bound_curve)?), Some(build(bound_curve_geometric)?))
    } else {
        (None, None)
    };
    let paper_report = bound_paper
        .as_ref()
        .map(|b| bound_domination_report(&series.avg_error, b))
        .transpose()?;
    let geometric_report = bound_geometric
        .as_ref()
        .map(|b| bound_domination_report(&series.avg_error, b))
        .transpose()?;
    let summary = ReplicationSummary {
        replication,
        seed,
        initial_condition_ok: initial_verdict(sim, &traj.states[0]),
        final_avg_error: *series.avg_error.last().expect("non-empty series"),
        final_regular_avg_error: series
            .regular_avg_error
            .as_ref()
            .and_then(|s| s.last().copied()),
        steady_state_error: series.steady_state(STEADY_STATE_WINDOW),
        bound_asymptote: std::f64::consts::SQRT_2 * eps_norm,
        first_bound_violation: paper_report.as_ref().and_then(|r| r.first_violation),
        first_geometric_violation: geometric_report.as_ref().and_then(|r| r.first_violation),
        first_bound_exit: traj.first_bound_exit.map(|(k, i)| (k, i + 1)),
        analysis: AnalysisReport::new(&check, r0, eps_norm, paper_report.as_ref()),
    };
    Ok(ReplicationResult {
        summary,
        series,
        bound_paper,
        bound_geometric,
    })
}

pub fn run_replication(
    cfg: &ExperimentConfig,
    attack: &AttackBlock,
    replication: usize,
) -> Result<ReplicationResult, CliError> {
    let seed = cfg.replication_seed(replication);
    let invalid = |e: advgd_core::Error| CliError::validation(&cfg.name, e);
    let sim = cfg.simulation_with(attack, seed).map_err(invalid)?;
    let traj = run(&sim).map_err(CliError::Divergence)?;
    assess(&sim, &traj, replication, seed).map_err(invalid)
}

/// All replications of one attack setting, in replication order.
pub fn run_replications(
    cfg: &ExperimentConfig,
    attack: &AttackBlock,
) -> Result<Vec<ReplicationResult>, CliError> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, attack, r))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunSummary, Vec<ReplicationResult>), CliError> {
    let started = Instant::now();
    let sim = cfg
        .simulation(cfg.base_seed)
        .map_err(|e| CliError::validation(&cfg.name, e))?;
    let check = step_check(&sim).map_err(|e| CliError::validation(&cfg.name, e))?;
    let results = run_replications(cfg, &cfg.attack)?;
    let summary = RunSummary {
        name: cfg.name.clone(),
        config: cfg.clone(),
        step_size: check,
        admissible: check.admissible,
        replications: results.iter().map(|r| r.summary.clone()).collect(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((summary, results))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub replication: usize,
    pub final_avg_error: f64,
    pub steady_state_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub m: usize,
    pub mean_steady_state_error: f64,
    pub mean_final_avg_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub name: String,
    pub counts: Vec<usize>,
    pub replications: usize,
    pub points: Vec<SweepPoint>,
    /// Mean steady-state error strictly increases along `counts`.
    pub strictly_increasing: bool,
}

/// One run set per adversary count, the last `m` agents adversarial. Every
/// count reuses the same replication seeds.
pub fn run_sweep(cfg: &ExperimentConfig, counts: &[usize]) -> Result<(SweepSummary, Vec<SweepRow>), CliError> {
    let n = cfg.graph.n();
    if let Some(&m) = counts.iter().find(|&&m| m > n) {
        return Err(CliError::validation(&cfg.name, format!("adversary count {m} exceeds {n} agents")));
    }
    if cfg.attack.mode == AttackMode::None && counts.iter().any(|&m| m > 0) {
        return Err(CliError::validation(
            &cfg.name,
            "sweeping adversary counts needs an attack mode other than 'none'",
        ));
    }
    let sets = counts
        .par_iter()
        .map(|&m| run_replications(cfg, &cfg.attack.with_last(m, n)).map(|rs| (m, rs)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (m, results) in &sets {
        let count = results.len() as f64;
        points.push(SweepPoint {
            m: *m,
            mean_steady_state_error: results.iter().map(|r| r.summary.steady_state_error).sum::<f64>() / count,
            mean_final_avg_error: results.iter().map(|r| r.summary.final_avg_error).sum::<f64>() / count,
        });
        rows.extend(results.iter().map(|r| SweepRow {
            m: *m,
            replication: r.summary.replication,
            final_avg_error: r.summary.final_avg_error,
            steady_state_error: r.summary.steady_state_error,
        }));
    }
    let strictly_increasing = points
        .windows(2)
        .all(|w| w[1].mean_steady_state_error > w[0].mean_steady_state_error);
    Ok((
        SweepSummary {
            name: cfg.name.clone(),
            counts: counts.to_vec(),
            replications: cfg.replications,
            points,
            strictly_increasing,
        },
        rows,
    ))
}
