//! Synchronous consensus-gradient iteration with additive perturbations.
//!
//! One round computes, for every agent `i`,
//!
//! ```text
//! y_i = sum_j W_ij x_j(k) - alpha * grad f_i(x_i(k))
//! x_i(k+1) = y_i + eps_i(k)   (adversaries)
//! x_i(k+1) = y_i              (everyone else)
//! ```
//!
//! so the perturbed value is what neighbours consume on round `k + 1`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal, Uniform};
use thiserror::Error;

use crate::attack::AttackSpec;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::seed;
use crate::topology::{Graph, WeightMatrix};

/// Any iterate entry above this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

const INIT_STREAM: u64 = 0x494E_4954_0000_0001;

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// i.i.d. `N(0, sigma^2)` entries.
    Gaussian { sigma: f64 },
    /// i.i.d. entries uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
    /// One row per agent.
    Explicit(Vec<DVector<f64>>),
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    graph: Graph,
    weights: WeightMatrix,
    objective: ObjectiveSpec,
    attack: AttackSpec,
    alpha: f64,
    iterations: usize,
    init: InitSpec,
    init_seed: u64,
}

impl SimulationConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: Graph,
        weights: WeightMatrix,
        objective: ObjectiveSpec,
        attack: AttackSpec,
        alpha: f64,
        iterations: usize,
        init: InitSpec,
        init_seed: u64,
    ) -> Result<Self> {
        let n = graph.n();
        weights.validate(&graph)?;
        if objective.n() != n {
            return Err(Error::invalid(format!(
                "objective has {} local functions but the graph has {n} agents",
                objective.n()
            )));
        }
        attack.validate_for(n, objective.p())?;
        // alpha = 0 is pure consensus averaging
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "step size must be nonnegative and finite, got {alpha}"
            )));
        }
        match &init {
            InitSpec::Gaussian { sigma } if !(sigma.is_finite() && *sigma >= 0.0) => {
                return Err(Error::invalid(format!(
                    "gaussian init needs a finite sigma >= 0, got {sigma}"
                )))
            }
            InitSpec::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low < high) => {
                return Err(Error::invalid(format!(
                    "uniform init needs finite low < high, got [{low}, {high})"
                )))
            }
            _ => {}
        }
        Ok(Self {
            graph,
            weights,
            objective,
            attack,
            alpha,
            iterations,
            init,
            init_seed,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    pub fn attack(&self) -> &AttackSpec {
        &self.attack
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn init(&self) -> &InitSpec {
        &self.init
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn p(&self) -> usize {
        self.objective.p()
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }
}

/// Stacked iterates; row `i` is agent `i`'s estimate at round `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub k: usize,
    pub x: DMatrix<f64>,
}

impl NetworkState {
    pub fn agent(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    pub fn average(&self) -> DVector<f64> {
        self.x.row_mean().transpose()
    }
}

/// Perturbations applied during one round, keyed by 0-based agent.
pub type EpsilonRound = BTreeMap<usize, DVector<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[k]` for `k = 0..=K`.
    pub states: Vec<NetworkState>,
    /// Network average at each recorded state.
    pub avg: Vec<DVector<f64>>,
    /// Average of local gradients at each recorded state.
    pub avg_grad: Vec<DVector<f64>>,
    /// `eps_log[k]` holds what was added on the transition `k -> k + 1`.
    pub eps_log: Vec<EpsilonRound>,
    /// First `(k, agent)` whose iterate left the feasible ball, when the
    /// objective carries a bound.
    pub first_bound_exit: Option<(usize, usize)>,
}

impl Trajectory {
    fn start(cfg: &SimulationConfig, state: NetworkState) -> Self {
        let mut traj = Self {
            states: Vec::with_capacity(cfg.iterations + 1),
            avg: Vec::with_capacity(cfg.iterations + 1),
            avg_grad: Vec::with_capacity(cfg.iterations + 1),
            eps_log: Vec::with_capacity(cfg.iterations),
            first_bound_exit: None,
        };
        traj.record(cfg, state);
        traj
    }

    fn record(&mut self, cfg: &SimulationConfig, state: NetworkState) {
        if self.first_bound_exit.is_none() {
            self.first_bound_exit = (0..cfg.n())
                .find(|&i| cfg.objective.exceeds_bound(&state.agent(i)))
                .map(|i| (state.k, i));
        }
        self.avg.push(state.average());
        self.avg_grad.push(average_gradient(&state, &cfg.objective));
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &NetworkState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// A run that stopped early. `partial` holds every state reached before the
/// failing round.
#[derive(Debug, Error)]
#[error("{source} (after {} recorded states)", partial.len())]
pub struct RunError {
    #[source]
    pub source: Error,
    pub partial: Box<Trajectory>,
}

fn average_gradient(state: &NetworkState, objective: &ObjectiveSpec) -> DVector<f64> {
    let n = state.x.nrows();
    let sum = (0..n).fold(DVector::zeros(state.x.ncols()), |acc, i| {
        acc + objective.locals()[i].grad(&state.agent(i))
    });
    sum / n as f64
}

pub fn init_state(cfg: &SimulationConfig) -> Result<NetworkState> {
    let (n, p) = (cfg.n(), cfg.p());
    let mut rng = seed::rng_for(&[INIT_STREAM, cfg.init_seed]);
    let x = match &cfg.init {
        InitSpec::Gaussian { sigma } => {
            let dist = Normal::new(0.0, *sigma).map_err(|e| Error::invalid(e.to_string()))?;
            DMatrix::from_fn(n, p, |_, _| dist.sample(&mut rng))
        }
        InitSpec::Uniform { low, high } => {
            let dist = Uniform::new(*low, *high).map_err(|e| Error::invalid(e.to_string()))?;
            DMatrix::from_fn(n, p, |_, _| dist.sample(&mut rng))
        }
        InitSpec::Explicit(rows) => {
            if rows.len() != n {
                return Err(Error::invalid(format!(
                    "explicit init lists {} agents, expected {n}",
                    rows.len()
                )));
            }
            if let Some(row) = rows.iter().find(|r| r.len() != p) {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            if rows.iter().flat_map(|r| r.iter()).any(|v| !v.is_finite()) {
                return Err(Error::invalid("explicit init entries must be finite"));
            }
            DMatrix::from_fn(n, p, |i, j| rows[i][j])
        }
    };
    Ok(NetworkState { k: 0, x })
}

fn advance(state: &NetworkState, cfg: &SimulationConfig) -> Result<(NetworkState, EpsilonRound)> {
    let (n, p) = (cfg.n(), cfg.p());
    if state.x.nrows() != n || state.x.ncols() != p {
        return Err(Error::invalid(format!(
            "state is {}x{}, expected {n}x{p}",
            state.x.nrows(),
            state.x.ncols()
        )));
    }
    let mut next = cfg.weights.as_matrix() * &state.x;
    let mut applied = EpsilonRound::new();
    for i in 0..n {
        let grad = cfg.objective.locals()[i].grad(&state.agent(i));
        let mut row = next.row_mut(i);
        row -= grad.transpose() * cfg.alpha;
        if let Some(eps) = cfg.attack.epsilon_for(i, state.k, p) {
            row += eps.value().transpose();
            applied.insert(i, eps.value().clone());
        }
    }
    for i in 0..n {
        if let Some(&bad) = next
            .row(i)
            .iter()
            .find(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Divergence {
                k: state.k + 1,
                agent: i + 1,
                value: bad,
            });
        }
    }
    Ok((
        NetworkState {
            k: state.k + 1,
            x: next,
        },
        applied,
    ))
}

/// One synchronous round.
pub fn step(state: &NetworkState, cfg: &SimulationConfig) -> Result<NetworkState> {
    advance(state, cfg).map(|(next, _)| next)
}

/// `K` rounds from [`init_state`], recording everything.
pub fn run(cfg: &SimulationConfig) -> std::result::Result<Trajectory, RunError> {
    let initial = init_state(cfg).map_err(|source| RunError {
        source,
        partial: Box::new(Trajectory {
            states: Vec::new(),
            avg: Vec::new(),
            avg_grad: Vec::new(),
            eps_log: Vec::new(),
            first_bound_exit: None,
        }),
    })?;
    let mut traj = Trajectory::start(cfg, initial);
    for _ in 0..cfg.iterations {
        match advance(traj.last(), cfg) {
            Ok((next, applied)) => {
                traj.eps_log.push(applied);
                traj.record(cfg, next);
            }
            Err(source) => {
                return Err(RunError {
                    source,
                    partial: Box::new(traj),
                })
            }
        }
    }
    Ok(traj)
}
