//! Simulator and analysis toolkit for distributed gradient descent on agent
//! networks where some agents additively perturb the iterates they
//! broadcast.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: connected graphs and Metropolis mixing weights
//! - [`objectives`]: local quadratics and their global constants
//! - [`attack`]: who perturbs, and by how much, on each round
//! - [`engine`]: the synchronous consensus-gradient iteration
//! - [`analysis`]: step-size windows, neighbourhood bounds and error series

pub mod analysis;
pub mod attack;
pub mod engine;
pub mod error;
pub mod objectives;
pub mod seed;
pub mod topology;

pub use analysis::{
    bound_curve, bound_curve_geometric, bound_domination_report, contraction_factor,
    error_series, initial_condition_ok, step_size_check, AnalysisReport, BoundCurve, BoundKind,
    DominationReport, ErrorSeries, StepSizeCheck,
};
pub use attack::{malicious_target, AttackMode, AttackSpec, AttackVector};
pub use engine::{init_state, run, step, InitSpec, NetworkState, RunError, SimulationConfig, Trajectory};
pub use error::{Error, Result};
pub use objectives::{Decomposition, LocalQuadratic, ObjectiveSpec};
pub use topology::{metropolis_weights, Graph, GraphKind, WeightMatrix};
