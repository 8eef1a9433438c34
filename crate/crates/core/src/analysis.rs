//! Step-size admissibility, neighbourhood bounds and measured error series.
//!
//! With `c1 = 2/(mu+L)` and `c2 = 2 mu L/(mu+L)`, an admissible step size
//! satisfies `alpha < c1` and `(mu+L)/(4 mu L) < alpha < (mu+L)/(2 mu L)`.
//! The resulting contraction `rho = 2 - 2 alpha c2` lies in `(0, 1)` and
//! the distance to the optimum obeys
//!
//! ```text
//! ||x(k) - x*|| <= rho^(k/2) ||x(0) - x*|| + sqrt(2) ||eps||
//! ```
//!
//! for the network average (complete graph, shared `eps`) and for each agent
//! individually (general graph, per-agent `eps_i`).

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::attack::AttackVector;
use crate::engine::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizeCheck {
    pub alpha: f64,
    pub mu: f64,
    pub lip: f64,
    pub c1: f64,
    pub c2: f64,
    /// `alpha < 2/(mu+L)`
    pub upper_ok: bool,
    /// `(mu+L)/(4 mu L) < alpha < (mu+L)/(2 mu L)`
    pub window_ok: bool,
    pub admissible: bool,
}

impl StepSizeCheck {
    pub fn rho(&self) -> f64 {
        contraction_factor(self.alpha, self.c2)
    }

    fn require_admissible(&self) -> Result<()> {
        if self.admissible {
            Ok(())
        } else {
            Err(Error::InadmissibleStepSize {
                alpha: self.alpha,
                mu: self.mu,
                lip: self.lip,
            })
        }
    }
}

pub fn step_size_check(alpha: f64, mu: f64, lip: f64) -> Result<StepSizeCheck> {
    let finite = alpha.is_finite() && mu.is_finite() && lip.is_finite();
    if !finite || alpha <= 0.0 || mu <= 0.0 || lip <= 0.0 {
        return Err(Error::invalid(format!(
            "step size and constants must be positive, got alpha={alpha}, mu={mu}, L={lip}"
        )));
    }
    if mu > lip {
        return Err(Error::invalid(format!(
            "strong convexity {mu} exceeds Lipschitz constant {lip}"
        )));
    }
    let sum = mu + lip;
    let c1 = 2.0 / sum;
    let c2 = 2.0 * mu * lip / sum;
    let upper_ok = alpha < c1;
    let window_ok = sum / (4.0 * mu * lip) < alpha && alpha < sum / (2.0 * mu * lip);
    Ok(StepSizeCheck {
        alpha,
        mu,
        lip,
        c1,
        c2,
        upper_ok,
        window_ok,
        admissible: upper_ok && window_ok,
    })
}

/// `2 - 2 alpha c2`.
pub fn contraction_factor(alpha: f64, c2: f64) -> f64 {
    2.0 - 2.0 * alpha * c2
}

fn check_dims(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// `||x_avg(0) - x*|| < ||eps||`, strictly.
pub fn initial_condition_ok(
    x0_avg: &DVector<f64>,
    x_star: &DVector<f64>,
    eps: &AttackVector,
) -> Result<bool> {
    check_dims(x_star, x0_avg)?;
    check_dims(x_star, eps.value())?;
    Ok((x0_avg - x_star).norm() < eps.norm())
}

/// Per-agent analogue: `||x_i(0) - x*|| < ||eps_i||` for every agent that
/// carries a perturbation. Agents without one are not constrained. Returns
/// `false` when no agent carries a perturbation.
pub fn individual_initial_condition_ok(
    x0: &[DVector<f64>],
    x_star: &DVector<f64>,
    eps: &[Option<AttackVector>],
) -> Result<bool> {
    if x0.len() != eps.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            found: eps.len(),
        });
    }
    let mut any = false;
    for (xi, ei) in x0.iter().zip(eps) {
        if let Some(ei) = ei {
            any = true;
            if !initial_condition_ok(xi, x_star, ei)? {
                return Ok(false);
            }
        }
    }
    Ok(any)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Distance of the network average, shared perturbation.
    Average,
    /// Distance of a single agent, its own perturbation.
    Individual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub r0: f64,
    pub eps_norm: f64,
    pub rho: f64,
    pub values: Vec<f64>,
}

impl BoundCurve {
    pub fn asymptote(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.eps_norm
    }
}

fn bound_inputs(r0: f64, eps_norm: f64, alpha: f64, mu: f64, lip: f64) -> Result<f64> {
    if !(r0.is_finite() && r0 >= 0.0 && eps_norm.is_finite() && eps_norm >= 0.0) {
        return Err(Error::invalid(format!(
            "bound needs finite r0 >= 0 and eps_norm >= 0, got {r0}, {eps_norm}"
        )));
    }
    let check = step_size_check(alpha, mu, lip)?;
    check.require_admissible()?;
    Ok(check.rho())
}

/// `rho^(k/2) r0 + sqrt(2) eps_norm` for `k = 0..=K`.
pub fn bound_curve(
    kind: BoundKind,
    r0: f64,
    eps_norm: f64,
    alpha: f64,
    mu: f64,
    lip: f64,
    iterations: usize,
) -> Result<BoundCurve> {
    let rho = bound_inputs(r0, eps_norm, alpha, mu, lip)?;
    let floor = std::f64::consts::SQRT_2 * eps_norm;
    let values = (0..=iterations)
        .map(|k| rho.powf(k as f64 / 2.0) * r0 + floor)
        .collect();
    Ok(BoundCurve {
        kind,
        r0,
        eps_norm,
        rho,
        values,
    })
}

/// Variant that keeps every `2 ||eps||^2` term of the squared recursion:
/// `sqrt(rho^k r0^2 + 2 eps_norm^2 (1 - rho^k) / (1 - rho))`.
pub fn bound_curve_geometric(
    kind: BoundKind,
    r0: f64,
    eps_norm: f64,
    alpha: f64,
    mu: f64,
    lip: f64,
    iterations: usize,
) -> Result<BoundCurve> {
    let rho = bound_inputs(r0, eps_norm, alpha, mu, lip)?;
    let values = (0..=iterations)
        .map(|k| {
            let decay = rho.powi(k as i32);
            (decay * r0 * r0 + 2.0 * eps_norm * eps_norm * (1.0 - decay) / (1.0 - rho)).sqrt()
        })
        .collect();
    Ok(BoundCurve {
        kind,
        r0,
        eps_norm,
        rho,
        values,
    })
}

/// Asymptote of [`bound_curve_geometric`]: `sqrt(2 / (1 - rho)) eps_norm`.
pub fn geometric_asymptote(rho: f64, eps_norm: f64) -> f64 {
    (2.0 / (1.0 - rho)).sqrt() * eps_norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    /// `||x_avg(k) - x*||`
    pub avg_error: Vec<f64>,
    /// `per_agent_error[i][k] = ||x_i(k) - x*||`
    pub per_agent_error: Vec<Vec<f64>>,
    /// Distance of the mean over non-adversarial agents; `None` when every
    /// agent is adversarial.
    pub regular_avg_error: Option<Vec<f64>>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.avg_error.len()
    }

    pub fn is_empty(&self) -> bool {
        self.avg_error.is_empty()
    }

    /// Mean of `avg_error` over the last `window` entries.
    pub fn steady_state(&self, window: usize) -> f64 {
        let tail = &self.avg_error[self.avg_error.len().saturating_sub(window)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }
}

/// `adversaries` are 0-based agent indices.
pub fn error_series(
    traj: &Trajectory,
    x_star: &DVector<f64>,
    adversaries: &BTreeSet<usize>,
) -> ErrorSeries {
    let n = traj.states.first().map_or(0, |s| s.x.nrows());
    let regular: Vec<usize> = (0..n).filter(|i| !adversaries.contains(i)).collect();
    let avg_error = traj.avg.iter().map(|a| (a - x_star).norm()).collect();
    let per_agent_error = (0..n)
        .map(|i| {
            traj.states
                .iter()
                .map(|s| (s.agent(i) - x_star).norm())
                .collect()
        })
        .collect();
    let regular_avg_error = (!regular.is_empty()).then(|| {
        traj.states
            .iter()
            .map(|s| {
                let mean = regular
                    .iter()
                    .fold(DVector::zeros(x_star.len()), |acc, &i| acc + s.agent(i))
                    / regular.len() as f64;
                (mean - x_star).norm()
            })
            .collect()
    });
    ErrorSeries {
        avg_error,
        per_agent_error,
        regular_avg_error,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    /// `within[k]` is `err[k] <= bound[k]`.
    pub within: Vec<bool>,
    /// Largest `err[k] - bound[k]`, or 0 when the bound holds everywhere.
    pub max_violation: f64,
    pub first_violation: Option<usize>,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn bound_domination_report(err: &[f64], bound: &BoundCurve) -> Result<DominationReport> {
    if err.len() != bound.values.len() {
        return Err(Error::DimensionMismatch {
            expected: bound.values.len(),
            found: err.len(),
        });
    }
    let within: Vec<bool> = err
        .iter()
        .zip(&bound.values)
        .map(|(e, b)| e <= b)
        .collect();
    let max_violation = err
        .iter()
        .zip(&bound.values)
        .map(|(e, b)| e - b)
        .fold(0.0_f64, f64::max);
    let first_violation = within.iter().position(|ok| !ok);
    Ok(DominationReport {
        within,
        max_violation,
        first_violation,
    })
}

/// Serialized analysis verdict for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub admissible: bool,
    pub c1: f64,
    pub c2: f64,
    pub rho: f64,
    pub r0: f64,
    pub eps_norm: f64,
    pub first_violation_k: Option<usize>,
    /// `None` when no bound could be computed (inadmissible step size).
    pub max_violation: Option<f64>,
}

impl AnalysisReport {
    pub fn new(
        check: &StepSizeCheck,
        r0: f64,
        eps_norm: f64,
        domination: Option<&DominationReport>,
    ) -> Self {
        Self {
            admissible: check.admissible,
            c1: check.c1,
            c2: check.c2,
            rho: check.rho(),
            r0,
            eps_norm,
            first_violation_k: domination.and_then(|d| d.first_violation),
            max_violation: domination.map(|d| d.max_violation),
        }
    }
}
