//! Additive attack model.
//!
//! Adversarial agents add a vector `eps` to their own iterate after the
//! consensus-gradient update, so the value their neighbours read on the next
//! round is perturbed. Draws are derived from `(seed, agent, k)` so a query
//! never depends on which other queries ran before it.

use std::collections::BTreeSet;

use nalgebra::DVector;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

const ATTACK_STREAM: u64 = 0x4154_5441_434B_0001;
const COMMON_AGENT: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    None,
    /// All adversaries share one vector for the whole run.
    CooperativeFixed,
    /// Every adversary draws a fresh vector every round.
    IndependentPerStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackVector(DVector<f64>);

impl AttackVector {
    pub fn new(value: DVector<f64>) -> Result<Self> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("attack vector entries must be finite"));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    adversaries: BTreeSet<usize>,
    mode: AttackMode,
    low: f64,
    high: f64,
    seed: u64,
    fixed_epsilon: Option<DVector<f64>>,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self {
            adversaries: BTreeSet::new(),
            mode: AttackMode::None,
            low: 0.0,
            high: 1.0,
            seed: 0,
            fixed_epsilon: None,
        }
    }

    /// `adversaries` are 0-based. Entries of sampled vectors are uniform on
    /// `[low, high)`.
    pub fn new(
        adversaries: impl IntoIterator<Item = usize>,
        mode: AttackMode,
        low: f64,
        high: f64,
        seed: u64,
    ) -> Result<Self> {
        let adversaries: BTreeSet<usize> = adversaries.into_iter().collect();
        match (mode, adversaries.is_empty()) {
            (AttackMode::None, false) => {
                return Err(Error::invalid("attack mode 'none' cannot list adversaries"))
            }
            (AttackMode::CooperativeFixed | AttackMode::IndependentPerStep, true) => {
                return Err(Error::invalid("an active attack mode needs at least one adversary"))
            }
            _ => {}
        }
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::invalid(format!(
                "attack distribution needs finite low < high, got [{low}, {high})"
            )));
        }
        Ok(Self {
            adversaries,
            mode,
            low,
            high,
            seed,
            fixed_epsilon: None,
        })
    }

    /// Uses `eps` verbatim as the shared vector. Only valid in cooperative
    /// mode.
    pub fn with_fixed_epsilon(mut self, eps: DVector<f64>) -> Result<Self> {
        if self.mode != AttackMode::CooperativeFixed {
            return Err(Error::invalid(
                "a fixed attack vector requires mode 'cooperative_fixed'",
            ));
        }
        AttackVector::new(eps.clone())?;
        self.fixed_epsilon = Some(eps);
        Ok(self)
    }

    /// Same attack with a different seed; adversaries and distribution are
    /// unchanged.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Checks agent indices and the fixed vector's dimension against a
    /// network of `n` agents in dimension `p`.
    pub fn validate_for(&self, n: usize, p: usize) -> Result<()> {
        if let Some(&bad) = self.adversaries.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!(
                "adversary {} out of range 1..={n}",
                bad + 1
            )));
        }
        if let Some(eps) = &self.fixed_epsilon {
            if eps.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: eps.len(),
                });
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> AttackMode {
        self.mode
    }

    pub fn adversaries(&self) -> &BTreeSet<usize> {
        &self.adversaries
    }

    pub fn is_adversary(&self, agent: usize) -> bool {
        self.adversaries.contains(&agent)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn range(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn fixed_epsilon(&self) -> Option<&DVector<f64>> {
        self.fixed_epsilon.as_ref()
    }

    fn sample(&self, agent_key: u64, k: u64, p: usize) -> DVector<f64> {
        let mut rng = seed::rng_for(&[ATTACK_STREAM, self.seed, agent_key, k]);
        // low < high and both finite is enforced by the constructor
        let dist = Uniform::new(self.low, self.high).expect("validated range");
        DVector::from_iterator(p, (0..p).map(|_| dist.sample(&mut rng)))
    }

    /// The vector agent `agent` adds at round `k`, or `None` if the agent is
    /// not adversarial.
    pub fn epsilon_for(&self, agent: usize, k: usize, p: usize) -> Option<AttackVector> {
        if !self.is_adversary(agent) {
            return None;
        }
        let value = match self.mode {
            AttackMode::None => return None,
            AttackMode::CooperativeFixed => match &self.fixed_epsilon {
                Some(eps) => eps.clone(),
                None => self.sample(COMMON_AGENT, 0, p),
            },
            AttackMode::IndependentPerStep => self.sample(agent as u64, k as u64, p),
        };
        Some(AttackVector(value))
    }

    /// The shared vector in cooperative mode, independent of agent and round.
    pub fn common_epsilon(&self, p: usize) -> Option<AttackVector> {
        let first = *self.adversaries.iter().next()?;
        match self.mode {
            AttackMode::CooperativeFixed => self.epsilon_for(first, 0, p),
            _ => None,
        }
    }
}

/// `x* + eps`, the point the adversaries try to pull the network towards.
pub fn malicious_target(x_star: &DVector<f64>, eps: &AttackVector) -> Result<DVector<f64>> {
    if x_star.len() != eps.dim() {
        return Err(Error::DimensionMismatch {
            expected: x_star.len(),
            found: eps.dim(),
        });
    }
    Ok(x_star + eps.value())
}
