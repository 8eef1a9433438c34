//! JSON experiment configuration.
//!
//! Agent numbers in the file are 1-based. Unknown keys are rejected so that a
//! config file is a complete record of what was run.

use std::fs;
use std::path::{Path, PathBuf};

use advgd_core::seed;
use advgd_core::{
    metropolis_weights, AttackMode, AttackSpec, Decomposition, Graph, InitSpec, LocalQuadratic,
    ObjectiveSpec, SimulationConfig,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphBlock {
    Complete {
        n: usize,
    },
    Random {
        n: usize,
        edge_prob: f64,
        seed: u64,
    },
    Explicit {
        n: usize,
        edges: Vec<[usize; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalBlock {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveBlock {
    PaperQuadratic {
        n: usize,
        p: usize,
        #[serde(default, skip_serializing_if = "is_default_split")]
        decomposition: Decomposition,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        feasible_bound: Option<f64>,
    },
    Explicit {
        locals: Vec<LocalBlock>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        feasible_bound: Option<f64>,
    },
}

fn is_default_split(d: &Decomposition) -> bool {
    *d == Decomposition::default()
}

fn default_low() -> f64 {
    0.0
}

fn default_high() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackBlock {
    #[serde(default)]
    pub adversaries: Vec<usize>,
    pub mode: AttackMode,
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_epsilon: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitBlock {
    Gaussian { sigma: f64 },
    Uniform { low: f64, high: f64 },
    Explicit { values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: PathBuf,
    pub summary: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph: GraphBlock,
    pub objective: ObjectiveBlock,
    pub attack: AttackBlock,
    pub alpha: f64,
    pub iterations: usize,
    pub init: InitBlock,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub outputs: Outputs,
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl GraphBlock {
    pub fn n(&self) -> usize {
        match self {
            GraphBlock::Complete { n } | GraphBlock::Random { n, .. } | GraphBlock::Explicit { n, .. } => *n,
        }
    }

    pub fn build(&self) -> advgd_core::Result<Graph> {
        match self {
            GraphBlock::Complete { n } => Graph::complete(*n),
            GraphBlock::Random { n, edge_prob, seed } => Graph::random_connected(*n, *edge_prob, *seed),
            GraphBlock::Explicit { n, edges } => {
                let mut pairs = Vec::with_capacity(edges.len());
                for &[i, j] in edges {
                    if i == 0 || j == 0 {
                        return Err(advgd_core::Error::InvalidArgument(format!(
                            "edge [{i}, {j}]: agents are numbered from 1"
                        )));
                    }
                    pairs.push((i - 1, j - 1));
                }
                Graph::from_edges(*n, &pairs)
            }
        }
    }
}

impl ObjectiveBlock {
    pub fn n(&self) -> usize {
        match self {
            ObjectiveBlock::PaperQuadratic { n, .. } => *n,
            ObjectiveBlock::Explicit { locals, .. } => locals.len(),
        }
    }

    pub fn build(&self) -> advgd_core::Result<ObjectiveSpec> {
        match self {
            ObjectiveBlock::PaperQuadratic {
                n,
                p,
                decomposition,
                feasible_bound,
            } => ObjectiveSpec::paper_quadratic_with(*n, *p, *decomposition)?
                .with_feasible_bound(*feasible_bound),
            ObjectiveBlock::Explicit {
                locals,
                feasible_bound,
            } => {
                let locals = locals
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let p = l.b.len();
                        if l.a.len() != p || l.a.iter().any(|row| row.len() != p) {
                            return Err(advgd_core::Error::InvalidArgument(format!(
                                "local {}: A must be {p}x{p} to match b",
                                i + 1
                            )));
                        }
                        LocalQuadratic::new(
                            DMatrix::from_fn(p, p, |r, c| l.a[r][c]),
                            DVector::from_column_slice(&l.b),
                        )
                    })
                    .collect::<advgd_core::Result<Vec<_>>>()?;
                ObjectiveSpec::from_locals(locals)?.with_feasible_bound(*feasible_bound)
            }
        }
    }
}

impl AttackBlock {
    /// Attack for one replication. The configured seed is combined with the
    /// replication seed so paired runs (same replication, different
    /// adversary sets) see the same draws.
    pub fn build(&self, replication_seed: u64) -> advgd_core::Result<AttackSpec> {
        if self.adversaries.contains(&0) {
            return Err(advgd_core::Error::InvalidArgument(
                "adversaries are numbered from 1".into(),
            ));
        }
        if self.mode == AttackMode::None && self.adversaries.is_empty() {
            return Ok(AttackSpec::none());
        }
        let spec = AttackSpec::new(
            self.adversaries.iter().map(|i| i - 1),
            self.mode,
            self.low,
            self.high,
            seed::derive(&[self.seed, replication_seed]),
        )?;
        match &self.fixed_epsilon {
            Some(eps) => spec.with_fixed_epsilon(DVector::from_column_slice(eps)),
            None => Ok(spec),
        }
    }

    /// The same attack carried by the last `m` agents of `n`.
    pub fn with_last(&self, m: usize, n: usize) -> Self {
        let mut block = self.clone();
        block.adversaries = (n - m + 1..=n).collect();
        if m == 0 {
            block.mode = AttackMode::None;
            block.fixed_epsilon = None;
        }
        block
    }
}

impl InitBlock {
    pub fn build(&self) -> InitSpec {
        match self {
            InitBlock::Gaussian { sigma } => InitSpec::Gaussian { sigma: *sigma },
            InitBlock::Uniform { low, high } => InitSpec::Uniform {
                low: *low,
                high: *high,
            },
            InitBlock::Explicit { values } => InitSpec::Explicit(
                values
                    .iter()
                    .map(|row| DVector::from_column_slice(row))
                    .collect(),
            ),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let detail = full.rsplit_once(" at line ").map_or(full.as_str(), |(d, _)| d);
            CliError::validation(origin, format!("line {}, column {}: {detail}", e.line(), e.column()))
        })?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.base_seed = seed;
        }
        if let Some(r) = overrides.replications {
            self.replications = r;
        }
    }

    /// Checks everything that can be checked without running: shapes,
    /// cross-block consistency and that every sub-block builds.
    pub fn validate(&self, origin: &Path) -> Result<(), CliError> {
        let bad = |msg: String| CliError::validation(origin, msg);
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(bad(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.replications == 0 {
            return Err(bad("replications must be at least 1".into()));
        }
        let n = self.graph.n();
        if self.objective.n() != n {
            return Err(bad(format!(
                "objective has {} agents but the graph has {n}",
                self.objective.n()
            )));
        }
        if let Some(&i) = self.attack.adversaries.iter().find(|&&i| i == 0 || i > n) {
            return Err(bad(format!("adversary {i} outside 1..={n}")));
        }
        self.simulation(self.base_seed)
            .map(|_| ())
            .map_err(|e| bad(e.to_string()))
    }

    pub fn replication_seed(&self, replication: usize) -> u64 {
        self.base_seed.wrapping_add(replication as u64)
    }

    /// Engine configuration for one replication with the given attack block.
    pub fn simulation_with(
        &self,
        attack: &AttackBlock,
        replication_seed: u64,
    ) -> advgd_core::Result<SimulationConfig> {
        let graph = self.graph.build()?;
        let weights = metropolis_weights(&graph);
        SimulationConfig::new(
            graph,
            weights,
            self.objective.build()?,
            attack.build(replication_seed)?,
            self.alpha,
            self.iterations,
            self.init.build(),
            replication_seed,
        )
    }

    pub fn simulation(&self, replication_seed: u64) -> advgd_core::Result<SimulationConfig> {
        self.simulation_with(&self.attack, replication_seed)
    }

    /// Output path after applying `--out-dir` to relative entries.
    pub fn resolve(&self, path: &Path, overrides: &Overrides) -> PathBuf {
        match &overrides.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}
