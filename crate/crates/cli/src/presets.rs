//! Bundled experiment presets.
//!
//! `fig1`..`fig3`: complete graph on 10 agents, 2/5/9 adversaries sharing one
//! fixed perturbation. `fig4`..`fig6`: random connected graph on 10 agents,
//! 2/5/7 adversaries drawing fresh perturbations every round. All use the
//! scalar quadratic `1/2 x^2` per agent, `alpha = 0.6` and 100 rounds.

use std::path::PathBuf;

use advgd_core::AttackMode;

use crate::config::{AttackBlock, ExperimentConfig, GraphBlock, InitBlock, ObjectiveBlock, Outputs};

pub const NAMES: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

const AGENTS: usize = 10;
const RANDOM_EDGE_PROB: f64 = 0.4;
const RANDOM_GRAPH_SEED: u64 = 7;

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let (graph, mode, adversaries) = match name {
        "fig1" => (complete(), AttackMode::CooperativeFixed, 2),
        "fig2" => (complete(), AttackMode::CooperativeFixed, 5),
        "fig3" => (complete(), AttackMode::CooperativeFixed, 9),
        "fig4" => (random(), AttackMode::IndependentPerStep, 2),
        "fig5" => (random(), AttackMode::IndependentPerStep, 5),
        "fig6" => (random(), AttackMode::IndependentPerStep, 7),
        _ => return None,
    };
    Some(ExperimentConfig {
        name: name.to_string(),
        graph,
        objective: ObjectiveBlock::PaperQuadratic {
            n: AGENTS,
            p: 1,
            decomposition: Default::default(),
            feasible_bound: None,
        },
        attack: AttackBlock {
            adversaries: (AGENTS - adversaries + 1..=AGENTS).collect(),
            mode,
            low: 0.0,
            high: 1.0,
            seed: 2021,
            fixed_epsilon: None,
        },
        alpha: 0.6,
        iterations: 100,
        init: InitBlock::Gaussian { sigma: 0.1 },
        replications: 1,
        base_seed: 0,
        outputs: Outputs {
            csv: PathBuf::from(format!("{name}.csv")),
            summary: PathBuf::from(format!("{name}_summary.json")),
            plot: Some(PathBuf::from(format!("{name}.svg"))),
        },
    })
}

fn complete() -> GraphBlock {
    GraphBlock::Complete { n: AGENTS }
}

fn random() -> GraphBlock {
    GraphBlock::Random {
        n: AGENTS,
        edge_prob: RANDOM_EDGE_PROB,
        seed: RANDOM_GRAPH_SEED,
    }
}
