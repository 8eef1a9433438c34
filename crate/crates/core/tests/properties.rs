//! Invariants of the topology, objective, attack, engine and analysis layers.

use std::collections::BTreeSet;

use advgd_core::analysis::geometric_asymptote;
use advgd_core::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn random_spd(p: usize, seed: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(p, p, |i, j| seed[(i * p + j) % seed.len()]);
    &m * m.transpose() + DMatrix::identity(p, p) * 0.5
}

fn quadratic_spec() -> impl Strategy<Value = ObjectiveSpec> {
    (1usize..4, 1usize..5).prop_flat_map(|(p, n)| {
        proptest::collection::vec(
            (
                proptest::collection::vec(-2.0..2.0f64, p * p),
                proptest::collection::vec(-3.0..3.0f64, p),
            ),
            n,
        )
        .prop_map(move |locals| {
            let locals = locals
                .into_iter()
                .map(|(a, b)| {
                    LocalQuadratic::new(random_spd(p, &a), DVector::from_vec(b)).unwrap()
                })
                .collect();
            ObjectiveSpec::from_locals(locals).unwrap()
        })
    })
}

fn point(p: usize) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-5.0..5.0f64, p).prop_map(DVector::from_vec)
}

fn central_difference(spec: &ObjectiveSpec, i: usize, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |j, _| {
        let mut up = x.clone();
        let mut down = x.clone();
        up[j] += h;
        down[j] -= h;
        (spec.eval_local(i, &up).unwrap() - spec.eval_local(i, &down).unwrap()) / (2.0 * h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metropolis_weights_are_doubly_stochastic(n in 2usize..16, prob in 0.2..1.0f64, seed in any::<u64>()) {
        let g = Graph::random_connected(n, prob, seed).unwrap();
        let w = metropolis_weights(&g);
        prop_assert!(w.validate(&g).is_ok());
        prop_assert!(w.second_eigenvalue_magnitude() < 1.0);
        let eig = w.eigenvalues();
        prop_assert!((eig[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_contracts_mean_zero_vectors(n in 2usize..14, prob in 0.2..1.0f64, seed in any::<u64>(),
                                             raw in proptest::collection::vec(-10.0..10.0f64, 14)) {
        let g = Graph::random_connected(n, prob, seed).unwrap();
        let w = metropolis_weights(&g);
        let v = DVector::from_iterator(n, raw.into_iter().take(n));
        let centered = v.add_scalar(-v.mean());
        let lhs = w.apply(&centered).norm();
        prop_assert!(lhs <= w.second_eigenvalue_magnitude() * centered.norm() + 1e-10);
    }

    #[test]
    fn random_graph_replays(n in 2usize..20, prob in 0.3..1.0f64, seed in any::<u64>()) {
        prop_assert_eq!(
            Graph::random_connected(n, prob, seed).unwrap(),
            Graph::random_connected(n, prob, seed).unwrap()
        );
    }

    #[test]
    fn gradient_matches_finite_differences(spec in quadratic_spec(), x in point(3)) {
        let x = DVector::from_iterator(spec.p(), x.iter().copied().take(spec.p()));
        for i in 0..spec.n() {
            let g = spec.grad_local(i, &x).unwrap();
            let fd = central_difference(&spec, i, &x, 1e-5);
            prop_assert!((&g - &fd).norm() <= 1e-6 * g.norm().max(1.0));
        }
    }

    #[test]
    fn strong_convexity_and_lipschitz(spec in quadratic_spec(), x in point(3), y in point(3)) {
        let p = spec.p();
        let x = DVector::from_iterator(p, x.iter().copied().take(p));
        let y = DVector::from_iterator(p, y.iter().copied().take(p));
        let (mu, lip, x_star) = spec.global_constants();
        prop_assert!(mu <= lip);
        let d = &x - &y;
        let lower = spec.eval_global(&y) + spec.grad_global(&y).dot(&d) + 0.5 * mu * d.norm_squared();
        prop_assert!(spec.eval_global(&x) >= lower - 1e-9);
        let dg = (spec.grad_global(&x) - spec.grad_global(&y)).norm();
        prop_assert!(dg <= lip * d.norm() + 1e-9);
        prop_assert!(spec.grad_global(&x_star).norm() <= 1e-10);
        for l in spec.locals() {
            prop_assert!(l.eval(&x) >= 0.0);
        }
    }

    #[test]
    fn scaling_preserves_admissibility(alpha in 0.01..2.0f64, mu in 0.1..3.0f64, ratio in 1.0..4.0f64, c in 0.1..10.0f64) {
        let lip = mu * ratio;
        let a = step_size_check(alpha, mu, lip).unwrap();
        let b = step_size_check(alpha / c, c * mu, c * lip).unwrap();
        prop_assert!((a.c2 - a.mu * a.lip * a.c1).abs() < 1e-12 * a.c2.max(1.0));
        // boundary cases can flip on rounding; skip those
        let margin = |chk: &StepSizeCheck| {
            let s = chk.mu + chk.lip;
            [chk.c1, s / (4.0 * chk.mu * chk.lip), s / (2.0 * chk.mu * chk.lip)]
                .iter()
                .map(|t| (chk.alpha - t).abs() / t)
                .fold(f64::INFINITY, f64::min)
        };
        prop_assume!(margin(&a) > 1e-9);
        prop_assert_eq!(a.upper_ok, b.upper_ok);
        prop_assert_eq!(a.window_ok, b.window_ok);
        prop_assert_eq!(a.admissible, b.admissible);
        if a.admissible {
            prop_assert!(a.rho() > 0.0 && a.rho() < 1.0);
        }
    }

    #[test]
    fn bound_curves_are_ordered(r0 in 0.0..5.0f64, eps in 0.0..2.0f64, alpha in 0.51..0.99f64) {
        let paper = bound_curve(BoundKind::Average, r0, eps, alpha, 1.0, 1.0, 80).unwrap();
        let geo = bound_curve_geometric(BoundKind::Average, r0, eps, alpha, 1.0, 1.0, 80).unwrap();
        for k in 0..=80 {
            prop_assert!(geo.values[k] >= paper.rho.powf(k as f64 / 2.0) * r0 - 1e-12);
            prop_assert!(paper.values[k] >= paper.asymptote() - 1e-12);
            prop_assert!(geo.values[k] <= geometric_asymptote(geo.rho, eps).max(r0) + 1e-12);
            if k > 0 {
                prop_assert!(paper.values[k] <= paper.values[k - 1]);
                // strict while the decaying term is still representable
                if paper.rho.powf(k as f64 / 2.0) * r0 > 1e-12 * paper.asymptote().max(1.0) {
                    prop_assert!(paper.values[k] < paper.values[k - 1]);
                }
            }
        }
    }
}

fn complete_cfg(n: usize, p: usize, attack: AttackSpec, init: InitSpec, alpha: f64, k: usize, seed: u64) -> SimulationConfig {
    let g = Graph::complete(n).unwrap();
    let w = metropolis_weights(&g);
    SimulationConfig::new(g, w, ObjectiveSpec::paper_quadratic(n, p).unwrap(), attack, alpha, k, init, seed).unwrap()
}

fn general_cfg(n: usize, attack: AttackSpec, alpha: f64, k: usize, seed: u64) -> SimulationConfig {
    let g = Graph::random_connected(n, 0.4, seed).unwrap();
    let w = metropolis_weights(&g);
    SimulationConfig::new(
        g,
        w,
        ObjectiveSpec::paper_quadratic(n, 2).unwrap(),
        attack,
        alpha,
        k,
        InitSpec::Uniform { low: -2.0, high: 2.0 },
        seed,
    )
    .unwrap()
}

#[test]
fn average_dynamics_identity_holds_every_step() {
    let mut configs = Vec::new();
    for seed in 0..10 {
        let coop = AttackSpec::new([7, 8, 9], AttackMode::CooperativeFixed, 0.0, 1.0, seed).unwrap();
        configs.push(complete_cfg(10, 2, coop, InitSpec::Gaussian { sigma: 1.0 }, 0.6, 100, seed));
        let indep = AttackSpec::new([0, 4], AttackMode::IndependentPerStep, -1.0, 1.0, seed).unwrap();
        configs.push(general_cfg(10, indep, 0.6, 100, seed));
    }
    // non-identical locals
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let w = metropolis_weights(&g);
    let locals = (0..4)
        .map(|i| {
            LocalQuadratic::new(
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 + 0.1 * i as f64, 0.8])),
                DVector::from_vec(vec![i as f64 * 0.3, -0.2]),
            )
            .unwrap()
        })
        .collect();
    let obj = ObjectiveSpec::from_locals(locals).unwrap();
    let attack = AttackSpec::new([2], AttackMode::IndependentPerStep, 0.0, 1.0, 5).unwrap();
    configs.push(
        SimulationConfig::new(g, w, obj, attack, 0.3, 100, InitSpec::Uniform { low: -1.0, high: 1.0 }, 1)
            .unwrap(),
    );

    for cfg in &configs {
        let traj = run(cfg).unwrap();
        let n = cfg.n() as f64;
        for k in 0..cfg.iterations() {
            let injected = traj.eps_log[k]
                .values()
                .fold(DVector::zeros(cfg.p()), |acc, e| acc + e);
            let predicted = &traj.avg[k] - &traj.avg_grad[k] * cfg.alpha() + injected / n;
            assert!((&traj.avg[k + 1] - predicted).norm() <= 1e-12, "k={k}");
            let mean = traj.states[k].average();
            assert!((&mean - &traj.avg[k]).norm() <= 1e-12);
        }
    }
}

#[test]
fn optimum_is_a_fixed_point_without_attack() {
    let g = Graph::random_connected(8, 0.5, 4).unwrap();
    let w = metropolis_weights(&g);
    let locals = (0..8)
        .map(|i| LocalQuadratic::new(DMatrix::identity(2, 2) * (1.0 + i as f64), DVector::from_vec(vec![1.0, -2.0])).unwrap())
        .collect();
    let obj = ObjectiveSpec::from_locals(locals).unwrap();
    let x_star = obj.x_star().clone();
    let rows = vec![x_star.clone(); 8];
    let cfg = SimulationConfig::new(g, w, obj, AttackSpec::none(), 0.1, 1, InitSpec::Explicit(rows), 0).unwrap();
    let s0 = init_state(&cfg).unwrap();
    let s1 = step(&s0, &cfg).unwrap();
    assert!((&s1.x - &s0.x).abs().max() <= 1e-12);
}

#[test]
fn no_attack_converges_monotonically() {
    for seed in 0..10 {
        let cfg = complete_cfg(10, 1, AttackSpec::none(), InitSpec::Uniform { low: -3.0, high: 3.0 }, 0.6, 60, seed);
        let traj = run(&cfg).unwrap();
        let err = error_series(&traj, cfg.objective().x_star(), &BTreeSet::new());
        for k in 1..err.len() {
            assert!(err.avg_error[k] <= err.avg_error[k - 1]);
        }
        assert!(err.avg_error[50] <= 1e-8);
    }
}

/// Without attack and with identical quadratics the disagreement
/// `X - 1 x_avg^T` evolves under `W - alpha I`, so it shrinks by
/// `max_{j>=2} |lambda_j - alpha|` per round.
#[test]
fn no_attack_reaches_consensus_on_general_graphs() {
    let spread = |s: &NetworkState| {
        let mean = s.average();
        (0..s.x.nrows())
            .map(|i| (s.agent(i) - &mean).norm())
            .fold(0.0, f64::max)
    };
    let mut fast = 0;
    for seed in 0..20 {
        let cfg = general_cfg(10, AttackSpec::none(), 0.6, 200, seed);
        let eig = cfg.weights().eigenvalues();
        let rate = eig[1..].iter().map(|l| (l - 0.6).abs()).fold(0.0, f64::max);
        assert!(rate < 1.0, "seed {seed}: rate {rate}");
        let traj = run(&cfg).unwrap();
        let d0 = traj.states[0].x.clone() - DMatrix::from_fn(10, 2, |_, j| traj.avg[0][j]);
        let bound = rate.powi(200) * d0.norm() + 1e-12;
        assert!(spread(traj.last()) <= bound, "seed {seed}");
        if rate <= 0.9 {
            fast += 1;
            assert!(spread(traj.last()) < 1e-6, "seed {seed}");
        }
    }
    assert!(fast > 0);
    let cfg = complete_cfg(10, 2, AttackSpec::none(), InitSpec::Uniform { low: -5.0, high: 5.0 }, 0.6, 200, 1);
    assert!(spread(run(&cfg).unwrap().last()) < 1e-6);
}

#[test]
fn attack_is_additive_on_one_step() {
    for seed in 0..10 {
        let attack = AttackSpec::new([1, 3], AttackMode::IndependentPerStep, 0.0, 1.0, seed).unwrap();
        let attacked = general_cfg(6, attack.clone(), 0.6, 1, seed);
        let clean = general_cfg(6, AttackSpec::none(), 0.6, 1, seed);
        let s0 = init_state(&clean).unwrap();
        let a = step(&s0, &attacked).unwrap();
        let c = step(&s0, &clean).unwrap();
        for i in 0..6 {
            let diff = a.agent(i) - c.agent(i);
            match attack.epsilon_for(i, 0, 2) {
                Some(eps) => assert!((diff - eps.value()).abs().max() <= 1e-15),
                None => assert_eq!(diff.norm(), 0.0),
            }
        }
    }
}

#[test]
fn zero_step_size_is_pure_averaging() {
    for seed in 0..5 {
        let cfg = general_cfg(7, AttackSpec::none(), 0.0, 1, seed);
        let s0 = init_state(&cfg).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        let averaged = cfg.weights().as_matrix() * &s0.x;
        assert!((&s1.x - averaged).abs().max() <= 1e-15);
    }
}

#[test]
fn trajectory_replays_bit_identically() {
    let attack = AttackSpec::new([2, 5], AttackMode::IndependentPerStep, 0.0, 1.0, 77).unwrap();
    let cfg = general_cfg(10, attack, 0.6, 100, 12);
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
}

#[test]
fn attacked_runs_stay_within_geometric_bound() {
    for seed in 0..20 {
        let attack = AttackSpec::new([8, 9], AttackMode::CooperativeFixed, 0.0, 1.0, seed).unwrap();
        let cfg = complete_cfg(10, 1, attack.clone(), InitSpec::Gaussian { sigma: 0.05 }, 0.6, 100, seed);
        let traj = run(&cfg).unwrap();
        let err = error_series(&traj, cfg.objective().x_star(), attack.adversaries());
        let eps = attack.common_epsilon(1).unwrap();
        let geo = bound_curve_geometric(BoundKind::Average, err.avg_error[0], eps.norm(), 0.6, 1.0, 1.0, 100).unwrap();
        assert!(bound_domination_report(&err.avg_error, &geo).unwrap().holds());
    }
}
