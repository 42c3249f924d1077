mod common;

use glearn_core::environments::DEFAULT_CLIFF_MAP;
use glearn_core::learners::alpha;
use glearn_core::metrics::{
    empirical_bias, jensen_bias_demo, mean_abs_error, policy_suboptimality,
};
use glearn_core::oracle::{
    policy_evaluation, soft_bellman, soft_min, soft_value_iteration, value_iteration,
};
use glearn_core::rng::stream;
use glearn_core::{
    build_cliff, build_gridworld, parse_map, Algorithm, BetaSchedule, CostVariant,
    ExplorationRegime, Explorer, Learner, LearnerConfig, StochasticPolicy, TabularMdp,
    TransitionSample, ValueTable,
};
use proptest::prelude::*;
use rand::Rng;

fn learner(algorithm: Algorithm, m: &TabularMdp) -> Learner {
    Learner::new(
        LearnerConfig::new(algorithm, m.gamma()),
        StochasticPolicy::uniform(m.n_states(), m.n_actions()),
    )
    .unwrap()
}

fn uniform_stream(m: &TabularMdp, seed: u64, n: usize) -> Vec<TransitionSample> {
    let probe = learner(Algorithm::QLearning, m);
    let mut e = Explorer::new(ExplorationRegime::UniformIid, m).unwrap();
    let mut rng = stream(seed, &[]);
    (0..n)
        .map(|_| e.next_experience(m, &probe, &mut rng).unwrap())
        .collect()
}

fn noisy_domain() -> TabularMdp {
    let map = parse_map("....\n.#..\n..#.\n...G").unwrap();
    build_gridworld(
        &map,
        CostVariant::GaussianUnit { std: 2.0 },
        0.95,
        &mut stream(0, &[]),
    )
    .unwrap()
    .mdp
}

#[test]
fn limit_equivalences_over_a_shared_stream() {
    let m = noisy_domain();
    let xs = uniform_stream(&m, 5, 10_000);
    let mut rng = stream(0, &[]);
    let g0 = Algorithm::GLearning(BetaSchedule::Constant { beta: 0.0 });
    let g_inf = Algorithm::GLearning(BetaSchedule::Constant { beta: 1e9 });
    let (mut a, mut b) = (learner(g0, &m), learner(Algorithm::QRho, &m));
    let (mut c, mut d) = (learner(g_inf, &m), learner(Algorithm::QLearning, &m));
    let (mut e0, mut q0) = (
        learner(Algorithm::ExpectedSarsa { epsilon: 0.0 }, &m),
        learner(Algorithm::QLearning, &m),
    );
    let (mut e1, mut r1) = (
        learner(Algorithm::ExpectedSarsa { epsilon: 1.0 }, &m),
        learner(Algorithm::QRho, &m),
    );
    for x in &xs {
        assert_eq!(
            a.update(x, &mut rng).to_bits(),
            b.update(x, &mut rng).to_bits()
        );
        // Compare targets on identical tables: copy Q-learning's table into
        // the high-beta learner before each step.
        c.set_table(d.table().clone()).unwrap();
        let ec = c.update(x, &mut rng);
        let ed = d.update(x, &mut rng);
        assert!((ec - ed).abs() < 1e-6, "{ec} vs {ed}");
        e0.update(x, &mut rng);
        q0.update(x, &mut rng);
        e1.update(x, &mut rng);
        r1.update(x, &mut rng);
    }
    assert_eq!(a.table(), b.table());
    assert_eq!(e0.table(), q0.table());
    assert_eq!(e1.table(), r1.table());
}

const ALL: [Algorithm; 8] = [
    Algorithm::QLearning,
    Algorithm::QRho,
    Algorithm::GLearning(BetaSchedule::Linear { k: 1e-3 }),
    Algorithm::GLearning(BetaSchedule::InverseBellmanError {
        scale: 0.5,
        smoothing: 0.999,
    }),
    Algorithm::PsiLearning,
    Algorithm::DoubleQ,
    Algorithm::ConsistentBellman,
    Algorithm::ExpectedSarsa { epsilon: 0.1 },
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn updates_touch_exactly_one_entry(seed in any::<u64>(), which in 0usize..ALL.len()) {
        let m = noisy_domain();
        let mut l = learner(ALL[which], &m);
        let xs = uniform_stream(&m, seed, 400);
        let mut rng = stream(seed, &[9]);
        for (i, x) in xs.iter().enumerate() {
            let before_a = l.table().clone();
            let before_b = l.secondary_table().cloned();
            l.update(x, &mut rng);
            let mut changed = Vec::new();
            for s in 0..m.n_states() {
                for a in 0..m.n_actions() {
                    if before_a.get(s, a).to_bits() != l.table().get(s, a).to_bits() {
                        changed.push((0, s, a));
                    }
                    if let (Some(b0), Some(b1)) = (&before_b, l.secondary_table()) {
                        if b0.get(s, a).to_bits() != b1.get(s, a).to_bits() {
                            changed.push((1, s, a));
                        }
                    }
                }
            }
            prop_assert!(changed.len() <= 1);
            if let Some(&(_, s, a)) = changed.first() {
                prop_assert_eq!((s, a), (x.s, x.a));
            }
            prop_assert!(l.table().is_finite());
            prop_assert_eq!(l.steps(), i as u64 + 1);
        }
        let counted = l.visits().total() + l.secondary_visits().map_or(0, |v| v.total());
        prop_assert_eq!(counted, 400);
    }

    #[test]
    fn bias_is_bounded_by_mean_abs_error(seed in any::<u64>(), runs in 1usize..5, n in 1usize..10) {
        let mut rng = common::rng(seed);
        let mut draw = || ValueTable::new((0..n).map(|_| rng.random_range(-5.0..5.0)).collect());
        let snaps: Vec<_> = (0..runs).map(|_| draw()).collect();
        let stars: Vec<_> = (0..runs).map(|_| draw()).collect();
        let bias = empirical_bias(&snaps, &stars).unwrap();
        let mae = mean_abs_error(&snaps, &stars).unwrap();
        prop_assert!(bias.abs() <= mae + 1e-12);
        prop_assert_eq!(bias.to_bits(), empirical_bias(&snaps, &stars).unwrap().to_bits());
    }

    #[test]
    fn suboptimality_is_nonnegative(seed in any::<u64>(), n in 1usize..7, k in 1usize..4) {
        let m = common::mdp(seed, n, k, 0.9);
        let (_, v_star) = value_iteration(&m, 1e-13).unwrap();
        let pi = common::policy(n, k, &mut common::rng(seed));
        let gap = policy_suboptimality(std::slice::from_ref(&m), &[pi], std::slice::from_ref(&v_star)).unwrap();
        prop_assert!(gap >= -1e-9);
        let greedy = StochasticPolicy::deterministic(
            k,
            &(0..n).map(|s| (seed as usize + s) % k).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert!(policy_suboptimality(&[m], &[greedy], &[v_star]).unwrap() >= -1e-9);
    }
}

/// The sampled G-learning target is an unbiased estimate of the soft
/// Bellman backup of a frozen table.
#[test]
fn innovation_has_zero_mean() {
    let m = noisy_domain();
    let rho = StochasticPolicy::uniform(m.n_states(), m.n_actions());
    let mut rng = stream(31, &[]);
    let g = common::table(m.n_states(), m.n_actions(), 5.0, &mut rng);
    let beta = 1.0;
    let backup = soft_bellman(&m, &rho, beta, &g).unwrap();
    let live = m.non_terminal_states();
    for _ in 0..5 {
        let s = live[rng.random_range(0..live.len())];
        let a = rng.random_range(0..m.n_actions());
        let n = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let (c, s2) = m.sample_transition(&mut rng, s, a).unwrap();
            let next = if m.is_terminal(s2) {
                0.0
            } else {
                soft_min(g.row(s2), rho.row(s2), beta)
            };
            let z = c + m.gamma() * next - backup.get(s, a);
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!(
            mean.abs() < 3.0 * std / (n as f64).sqrt(),
            "({s},{a}) mean {mean} std {std}"
        );
    }
}

/// Partial sums of `n^-omega` keep growing by a non-vanishing amount per
/// decade, while those of `n^-2omega` stay below `1 + 1/(2 omega - 1)`.
#[test]
fn learning_rates_satisfy_robbins_monro() {
    for omega in [0.55, 0.8, 1.0] {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut decade_gains = Vec::new();
        let mut last = 0.0;
        let mut boundary = 10u64;
        for n in 1..=1_000_000u64 {
            let a = alpha(n, omega).unwrap();
            sum += a;
            sum_sq += a * a;
            if n == boundary {
                decade_gains.push(sum - last);
                last = sum;
                boundary *= 10;
            }
        }
        for w in decade_gains.windows(2).skip(1) {
            assert!(w[1] >= 0.99 * w[0], "omega {omega}: {decade_gains:?}");
        }
        assert!(sum_sq < 1.0 + 1.0 / (2.0 * omega - 1.0));
    }
}

fn run_uniform(m: &TabularMdp, algorithm: Algorithm, steps: usize, seed: u64) -> Learner {
    let mut l = learner(algorithm, m);
    let mut e = Explorer::new(ExplorationRegime::UniformIid, m).unwrap();
    let mut rng = stream(seed, &[]);
    for _ in 0..steps {
        let x = e.next_experience(m, &l, &mut rng).unwrap();
        l.update(&x, &mut rng);
    }
    l
}

#[test]
fn qrho_converges_to_prior_values() {
    let m = common::mdp(40, 4, 3, 0.8);
    let rho = StochasticPolicy::uniform(4, 3);
    let (q_rho, _) = policy_evaluation(&m, &rho).unwrap();
    let l = run_uniform(&m, Algorithm::QRho, 1_000_000, 41);
    let d = l.table().sup_distance(&q_rho);
    assert!(d < 0.05, "sup distance {d}");
}

#[test]
fn g_learning_converges_at_fixed_beta() {
    let m = common::mdp(42, 4, 3, 0.8);
    let rho = StochasticPolicy::uniform(4, 3);
    let g_star = soft_value_iteration(&m, &rho, 1.0, 1e-12).unwrap();
    let l = run_uniform(
        &m,
        Algorithm::GLearning(BetaSchedule::Constant { beta: 1.0 }),
        1_000_000,
        43,
    );
    let d = l.table().sup_distance(&g_star);
    assert!(d < 0.05, "sup distance {d}");
}

#[test]
fn jensen_direction_holds() {
    let mut rng = stream(50, &[]);
    let demo = jensen_bias_demo(&[0.0, 0.0], 1.0, 1_000_000, &mut rng).unwrap();
    assert!((demo.mean_of_min + 1.0 / std::f64::consts::PI.sqrt()).abs() < 0.01);
    for _ in 0..1000 {
        let k = rng.random_range(2..6);
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let std = rng.random_range(0.1..5.0);
        let d = jensen_bias_demo(&row, std, 1000, &mut rng).unwrap();
        assert!(d.mean_of_min <= d.true_min + 3.0 * d.std_error);
    }
}

#[test]
fn cliff_trajectories_reset_to_start() {
    let map = parse_map(DEFAULT_CLIFF_MAP).unwrap();
    let d = build_cliff(&map, 0.95).unwrap();
    let m = &d.mdp;
    let start = d.start.unwrap();
    let mut l = learner(Algorithm::QLearning, m);
    let regime = ExplorationRegime::EpsilonGreedy {
        epsilon: 0.1,
        start_state: start,
    };
    let mut e = Explorer::new(regime, m).unwrap();
    let mut rng = stream(60, &[]);
    let mut prev: Option<TransitionSample> = None;
    let mut resets = 0;
    for _ in 0..50_000 {
        let x = e.next_experience(m, &l, &mut rng).unwrap();
        if let Some(p) = prev {
            assert_eq!(x.s, p.s_next);
            if p.c != 1.0 {
                // A fall (cost 5) or goal arrival (cost 0) sends the agent to start.
                assert_eq!(x.s, start);
                resets += 1;
            }
        }
        l.update(&x, &mut rng);
        prev = Some(x);
    }
    assert!(resets > 0);
}
