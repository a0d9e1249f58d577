//! Hand-computed values and small end-to-end behaviours.

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use porrl::cardinal::{
    optimistic_expectation, regret_to_pac, run_cardinal, AlgoParams, Algorithm, CardinalRun, EpisodeRecord, Golf, Learner, RegretLog,
    TransitionMode,
};
use porrl::dueling::{run_dueling, run_dueling_with, DuelingAlgorithm, DuelingContext, DuelingParams};
use porrl::envs::{combination_lock, random_linear_env, random_spec, singleton_instance, trap_instance, LockMode};
use porrl::estimation::{
    beta_threshold, l1_radius, least_squares_fit, reward_bonus_gamma, xi_bonus, z_of, ConfidenceParams, FiniteFunctionClass,
    RadiusInputs,
};
use porrl::pormdp::{
    enumerate_histories, monte_carlo_value_w, optimal_policy, policy_value, simulate_episode, Activation, HistoryPolicy, Shape,
    DEFAULT_HISTORY_CAP,
};
use porrl::Error;

fn lock(actions: usize, horizon: usize, q: f64, mode: LockMode) -> porrl::envs::EnvInstance {
    combination_lock(actions, horizon, q, mode, None).unwrap()
}

// Decision process.

#[test]
fn lock_value_is_q_per_matched_step() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let spec = &inst.spec;
    let (pi, v) = optimal_policy(spec.transitions(), 0, spec.composed_rewards());
    assert_abs_diff_eq!(v, 1.6, epsilon = 1e-12);
    let combo = HistoryPolicy::open_loop(spec.shape(), &[1, 0]);
    assert_eq!(pi.canonical(0).id(), combo.canonical(0).id());
    let wrong_second = HistoryPolicy::open_loop(spec.shape(), &[1, 1]);
    assert_abs_diff_eq!(policy_value(spec.transitions(), 0, spec.composed_rewards(), &wrong_second), 0.8, epsilon = 1e-12);
    let wrong_first = HistoryPolicy::open_loop(spec.shape(), &[0, 0]);
    assert_abs_diff_eq!(policy_value(spec.transitions(), 0, spec.composed_rewards(), &wrong_first), 0.0, epsilon = 1e-12);
}

#[test]
fn trap_optimum_is_one() {
    let inst = trap_instance(4).unwrap();
    let (_, v) = optimal_policy(inst.spec.transitions(), 0, inst.spec.composed_rewards());
    assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
}

#[test]
fn history_cap_is_enforced() {
    let shape = Shape::new(2, 2, 10);
    assert!(matches!(enumerate_histories(&shape, 10, DEFAULT_HISTORY_CAP), Err(Error::HistoryCap { .. })));
    assert_eq!(enumerate_histories(&shape, 9, DEFAULT_HISTORY_CAP).unwrap().len(), 1 << 18);
}

#[test]
fn feedback_mean_matches_q() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let pi = HistoryPolicy::open_loop(inst.shape(), &[1, 0]);
    let n = 20_000;
    let hits: f64 = (0..n).map(|s| simulate_episode(&inst.spec, &pi, s).feedback[0].unwrap()).sum();
    let mean = hits / n as f64;
    assert!((mean - 0.8).abs() <= 3.0 * (0.8f64 * 0.2 / n as f64).sqrt(), "mean {mean}");
}

#[test]
fn episodes_are_reproducible() {
    let spec = random_spec(3, 2, 4, 9).unwrap();
    let pi = HistoryPolicy::from_fn(spec.shape(), |h, code, s| (h + code + s) % 2);
    assert_eq!(simulate_episode(&spec, &pi, 42), simulate_episode(&spec, &pi, 42));
    let traj = simulate_episode(&spec, &pi, 42);
    for h in 1..=4 {
        assert_eq!(traj.feedback[h - 1].is_some(), spec.feedback_steps().contains(&h));
    }
}

#[test]
fn monte_carlo_edge_cases() {
    let (spec, w) = porrl::envs::stochastic_internal_fixture().unwrap();
    let pi = HistoryPolicy::open_loop(spec.shape(), &[0, 1, 0]);
    assert!(monte_carlo_value_w(spec.transitions(), 0, &w, &pi, 0, 1).is_err());
    let (_, se) = monte_carlo_value_w(spec.transitions(), 0, &w, &pi, 1, 1).unwrap();
    assert!(se.is_infinite());
    let (mean, se) = monte_carlo_value_w(spec.transitions(), 0, &w, &pi, 50_000, 3).unwrap();
    let exact = policy_value(spec.transitions(), 0, spec.composed_rewards(), &pi);
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact}");
}

// Estimation.

#[test]
fn least_squares_recovers_the_indicator() {
    let class = FiniteFunctionClass::new(vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.8, 0.0]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<(usize, f64)> = (0..50).map(|_| (1, f64::from(u8::from(rng.random::<f64>() < 0.8)))).collect();
    assert_eq!(least_squares_fit(&class, Activation::Identity, &data), 1);
    assert_eq!(least_squares_fit(&class, Activation::Identity, &[]), 0);
    let noiseless = vec![(0, 0.0), (1, 0.8), (2, 0.0)];
    assert_eq!(least_squares_fit(&class, Activation::Identity, &noiseless), 1);
}

#[test]
fn beta_matches_direct_evaluation() {
    let inp = RadiusInputs { class_size: 4, eta: 1.0, reward_bound: 1.0, episodes: 100, horizon: 3 };
    let d = 0.1 / 6.0;
    let expected = (4.0f64 / d).ln() + (1.0 + (1.0 / d).ln()) / 100.0;
    assert_abs_diff_eq!(beta_threshold(&inp, 1, 0.1, 1.0), expected, epsilon = 1e-12);
    let silent = RadiusInputs { eta: 0.0, ..inp };
    assert_abs_diff_eq!(beta_threshold(&silent, 7, 0.1, 1.0), 7.0 / 100.0, epsilon = 1e-12);
    assert!(beta_threshold(&inp, 0, 0.1, 1.0).is_infinite());
}

#[test]
fn radii_examples() {
    let p8 = ConfidenceParams { delta: 0.1, bonus_scale: 1.0, zeta_prefix: 8.0 };
    assert_eq!(l1_radius(0, 2, 2, 0.1, &p8), 2.0);
    assert_eq!(l1_radius(1, 2, 2, 0.1, &p8), 2.0);
    assert!(l1_radius(100_000, 2, 2, 0.1, &p8) < 0.2);
    assert_eq!(xi_bonus(3, 0, 2, 2, 3, 0.1), 2.0);
    assert!(xi_bonus(10, 1_000_000, 2, 2, 3, 0.1) < 0.1);
    let e = std::f64::consts::E;
    assert_abs_diff_eq!(z_of(e, 1.0).unwrap(), 2.0 * e, epsilon = 1e-12);
    assert!(z_of(0.5, 1.0).unwrap() >= 0.5);
    assert!(z_of(0.0, 1.0).is_err());
}

#[test]
fn gamma_examples() {
    let class = FiniteFunctionClass::new(vec![vec![0.0, 0.0], vec![0.0, 0.7]]).unwrap();
    assert_eq!(reward_bonus_gamma(&class, &[true, true], 1), 0.7);
    assert_eq!(reward_bonus_gamma(&class, &[false, true], 1), 0.0);
    let inst = lock(2, 3, 0.8, LockMode::Dense);
    let full = vec![true; inst.classes[1].len()];
    // Correct length-2 prefix [1, 0] has code 2.
    assert_abs_diff_eq!(reward_bonus_gamma(&inst.classes[1], &full, 2), 0.8, epsilon = 1e-12);
}

// Cardinal learners.

#[test]
fn full_mass_moves_to_the_best_state() {
    assert_abs_diff_eq!(optimistic_expectation(&[0.5, 0.5], 2.0, &[0.0, 1.0]), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(optimistic_expectation(&[0.5, 0.5], 0.4, &[0.0, 1.0]), 0.7, epsilon = 1e-12);
    assert_abs_diff_eq!(optimistic_expectation(&[0.5, 0.5], 0.0, &[0.0, 1.0]), 0.5, epsilon = 1e-12);
}

#[test]
fn zero_episodes_give_an_empty_log() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    for algo in Algorithm::ALL {
        let run = run_cardinal(&inst, algo, AlgoParams::default(), 0, 1).unwrap();
        assert!(run.log.records.is_empty());
        assert_eq!(run.log.final_regret(), 0.0);
    }
}

#[test]
fn first_episode_is_optimistic() {
    let inst = lock(2, 3, 0.8, LockMode::Dense);
    for algo in [Algorithm::PorUcrl, Algorithm::PorUcbvi, Algorithm::Golf] {
        let run = run_cardinal(&inst, algo, AlgoParams::default(), 1, 0).unwrap();
        assert!(run.log.records[0].optimistic_value >= run.log.v_star - 1e-9, "{algo:?}");
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let inst = lock(2, 3, 0.8, LockMode::Dense);
    for algo in Algorithm::ALL {
        let a = run_cardinal(&inst, algo, AlgoParams::default(), 60, 11).unwrap();
        let b = run_cardinal(&inst, algo, AlgoParams::default(), 60, 11).unwrap();
        assert_eq!(a.log, b.log, "{algo:?}");
        assert!(a.log.records.iter().all(|r| r.regret_inc >= -1e-9));
    }
}

#[test]
fn optimism_holds_whenever_the_truth_is_covered() {
    let inst = lock(2, 3, 0.8, LockMode::Dense);
    let params = AlgoParams { bonus_scale: 1.0, ..AlgoParams::default() };
    for algo in [Algorithm::PorUcrl, Algorithm::PorUcbvi] {
        for seed in 0..20 {
            let run = run_cardinal(&inst, algo, params, 200, seed).unwrap();
            for r in run.log.records.iter().filter(|r| r.truth_in_cf && r.truth_in_cp) {
                assert!(r.optimistic_value >= 2.4 - 1e-9, "{algo:?} seed {seed} episode {}", r.episode);
            }
        }
    }
}

#[test]
fn noiseless_lock_is_opened() {
    let inst = lock(2, 3, 1.0, LockMode::Dense);
    for algo in [Algorithm::PorUcrl, Algorithm::PorUcbvi, Algorithm::Golf] {
        for seed in 0..3 {
            let run = run_cardinal(&inst, algo, AlgoParams::default(), 500, seed).unwrap();
            let last = run.log.records.last().unwrap();
            assert_abs_diff_eq!(last.value, 3.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn exact_model_and_singleton_class_plan_optimally() {
    for seed in 0..10 {
        let inst = singleton_instance("random", random_spec(2, 2, 3, seed).unwrap());
        let params = AlgoParams { transition_mode: TransitionMode::Known, ..AlgoParams::default() };
        for algo in [Algorithm::PorUcrl, Algorithm::PorUcbvi, Algorithm::Golf] {
            let run = run_cardinal(&inst, algo, params, 3, seed).unwrap();
            assert!(run.log.final_regret().abs() < 1e-9, "{algo:?} seed {seed}");
        }
    }
}

#[test]
fn golf_set_matches_residual_test() {
    let inst = lock(2, 3, 1.0, LockMode::Dense);
    let loose = AlgoParams { golf_c: 1e6, ..AlgoParams::default() };
    let tight = AlgoParams { golf_c: 1e-12, ..AlgoParams::default() };
    let mut wide = Golf::new(&inst, loose, 100);
    let mut narrow = Golf::new(&inst, tight, 100);
    let spec = &inst.spec;
    let shape = spec.shape();
    let played = [[1, 0, 1], [0, 0, 0], [1, 1, 0]];
    let trajs: Vec<_> = played.iter().enumerate().map(|(i, a)| simulate_episode(spec, &HistoryPolicy::open_loop(shape, a), i as u64)).collect();
    for t in &trajs {
        wide.observe(t);
        narrow.observe(t);
    }
    assert!(wide.mask().iter().all(|&b| b));
    let class = narrow.class().clone();
    let h_n = shape.horizon;
    let target = |i: usize, t: &porrl::pormdp::Trajectory, h: usize| {
        let o = t.feedback[h - 1].unwrap_or(0.0);
        o + if h < h_n { class.next_max[i][h - 1][t.node(&shape, h + 1)] } else { 0.0 }
    };
    let expected: Vec<bool> = (0..class.q.len())
        .map(|i| {
            (1..=h_n).all(|h| {
                let own: f64 = trajs.iter().map(|t| (class.q[i][h - 1][t.code(h)] - target(i, t, h)).powi(2)).sum();
                let best = (0..class.q.len())
                    .map(|g| trajs.iter().map(|t| (class.q[g][h - 1][t.code(h)] - target(i, t, h)).powi(2)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                own <= best + 1e-6
            })
        })
        .collect();
    assert_eq!(narrow.mask(), expected);
    assert!(expected[class.truth]);
    assert!(expected.iter().filter(|&&b| b).count() < expected.len());
}

#[test]
fn pac_draw_is_reproducible_and_exact() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let (pi, v_star) = optimal_policy(inst.spec.transitions(), 0, inst.spec.composed_rewards());
    let record = |episode| EpisodeRecord {
        episode,
        policy_id: pi.canonical(0).id(),
        value: v_star,
        regret_inc: 0.0,
        cum_regret: 0.0,
        optimistic_value: v_star,
        truth_in_cf: true,
        truth_in_cp: true,
    };
    let run = CardinalRun {
        log: RegretLog { v_star, records: (1..=5).map(record).collect() },
        policies: vec![pi.canonical(0)],
        episode_policy: vec![0; 5],
    };
    assert_eq!(regret_to_pac(&run, &inst.spec, 3).unwrap().1, 0.0);
    let played = run_cardinal(&inst, Algorithm::PorUcrl, AlgoParams::default(), 50, 4).unwrap();
    let a = regret_to_pac(&played, &inst.spec, 8).unwrap();
    let b = regret_to_pac(&played, &inst.spec, 8).unwrap();
    assert_eq!(a.0.id(), b.0.id());
    assert_eq!(a.1, b.1);
    let empty = CardinalRun { episode_policy: Vec::new(), ..run };
    assert!(regret_to_pac(&empty, &inst.spec, 0).is_err());
}

// Dueling.

#[test]
fn singleton_confidence_gives_the_optimizers() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    let truth: Vec<Vec<bool>> = (0..inst.classes.len()).map(|i| (0..inst.classes[i].len()).map(|c| c == inst.truth(i)).collect()).collect();
    assert_eq!(ctx.candidate_set(&[true], &truth), ctx.optimal_set());
    assert_abs_diff_eq!(ctx.v_star, 1.6, epsilon = 1e-12);
    assert_abs_diff_eq!(ctx.v_min, 0.0, epsilon = 1e-12);
}

#[test]
fn two_surviving_combos_give_two_candidates() {
    let inst = lock(2, 2, 0.8, LockMode::Sparse);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    // Full codes: [1, 0] is 2 and [0, 1] is 1; candidate 1 + code.
    let mask: Vec<bool> = (0..inst.classes[0].len()).map(|c| c == 3 || c == 2).collect();
    let cand = ctx.candidate_set(&[true], std::slice::from_ref(&mask));
    let id = |a: &[usize]| HistoryPolicy::open_loop(inst.shape(), a).canonical(0).id();
    let mut ids: Vec<String> = cand.iter().map(|&k| ctx.policies[k].id()).collect();
    ids.sort();
    let mut want = vec![id(&[1, 0]), id(&[0, 1])];
    want.sort();
    assert_eq!(ids, want);
    let (k1, k2) = (cand[0], cand[1]);
    let (hi, lo) = ctx.gap_range(&[true], std::slice::from_ref(&mask), k1, k2);
    assert_abs_diff_eq!(hi - lo, 1.6, epsilon = 1e-12);
    let n = ctx.policies.len();
    for a in 0..n {
        for b in 0..n {
            let (h, l) = ctx.gap_range(&[true], std::slice::from_ref(&mask), a, b);
            assert!(h - l <= hi - lo + 1e-12);
        }
    }
}

#[test]
fn full_class_candidates_cover_every_combo() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    let full: Vec<Vec<bool>> = inst.classes.iter().map(|c| vec![true; c.len()]).collect();
    let cand = ctx.candidate_set(&[true], &full);
    for code in 0..4 {
        let digits = [code / 2, code % 2];
        let id = HistoryPolicy::open_loop(inst.shape(), &digits).canonical(0).id();
        assert!(cand.iter().any(|&k| ctx.policies[k].id() == id));
    }
}

#[test]
fn candidates_shrink_with_the_confidence_set() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let big: Vec<Vec<bool>> = inst.classes.iter().map(|c| (0..c.len()).map(|k| k == 0 || rng.random::<bool>()).collect()).collect();
        let small: Vec<Vec<bool>> = big.iter().map(|m| m.iter().enumerate().map(|(k, &b)| b && (k == 0 || rng.random::<bool>())).collect()).collect();
        let (cb, cs) = (ctx.candidate_set(&[true], &big), ctx.candidate_set(&[true], &small));
        assert!(cs.iter().all(|k| cb.contains(k)));
    }
}

#[test]
fn gap_range_is_sign_symmetric() {
    for seed in 0..5 {
        let inst = random_linear_env(2, 2, 2, vec![1, 2], 2, 3, seed).unwrap();
        let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
        let full: Vec<Vec<bool>> = inst.classes.iter().map(|c| vec![true; c.len()]).collect();
        let n = ctx.policies.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let (h1, l1) = ctx.gap_range(&[true], &full, a, b);
            let (h2, l2) = ctx.gap_range(&[true], &full, b, a);
            assert_abs_diff_eq!(h1, -l2, epsilon = 1e-12);
            assert_abs_diff_eq!(l1, -h2, epsilon = 1e-12);
        }
    }
}

#[test]
fn confidence_duels_keep_an_optimal_candidate() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    let params = DuelingParams::default();
    let covered = (0..100)
        .filter(|&seed| {
            let run = run_dueling_with(&ctx, DuelingAlgorithm::DuelConfidence, params, 200, seed).unwrap();
            run.records.iter().all(|r| r.opt_in_candidates)
        })
        .count();
    assert!(covered >= 90, "{covered}/100");
}

#[test]
fn first_round_candidates() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    let bonus = run_dueling_with(&ctx, DuelingAlgorithm::DuelBonus, DuelingParams::default(), 1, 0).unwrap();
    assert_eq!(bonus.records[0].candidate_count, ctx.policies.len());
    let conf = run_dueling_with(&ctx, DuelingAlgorithm::DuelConfidence, DuelingParams::default(), 1, 0).unwrap();
    assert!(conf.records[0].candidate_count >= 4);
}

#[test]
fn equal_values_give_zero_duel_regret() {
    let mut spec_doc = random_spec(2, 2, 2, 3).unwrap().doc().clone();
    for table in &mut spec_doc.rewards {
        for row in table.iter_mut().flatten() {
            row.iter_mut().for_each(|x| *x = 0.5);
        }
    }
    let inst = singleton_instance("flat", porrl::pormdp::PormdpSpec::new(spec_doc).unwrap());
    for algo in DuelingAlgorithm::ALL {
        let run = run_dueling(&inst, algo, DuelingParams::default(), 50, 1).unwrap();
        assert!(run.final_regret().abs() < 1e-9, "{algo:?}");
    }
}

#[test]
fn naive_reduction_pairs_against_a_minimizer() {
    let inst = lock(2, 2, 0.8, LockMode::Dense);
    let ctx = DuelingContext::new(&inst, 1 << 20).unwrap();
    let rounds = 2000;
    let run = run_dueling_with(&ctx, DuelingAlgorithm::NaiveUcrl, DuelingParams::default(), rounds, 0).unwrap();
    let tail = &run.records[3 * rounds / 4..];
    let near_min = tail.iter().filter(|r| (r.value2 - ctx.v_min).abs() <= 0.1).count();
    assert!(near_min as f64 >= 0.9 * tail.len() as f64, "{near_min}/{}", tail.len());
    let avg: f64 = tail.iter().map(|r| r.duel_regret_inc).sum::<f64>() / tail.len() as f64;
    assert!(avg >= 0.3 * (ctx.v_star - ctx.v_min), "{avg}");
}

fn first_optimal(inst: &porrl::envs::EnvInstance, algo: Algorithm, episodes: usize, seed: u64) -> usize {
    let run = run_cardinal(inst, algo, AlgoParams::default(), episodes, seed).unwrap();
    run.log.records.iter().find(|r| r.regret_inc <= 1e-9).map_or(episodes + 1, |r| r.episode)
}

// Measured 0/100: GOLF needs several observations per wrong prefix before its
// residual test drops a tuple, while the per-step reward sets drop it after one.
#[test]
#[ignore = "fails: GOLF first plays the combination at episode 31 in every seed, POR-UCRL at 3"]
fn golf_opens_the_lock_no_later_than_ucrl() {
    let inst = lock(2, 4, 0.8, LockMode::Dense);
    let episodes = 400;
    let wins = (0..100u64)
        .filter(|&seed| first_optimal(&inst, Algorithm::Golf, episodes, seed) <= first_optimal(&inst, Algorithm::PorUcrl, episodes, seed))
        .count();
    assert!(wins >= 70, "{wins}/100");
}
