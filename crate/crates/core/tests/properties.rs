use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use porrl::cardinal::{build_q_class, extended_value_iteration, optimistic_expectation};
use porrl::dims::{
    be_dim, check_dist_witness, check_eluder_witness, dist_eluder_dim, eluder_dim, habe_dim, DimOptions, FiniteDimQuery,
};
use porrl::envs::{random_linear_env, random_spec, random_transitions};
use porrl::estimation::{
    beta_threshold, l1_radius, least_squares_fit, mse, reward_bonus_gamma, xi_bonus, z_of, ConfidenceParams, FiniteFunctionClass,
    RadiusInputs, RewardFit, TransitionCounts,
};
use porrl::pormdp::{
    enumerate_policies, occupancy, optimal_policy, policy_value, Activation, HistoryPolicy, HistoryRewards, PormdpSpec, Shape,
};

fn random_policy(shape: Shape, seed: u64) -> HistoryPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HistoryPolicy::from_fn(shape, |_, _, _| rng.random_range(0..shape.actions))
}

fn stochastic_policy(shape: Shape, seed: u64) -> HistoryPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = (1..=shape.horizon)
        .map(|h| {
            (0..shape.nodes(h))
                .flat_map(|_| {
                    let raw: Vec<f64> = (0..shape.actions).map(|_| rng.random::<f64>() + 1e-3).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(move |x| x / total)
                })
                .collect()
        })
        .collect();
    HistoryPolicy::stochastic(shape, probs).unwrap()
}

fn small_spec() -> impl Strategy<Value = PormdpSpec> {
    (1usize..=3, 1usize..=3, 1usize..=3, any::<u64>()).prop_map(|(s, a, h, seed)| random_spec(s, a, h, seed).unwrap())
}

fn class_values() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5, 1usize..=6).prop_flat_map(|(n, d)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), n))
}

fn grid_class() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5, 1usize..=6).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), d), n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn history_codes_roundtrip(s in 1usize..=4, a in 1usize..=4, h in 0usize..=5, raw in any::<u64>()) {
        let shape = Shape::new(s, a, 5);
        let code = (raw as usize) % shape.count(h);
        let pairs = shape.decode(code, h);
        prop_assert!(pairs.iter().all(|&(x, y)| x < s && y < a));
        prop_assert_eq!(shape.encode(&pairs), code);
    }

    #[test]
    fn occupancy_is_a_distribution(spec in small_spec(), seed in any::<u64>()) {
        let pi = stochastic_policy(spec.shape(), seed);
        for d in occupancy(spec.transitions(), spec.initial_state(), &pi) {
            prop_assert!(d.iter().all(|&p| p >= 0.0));
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn no_policy_beats_the_planner(spec in small_spec(), seed in any::<u64>()) {
        let (trans, s1, f) = (spec.transitions(), spec.initial_state(), spec.composed_rewards());
        let (pi_star, v_star) = optimal_policy(trans, s1, f);
        prop_assert!((policy_value(trans, s1, f, &pi_star) - v_star).abs() < 1e-9);
        prop_assert!(policy_value(trans, s1, f, &random_policy(spec.shape(), seed)) <= v_star + 1e-9);
        prop_assert!(policy_value(trans, s1, f, &stochastic_policy(spec.shape(), seed)) <= v_star + 1e-9);
    }

    #[test]
    fn planner_matches_exhaustive_search(s in 1usize..=2, a in 1usize..=2, h in 1usize..=3, seed in any::<u64>()) {
        let spec = random_spec(s, a, h, seed).unwrap();
        let (trans, s1, f) = (spec.transitions(), spec.initial_state(), spec.composed_rewards());
        let best = enumerate_policies(spec.shape(), s1, 1 << 20)
            .unwrap()
            .iter()
            .map(|pi| policy_value(trans, s1, f, pi))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((optimal_policy(trans, s1, f).1 - best).abs() < 1e-9);
    }

    #[test]
    fn value_is_linear_in_rewards(spec in small_spec(), seed in any::<u64>(), c in -3.0f64..3.0) {
        let f = spec.composed_rewards();
        let rng = std::cell::RefCell::new(ChaCha8Rng::seed_from_u64(seed));
        let g = f.map(|_, _, _| rng.borrow_mut().random::<f64>());
        let combo = HistoryRewards::new(
            f.shape(),
            (1..=f.shape().horizon).map(|h| f.get(h).map(|t| t.iter().zip(g.get(h).unwrap()).map(|(x, y)| x + c * y).collect())).collect(),
        ).unwrap();
        let pi = stochastic_policy(spec.shape(), seed ^ 1);
        let v = |r: &HistoryRewards| policy_value(spec.transitions(), spec.initial_state(), r, &pi);
        prop_assert!((v(&combo) - v(f) - c * v(&g)).abs() < 1e-10);
    }

    #[test]
    fn canonical_form_keeps_behaviour(spec in small_spec(), seed in any::<u64>()) {
        let pi = random_policy(spec.shape(), seed);
        let s1 = spec.initial_state();
        let canon = pi.canonical(s1);
        let f = spec.composed_rewards();
        prop_assert!((policy_value(spec.transitions(), s1, f, &pi) - policy_value(spec.transitions(), s1, f, &canon)).abs() < 1e-12);
        prop_assert_eq!(canon.canonical(s1).id(), canon.id());
    }

    #[test]
    fn optimistic_expectation_dominates_the_ball(
        raw in prop::collection::vec(0.01f64..1.0, 2..6),
        v_seed in any::<u64>(),
        radius in 0.0f64..2.0,
        lambda in 0.0f64..1.0,
        j in any::<prop::sample::Index>(),
    ) {
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(v_seed);
        let v: Vec<f64> = p.iter().map(|_| rng.random::<f64>()).collect();
        let best = optimistic_expectation(&p, radius, &v);
        let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let base: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!(best >= base - 1e-12 && best <= vmax + 1e-12);
        // Mixing towards a point mass by `lambda * radius / 2` stays in the ball.
        let k = j.index(p.len());
        let m = lambda * radius / 2.0;
        let q: f64 = p.iter().zip(&v).enumerate().map(|(i, (pi, vi))| ((1.0 - m) * pi + if i == k { m } else { 0.0 }) * vi).sum();
        prop_assert!(best >= q - 1e-12);
        prop_assert!(optimistic_expectation(&p, (radius + 0.3).min(2.0), &v) >= best - 1e-12);
    }

    #[test]
    fn evi_is_optimistic_and_monotone(spec in small_spec(), seed in any::<u64>()) {
        let shape = spec.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p_hat = random_transitions(shape.states, shape.actions, &mut rng);
        let f = spec.composed_rewards();
        let s1 = spec.initial_state();
        let r1: Vec<f64> = (0..shape.states * shape.actions).map(|_| rng.random::<f64>() * 2.0).collect();
        let r2: Vec<f64> = r1.iter().map(|r| (r + rng.random::<f64>()).min(2.0)).collect();
        let zero = vec![0.0; r1.len()];
        let (_, v0) = extended_value_iteration(&p_hat, &zero, s1, f);
        prop_assert!((v0 - optimal_policy(&p_hat, s1, f).1).abs() < 1e-9);
        let (pi1, v1) = extended_value_iteration(&p_hat, &r1, s1, f);
        let (_, v2) = extended_value_iteration(&p_hat, &r2, s1, f);
        prop_assert!(v1 >= policy_value(&p_hat, s1, f, &pi1) - 1e-9);
        prop_assert!(v1 >= v0 - 1e-9 && v2 >= v1 - 1e-9);
    }

    #[test]
    fn incremental_fit_matches_batch(values in class_values(), obs in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..1.0), 0..40)) {
        let class = FiniteFunctionClass::new(values).unwrap();
        let data: Vec<(usize, f64)> = obs.iter().map(|(i, o)| (i.index(class.domain()), *o)).collect();
        let mut fit = RewardFit::new(class.len(), Activation::Identity);
        for &(x, o) in &data {
            fit.observe(&class, x, o);
        }
        let loss = |c: usize| data.iter().map(|&(x, o)| (class.candidate(c)[x] - o).powi(2)).sum::<f64>();
        let batch = least_squares_fit(&class, Activation::Identity, &data);
        prop_assert!((loss(fit.fit()) - loss(batch)).abs() < 1e-9);
        prop_assert!((0..class.len()).all(|c| loss(batch) <= loss(c) + 1e-12));
        let xs: Vec<usize> = data.iter().map(|d| d.0).collect();
        for c in 0..class.len() {
            prop_assert!((fit.mse(&class, c, fit.fit()) - mse(&class, Activation::Identity, &xs, c, fit.fit())).abs() < 1e-9);
        }
    }

    #[test]
    fn radii_respect_their_clips(n in 0usize..10_000, s in 1usize..6, a in 1usize..6, h in 1usize..6, t in 1usize..1000, delta in 0.001f64..0.5) {
        let params = ConfidenceParams { delta, bonus_scale: 1.0, zeta_prefix: 8.0 };
        let r = l1_radius(n, s, a, delta, &params);
        prop_assert!((0.0..=2.0).contains(&r));
        prop_assert!(l1_radius(n + 1, s, a, delta, &params) <= r + 1e-12);
        let xi = xi_bonus(t, n, s, a, h, delta);
        prop_assert!((0.0..=2.0).contains(&xi));
        if n == 0 {
            prop_assert_eq!(xi, 2.0);
            prop_assert_eq!(r, 2.0);
        }
    }

    #[test]
    fn beta_grows_with_time(size in 1usize..100, eta in 0.0f64..2.0, t in 1usize..500, h in 1usize..6, delta in 0.001f64..0.5) {
        let inp = RadiusInputs { class_size: size, eta, reward_bound: 1.0, episodes: 500, horizon: h };
        let b = beta_threshold(&inp, t, delta, 1.0);
        prop_assert!(b >= 0.0);
        prop_assert!(beta_threshold(&inp, t + 1, delta, 1.0) >= b);
    }

    #[test]
    fn z_dominates_and_grows(d in 1e-6f64..100.0, step in 0.0f64..10.0) {
        let z = z_of(d, 1.0).unwrap();
        prop_assert!(z >= d);
        prop_assert!(z_of(d + step, 1.0).unwrap() >= z);
    }

    #[test]
    fn gamma_is_a_spread(values in class_values(), mask_bits in any::<u64>(), x in any::<prop::sample::Index>()) {
        let class = FiniteFunctionClass::new(values).unwrap();
        let mask: Vec<bool> = (0..class.len()).map(|c| c == 0 || mask_bits >> c & 1 == 1).collect();
        let x = x.index(class.domain());
        let g = reward_bonus_gamma(&class, &mask, x);
        prop_assert!(g >= 0.0);
        let one: Vec<bool> = (0..class.len()).map(|c| c == 0).collect();
        prop_assert_eq!(reward_bonus_gamma(&class, &one, x), 0.0);
        prop_assert!(reward_bonus_gamma(&class, &vec![true; class.len()], x) >= g);
    }

    #[test]
    fn mle_rows_are_distributions(s in 1usize..5, a in 1usize..4, visits in prop::collection::vec(any::<(u8, u8, u8)>(), 0..60)) {
        let mut counts = TransitionCounts::new(s, a);
        for (x, y, z) in visits {
            counts.observe(x as usize % s, y as usize % a, z as usize % s);
        }
        let p = counts.mle();
        for st in 0..s {
            for ac in 0..a {
                prop_assert!((p.row(st, ac).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spec_json_roundtrip(spec in small_spec()) {
        let back = PormdpSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eluder_dimension_is_monotone_and_certified(class in grid_class(), e1 in 0.05f64..0.6, e2 in 0.05f64..0.6) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let opts = DimOptions::default();
        let a = eluder_dim(&class, lo, opts);
        let b = eluder_dim(&class, hi, opts);
        prop_assert!(a.dim >= b.dim);
        prop_assert!(a.dim <= class[0].len());
        prop_assert_eq!(a.witness.points.len(), a.dim);
        prop_assert!(check_eluder_witness(&class, &a.witness, lo));
        prop_assert!(check_eluder_witness(&class, &b.witness, hi));
        if class.len() > 1 {
            let fewer = eluder_dim(&class[..class.len() - 1], lo, opts);
            prop_assert!(fewer.dim <= a.dim);
        }
    }

    #[test]
    fn distributional_dimension_is_monotone_in_the_family(
        functions in grid_class(),
        raw in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 1..6),
        eps in 0.05f64..0.4,
    ) {
        let d = functions[0].len();
        let distributions: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| {
                let total: f64 = r[..d].iter().sum::<f64>() + 1e-9;
                r[..d].iter().map(|x| (x + 1e-9 / d as f64) / total).collect()
            })
            .collect();
        let query = FiniteDimQuery { functions: functions.clone(), distributions: distributions.clone(), epsilon: eps, alpha: None };
        let opts = DimOptions::default();
        let full = dist_eluder_dim(&query, opts).unwrap();
        prop_assert!(check_dist_witness(&query, &full.witness));
        prop_assert!(full.dim <= distributions.len());
        let fewer_mu = FiniteDimQuery { distributions: distributions[..distributions.len() - 1].to_vec(), ..query.clone() };
        if !fewer_mu.distributions.is_empty() {
            prop_assert!(dist_eluder_dim(&fewer_mu, opts).unwrap().dim <= full.dim);
        }
        let fewer_f = FiniteDimQuery { functions: functions[..functions.len().div_ceil(2)].to_vec(), ..query };
        prop_assert!(dist_eluder_dim(&fewer_f, opts).unwrap().dim <= full.dim);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gated_dimension_never_exceeds_ungated(seed in any::<u64>(), alpha in 0.0f64..0.5, candidates in 2usize..5) {
        let inst = random_linear_env(2, 2, 2, vec![1, 2], 2, candidates, seed).unwrap();
        let class = build_q_class(&inst);
        let opts = DimOptions::default();
        let habe = habe_dim(&class, &inst.spec, alpha, 0.05, opts).unwrap();
        let be = be_dim(&class, &inst.spec, 0.05, opts).unwrap();
        for (a, b) in habe.per_h_dims.iter().zip(&be.per_h_dims) {
            prop_assert!(a <= b);
        }
        prop_assert!(habe.gated_sizes.windows(2).all(|w| w[1] <= w[0]));
    }
}
