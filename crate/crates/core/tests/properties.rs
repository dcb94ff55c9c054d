use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use hyper_explore::env::{Cell, EnvConfig, EpisodicEnv, GridNav};
use hyper_explore::harness::config::OPTIMISM;
use hyper_explore::harness::VisitationMatrix;
use hyper_explore::mdp::FiniteMdp;
use hyper_explore::oracle::{bellman_residual, cumulative_regret, policy_evaluation, value_iteration, DeterministicPolicy};
use hyper_explore::schedules::{bounded_geom_pmf, clamped_geom_pmf, BoundedGeometric, LengthMode, RepositionSchedule};
use hyper_explore::tabular::{AgentMode, LearningRate, TabularAgent, TabularTransition};
use hyper_explore::Prng;

fn grid() -> impl Strategy<Value = EnvConfig> {
    (2usize..8, 2usize..8, 1usize..40, any::<u64>()).prop_filter_map("distinct cells", |(w, h, horizon, seed)| {
        let mut rng = Prng::seed_from_u64(seed);
        let mut cell = || Cell::new(rng.gen_range(0..w), rng.gen_range(0..h));
        let cfg = EnvConfig {
            width: w,
            height: h,
            start: cell(),
            optimal_goal: cell(),
            suboptimal_goal: cell(),
            optimal_reward: 1.0,
            suboptimal_reward: 0.1,
            horizon,
            gamma: 0.98,
        };
        cfg.validate().ok().map(|_| cfg)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmfs_are_distributions(p in 1e-4f64..=1.0, h in 1usize..3000) {
        let bounded: Vec<f64> = (1..=h).map(|l| bounded_geom_pmf(p, h, l).unwrap()).collect();
        let clamped: Vec<f64> = (1..=h).map(|l| clamped_geom_pmf(p, h, l).unwrap()).collect();
        prop_assert!(bounded.iter().chain(&clamped).all(|&q| (0.0..=1.0).contains(&q)));
        prop_assert!((bounded.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((clamped.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // the renormalized pmf is non-increasing in l
        prop_assert!(bounded.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert_eq!(bounded_geom_pmf(p, h, 0).unwrap(), 0.0);
        prop_assert_eq!(bounded_geom_pmf(p, h, h + 1).unwrap(), 0.0);
    }

    #[test]
    fn reposition_lengths_stay_in_range(p in 1e-3f64..=1.0, h in 1usize..500, seed in any::<u64>()) {
        let mut rng = Prng::seed_from_u64(seed);
        let dist = BoundedGeometric::new(p, h).unwrap();
        let schedule = RepositionSchedule::constant(p, h).unwrap();
        for k in 1..50 {
            prop_assert!((1..=h).contains(&rng.sample(dist)));
            let b = schedule.sample(k, LengthMode::Bounded, &mut rng);
            prop_assert!((1..=h).contains(&b.length) && !b.full_exploration);
            let u = schedule.sample(k, LengthMode::Unbounded, &mut rng);
            prop_assert!(u.length <= h);
            prop_assert_eq!(u.full_exploration, u.length == 0);
        }
    }

    #[test]
    fn gridnav_episodes_are_well_formed(cfg in grid(), seed in any::<u64>()) {
        let mut env = GridNav::new(cfg.clone()).unwrap();
        let mut rng = Prng::seed_from_u64(seed);
        for _ in 0..5 {
            let mut s = EpisodicEnv::reset(&mut env, &mut rng);
            prop_assert_eq!(s, cfg.state_of(cfg.start));
            let mut steps = 0;
            loop {
                let out = EpisodicEnv::step(&mut env, rng.gen_range(0..4), &mut rng).unwrap();
                steps += 1;
                let c = cfg.cell_of(out.next_state);
                prop_assert!(c.x < cfg.width && c.y < cfg.height);
                prop_assert!(cfg.cell_of(s).manhattan(c) <= 1);
                let goal = c == cfg.optimal_goal || c == cfg.suboptimal_goal;
                prop_assert_eq!(out.terminated, goal);
                prop_assert_eq!(out.reward != 0.0, goal);
                prop_assert!(steps <= cfg.horizon);
                s = out.next_state;
                if out.done() {
                    prop_assert!(out.terminated || steps == cfg.horizon);
                    break;
                }
            }
        }
    }

    #[test]
    fn oracle_dominates_every_policy(n_s in 1usize..10, n_a in 1usize..4, h in 1usize..12, gamma in 0.5f64..=1.0, seed in any::<u64>()) {
        let mut rng = Prng::seed_from_u64(seed);
        let mdp = FiniteMdp::random(n_s, n_a, &mut rng);
        let sol = value_iteration(&mdp, h, gamma).unwrap();
        prop_assert!(bellman_residual(&mdp, &sol) <= 1e-10);
        let policy = DeterministicPolicy {
            actions: (0..h).map(|_| (0..n_s).map(|_| rng.gen_range(0..n_a)).collect()).collect(),
        };
        let v = policy_evaluation(&mdp, &policy, h, gamma).unwrap();
        for step in 0..=h {
            for s in 0..n_s {
                prop_assert!(v.v[step][s] <= sol.v_star[step][s] + 1e-10);
            }
        }
        let regret = cumulative_regret(sol.initial_value(mdp.start()), &[v.initial_value(mdp.start()); 4]).unwrap();
        prop_assert!(regret.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn exploitation_table_ignores_beta(beta_a in 0.0f64..1e6, beta_b in 0.0f64..1e6, n_s in 1usize..8, seed in any::<u64>()) {
        let mut rng = Prng::seed_from_u64(seed);
        let mdp = FiniteMdp::random(n_s, 3, &mut rng);
        let make = |beta| TabularAgent::with_optimism(AgentMode::Hyper, n_s, 3, 10, 0.95, beta, LearningRate::HorizonDecay, OPTIMISM);
        let (mut a, mut b) = (make(beta_a), make(beta_b));
        let mut s = mdp.start();
        for _ in 0..300 {
            let action = rng.gen_range(0..3);
            let next = mdp.sample_next(s, action, &mut rng);
            let t = TabularTransition {
                state: s,
                action,
                reward: mdp.reward(s, action),
                next_state: next,
                terminated: mdp.is_terminal(s, action),
            };
            a.observe(&t);
            b.observe(&t);
            s = if t.terminated { mdp.start() } else { next };
        }
        prop_assert!(a.q_exploit().iter().zip(b.q_exploit()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn bonus_and_step_size_shrink_with_visits(beta in 1e-4f64..100.0, h in 1usize..300, n in 1u64..10_000) {
        let agent = TabularAgent::new(AgentMode::Ucbq, 1, 1, h, 0.99, beta, LearningRate::HorizonDecay);
        prop_assert!(agent.bonus(n + 1) < agent.bonus(n));
        let lr = LearningRate::HorizonDecay;
        prop_assert!(lr.alpha(h, n) <= 1.0 && lr.alpha(h, n) > 0.0);
        prop_assert!(lr.alpha(h, n + 1) < lr.alpha(h, n));
    }

    #[test]
    fn visitation_csv_round_trips(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
        let mut rng = Prng::seed_from_u64(seed);
        let mut v = VisitationMatrix::new(w, h);
        for _ in 0..rng.gen_range(0..500) {
            v.record(rng.gen_range(0..w * h));
        }
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        prop_assert_eq!(VisitationMatrix::read_csv(&buf[..]).unwrap(), v);
    }
}
