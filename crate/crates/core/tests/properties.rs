use proptest::prelude::*;

use potmmcp::belief::{initial_belief, update_root_belief, Convention};
use potmmcp::envs::tiny::INSTANCES;
use potmmcp::envs::{make_driving, make_predator_prey, make_pursuit_evasion, make_tiny_posg};
use potmmcp::metagame::{softmax_row, Tau};
use potmmcp::planner::{puct_scores, ucb_scores};
use potmmcp::policies::tiny::{build_set, default_manifest};
use potmmcp::posg::{derive_seed, discounted_return, horizon_for_epsilon, rng_from_seed, sample_categorical, History};
use potmmcp::{AgentId, Posg};

/// Random rollouts stay inside the declared reward range and are
/// reproducible from the seed.
fn rollout_checks<E: Posg>(env: &E, seed: u64, steps: usize) {
    let run = |seed: u64| {
        let mut rng = rng_from_seed(seed);
        let mut s = env.sample_initial_state(&mut rng);
        let mut trace = vec![format!("{:?}", env.sample_initial_obs(&s, &mut rng))];
        for _ in 0..steps {
            if env.is_terminal(&s) {
                break;
            }
            let actions: Vec<usize> = (0..env.n_agents())
                .map(|a| rand::Rng::gen_range(&mut rng, 0..env.action_count(AgentId(a))))
                .collect();
            let out = env.sample_step(&s, &actions, &mut rng);
            assert_eq!(out.joint_obs.len(), env.n_agents());
            for &r in &out.joint_reward {
                assert!(r >= env.spec().reward_min - 1e-12 && r <= env.spec().reward_max + 1e-12, "reward {r}");
            }
            trace.push(format!("{:?} {:?}", out.joint_obs, out.joint_reward));
            s = out.next_state;
        }
        trace
    };
    assert_eq!(run(seed), run(seed));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_rollouts_are_bounded_and_reproducible(seed in any::<u64>()) {
        rollout_checks(&make_driving(7, 7, "crossroads-7x7", 2).unwrap(), seed, 60);
        rollout_checks(&make_pursuit_evasion("corridors-8x8").unwrap(), seed, 110);
        rollout_checks(&make_predator_prey(2, 2, 3).unwrap(), seed, 60);
        rollout_checks(&make_predator_prey(4, 3, 3).unwrap(), seed, 60);
    }

    #[test]
    fn tiny_rollouts_are_bounded_and_reproducible(seed in any::<u64>(), i in 0..INSTANCES.len()) {
        rollout_checks(&make_tiny_posg(INSTANCES[i]).unwrap(), seed, 8);
    }

    #[test]
    fn softmax_rows_are_distributions(row in prop::collection::vec(-100.0f64..100.0, 1..9), t in 0.0f64..20.0) {
        for tau in [Tau::Finite(t), Tau::Finite(0.0), Tau::Infinite] {
            let p = softmax_row(&row, tau);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
            // Higher payoff never gets less mass.
            for a in 0..row.len() {
                for b in 0..row.len() {
                    if row[a] > row[b] {
                        prop_assert!(p[a] >= p[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn softmax_is_shift_invariant(row in prop::collection::vec(-10.0f64..10.0, 1..6), shift in -50.0f64..50.0, t in 0.01f64..5.0) {
        let shifted: Vec<f64> = row.iter().map(|x| x + shift).collect();
        let (a, b) = (softmax_row(&row, Tau::Finite(t)), softmax_row(&shifted, Tau::Finite(t)));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn puct_prefers_prior_among_unvisited(p in prop::collection::vec(0.01f64..1.0, 2..6), n_h in 1u64..1000) {
        let total: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / total).collect();
        let s = puct_scores(p.iter().map(|&x| (0.0, 0, x)), n_h, 1.25, 0.5);
        for a in 0..p.len() {
            for b in 0..p.len() {
                if p[a] > p[b] {
                    prop_assert!(s[a] > s[b]);
                }
            }
        }
    }

    #[test]
    fn ucb_tries_unvisited_first(ns in prop::collection::vec(0u64..50, 2..6), q in 0.0f64..1.0) {
        let n_h = ns.iter().sum::<u64>().max(1);
        let s = ucb_scores(ns.iter().map(|&n| (q, n)), n_h, 2f64.sqrt());
        for (score, &n) in s.iter().zip(&ns) {
            prop_assert_eq!(score.is_infinite(), n == 0);
        }
    }

    #[test]
    fn discounted_return_is_linear(r in prop::collection::vec(-1.0f64..1.0, 0..30), gamma in 0.0f64..0.999) {
        let direct: f64 = r.iter().enumerate().map(|(k, x)| gamma.powi(k as i32) * x).sum();
        prop_assert!((discounted_return(&r, gamma) - direct).abs() < 1e-9);
    }

    #[test]
    fn horizon_is_the_first_depth_below_epsilon(gamma in 0.01f64..0.999, eps in 0.001f64..0.9) {
        let h = horizon_for_epsilon(gamma, eps);
        prop_assert!(gamma.powi(h as i32) < eps);
        prop_assert!(gamma.powi(h as i32 - 1) >= eps);
    }

    #[test]
    fn categorical_draws_only_supported_outcomes(p in prop::collection::vec(0.0f64..1.0, 1..8), seed in any::<u64>()) {
        prop_assume!(p.iter().sum::<f64>() > 1e-6);
        let total: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / total).collect();
        let mut rng = rng_from_seed(seed);
        for _ in 0..50 {
            let k = sample_categorical(&p, &mut rng);
            prop_assert!(p[k] > 0.0);
        }
    }

    #[test]
    fn child_seeds_differ(parent in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(parent, a), derive_seed(parent, b));
    }

    /// An update on a reachable observation leaves a non-empty belief of
    /// known types, no larger than the top-up cap.
    #[test]
    fn belief_updates_keep_valid_particles(seed in any::<u64>(), i in 0..INSTANCES.len(), a in 0usize..3) {
        let m = make_tiny_posg(INSTANCES[i]).unwrap();
        let set = build_set(&m, &default_manifest(&m).unwrap()).unwrap();
        let a = a % set.planner_action_count();
        let mut rng = rng_from_seed(seed);
        let s = m.sample_initial_state(&mut rng);
        let o0 = m.sample_initial_obs(&s, &mut rng)[0];
        let root = initial_belief(&m, &set, 200, Convention::ObservationFirst, Some(&o0), &mut rng).unwrap();
        prop_assert_eq!(root.len(), 200);
        // An observation drawn from a particle has positive probability.
        let p = root.particles[0].clone();
        let step = potmmcp::belief::step_particle(&m, &set, &p, a, &mut Default::default(), &mut rng);
        let h = History::with_initial(o0).extended(a, step.obs);
        let (b, stats) = update_root_belief(&m, &set, Vec::new(), &root.particles, a, &step.obs, 200, &h, Convention::ObservationFirst, &mut rng).unwrap();
        prop_assert!(!b.is_empty());
        prop_assert!(b.len() <= 213);
        prop_assert!(b.particles.iter().all(|p| p.joint < set.joint_policies().len()));
        prop_assert_eq!(stats.inherited, 0);
    }
}
