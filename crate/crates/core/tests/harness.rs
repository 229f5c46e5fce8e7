use potmmcp::harness::{
    build_problem, evaluate_problem, quartile_comparison, run_evaluation, AnyProblem, Baseline, EnvConfig, EpisodeRecord,
    RunConfig, SearchPolicy, StepRecord,
};
use potmmcp::metagame::Tau;
use potmmcp::planner::{PlannerConfig, RolloutPolicy};
use potmmcp::with_problem;

fn tiny(instance: &str, sims: usize, dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::potmmcp(EnvConfig::Tiny { instance: instance.into() }, sims);
    c.episodes = 8;
    c.episodes_per_cell = 200;
    c.seed = 3;
    c.output_dir = dir.to_path_buf();
    c
}

fn pe(sims: usize, dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::potmmcp(EnvConfig::PursuitEvasion { layout: "corridors-8x8".into() }, sims);
    c.episodes = 4;
    c.episodes_per_cell = 20;
    c.value_episodes = 20;
    c.max_steps = Some(15);
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn metapolicy_baseline_never_builds_a_tree() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny("coord", 50, dir.path());
    c.baseline = Baseline::MetapolicyOnly;
    assert_eq!(c.method(), "metapolicy");
    let ev = run_evaluation(&c).unwrap();
    assert_eq!(ev.summary.trees_built, 0);
    assert_eq!(ev.summary.meta_queries, 0);
    for r in &ev.records {
        assert!(r.steps.iter().all(|s| s.simulations == 0 && s.prob_true_type.is_nan()));
    }
}

#[test]
fn best_response_plays_the_row_maximising_the_true_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny("reveal", 50, dir.path());
    c.baseline = Baseline::BestResponse;
    let problem = build_problem(&c).unwrap();
    let AnyProblem::Tiny(p) = &problem else { unreachable!() };
    let ev = evaluate_problem(p, &c).unwrap();
    assert_eq!(ev.summary.trees_built, 0);
    // The chosen row is a best response to each episode's true column.
    for r in &ev.records {
        let col = p.table.cols.iter().position(|c| *c == r.true_joint).unwrap();
        let row = &p.table.rows[p.table.best_response(col)];
        let best = p.table.cell(row, &r.true_joint).unwrap().mean;
        assert!(p.table.rows.iter().all(|other| p.table.cell(other, &r.true_joint).unwrap().mean <= best));
    }
}

#[test]
fn point_prior_makes_the_belief_certain() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny("coord", 200, dir.path());
    let AnyProblem::Tiny(mut p) = build_problem(&c).unwrap() else { unreachable!() };
    p.set = std::sync::Arc::new(p.set.with_point_prior(0));
    let ev = evaluate_problem(&p, &c).unwrap();
    for r in &ev.records {
        for s in &r.steps {
            assert_eq!(s.prob_true_type, 1.0);
            assert!(s.action_dist_distance.abs() < 1e-12);
        }
    }
}

#[test]
fn planner_steps_report_search_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny("tiger", 300, dir.path());
    let ev = run_evaluation(&c).unwrap();
    assert_eq!(ev.records.len(), 8);
    for r in &ev.records {
        assert_eq!(r.trees_built, 1);
        assert!(r.steps.len() <= 5);
        for s in &r.steps {
            assert_eq!(s.simulations, 300);
            assert!(s.particles > 0);
            let visits: u64 = s.root_visits.split(';').map(|v| v.parse::<u64>().unwrap()).sum();
            // The tree is reused after each step, so only the first root is
            // bounded by the per-step budget.
            assert!(visits > 0 && (s.t > 0 || visits <= 300));
            assert!((0.0..=1.0).contains(&s.prob_true_type));
        }
    }
    assert!(ev.summary.meta_queries > 0);
}

#[test]
fn ipomcp_pf_random_never_queries_the_meta_policy() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = pe(100, dir.path());
    c.planner = PlannerConfig::ipomcp_pf(100, RolloutPolicy::Random);
    assert_eq!(c.method(), "ipomcp-pf-random");
    let ev = run_evaluation(&c).unwrap();
    assert_eq!(ev.summary.meta_queries, 0);
    assert!(ev.summary.mean_max_depth > 0.0);
}

#[test]
fn evaluation_writes_csvs_with_seed_and_hash_first() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny("noop", 100, dir.path());
    let ev = run_evaluation(&c).unwrap();
    let names: Vec<String> = ev.files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(
        names,
        [
            "potmmcp_tiny-noop_episodes.csv",
            "potmmcp_tiny-noop_steps.csv",
            "potmmcp_tiny-noop_summary.csv",
            "potmmcp_tiny-noop_manifest.json"
        ]
    );
    let hash = c.hash();
    for f in &ev.files[..3] {
        let text = std::fs::read_to_string(f).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("seed,config_hash,"), "{}", f.display());
        for line in lines {
            assert!(line.starts_with(&format!("3,{hash},")), "{line}");
        }
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ev.files[3]).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], hash.as_str());
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = pe(60, dir.path());
    c.workers = Some(1);
    let a = run_evaluation(&c).unwrap();
    c.workers = Some(3);
    let b = run_evaluation(&c).unwrap();
    assert_eq!(format!("{:?}", a.records), format!("{:?}", b.records));
}

#[test]
fn seeds_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny("coord", 50, dir.path());
    c.episodes = 30;
    let problem = build_problem(&c).unwrap();
    let a = with_problem!(&problem, p => evaluate_problem(p, &c).unwrap());
    c.seed = 4;
    let b = with_problem!(&problem, p => evaluate_problem(p, &c).unwrap());
    assert_ne!(format!("{:?}", a.records), format!("{:?}", b.records));
}

#[test]
fn config_hash_ignores_output_dir_and_workers_only() {
    let a = RunConfig::potmmcp(EnvConfig::Tiny { instance: "coord".into() }, 100);
    let mut b = a.clone();
    b.output_dir = "elsewhere".into();
    b.workers = Some(7);
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 16);
    let mut c = a.clone();
    c.search_policy = SearchPolicy::Meta { tau: Tau::Infinite };
    assert_ne!(a.hash(), c.hash());
    let mut d = a.clone();
    d.seed = 1;
    assert_ne!(a.hash(), d.hash());
}

#[test]
fn validation_names_the_offending_field() {
    let mut c = RunConfig::potmmcp(EnvConfig::Tiny { instance: "nope".into() }, 100);
    assert!(c.validate().unwrap_err().to_string().contains("env.instance"));
    c.env = EnvConfig::Tiny { instance: "coord".into() };
    c.episodes = 0;
    assert!(c.validate().unwrap_err().to_string().contains("episodes"));
    c.episodes = 1;
    c.oracle = Some(potmmcp::harness::OracleCheckConfig {
        budgets: vec![100, 10],
        seeds: 1,
    });
    assert!(c.validate().unwrap_err().to_string().contains("oracle.budgets"));
}

#[test]
fn config_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let mut c = RunConfig::potmmcp(EnvConfig::PredatorPrey { n_predators: 3, prey_strength: 2, n_prey: 2 }, 500);
    c.planner = PlannerConfig::ipomcp_pf(500, RolloutPolicy::Meta);
    c.search_policy = SearchPolicy::Fixed { policy: "greedy".into() };
    c.save(&path).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), c);
}

fn record(steps: &[(usize, f64)]) -> EpisodeRecord {
    EpisodeRecord {
        episode: 0,
        seed: 0,
        true_joint: "x".into(),
        returns: vec![0.0],
        undiscounted: vec![0.0],
        trees_built: 1,
        meta_queries: 0,
        depleted_at: None,
        steps: steps
            .iter()
            .map(|&(t, p)| StepRecord {
                t,
                action: 0,
                reward: 0.0,
                prob_true_type: p,
                action_dist_distance: 0.0,
                max_depth: 0,
                simulations: 0,
                generative_steps: 0,
                meta_queries: 0,
                particles: 0,
                root_visits: String::new(),
            })
            .collect(),
    }
}

#[test]
fn quartiles_compare_first_and_last_quarter_of_each_episode() {
    // Length 8: steps 0,1 are the first quarter and 6,7 the last.
    let a = record(&(0..8).map(|t| (t, t as f64 / 10.0)).collect::<Vec<_>>());
    // Too short to have quarters.
    let b = record(&[(0, 0.9), (1, 0.1), (2, 0.5)]);
    // No belief in the first quarter.
    let c = record(&[(0, f64::NAN), (1, 0.2), (2, 0.3), (3, 0.4)]);
    let q = quartile_comparison(&[a, b, c]);
    assert_eq!(q.episodes, 1);
    assert!((q.first.mean - 0.05).abs() < 1e-12);
    assert!((q.last.mean - 0.65).abs() < 1e-12);
}
