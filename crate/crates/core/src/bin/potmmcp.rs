use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use potmmcp::harness::{self, Baseline, EnvConfig, OracleCheckConfig, RunConfig};
use potmmcp::planner::{Budget, PlannerConfig, RolloutPolicy};
use potmmcp::Result;

#[derive(Parser)]
#[command(name = "potmmcp", version, about = "Type-based Monte-Carlo planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Run configuration (JSON).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Simulations per decision.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Overrides {
    fn load(&self) -> Result<RunConfig> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(e) = self.episodes {
            c.episodes = e;
        }
        if let Some(b) = self.budget {
            c.planner.budget = Budget::Simulations(b);
        }
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Potmmcp,
    IpomcpPfRandom,
    IpomcpPfMeta,
    Metapolicy,
    BestResponse,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the payoff table and meta-policy of the configured policy set.
    Payoffs {
        #[command(flatten)]
        o: Overrides,
        /// Episodes per payoff cell.
        #[arg(long)]
        episodes_per_cell: Option<usize>,
    },
    /// Run episodes against types drawn from the prior; write CSVs.
    Evaluate {
        #[command(flatten)]
        o: Overrides,
    },
    /// Per-step belief accuracy of the planner.
    BeliefStats {
        #[command(flatten)]
        o: Overrides,
    },
    /// Compare root decisions and values with the exact optimum (tiny games).
    OracleCheck {
        #[command(flatten)]
        o: Overrides,
        /// Seeded runs per budget.
        #[arg(long)]
        runs: Option<usize>,
        /// Comma-separated increasing simulation budgets.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<usize>>,
    },
    /// Check a configuration file and print its hash.
    ValidateConfig {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Print a starter configuration.
    ExampleConfig {
        /// driving, pursuit-evasion, predator-prey or tiny:<instance>.
        #[arg(long, default_value = "pursuit-evasion")]
        env: String,
        #[arg(long, value_enum, default_value = "potmmcp")]
        method: Method,
        #[arg(long, default_value_t = 1000)]
        simulations: usize,
    },
}

fn example(env: &str, method: Method, sims: usize) -> Result<RunConfig> {
    let env = match env {
        "driving" => EnvConfig::Driving {
            width: 7,
            height: 7,
            layout: "crossroads-7x7".into(),
            n_agents: 2,
        },
        "pursuit-evasion" => EnvConfig::PursuitEvasion {
            layout: "corridors-8x8".into(),
        },
        "predator-prey" => EnvConfig::PredatorPrey {
            n_predators: 2,
            prey_strength: 2,
            n_prey: 3,
        },
        other => match other.strip_prefix("tiny:") {
            Some(i) => EnvConfig::Tiny { instance: i.into() },
            None => return Err(potmmcp::Error::Config(format!("env: unknown environment `{other}`"))),
        },
    };
    let mut c = RunConfig::potmmcp(env, sims);
    match method {
        Method::Potmmcp => {}
        Method::IpomcpPfRandom => c.planner = PlannerConfig::ipomcp_pf(sims, RolloutPolicy::Random),
        Method::IpomcpPfMeta => c.planner = PlannerConfig::ipomcp_pf(sims, RolloutPolicy::Meta),
        Method::Metapolicy => c.baseline = Baseline::MetapolicyOnly,
        Method::BestResponse => c.baseline = Baseline::BestResponse,
    }
    if matches!(c.env, EnvConfig::Tiny { .. }) {
        c.oracle = Some(OracleCheckConfig::default());
    }
    c.validate()?;
    Ok(c)
}

fn show_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Payoffs { o, episodes_per_cell } => {
            let mut c = o.load()?;
            if let Some(e) = episodes_per_cell {
                c.episodes_per_cell = e;
            }
            c.validate()?;
            let (table, files) = harness::run_payoffs(&c)?;
            println!("{} rows x {} columns", table.rows.len(), table.cols.len());
            show_files(&files);
        }
        Command::Evaluate { o } => {
            let c = o.load()?;
            let ev = harness::run_evaluation(&c)?;
            let s = &ev.summary;
            println!(
                "{} on {}: mean return {:.4} ± {:.4} (95% CI, {} episodes), mean max depth {:.2}",
                s.method, s.env, s.mean_return, s.ci95, s.episodes, s.mean_max_depth
            );
            show_files(&ev.files);
        }
        Command::BeliefStats { o } => {
            let c = o.load()?;
            let b = harness::run_belief_study(&c)?;
            let q = &b.quartiles;
            println!(
                "prob_true_type: first quarter {:.4}, last quarter {:.4} ({} episodes)",
                q.first.mean, q.last.mean, q.episodes
            );
            show_files(&b.files);
        }
        Command::OracleCheck { o, runs, budgets } => {
            let mut c = o.load()?;
            let mut check = c.oracle.clone().unwrap_or_default();
            if let Some(r) = runs {
                check.seeds = r;
            }
            if let Some(b) = budgets {
                check.budgets = b;
            }
            c.oracle = Some(check);
            c.validate()?;
            let (report, files) = harness::run_oracle_check(&c)?;
            for b in &report.budgets {
                println!(
                    "budget {:>7}: agreement {:.3}, mean |V - V*| {:.4}, max {:.4}",
                    b.budget, b.agreement, b.mean_error, b.max_error
                );
            }
            println!(
                "{}: {} (bound {:.4})",
                report.instance,
                if report.pass { "PASS" } else { "FAIL" },
                report.error_bound
            );
            show_files(&files);
            if !report.pass {
                return Ok(ExitCode::from(2));
            }
        }
        Command::ValidateConfig { config } => {
            let c = RunConfig::load(&config)?;
            c.validate()?;
            println!("ok {} {} {}", c.method(), c.env.id(), c.hash());
        }
        Command::ExampleConfig { env, method, simulations } => {
            let c = example(&env, method, simulations)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
