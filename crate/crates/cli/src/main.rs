//! `puckbench` command-line runner.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
//! error, 3 agent error, 4 I/O or replay error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};

use puckbench::estimation::piecewise::{fit_piecewise_model, simulate_transitions};
use puckbench::harness::{
    recompute_penalties, replay_read, replay_write, run_ablation, run_qualifying, run_tournament, tune_rl3_hit, AgentFactory, Entrant, EnvConfig,
    Factor, HarnessError, Profile, ReplayError, ReplayHeader, TournamentOptions, TuneConfig,
};
use puckbench::kinematics::JointVector;
use puckbench::learning::{fit_arm_tracking, simulate_step_response, write_trace_csv, ArmFit, StepResponse};
use puckbench::metrics::report::{leaderboard_text, matches_csv, matches_text, standings_text, to_csv, to_json};
use puckbench::metrics::{qualifying_rank, DeployabilityThresholds, Task, TaskWeights};
use puckbench::policies::{make_agent, AgentContext, AgentError, AGENT_NAMES};
use puckbench::sim::arm::ArmTrackingModel;
use puckbench::sim::Side;

const DESK_EPISODES: usize = 100;
const FULL_EPISODES: usize = 1000;

#[derive(Parser)]
#[command(name = "puckbench", version, about = "Deterministic robot air hockey benchmark")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML environment configuration; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Episodes per task (qualify, ablate) or per tuning sample (tune).
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Agent name; repeat to enter several agents.
    #[arg(long = "agent", global = true)]
    agents: Vec<String>,
    /// Directory for CSV, JSON and replay outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip compute-time measurement so runs are bit-for-bit reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    /// Competition-scale episode counts and game lengths.
    #[arg(long, global = true)]
    full_scale: bool,
    /// Evaluation profile, overriding the configuration.
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Ideal,
    Evaluation,
}

#[derive(Subcommand)]
enum Command {
    /// Run the hit, defend and prepare tasks and print the leaderboard.
    Qualify {
        /// Write JSONL replays of every episode to the output directory.
        #[arg(long)]
        replay: bool,
    },
    /// Round robin between the given agents.
    Tournament,
    /// Success rates under the ideal profile, each single factor and all factors.
    Ablate,
    /// Fit the piecewise-linear puck model on simulated transitions.
    FitPuckModel {
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.005)]
        dt: f64,
    },
    /// Identify the arm tracking lag from a step response.
    FitArm {
        /// Recorded step response (JSON); a synthetic one is used otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1500)]
        budget: usize,
    },
    /// PGPE tuning of the rule-based hit controller.
    Tune {
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 8)]
        population: usize,
    },
    /// Validate a replay log and recompute its penalties.
    Replay { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FailureKind {
    Other = 1,
    Config = 2,
    Agent = 3,
    Io = 4,
}

struct Failure {
    kind: FailureKind,
    error: anyhow::Error,
}

impl Failure {
    fn new(kind: FailureKind, error: impl Into<anyhow::Error>) -> Self {
        Self { kind, error: error.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let kind = match &e {
            HarnessError::Config(_) | HarnessError::World(_) | HarnessError::NoEpisodes | HarnessError::TooFewEntrants(_) => FailureKind::Config,
            HarnessError::Agent(_) => FailureKind::Agent,
            HarnessError::Replay(_) | HarnessError::Json(_) => FailureKind::Io,
        };
        Self::new(kind, e)
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        Self::new(FailureKind::Io, e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn io<T, E: Into<anyhow::Error>>(r: Result<T, E>, what: impl FnOnce() -> String) -> CliResult<T> {
    r.map_err(|e| Failure::new(FailureKind::Io, e.into().context(what())))
}

fn load_env(common: &Common) -> CliResult<EnvConfig> {
    let mut env = match &common.config {
        Some(path) => {
            let text = io(fs::read_to_string(path), || format!("reading {}", path.display()))?;
            toml::from_str::<EnvConfig>(&text).map_err(|e| Failure::new(FailureKind::Config, anyhow!(e).context(format!("parsing {}", path.display()))))?
        }
        None => EnvConfig::evaluation(),
    };
    if let Some(seed) = common.seed {
        env.seed = seed;
    }
    match common.profile {
        Some(ProfileArg::Ideal) => env.profile = Profile::Ideal,
        Some(ProfileArg::Evaluation) => env.profile = Profile::Evaluation,
        None => {}
    }
    if common.no_timing {
        env.timing = false;
    }
    env.validate()?;
    Ok(env)
}

fn agent_names(common: &Common, default: &[&str]) -> CliResult<Vec<String>> {
    let names: Vec<String> = if common.agents.is_empty() { default.iter().map(|s| s.to_string()).collect() } else { common.agents.clone() };
    if let Some(bad) = names.iter().find(|n| !AGENT_NAMES.contains(&n.as_str())) {
        return Err(Failure::new(FailureKind::Agent, AgentError::Unknown(bad.clone())));
    }
    Ok(names)
}

fn factory_for(name: String, ctx: AgentContext) -> Box<AgentFactory> {
    Box::new(move |seed| make_agent(&name, &ctx, seed))
}

fn episodes(common: &Common) -> usize {
    common.episodes.unwrap_or(if common.full_scale { FULL_EPISODES } else { DESK_EPISODES })
}

fn out_dir(common: &Common) -> CliResult<Option<&Path>> {
    match &common.out {
        Some(dir) => {
            io(fs::create_dir_all(dir), || format!("creating {}", dir.display()))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult {
    let path = dir.join(name);
    io(fs::write(&path, contents), || format!("writing {}", path.display()))
}

fn report<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> CliResult<T> {
    r.map_err(|e| Failure::new(FailureKind::Other, e))
}

fn qualify(common: &Common, replay: bool) -> CliResult {
    let env = load_env(common)?;
    let names = agent_names(common, &["composite"])?;
    let n = episodes(common);
    let ctx = AgentContext::from_world(&env.world);
    let dir = out_dir(common)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for name in &names {
        let factory = factory_for(name.clone(), ctx.clone());
        let result = run_qualifying(factory.as_ref(), name, n, &env, replay && dir.is_some())?;
        if let (true, Some(dir)) = (replay, dir) {
            for (task, records) in Task::ALL.iter().zip(&result.records) {
                let path = dir.join(format!("{name}_{}.jsonl", task.name()));
                replay_write(&path, &ReplayHeader::new(&env, env.seed, vec![name.clone()]), records)?;
            }
        }
        rows.push(result.row.clone());
        results.push(result);
    }
    let board = qualifying_rank(&rows, &DeployabilityThresholds::for_episodes(3 * n), &TaskWeights::default());
    print!("{}", leaderboard_text(&board));
    if let Some(dir) = dir {
        write_file(dir, "leaderboard.csv", &report(to_csv(&board))?)?;
        write_file(dir, "leaderboard.json", &report(to_json(&board))?)?;
        write_file(dir, "qualifying.json", &report(to_json(&results))?)?;
    }
    Ok(())
}

fn tournament(common: &Common) -> CliResult {
    let env = load_env(common)?;
    let names = agent_names(common, &AGENT_NAMES)?;
    let ctx = AgentContext::from_world(&env.world);
    let factories: Vec<Box<AgentFactory>> = names.iter().map(|n| factory_for(n.clone(), ctx.clone())).collect();
    let entrants: Vec<Entrant> = names.iter().zip(&factories).map(|(name, f)| Entrant { name: name.clone(), factory: f.as_ref() }).collect();
    let opts = if common.full_scale { TournamentOptions::full_scale() } else { TournamentOptions::default() };
    let result = run_tournament(&entrants, &env, &opts)?;
    let records: Vec<_> = result.games.iter().map(|g| g.record.clone()).collect();
    print!("{}", standings_text(&result.standings));
    println!();
    print!("{}", matches_text(&records));
    if let Some(dir) = out_dir(common)? {
        write_file(dir, "standings.csv", &report(to_csv(&result.standings))?)?;
        write_file(dir, "matches.csv", &report(matches_csv(&records))?)?;
        write_file(dir, "tournament.json", &report(to_json(&result))?)?;
    }
    Ok(())
}

fn ablate(common: &Common) -> CliResult {
    let env = load_env(common)?;
    let names = agent_names(common, &["composite"])?;
    let ctx = AgentContext::from_world(&env.world);
    let dir = out_dir(common)?;
    for name in &names {
        let factory = factory_for(name.clone(), ctx.clone());
        let result = run_ablation(factory.as_ref(), &Task::ALL, &Factor::ALL, episodes(common), &env)?;
        println!("{name}");
        let header: Vec<String> = result.columns.iter().map(|c| format!("{:>17}", c.label)).collect();
        println!("{:<8}{}", "task", header.join(""));
        let mut flat = Vec::new();
        for (task, row) in result.tasks.iter().zip(&result.success) {
            let cells: Vec<String> = row.iter().map(|s| format!("{:>16.1}%", 100.0 * s)).collect();
            println!("{:<8}{}", task.name(), cells.join(""));
            for (col, s) in result.columns.iter().zip(row) {
                flat.push(AblationCell { agent: name, task: task.name(), column: &col.label, success: *s });
            }
        }
        if let Some(dir) = dir {
            write_file(dir, &format!("ablation_{name}.csv"), &report(to_csv(&flat))?)?;
            write_file(dir, &format!("ablation_{name}.json"), &report(to_json(&result))?)?;
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct AblationCell<'a> {
    agent: &'a str,
    task: &'a str,
    column: &'a str,
    success: f64,
}

fn fit_puck(common: &Common, samples: usize, dt: f64) -> CliResult {
    use rand::SeedableRng;
    let env = load_env(common)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(env.seed);
    let data = simulate_transitions(&env.world.puck, &env.world.table, dt, samples, &mut rng);
    let model = fit_piecewise_model(&data, dt).map_err(|e| Failure::new(FailureKind::Config, e))?;
    for (label, mode) in [("free", &model.free), ("wall", &model.wall), ("mallet", &model.mallet)] {
        let sd: Vec<String> = (0..4).map(|i| format!("{:.2e}", mode.sigma[(i, i)].max(0.0).sqrt())).collect();
        println!("{label:<7} residual std (x, y, vx, vy): {}", sd.join(" "));
    }
    if let Some(dir) = out_dir(common)? {
        let path = dir.join("puck_model.json");
        io(model.save(&path), || format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn fit_arm(common: &Common, data: Option<&Path>, budget: usize) -> CliResult {
    use rand::SeedableRng;
    let env = load_env(common)?;
    let response: StepResponse = match data {
        Some(path) => {
            let text = io(fs::read_to_string(path), || format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| Failure::new(FailureKind::Config, anyhow!(e).context(format!("parsing {}", path.display()))))?
        }
        None => {
            let truth = env.mismatch.arm.unwrap_or(ArmTrackingModel::lag(0.015, 0.95));
            let q0 = env.world.robot.q_init;
            let setpoint = q0 + JointVector::from_element(0.2);
            simulate_step_response(&truth, &q0, &q0, &setpoint, 1e-3, 300)
        }
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(env.seed);
    let fit: ArmFit = fit_arm_tracking(&response, budget, &mut rng);
    println!("tau {:.5} s  gain_scale {:.4}  residual {:.3e}  evaluations {}", fit.model.tau, fit.model.gain_scale, fit.residual, fit.evaluations);
    if let Some(dir) = out_dir(common)? {
        write_file(dir, "arm_fit.json", &report(to_json(&fit))?)?;
        let path = dir.join("fit_arm_trace.csv");
        io(write_trace_csv(&path, &fit.trace), || format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn tune(common: &Common, iterations: usize, population: usize) -> CliResult {
    let env = load_env(common)?;
    let defaults = TuneConfig::default();
    let cfg = TuneConfig { iterations, population, episodes_per_sample: common.episodes.unwrap_or(defaults.episodes_per_sample), ..defaults };
    let result = tune_rl3_hit(&env, &cfg)?;
    for row in &result.trace {
        println!("iteration {:>3}  best {:>8.4}  mean {:>8.4}", row.iteration, row.best, row.mean);
    }
    println!("hit_theta {:?}", result.hit_theta);
    if let Some(dir) = out_dir(common)? {
        write_file(dir, "tune.json", &report(to_json(&result))?)?;
        let path = dir.join("tune_trace.csv");
        io(write_trace_csv(&path, &result.trace), || format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn replay(path: &Path) -> CliResult {
    let (header, records) = replay_read(path)?;
    let episodes = records.windows(2).filter(|w| w[0].episode != w[1].episode).count() + usize::from(!records.is_empty());
    println!("schema {}  seed {}  agents {:?}  config {}", header.schema_version, header.seed, header.agents, &header.config_hash[..12]);
    println!("{} steps over {} episodes", records.len(), episodes);
    for side in Side::BOTH {
        let per_episode = recompute_penalties(&header, &records, side, &header.config.penalty);
        if records.iter().any(|r| r.agents.iter().any(|a| a.side == side)) {
            let total: f64 = per_episode.iter().map(|(_, p)| p).sum();
            println!("{side:?} penalty {total:.1}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let common = &cli.common;
    match cli.command {
        Command::Qualify { replay } => qualify(common, replay),
        Command::Tournament => tournament(common),
        Command::Ablate => ablate(common),
        Command::FitPuckModel { samples, dt } => fit_puck(common, samples, dt),
        Command::FitArm { data, budget } => fit_arm(common, data.as_deref(), budget),
        Command::Tune { iterations, population } => tune(common, iterations, population),
        Command::Replay { path } => replay(&path),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error.context(format!("{:?} error", f.kind).to_lowercase()));
            ExitCode::from(f.kind as u8)
        }
    }
}
