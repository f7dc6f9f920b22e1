//! Command-line front end.
//!
//! Verb-first grammar: `constel <verb> <target> [flags]`. Artifact commands
//! (`generate`, `train`) write exactly the files named by `-o`; report
//! commands (`evaluate`, `flex`, `tradeoff`) write into a timestamped
//! directory under the output base and repoint a `latest` link at it.
//!
//! Exit codes: 0 on success, 1 on any runtime failure, 2 on usage errors
//! (clap's default).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use constel_core::anneal::{replay_schedule, simulated_annealing, SaConfig};
use constel_core::ppo::{greedy_schedule, train_scheduler, PpoConfig};
use constel_core::resources::Schedule;
use constel_core::routing::{train_with_observer, EpisodeStats, LearnerConfig};
use constel_core::scenario::{
    synthesize_resource_scenario, synthesize_routing_scenario, ResourceScenario,
    ResourceSynthParams, RoutingScenario, RoutingSynthParams,
};

use crate::files::{self, ExperimentConfig, ScenarioGen, TrajectoryRow};
use crate::harness::{
    self, emit_report, run_resources_flex, run_resources_tradeoff, run_routing_bench,
    run_routing_flex, ReportFormat, ResourceFlexInputs, RoutingBenchInputs, RoutingFlexInputs,
    TradeoffInputs,
};

/// Seed fallback used when neither a flag nor `CONSTEL_SEED` is present.
const DEFAULT_SEED: u64 = 0;
/// Default size of the seed grid for report commands.
const DEFAULT_SEED_COUNT: usize = 10;

#[derive(Parser)]
#[command(
    name = "constel",
    version,
    about = "Constellation operations toolkit: scenario synthesis, training, and experiment harness"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize scenario files
    Generate {
        #[command(subcommand)]
        target: GenerateCmd,
    },
    /// Train a model and export its artifact
    Train {
        #[command(subcommand)]
        target: TrainCmd,
    },
    /// Benchmark algorithms on a scenario
    Evaluate {
        #[command(subcommand)]
        target: EvaluateCmd,
    },
    /// Degrade a scenario and measure how solutions cope
    Flex {
        #[command(subcommand)]
        target: FlexCmd,
    },
    /// Solution quality versus compute budget across solvers
    Tradeoff(TradeoffArgs),
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Subcommand)]
enum GenerateCmd {
    /// Grid constellation with inter-satellite links
    Routing(GenerateRoutingArgs),
    /// Acquisition/downlink tasking horizon
    Resources(GenerateResourcesArgs),
}

#[derive(Args)]
struct GenerateRoutingArgs {
    /// Number of orbital planes (grid rows)
    #[arg(long, default_value_t = 3)]
    planes: usize,
    /// Satellites per plane (grid columns)
    #[arg(long = "sats", default_value_t = 4)]
    sats_per_plane: usize,
    /// Propagation latency envelope in ms, as lo,hi
    #[arg(long, value_parser = parse_f64_pair, default_value = "5,25")]
    prop_ms: (f64, f64),
    /// Per-link max-queue envelope in ms, as lo,hi
    #[arg(long, value_parser = parse_f64_pair, default_value = "0,10")]
    queue_ms: (f64, f64),
    /// Source node
    #[arg(long, default_value_t = 0)]
    src: usize,
    /// Destination node; defaults to the last node
    #[arg(long)]
    dst: Option<usize>,
    /// RNG seed; falls back to CONSTEL_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output scenario file
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateResourcesArgs {
    /// Number of satellites
    #[arg(long, default_value_t = 4)]
    sats: usize,
    /// Number of time slots
    #[arg(long, default_value_t = 20)]
    slots: usize,
    /// Fraction of slots with an acquisition window per satellite
    #[arg(long, default_value_t = files::default_at_density())]
    at_density: f64,
    /// Fraction of slots with a ground-station window per satellite
    #[arg(long, default_value_t = files::default_gs_density())]
    gs_density: f64,
    /// Distinct acquisition targets
    #[arg(long, default_value_t = files::default_n_at())]
    n_at: u32,
    /// Distinct ground stations
    #[arg(long, default_value_t = files::default_n_gs())]
    n_gs: u32,
    /// Slot duration envelope in seconds, as lo,hi
    #[arg(long, value_parser = parse_f64_pair, default_value = "60,120")]
    slot_duration: (f64, f64),
    /// Length of alternating sunlit/eclipse runs, in slots
    #[arg(long, default_value_t = files::default_sun_run())]
    sun_run: usize,
    /// Initial battery level in [0,1]
    #[arg(long, default_value_t = files::default_init_level())]
    init_battery: f64,
    /// Initial memory level in [0,1]
    #[arg(long, default_value_t = files::default_init_level())]
    init_memory: f64,
    /// RNG seed; falls back to CONSTEL_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output scenario file
    #[arg(short, long)]
    out: PathBuf,
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Subcommand)]
enum TrainCmd {
    /// Queue-aware Q-routing table
    Qrouting(TrainQroutingArgs),
    /// Masked policy-gradient scheduler
    Ppo(TrainPpoArgs),
    /// Simulated-annealing schedule search
    Sa(TrainSaArgs),
}

#[derive(Args)]
struct TrainQroutingArgs {
    /// Routing scenario file
    #[arg(short, long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = LearnerConfig::default().episodes)]
    episodes: usize,
    #[arg(long, default_value_t = LearnerConfig::default().alpha)]
    alpha: f64,
    #[arg(long, default_value_t = LearnerConfig::default().gamma)]
    gamma: f64,
    /// Initial exploration rate
    #[arg(long, default_value_t = LearnerConfig::default().epsilon0)]
    epsilon: f64,
    #[arg(long, default_value_t = LearnerConfig::default().epsilon_decay)]
    epsilon_decay: f64,
    #[arg(long, default_value_t = LearnerConfig::default().loop_penalty)]
    loop_penalty: f64,
    /// Destination bonus magnitude
    #[arg(long, default_value_t = LearnerConfig::default().target_bonus_magnitude)]
    bonus: f64,
    /// RNG seed; falls back to CONSTEL_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output table file
    #[arg(short, long)]
    out: PathBuf,
    /// Optional per-episode trace CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct TrainPpoArgs {
    /// Resources scenario file
    #[arg(short, long)]
    scenario: PathBuf,
    /// Training budget in full scenario passes (one episode per update);
    /// shorthand that conflicts with --updates
    #[arg(long, conflicts_with_all = ["updates", "episodes_per_update"])]
    episodes: Option<usize>,
    #[arg(long, default_value_t = PpoConfig::default().updates)]
    updates: usize,
    #[arg(long, default_value_t = PpoConfig::default().episodes_per_update)]
    episodes_per_update: usize,
    #[arg(long, default_value_t = PpoConfig::default().hidden_dim)]
    hidden: usize,
    #[arg(long, default_value_t = PpoConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = PpoConfig::default().clip_epsilon)]
    clip: f64,
    #[arg(long, default_value_t = PpoConfig::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = PpoConfig::default().gae_lambda)]
    lambda: f64,
    #[arg(long, default_value_t = PpoConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = PpoConfig::default().minibatch_size)]
    minibatch: usize,
    #[arg(long, default_value_t = PpoConfig::default().value_coef)]
    value_coef: f64,
    #[arg(long, default_value_t = PpoConfig::default().entropy_coef)]
    entropy_coef: f64,
    #[arg(long, default_value_t = PpoConfig::default().reward_scale)]
    reward_scale: f64,
    /// RNG seed; falls back to CONSTEL_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output policy checkpoint
    #[arg(short, long)]
    out: PathBuf,
    /// Optional reward-curve CSV
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct TrainSaArgs {
    /// Resources scenario file
    #[arg(short, long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = SaConfig::default().iterations)]
    iterations: usize,
    /// Initial temperature
    #[arg(long, default_value_t = SaConfig::default().initial_temperature)]
    t0: f64,
    /// Geometric cooling factor per iteration
    #[arg(long, default_value_t = SaConfig::default().cooling_factor)]
    cooling: f64,
    /// Proposals per iteration
    #[arg(long, default_value_t = SaConfig::default().proposals_per_iteration)]
    proposals: usize,
    /// RNG seed; falls back to CONSTEL_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output schedule file
    #[arg(short, long)]
    out: PathBuf,
    /// Optional annealing trace CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// evaluate / flex / tradeoff
// ---------------------------------------------------------------------------

#[derive(Subcommand)]
enum EvaluateCmd {
    /// Train Q-routing per seed and benchmark it against both Dijkstra
    /// baselines in one report
    Routing(EvaluateRoutingArgs),
    /// Replay schedule/policy artifacts into trajectory logs
    Resources(EvaluateResourcesArgs),
}

#[derive(Args)]
struct EvaluateRoutingArgs {
    /// Routing scenario file
    #[arg(short, long, required_unless_present = "config")]
    scenario: Option<PathBuf>,
    /// Episode-budget grid (comma separated; crossed with --alpha)
    #[arg(long, value_delimiter = ',', default_values_t = [LearnerConfig::default().episodes])]
    episodes: Vec<usize>,
    /// Learning-rate grid (comma separated; crossed with --episodes)
    #[arg(long, value_delimiter = ',', default_values_t = [LearnerConfig::default().alpha])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = LearnerConfig::default().gamma)]
    gamma: f64,
    /// Initial exploration rate
    #[arg(long, default_value_t = LearnerConfig::default().epsilon0)]
    epsilon: f64,
    #[arg(long, default_value_t = LearnerConfig::default().epsilon_decay)]
    epsilon_decay: f64,
    /// Queue-noise replications per route evaluation
    #[arg(long, default_value_t = 100)]
    replications: usize,
    #[command(flatten)]
    seeds: SeedGridArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
#[command(group(ArgGroup::new("artifact").required(true).multiple(true).args(["schedule", "policy"])))]
struct EvaluateResourcesArgs {
    /// Resources scenario file
    #[arg(short, long)]
    scenario: PathBuf,
    /// Schedule artifact to replay
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Policy checkpoint to roll out greedily
    #[arg(long)]
    policy: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Subcommand)]
enum FlexCmd {
    /// Blocked-node failure injection against a frozen table
    Routing(FlexRoutingArgs),
    /// Access-window deletion against frozen schedule and policy
    Resources(FlexResourcesArgs),
}

#[derive(Args)]
struct FlexRoutingArgs {
    /// Routing scenario file
    #[arg(short, long, required_unless_present = "config")]
    scenario: Option<PathBuf>,
    /// Trained Q-table artifact
    #[arg(short = 'q', long)]
    qtable: PathBuf,
    /// Failure sizes (comma separated node counts)
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    failures: Vec<usize>,
    /// Destination bonus magnitude used in reward accounting
    #[arg(long, default_value_t = LearnerConfig::default().target_bonus_magnitude)]
    bonus: f64,
    /// Queue-noise replications per route evaluation
    #[arg(long, default_value_t = 100)]
    replications: usize,
    #[command(flatten)]
    seeds: SeedGridArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct FlexResourcesArgs {
    /// Resources scenario file
    #[arg(short, long, required_unless_present = "config")]
    scenario: Option<PathBuf>,
    /// Policy checkpoint (re-plans on the degraded scenario)
    #[arg(long)]
    policy: PathBuf,
    /// Schedule artifact (replayed leniently on the degraded scenario)
    #[arg(long)]
    schedule: PathBuf,
    /// Deleted window proportions in [0,1] (comma separated)
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    proportions: Vec<f64>,
    #[command(flatten)]
    seeds: SeedGridArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct TradeoffArgs {
    /// Resources scenario file(s); repeat the flag for a size grid
    #[arg(short, long, required_unless_present = "config")]
    scenario: Vec<PathBuf>,
    /// Annealing iteration budgets (comma separated)
    #[arg(long = "sa-iters", value_delimiter = ',', required_unless_present = "config")]
    sa_iters: Vec<usize>,
    /// Learned-scheduler budgets in full scenario passes (comma separated)
    #[arg(long = "rl-episodes", value_delimiter = ',', required_unless_present = "config")]
    rl_episodes: Vec<usize>,
    #[command(flatten)]
    seeds: SeedGridArgs,
    #[command(flatten)]
    report: ReportArgs,
}

/// Seed-grid flags shared by report commands.
#[derive(Args)]
struct SeedGridArgs {
    /// Number of seeds; expands to base..base+N with base from CONSTEL_SEED
    /// (default 0)
    #[arg(long)]
    seeds: Option<usize>,
    /// Explicit seed list (comma separated; overrides --seeds)
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
}

/// Output flags shared by report commands.
#[derive(Args)]
struct ReportArgs {
    /// Output base directory; reports land in a timestamped subdirectory
    #[arg(short, long, default_value = "runs")]
    out: PathBuf,
    /// Report format: csv, json, or both
    #[arg(long, default_value = "both")]
    format: String,
    /// Worker threads for seed-parallel cells
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Experiment config JSON; its fields supersede the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn parse_f64_pair(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi — got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lo: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad hi: {e}"))?;
    Ok((lo, hi))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("CONSTEL_SEED") {
        Ok(text) => {
            let seed = text
                .parse()
                .with_context(|| format!("CONSTEL_SEED must be an unsigned integer, got {text:?}"))?;
            Ok(Some(seed))
        }
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    Ok(flag.or(env_seed()?).unwrap_or(DEFAULT_SEED))
}

impl SeedGridArgs {
    fn resolve(&self, from_config: Option<&[u64]>) -> Result<Vec<u64>> {
        if let Some(seeds) = from_config {
            return Ok(seeds.to_vec());
        }
        if let Some(list) = &self.seed_list {
            return Ok(list.clone());
        }
        let base = env_seed()?.unwrap_or(DEFAULT_SEED);
        let count = self.seeds.unwrap_or(DEFAULT_SEED_COUNT) as u64;
        Ok((base..base + count).collect())
    }
}

/// Create `base/<UTC stamp>-<slug>/` and repoint `base/latest` at it.
fn report_dir(base: &Path, slug: &str) -> Result<PathBuf> {
    fs::create_dir_all(base).with_context(|| format!("creating {}", base.display()))?;
    let stamp = chrono::Utc::now().format("%Y%m%d-%H%M%S");
    let mut name = format!("{stamp}-{slug}");
    let mut dir = base.join(&name);
    let mut suffix = 2;
    while dir.exists() {
        name = format!("{stamp}-{slug}-{suffix}");
        dir = base.join(&name);
        suffix += 1;
    }
    fs::create_dir(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let latest = base.join("latest");
    #[cfg(unix)]
    {
        if latest.symlink_metadata().is_ok() {
            fs::remove_file(&latest)
                .with_context(|| format!("replacing {}", latest.display()))?;
        }
        std::os::unix::fs::symlink(&name, &latest)
            .with_context(|| format!("linking {}", latest.display()))?;
    }
    Ok(dir)
}

fn scenario_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

/// Resolved report-command context after merging config over flags.
struct ReportContext {
    config: Option<ExperimentConfig>,
    out_base: PathBuf,
    format: ReportFormat,
    jobs: usize,
}

impl ReportArgs {
    fn resolve(&self) -> Result<ReportContext> {
        let config = self
            .config
            .as_ref()
            .map(|p| files::load_experiment_config(p))
            .transpose()?;
        let out_base = config
            .as_ref()
            .and_then(|c| c.out_dir.clone())
            .unwrap_or_else(|| self.out.clone());
        let format: ReportFormat = config
            .as_ref()
            .and_then(|c| c.format.as_deref())
            .unwrap_or(&self.format)
            .parse()?;
        let jobs = config
            .as_ref()
            .and_then(|c| c.jobs)
            .unwrap_or(self.jobs)
            .max(1);
        Ok(ReportContext {
            config,
            out_base,
            format,
            jobs,
        })
    }
}

impl ReportContext {
    /// Scenario named on the command line, unless the config supersedes it
    /// with a path or synthesis parameters.
    fn routing_scenario(&self, flag: Option<&Path>) -> Result<(String, RoutingScenario)> {
        if let Some(config) = &self.config {
            if let Some(path) = &config.scenario_path {
                return Ok((scenario_stem(path), files::load_routing_scenario(path)?));
            }
            match &config.scenario_generate {
                Some(ScenarioGen::Routing(gen)) => {
                    let params = gen.to_params();
                    let label = format!("grid{}x{}", params.num_planes, params.sats_per_plane);
                    return Ok((label, synthesize_routing_scenario(&params)?));
                }
                Some(ScenarioGen::Resources(_)) => {
                    bail!("config generates a resources scenario, this command needs routing")
                }
                None => {}
            }
        }
        let path = flag.context("a scenario is required (-s or --config)")?;
        Ok((scenario_stem(path), files::load_routing_scenario(path)?))
    }

    fn resource_scenario(&self, flag: Option<&Path>) -> Result<(String, ResourceScenario)> {
        if let Some(config) = &self.config {
            if let Some(path) = &config.scenario_path {
                return Ok((scenario_stem(path), files::load_resource_scenario(path)?));
            }
            match &config.scenario_generate {
                Some(ScenarioGen::Resources(gen)) => {
                    let params = gen.to_params();
                    let label = format!("sats{}x{}", params.n, params.slots);
                    return Ok((label, synthesize_resource_scenario(&params)?));
                }
                Some(ScenarioGen::Routing(_)) => {
                    bail!("config generates a routing scenario, this command needs resources")
                }
                None => {}
            }
        }
        let path = flag.context("a scenario is required (-s or --config)")?;
        Ok((scenario_stem(path), files::load_resource_scenario(path)?))
    }
}

fn announce(paths: &[PathBuf]) {
    for path in paths {
        println!("wrote {}", path.display());
    }
}

// ---------------------------------------------------------------------------
// Entry point and dispatch
// ---------------------------------------------------------------------------

/// Parse `std::env::args` and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { target } => match target {
            GenerateCmd::Routing(args) => cmd_generate_routing(args),
            GenerateCmd::Resources(args) => cmd_generate_resources(args),
        },
        Command::Train { target } => match target {
            TrainCmd::Qrouting(args) => cmd_train_qrouting(args),
            TrainCmd::Ppo(args) => cmd_train_ppo(args),
            TrainCmd::Sa(args) => cmd_train_sa(args),
        },
        Command::Evaluate { target } => match target {
            EvaluateCmd::Routing(args) => cmd_evaluate_routing(args),
            EvaluateCmd::Resources(args) => cmd_evaluate_resources(args),
        },
        Command::Flex { target } => match target {
            FlexCmd::Routing(args) => cmd_flex_routing(args),
            FlexCmd::Resources(args) => cmd_flex_resources(args),
        },
        Command::Tradeoff(args) => cmd_tradeoff(args),
    }
}

fn cmd_generate_routing(args: GenerateRoutingArgs) -> Result<()> {
    let n = args.planes * args.sats_per_plane;
    let params = RoutingSynthParams {
        num_planes: args.planes,
        sats_per_plane: args.sats_per_plane,
        prop_latency_ms: args.prop_ms,
        queue_envelope_ms: args.queue_ms,
        src: args.src,
        dst: args.dst.unwrap_or(n.saturating_sub(1)),
        seed: resolve_seed(args.seed)?,
    };
    let scenario = synthesize_routing_scenario(&params)?;
    files::save_routing_scenario(&args.out, &scenario)?;
    announce(&[args.out]);
    Ok(())
}

fn cmd_generate_resources(args: GenerateResourcesArgs) -> Result<()> {
    let params = ResourceSynthParams {
        n: args.sats,
        slots: args.slots,
        at_density: args.at_density,
        gs_density: args.gs_density,
        n_at: args.n_at,
        n_gs: args.n_gs,
        slot_duration_s: args.slot_duration,
        sun_run_slots: args.sun_run,
        init_battery: args.init_battery,
        init_memory: args.init_memory,
        rates: Default::default(),
        seed: resolve_seed(args.seed)?,
    };
    let scenario = synthesize_resource_scenario(&params)?;
    files::save_resource_scenario(&args.out, &scenario)?;
    announce(&[args.out]);
    Ok(())
}

fn cmd_train_qrouting(args: TrainQroutingArgs) -> Result<()> {
    let scenario = files::load_routing_scenario(&args.scenario)?;
    let config = LearnerConfig {
        episodes: args.episodes,
        alpha: args.alpha,
        gamma: args.gamma,
        epsilon0: args.epsilon,
        epsilon_decay: args.epsilon_decay,
        loop_penalty: args.loop_penalty,
        target_bonus_magnitude: args.bonus,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(args.seed)?);
    let mut stats: Vec<EpisodeStats> = Vec::new();
    let table = train_with_observer(&scenario, &config, &mut rng, |s| {
        if args.trace.is_some() {
            stats.push(*s);
        }
    })?;
    files::save_qtable(&args.out, &table)?;
    let mut written = vec![args.out];
    if let Some(trace) = args.trace {
        files::write_episode_trace_csv(&trace, &stats)?;
        written.push(trace);
    }
    announce(&written);
    Ok(())
}

fn cmd_train_ppo(args: TrainPpoArgs) -> Result<()> {
    let scenario = files::load_resource_scenario(&args.scenario)?;
    let (updates, episodes_per_update) = match args.episodes {
        // Budget shorthand: one full scenario pass per update.
        Some(budget) => (budget, 1),
        None => (args.updates, args.episodes_per_update),
    };
    let config = PpoConfig {
        hidden_dim: args.hidden,
        clip_epsilon: args.clip,
        gamma: args.gamma,
        gae_lambda: args.lambda,
        epochs: args.epochs,
        minibatch_size: args.minibatch,
        learning_rate: args.lr,
        value_coef: args.value_coef,
        entropy_coef: args.entropy_coef,
        updates,
        episodes_per_update,
        reward_scale: args.reward_scale,
        normalize_advantages: true,
        rng_seed: resolve_seed(args.seed)?,
    };
    let output = train_scheduler(&scenario, &config)?;
    files::save_policy(&args.out, &output.params, &config)?;
    let mut written = vec![args.out];
    if let Some(curve) = args.curve {
        files::write_reward_curve_csv(&curve, &output.curve)?;
        written.push(curve);
    }
    announce(&written);
    Ok(())
}

fn cmd_train_sa(args: TrainSaArgs) -> Result<()> {
    let scenario = files::load_resource_scenario(&args.scenario)?;
    let config = SaConfig {
        iterations: args.iterations,
        initial_temperature: args.t0,
        cooling_factor: args.cooling,
        proposals_per_iteration: args.proposals,
        rng_seed: resolve_seed(args.seed)?,
    };
    let outcome = simulated_annealing(&scenario, &config)?;
    files::save_schedule(&args.out, &outcome.best_schedule)?;
    let mut written = vec![args.out];
    if let Some(trace) = args.trace {
        files::write_sa_trace_csv(&trace, &outcome.trace)?;
        written.push(trace);
    }
    println!("best reward {}", files::format_f64(outcome.best_reward));
    announce(&written);
    Ok(())
}

fn cmd_evaluate_routing(args: EvaluateRoutingArgs) -> Result<()> {
    let context = args.report.resolve()?;
    let (label, scenario) = context.routing_scenario(args.scenario.as_deref())?;
    let seeds = args.seeds.resolve(
        context
            .config
            .as_ref()
            .and_then(|c| c.seeds.as_deref()),
    )?;
    let replications = context
        .config
        .as_ref()
        .and_then(|c| c.replications)
        .unwrap_or(args.replications);

    let base: LearnerConfig = context
        .config
        .as_ref()
        .and_then(|c| c.qrouting.clone())
        .map(Into::into)
        .unwrap_or(LearnerConfig {
            gamma: args.gamma,
            epsilon0: args.epsilon,
            epsilon_decay: args.epsilon_decay,
            ..LearnerConfig::default()
        });
    let mut configs = Vec::new();
    for &episodes in &args.episodes {
        for &alpha in &args.alpha {
            let label = format!("E{episodes}-a{alpha}");
            configs.push((
                label,
                LearnerConfig {
                    episodes,
                    alpha,
                    ..base.clone()
                },
            ));
        }
    }

    let scenarios = vec![(label, scenario)];
    let report = run_routing_bench(&RoutingBenchInputs {
        scenarios: &scenarios,
        configs: &configs,
        replications,
        seeds: &seeds,
        jobs: context.jobs,
    })?;
    let dir = report_dir(&context.out_base, "routing-bench")?;
    let written = emit_report(&report, &dir, "bench", context.format)?;
    announce(&written);
    Ok(())
}

fn cmd_evaluate_resources(args: EvaluateResourcesArgs) -> Result<()> {
    let context = args.report.resolve()?;
    let scenario = files::load_resource_scenario(&args.scenario)?;
    let dir = report_dir(&context.out_base, "resources-eval")?;
    let mut written = Vec::new();
    let mut summary = serde_json::Map::new();
    summary.insert(
        "schema_version".into(),
        serde_json::json!(harness::SCHEMA_VERSION),
    );
    summary.insert(
        "scenario".into(),
        serde_json::json!(scenario_stem(&args.scenario)),
    );

    let mut replay_to_csv = |schedule: &Schedule, stem: &str| -> Result<f64> {
        let outcome = replay_schedule(&scenario, schedule)?;
        let mut rows = Vec::new();
        for (t, step) in outcome.steps.iter().enumerate() {
            for sat in 0..scenario.n {
                rows.push(TrajectoryRow {
                    t,
                    sat,
                    action: schedule.get(sat, t).name(),
                    battery: step.next_state.sats[sat].battery,
                    memory: step.next_state.sats[sat].memory,
                    reward: step.per_sat_reward[sat],
                    flags: files::flags_string(&step.violations[sat]),
                });
            }
        }
        let path = dir.join(format!("{stem}_trajectory.csv"));
        files::write_trajectory_csv(&path, &rows)?;
        written.push(path);
        Ok(outcome.total_reward)
    };

    if let Some(path) = &args.schedule {
        let schedule = files::load_schedule(path)?;
        let reward = replay_to_csv(&schedule, "schedule")?;
        summary.insert("schedule_reward".into(), serde_json::json!(reward));
    }
    if let Some(path) = &args.policy {
        let (params, _) = files::load_policy(path)?;
        let (schedule, reward) = greedy_schedule(&scenario, &params)?;
        let replayed = replay_to_csv(&schedule, "policy")?;
        debug_assert!((replayed - reward).abs() < 1e-9);
        summary.insert("policy_reward".into(), serde_json::json!(reward));
    }

    let summary_path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(summary))?;
    text.push('\n');
    fs::write(&summary_path, text)?;
    written.push(summary_path);
    announce(&written);
    Ok(())
}

fn cmd_flex_routing(args: FlexRoutingArgs) -> Result<()> {
    let context = args.report.resolve()?;
    let (label, scenario) = context.routing_scenario(args.scenario.as_deref())?;
    let seeds = args.seeds.resolve(
        context
            .config
            .as_ref()
            .and_then(|c| c.seeds.as_deref()),
    )?;
    let failures = context
        .config
        .as_ref()
        .and_then(|c| c.failures.clone())
        .unwrap_or_else(|| args.failures.clone());
    if failures.is_empty() {
        bail!("at least one failure size is required (--failures or config)");
    }
    let table = files::load_qtable(&args.qtable)?;
    let report = run_routing_flex(&RoutingFlexInputs {
        scenario_label: &label,
        scenario: &scenario,
        qtable: &table,
        target_bonus_magnitude: args.bonus,
        failure_sizes: &failures,
        seeds: &seeds,
        replications: args.replications,
        jobs: context.jobs,
    })?;
    let dir = report_dir(&context.out_base, "routing-flex")?;
    let written = emit_report(&report, &dir, "flex", context.format)?;
    announce(&written);
    Ok(())
}

fn cmd_flex_resources(args: FlexResourcesArgs) -> Result<()> {
    let context = args.report.resolve()?;
    let (label, scenario) = context.resource_scenario(args.scenario.as_deref())?;
    let seeds = args.seeds.resolve(
        context
            .config
            .as_ref()
            .and_then(|c| c.seeds.as_deref()),
    )?;
    let proportions = context
        .config
        .as_ref()
        .and_then(|c| c.proportions.clone())
        .unwrap_or_else(|| args.proportions.clone());
    if proportions.is_empty() {
        bail!("at least one failure proportion is required (--proportions or config)");
    }
    let (policy, _) = files::load_policy(&args.policy)?;
    let schedule = files::load_schedule(&args.schedule)?;
    let report = run_resources_flex(&ResourceFlexInputs {
        scenario_label: &label,
        scenario: &scenario,
        policy: &policy,
        sa_schedule: &schedule,
        proportions: &proportions,
        seeds: &seeds,
        jobs: context.jobs,
    })?;
    let dir = report_dir(&context.out_base, "resources-flex")?;
    let written = emit_report(&report, &dir, "flex", context.format)?;
    announce(&written);
    Ok(())
}

fn cmd_tradeoff(args: TradeoffArgs) -> Result<()> {
    let context = args.report.resolve()?;
    let mut scenarios = Vec::new();
    if let Some(config) = &context.config {
        let flag = args.scenario.first().map(PathBuf::as_path);
        scenarios.push(context.resource_scenario(flag)?);
        let _ = config;
    } else {
        if args.scenario.is_empty() {
            bail!("at least one scenario is required (-s or --config)");
        }
        for path in &args.scenario {
            scenarios.push((scenario_stem(path), files::load_resource_scenario(path)?));
        }
    }
    let seeds = args.seeds.resolve(
        context
            .config
            .as_ref()
            .and_then(|c| c.seeds.as_deref()),
    )?;
    let sa_budgets = context
        .config
        .as_ref()
        .and_then(|c| c.sa_iterations.clone())
        .unwrap_or_else(|| args.sa_iters.clone());
    let rl_budgets = context
        .config
        .as_ref()
        .and_then(|c| c.rl_episodes.clone())
        .unwrap_or_else(|| args.rl_episodes.clone());
    if sa_budgets.is_empty() && rl_budgets.is_empty() {
        bail!("at least one SA or RL budget is required");
    }
    let sa_base: SaConfig = context
        .config
        .as_ref()
        .and_then(|c| c.sa.clone())
        .map(Into::into)
        .unwrap_or_default();
    let ppo_base: PpoConfig = context
        .config
        .as_ref()
        .and_then(|c| c.ppo.clone())
        .map(Into::into)
        .unwrap_or_default();

    let report = run_resources_tradeoff(&TradeoffInputs {
        scenarios: &scenarios,
        sa_budgets: &sa_budgets,
        rl_budgets: &rl_budgets,
        seeds: &seeds,
        sa_base,
        ppo_base,
    })?;
    let dir = report_dir(&context.out_base, "tradeoff")?;
    let written = emit_report(&report, &dir, "tradeoff", context.format)?;
    announce(&written);
    Ok(())
}
