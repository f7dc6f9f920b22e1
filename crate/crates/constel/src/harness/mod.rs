//! Experiment harness: benchmark, failure-injection, and budget-tradeoff
//! runners plus their serializable reports.
//!
//! Reports are plain data with a `schema_version` stamp. Emission produces a
//! long-format CSV (one row per measurement) and/or a nested JSON document;
//! both are byte-stable for identical inputs, except the wall-clock columns
//! of the tradeoff report, which are kept in the trailing positions so
//! reproducibility checks can strip them.
//!
//! Every stochastic stage derives its generator as
//! `ChaCha8Rng::seed_from_u64(seed)` plus a per-stage `set_stream`, so adding
//! replications or algorithms never perturbs another stage's draws.

pub mod stats;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use constel_core::anneal::{
    evaluate_schedule, random_schedule, replay_schedule, simulated_annealing, SaConfig,
};
use constel_core::ppo::{greedy_schedule, train_scheduler, PolicyParams, PpoConfig};
use constel_core::resources::Schedule;
use constel_core::routing::{
    dijkstra, evaluate_route, extract_route, extract_route_avoiding, train, LearnerConfig, QTable,
    Route, WeightMode,
};
use constel_core::scenario::{ResourceScenario, RoutingScenario};

use crate::files::format_f64;
use stats::{linear_fit, mean, sample_std, spearman_rho, LinearFit};

/// Version stamped into every report document.
pub const SCHEMA_VERSION: u32 = 1;

pub const ALGO_QROUTING: &str = "qrouting";
pub const ALGO_DIJKSTRA: &str = "dijkstra";
pub const ALGO_DIJKSTRA_MQ: &str = "dijkstra-mq";
pub const ALGO_RL: &str = "rl";
pub const ALGO_SA: &str = "sa";
pub const ALGO_RND: &str = "rnd";

// RNG stream assignments per base seed. Streams >= STREAM_FAILURE are offset
// by the failure level's index so each level draws independently.
const STREAM_TRAIN: u64 = 0;
const STREAM_EVAL_QROUTING: u64 = 1;
const STREAM_EVAL_DIJKSTRA: u64 = 2;
const STREAM_EVAL_DIJKSTRA_MQ: u64 = 3;
const STREAM_FAILURE: u64 = 16;

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building the worker pool")
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for ReportFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "both" => Ok(ReportFormat::Both),
            other => bail!("unknown report format {other:?} (expected csv, json, or both)"),
        }
    }
}

/// Long-format CSV view of a report: one row per measurement.
pub trait CsvReport {
    fn csv_header() -> &'static [&'static str];
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

/// Write `stem.csv` / `stem.json` under `dir` per the requested format and
/// return the paths written. A CSV-only request produces no JSON file.
pub fn emit_report<R: Serialize + CsvReport>(
    report: &R,
    dir: &Path,
    stem: &str,
    format: ReportFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let path = dir.join(format!("{stem}.csv"));
        let file =
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(R::csv_header())?;
        for row in report.csv_rows() {
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let path = dir.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(report).context("serializing report")?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn seeds_cell(seeds: &[u64]) -> String {
    seeds
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

// ---------------------------------------------------------------------------
// Routing benchmark
// ---------------------------------------------------------------------------

/// One (scenario, learner config, algorithm) aggregate over the seed set.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RoutingBenchRow {
    pub scenario: String,
    pub src: usize,
    pub dst: usize,
    pub config: String,
    pub algorithm: String,
    pub seeds_used: usize,
    pub delivery_rate: f64,
    /// Latency statistics pool the per-traversal samples of delivered seeds;
    /// absent when no seed delivered.
    pub mean_latency_ms: Option<f64>,
    pub p5_latency_ms: Option<f64>,
    pub p50_latency_ms: Option<f64>,
    pub p95_latency_ms: Option<f64>,
    pub mean_hops: Option<f64>,
    /// Mean episode reward over all seeds; undelivered seeds contribute 0.
    pub mean_reward: f64,
}

/// Mean per-seed latency gain of Q-routing over each baseline, paired over
/// the seeds where Q-routing delivered. Positive values favour Q-routing.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct GainRow {
    pub scenario: String,
    pub config: String,
    pub paired_seeds: usize,
    pub gain_vs_dijkstra_ms: Option<f64>,
    pub gain_vs_dijkstra_mq_ms: Option<f64>,
}

/// One delivered seed's (hop difference, latency difference) relative to
/// plain Dijkstra; positive hop_diff means the learned route is longer.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct HopLatencyPair {
    pub scenario: String,
    pub config: String,
    pub seed: u64,
    pub hop_diff: f64,
    pub latency_diff_ms: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RoutingBenchReport {
    pub schema_version: u32,
    pub replications: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<RoutingBenchRow>,
    pub gains: Vec<GainRow>,
    pub hop_latency_pairs: Vec<HopLatencyPair>,
    pub hop_latency_fit: LinearFit,
}

impl CsvReport for RoutingBenchReport {
    fn csv_header() -> &'static [&'static str] {
        &[
            "scenario",
            "src",
            "dst",
            "config",
            "algorithm",
            "seeds_used",
            "delivery_rate",
            "mean_latency_ms",
            "p5_latency_ms",
            "p50_latency_ms",
            "p95_latency_ms",
            "mean_hops",
            "mean_reward",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.scenario.clone(),
                    r.src.to_string(),
                    r.dst.to_string(),
                    r.config.clone(),
                    r.algorithm.clone(),
                    r.seeds_used.to_string(),
                    format_f64(r.delivery_rate),
                    opt_cell(r.mean_latency_ms),
                    opt_cell(r.p5_latency_ms),
                    opt_cell(r.p50_latency_ms),
                    opt_cell(r.p95_latency_ms),
                    opt_cell(r.mean_hops),
                    format_f64(r.mean_reward),
                ]
            })
            .collect()
    }
}

pub struct RoutingBenchInputs<'a> {
    pub scenarios: &'a [(String, RoutingScenario)],
    pub configs: &'a [(String, LearnerConfig)],
    pub replications: usize,
    pub seeds: &'a [u64],
    pub jobs: usize,
}

/// Per-(algorithm, seed) evaluation outcome inside one benchmark cell.
struct AlgoSeedResult {
    delivered: bool,
    hops: Option<usize>,
    mean_ms: Option<f64>,
    samples: Vec<f64>,
    reward: f64,
}

fn eval_route_seeded(
    scenario: &RoutingScenario,
    route: &Route,
    bonus: f64,
    seed: u64,
    stream: u64,
    replications: usize,
) -> Result<AlgoSeedResult> {
    if !route.delivered {
        return Ok(AlgoSeedResult {
            delivered: false,
            hops: None,
            mean_ms: None,
            samples: Vec::new(),
            reward: 0.0,
        });
    }
    let mut rng = seeded(seed, stream);
    let ev = evaluate_route(scenario, route, bonus, &mut rng, replications)?;
    Ok(AlgoSeedResult {
        delivered: true,
        hops: Some(route.hops()),
        mean_ms: Some(ev.mean_ms),
        samples: ev.samples,
        reward: ev.mean_reward,
    })
}

/// Mean pairwise difference `baseline - candidate` over indices where both
/// are present.
pub fn paired_gain(baseline: &[Option<f64>], candidate: &[Option<f64>]) -> (Option<f64>, usize) {
    assert_eq!(baseline.len(), candidate.len(), "paired samples");
    let diffs: Vec<f64> = baseline
        .iter()
        .zip(candidate)
        .filter_map(|(b, c)| Some((*b)? - (*c)?))
        .collect();
    (mean(&diffs), diffs.len())
}

/// Train Q-routing per (scenario, config, seed), extract its route, and
/// evaluate it against both Dijkstra baselines under shared reward settings.
pub fn run_routing_bench(inputs: &RoutingBenchInputs) -> Result<RoutingBenchReport> {
    if inputs.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    if inputs.replications == 0 {
        bail!("replications must be > 0");
    }
    let pool = thread_pool(inputs.jobs)?;
    let mut rows = Vec::new();
    let mut gains = Vec::new();
    let mut pairs = Vec::new();

    for (scenario_label, scenario) in inputs.scenarios {
        let dij_route = dijkstra(scenario, WeightMode::Plain)?;
        let mq_route = dijkstra(scenario, WeightMode::MeanQueue)?;
        for (config_label, config) in inputs.configs {
            let cells: Vec<(AlgoSeedResult, AlgoSeedResult, AlgoSeedResult)> =
                pool.install(|| {
                    inputs
                        .seeds
                        .par_iter()
                        .map(|&seed| -> Result<_> {
                            let mut train_rng = seeded(seed, STREAM_TRAIN);
                            let table = train(scenario, config, &mut train_rng)?;
                            let q_route = extract_route(&table, scenario);
                            let bonus = config.target_bonus_magnitude;
                            let q = eval_route_seeded(
                                scenario,
                                &q_route,
                                bonus,
                                seed,
                                STREAM_EVAL_QROUTING,
                                inputs.replications,
                            )?;
                            let d = eval_route_seeded(
                                scenario,
                                &dij_route,
                                bonus,
                                seed,
                                STREAM_EVAL_DIJKSTRA,
                                inputs.replications,
                            )?;
                            let m = eval_route_seeded(
                                scenario,
                                &mq_route,
                                bonus,
                                seed,
                                STREAM_EVAL_DIJKSTRA_MQ,
                                inputs.replications,
                            )?;
                            Ok((q, d, m))
                        })
                        .collect::<Result<Vec<_>>>()
                })?;

            let by_algo = [
                (ALGO_QROUTING, cells.iter().map(|c| &c.0).collect::<Vec<_>>()),
                (ALGO_DIJKSTRA, cells.iter().map(|c| &c.1).collect()),
                (ALGO_DIJKSTRA_MQ, cells.iter().map(|c| &c.2).collect()),
            ];
            for (algo, results) in &by_algo {
                let delivered = results.iter().filter(|r| r.delivered).count();
                let pooled: Vec<f64> = results
                    .iter()
                    .flat_map(|r| r.samples.iter().copied())
                    .collect();
                let hops: Vec<f64> = results
                    .iter()
                    .filter_map(|r| r.hops.map(|h| h as f64))
                    .collect();
                let rewards: Vec<f64> = results.iter().map(|r| r.reward).collect();
                rows.push(RoutingBenchRow {
                    scenario: scenario_label.clone(),
                    src: scenario.src(),
                    dst: scenario.dst(),
                    config: config_label.clone(),
                    algorithm: (*algo).into(),
                    seeds_used: inputs.seeds.len(),
                    delivery_rate: delivered as f64 / inputs.seeds.len() as f64,
                    mean_latency_ms: mean(&pooled),
                    p5_latency_ms: stats::percentile(&pooled, 5.0),
                    p50_latency_ms: stats::percentile(&pooled, 50.0),
                    p95_latency_ms: stats::percentile(&pooled, 95.0),
                    mean_hops: mean(&hops),
                    mean_reward: mean(&rewards).unwrap_or(0.0),
                });
            }

            let q_means: Vec<Option<f64>> = cells.iter().map(|c| c.0.mean_ms).collect();
            let d_means: Vec<Option<f64>> = cells.iter().map(|c| c.1.mean_ms).collect();
            let m_means: Vec<Option<f64>> = cells.iter().map(|c| c.2.mean_ms).collect();
            let (gain_d, paired_d) = paired_gain(&d_means, &q_means);
            let (gain_m, paired_m) = paired_gain(&m_means, &q_means);
            gains.push(GainRow {
                scenario: scenario_label.clone(),
                config: config_label.clone(),
                paired_seeds: paired_d.min(paired_m),
                gain_vs_dijkstra_ms: gain_d,
                gain_vs_dijkstra_mq_ms: gain_m,
            });
            for (idx, cell) in cells.iter().enumerate() {
                if let (Some(qh), Some(dh), Some(qm), Some(dm)) =
                    (cell.0.hops, cell.1.hops, cell.0.mean_ms, cell.1.mean_ms)
                {
                    pairs.push(HopLatencyPair {
                        scenario: scenario_label.clone(),
                        config: config_label.clone(),
                        seed: inputs.seeds[idx],
                        hop_diff: qh as f64 - dh as f64,
                        latency_diff_ms: qm - dm,
                    });
                }
            }
        }
    }

    let xs: Vec<f64> = pairs.iter().map(|p| p.hop_diff).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.latency_diff_ms).collect();
    Ok(RoutingBenchReport {
        schema_version: SCHEMA_VERSION,
        replications: inputs.replications,
        seeds: inputs.seeds.to_vec(),
        rows,
        gains,
        hop_latency_pairs: pairs,
        hop_latency_fit: linear_fit(&xs, &ys),
    })
}

// ---------------------------------------------------------------------------
// Failure injection (shared report shape)
// ---------------------------------------------------------------------------

/// One (failure level, algorithm) aggregate. Routing rows populate the
/// delivery/latency/hop columns; resource rows only carry rewards.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FlexRow {
    /// Failure size (routing, integral) or deleted proportion (resources).
    pub failure: f64,
    pub algorithm: String,
    pub seeds_used: usize,
    /// Set when the requested failure level cannot be realized (more nodes
    /// than the nominal path has interior hops); metric columns stay empty.
    pub infeasible: bool,
    pub delivery_rate: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub mean_hops: Option<f64>,
    pub mean_reward: f64,
    pub std_reward: f64,
}

/// Spearman rank correlation of mean reward against the failure axis.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SpearmanRow {
    pub algorithm: String,
    pub rho: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FlexReport {
    pub schema_version: u32,
    pub kind: String,
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<FlexRow>,
    pub monotonicity: Vec<SpearmanRow>,
}

impl CsvReport for FlexReport {
    fn csv_header() -> &'static [&'static str] {
        &[
            "failure",
            "algorithm",
            "seeds_used",
            "infeasible",
            "delivery_rate",
            "mean_latency_ms",
            "mean_hops",
            "mean_reward",
            "std_reward",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    format_f64(r.failure),
                    r.algorithm.clone(),
                    r.seeds_used.to_string(),
                    u8::from(r.infeasible).to_string(),
                    opt_cell(r.delivery_rate),
                    opt_cell(r.mean_latency_ms),
                    opt_cell(r.mean_hops),
                    format_f64(r.mean_reward),
                    format_f64(r.std_reward),
                ]
            })
            .collect()
    }
}

fn monotonicity_rows(
    rows: &[FlexRow],
    algorithms: &[&str],
) -> Vec<SpearmanRow> {
    algorithms
        .iter()
        .map(|algo| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.algorithm == *algo && !r.infeasible)
                .map(|r| (r.failure, r.mean_reward))
                .unzip();
            SpearmanRow {
                algorithm: (*algo).into(),
                rho: spearman_rho(&xs, &ys),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Routing failure injection
// ---------------------------------------------------------------------------

pub struct RoutingFlexInputs<'a> {
    pub scenario_label: &'a str,
    pub scenario: &'a RoutingScenario,
    pub qtable: &'a QTable,
    pub target_bonus_magnitude: f64,
    pub failure_sizes: &'a [usize],
    pub seeds: &'a [u64],
    pub replications: usize,
    pub jobs: usize,
}

/// For each failure size `k`, mark `k` seeded-random interior nodes of each
/// algorithm's own nominal path unresponsive. The fixed baselines lose
/// delivery outright; Q-routing re-extracts its route around the blocked
/// set from the frozen table.
pub fn run_routing_flex(inputs: &RoutingFlexInputs) -> Result<FlexReport> {
    if inputs.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    if inputs.replications == 0 {
        bail!("replications must be > 0");
    }
    let scenario = inputs.scenario;
    let q_nominal = extract_route(inputs.qtable, scenario);
    let nominal = [
        (ALGO_QROUTING, q_nominal.clone(), STREAM_EVAL_QROUTING),
        (
            ALGO_DIJKSTRA,
            dijkstra(scenario, WeightMode::Plain)?,
            STREAM_EVAL_DIJKSTRA,
        ),
        (
            ALGO_DIJKSTRA_MQ,
            dijkstra(scenario, WeightMode::MeanQueue)?,
            STREAM_EVAL_DIJKSTRA_MQ,
        ),
    ];

    let mut sizes: Vec<usize> = inputs.failure_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();

    let pool = thread_pool(inputs.jobs)?;
    let mut rows = Vec::new();
    for &k in &sizes {
        for (algo, route, eval_stream) in &nominal {
            let interior: Vec<usize> = if route.delivered && route.nodes.len() > 2 {
                route.nodes[1..route.nodes.len() - 1].to_vec()
            } else {
                Vec::new()
            };
            if k > interior.len() {
                rows.push(FlexRow {
                    failure: k as f64,
                    algorithm: (*algo).into(),
                    seeds_used: inputs.seeds.len(),
                    infeasible: true,
                    delivery_rate: None,
                    mean_latency_ms: None,
                    mean_hops: None,
                    mean_reward: 0.0,
                    std_reward: 0.0,
                });
                continue;
            }
            let per_seed: Vec<AlgoSeedResult> = pool.install(|| {
                inputs
                    .seeds
                    .par_iter()
                    .map(|&seed| -> Result<AlgoSeedResult> {
                        // The blocked set is drawn from this algorithm's own
                        // nominal interior.
                        let mut failure_rng = seeded(seed, STREAM_FAILURE + k as u64);
                        let mut pick = interior.clone();
                        for i in 0..k {
                            let j = failure_rng.gen_range(i..pick.len());
                            pick.swap(i, j);
                        }
                        let mut blocked = vec![false; scenario.n()];
                        for &node in &pick[..k] {
                            blocked[node] = true;
                        }
                        let effective = if *algo == ALGO_QROUTING {
                            extract_route_avoiding(inputs.qtable, scenario, &blocked)
                        } else if k == 0 {
                            route.clone()
                        } else {
                            // A precomputed path cannot route around a dead
                            // interior node.
                            Route {
                                nodes: route.nodes.clone(),
                                delivered: false,
                            }
                        };
                        eval_route_seeded(
                            scenario,
                            &effective,
                            inputs.target_bonus_magnitude,
                            seed,
                            *eval_stream,
                            inputs.replications,
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let delivered = per_seed.iter().filter(|r| r.delivered).count();
            let latencies: Vec<f64> = per_seed.iter().filter_map(|r| r.mean_ms).collect();
            let hops: Vec<f64> = per_seed
                .iter()
                .filter_map(|r| r.hops.map(|h| h as f64))
                .collect();
            let rewards: Vec<f64> = per_seed.iter().map(|r| r.reward).collect();
            rows.push(FlexRow {
                failure: k as f64,
                algorithm: (*algo).into(),
                seeds_used: inputs.seeds.len(),
                infeasible: false,
                delivery_rate: Some(delivered as f64 / inputs.seeds.len() as f64),
                mean_latency_ms: mean(&latencies),
                mean_hops: mean(&hops),
                mean_reward: mean(&rewards).unwrap_or(0.0),
                std_reward: sample_std(&rewards),
            });
        }
    }

    let monotonicity =
        monotonicity_rows(&rows, &[ALGO_QROUTING, ALGO_DIJKSTRA, ALGO_DIJKSTRA_MQ]);
    Ok(FlexReport {
        schema_version: SCHEMA_VERSION,
        kind: "routing".into(),
        scenario: inputs.scenario_label.into(),
        seeds: inputs.seeds.to_vec(),
        rows,
        monotonicity,
    })
}

// ---------------------------------------------------------------------------
// Resource failure injection
// ---------------------------------------------------------------------------

pub struct ResourceFlexInputs<'a> {
    pub scenario_label: &'a str,
    pub scenario: &'a ResourceScenario,
    pub policy: &'a PolicyParams,
    pub sa_schedule: &'a Schedule,
    pub proportions: &'a [f64],
    pub seeds: &'a [u64],
    pub jobs: usize,
}

/// Delete a seeded uniform fraction of the pooled access windows, then let
/// the trained policy re-plan greedily, replay the frozen annealed schedule
/// leniently, and re-sample the random baseline on the perturbed scenario.
pub fn run_resources_flex(inputs: &ResourceFlexInputs) -> Result<FlexReport> {
    if inputs.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let scenario = inputs.scenario;
    let mut proportions: Vec<f64> = inputs.proportions.to_vec();
    for &p in &proportions {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            bail!("failure proportion {p} outside [0, 1]");
        }
    }
    proportions.sort_unstable_by(f64::total_cmp);
    proportions.dedup();

    // Pooled access cells in a fixed order: acquisition table first, then
    // ground stations, satellite-major.
    let mut windows: Vec<(u8, usize, usize)> = Vec::new();
    for sat in 0..scenario.n {
        for slot in 0..scenario.slots {
            if scenario.at_access[sat][slot] != 0 {
                windows.push((0, sat, slot));
            }
        }
    }
    for sat in 0..scenario.n {
        for slot in 0..scenario.slots {
            if scenario.gs_access[sat][slot] != 0 {
                windows.push((1, sat, slot));
            }
        }
    }

    let pool = thread_pool(inputs.jobs)?;
    let mut rows = Vec::new();
    for (p_idx, &p) in proportions.iter().enumerate() {
        let k = ((p * windows.len() as f64).round() as usize).min(windows.len());
        let outcomes: Vec<(f64, f64, f64)> = pool.install(|| {
            inputs
                .seeds
                .par_iter()
                .map(|&seed| -> Result<(f64, f64, f64)> {
                    let mut rng = seeded(seed, STREAM_FAILURE + p_idx as u64);
                    let mut pick = windows.clone();
                    for i in 0..k {
                        let j = rng.gen_range(i..pick.len());
                        pick.swap(i, j);
                    }
                    let mut perturbed = scenario.clone();
                    for &(table, sat, slot) in &pick[..k] {
                        if table == 0 {
                            perturbed.at_access[sat][slot] = 0;
                        } else {
                            perturbed.gs_access[sat][slot] = 0;
                        }
                    }
                    let (_, rl_reward) = greedy_schedule(&perturbed, inputs.policy)?;
                    let sa_reward = replay_schedule(&perturbed, inputs.sa_schedule)?.total_reward;
                    // The random baseline re-samples on the perturbed masks,
                    // reusing the generator state after the deletion draws.
                    let rnd_schedule = random_schedule(&perturbed, &mut rng);
                    let rnd_reward = evaluate_schedule(&perturbed, &rnd_schedule)?;
                    Ok((rl_reward, sa_reward, rnd_reward))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let columns = [
            (ALGO_RL, outcomes.iter().map(|o| o.0).collect::<Vec<f64>>()),
            (ALGO_SA, outcomes.iter().map(|o| o.1).collect()),
            (ALGO_RND, outcomes.iter().map(|o| o.2).collect()),
        ];
        for (algo, rewards) in &columns {
            rows.push(FlexRow {
                failure: p,
                algorithm: (*algo).into(),
                seeds_used: inputs.seeds.len(),
                infeasible: false,
                delivery_rate: None,
                mean_latency_ms: None,
                mean_hops: None,
                mean_reward: mean(rewards).unwrap_or(0.0),
                std_reward: sample_std(rewards),
            });
        }
    }

    let monotonicity = monotonicity_rows(&rows, &[ALGO_RL, ALGO_SA, ALGO_RND]);
    Ok(FlexReport {
        schema_version: SCHEMA_VERSION,
        kind: "resources".into(),
        scenario: inputs.scenario_label.into(),
        seeds: inputs.seeds.to_vec(),
        rows,
        monotonicity,
    })
}

// ---------------------------------------------------------------------------
// Compute-budget tradeoff
// ---------------------------------------------------------------------------

/// One (scenario, algorithm, budget) aggregate. The wall-clock columns are
/// measurement noise by nature and sit last so reproducibility checks can
/// strip them.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub scenario: String,
    pub n_sats: usize,
    pub slots: usize,
    pub algorithm: String,
    /// SA iterations, RL scenario passes, or 1 for the random baseline.
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_wall_clock_s: f64,
    pub total_wall_clock_s: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TradeoffReport {
    pub schema_version: u32,
    pub rows: Vec<TradeoffRow>,
}

impl CsvReport for TradeoffReport {
    fn csv_header() -> &'static [&'static str] {
        &[
            "scenario",
            "n_sats",
            "slots",
            "algorithm",
            "budget",
            "seeds",
            "mean_reward",
            "std_reward",
            "mean_wall_clock_s",
            "total_wall_clock_s",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.scenario.clone(),
                    r.n_sats.to_string(),
                    r.slots.to_string(),
                    r.algorithm.clone(),
                    r.budget.to_string(),
                    seeds_cell(&r.seeds),
                    format_f64(r.mean_reward),
                    format_f64(r.std_reward),
                    format_f64(r.mean_wall_clock_s),
                    format_f64(r.total_wall_clock_s),
                ]
            })
            .collect()
    }
}

pub struct TradeoffInputs<'a> {
    pub scenarios: &'a [(String, ResourceScenario)],
    pub sa_budgets: &'a [usize],
    pub rl_budgets: &'a [usize],
    pub seeds: &'a [u64],
    pub sa_base: SaConfig,
    pub ppo_base: PpoConfig,
}

/// Solution quality versus compute budget for the random baseline, annealing
/// at each iteration budget, and the learned scheduler at each scenario-pass
/// budget. Cells run strictly sequentially so the wall-clock columns measure
/// a single solver at a time.
pub fn run_resources_tradeoff(inputs: &TradeoffInputs) -> Result<TradeoffReport> {
    if inputs.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let mut sa_budgets: Vec<usize> = inputs.sa_budgets.to_vec();
    sa_budgets.sort_unstable();
    sa_budgets.dedup();
    let mut rl_budgets: Vec<usize> = inputs.rl_budgets.to_vec();
    rl_budgets.sort_unstable();
    rl_budgets.dedup();

    let mut rows = Vec::new();
    for (label, scenario) in inputs.scenarios {
        let mut push_row = |algorithm: &str, budget: usize, rewards: &[f64], secs: &[f64]| {
            let total: f64 = secs.iter().sum();
            rows.push(TradeoffRow {
                scenario: label.clone(),
                n_sats: scenario.n,
                slots: scenario.slots,
                algorithm: algorithm.into(),
                budget,
                seeds: inputs.seeds.to_vec(),
                mean_reward: mean(rewards).unwrap_or(0.0),
                std_reward: sample_std(rewards),
                mean_wall_clock_s: total / inputs.seeds.len() as f64,
                total_wall_clock_s: total,
            });
        };

        let mut rewards = Vec::new();
        let mut secs = Vec::new();
        for &seed in inputs.seeds {
            let started = Instant::now();
            let mut rng = seeded(seed, STREAM_TRAIN);
            let schedule = random_schedule(scenario, &mut rng);
            let reward = evaluate_schedule(scenario, &schedule)?;
            secs.push(started.elapsed().as_secs_f64());
            rewards.push(reward);
        }
        push_row(ALGO_RND, 1, &rewards, &secs);

        for &budget in &sa_budgets {
            let mut rewards = Vec::new();
            let mut secs = Vec::new();
            for &seed in inputs.seeds {
                let config = SaConfig {
                    iterations: budget,
                    rng_seed: seed,
                    ..inputs.sa_base.clone()
                };
                let started = Instant::now();
                let outcome = simulated_annealing(scenario, &config)?;
                secs.push(started.elapsed().as_secs_f64());
                rewards.push(outcome.best_reward);
            }
            push_row(ALGO_SA, budget, &rewards, &secs);
        }

        for &budget in &rl_budgets {
            let mut rewards = Vec::new();
            let mut secs = Vec::new();
            for &seed in inputs.seeds {
                // One budget unit is one full scenario pass: `budget`
                // updates of one episode each.
                let config = PpoConfig {
                    updates: budget,
                    episodes_per_update: 1,
                    rng_seed: seed,
                    ..inputs.ppo_base.clone()
                };
                let started = Instant::now();
                let trained = train_scheduler(scenario, &config)?;
                let (_, reward) = greedy_schedule(scenario, &trained.params)?;
                secs.push(started.elapsed().as_secs_f64());
                rewards.push(reward);
            }
            push_row(ALGO_RL, budget, &rewards, &secs);
        }
    }

    Ok(TradeoffReport {
        schema_version: SCHEMA_VERSION,
        rows,
    })
}
