//! On-disk artifact formats.
//!
//! JSON artifacts carry a `version` field (and scenario files a `kind`
//! discriminant) so a reader can fail loudly instead of misinterpreting
//! bytes. Field order is fixed by the struct definitions, which makes every
//! writer byte-stable for identical inputs. Trace and curve artifacts are
//! plain CSV.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use constel_core::anneal::{SaConfig, SaTracePoint};
use constel_core::ppo::{NetShape, PolicyParams, PpoConfig, TrainCurvePoint};
use constel_core::resources::{SatAction, Schedule, ViolationFlags};
use constel_core::routing::{EpisodeStats, LearnerConfig, QTable};
use constel_core::scenario::{
    QueueBounds, RateConfig, RateSampling, ResourceScenario, ResourceSynthParams, RoutingScenario,
    RoutingSynthParams,
};

/// Version stamped into (and required from) every JSON artifact format.
pub const FORMAT_VERSION: u32 = 1;

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing to JSON")?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, path: &Path) -> Result<T> {
    serde_json::from_str(text).with_context(|| format!("parsing {}", path.display()))
}

fn check_version(version: u32, path: &Path) -> Result<()> {
    if version != FORMAT_VERSION {
        bail!(
            "{}: unsupported format version {version} (expected {FORMAT_VERSION})",
            path.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// Routing scenario document. `prop_latency_ms` and `queue_bounds_ms` run
/// parallel to `edges`, which lists directed `[from, to]` pairs.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoutingScenarioFile {
    kind: String,
    version: u32,
    n: usize,
    src: usize,
    dst: usize,
    rng_seed: u64,
    edges: Vec<[usize; 2]>,
    prop_latency_ms: Vec<f64>,
    queue_bounds_ms: Vec<[f64; 2]>,
}

/// Resource scenario document. Access timelines are dense `[sat][slot]`
/// integer grids (0 = no access); `sun` uses 0/1.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceScenarioFile {
    kind: String,
    version: u32,
    n: usize,
    slots: usize,
    slot_duration_s: Vec<f64>,
    at_access: Vec<Vec<u32>>,
    gs_access: Vec<Vec<u32>>,
    sun: Vec<Vec<u8>>,
    n_at: u32,
    n_gs: u32,
    rates: RatesFile,
    init_battery: Vec<f64>,
    init_memory: Vec<f64>,
    rng_seed: u64,
}

/// Rate block keyed by the wire names used throughout scenario files.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct RatesFile {
    #[serde(rename = "dB_bg")]
    battery_background: f64,
    #[serde(rename = "dB_dl")]
    battery_downlink: f64,
    #[serde(rename = "dB_sun")]
    battery_sun: f64,
    #[serde(rename = "dM_tm")]
    memory_telemetry: f64,
    #[serde(rename = "dM_dl")]
    memory_downlink: f64,
    #[serde(rename = "dM_aq")]
    memory_acquisition: f64,
    #[serde(rename = "dR_aq")]
    reward_acquisition: f64,
    #[serde(rename = "dR_dl")]
    reward_downlink: f64,
    #[serde(rename = "P_bat")]
    penalty_battery: f64,
    #[serde(rename = "P_mem")]
    penalty_memory: f64,
    #[serde(rename = "P_simGS")]
    penalty_shared_gs: f64,
    #[serde(rename = "P_simAT")]
    penalty_shared_at: f64,
    #[serde(rename = "P_invAct")]
    penalty_invalid_action: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampling: Option<SamplingFile>,
}

/// Optional per-rate uniform envelopes, each `[lo, hi]`.
#[derive(Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct SamplingFile {
    #[serde(rename = "dB_bg", default, skip_serializing_if = "Option::is_none")]
    battery_background: Option<[f64; 2]>,
    #[serde(rename = "dB_dl", default, skip_serializing_if = "Option::is_none")]
    battery_downlink: Option<[f64; 2]>,
    #[serde(rename = "dB_sun", default, skip_serializing_if = "Option::is_none")]
    battery_sun: Option<[f64; 2]>,
    #[serde(rename = "dM_tm", default, skip_serializing_if = "Option::is_none")]
    memory_telemetry: Option<[f64; 2]>,
    #[serde(rename = "dM_dl", default, skip_serializing_if = "Option::is_none")]
    memory_downlink: Option<[f64; 2]>,
    #[serde(rename = "dM_aq", default, skip_serializing_if = "Option::is_none")]
    memory_acquisition: Option<[f64; 2]>,
}

impl From<&RateConfig> for RatesFile {
    fn from(r: &RateConfig) -> Self {
        RatesFile {
            battery_background: r.battery_background,
            battery_downlink: r.battery_downlink,
            battery_sun: r.battery_sun,
            memory_telemetry: r.memory_telemetry,
            memory_downlink: r.memory_downlink,
            memory_acquisition: r.memory_acquisition,
            reward_acquisition: r.reward_acquisition,
            reward_downlink: r.reward_downlink,
            penalty_battery: r.penalty_battery,
            penalty_memory: r.penalty_memory,
            penalty_shared_gs: r.penalty_shared_gs,
            penalty_shared_at: r.penalty_shared_at,
            penalty_invalid_action: r.penalty_invalid_action,
            sampling: r.sampling.as_ref().map(|s| SamplingFile {
                battery_background: s.battery_background.map(|(a, b)| [a, b]),
                battery_downlink: s.battery_downlink.map(|(a, b)| [a, b]),
                battery_sun: s.battery_sun.map(|(a, b)| [a, b]),
                memory_telemetry: s.memory_telemetry.map(|(a, b)| [a, b]),
                memory_downlink: s.memory_downlink.map(|(a, b)| [a, b]),
                memory_acquisition: s.memory_acquisition.map(|(a, b)| [a, b]),
            }),
        }
    }
}

impl From<RatesFile> for RateConfig {
    fn from(f: RatesFile) -> Self {
        RateConfig {
            battery_background: f.battery_background,
            battery_downlink: f.battery_downlink,
            battery_sun: f.battery_sun,
            memory_telemetry: f.memory_telemetry,
            memory_downlink: f.memory_downlink,
            memory_acquisition: f.memory_acquisition,
            reward_acquisition: f.reward_acquisition,
            reward_downlink: f.reward_downlink,
            penalty_battery: f.penalty_battery,
            penalty_memory: f.penalty_memory,
            penalty_shared_gs: f.penalty_shared_gs,
            penalty_shared_at: f.penalty_shared_at,
            penalty_invalid_action: f.penalty_invalid_action,
            sampling: f.sampling.map(|s| RateSampling {
                battery_background: s.battery_background.map(|[a, b]| (a, b)),
                battery_downlink: s.battery_downlink.map(|[a, b]| (a, b)),
                battery_sun: s.battery_sun.map(|[a, b]| (a, b)),
                memory_telemetry: s.memory_telemetry.map(|[a, b]| (a, b)),
                memory_downlink: s.memory_downlink.map(|[a, b]| (a, b)),
                memory_acquisition: s.memory_acquisition.map(|[a, b]| (a, b)),
            }),
        }
    }
}

/// Either scenario flavour, dispatched on the file's `kind` field.
pub enum ScenarioFile {
    Routing(Box<RoutingScenario>),
    Resources(Box<ResourceScenario>),
}

/// Read the `kind` discriminant without committing to a schema.
fn peek_kind(text: &str, path: &Path) -> Result<String> {
    #[derive(Deserialize)]
    struct KindOnly {
        kind: String,
    }
    let k: KindOnly = parse_json(text, path)?;
    Ok(k.kind)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = read_file(path)?;
    match peek_kind(&text, path)?.as_str() {
        "routing" => Ok(ScenarioFile::Routing(Box::new(routing_from_text(
            &text, path,
        )?))),
        "resources" => Ok(ScenarioFile::Resources(Box::new(resources_from_text(
            &text, path,
        )?))),
        other => bail!(
            "{}: unknown scenario kind {other:?} (expected \"routing\" or \"resources\")",
            path.display()
        ),
    }
}

pub fn load_routing_scenario(path: &Path) -> Result<RoutingScenario> {
    match load_scenario(path)? {
        ScenarioFile::Routing(s) => Ok(*s),
        ScenarioFile::Resources(_) => bail!(
            "{}: expected a routing scenario, found kind \"resources\"",
            path.display()
        ),
    }
}

pub fn load_resource_scenario(path: &Path) -> Result<ResourceScenario> {
    match load_scenario(path)? {
        ScenarioFile::Resources(s) => Ok(*s),
        ScenarioFile::Routing(_) => bail!(
            "{}: expected a resources scenario, found kind \"routing\"",
            path.display()
        ),
    }
}

fn routing_from_text(text: &str, path: &Path) -> Result<RoutingScenario> {
    let file: RoutingScenarioFile = parse_json(text, path)?;
    check_version(file.version, path)?;
    if file.prop_latency_ms.len() != file.edges.len() {
        bail!(
            "{}: prop_latency_ms has {} entries but edges has {}",
            path.display(),
            file.prop_latency_ms.len(),
            file.edges.len()
        );
    }
    if file.queue_bounds_ms.len() != file.edges.len() {
        bail!(
            "{}: queue_bounds_ms has {} entries but edges has {}",
            path.display(),
            file.queue_bounds_ms.len(),
            file.edges.len()
        );
    }
    let edges = file
        .edges
        .iter()
        .zip(&file.prop_latency_ms)
        .zip(&file.queue_bounds_ms)
        .map(|((&[u, v], &prop), &[lo, hi])| {
            (
                u,
                v,
                prop,
                QueueBounds {
                    min_ms: lo,
                    max_ms: hi,
                },
            )
        });
    let scenario =
        RoutingScenario::from_directed_edges(file.n, file.src, file.dst, file.rng_seed, edges)
            .with_context(|| format!("validating {}", path.display()))?;
    scenario
        .validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(scenario)
}

fn resources_from_text(text: &str, path: &Path) -> Result<ResourceScenario> {
    let file: ResourceScenarioFile = parse_json(text, path)?;
    check_version(file.version, path)?;
    let mut sun = Vec::with_capacity(file.sun.len());
    for (sat, row) in file.sun.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (slot, &v) in row.iter().enumerate() {
            match v {
                0 => out.push(false),
                1 => out.push(true),
                other => bail!(
                    "{}: sun[{sat}][{slot}] must be 0 or 1, got {other}",
                    path.display()
                ),
            }
        }
        sun.push(out);
    }
    let scenario = ResourceScenario {
        n: file.n,
        slots: file.slots,
        slot_duration_s: file.slot_duration_s,
        at_access: file.at_access,
        gs_access: file.gs_access,
        sun,
        n_at: file.n_at,
        n_gs: file.n_gs,
        rates: file.rates.into(),
        init_battery: file.init_battery,
        init_memory: file.init_memory,
        rng_seed: file.rng_seed,
    };
    scenario
        .validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(scenario)
}

pub fn save_routing_scenario(path: &Path, scenario: &RoutingScenario) -> Result<()> {
    let mut edges = Vec::new();
    let mut prop = Vec::new();
    let mut queue = Vec::new();
    for (from, link) in scenario.directed_edges() {
        edges.push([from, link.to]);
        prop.push(link.prop_ms);
        queue.push([link.queue.min_ms, link.queue.max_ms]);
    }
    write_json(
        path,
        &RoutingScenarioFile {
            kind: "routing".into(),
            version: FORMAT_VERSION,
            n: scenario.n(),
            src: scenario.src(),
            dst: scenario.dst(),
            rng_seed: scenario.rng_seed(),
            edges,
            prop_latency_ms: prop,
            queue_bounds_ms: queue,
        },
    )
}

pub fn save_resource_scenario(path: &Path, scenario: &ResourceScenario) -> Result<()> {
    write_json(
        path,
        &ResourceScenarioFile {
            kind: "resources".into(),
            version: FORMAT_VERSION,
            n: scenario.n,
            slots: scenario.slots,
            slot_duration_s: scenario.slot_duration_s.clone(),
            at_access: scenario.at_access.clone(),
            gs_access: scenario.gs_access.clone(),
            sun: scenario
                .sun
                .iter()
                .map(|row| row.iter().map(|&b| u8::from(b)).collect())
                .collect(),
            n_at: scenario.n_at,
            n_gs: scenario.n_gs,
            rates: (&scenario.rates).into(),
            init_battery: scenario.init_battery.clone(),
            init_memory: scenario.init_memory.clone(),
            rng_seed: scenario.rng_seed,
        },
    )
}

// ---------------------------------------------------------------------------
// Trained-model artifacts
// ---------------------------------------------------------------------------

/// Q-table export: `q` is row-major `n x n`.
#[derive(Serialize, Deserialize)]
struct QTableFile {
    n: usize,
    q: Vec<f64>,
}

pub fn save_qtable(path: &Path, table: &QTable) -> Result<()> {
    write_json(
        path,
        &QTableFile {
            n: table.n(),
            q: table.values().to_vec(),
        },
    )
}

pub fn load_qtable(path: &Path) -> Result<QTable> {
    let text = read_file(path)?;
    let file: QTableFile = parse_json(&text, path)?;
    QTable::from_values(file.n, file.q).with_context(|| format!("validating {}", path.display()))
}

/// Serializable mirror of [`PpoConfig`]; absent fields fall back to the
/// library defaults.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfigFile {
    pub hidden_dim: usize,
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub updates: usize,
    pub episodes_per_update: usize,
    pub reward_scale: f64,
    pub normalize_advantages: bool,
    pub rng_seed: u64,
}

impl Default for PpoConfigFile {
    fn default() -> Self {
        PpoConfig::default().into()
    }
}

impl From<PpoConfig> for PpoConfigFile {
    fn from(c: PpoConfig) -> Self {
        PpoConfigFile {
            hidden_dim: c.hidden_dim,
            clip_epsilon: c.clip_epsilon,
            gamma: c.gamma,
            gae_lambda: c.gae_lambda,
            epochs: c.epochs,
            minibatch_size: c.minibatch_size,
            learning_rate: c.learning_rate,
            value_coef: c.value_coef,
            entropy_coef: c.entropy_coef,
            updates: c.updates,
            episodes_per_update: c.episodes_per_update,
            reward_scale: c.reward_scale,
            normalize_advantages: c.normalize_advantages,
            rng_seed: c.rng_seed,
        }
    }
}

impl From<PpoConfigFile> for PpoConfig {
    fn from(f: PpoConfigFile) -> Self {
        PpoConfig {
            hidden_dim: f.hidden_dim,
            clip_epsilon: f.clip_epsilon,
            gamma: f.gamma,
            gae_lambda: f.gae_lambda,
            epochs: f.epochs,
            minibatch_size: f.minibatch_size,
            learning_rate: f.learning_rate,
            value_coef: f.value_coef,
            entropy_coef: f.entropy_coef,
            updates: f.updates,
            episodes_per_update: f.episodes_per_update,
            reward_scale: f.reward_scale,
            normalize_advantages: f.normalize_advantages,
            rng_seed: f.rng_seed,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    kind: String,
    version: u32,
    n_sats: usize,
    obs_dim: usize,
    hidden_dim: usize,
    config: PpoConfigFile,
    layers: Vec<LayerFile>,
}

/// One dense layer block; `data` is row-major `rows x cols`.
#[derive(Serialize, Deserialize)]
struct LayerFile {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Layer names and shapes in flat-parameter order.
fn layer_dims(shape: NetShape) -> [(&'static str, usize, usize); 8] {
    let (h, obs, ld) = (shape.hidden_dim, shape.obs_dim, shape.logits_dim());
    [
        ("trunk1_w", h, obs),
        ("trunk1_b", h, 1),
        ("trunk2_w", h, h),
        ("trunk2_b", h, 1),
        ("policy_w", ld, h),
        ("policy_b", ld, 1),
        ("value_w", 1, h),
        ("value_b", 1, 1),
    ]
}

pub fn save_policy(path: &Path, params: &PolicyParams, config: &PpoConfig) -> Result<()> {
    let shape = params.shape();
    let mut layers = Vec::with_capacity(8);
    let mut rest = params.theta();
    for (name, rows, cols) in layer_dims(shape) {
        let (block, tail) = rest.split_at(rows * cols);
        layers.push(LayerFile {
            name: name.into(),
            rows,
            cols,
            data: block.to_vec(),
        });
        rest = tail;
    }
    debug_assert!(rest.is_empty());
    write_json(
        path,
        &PolicyFile {
            kind: "policy".into(),
            version: FORMAT_VERSION,
            n_sats: shape.n_sats,
            obs_dim: shape.obs_dim,
            hidden_dim: shape.hidden_dim,
            config: config.clone().into(),
            layers,
        },
    )
}

pub fn load_policy(path: &Path) -> Result<(PolicyParams, PpoConfig)> {
    let text = read_file(path)?;
    let file: PolicyFile = parse_json(&text, path)?;
    if file.kind != "policy" {
        bail!(
            "{}: expected kind \"policy\", found {:?}",
            path.display(),
            file.kind
        );
    }
    check_version(file.version, path)?;
    let shape = NetShape {
        n_sats: file.n_sats,
        obs_dim: file.obs_dim,
        hidden_dim: file.hidden_dim,
    };
    let dims = layer_dims(shape);
    if file.layers.len() != dims.len() {
        bail!(
            "{}: expected {} layers, found {}",
            path.display(),
            dims.len(),
            file.layers.len()
        );
    }
    let mut theta = Vec::with_capacity(shape.param_len());
    for (layer, (name, rows, cols)) in file.layers.iter().zip(dims) {
        if layer.name != name {
            bail!(
                "{}: expected layer {name:?} in position, found {:?}",
                path.display(),
                layer.name
            );
        }
        if layer.rows != rows || layer.cols != cols {
            bail!(
                "{}: layer {name:?} must be {rows}x{cols}, found {}x{}",
                path.display(),
                layer.rows,
                layer.cols
            );
        }
        if layer.data.len() != rows * cols {
            bail!(
                "{}: layer {name:?} data length {} does not match {rows}x{cols}",
                path.display(),
                layer.data.len()
            );
        }
        theta.extend_from_slice(&layer.data);
    }
    let params = PolicyParams::from_theta(shape, theta)
        .with_context(|| format!("validating {}", path.display()))?;
    Ok((params, file.config.into()))
}

// ---------------------------------------------------------------------------
// Schedule interchange
// ---------------------------------------------------------------------------

/// Schedules travel as a bare 2-D array of action names, `[sat][slot]`.
pub fn save_schedule(path: &Path, schedule: &Schedule) -> Result<()> {
    let names: Vec<Vec<&'static str>> = schedule
        .rows()
        .iter()
        .map(|row| row.iter().map(|a| a.name()).collect())
        .collect();
    write_json(path, &names)
}

pub fn load_schedule(path: &Path) -> Result<Schedule> {
    let text = read_file(path)?;
    let names: Vec<Vec<String>> = parse_json(&text, path)?;
    let mut actions = Vec::with_capacity(names.len());
    for (sat, row) in names.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (slot, name) in row.iter().enumerate() {
            let action = SatAction::from_name(name).ok_or_else(|| {
                anyhow::anyhow!(
                    "{}: unknown action {name:?} at sat {sat} slot {slot} \
                     (expected NOP, Q, D, or QD)",
                    path.display()
                )
            })?;
            out.push(action);
        }
        actions.push(out);
    }
    Schedule::from_actions(actions).with_context(|| format!("validating {}", path.display()))
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Serializable mirror of [`LearnerConfig`]; absent fields fall back to the
/// library defaults.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfigFile {
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon0: f64,
    pub epsilon_decay: f64,
    pub loop_penalty: f64,
    pub target_bonus_magnitude: f64,
}

impl Default for LearnerConfigFile {
    fn default() -> Self {
        LearnerConfig::default().into()
    }
}

impl From<LearnerConfig> for LearnerConfigFile {
    fn from(c: LearnerConfig) -> Self {
        LearnerConfigFile {
            episodes: c.episodes,
            alpha: c.alpha,
            gamma: c.gamma,
            epsilon0: c.epsilon0,
            epsilon_decay: c.epsilon_decay,
            loop_penalty: c.loop_penalty,
            target_bonus_magnitude: c.target_bonus_magnitude,
        }
    }
}

impl From<LearnerConfigFile> for LearnerConfig {
    fn from(f: LearnerConfigFile) -> Self {
        LearnerConfig {
            episodes: f.episodes,
            alpha: f.alpha,
            gamma: f.gamma,
            epsilon0: f.epsilon0,
            epsilon_decay: f.epsilon_decay,
            loop_penalty: f.loop_penalty,
            target_bonus_magnitude: f.target_bonus_magnitude,
        }
    }
}

/// Serializable mirror of [`SaConfig`]; absent fields fall back to the
/// library defaults.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfigFile {
    pub iterations: usize,
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    pub proposals_per_iteration: usize,
    pub rng_seed: u64,
}

impl Default for SaConfigFile {
    fn default() -> Self {
        SaConfig::default().into()
    }
}

impl From<SaConfig> for SaConfigFile {
    fn from(c: SaConfig) -> Self {
        SaConfigFile {
            iterations: c.iterations,
            initial_temperature: c.initial_temperature,
            cooling_factor: c.cooling_factor,
            proposals_per_iteration: c.proposals_per_iteration,
            rng_seed: c.rng_seed,
        }
    }
}

impl From<SaConfigFile> for SaConfig {
    fn from(f: SaConfigFile) -> Self {
        SaConfig {
            iterations: f.iterations,
            initial_temperature: f.initial_temperature,
            cooling_factor: f.cooling_factor,
            proposals_per_iteration: f.proposals_per_iteration,
            rng_seed: f.rng_seed,
        }
    }
}

/// Routing synthesis parameters as they appear in config files.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct RoutingGenFile {
    pub planes: usize,
    pub sats_per_plane: usize,
    #[serde(default = "default_prop_latency")]
    pub prop_latency_ms: [f64; 2],
    #[serde(default = "default_queue_envelope")]
    pub queue_envelope_ms: [f64; 2],
    #[serde(default)]
    pub src: usize,
    /// Defaults to the last node when absent.
    #[serde(default)]
    pub dst: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

pub fn default_prop_latency() -> [f64; 2] {
    [5.0, 25.0]
}

pub fn default_queue_envelope() -> [f64; 2] {
    [0.0, 10.0]
}

impl RoutingGenFile {
    pub fn to_params(&self) -> RoutingSynthParams {
        let n = self.planes * self.sats_per_plane;
        RoutingSynthParams {
            num_planes: self.planes,
            sats_per_plane: self.sats_per_plane,
            prop_latency_ms: (self.prop_latency_ms[0], self.prop_latency_ms[1]),
            queue_envelope_ms: (self.queue_envelope_ms[0], self.queue_envelope_ms[1]),
            src: self.src,
            dst: self.dst.unwrap_or(n.saturating_sub(1)),
            seed: self.seed,
        }
    }
}

/// Resource synthesis parameters as they appear in config files.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ResourceGenFile {
    pub sats: usize,
    pub slots: usize,
    #[serde(default = "default_at_density")]
    pub at_density: f64,
    #[serde(default = "default_gs_density")]
    pub gs_density: f64,
    #[serde(default = "default_n_at")]
    pub n_at: u32,
    #[serde(default = "default_n_gs")]
    pub n_gs: u32,
    #[serde(default = "default_slot_duration")]
    pub slot_duration_s: [f64; 2],
    #[serde(default = "default_sun_run")]
    pub sun_run_slots: usize,
    #[serde(default = "default_init_level")]
    pub init_battery: f64,
    #[serde(default = "default_init_level")]
    pub init_memory: f64,
    #[serde(default)]
    pub rates: Option<RatesFile>,
    #[serde(default)]
    pub seed: u64,
}

pub fn default_at_density() -> f64 {
    0.35
}

pub fn default_gs_density() -> f64 {
    0.25
}

pub fn default_n_at() -> u32 {
    3
}

pub fn default_n_gs() -> u32 {
    2
}

pub fn default_slot_duration() -> [f64; 2] {
    [60.0, 120.0]
}

pub fn default_sun_run() -> usize {
    4
}

pub fn default_init_level() -> f64 {
    0.5
}

impl ResourceGenFile {
    pub fn to_params(&self) -> ResourceSynthParams {
        ResourceSynthParams {
            n: self.sats,
            slots: self.slots,
            at_density: self.at_density,
            gs_density: self.gs_density,
            n_at: self.n_at,
            n_gs: self.n_gs,
            slot_duration_s: (self.slot_duration_s[0], self.slot_duration_s[1]),
            sun_run_slots: self.sun_run_slots,
            init_battery: self.init_battery,
            init_memory: self.init_memory,
            rates: self
                .rates
                .clone()
                .map(RateConfig::from)
                .unwrap_or_default(),
            seed: self.seed,
        }
    }
}

/// Scenario generation block of an experiment config, dispatched on `kind`.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(tag = "kind")]
pub enum ScenarioGen {
    #[serde(rename = "routing")]
    Routing(RoutingGenFile),
    #[serde(rename = "resources")]
    Resources(Box<ResourceGenFile>),
}

/// Declarative experiment description. A config file supersedes the
/// equivalent command-line flags; exactly one of `scenario_path` /
/// `scenario_generate` must be present.
#[derive(Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario_path: Option<std::path::PathBuf>,
    pub scenario_generate: Option<ScenarioGen>,
    pub seeds: Option<Vec<u64>>,
    pub replications: Option<usize>,
    pub failures: Option<Vec<usize>>,
    pub proportions: Option<Vec<f64>>,
    pub sa_iterations: Option<Vec<usize>>,
    pub rl_episodes: Option<Vec<usize>>,
    pub qrouting: Option<LearnerConfigFile>,
    pub ppo: Option<PpoConfigFile>,
    pub sa: Option<SaConfigFile>,
    pub out_dir: Option<std::path::PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.scenario_path, &self.scenario_generate) {
            (Some(_), Some(_)) => {
                bail!("config must set exactly one of scenario_path / scenario_generate, got both")
            }
            (None, None) => {
                bail!("config must set exactly one of scenario_path / scenario_generate, got neither")
            }
            _ => Ok(()),
        }
    }
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let text = read_file(path)?;
    let config: ExperimentConfig = parse_json(&text, path)?;
    config
        .validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// CSV trace writers
// ---------------------------------------------------------------------------

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(file))
}

/// Per-episode training trace: `episode,steps,total_reward,delivered`.
pub fn write_episode_trace_csv(path: &Path, stats: &[EpisodeStats]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["episode", "steps", "total_reward", "delivered"])?;
    for s in stats {
        w.write_record(&[
            s.episode.to_string(),
            s.steps.to_string(),
            format_f64(s.total_reward),
            u8::from(s.delivered).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Learning-curve export: `iteration,mean_reward,policy_loss,value_loss,entropy`.
pub fn write_reward_curve_csv(path: &Path, curve: &[TrainCurvePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "iteration",
        "mean_reward",
        "policy_loss",
        "value_loss",
        "entropy",
    ])?;
    for p in curve {
        w.write_record(&[
            p.update.to_string(),
            format_f64(p.mean_episode_reward),
            format_f64(p.policy_loss),
            format_f64(p.value_loss),
            format_f64(p.entropy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Annealing trace: `iteration,current_reward,best_reward,temperature`.
pub fn write_sa_trace_csv(path: &Path, trace: &[SaTracePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iteration", "current_reward", "best_reward", "temperature"])?;
    for p in trace {
        w.write_record(&[
            p.iteration.to_string(),
            format_f64(p.current_reward),
            format_f64(p.best_reward),
            format_f64(p.temperature),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One satellite-slot of a replayed schedule.
pub struct TrajectoryRow {
    pub t: usize,
    pub sat: usize,
    pub action: &'static str,
    pub battery: f64,
    pub memory: f64,
    pub reward: f64,
    pub flags: String,
}

/// Semicolon-joined violation tokens for trajectory rows.
pub fn flags_string(v: &ViolationFlags) -> String {
    let mut tokens = Vec::new();
    if v.battery_depleted {
        tokens.push("bat");
    }
    if v.memory_overflow {
        tokens.push("mem");
    }
    if v.contention_at {
        tokens.push("at");
    }
    if v.contention_gs {
        tokens.push("gs");
    }
    if v.invalid_action {
        tokens.push("inv");
    }
    tokens.join(";")
}

/// Step-level replay log: `t,sat,action,bat,mem,reward,flags`.
pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "sat", "action", "bat", "mem", "reward", "flags"])?;
    for r in rows {
        w.write_record(&[
            r.t.to_string(),
            r.sat.to_string(),
            r.action.to_string(),
            format_f64(r.battery),
            format_f64(r.memory),
            format_f64(r.reward),
            r.flags.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal form (Display already guarantees that),
/// normalized so whole numbers keep a `.0` suffix.
pub fn format_f64(x: f64) -> String {
    let mut buf = format!("{x}");
    if x.is_finite() && !buf.contains('.') && !buf.contains('e') {
        buf.push_str(".0");
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use constel_core::ppo::PolicyParams;
    use constel_core::scenario::{synthesize_resource_scenario, synthesize_routing_scenario};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::TempDir;

    fn routing_params() -> RoutingSynthParams {
        RoutingSynthParams {
            num_planes: 3,
            sats_per_plane: 4,
            prop_latency_ms: (5.0, 25.0),
            queue_envelope_ms: (0.0, 10.0),
            src: 0,
            dst: 11,
            seed: 7,
        }
    }

    fn resource_params() -> ResourceSynthParams {
        ResourceSynthParams {
            n: 3,
            slots: 12,
            at_density: 0.4,
            gs_density: 0.3,
            n_at: 2,
            n_gs: 2,
            slot_duration_s: (60.0, 120.0),
            sun_run_slots: 3,
            init_battery: 0.5,
            init_memory: 0.5,
            rates: RateConfig::default(),
            seed: 11,
        }
    }

    #[test]
    fn routing_scenario_round_trips_byte_identically() {
        let dir = TempDir::new().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let scenario = synthesize_routing_scenario(&routing_params()).unwrap();
        save_routing_scenario(&a, &scenario).unwrap();
        let loaded = load_routing_scenario(&a).unwrap();
        save_routing_scenario(&b, &loaded).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(loaded.n(), scenario.n());
        assert_eq!(loaded.src(), scenario.src());
        assert_eq!(loaded.dst(), scenario.dst());
    }

    #[test]
    fn resource_scenario_round_trips_byte_identically() {
        let dir = TempDir::new().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let mut params = resource_params();
        params.rates.sampling = Some(RateSampling {
            battery_downlink: Some((-3e-4, -1e-4)),
            ..RateSampling::default()
        });
        let scenario = synthesize_resource_scenario(&params).unwrap();
        save_resource_scenario(&a, &scenario).unwrap();
        let loaded = load_resource_scenario(&a).unwrap();
        save_resource_scenario(&b, &loaded).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(loaded.sun, scenario.sun);
        assert_eq!(
            loaded.rates.sampling.as_ref().unwrap().battery_downlink,
            Some((-3e-4, -1e-4))
        );
    }

    #[test]
    fn kind_dispatch_rejects_the_wrong_scenario_flavour() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.json");
        let scenario = synthesize_resource_scenario(&resource_params()).unwrap();
        save_resource_scenario(&path, &scenario).unwrap();
        let err = load_routing_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("resources"), "{err}");
    }

    #[test]
    fn missing_field_errors_name_the_field() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"kind":"routing","version":1,"n":2,"src":0,"dst":1,"rng_seed":0,
               "prop_latency_ms":[],"queue_bounds_ms":[]}"#,
        )
        .unwrap();
        let err = load_routing_scenario(&path).unwrap_err();
        assert!(format!("{err:#}").contains("edges"), "{err:#}");
    }

    #[test]
    fn inverted_queue_bounds_fail_validation() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"kind":"routing","version":1,"n":2,"src":0,"dst":1,"rng_seed":0,
               "edges":[[0,1],[1,0]],"prop_latency_ms":[5.0,5.0],
               "queue_bounds_ms":[[5.0,2.0],[0.0,1.0]]}"#,
        )
        .unwrap();
        let err = load_routing_scenario(&path).unwrap_err();
        assert!(format!("{err:#}").contains("queue"), "{err:#}");
    }

    #[test]
    fn sun_values_outside_binary_are_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.json");
        let scenario = synthesize_resource_scenario(&resource_params()).unwrap();
        save_resource_scenario(&path, &scenario).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["sun"][0][0] = serde_json::json!(2);
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let err = load_resource_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("sun[0][0]"), "{err}");
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.json");
        let scenario = synthesize_routing_scenario(&routing_params()).unwrap();
        save_routing_scenario(&path, &scenario).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["version"] = serde_json::json!(2);
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let err = load_routing_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn qtable_round_trips_exactly() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("q.json");
        let table = QTable::from_values(3, vec![0.0, 1.5, -2.25, 0.1, 0.0, 3.0, -0.5, 0.25, 9.0])
            .unwrap();
        save_qtable(&path, &table).unwrap();
        let loaded = load_qtable(&path).unwrap();
        assert_eq!(loaded.n(), 3);
        assert_eq!(loaded.values(), table.values());
    }

    #[test]
    fn qtable_length_mismatch_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("q.json");
        fs::write(&path, r#"{"n":3,"q":[0.0,1.0]}"#).unwrap();
        assert!(load_qtable(&path).is_err());
    }

    #[test]
    fn policy_round_trips_exactly() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.json");
        let scenario = synthesize_resource_scenario(&resource_params()).unwrap();
        let shape = NetShape::for_scenario(&scenario, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PolicyParams::init(shape, &mut rng);
        let config = PpoConfig {
            hidden_dim: 8,
            updates: 3,
            ..PpoConfig::default()
        };
        save_policy(&path, &params, &config).unwrap();
        let (loaded, loaded_config) = load_policy(&path).unwrap();
        assert_eq!(loaded.shape(), shape);
        assert_eq!(loaded.theta(), params.theta());
        assert_eq!(loaded_config.updates, 3);
        assert_eq!(loaded_config.hidden_dim, 8);
    }

    #[test]
    fn policy_dimension_mismatch_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.json");
        let scenario = synthesize_resource_scenario(&resource_params()).unwrap();
        let shape = NetShape::for_scenario(&scenario, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PolicyParams::init(shape, &mut rng);
        save_policy(&path, &params, &PpoConfig::default()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["layers"][0]["rows"] = serde_json::json!(7);
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let err = load_policy(&path).unwrap_err();
        assert!(err.to_string().contains("trunk1_w"), "{err}");
    }

    #[test]
    fn schedule_round_trips_and_rejects_unknown_actions() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("s.json");
        let schedule = Schedule::from_actions(vec![
            vec![SatAction::Nop, SatAction::Acquire, SatAction::Downlink],
            vec![
                SatAction::AcquireDownlink,
                SatAction::Nop,
                SatAction::Acquire,
            ],
        ])
        .unwrap();
        save_schedule(&path, &schedule).unwrap();
        let loaded = load_schedule(&path).unwrap();
        assert_eq!(loaded, schedule);

        fs::write(&path, r#"[["NOP","FIRE"]]"#).unwrap();
        let err = load_schedule(&path).unwrap_err();
        assert!(err.to_string().contains("FIRE"), "{err}");
        assert!(err.to_string().contains("slot 1"), "{err}");
    }

    #[test]
    fn experiment_config_requires_exactly_one_scenario_source() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"scenario_path":"a.json",
                "scenario_generate":{"kind":"routing","planes":3,"sats_per_plane":4}}"#,
        )
        .unwrap();
        let err = load_experiment_config(&path).unwrap_err();
        assert!(format!("{err:#}").contains("exactly one"), "{err:#}");

        fs::write(&path, r#"{"seeds":[1,2,3]}"#).unwrap();
        assert!(load_experiment_config(&path).is_err());

        fs::write(
            &path,
            r#"{"scenario_path":"a.json","seeds":[0,1],"sa":{"iterations":500}}"#,
        )
        .unwrap();
        let config = load_experiment_config(&path).unwrap();
        assert_eq!(config.seeds.as_deref(), Some(&[0, 1][..]));
        let sa: SaConfig = config.sa.unwrap().into();
        assert_eq!(sa.iterations, 500);
        // Unspecified fields take the library defaults.
        assert_eq!(sa.cooling_factor, SaConfig::default().cooling_factor);
    }

    #[test]
    fn csv_writers_emit_stable_headers_and_rows() {
        let dir = TempDir::new().unwrap();
        let ep = dir.path().join("ep.csv");
        write_episode_trace_csv(
            &ep,
            &[EpisodeStats {
                episode: 0,
                steps: 4,
                total_reward: -12.5,
                delivered: true,
            }],
        )
        .unwrap();
        let text = fs::read_to_string(&ep).unwrap();
        assert_eq!(text, "episode,steps,total_reward,delivered\n0,4,-12.5,1\n");

        let sa = dir.path().join("sa.csv");
        write_sa_trace_csv(
            &sa,
            &[SaTracePoint {
                iteration: 1,
                temperature: 47.5,
                current_reward: 10.0,
                best_reward: 12.0,
            }],
        )
        .unwrap();
        let text = fs::read_to_string(&sa).unwrap();
        assert_eq!(
            text,
            "iteration,current_reward,best_reward,temperature\n1,10.0,12.0,47.5\n"
        );

        let curve = dir.path().join("curve.csv");
        write_reward_curve_csv(
            &curve,
            &[TrainCurvePoint {
                update: 0,
                mean_episode_reward: 55.25,
                policy_loss: -0.01,
                value_loss: 0.5,
                entropy: 1.375,
            }],
        )
        .unwrap();
        let text = fs::read_to_string(&curve).unwrap();
        assert_eq!(
            text,
            "iteration,mean_reward,policy_loss,value_loss,entropy\n0,55.25,-0.01,0.5,1.375\n"
        );
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.0, -0.0, 1.0, -12.5, 0.1, 1e-7, 123456.789, -1e300] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_f64(1.0), "1.0");
        assert_eq!(format_f64(-3.0), "-3.0");
    }
}
