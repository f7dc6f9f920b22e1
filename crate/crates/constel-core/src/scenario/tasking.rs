//! Resource scenario: per-satellite, per-slot access and sunlight timelines,
//! rate constants, and initial battery/memory levels.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::util::uniform_in;

/// Optional per-step sampling envelopes for the six battery/memory rates.
/// A `Some((min, max))` entry makes that rate a fresh uniform draw every
/// step; `None` keeps the nominal constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateSampling {
    pub battery_background: Option<(f64, f64)>,
    pub battery_downlink: Option<(f64, f64)>,
    pub battery_sun: Option<(f64, f64)>,
    pub memory_telemetry: Option<(f64, f64)>,
    pub memory_downlink: Option<(f64, f64)>,
    pub memory_acquisition: Option<(f64, f64)>,
}

/// Rate constants of the resource dynamics, all expressed per second of slot
/// duration, plus the reward/penalty constants.
///
/// Sign conventions (validated): battery background and downlink drain
/// (`< 0`), sunlight charges (`> 0`); telemetry and acquisition fill memory
/// (`> 0`), downlink empties it (`< 0`). Rewards are per-second rates `> 0`;
/// penalties are nonnegative magnitudes subtracted from the reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub battery_background: f64,
    pub battery_downlink: f64,
    pub battery_sun: f64,
    pub memory_telemetry: f64,
    pub memory_downlink: f64,
    pub memory_acquisition: f64,
    pub reward_acquisition: f64,
    pub reward_downlink: f64,
    pub penalty_battery: f64,
    pub penalty_memory: f64,
    pub penalty_shared_gs: f64,
    pub penalty_shared_at: f64,
    pub penalty_invalid_action: f64,
    pub sampling: Option<RateSampling>,
}

impl Default for RateConfig {
    /// Calibration defaults: a full battery survives roughly 90 minutes of
    /// background drain with margin, and one pass can neither fill nor drain
    /// memory entirely.
    fn default() -> Self {
        RateConfig {
            battery_background: -1e-5,
            battery_downlink: -2e-4,
            battery_sun: 1e-4,
            memory_telemetry: 1e-5,
            memory_downlink: -5e-4,
            memory_acquisition: 3e-4,
            reward_acquisition: 1.0,
            reward_downlink: 2.0,
            penalty_battery: 100.0,
            penalty_memory: 100.0,
            penalty_shared_gs: 50.0,
            penalty_shared_at: 50.0,
            penalty_invalid_action: 200.0,
            sampling: None,
        }
    }
}

/// The six per-second rates with any sampling resolved to concrete values
/// for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledRates {
    pub battery_background: f64,
    pub battery_downlink: f64,
    pub battery_sun: f64,
    pub memory_telemetry: f64,
    pub memory_downlink: f64,
    pub memory_acquisition: f64,
}

impl RateConfig {
    /// Nominal rates, ignoring sampling envelopes.
    pub fn nominal(&self) -> SampledRates {
        SampledRates {
            battery_background: self.battery_background,
            battery_downlink: self.battery_downlink,
            battery_sun: self.battery_sun,
            memory_telemetry: self.memory_telemetry,
            memory_downlink: self.memory_downlink,
            memory_acquisition: self.memory_acquisition,
        }
    }

    /// Resolve rates for one step, drawing each sampled rate uniformly from
    /// its envelope in fixed field order. Without sampling envelopes this
    /// consumes no randomness and equals [`RateConfig::nominal`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledRates {
        let mut out = self.nominal();
        if let Some(s) = &self.sampling {
            let mut resolve = |nominal: &mut f64, bounds: &Option<(f64, f64)>| {
                if let Some((lo, hi)) = bounds {
                    *nominal = uniform_in(rng, *lo, *hi);
                }
            };
            resolve(&mut out.battery_background, &s.battery_background);
            resolve(&mut out.battery_downlink, &s.battery_downlink);
            resolve(&mut out.battery_sun, &s.battery_sun);
            resolve(&mut out.memory_telemetry, &s.memory_telemetry);
            resolve(&mut out.memory_downlink, &s.memory_downlink);
            resolve(&mut out.memory_acquisition, &s.memory_acquisition);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let signed: [(&str, f64, f64); 6] = [
            ("battery_background", self.battery_background, -1.0),
            ("battery_downlink", self.battery_downlink, -1.0),
            ("battery_sun", self.battery_sun, 1.0),
            ("memory_telemetry", self.memory_telemetry, 1.0),
            ("memory_downlink", self.memory_downlink, -1.0),
            ("memory_acquisition", self.memory_acquisition, 1.0),
        ];
        for (name, value, sign) in signed {
            if !value.is_finite() || value * sign <= 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "rate {name} must be finite and {} zero, got {value}",
                    if sign > 0.0 { "above" } else { "below" }
                )));
            }
        }
        for (name, value) in [
            ("reward_acquisition", self.reward_acquisition),
            ("reward_downlink", self.reward_downlink),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "rate {name} must be finite and > 0, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("penalty_battery", self.penalty_battery),
            ("penalty_memory", self.penalty_memory),
            ("penalty_shared_gs", self.penalty_shared_gs),
            ("penalty_shared_at", self.penalty_shared_at),
            ("penalty_invalid_action", self.penalty_invalid_action),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "penalty {name} must be finite and >= 0, got {value}"
                )));
            }
        }
        if let Some(s) = &self.sampling {
            type Envelope<'a> = (&'a str, f64, &'a Option<(f64, f64)>);
            let enveloped: [Envelope; 6] = [
                ("battery_background", self.battery_background, &s.battery_background),
                ("battery_downlink", self.battery_downlink, &s.battery_downlink),
                ("battery_sun", self.battery_sun, &s.battery_sun),
                ("memory_telemetry", self.memory_telemetry, &s.memory_telemetry),
                ("memory_downlink", self.memory_downlink, &s.memory_downlink),
                ("memory_acquisition", self.memory_acquisition, &s.memory_acquisition),
            ];
            for (name, nominal, bounds) in enveloped {
                if let Some((lo, hi)) = bounds {
                    let same_sign = lo.signum() == nominal.signum() && hi.signum() == nominal.signum();
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi && same_sign) {
                        return Err(Error::InvalidScenario(format!(
                            "sampling bounds for {name} must satisfy min <= max and share the nominal sign, got ({lo}, {hi})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A fully materialized scheduling problem: timelines, rates, and initial
/// resource levels for `n` satellites over `slots` variable-duration slots.
///
/// Access encoding: `at_access[sat][slot]` / `gs_access[sat][slot]` hold the
/// 1-based ID of the visible acquisition target / ground station, or 0 when
/// none is visible. The per-slot single-ID encoding enforces disjoint windows
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceScenario {
    pub n: usize,
    pub slots: usize,
    /// Slot durations in seconds, length `slots`.
    pub slot_duration_s: Vec<f64>,
    pub at_access: Vec<Vec<u32>>,
    pub gs_access: Vec<Vec<u32>>,
    pub sun: Vec<Vec<bool>>,
    /// Number of distinct acquisition targets / ground stations (IDs are
    /// `1..=n_at` / `1..=n_gs`).
    pub n_at: u32,
    pub n_gs: u32,
    pub rates: RateConfig,
    pub init_battery: Vec<f64>,
    pub init_memory: Vec<f64>,
    pub rng_seed: u64,
}

impl ResourceScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.slots == 0 {
            return Err(Error::InvalidScenario(format!(
                "need n >= 1 and slots >= 1, got {} x {}",
                self.n, self.slots
            )));
        }
        if self.slot_duration_s.len() != self.slots {
            return Err(Error::InvalidScenario(format!(
                "slot_duration_s has {} entries for {} slots",
                self.slot_duration_s.len(),
                self.slots
            )));
        }
        for (t, &tau) in self.slot_duration_s.iter().enumerate() {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "slot_duration_s[{t}] must be finite and > 0, got {tau}"
                )));
            }
        }
        let tables: [(&str, &Vec<Vec<u32>>, u32); 2] = [
            ("at_access", &self.at_access, self.n_at),
            ("gs_access", &self.gs_access, self.n_gs),
        ];
        for (name, table, max_id) in tables {
            if table.len() != self.n || table.iter().any(|row| row.len() != self.slots) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must be {} x {}",
                    self.n, self.slots
                )));
            }
            for (sat, row) in table.iter().enumerate() {
                for (slot, &id) in row.iter().enumerate() {
                    if id > max_id {
                        return Err(Error::InvalidScenario(format!(
                            "{name}[{sat}][{slot}] = {id} exceeds max id {max_id}"
                        )));
                    }
                }
            }
        }
        if self.sun.len() != self.n || self.sun.iter().any(|row| row.len() != self.slots) {
            return Err(Error::InvalidScenario(format!(
                "sun must be {} x {}",
                self.n, self.slots
            )));
        }
        for (name, levels) in [
            ("init_battery", &self.init_battery),
            ("init_memory", &self.init_memory),
        ] {
            if levels.len() != self.n {
                return Err(Error::InvalidScenario(format!(
                    "{name} must have {} entries, got {}",
                    self.n,
                    levels.len()
                )));
            }
            if let Some(&bad) = levels.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
                return Err(Error::InvalidScenario(format!(
                    "{name} entries must lie in [0,1], got {bad}"
                )));
            }
        }
        self.rates.validate()
    }
}

/// Parameters for [`synthesize_resource_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSynthParams {
    pub n: usize,
    pub slots: usize,
    /// Per-cell probability of an acquisition-target / ground-station window.
    pub at_density: f64,
    pub gs_density: f64,
    /// Asset counts; window IDs are drawn uniformly from `1..=n_at` etc.
    pub n_at: u32,
    pub n_gs: u32,
    /// Slot duration envelope in seconds.
    pub slot_duration_s: (f64, f64),
    /// Length of each day/night run in slots; each satellite gets a random
    /// phase offset.
    pub sun_run_slots: usize,
    pub init_battery: f64,
    pub init_memory: f64,
    pub rates: RateConfig,
    pub seed: u64,
}

impl ResourceSynthParams {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.slots == 0 {
            return Err(Error::InvalidScenario(format!(
                "need n >= 1 and slots >= 1, got {} x {}",
                self.n, self.slots
            )));
        }
        for (name, d) in [("at_density", self.at_density), ("gs_density", self.gs_density)] {
            if !(d.is_finite() && (0.0..=1.0).contains(&d)) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must lie in [0,1], got {d}"
                )));
            }
        }
        if self.n_at == 0 || self.n_gs == 0 {
            return Err(Error::InvalidScenario(format!(
                "asset counts must be >= 1, got n_at={}, n_gs={}",
                self.n_at, self.n_gs
            )));
        }
        let (lo, hi) = self.slot_duration_s;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(Error::InvalidScenario(format!(
                "slot_duration_s must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        if self.sun_run_slots == 0 {
            return Err(Error::InvalidScenario(
                "sun_run_slots must be >= 1".into(),
            ));
        }
        for (name, v) in [("init_battery", self.init_battery), ("init_memory", self.init_memory)] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must lie in [0,1], got {v}"
                )));
            }
        }
        self.rates.validate()
    }
}

/// Synthesize a resource scenario from densities and envelopes.
///
/// Draw order is fixed: slot durations first; then per satellite (ascending)
/// a sunlight phase offset, then per slot (ascending) the AT event and ID,
/// then the GS event and ID. Sunlight alternates in runs of `sun_run_slots`
/// starting from each satellite's phase.
pub fn synthesize_resource_scenario(params: &ResourceSynthParams) -> Result<ResourceScenario> {
    params.validate()?;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(params.seed);
    let (dlo, dhi) = params.slot_duration_s;
    let slot_duration_s: Vec<f64> = (0..params.slots)
        .map(|_| uniform_in(&mut rng, dlo, dhi))
        .collect();
    let mut at_access = Vec::with_capacity(params.n);
    let mut gs_access = Vec::with_capacity(params.n);
    let mut sun = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let phase = rng.gen_range(0..2 * params.sun_run_slots);
        let mut at_row = Vec::with_capacity(params.slots);
        let mut gs_row = Vec::with_capacity(params.slots);
        let mut sun_row = Vec::with_capacity(params.slots);
        for slot in 0..params.slots {
            sun_row.push(((slot + phase) / params.sun_run_slots).is_multiple_of(2));
            let at_hit = rng.gen::<f64>() < params.at_density;
            at_row.push(if at_hit { rng.gen_range(1..=params.n_at) } else { 0 });
            let gs_hit = rng.gen::<f64>() < params.gs_density;
            gs_row.push(if gs_hit { rng.gen_range(1..=params.n_gs) } else { 0 });
        }
        at_access.push(at_row);
        gs_access.push(gs_row);
        sun.push(sun_row);
    }
    let scenario = ResourceScenario {
        n: params.n,
        slots: params.slots,
        slot_duration_s,
        at_access,
        gs_access,
        sun,
        n_at: params.n_at,
        n_gs: params.n_gs,
        rates: params.rates.clone(),
        init_battery: alloc::vec![params.init_battery; params.n],
        init_memory: alloc::vec![params.init_memory; params.n],
        rng_seed: params.seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
