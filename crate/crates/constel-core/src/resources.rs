//! Multi-satellite resource-management environment: observation model,
//! action feasibility masking, battery/memory transition dynamics, and
//! reward computation with first-come-first-served contention.
//!
//! Time advances in variable-duration slots. Per slot each satellite picks
//! one of four actions; acquiring fills memory, downlinking drains battery
//! and memory and earns the larger reward. Resource limits are *not* masked
//! — breaching them is penalized on pre-clamp values — while access-window
//! feasibility *is* masked, and actions violating it score a flat penalty.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::{ResourceScenario, SampledRates};
use crate::util::clamp01;

/// Per-satellite, per-slot action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SatAction {
    /// Idle.
    Nop,
    /// Acquire payload data from the visible target (`Q` on the wire).
    Acquire,
    /// Downlink memory to the visible ground station (`D` on the wire).
    Downlink,
    /// Both in one slot (`QD` on the wire).
    AcquireDownlink,
}

impl SatAction {
    pub const ALL: [SatAction; 4] = [
        SatAction::Nop,
        SatAction::Acquire,
        SatAction::Downlink,
        SatAction::AcquireDownlink,
    ];

    /// Stable index used for logits, masks, and serialization order.
    pub fn index(self) -> usize {
        match self {
            SatAction::Nop => 0,
            SatAction::Acquire => 1,
            SatAction::Downlink => 2,
            SatAction::AcquireDownlink => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<SatAction> {
        SatAction::ALL.get(index).copied()
    }

    /// Wire name, as used in schedule files and trajectory logs.
    pub fn name(self) -> &'static str {
        match self {
            SatAction::Nop => "NOP",
            SatAction::Acquire => "Q",
            SatAction::Downlink => "D",
            SatAction::AcquireDownlink => "QD",
        }
    }

    pub fn from_name(name: &str) -> Option<SatAction> {
        SatAction::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn does_acquire(self) -> bool {
        matches!(self, SatAction::Acquire | SatAction::AcquireDownlink)
    }

    pub fn does_downlink(self) -> bool {
        matches!(self, SatAction::Downlink | SatAction::AcquireDownlink)
    }
}

/// Bit set over the four actions, in [`SatAction::index`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionMask(u8);

impl ActionMask {
    pub const NOP_ONLY: ActionMask = ActionMask(1);

    pub fn from_actions(actions: &[SatAction]) -> ActionMask {
        let mut bits = 0u8;
        for a in actions {
            bits |= 1 << a.index();
        }
        ActionMask(bits)
    }

    pub fn allows(self, action: SatAction) -> bool {
        self.0 & (1 << action.index()) != 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Feasible actions in index order.
    pub fn actions(self) -> impl Iterator<Item = SatAction> {
        SatAction::ALL.into_iter().filter(move |a| self.allows(*a))
    }
}

/// What one satellite sees in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatObservation {
    /// Battery fraction in [0, 1].
    pub battery: f64,
    /// Memory fraction in [0, 1].
    pub memory: f64,
    /// Visible acquisition-target ID, 0 when none.
    pub at_opportunity: u32,
    /// Visible ground-station ID, 0 when none.
    pub gs_opportunity: u32,
    pub sunlit: bool,
}

/// Feasibility mask: access windows gate tasks, resource levels never do
/// (breaches are penalized instead). NOP is always feasible.
pub fn feasible_mask(obs: &SatObservation) -> ActionMask {
    let mut bits = 1u8; // NOP
    if obs.at_opportunity != 0 {
        bits |= 1 << SatAction::Acquire.index();
    }
    if obs.gs_opportunity != 0 {
        bits |= 1 << SatAction::Downlink.index();
    }
    if obs.at_opportunity != 0 && obs.gs_opportunity != 0 {
        bits |= 1 << SatAction::AcquireDownlink.index();
    }
    ActionMask(bits)
}

/// Joint state of the constellation at one slot. `slot == scenario.slots`
/// marks the terminal state (zero duration, no access, final resources).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationState {
    pub slot: usize,
    pub slot_duration_s: f64,
    pub sats: Vec<SatObservation>,
}

/// Post-transition resource levels, with the pre-clamp values retained for
/// penalty assessment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionResult {
    pub battery: f64,
    pub memory: f64,
    pub pre_clamp_battery: f64,
    pub pre_clamp_memory: f64,
}

/// Core dynamics with explicit task indicators (`chi_aq`, `chi_dl`), used
/// directly by the environment after contention may have suppressed a task.
fn transition_with_indicators(
    obs: &SatObservation,
    chi_aq: bool,
    chi_dl: bool,
    tau_s: f64,
    rates: &SampledRates,
) -> TransitionResult {
    let chi_aq = chi_aq as u8 as f64;
    let chi_dl = chi_dl as u8 as f64;
    let sun = obs.sunlit as u8 as f64;
    let pre_clamp_battery = obs.battery
        + tau_s * (rates.battery_background + chi_dl * rates.battery_downlink + sun * rates.battery_sun);
    let pre_clamp_memory = obs.memory
        + tau_s
            * (rates.memory_telemetry + chi_dl * rates.memory_downlink + chi_aq * rates.memory_acquisition);
    TransitionResult {
        battery: clamp01(pre_clamp_battery),
        memory: clamp01(pre_clamp_memory),
        pre_clamp_battery,
        pre_clamp_memory,
    }
}

/// Single-satellite resource transition for a *feasible* action over a slot
/// of `tau_s` seconds. Task indicators derive from the action and the
/// observation's access flags; resource levels clamp to [0, 1].
pub fn transition(
    obs: &SatObservation,
    action: SatAction,
    tau_s: f64,
    rates: &SampledRates,
) -> Result<TransitionResult> {
    if !feasible_mask(obs).allows(action) {
        return Err(Error::InfeasibleAction(format!(
            "{} with at={}, gs={}",
            action.name(),
            obs.at_opportunity,
            obs.gs_opportunity
        )));
    }
    let chi_aq = action.does_acquire() && obs.at_opportunity != 0;
    let chi_dl = action.does_downlink() && obs.gs_opportunity != 0;
    Ok(transition_with_indicators(obs, chi_aq, chi_dl, tau_s, rates))
}

/// Outcome of contention resolution for one satellite: which halves of its
/// action take effect, and what went wrong.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EffectFlags {
    /// Acquisition executes this slot.
    pub acquire: bool,
    /// Downlink executes this slot.
    pub downlink: bool,
    /// Lost the acquisition target to a lower-ID satellite.
    pub contention_at: bool,
    /// Lost the ground station to a lower-ID satellite.
    pub contention_gs: bool,
    /// Action outside the feasibility mask; no task executes.
    pub infeasible: bool,
}

/// First-come-first-served asset claims in ascending satellite ID.
/// A contested half of a QD is suppressed while the uncontested half still
/// proceeds. Infeasible actions claim nothing.
pub fn resolve_contention(joint: &[SatAction], state: &ConstellationState) -> Vec<EffectFlags> {
    let mut claimed_at = alloc::collections::BTreeSet::new();
    let mut claimed_gs = alloc::collections::BTreeSet::new();
    let mut flags = Vec::with_capacity(joint.len());
    for (sat, (&action, obs)) in joint.iter().zip(&state.sats).enumerate() {
        let _ = sat;
        let mut f = EffectFlags::default();
        if !feasible_mask(obs).allows(action) {
            f.infeasible = true;
            flags.push(f);
            continue;
        }
        if action.does_acquire() && obs.at_opportunity != 0 {
            if claimed_at.insert(obs.at_opportunity) {
                f.acquire = true;
            } else {
                f.contention_at = true;
            }
        }
        if action.does_downlink() && obs.gs_opportunity != 0 {
            if claimed_gs.insert(obs.gs_opportunity) {
                f.downlink = true;
            } else {
                f.contention_gs = true;
            }
        }
        flags.push(f);
    }
    flags
}

/// Per-satellite reward. Infeasible actions score a flat
/// `-penalty_invalid_action`; feasible ones earn per-second task rewards for
/// the halves that executed, minus limit penalties assessed on pre-clamp
/// values and contention penalties.
pub fn reward_sat(
    obs: &SatObservation,
    action: SatAction,
    tau_s: f64,
    pre_clamp_battery: f64,
    pre_clamp_memory: f64,
    flags: &EffectFlags,
    rates: &crate::scenario::RateConfig,
) -> f64 {
    if !feasible_mask(obs).allows(action) {
        return -rates.penalty_invalid_action;
    }
    let mut reward = 0.0;
    if flags.acquire {
        reward += tau_s * rates.reward_acquisition;
    }
    if flags.downlink {
        reward += tau_s * rates.reward_downlink;
    }
    if pre_clamp_battery < 0.0 {
        reward -= rates.penalty_battery;
    }
    if pre_clamp_memory > 1.0 {
        reward -= rates.penalty_memory;
    }
    if flags.contention_gs {
        reward -= rates.penalty_shared_gs;
    }
    if flags.contention_at {
        reward -= rates.penalty_shared_at;
    }
    reward
}

/// Per-satellite incident flags recorded in the step outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViolationFlags {
    pub battery_depleted: bool,
    pub memory_overflow: bool,
    pub contention_gs: bool,
    pub contention_at: bool,
    pub invalid_action: bool,
}

/// Result of advancing the constellation by one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: ConstellationState,
    pub per_sat_reward: Vec<f64>,
    pub total_reward: f64,
    pub done: bool,
    pub violations: Vec<ViolationFlags>,
}

fn observation(scenario: &ResourceScenario, sat: usize, slot: usize, battery: f64, memory: f64) -> SatObservation {
    SatObservation {
        battery,
        memory,
        at_opportunity: scenario.at_access[sat][slot],
        gs_opportunity: scenario.gs_access[sat][slot],
        sunlit: scenario.sun[sat][slot],
    }
}

/// Initial state: slot 0 access/sun with the scenario's initial resources.
pub fn env_reset(scenario: &ResourceScenario) -> ConstellationState {
    let sats = (0..scenario.n)
        .map(|sat| observation(scenario, sat, 0, scenario.init_battery[sat], scenario.init_memory[sat]))
        .collect();
    ConstellationState {
        slot: 0,
        slot_duration_s: scenario.slot_duration_s[0],
        sats,
    }
}

/// Advance one slot. Contention is resolved FCFS, every satellite's
/// transition applies with its surviving task indicators (infeasible
/// actions degrade to the NOP transition), rewards are computed per
/// satellite and summed. Pass `rates_rng` to draw any configured stochastic
/// rates once for the step; `None` replays nominal rates deterministically.
pub fn env_step(
    scenario: &ResourceScenario,
    state: &ConstellationState,
    joint: &[SatAction],
    rates_rng: Option<&mut ChaCha8Rng>,
) -> Result<StepOutcome> {
    if state.slot >= scenario.slots {
        return Err(Error::EpisodeDone);
    }
    if joint.len() != scenario.n {
        return Err(Error::InvalidArgument(format!(
            "joint action has {} entries for {} satellites",
            joint.len(),
            scenario.n
        )));
    }
    let rates = match rates_rng {
        Some(rng) => scenario.rates.sample(rng),
        None => scenario.rates.nominal(),
    };
    let tau_s = state.slot_duration_s;
    let effects = resolve_contention(joint, state);
    let next_slot = state.slot + 1;
    let done = next_slot == scenario.slots;
    let mut per_sat_reward = Vec::with_capacity(scenario.n);
    let mut violations = Vec::with_capacity(scenario.n);
    let mut next_sats = Vec::with_capacity(scenario.n);
    for (sat, (obs, (&action, flags))) in state
        .sats
        .iter()
        .zip(joint.iter().zip(&effects))
        .enumerate()
    {
        let result = transition_with_indicators(obs, flags.acquire, flags.downlink, tau_s, &rates);
        per_sat_reward.push(reward_sat(
            obs,
            action,
            tau_s,
            result.pre_clamp_battery,
            result.pre_clamp_memory,
            flags,
            &scenario.rates,
        ));
        violations.push(ViolationFlags {
            battery_depleted: result.pre_clamp_battery < 0.0,
            memory_overflow: result.pre_clamp_memory > 1.0,
            contention_gs: flags.contention_gs,
            contention_at: flags.contention_at,
            invalid_action: flags.infeasible,
        });
        next_sats.push(if done {
            SatObservation {
                battery: result.battery,
                memory: result.memory,
                at_opportunity: 0,
                gs_opportunity: 0,
                sunlit: false,
            }
        } else {
            observation(scenario, sat, next_slot, result.battery, result.memory)
        });
    }
    let next_state = ConstellationState {
        slot: next_slot,
        slot_duration_s: if done {
            0.0
        } else {
            scenario.slot_duration_s[next_slot]
        },
        sats: next_sats,
    };
    let total_reward = per_sat_reward.iter().sum();
    Ok(StepOutcome {
        next_state,
        per_sat_reward,
        total_reward,
        done,
        violations,
    })
}

/// Stateful wrapper over [`env_step`] owning the current state and,
/// optionally, the stochastic-rate stream.
#[derive(Debug)]
pub struct ResourceEnv<'s> {
    scenario: &'s ResourceScenario,
    state: ConstellationState,
    rates_rng: Option<ChaCha8Rng>,
}

impl<'s> ResourceEnv<'s> {
    /// Deterministic environment: rates are always nominal.
    pub fn new(scenario: &'s ResourceScenario) -> ResourceEnv<'s> {
        ResourceEnv {
            scenario,
            state: env_reset(scenario),
            rates_rng: None,
        }
    }

    /// Environment drawing any configured stochastic rates from a stream
    /// seeded here. The stream is *not* rewound by [`ResourceEnv::reset`],
    /// so consecutive episodes see fresh draws while the whole sequence
    /// stays reproducible.
    pub fn with_stochastic_rates(scenario: &'s ResourceScenario, seed: u64) -> ResourceEnv<'s> {
        ResourceEnv {
            scenario,
            state: env_reset(scenario),
            rates_rng: Some(<ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)),
        }
    }

    pub fn scenario(&self) -> &'s ResourceScenario {
        self.scenario
    }

    pub fn state(&self) -> &ConstellationState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.slot >= self.scenario.slots
    }

    pub fn reset(&mut self) -> &ConstellationState {
        self.state = env_reset(self.scenario);
        &self.state
    }

    pub fn step(&mut self, joint: &[SatAction]) -> Result<StepOutcome> {
        let outcome = env_step(self.scenario, &self.state, joint, self.rates_rng.as_mut())?;
        self.state = outcome.next_state.clone();
        Ok(outcome)
    }
}

/// A complete action table, `[sat][slot]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    actions: Vec<Vec<SatAction>>,
}

impl Schedule {
    /// Build from rows; must be rectangular and non-empty in both dimensions.
    pub fn from_actions(actions: Vec<Vec<SatAction>>) -> Result<Schedule> {
        let slots = actions.first().map(|r| r.len()).unwrap_or(0);
        if actions.is_empty() || slots == 0 {
            return Err(Error::InvalidArgument(
                "schedule must have at least one satellite and one slot".into(),
            ));
        }
        if actions.iter().any(|r| r.len() != slots) {
            return Err(Error::InvalidArgument(
                "schedule rows must all have the same slot count".into(),
            ));
        }
        Ok(Schedule { actions })
    }

    pub fn all_nop(n_sats: usize, slots: usize) -> Schedule {
        Schedule {
            actions: alloc::vec![alloc::vec![SatAction::Nop; slots]; n_sats],
        }
    }

    pub fn n_sats(&self) -> usize {
        self.actions.len()
    }

    pub fn slots(&self) -> usize {
        self.actions[0].len()
    }

    pub fn get(&self, sat: usize, slot: usize) -> SatAction {
        self.actions[sat][slot]
    }

    pub fn set(&mut self, sat: usize, slot: usize, action: SatAction) {
        self.actions[sat][slot] = action;
    }

    pub fn rows(&self) -> &[Vec<SatAction>] {
        &self.actions
    }

    /// Joint action for one slot.
    pub fn joint_at(&self, slot: usize) -> Vec<SatAction> {
        self.actions.iter().map(|row| row[slot]).collect()
    }

    /// First (sat, slot) whose action falls outside the feasibility mask,
    /// if any. Masks depend only on the scenario's access tables, so this
    /// needs no simulation.
    pub fn mask_violation(&self, scenario: &ResourceScenario) -> Option<(usize, usize)> {
        for sat in 0..self.n_sats() {
            for slot in 0..self.slots() {
                let obs = observation(scenario, sat, slot, 1.0, 0.0);
                if !feasible_mask(&obs).allows(self.get(sat, slot)) {
                    return Some((sat, slot));
                }
            }
        }
        None
    }

    /// Shape compatibility with a scenario.
    pub fn matches_shape(&self, scenario: &ResourceScenario) -> bool {
        self.n_sats() == scenario.n && self.slots() == scenario.slots
    }
}

#[cfg(test)]
pub(crate) mod testenv {
    //! Hand-built scenarios for environment tests.
    use crate::scenario::{RateConfig, ResourceScenario};

    /// Scenario with explicit access tables and uniform slot duration.
    pub fn scenario_with(
        at: Vec<Vec<u32>>,
        gs: Vec<Vec<u32>>,
        sun: Vec<Vec<bool>>,
        tau_s: f64,
        rates: RateConfig,
    ) -> ResourceScenario {
        let n = at.len();
        let slots = at[0].len();
        ResourceScenario {
            n,
            slots,
            slot_duration_s: alloc::vec![tau_s; slots],
            at_access: at,
            gs_access: gs,
            sun,
            n_at: 9,
            n_gs: 9,
            rates,
            init_battery: alloc::vec![0.5; n],
            init_memory: alloc::vec![0.5; n],
            rng_seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RateConfig, ResourceSynthParams};
    use proptest::prelude::*;
    use testenv::scenario_with;

    fn obs(battery: f64, memory: f64, at: u32, gs: u32, sunlit: bool) -> SatObservation {
        SatObservation {
            battery,
            memory,
            at_opportunity: at,
            gs_opportunity: gs,
            sunlit,
        }
    }

    fn zero_rates() -> RateConfig {
        // Deliberately violates the sign conventions; fine for direct
        // transition tests, which do not validate.
        RateConfig {
            battery_background: 0.0,
            battery_downlink: 0.0,
            battery_sun: 0.0,
            memory_telemetry: 0.0,
            memory_downlink: 0.0,
            memory_acquisition: 0.0,
            ..RateConfig::default()
        }
    }

    #[test]
    fn action_wire_names_round_trip() {
        for a in SatAction::ALL {
            assert_eq!(SatAction::from_name(a.name()), Some(a));
            assert_eq!(SatAction::from_index(a.index()), Some(a));
        }
        assert_eq!(SatAction::from_name("X"), None);
        assert_eq!(SatAction::from_index(4), None);
    }

    #[test]
    fn feasible_mask_examples() {
        let m = feasible_mask(&obs(0.5, 0.5, 0, 2, false));
        assert_eq!(
            m.actions().collect::<Vec<_>>(),
            vec![SatAction::Nop, SatAction::Downlink]
        );
        let m = feasible_mask(&obs(0.5, 0.5, 1, 1, false));
        assert_eq!(m.count(), 4);
        let m = feasible_mask(&obs(0.5, 0.5, 0, 0, true));
        assert_eq!(m, ActionMask::NOP_ONLY);
        // Resource levels never gate feasibility.
        let m = feasible_mask(&obs(0.0, 1.0, 1, 1, false));
        assert_eq!(m.count(), 4);
    }

    #[test]
    fn transition_hand_values() {
        let rates = RateConfig::default().nominal();
        let before = obs(0.5, 0.5, 0, 1, true);
        let r = transition(&before, SatAction::Downlink, 60.0, &rates).unwrap();
        assert!((r.pre_clamp_battery - 0.4934).abs() < 1e-12);
        assert!((r.pre_clamp_memory - 0.4706).abs() < 1e-12);
        assert_eq!(r.battery, r.pre_clamp_battery);
        assert_eq!(r.memory, r.pre_clamp_memory);
    }

    #[test]
    fn transition_nop_with_zero_rates_is_identity() {
        let rates = zero_rates().nominal();
        let before = obs(0.37, 0.91, 0, 0, false);
        let r = transition(&before, SatAction::Nop, 60.0, &rates).unwrap();
        assert_eq!(r.battery, 0.37);
        assert_eq!(r.memory, 0.91);
    }

    #[test]
    fn transition_clamps_and_reports_pre_clamp() {
        let mut rates = RateConfig::default();
        rates.battery_downlink = -0.5; // drains far past zero in one slot
        let before = obs(0.1, 0.9, 0, 1, false);
        let r = transition(&before, SatAction::Downlink, 60.0, &rates.nominal()).unwrap();
        assert!(r.pre_clamp_battery < 0.0);
        assert_eq!(r.battery, 0.0);
        let mut rates = RateConfig::default();
        rates.memory_acquisition = 0.5;
        let before = obs(0.9, 0.9, 2, 0, true);
        let r = transition(&before, SatAction::Acquire, 60.0, &rates.nominal()).unwrap();
        assert!(r.pre_clamp_memory > 1.0);
        assert_eq!(r.memory, 1.0);
    }

    #[test]
    fn transition_rejects_infeasible_action() {
        let rates = RateConfig::default().nominal();
        let err = transition(&obs(0.5, 0.5, 0, 0, false), SatAction::Acquire, 60.0, &rates);
        assert!(matches!(err, Err(Error::InfeasibleAction(_))));
    }

    proptest! {
        #[test]
        fn transition_sign_effects(
            battery in 0.3f64..0.7,
            memory in 0.3f64..0.7,
            sunlit in proptest::bool::ANY,
            tau in 30.0f64..120.0,
        ) {
            let rates = RateConfig::default().nominal();
            let base = obs(battery, memory, 1, 1, sunlit);
            let nop = transition(&base, SatAction::Nop, tau, &rates).unwrap();
            let dl = transition(&base, SatAction::Downlink, tau, &rates).unwrap();
            let aq = transition(&base, SatAction::Acquire, tau, &rates).unwrap();
            // Mid-range levels with default rates never clamp at these taus.
            prop_assert!(dl.battery < nop.battery);
            prop_assert!(dl.memory < nop.memory);
            prop_assert!(aq.memory > nop.memory);
            let dark = transition(&obs(battery, memory, 1, 1, false), SatAction::Nop, tau, &rates).unwrap();
            let lit = transition(&obs(battery, memory, 1, 1, true), SatAction::Nop, tau, &rates).unwrap();
            prop_assert!(lit.battery > dark.battery);
        }
    }

    fn two_sat_gs_state() -> (ResourceScenario, ConstellationState) {
        let scenario = scenario_with(
            alloc::vec![alloc::vec![0], alloc::vec![0]],
            alloc::vec![alloc::vec![1], alloc::vec![1]],
            alloc::vec![alloc::vec![false], alloc::vec![false]],
            60.0,
            RateConfig::default(),
        );
        let state = env_reset(&scenario);
        (scenario, state)
    }

    #[test]
    fn contention_fcfs_same_gs() {
        let (_, state) = two_sat_gs_state();
        let flags = resolve_contention(&[SatAction::Downlink, SatAction::Downlink], &state);
        assert!(flags[0].downlink && !flags[0].contention_gs);
        assert!(!flags[1].downlink && flags[1].contention_gs);
    }

    #[test]
    fn contention_disjoint_assets_no_penalty() {
        let scenario = scenario_with(
            alloc::vec![alloc::vec![0], alloc::vec![0]],
            alloc::vec![alloc::vec![1], alloc::vec![2]],
            alloc::vec![alloc::vec![false], alloc::vec![false]],
            60.0,
            RateConfig::default(),
        );
        let state = env_reset(&scenario);
        let flags = resolve_contention(&[SatAction::Downlink, SatAction::Downlink], &state);
        assert!(flags[0].downlink && flags[1].downlink);
        assert!(!flags[0].contention_gs && !flags[1].contention_gs);
    }

    #[test]
    fn contention_spares_uncontested_half_of_qd() {
        let scenario = scenario_with(
            alloc::vec![alloc::vec![0], alloc::vec![3]],
            alloc::vec![alloc::vec![1], alloc::vec![1]],
            alloc::vec![alloc::vec![false], alloc::vec![false]],
            60.0,
            RateConfig::default(),
        );
        let state = env_reset(&scenario);
        let flags = resolve_contention(&[SatAction::Downlink, SatAction::AcquireDownlink], &state);
        assert!(flags[1].acquire, "acquisition half must survive");
        assert!(flags[1].contention_gs && !flags[1].downlink);
    }

    #[test]
    fn contention_ignores_infeasible_claims() {
        let (_, state) = two_sat_gs_state();
        // Sat 0 requests Q with no AT access: infeasible, claims nothing,
        // so sat 1's downlink is uncontested.
        let flags = resolve_contention(&[SatAction::Acquire, SatAction::Downlink], &state);
        assert!(flags[0].infeasible);
        assert!(flags[1].downlink && !flags[1].contention_gs);
    }

    #[test]
    fn reward_hand_values() {
        let rates = RateConfig::default();
        let both = obs(0.5, 0.5, 1, 1, false);
        let executed = EffectFlags {
            acquire: true,
            downlink: true,
            ..EffectFlags::default()
        };
        assert_eq!(
            reward_sat(&both, SatAction::AcquireDownlink, 60.0, 0.4, 0.6, &executed, &rates),
            180.0
        );
        assert_eq!(
            reward_sat(&both, SatAction::Nop, 60.0, 0.5, 0.5, &EffectFlags::default(), &rates),
            0.0
        );
        let dl_only = EffectFlags {
            downlink: true,
            ..EffectFlags::default()
        };
        let gs_only = obs(0.5, 0.5, 0, 1, false);
        assert_eq!(
            reward_sat(&gs_only, SatAction::Downlink, 60.0, -0.01, 0.5, &dl_only, &rates),
            20.0
        );
    }

    #[test]
    fn reward_infeasible_is_flat_penalty() {
        let rates = RateConfig::default();
        let no_access = obs(0.5, 0.5, 0, 0, false);
        for action in [SatAction::Acquire, SatAction::Downlink, SatAction::AcquireDownlink] {
            // Even with violated pre-clamp levels the infeasible branch
            // returns exactly the flat penalty.
            assert_eq!(
                reward_sat(&no_access, action, 60.0, -5.0, 7.0, &EffectFlags { infeasible: true, ..EffectFlags::default() }, &rates),
                -200.0
            );
        }
    }

    #[test]
    fn env_step_contention_composition() {
        let (scenario, state) = two_sat_gs_state();
        let outcome = env_step(
            &scenario,
            &state,
            &[SatAction::Downlink, SatAction::Downlink],
            None,
        )
        .unwrap();
        assert_eq!(outcome.per_sat_reward, vec![120.0, -50.0]);
        assert_eq!(outcome.total_reward, 70.0);
        assert!(outcome.violations[1].contention_gs);
        assert!(!outcome.violations[0].contention_gs);
        // Loser's downlink is suppressed: its memory follows the NOP drift.
        let loser = &outcome.next_state.sats[1];
        let expected = 0.5 + 60.0 * scenario.rates.memory_telemetry;
        assert!((loser.memory - expected).abs() < 1e-15);
        assert!(outcome.done); // single-slot scenario
    }

    #[test]
    fn env_step_infeasible_action_degrades_to_nop() {
        let (scenario, state) = two_sat_gs_state();
        let outcome = env_step(&scenario, &state, &[SatAction::Acquire, SatAction::Nop], None).unwrap();
        assert_eq!(outcome.per_sat_reward[0], -200.0);
        assert!(outcome.violations[0].invalid_action);
        let nop_twin = env_step(&scenario, &state, &[SatAction::Nop, SatAction::Nop], None).unwrap();
        assert_eq!(
            outcome.next_state.sats[0].battery,
            nop_twin.next_state.sats[0].battery
        );
        assert_eq!(
            outcome.next_state.sats[0].memory,
            nop_twin.next_state.sats[0].memory
        );
    }

    #[test]
    fn env_reset_and_horizon_contract() {
        let scenario = crate::scenario::synthesize_resource_scenario(&ResourceSynthParams {
            n: 3,
            slots: 5,
            at_density: 0.5,
            gs_density: 0.5,
            n_at: 2,
            n_gs: 2,
            slot_duration_s: (60.0, 120.0),
            sun_run_slots: 2,
            init_battery: 1.0,
            init_memory: 0.0,
            rates: RateConfig::default(),
            seed: 3,
        })
        .unwrap();
        let state = env_reset(&scenario);
        assert_eq!(state.slot, 0);
        assert_eq!(state.slot_duration_s, scenario.slot_duration_s[0]);
        assert!(state.sats.iter().all(|s| s.battery == 1.0 && s.memory == 0.0));
        assert_eq!(env_reset(&scenario), state);
        let mut env = ResourceEnv::new(&scenario);
        let nop = alloc::vec![SatAction::Nop; 3];
        for step in 0..5 {
            assert!(!env.is_done(), "premature done at step {step}");
            let outcome = env.step(&nop).unwrap();
            assert_eq!(outcome.done, step == 4);
        }
        assert!(env.is_done());
        assert!(matches!(env.step(&nop), Err(Error::EpisodeDone)));
        env.reset();
        assert_eq!(env.state().slot, 0);
    }

    #[test]
    fn opportunity_free_trajectory_scores_zero() {
        let scenario = crate::scenario::synthesize_resource_scenario(&ResourceSynthParams {
            n: 2,
            slots: 20,
            at_density: 0.0,
            gs_density: 0.0,
            n_at: 1,
            n_gs: 1,
            slot_duration_s: (60.0, 120.0),
            sun_run_slots: 5,
            init_battery: 0.8,
            init_memory: 0.2,
            rates: RateConfig::default(),
            seed: 11,
        })
        .unwrap();
        let mut env = ResourceEnv::new(&scenario);
        let mut total = 0.0;
        while !env.is_done() {
            total += env.step(&[SatAction::Nop, SatAction::Nop]).unwrap().total_reward;
        }
        assert_eq!(total, 0.0);
    }

    #[test]
    fn deterministic_replay_is_exact() {
        let scenario = crate::scenario::synthesize_resource_scenario(&ResourceSynthParams {
            n: 4,
            slots: 20,
            at_density: 0.4,
            gs_density: 0.4,
            n_at: 2,
            n_gs: 2,
            slot_duration_s: (60.0, 120.0),
            sun_run_slots: 4,
            init_battery: 0.8,
            init_memory: 0.2,
            rates: RateConfig::default(),
            seed: 5,
        })
        .unwrap();
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let mut env = ResourceEnv::new(&scenario);
            let mut log = Vec::new();
            let mut pick = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(99);
            while !env.is_done() {
                let joint: Vec<SatAction> = env
                    .state()
                    .sats
                    .iter()
                    .map(|o| {
                        let feasible: Vec<SatAction> = feasible_mask(o).actions().collect();
                        feasible[rand::Rng::gen_range(&mut pick, 0..feasible.len())]
                    })
                    .collect();
                log.push(env.step(&joint).unwrap());
            }
            runs.push(log);
        }
        assert_eq!(runs[0], runs[1]);
        let _ = &mut rng;
    }

    proptest! {
        #[test]
        fn resources_stay_in_unit_interval(seed in 0u64..40, picks in 0u64..100) {
            let scenario = crate::scenario::synthesize_resource_scenario(&ResourceSynthParams {
                n: 3,
                slots: 15,
                at_density: 0.5,
                gs_density: 0.5,
                n_at: 2,
                n_gs: 1,
                slot_duration_s: (200.0, 900.0), // long slots force clamping
                sun_run_slots: 3,
                init_battery: 0.3,
                init_memory: 0.7,
                rates: RateConfig::default(),
                seed,
            }).unwrap();
            let mut env = ResourceEnv::new(&scenario);
            let mut pick = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(picks);
            while !env.is_done() {
                let joint: Vec<SatAction> = env.state().sats.iter().map(|o| {
                    let feasible: Vec<SatAction> = feasible_mask(o).actions().collect();
                    feasible[rand::Rng::gen_range(&mut pick, 0..feasible.len())]
                }).collect();
                let outcome = env.step(&joint).unwrap();
                prop_assert!((outcome.total_reward - outcome.per_sat_reward.iter().sum::<f64>()).abs() == 0.0);
                for sat in &outcome.next_state.sats {
                    prop_assert!((0.0..=1.0).contains(&sat.battery));
                    prop_assert!((0.0..=1.0).contains(&sat.memory));
                }
            }
        }
    }

    #[test]
    fn schedule_shape_and_compliance() {
        let (scenario, _) = two_sat_gs_state();
        let mut schedule = Schedule::all_nop(2, 1);
        assert!(schedule.matches_shape(&scenario));
        assert_eq!(schedule.mask_violation(&scenario), None);
        schedule.set(0, 0, SatAction::Downlink);
        assert_eq!(schedule.mask_violation(&scenario), None);
        schedule.set(1, 0, SatAction::Acquire); // no AT access anywhere
        assert_eq!(schedule.mask_violation(&scenario), Some((1, 0)));
        assert!(Schedule::from_actions(vec![]).is_err());
        assert!(Schedule::from_actions(vec![vec![], vec![]]).is_err());
        assert!(Schedule::from_actions(vec![
            vec![SatAction::Nop],
            vec![SatAction::Nop, SatAction::Nop]
        ])
        .is_err());
    }

    #[test]
    fn stochastic_rates_draw_per_step() {
        let mut rates = RateConfig::default();
        rates.sampling = Some(crate::scenario::RateSampling {
            memory_acquisition: Some((2e-4, 4e-4)),
            ..Default::default()
        });
        let scenario = scenario_with(
            alloc::vec![alloc::vec![1, 1]],
            alloc::vec![alloc::vec![0, 0]],
            alloc::vec![alloc::vec![true, true]],
            60.0,
            rates,
        );
        let run = |seed: u64| {
            let mut env = ResourceEnv::with_stochastic_rates(&scenario, seed);
            let mut memories = Vec::new();
            while !env.is_done() {
                let outcome = env.step(&[SatAction::Acquire]).unwrap();
                memories.push(outcome.next_state.sats[0].memory);
            }
            memories
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
        // Deterministic replay of the same scenario ignores the envelopes.
        let mut env = ResourceEnv::new(&scenario);
        let m1 = env.step(&[SatAction::Acquire]).unwrap().next_state.sats[0].memory;
        let expected = 0.5
            + 60.0 * (scenario.rates.memory_telemetry + scenario.rates.memory_acquisition);
        assert!((m1 - expected).abs() < 1e-15);
    }
}
