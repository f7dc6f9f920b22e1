//! Schedule-space search baselines: uniform random schedules, single-cell
//! neighborhood moves, Metropolis simulated annealing with geometric
//! cooling, and an exhaustive oracle for micro instances.
//!
//! All candidate schedules respect the feasibility masks by construction,
//! so the strict evaluator never rejects them. Evaluation replays the
//! deterministic environment with nominal rates.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::resources::{env_reset, env_step, feasible_mask, Schedule, StepOutcome};
use crate::scenario::ResourceScenario;

/// Feasible actions for one (sat, slot) cell, in action-index order.
/// Resource levels never affect the mask, so a placeholder observation works.
fn cell_actions(scenario: &ResourceScenario, sat: usize, slot: usize) -> Vec<crate::resources::SatAction> {
    let obs = crate::resources::SatObservation {
        battery: 1.0,
        memory: 0.0,
        at_opportunity: scenario.at_access[sat][slot],
        gs_opportunity: scenario.gs_access[sat][slot],
        sunlit: scenario.sun[sat][slot],
    };
    feasible_mask(&obs).actions().collect()
}

/// Uniform random mask-compliant schedule. Draw order: satellites ascending,
/// slots ascending within each satellite, one index draw per cell.
pub fn random_schedule<R: Rng + ?Sized>(scenario: &ResourceScenario, rng: &mut R) -> Schedule {
    let mut schedule = Schedule::all_nop(scenario.n, scenario.slots);
    for sat in 0..scenario.n {
        for slot in 0..scenario.slots {
            let actions = cell_actions(scenario, sat, slot);
            schedule.set(sat, slot, actions[rng.gen_range(0..actions.len())]);
        }
    }
    schedule
}

/// Total episode reward of a mask-compliant schedule under nominal rates.
/// Rejects shape mismatches and any action outside its cell's mask.
pub fn evaluate_schedule(scenario: &ResourceScenario, schedule: &Schedule) -> Result<f64> {
    if !schedule.matches_shape(scenario) {
        return Err(Error::InvalidArgument(format!(
            "schedule is {} x {}, scenario needs {} x {}",
            schedule.n_sats(),
            schedule.slots(),
            scenario.n,
            scenario.slots
        )));
    }
    if let Some((sat, slot)) = schedule.mask_violation(scenario) {
        return Err(Error::NonCompliantSchedule { sat, slot });
    }
    Ok(replay_schedule(scenario, schedule)?.total_reward)
}

/// Full step-by-step record of replaying a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub total_reward: f64,
    pub steps: Vec<StepOutcome>,
}

/// Replay a schedule leniently: mask violations are not rejected, they fall
/// through to the environment's flat invalid-action penalty. Used to score
/// schedules whose assumptions were broken after construction (e.g. access
/// windows that later vanished).
pub fn replay_schedule(scenario: &ResourceScenario, schedule: &Schedule) -> Result<ReplayOutcome> {
    if !schedule.matches_shape(scenario) {
        return Err(Error::InvalidArgument(format!(
            "schedule is {} x {}, scenario needs {} x {}",
            schedule.n_sats(),
            schedule.slots(),
            scenario.n,
            scenario.slots
        )));
    }
    let mut state = env_reset(scenario);
    let mut steps = Vec::with_capacity(scenario.slots);
    let mut total_reward = 0.0;
    for slot in 0..scenario.slots {
        let outcome = env_step(scenario, &state, &schedule.joint_at(slot), None)?;
        state = outcome.next_state.clone();
        total_reward += outcome.total_reward;
        steps.push(outcome);
    }
    Ok(ReplayOutcome { total_reward, steps })
}

/// Single-cell move: pick a uniform cell and replace its action with a
/// different feasible one. Cells whose mask is a singleton cannot move, so
/// the draw retries a bounded number of times and, if every attempt lands
/// on a singleton, returns the input unchanged.
pub fn neighbor<R: Rng + ?Sized>(
    scenario: &ResourceScenario,
    schedule: &Schedule,
    rng: &mut R,
) -> Schedule {
    let attempts = 4 * scenario.n * scenario.slots;
    for _ in 0..attempts.max(8) {
        let sat = rng.gen_range(0..scenario.n);
        let slot = rng.gen_range(0..scenario.slots);
        let current = schedule.get(sat, slot);
        let candidates: Vec<_> = cell_actions(scenario, sat, slot)
            .into_iter()
            .filter(|&a| a != current)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let mut next = schedule.clone();
        next.set(sat, slot, candidates[rng.gen_range(0..candidates.len())]);
        return next;
    }
    schedule.clone()
}

/// Metropolis acceptance for a reward delta (`candidate - current`):
/// improvements always accept, worsenings accept with `exp(delta / T)`.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta >= 0.0 {
        1.0
    } else {
        libm::exp(delta / temperature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    /// Cooling iterations; 0 returns the initial random schedule untouched.
    pub iterations: usize,
    pub initial_temperature: f64,
    /// Geometric cooling: `T <- cooling_factor * T` once per iteration.
    pub cooling_factor: f64,
    /// Proposals evaluated at each temperature.
    pub proposals_per_iteration: usize,
    pub rng_seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            iterations: 2000,
            initial_temperature: 50.0,
            cooling_factor: 0.95,
            proposals_per_iteration: 1,
            rng_seed: 0,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_temperature.is_finite() && self.initial_temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "initial_temperature must be finite and > 0, got {}",
                self.initial_temperature
            )));
        }
        if !(self.cooling_factor.is_finite() && 0.0 < self.cooling_factor && self.cooling_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cooling_factor must lie in (0, 1), got {}",
                self.cooling_factor
            )));
        }
        if self.proposals_per_iteration == 0 {
            return Err(Error::InvalidConfig(
                "proposals_per_iteration must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One point of the annealing trace, recorded after each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaTracePoint {
    pub iteration: usize,
    pub temperature: f64,
    pub current_reward: f64,
    pub best_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaOutcome {
    pub best_schedule: Schedule,
    pub best_reward: f64,
    pub trace: Vec<SaTracePoint>,
    /// Total schedule evaluations, including the initial one.
    pub evaluations: usize,
}

/// Simulated annealing over mask-compliant schedules. The chain starts from
/// a uniform random schedule drawn with the config seed (the same draw order
/// as [`random_schedule`]), proposes single-cell moves, and tracks the best
/// schedule ever visited.
pub fn simulated_annealing(scenario: &ResourceScenario, config: &SaConfig) -> Result<SaOutcome> {
    config.validate()?;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(config.rng_seed);
    let mut current = random_schedule(scenario, &mut rng);
    let mut current_reward = evaluate_schedule(scenario, &current)?;
    let mut best = current.clone();
    let mut best_reward = current_reward;
    let mut evaluations = 1usize;
    let mut temperature = config.initial_temperature;
    let mut trace = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        for _ in 0..config.proposals_per_iteration {
            let candidate = neighbor(scenario, &current, &mut rng);
            let candidate_reward = evaluate_schedule(scenario, &candidate)?;
            evaluations += 1;
            let delta = candidate_reward - current_reward;
            // The acceptance draw is consumed only on worsening moves.
            let accept = delta >= 0.0
                || rng.gen::<f64>() < acceptance_probability(delta, temperature);
            if accept {
                current = candidate;
                current_reward = candidate_reward;
                if current_reward > best_reward {
                    best = current.clone();
                    best_reward = current_reward;
                }
            }
        }
        trace.push(SaTracePoint {
            iteration,
            temperature,
            current_reward,
            best_reward,
        });
        temperature *= config.cooling_factor;
    }
    Ok(SaOutcome {
        best_schedule: best,
        best_reward,
        trace,
        evaluations,
    })
}

/// Exact maximizer by joint enumeration of every mask-compliant schedule.
/// Contention couples satellites, so the product runs over all cells at
/// once; the search-space guard keeps this to micro instances. Ties resolve
/// to the first maximizer in enumeration order (cells sat-major, actions in
/// index order), which is deterministic.
pub fn exhaustive_best_schedule(scenario: &ResourceScenario) -> Result<(Schedule, f64)> {
    const MAX_COMBINATIONS: u128 = 1 << 22;
    let mut cells = Vec::with_capacity(scenario.n * scenario.slots);
    let mut combinations: u128 = 1;
    for sat in 0..scenario.n {
        for slot in 0..scenario.slots {
            let actions = cell_actions(scenario, sat, slot);
            combinations = combinations.saturating_mul(actions.len() as u128);
            if combinations > MAX_COMBINATIONS {
                return Err(Error::InvalidArgument(format!(
                    "schedule space exceeds {MAX_COMBINATIONS} combinations; exhaustive search is for micro instances"
                )));
            }
            cells.push((sat, slot, actions));
        }
    }
    let mut indices = alloc::vec![0usize; cells.len()];
    let mut schedule = Schedule::all_nop(scenario.n, scenario.slots);
    for (sat, slot, actions) in &cells {
        schedule.set(*sat, *slot, actions[0]);
    }
    let mut best = schedule.clone();
    let mut best_reward = evaluate_schedule(scenario, &schedule)?;
    'outer: loop {
        // Odometer increment over cell choice indices.
        for (pos, (sat, slot, actions)) in cells.iter().enumerate() {
            if indices[pos] + 1 < actions.len() {
                indices[pos] += 1;
                schedule.set(*sat, *slot, actions[indices[pos]]);
                let reward = evaluate_schedule(scenario, &schedule)?;
                if reward > best_reward {
                    best = schedule.clone();
                    best_reward = reward;
                }
                continue 'outer;
            }
            indices[pos] = 0;
            schedule.set(*sat, *slot, actions[0]);
        }
        break;
    }
    Ok((best, best_reward))
}
