//! Clipped-surrogate policy-gradient scheduler with action masking.
//!
//! A shared two-layer tanh trunk feeds one logit head per satellite (four
//! logits each) and a scalar value head. Infeasible actions are removed
//! before the softmax, so their probability is exactly zero and no gradient
//! flows through their logits. Everything — forward pass, backprop, GAE,
//! Adam — is implemented here in plain `f64`, which keeps results bit-stable
//! across platforms and lets tests check the analytic gradient against
//! central differences.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::resources::{feasible_mask, ActionMask, ResourceEnv, SatAction, Schedule};
use crate::scenario::ResourceScenario;
use crate::util::{shuffle, uniform_in};

pub const N_ACTIONS: usize = 4;

/// Network dimensions. The parameter vector layout is fixed:
/// trunk layer 1 (weights, biases), trunk layer 2 (weights, biases),
/// policy heads (weights, biases; rows are satellite-major logits),
/// value head (weights, bias).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub n_sats: usize,
    pub obs_dim: usize,
    pub hidden_dim: usize,
}

impl NetShape {
    pub fn for_scenario(scenario: &ResourceScenario, hidden_dim: usize) -> NetShape {
        NetShape {
            n_sats: scenario.n,
            obs_dim: 1 + 5 * scenario.n,
            hidden_dim,
        }
    }

    pub fn logits_dim(&self) -> usize {
        self.n_sats * N_ACTIONS
    }

    fn sizes(&self) -> [usize; 8] {
        let h = self.hidden_dim;
        [
            h * self.obs_dim,
            h,
            h * h,
            h,
            self.logits_dim() * h,
            self.logits_dim(),
            h,
            1,
        ]
    }

    pub fn param_len(&self) -> usize {
        self.sizes().iter().sum()
    }
}

struct Views<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
    piw: &'a [f64],
    pib: &'a [f64],
    vw: &'a [f64],
    vb: &'a [f64],
}

fn views<'a>(shape: &NetShape, theta: &'a [f64]) -> Views<'a> {
    let s = shape.sizes();
    let (w1, rest) = theta.split_at(s[0]);
    let (b1, rest) = rest.split_at(s[1]);
    let (w2, rest) = rest.split_at(s[2]);
    let (b2, rest) = rest.split_at(s[3]);
    let (piw, rest) = rest.split_at(s[4]);
    let (pib, rest) = rest.split_at(s[5]);
    let (vw, vb) = rest.split_at(s[6]);
    Views {
        w1,
        b1,
        w2,
        b2,
        piw,
        pib,
        vw,
        vb,
    }
}

struct ViewsMut<'a> {
    w1: &'a mut [f64],
    b1: &'a mut [f64],
    w2: &'a mut [f64],
    b2: &'a mut [f64],
    piw: &'a mut [f64],
    pib: &'a mut [f64],
    vw: &'a mut [f64],
    vb: &'a mut [f64],
}

fn views_mut<'a>(shape: &NetShape, theta: &'a mut [f64]) -> ViewsMut<'a> {
    let s = shape.sizes();
    let (w1, rest) = theta.split_at_mut(s[0]);
    let (b1, rest) = rest.split_at_mut(s[1]);
    let (w2, rest) = rest.split_at_mut(s[2]);
    let (b2, rest) = rest.split_at_mut(s[3]);
    let (piw, rest) = rest.split_at_mut(s[4]);
    let (pib, rest) = rest.split_at_mut(s[5]);
    let (vw, vb) = rest.split_at_mut(s[6]);
    ViewsMut {
        w1,
        b1,
        w2,
        b2,
        piw,
        pib,
        vw,
        vb,
    }
}

/// Flat parameter vector plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    shape: NetShape,
    theta: Vec<f64>,
}

impl PolicyParams {
    /// Xavier-uniform weights, zero biases. Draw order: trunk layer 1,
    /// trunk layer 2, policy heads, value head.
    pub fn init<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> PolicyParams {
        let mut theta = alloc::vec![0.0; shape.param_len()];
        {
            let v = views_mut(&shape, &mut theta);
            let mut fill = |w: &mut [f64], fan_in: usize, fan_out: usize| {
                let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
                for x in w.iter_mut() {
                    *x = uniform_in(rng, -bound, bound);
                }
            };
            fill(v.w1, shape.obs_dim, shape.hidden_dim);
            fill(v.w2, shape.hidden_dim, shape.hidden_dim);
            fill(v.piw, shape.hidden_dim, shape.logits_dim());
            fill(v.vw, shape.hidden_dim, 1);
        }
        PolicyParams { shape, theta }
    }

    pub fn from_theta(shape: NetShape, theta: Vec<f64>) -> Result<PolicyParams> {
        if theta.len() != shape.param_len() {
            return Err(Error::InvalidArgument(format!(
                "parameter vector has {} entries, shape needs {}",
                theta.len(),
                shape.param_len()
            )));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "parameter vector contains non-finite entries".into(),
            ));
        }
        Ok(PolicyParams { shape, theta })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }
}

/// Observation encoding: episode progress, then per satellite battery,
/// memory, acquisition-access flag, ground-station-access flag, sunlit flag.
pub fn encode_state(
    scenario: &ResourceScenario,
    state: &crate::resources::ConstellationState,
) -> Vec<f64> {
    let mut x = Vec::with_capacity(1 + 5 * state.sats.len());
    x.push(state.slot as f64 / scenario.slots as f64);
    for obs in &state.sats {
        x.push(obs.battery);
        x.push(obs.memory);
        x.push((obs.at_opportunity != 0) as u8 as f64);
        x.push((obs.gs_opportunity != 0) as u8 as f64);
        x.push(obs.sunlit as u8 as f64);
    }
    x
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Satellite-major, `n_sats * N_ACTIONS` entries.
    pub logits: Vec<f64>,
    pub value: f64,
}

pub fn forward(params: &PolicyParams, obs: &[f64]) -> Forward {
    let shape = params.shape;
    debug_assert_eq!(obs.len(), shape.obs_dim);
    let v = views(&shape, &params.theta);
    let dense = |weights: &[f64], biases: &[f64], input: &[f64], activate: bool| -> Vec<f64> {
        biases
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut acc = *b;
                for (w, x) in weights[i * input.len()..(i + 1) * input.len()].iter().zip(input) {
                    acc += w * x;
                }
                if activate {
                    libm::tanh(acc)
                } else {
                    acc
                }
            })
            .collect()
    };
    let h1 = dense(v.w1, v.b1, obs, true);
    let h2 = dense(v.w2, v.b2, &h1, true);
    let logits = dense(v.piw, v.pib, &h2, false);
    let mut value = v.vb[0];
    for (w, x) in v.vw.iter().zip(&h2) {
        value += w * x;
    }
    Forward {
        h1,
        h2,
        logits,
        value,
    }
}

/// Softmax restricted to the mask's actions; masked-out entries are exactly
/// `0.0`. `logits` holds the four logits of one satellite.
pub fn masked_distribution(logits: &[f64], mask: ActionMask) -> Vec<f64> {
    debug_assert_eq!(logits.len(), N_ACTIONS);
    debug_assert!(mask.count() > 0, "mask must allow at least NOP");
    let mut max = f64::NEG_INFINITY;
    for a in SatAction::ALL {
        if mask.allows(a) && logits[a.index()] > max {
            max = logits[a.index()];
        }
    }
    let mut probs = alloc::vec![0.0; N_ACTIONS];
    let mut z = 0.0;
    for a in SatAction::ALL {
        if mask.allows(a) {
            let e = libm::exp(logits[a.index()] - max);
            probs[a.index()] = e;
            z += e;
        }
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    probs
}

/// Shannon entropy of a masked distribution (zero entries contribute zero).
pub fn distribution_entropy(probs: &[f64]) -> f64 {
    let mut h_acc = 0.0;
    for &p in probs {
        if p > 0.0 {
            h_acc -= p * libm::log(p);
        }
    }
    h_acc
}

/// Inverse-CDF draw over the positive-probability entries. Zero-probability
/// (masked) actions can never be selected; float shortfall in the cumulative
/// sum falls back to the last feasible entry.
pub fn sample_from<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = j;
            if u < cum {
                return j;
            }
        }
    }
    last
}

/// Argmax action index; ties resolve to the lowest index.
pub fn greedy_from(probs: &[f64]) -> usize {
    let mut best = 0;
    let mut best_p = f64::NEG_INFINITY;
    for (j, &p) in probs.iter().enumerate() {
        if p > best_p {
            best = j;
            best_p = p;
        }
    }
    best
}

/// On-policy experience: one entry per environment step, episodes
/// concatenated with `dones` marking boundaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub obs: Vec<Vec<f64>>,
    pub masks: Vec<Vec<ActionMask>>,
    /// Chosen action index per satellite.
    pub actions: Vec<Vec<usize>>,
    /// Scaled step rewards, as used by the learner.
    pub rewards: Vec<f64>,
    /// Value estimates at collection time.
    pub values: Vec<f64>,
    /// Joint log-probabilities at collection time.
    pub log_probs: Vec<f64>,
    pub dones: Vec<bool>,
    /// Unscaled total reward of each collected episode.
    pub episode_rewards: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Roll out `episodes` complete episodes under the stochastic masked policy.
/// The environment replays nominal rates; the only randomness is the action
/// sampling from `rng`.
pub fn collect_rollout<R: Rng + ?Sized>(
    scenario: &ResourceScenario,
    params: &PolicyParams,
    episodes: usize,
    reward_scale: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("episodes must be >= 1".into()));
    }
    let mut traj = Trajectory::default();
    for _ in 0..episodes {
        let mut env = ResourceEnv::new(scenario);
        let mut episode_reward = 0.0;
        while !env.is_done() {
            let x = encode_state(scenario, env.state());
            let fwd = forward(params, &x);
            let n = env.state().sats.len();
            let mut masks = Vec::with_capacity(n);
            let mut actions = Vec::with_capacity(n);
            let mut joint = Vec::with_capacity(n);
            let mut log_prob = 0.0;
            for (k, obs) in env.state().sats.iter().enumerate() {
                let mask = feasible_mask(obs);
                let probs =
                    masked_distribution(&fwd.logits[k * N_ACTIONS..(k + 1) * N_ACTIONS], mask);
                let a = sample_from(&probs, rng);
                log_prob += libm::log(probs[a].max(1e-300));
                masks.push(mask);
                actions.push(a);
                joint.push(SatAction::from_index(a).expect("sampled index in range"));
            }
            let outcome = env.step(&joint)?;
            episode_reward += outcome.total_reward;
            traj.obs.push(x);
            traj.masks.push(masks);
            traj.actions.push(actions);
            traj.rewards.push(outcome.total_reward * reward_scale);
            traj.values.push(fwd.value);
            traj.log_probs.push(log_prob);
            traj.dones.push(outcome.done);
        }
        traj.episode_rewards.push(episode_reward);
    }
    Ok(traj)
}

/// Generalized advantage estimation. Bootstraps through `(1 - done)`; the
/// value after the final sample is taken as zero, which is exact when the
/// batch ends on an episode boundary (as [`collect_rollout`] guarantees).
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    debug_assert_eq!(values.len(), n);
    debug_assert_eq!(dones.len(), n);
    let mut advantages = alloc::vec![0.0; n];
    let mut next_value = 0.0;
    let mut next_advantage = 0.0;
    for t in (0..n).rev() {
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        let adv = delta + gamma * lambda * nonterminal * next_advantage;
        advantages[t] = adv;
        next_advantage = adv;
        next_value = values[t];
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}

/// Standardize to zero mean, unit (population) standard deviation. A
/// degenerate batch (zero std) is only centered.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    let n = advantages.len() as f64;
    if advantages.is_empty() {
        return Vec::new();
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if std > 0.0 {
        advantages.iter().map(|a| (a - mean) / std).collect()
    } else {
        advantages.iter().map(|a| a - mean).collect()
    }
}

/// The clipped surrogate objective for one sample:
/// `min(ratio * adv, clamp(ratio, 1 - clip, 1 + clip) * adv)`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    unclipped.min(clipped)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// Mean negated clipped surrogate.
    pub policy: f64,
    /// Mean squared value error (without its coefficient).
    pub value: f64,
    /// Mean joint entropy.
    pub entropy: f64,
    /// `policy + value_coef * value - entropy_coef * entropy`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
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
    /// Step rewards are multiplied by this inside the learner so returns sit
    /// in a range the value head can reach early; reported rewards stay in
    /// environment units.
    pub reward_scale: f64,
    pub normalize_advantages: bool,
    pub rng_seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            hidden_dim: 64,
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatch_size: 64,
            learning_rate: 3e-4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            updates: 150,
            episodes_per_update: 8,
            reward_scale: 0.01,
            normalize_advantages: true,
            rng_seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden_dim must be >= 1".into()));
        }
        if !(self.clip_epsilon.is_finite() && 0.0 < self.clip_epsilon && self.clip_epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "clip_epsilon must lie in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        if !(self.gamma.is_finite() && 0.0 < self.gamma && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.gae_lambda.is_finite() && (0.0..=1.0).contains(&self.gae_lambda)) {
            return Err(Error::InvalidConfig(format!(
                "gae_lambda must lie in [0, 1], got {}",
                self.gae_lambda
            )));
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.episodes_per_update == 0 {
            return Err(Error::InvalidConfig(
                "epochs, minibatch_size, and episodes_per_update must be >= 1".into(),
            ));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("reward_scale", self.reward_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        for (name, v) in [("value_coef", self.value_coef), ("entropy_coef", self.entropy_coef)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn loss_impl(
    params: &PolicyParams,
    traj: &Trajectory,
    indices: &[usize],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
    mut grad: Option<&mut [f64]>,
) -> Result<LossTerms> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    if advantages.len() != traj.len() || returns.len() != traj.len() {
        return Err(Error::InvalidArgument(
            "advantages/returns length must match the trajectory".into(),
        ));
    }
    let shape = params.shape;
    let eps = config.clip_epsilon;
    let inv_n = 1.0 / indices.len() as f64;
    let mut policy_acc = 0.0;
    let mut value_acc = 0.0;
    let mut entropy_acc = 0.0;
    let mut dlogits = alloc::vec![0.0; shape.logits_dim()];
    for &i in indices {
        let fwd = forward(params, &traj.obs[i]);
        let mut log_prob = 0.0;
        let mut dists = Vec::with_capacity(shape.n_sats);
        for k in 0..shape.n_sats {
            let probs = masked_distribution(
                &fwd.logits[k * N_ACTIONS..(k + 1) * N_ACTIONS],
                traj.masks[i][k],
            );
            log_prob += libm::log(probs[traj.actions[i][k]].max(1e-300));
            dists.push(probs);
        }
        // Clamp keeps exp finite when the policy has drifted far; the
        // clipped objective's gradient is zero out there anyway.
        let diff = (log_prob - traj.log_probs[i]).clamp(-60.0, 60.0);
        let ratio = libm::exp(diff);
        let adv = advantages[i];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        policy_acc -= unclipped.min(clipped);
        let vdiff = fwd.value - returns[i];
        value_acc += vdiff * vdiff;
        let entropy: f64 = dists.iter().map(|p| distribution_entropy(p)).sum();
        entropy_acc += entropy;
        if let Some(grad) = grad.as_deref_mut() {
            // The ratio carries gradient unless the active (clipped) branch
            // is saturated at a clip bound.
            let pass_through =
                unclipped <= clipped || (1.0 - eps < ratio && ratio < 1.0 + eps);
            let dobj_dratio = if pass_through { adv } else { 0.0 };
            let dloss_dlogprob = -dobj_dratio * ratio * inv_n;
            for d in dlogits.iter_mut() {
                *d = 0.0;
            }
            for k in 0..shape.n_sats {
                let probs = &dists[k];
                let chosen = traj.actions[i][k];
                let h_k = distribution_entropy(probs);
                for (j, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        let indicator = if j == chosen { 1.0 } else { 0.0 };
                        dlogits[k * N_ACTIONS + j] = dloss_dlogprob * (indicator - p)
                            + config.entropy_coef * inv_n * p * (libm::log(p) + h_k);
                    }
                }
            }
            let dvalue = 2.0 * config.value_coef * vdiff * inv_n;
            backprop(&shape, &params.theta, &fwd, &traj.obs[i], &dlogits, dvalue, grad);
        }
    }
    let policy = policy_acc * inv_n;
    let value = value_acc * inv_n;
    let entropy = entropy_acc * inv_n;
    let total = policy + config.value_coef * value - config.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss(format!(
            "policy {policy}, value {value}, entropy {entropy}"
        )));
    }
    Ok(LossTerms {
        policy,
        value,
        entropy,
        total,
    })
}

/// Loss terms of `total = policy + value_coef * value - entropy_coef * entropy`
/// over the given minibatch indices. `advantages` and `returns` are indexed
/// by trajectory position (full-length slices).
pub fn ppo_loss(
    params: &PolicyParams,
    traj: &Trajectory,
    indices: &[usize],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
) -> Result<LossTerms> {
    loss_impl(params, traj, indices, advantages, returns, config, None)
}

/// [`ppo_loss`] plus the analytic gradient of the total loss with respect to
/// the flat parameter vector.
pub fn ppo_loss_and_grad(
    params: &PolicyParams,
    traj: &Trajectory,
    indices: &[usize],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
) -> Result<(LossTerms, Vec<f64>)> {
    let mut grad = alloc::vec![0.0; params.shape.param_len()];
    let terms = loss_impl(
        params,
        traj,
        indices,
        advantages,
        returns,
        config,
        Some(&mut grad),
    )?;
    Ok((terms, grad))
}

/// Accumulate one sample's gradient into `grad` given the upstream logit
/// and value gradients.
#[allow(clippy::needless_range_loop)] // parallel indexing into several slices
fn backprop(
    shape: &NetShape,
    theta: &[f64],
    fwd: &Forward,
    obs: &[f64],
    dlogits: &[f64],
    dvalue: f64,
    grad: &mut [f64],
) {
    let v = views(shape, theta);
    let g = views_mut(shape, grad);
    let h = shape.hidden_dim;
    let mut dh2 = alloc::vec![0.0; h];
    for (m, &dm) in dlogits.iter().enumerate() {
        if dm != 0.0 {
            for j in 0..h {
                g.piw[m * h + j] += dm * fwd.h2[j];
                dh2[j] += dm * v.piw[m * h + j];
            }
            g.pib[m] += dm;
        }
    }
    if dvalue != 0.0 {
        for j in 0..h {
            g.vw[j] += dvalue * fwd.h2[j];
            dh2[j] += dvalue * v.vw[j];
        }
        g.vb[0] += dvalue;
    }
    let mut dh1 = alloc::vec![0.0; h];
    for i in 0..h {
        let dpre = dh2[i] * (1.0 - fwd.h2[i] * fwd.h2[i]);
        if dpre != 0.0 {
            for j in 0..h {
                g.w2[i * h + j] += dpre * fwd.h1[j];
                dh1[j] += dpre * v.w2[i * h + j];
            }
            g.b2[i] += dpre;
        }
    }
    for i in 0..h {
        let dpre = dh1[i] * (1.0 - fwd.h1[i] * fwd.h1[i]);
        if dpre != 0.0 {
            for (j, &x) in obs.iter().enumerate() {
                g.w1[i * shape.obs_dim + j] += dpre * x;
            }
            g.b1[i] += dpre;
        }
    }
}

/// Adam with bias correction. State persists across updates, so the step
/// count keeps growing over a whole training run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(param_len: usize) -> AdamState {
        AdamState {
            m: alloc::vec![0.0; param_len],
            v: alloc::vec![0.0; param_len],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], learning_rate: f64) {
        debug_assert_eq!(theta.len(), self.m.len());
        debug_assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - libm::pow(ADAM_BETA1, self.t as f64);
        let bc2 = 1.0 - libm::pow(ADAM_BETA2, self.t as f64);
        for i in 0..theta.len() {
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grad[i];
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            theta[i] -= learning_rate * mhat / (libm::sqrt(vhat) + ADAM_EPS);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub minibatches: usize,
}

/// One PPO update over a collected trajectory: GAE, optional advantage
/// normalization, then `epochs` passes of shuffled minibatch Adam steps.
/// Reported stats are means over all minibatch evaluations.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    adam: &mut AdamState,
    traj: &Trajectory,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let (advantages, returns) =
        compute_gae(&traj.rewards, &traj.values, &traj.dones, config.gamma, config.gae_lambda);
    let advantages = if config.normalize_advantages {
        normalize_advantages(&advantages)
    } else {
        advantages
    };
    let mut indices: Vec<usize> = (0..traj.len()).collect();
    let mut policy_acc = 0.0;
    let mut value_acc = 0.0;
    let mut entropy_acc = 0.0;
    let mut minibatches = 0usize;
    for _ in 0..config.epochs {
        shuffle(rng, &mut indices);
        for chunk in indices.chunks(config.minibatch_size) {
            let (terms, grad) =
                ppo_loss_and_grad(params, traj, chunk, &advantages, &returns, config)?;
            adam.step(&mut params.theta, &grad, config.learning_rate);
            policy_acc += terms.policy;
            value_acc += terms.value;
            entropy_acc += terms.entropy;
            minibatches += 1;
        }
    }
    let inv = 1.0 / minibatches as f64;
    Ok(UpdateStats {
        policy_loss: policy_acc * inv,
        value_loss: value_acc * inv,
        entropy: entropy_acc * inv,
        minibatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainCurvePoint {
    pub update: usize,
    /// Mean unscaled episode reward of the rollout feeding this update.
    pub mean_episode_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub curve: Vec<TrainCurvePoint>,
}

/// Full training loop: seeded init, then `updates` iterations of rollout
/// collection and PPO updates. Deterministic for a given scenario and config.
pub fn train_scheduler(scenario: &ResourceScenario, config: &PpoConfig) -> Result<TrainOutput> {
    config.validate()?;
    if config.updates == 0 {
        return Err(Error::InvalidConfig("updates must be >= 1".into()));
    }
    let shape = NetShape::for_scenario(scenario, config.hidden_dim);
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(config.rng_seed);
    let mut params = PolicyParams::init(shape, &mut rng);
    let mut adam = AdamState::new(shape.param_len());
    let mut curve = Vec::with_capacity(config.updates);
    for update in 0..config.updates {
        let traj = collect_rollout(
            scenario,
            &params,
            config.episodes_per_update,
            config.reward_scale,
            &mut rng,
        )?;
        let mean_episode_reward =
            traj.episode_rewards.iter().sum::<f64>() / traj.episode_rewards.len() as f64;
        let stats = ppo_update(&mut params, &mut adam, &traj, config, &mut rng)?;
        curve.push(TrainCurvePoint {
            update,
            mean_episode_reward,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
        });
    }
    Ok(TrainOutput { params, curve })
}

/// Deterministic greedy decode: per slot, per satellite, the feasible action
/// with the highest masked probability (ties to the lowest action index).
/// Returns the schedule and its total unscaled environment reward.
pub fn greedy_schedule(
    scenario: &ResourceScenario,
    params: &PolicyParams,
) -> Result<(Schedule, f64)> {
    let expected = NetShape::for_scenario(scenario, params.shape.hidden_dim);
    if params.shape != expected {
        return Err(Error::InvalidArgument(format!(
            "policy built for {} satellites (obs {}), scenario has {}",
            params.shape.n_sats, params.shape.obs_dim, scenario.n
        )));
    }
    let mut env = ResourceEnv::new(scenario);
    let mut schedule = Schedule::all_nop(scenario.n, scenario.slots);
    let mut total = 0.0;
    while !env.is_done() {
        let slot = env.state().slot;
        let x = encode_state(scenario, env.state());
        let fwd = forward(params, &x);
        let joint: Vec<SatAction> = env
            .state()
            .sats
            .iter()
            .enumerate()
            .map(|(k, obs)| {
                let probs = masked_distribution(
                    &fwd.logits[k * N_ACTIONS..(k + 1) * N_ACTIONS],
                    feasible_mask(obs),
                );
                SatAction::from_index(greedy_from(&probs)).expect("greedy index in range")
            })
            .collect();
        for (k, &a) in joint.iter().enumerate() {
            schedule.set(k, slot, a);
        }
        total += env.step(&joint)?.total_reward;
    }
    Ok((schedule, total))
}
