//! Queue-aware packet routing: the per-hop environment, the Q-routing
//! learner, shortest-path baselines, and route evaluation.
//!
//! States are node IDs and an action is the successor node to forward to,
//! so the value table is n x n. Per-hop cost is propagation latency plus a
//! queueing delay sampled fresh from the link's uniform envelope; reaching
//! the destination adds a large bonus.

mod baseline;
mod learn;

pub use baseline::{dijkstra, exhaustive_best_route, WeightMode};
pub use learn::{extract_route, extract_route_avoiding, q_update, train, train_with_observer, EpisodeStats};

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::RoutingScenario;
use crate::util::uniform_in;

/// State-action values, row-major `[state][action]`, initialized to zero.
/// Entries for node pairs without an edge are never written by training and
/// stay exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n: usize) -> Self {
        QTable {
            n,
            values: alloc::vec![0.0; n * n],
        }
    }

    /// Rebuild from a row-major dump (e.g. a checkpoint file).
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "q-table entries must be finite, got {bad}"
            )));
        }
        Ok(QTable { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n + action] = value;
    }

    /// Row-major view for serialization.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Q-routing training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub episodes: usize,
    /// Learning rate in (0, 1].
    pub alpha: f64,
    /// Discount in [0, 1].
    pub gamma: f64,
    /// Initial exploration probability in [0, 1].
    pub epsilon0: f64,
    /// Per-episode multiplicative decay in (0, 1].
    pub epsilon_decay: f64,
    /// Magnitude subtracted from the reward on a revisit before the episode
    /// is cut.
    pub loop_penalty: f64,
    /// Magnitude of the destination bonus in the reward.
    pub target_bonus_magnitude: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            episodes: 15_000,
            alpha: 0.05,
            gamma: 0.9,
            epsilon0: 0.3,
            epsilon_decay: 0.9995,
            loop_penalty: 100.0,
            target_bonus_magnitude: 100.0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in [0,1], got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon0 must lie in [0,1], got {}",
                self.epsilon0
            )));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_decay must lie in (0,1], got {}",
                self.epsilon_decay
            )));
        }
        if !self.loop_penalty.is_finite() || !self.target_bonus_magnitude.is_finite() {
            return Err(Error::InvalidConfig(
                "loop_penalty and target_bonus_magnitude must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// A walk through the graph. `delivered` is false when extraction dead-ended
/// before reaching the destination; the partial walk is retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub nodes: Vec<usize>,
    pub delivered: bool,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

/// One evaluated traversal of a route with fresh queue samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingEpisodeResult {
    pub route: Vec<usize>,
    pub total_latency_ms: f64,
    pub hops: usize,
    pub delivered: bool,
    pub total_reward: f64,
}

/// Draw one queueing delay for the directed edge `from -> to`.
pub fn sample_queue_latency<R: Rng + ?Sized>(
    scenario: &RoutingScenario,
    from: usize,
    to: usize,
    rng: &mut R,
) -> Result<f64> {
    let link = scenario.link(from, to)?;
    Ok(uniform_in(rng, link.queue.min_ms, link.queue.max_ms))
}

/// Per-hop reward: `-(L_prop + L_queue + L_target)` where the target term is
/// `-target_bonus_magnitude` when the hop lands on the destination and zero
/// otherwise, making delivery a large positive contribution.
pub fn reward(
    scenario: &RoutingScenario,
    state: usize,
    action: usize,
    sampled_queue_ms: f64,
    target_bonus_magnitude: f64,
) -> Result<f64> {
    let link = scenario.link(state, action)?;
    let target_term = if action == scenario.dst() {
        -target_bonus_magnitude
    } else {
        0.0
    };
    Ok(-(link.prop_ms + sampled_queue_ms + target_term))
}

/// Single-packet routing walker. Actions are successor nodes; an episode
/// terminates when the destination is entered (tracked by the caller, per
/// the training loop's visited-set logic).
#[derive(Debug)]
pub struct RoutingEnv<'s> {
    scenario: &'s RoutingScenario,
    state: usize,
    target_bonus_magnitude: f64,
}

impl<'s> RoutingEnv<'s> {
    pub fn new(scenario: &'s RoutingScenario, target_bonus_magnitude: f64) -> Self {
        RoutingEnv {
            scenario,
            state: scenario.src(),
            target_bonus_magnitude,
        }
    }

    pub fn reset(&mut self) -> usize {
        self.state = self.scenario.src();
        self.state
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// Forward to `action`. Returns `(new_state, reward, done)`; the new
    /// state is the action itself and `done` iff it is the destination.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        action: usize,
        rng: &mut R,
    ) -> Result<(usize, f64, bool)> {
        let queue_ms = sample_queue_latency(self.scenario, self.state, action, rng)?;
        let r = reward(
            self.scenario,
            self.state,
            action,
            queue_ms,
            self.target_bonus_magnitude,
        )?;
        self.state = action;
        Ok((action, r, action == self.scenario.dst()))
    }
}

/// Traverse `route` once with fresh queue samples.
pub fn replay_route<R: Rng + ?Sized>(
    scenario: &RoutingScenario,
    route: &Route,
    target_bonus_magnitude: f64,
    rng: &mut R,
) -> Result<RoutingEpisodeResult> {
    if route.nodes.is_empty() {
        return Err(Error::BrokenRoute("route is empty".into()));
    }
    let mut total_latency_ms = 0.0;
    let mut total_reward = 0.0;
    for pair in route.nodes.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        let queue_ms = sample_queue_latency(scenario, u, v, rng)?;
        let link = scenario.link(u, v)?;
        total_latency_ms += link.prop_ms + queue_ms;
        total_reward += reward(scenario, u, v, queue_ms, target_bonus_magnitude)?;
    }
    Ok(RoutingEpisodeResult {
        route: route.nodes.clone(),
        total_latency_ms,
        hops: route.hops(),
        delivered: route.delivered,
        total_reward,
    })
}

/// Latency distribution of a route over repeated traversals.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEvaluation {
    pub samples: Vec<f64>,
    pub mean_ms: f64,
    pub p5_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub mean_reward: f64,
}

/// Evaluate a route over `replications` independent traversals.
pub fn evaluate_route<R: Rng + ?Sized>(
    scenario: &RoutingScenario,
    route: &Route,
    target_bonus_magnitude: f64,
    rng: &mut R,
    replications: usize,
) -> Result<RouteEvaluation> {
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be > 0".into()));
    }
    let mut samples = Vec::with_capacity(replications);
    let mut reward_sum = 0.0;
    for _ in 0..replications {
        let episode = replay_route(scenario, route, target_bonus_magnitude, rng)?;
        samples.push(episode.total_latency_ms);
        reward_sum += episode.total_reward;
    }
    let mean_ms = samples.iter().sum::<f64>() / samples.len() as f64;
    let mut sorted = samples.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(RouteEvaluation {
        mean_ms,
        p5_ms: percentile_nearest_rank(&sorted, 5.0),
        p50_ms: percentile_nearest_rank(&sorted, 50.0),
        p95_ms: percentile_nearest_rank(&sorted, 95.0),
        mean_reward: reward_sum / replications as f64,
        samples,
    })
}

/// Expected end-to-end latency of a route: propagation plus the analytic
/// mean queue delay per hop.
pub fn route_expected_latency(scenario: &RoutingScenario, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::BrokenRoute("route is empty".into()));
    }
    let mut total = 0.0;
    for pair in nodes.windows(2) {
        let link = scenario.link(pair[0], pair[1])?;
        total += link.prop_ms + link.queue.mean_ms();
    }
    Ok(total)
}

/// Nearest-rank percentile over an ascending-sorted slice.
fn percentile_nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = libm::ceil((pct / 100.0) * sorted.len() as f64) as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
pub(crate) mod testgraph {
    //! Shared hand-built graphs for routing tests.
    use crate::scenario::{QueueBounds, RoutingScenario};

    pub fn qb(min_ms: f64, max_ms: f64) -> QueueBounds {
        QueueBounds { min_ms, max_ms }
    }

    /// Build a symmetric scenario from undirected edge specs
    /// `(u, v, prop, qmin, qmax)`; queue bounds mirrored on both directions.
    pub fn undirected(
        n: usize,
        src: usize,
        dst: usize,
        edges: &[(usize, usize, f64, f64, f64)],
    ) -> RoutingScenario {
        let mut directed = Vec::new();
        for &(u, v, p, lo, hi) in edges {
            directed.push((u, v, p, qb(lo, hi)));
            directed.push((v, u, p, qb(lo, hi)));
        }
        RoutingScenario::from_directed_edges(n, src, dst, 0, directed).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use testgraph::undirected;

    fn line3() -> RoutingScenario {
        // 0 -(3ms, queue [2,2])- 1 -(1ms, queue [0,0])- 2
        undirected(3, 0, 2, &[(0, 1, 3.0, 2.0, 2.0), (1, 2, 1.0, 0.0, 0.0)])
    }

    #[test]
    fn reward_hand_values() {
        let s = line3();
        // L_prop=3, L_queue=2, non-destination hop.
        assert_eq!(reward(&s, 0, 1, 2.0, 100.0).unwrap(), -5.0);
        // Destination hop flips the bonus in.
        let s2 = undirected(3, 0, 1, &[(0, 1, 3.0, 2.0, 2.0)]);
        assert_eq!(reward(&s2, 0, 1, 2.0, 100.0).unwrap(), 95.0);
        // Queue-free non-destination hop: -(prop + 0 + 0). A literal
        // zero-latency link is unconstructible (prop must be > 0), so this
        // is the closest well-formed case.
        assert_eq!(reward(&s, 1, 0, 0.0, 100.0).unwrap(), -3.0);
        assert!(matches!(
            reward(&s, 0, 2, 0.0, 100.0),
            Err(Error::MissingEdge { from: 0, to: 2 })
        ));
    }

    #[test]
    fn queue_sampling_stays_in_bounds_and_hits_mean() {
        let s = undirected(2, 0, 1, &[(0, 1, 1.0, 0.0, 10.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let q = sample_queue_latency(&s, 0, 1, &mut rng).unwrap();
            assert!((0.0..10.0).contains(&q));
            sum += q;
        }
        assert!((sum / n as f64 - 5.0).abs() < 0.5);
    }

    #[test]
    fn degenerate_queue_bounds_sample_exactly() {
        let s = undirected(2, 0, 1, &[(0, 1, 1.0, 2.0, 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_queue_latency(&s, 0, 1, &mut rng).unwrap(), 2.0);
    }

    #[test]
    fn env_step_semantics() {
        let s = line3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = RoutingEnv::new(&s, 100.0);
        assert_eq!(env.state(), 0);
        let (state, r1, done) = env.step(1, &mut rng).unwrap();
        assert_eq!((state, done), (1, false));
        assert_eq!(r1, -5.0); // degenerate queue -> deterministic reward
        let (state, r2, done) = env.step(2, &mut rng).unwrap();
        assert_eq!((state, done), (2, true));
        assert_eq!(r2, 99.0); // -(1 + 0 - 100)
        assert_eq!(r1 + r2, 94.0); // two-hop episode accumulates per-step rewards
        assert_eq!(env.reset(), 0);
    }

    #[test]
    fn env_step_rejects_non_neighbor() {
        let s = line3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = RoutingEnv::new(&s, 100.0);
        assert!(env.step(2, &mut rng).is_err());
    }

    #[test]
    fn evaluate_route_degenerate_bounds_equal_propagation_sum() {
        let s = line3();
        let route = Route {
            nodes: vec![0, 1, 2],
            delivered: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eval = evaluate_route(&s, &route, 100.0, &mut rng, 64).unwrap();
        // prop 3+1 plus the degenerate 2ms queue on the first hop.
        assert!(eval.samples.iter().all(|&x| x == 6.0));
        assert_eq!(eval.mean_ms, 6.0);
        assert_eq!(eval.p50_ms, 6.0);
        assert_eq!(eval.mean_reward, 94.0);
    }

    #[test]
    fn evaluate_route_uniform_mean() {
        let s = undirected(2, 0, 1, &[(0, 1, 3.0, 0.0, 10.0)]);
        let route = Route {
            nodes: vec![0, 1],
            delivered: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eval = evaluate_route(&s, &route, 100.0, &mut rng, 10_000).unwrap();
        assert!((eval.mean_ms - 8.0).abs() < 0.5);
        assert!(eval.p5_ms <= eval.p50_ms && eval.p50_ms <= eval.p95_ms);
    }

    #[test]
    fn evaluate_route_contract_edges() {
        let s = line3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = evaluate_route(
            &s,
            &Route {
                nodes: vec![0, 1],
                delivered: false,
            },
            100.0,
            &mut rng,
            1,
        )
        .unwrap();
        assert_eq!(one.samples.len(), 1);
        let broken = Route {
            nodes: vec![0, 2],
            delivered: true,
        };
        assert!(evaluate_route(&s, &broken, 100.0, &mut rng, 4).is_err());
        assert!(evaluate_route(
            &s,
            &Route {
                nodes: vec![0, 1],
                delivered: true
            },
            100.0,
            &mut rng,
            0
        )
        .is_err());
    }

    #[test]
    fn expected_latency_uses_mean_queue() {
        let s = undirected(3, 0, 2, &[(0, 1, 3.0, 1.0, 3.0), (1, 2, 1.0, 0.0, 0.0)]);
        assert_eq!(route_expected_latency(&s, &[0, 1, 2]).unwrap(), 6.0);
    }

    #[test]
    fn qtable_round_trip_and_validation() {
        let mut q = QTable::zeros(3);
        q.set(0, 1, -2.5);
        let copy = QTable::from_values(3, q.values().to_vec()).unwrap();
        assert_eq!(copy, q);
        assert!(QTable::from_values(3, vec![0.0; 8]).is_err());
        assert!(QTable::from_values(2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn percentile_nearest_rank_small_sets() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_nearest_rank(&xs, 5.0), 1.0);
        assert_eq!(percentile_nearest_rank(&xs, 50.0), 2.0);
        assert_eq!(percentile_nearest_rank(&xs, 95.0), 4.0);
        assert_eq!(percentile_nearest_rank(&[7.0], 50.0), 7.0);
    }

    #[test]
    fn learner_config_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        assert!(LearnerConfig {
            alpha: 0.0,
            ..LearnerConfig::default()
        }
        .validate()
        .is_err());
        assert!(LearnerConfig {
            episodes: 0,
            ..LearnerConfig::default()
        }
        .validate()
        .is_err());
        assert!(LearnerConfig {
            epsilon_decay: 0.0,
            ..LearnerConfig::default()
        }
        .validate()
        .is_err());
    }
}
