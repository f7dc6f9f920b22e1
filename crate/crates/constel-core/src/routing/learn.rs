//! Tabular Q-routing: the update rule, the training loop, and greedy route
//! extraction with next-best fallback.

use rand::Rng;

use crate::error::Result;
use crate::routing::{reward, sample_queue_latency, LearnerConfig, QTable, Route};
use crate::scenario::RoutingScenario;

/// One-step value update:
/// `Q(s,a) <- (1-alpha)*Q(s,a) + alpha*(r + gamma * max_{a' feasible from s_next} Q(s_next, a'))`.
/// The max ranges over the successors of `s_next`; an isolated successor
/// contributes 0 (the initial table value).
#[allow(clippy::too_many_arguments)] // mirrors the update equation's terms
pub fn q_update(
    q: &mut QTable,
    scenario: &RoutingScenario,
    state: usize,
    action: usize,
    reward: f64,
    s_next: usize,
    alpha: f64,
    gamma: f64,
) {
    let max_next = scenario
        .neighbors(s_next)
        .map(|links| {
            links
                .iter()
                .map(|l| q.get(s_next, l.to))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .unwrap_or(f64::NEG_INFINITY);
    let max_next = if max_next == f64::NEG_INFINITY {
        0.0
    } else {
        max_next
    };
    let updated = (1.0 - alpha) * q.get(state, action) + alpha * (reward + gamma * max_next);
    q.set(state, action, updated);
}

/// Greedy argmax over the feasible actions of `state`, ties broken by the
/// lowest node ID. `None` when the node has no successors.
fn best_feasible(q: &QTable, scenario: &RoutingScenario, state: usize) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for link in scenario.neighbors(state).ok()? {
        let value = q.get(state, link.to);
        // Strict > keeps the first (lowest-ID) maximizer, neighbors ascend.
        if best.is_none_or(|(bv, _)| value > bv) {
            best = Some((value, link.to));
        }
    }
    best.map(|(_, node)| node)
}

/// Per-episode training statistics, streamed to the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub delivered: bool,
}

/// Train a fresh zero-initialized table on the scenario.
///
/// Each episode walks from src, choosing epsilon-greedily among feasible
/// actions, updating the table after every step. Entering an already-visited
/// node triggers one additional update with `reward - loop_penalty` and cuts
/// the episode; entering the destination ends it. Epsilon decays once per
/// episode. Deterministic for a given `rng` stream.
pub fn train<R: Rng + ?Sized>(
    scenario: &RoutingScenario,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<QTable> {
    train_with_observer(scenario, config, rng, |_| {})
}

/// [`train`] with a per-episode statistics callback (used for trace files).
pub fn train_with_observer<R: Rng + ?Sized, F: FnMut(&EpisodeStats)>(
    scenario: &RoutingScenario,
    config: &LearnerConfig,
    rng: &mut R,
    mut observer: F,
) -> Result<QTable> {
    scenario.validate()?;
    config.validate()?;
    let n = scenario.n();
    let mut q = QTable::zeros(n);
    let mut epsilon = config.epsilon0;
    let mut visited = alloc::vec![false; n];
    for episode in 0..config.episodes {
        visited.fill(false);
        let mut state = scenario.src();
        visited[state] = true;
        let mut steps = 0usize;
        let mut total_reward = 0.0;
        let mut delivered = false;
        loop {
            let links = scenario.neighbors(state)?;
            if links.is_empty() {
                break; // dead end; only reachable on hand-built graphs
            }
            let explore = rng.gen::<f64>() < epsilon;
            let action = if explore {
                links[rng.gen_range(0..links.len())].to
            } else {
                best_feasible(&q, scenario, state).expect("non-empty neighbor set")
            };
            let queue_ms = sample_queue_latency(scenario, state, action, rng)?;
            let r = reward(
                scenario,
                state,
                action,
                queue_ms,
                config.target_bonus_magnitude,
            )?;
            steps += 1;
            total_reward += r;
            q_update(&mut q, scenario, state, action, r, action, config.alpha, config.gamma);
            if visited[action] {
                // Looping: penalize the same pair once more, cut the episode.
                q_update(
                    &mut q,
                    scenario,
                    state,
                    action,
                    r - config.loop_penalty,
                    action,
                    config.alpha,
                    config.gamma,
                );
                break;
            }
            visited[action] = true;
            state = action;
            if action == scenario.dst() {
                delivered = true;
                break;
            }
        }
        epsilon *= config.epsilon_decay;
        observer(&EpisodeStats {
            episode,
            steps,
            total_reward,
            delivered,
        });
    }
    Ok(q)
}

/// Greedy route reconstruction: from src, repeatedly take the
/// highest-valued feasible action among *unvisited* successors (so the
/// second-best action is used when the best would revisit), stopping at the
/// destination or at a dead end (`delivered = false`).
pub fn extract_route(q: &QTable, scenario: &RoutingScenario) -> Route {
    extract_route_avoiding(q, scenario, &alloc::vec![false; scenario.n()])
}

/// [`extract_route`] with additional `blocked` nodes masked out, used to
/// re-route around unresponsive satellites at delivery time.
pub fn extract_route_avoiding(q: &QTable, scenario: &RoutingScenario, blocked: &[bool]) -> Route {
    let n = scenario.n();
    let mut visited = alloc::vec![false; n];
    let mut nodes = alloc::vec![scenario.src()];
    let mut state = scenario.src();
    visited[state] = true;
    while state != scenario.dst() {
        let mut best: Option<(f64, usize)> = None;
        let Ok(links) = scenario.neighbors(state) else {
            break;
        };
        for link in links {
            if visited[link.to] || blocked.get(link.to).copied().unwrap_or(false) {
                continue;
            }
            let value = q.get(state, link.to);
            if best.is_none_or(|(bv, _)| value > bv) {
                best = Some((value, link.to));
            }
        }
        match best {
            Some((_, next)) => {
                visited[next] = true;
                nodes.push(next);
                state = next;
            }
            None => {
                return Route {
                    nodes,
                    delivered: false,
                }
            }
        }
    }
    Route {
        nodes,
        delivered: true,
    }
}
