//! Routing scenario: an inter-satellite link graph with per-edge propagation
//! latency and queueing-delay envelopes, plus one src/dst demand.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::build_grid_topology;
use crate::util::uniform_in;

/// Inclusive uniform envelope `[min_ms, max_ms]` for a link's queueing delay.
/// Queue delay on a traversal is drawn fresh from this interval each time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueBounds {
    pub min_ms: f64,
    pub max_ms: f64,
}

impl QueueBounds {
    /// Analytic mean of the uniform envelope, used by the queue-aware
    /// Dijkstra baseline.
    pub fn mean_ms(&self) -> f64 {
        0.5 * (self.min_ms + self.max_ms)
    }
}

/// One directed link out of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub to: usize,
    /// Propagation latency in milliseconds, strictly positive.
    pub prop_ms: f64,
    pub queue: QueueBounds,
}

/// A fully materialized routing problem: symmetric connectivity, per-directed-edge
/// parameters, and a single src -> dst demand.
///
/// Structural invariants enforced at construction: indices in range, no
/// self-loops, no duplicate directed edges, `(u,v)` present iff `(v,u)`
/// present, `prop_ms > 0`, `0 <= min_ms <= max_ms`, and `src != dst`.
/// Reachability of `dst` from `src` is checked by [`RoutingScenario::validate`]
/// (called when loading from files), not at construction, so tests can build
/// deliberately disconnected graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingScenario {
    n: usize,
    src: usize,
    dst: usize,
    rng_seed: u64,
    /// Adjacency lists sorted by successor ID.
    links: Vec<Vec<Link>>,
}

impl RoutingScenario {
    /// Build from a directed edge list `(from, to, prop_ms, queue)`.
    pub fn from_directed_edges<I>(
        n: usize,
        src: usize,
        dst: usize,
        rng_seed: u64,
        edges: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64, QueueBounds)>,
    {
        if n < 2 {
            return Err(Error::InvalidScenario(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        for (name, node) in [("src", src), ("dst", dst)] {
            if node >= n {
                return Err(Error::InvalidScenario(format!(
                    "{name} = {node} out of range for n = {n}"
                )));
            }
        }
        if src == dst {
            return Err(Error::InvalidScenario(format!("src = dst = {src}")));
        }
        let mut links: Vec<Vec<Link>> = alloc::vec![Vec::new(); n];
        for (from, to, prop_ms, queue) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidScenario(format!(
                    "edge ({from},{to}) out of range for n = {n}"
                )));
            }
            if from == to {
                return Err(Error::InvalidScenario(format!("self-loop at node {from}")));
            }
            if !(prop_ms.is_finite() && prop_ms > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "edge ({from},{to}): prop_ms must be finite and > 0, got {prop_ms}"
                )));
            }
            if !(queue.min_ms.is_finite()
                && queue.max_ms.is_finite()
                && 0.0 <= queue.min_ms
                && queue.min_ms <= queue.max_ms)
            {
                return Err(Error::InvalidScenario(format!(
                    "edge ({from},{to}): queue bounds must satisfy 0 <= min <= max, got ({}, {})",
                    queue.min_ms, queue.max_ms
                )));
            }
            if links[from].iter().any(|l| l.to == to) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate directed edge ({from},{to})"
                )));
            }
            links[from].push(Link { to, prop_ms, queue });
        }
        for from in 0..n {
            links[from].sort_unstable_by_key(|l| l.to);
            for link in &links[from] {
                if !links[link.to].iter().any(|back| back.to == from) {
                    return Err(Error::InvalidScenario(format!(
                        "edge ({from},{}) has no reverse edge",
                        link.to
                    )));
                }
            }
        }
        Ok(RoutingScenario {
            n,
            src,
            dst,
            rng_seed,
            links,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn src(&self) -> usize {
        self.src
    }

    pub fn dst(&self) -> usize {
        self.dst
    }

    /// Seed the scenario was synthesized from (informational for hand-built
    /// scenarios).
    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Outgoing links of `node`, sorted by successor ID.
    pub fn neighbors(&self, node: usize) -> Result<&[Link]> {
        self.links
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownNode { node, n: self.n })
    }

    /// Feasible forwarding actions from `state`: exactly its neighbors,
    /// ascending. Empty for isolated nodes.
    pub fn feasible_actions(&self, state: usize) -> Result<Vec<usize>> {
        Ok(self.neighbors(state)?.iter().map(|l| l.to).collect())
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.links
            .get(from)
            .is_some_and(|ls| ls.iter().any(|l| l.to == to))
    }

    pub fn link(&self, from: usize, to: usize) -> Result<&Link> {
        if from >= self.n {
            return Err(Error::UnknownNode {
                node: from,
                n: self.n,
            });
        }
        self.links[from]
            .iter()
            .find(|l| l.to == to)
            .ok_or(Error::MissingEdge { from, to })
    }

    /// All directed edges in canonical order (by `from`, then `to`).
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, &Link)> + '_ {
        self.links
            .iter()
            .enumerate()
            .flat_map(|(from, ls)| ls.iter().map(move |l| (from, l)))
    }

    /// True if `to` is reachable from `from`.
    pub fn path_exists(&self, from: usize, to: usize) -> bool {
        if from >= self.n || to >= self.n {
            return false;
        }
        let mut seen = alloc::vec![false; self.n];
        let mut stack = alloc::vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            for l in &self.links[u] {
                if !seen[l.to] {
                    seen[l.to] = true;
                    stack.push(l.to);
                }
            }
        }
        false
    }

    /// Full validation, including the demand being routable. Loaders call
    /// this after structural construction succeeds.
    pub fn validate(&self) -> Result<()> {
        if !self.path_exists(self.src, self.dst) {
            return Err(Error::InvalidScenario(format!(
                "dst {} unreachable from src {}",
                self.dst, self.src
            )));
        }
        Ok(())
    }
}

/// Parameters for [`synthesize_routing_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingSynthParams {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    /// Propagation latency envelope (ms); each undirected edge draws one
    /// value, mirrored in both directions.
    pub prop_latency_ms: (f64, f64),
    /// Queue-bound envelope (ms); each *directed* edge draws two values and
    /// sorts them into `(min, max)`.
    pub queue_envelope_ms: (f64, f64),
    pub src: usize,
    pub dst: usize,
    pub seed: u64,
}

impl RoutingSynthParams {
    fn validate(&self) -> Result<()> {
        let (plo, phi) = self.prop_latency_ms;
        if !(plo.is_finite() && phi.is_finite() && 0.0 < plo && plo <= phi) {
            return Err(Error::InvalidConfig(format!(
                "prop_latency_ms must satisfy 0 < lo <= hi, got ({plo}, {phi})"
            )));
        }
        let (qlo, qhi) = self.queue_envelope_ms;
        if !(qlo.is_finite() && qhi.is_finite() && 0.0 <= qlo && qlo <= qhi) {
            return Err(Error::InvalidConfig(format!(
                "queue_envelope_ms must satisfy 0 <= lo <= hi, got ({qlo}, {qhi})"
            )));
        }
        Ok(())
    }
}

/// Synthesize a `+Grid` routing scenario.
///
/// Draw order is fixed and documented so scenarios are reproducible across
/// versions: undirected edges are visited in canonical order; each visit
/// draws the shared propagation latency, then the `u->v` queue pair, then
/// the `v->u` queue pair (each pair sorted into `(min, max)`).
pub fn synthesize_routing_scenario(params: &RoutingSynthParams) -> Result<RoutingScenario> {
    params.validate()?;
    let grid = build_grid_topology(params.num_planes, params.sats_per_plane)?;
    let n = grid.n();
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(params.seed);
    let (plo, phi) = params.prop_latency_ms;
    let (qlo, qhi) = params.queue_envelope_ms;
    let draw_bounds = |rng: &mut ChaCha8Rng| {
        let a = uniform_in(rng, qlo, qhi);
        let b = uniform_in(rng, qlo, qhi);
        QueueBounds {
            min_ms: a.min(b),
            max_ms: a.max(b),
        }
    };
    let mut edges = Vec::with_capacity(grid.undirected_edges().len() * 2);
    for &(u, v) in grid.undirected_edges() {
        let prop_ms = uniform_in(&mut rng, plo, phi);
        let fwd = draw_bounds(&mut rng);
        let rev = draw_bounds(&mut rng);
        edges.push((u, v, prop_ms, fwd));
        edges.push((v, u, prop_ms, rev));
    }
    let scenario =
        RoutingScenario::from_directed_edges(n, params.src, params.dst, params.seed, edges)?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric(edges: &[(usize, usize, f64, QueueBounds)]) -> Vec<(usize, usize, f64, QueueBounds)> {
        let mut out = Vec::new();
        for &(u, v, p, q) in edges {
            out.push((u, v, p, q));
            out.push((v, u, p, q));
        }
        out
    }

    fn qb(min_ms: f64, max_ms: f64) -> QueueBounds {
        QueueBounds { min_ms, max_ms }
    }

    fn params_3x4() -> RoutingSynthParams {
        RoutingSynthParams {
            num_planes: 3,
            sats_per_plane: 4,
            prop_latency_ms: (1.0, 10.0),
            queue_envelope_ms: (0.0, 5.0),
            src: 0,
            dst: 11,
            seed: 7,
        }
    }

    #[test]
    fn feasible_actions_on_grid_corner() {
        let s = synthesize_routing_scenario(&RoutingSynthParams {
            num_planes: 2,
            sats_per_plane: 2,
            src: 0,
            dst: 3,
            ..params_3x4()
        })
        .unwrap();
        assert_eq!(s.feasible_actions(0).unwrap(), vec![1, 2]);
    }

    #[test]
    fn feasible_actions_isolated_node_is_empty() {
        let s = RoutingScenario::from_directed_edges(
            4,
            0,
            2,
            0,
            symmetric(&[(0, 1, 1.0, qb(0.0, 0.0)), (1, 2, 1.0, qb(0.0, 0.0))]),
        )
        .unwrap();
        assert_eq!(s.feasible_actions(3).unwrap(), Vec::<usize>::new());
        assert!(matches!(
            s.feasible_actions(4),
            Err(Error::UnknownNode { node: 4, n: 4 })
        ));
    }

    #[test]
    fn construction_rejects_structural_violations() {
        let ok = |edges: &[(usize, usize, f64, QueueBounds)]| {
            RoutingScenario::from_directed_edges(3, 0, 2, 0, edges.to_vec())
        };
        // Missing reverse edge.
        assert!(matches!(
            ok(&[(0, 1, 1.0, qb(0.0, 1.0))]),
            Err(Error::InvalidScenario(_))
        ));
        // Self-loop.
        assert!(ok(&symmetric(&[(1, 1, 1.0, qb(0.0, 1.0))])).is_err());
        // Bad queue bounds.
        assert!(ok(&symmetric(&[(0, 1, 1.0, qb(2.0, 1.0))])).is_err());
        assert!(ok(&symmetric(&[(0, 1, 1.0, qb(-0.5, 1.0))])).is_err());
        // Non-positive propagation latency.
        assert!(ok(&symmetric(&[(0, 1, 0.0, qb(0.0, 1.0))])).is_err());
        // Duplicate directed edge.
        assert!(ok(&[
            (0, 1, 1.0, qb(0.0, 1.0)),
            (1, 0, 1.0, qb(0.0, 1.0)),
            (0, 1, 2.0, qb(0.0, 1.0)),
        ])
        .is_err());
        // src == dst.
        assert!(
            RoutingScenario::from_directed_edges(3, 1, 1, 0, symmetric(&[(0, 1, 1.0, qb(0.0, 1.0))]))
                .is_err()
        );
    }

    #[test]
    fn validate_rejects_unreachable_dst() {
        let s = RoutingScenario::from_directed_edges(
            4,
            0,
            3,
            0,
            symmetric(&[(0, 1, 1.0, qb(0.0, 0.0)), (2, 3, 1.0, qb(0.0, 0.0))]),
        )
        .unwrap();
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let p = params_3x4();
        let a = synthesize_routing_scenario(&p).unwrap();
        let b = synthesize_routing_scenario(&p).unwrap();
        assert_eq!(a, b);
        let c = synthesize_routing_scenario(&RoutingSynthParams { seed: 8, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthesis_mirrors_propagation_latency() {
        let s = synthesize_routing_scenario(&params_3x4()).unwrap();
        for (u, link) in s.directed_edges() {
            let back = s.link(link.to, u).unwrap();
            assert_eq!(link.prop_ms, back.prop_ms);
        }
    }

    #[test]
    fn degenerate_queue_envelope_gives_zero_bounds() {
        let s = synthesize_routing_scenario(&RoutingSynthParams {
            queue_envelope_ms: (0.0, 0.0),
            ..params_3x4()
        })
        .unwrap();
        for (_, link) in s.directed_edges() {
            assert_eq!(link.queue, qb(0.0, 0.0));
        }
    }

    proptest! {
        #[test]
        fn synthesized_parameters_stay_in_envelopes(
            planes in 2usize..4,
            spp in 2usize..6,
            seed in 0u64..50,
        ) {
            let n = planes * spp;
            let p = RoutingSynthParams {
                num_planes: planes,
                sats_per_plane: spp,
                prop_latency_ms: (1.0, 10.0),
                queue_envelope_ms: (0.5, 5.0),
                src: 0,
                dst: n - 1,
                seed,
            };
            let s = synthesize_routing_scenario(&p).unwrap();
            prop_assert!(s.path_exists(0, n - 1));
            for (_, link) in s.directed_edges() {
                prop_assert!((1.0..10.0).contains(&link.prop_ms));
                prop_assert!(link.queue.min_ms >= 0.5 && link.queue.max_ms < 5.0);
                prop_assert!(link.queue.min_ms <= link.queue.max_ms);
            }
        }
    }
}
