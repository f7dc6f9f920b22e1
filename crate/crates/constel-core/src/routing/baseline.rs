//! Deterministic shortest-path baselines and an exhaustive reference oracle.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::routing::Route;
use crate::scenario::{Link, RoutingScenario};

/// Edge weighting for the Dijkstra baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Propagation latency only — no traffic awareness.
    Plain,
    /// Propagation plus the analytic mean queueing delay (privileged
    /// knowledge of every link's envelope).
    MeanQueue,
}

fn edge_weight(link: &Link, mode: WeightMode) -> f64 {
    match mode {
        WeightMode::Plain => link.prop_ms,
        WeightMode::MeanQueue => link.prop_ms + link.queue.mean_ms(),
    }
}

/// Min-heap key ordered by distance, then node ID.
#[derive(Debug, PartialEq)]
struct HeapKey {
    dist: f64,
    node: usize,
}

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we want smallest first.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Shortest path from src to dst under the selected weights, ties broken by
/// the lexicographically smallest node sequence.
///
/// Implementation detail that matters for testability: cost-to-go values are
/// computed backward from dst, so every path cost is the right-fold
/// `w1 + (w2 + (... + wk))`. The exhaustive oracle folds the same way, which
/// makes the equality checks exact in floating point, with no tolerance.
pub fn dijkstra(scenario: &RoutingScenario, mode: WeightMode) -> Result<Route> {
    let n = scenario.n();
    let (src, dst) = (scenario.src(), scenario.dst());
    let mut cost_to_go = alloc::vec![f64::INFINITY; n];
    cost_to_go[dst] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapKey {
        dist: 0.0,
        node: dst,
    });
    while let Some(HeapKey { dist, node: v }) = heap.pop() {
        if dist > cost_to_go[v] {
            continue; // stale entry
        }
        // Relax incoming edges (u -> v); the edge set is symmetric, so the
        // predecessors of v are exactly its neighbors, but the weight is
        // read off the directed u -> v link.
        for link in scenario.neighbors(v)? {
            let u = link.to;
            let w = edge_weight(scenario.link(u, v)?, mode);
            let candidate = w + cost_to_go[v];
            if candidate < cost_to_go[u] {
                cost_to_go[u] = candidate;
                heap.push(HeapKey {
                    dist: candidate,
                    node: u,
                });
            }
        }
    }
    if !cost_to_go[src].is_finite() {
        return Err(Error::NoRoute { src, dst });
    }
    // Greedy walk: at u take the smallest-ID successor on a shortest path,
    // i.e. with w(u,v) + cost_to_go[v] == cost_to_go[u]. The argmin used to
    // set cost_to_go[u] satisfies this exactly, so the walk cannot strand.
    let mut nodes = alloc::vec![src];
    let mut u = src;
    while u != dst {
        let mut next = None;
        for link in scenario.neighbors(u)? {
            if edge_weight(link, mode) + cost_to_go[link.to] == cost_to_go[u] {
                next = Some(link.to);
                break;
            }
        }
        let v = next.ok_or_else(|| {
            Error::BrokenRoute("no successor achieves the optimal cost-to-go".into())
        })?;
        nodes.push(v);
        if nodes.len() > n {
            return Err(Error::BrokenRoute(
                "optimal-path walk exceeded node count".into(),
            ));
        }
        u = v;
    }
    Ok(Route {
        nodes,
        delivered: true,
    })
}

/// Exhaustive reference: enumerate *all* simple src-dst paths and return the
/// minimum-weight one (ties to the lexicographically smallest sequence).
/// Exponential — intended as a validation oracle on graphs of a dozen nodes,
/// never for production routing.
pub fn exhaustive_best_route(scenario: &RoutingScenario, mode: WeightMode) -> Result<Route> {
    struct Search<'s> {
        scenario: &'s RoutingScenario,
        mode: WeightMode,
        visited: Vec<bool>,
        path: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }
    impl Search<'_> {
        #[allow(clippy::assign_op_pattern)] // spelled as the right-fold it is
        fn path_weight(&self) -> f64 {
            // Right-fold to match dijkstra's backward accumulation exactly.
            let mut acc = 0.0;
            for pair in self.path.windows(2).rev() {
                let link = self.scenario.link(pair[0], pair[1]).expect("walked edge");
                acc = edge_weight(link, self.mode) + acc;
            }
            acc
        }
        fn dfs(&mut self, u: usize) {
            if u == self.scenario.dst() {
                let w = self.path_weight();
                let better = match &self.best {
                    None => true,
                    Some((bw, bnodes)) => w < *bw || (w == *bw && self.path < *bnodes),
                };
                if better {
                    self.best = Some((w, self.path.clone()));
                }
                return;
            }
            let successors: Vec<usize> = self
                .scenario
                .neighbors(u)
                .expect("valid node")
                .iter()
                .map(|l| l.to)
                .collect();
            for v in successors {
                if !self.visited[v] {
                    self.visited[v] = true;
                    self.path.push(v);
                    self.dfs(v);
                    self.path.pop();
                    self.visited[v] = false;
                }
            }
        }
    }
    let mut search = Search {
        scenario,
        mode,
        visited: alloc::vec![false; scenario.n()],
        path: alloc::vec![scenario.src()],
        best: None,
    };
    search.visited[scenario.src()] = true;
    search.dfs(scenario.src());
    match search.best {
        Some((_, nodes)) => Ok(Route {
            nodes,
            delivered: true,
        }),
        None => Err(Error::NoRoute {
            src: scenario.src(),
            dst: scenario.dst(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::testgraph::{qb, undirected};
    use crate::scenario::QueueBounds;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_plain_prefers_two_cheap_hops() {
        let s = undirected(
            3,
            0,
            2,
            &[
                (0, 1, 1.0, 0.0, 0.0),
                (1, 2, 1.0, 0.0, 0.0),
                (0, 2, 3.0, 0.0, 0.0),
            ],
        );
        let route = dijkstra(&s, WeightMode::Plain).unwrap();
        assert_eq!(route.nodes, vec![0, 1, 2]);
    }

    #[test]
    fn triangle_mean_queue_prefers_direct_edge() {
        // Mean queue 2 on both of node 1's links makes the relay cost
        // 1+2+1+2 = 6, beaten by the direct 3 + 0.
        let s = undirected(
            3,
            0,
            2,
            &[
                (0, 1, 1.0, 2.0, 2.0),
                (1, 2, 1.0, 2.0, 2.0),
                (0, 2, 3.0, 0.0, 0.0),
            ],
        );
        assert_eq!(dijkstra(&s, WeightMode::MeanQueue).unwrap().nodes, vec![0, 2]);
        assert_eq!(dijkstra(&s, WeightMode::Plain).unwrap().nodes, vec![0, 1, 2]);
    }

    #[test]
    fn dominant_direct_edge_wins_in_both_modes() {
        let s = undirected(
            3,
            0,
            1,
            &[(0, 1, 1.0, 0.0, 0.0), (0, 2, 5.0, 0.0, 0.0), (1, 2, 5.0, 0.0, 0.0)],
        );
        for mode in [WeightMode::Plain, WeightMode::MeanQueue] {
            assert_eq!(dijkstra(&s, mode).unwrap().nodes, vec![0, 1]);
        }
    }

    #[test]
    fn equal_weight_paths_tie_break_lexicographically() {
        // Square with two weight-2 paths; [0,1,3] beats [0,2,3].
        let s = undirected(
            4,
            0,
            3,
            &[
                (0, 1, 1.0, 0.0, 0.0),
                (1, 3, 1.0, 0.0, 0.0),
                (0, 2, 1.0, 0.0, 0.0),
                (2, 3, 1.0, 0.0, 0.0),
            ],
        );
        for mode in [WeightMode::Plain, WeightMode::MeanQueue] {
            assert_eq!(dijkstra(&s, mode).unwrap().nodes, vec![0, 1, 3]);
            assert_eq!(exhaustive_best_route(&s, mode).unwrap().nodes, vec![0, 1, 3]);
        }
    }

    #[test]
    fn unreachable_destination_is_a_no_route_error() {
        let s = crate::scenario::RoutingScenario::from_directed_edges(
            4,
            0,
            3,
            0,
            vec![
                (0, 1, 1.0, qb(0.0, 0.0)),
                (1, 0, 1.0, qb(0.0, 0.0)),
                (2, 3, 1.0, qb(0.0, 0.0)),
                (3, 2, 1.0, qb(0.0, 0.0)),
            ],
        )
        .unwrap();
        assert!(matches!(
            dijkstra(&s, WeightMode::Plain),
            Err(Error::NoRoute { src: 0, dst: 3 })
        ));
        assert!(matches!(
            exhaustive_best_route(&s, WeightMode::Plain),
            Err(Error::NoRoute { .. })
        ));
    }

    /// Random connected graph: a uniform spanning-tree skeleton plus a few
    /// extra edges, with per-direction queue bounds.
    pub(crate) fn random_connected(
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> crate::scenario::RoutingScenario {
        let mut undirected_edges = alloc::collections::BTreeSet::new();
        for v in 1..n {
            let u = rng.gen_range(0..v);
            undirected_edges.insert((u, v));
        }
        for _ in 0..rng.gen_range(0..=4usize) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                undirected_edges.insert((a.min(b), a.max(b)));
            }
        }
        let mut directed = Vec::new();
        for (u, v) in undirected_edges {
            let prop = rng.gen_range(1.0..10.0);
            let mut bounds = || {
                let a: f64 = rng.gen_range(0.0..5.0);
                let b: f64 = rng.gen_range(0.0..5.0);
                QueueBounds {
                    min_ms: a.min(b),
                    max_ms: a.max(b),
                }
            };
            directed.push((u, v, prop, bounds()));
            directed.push((v, u, prop, bounds()));
        }
        crate::scenario::RoutingScenario::from_directed_edges(n, 0, n - 1, 0, directed).unwrap()
    }

    #[test]
    fn dijkstra_matches_exhaustive_oracle_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xD1D5);
        for _ in 0..60 {
            let n = rng.gen_range(4..=12);
            let s = random_connected(n, &mut rng);
            for mode in [WeightMode::Plain, WeightMode::MeanQueue] {
                let fast = dijkstra(&s, mode).unwrap();
                let brute = exhaustive_best_route(&s, mode).unwrap();
                assert_eq!(fast.nodes, brute.nodes, "mode {mode:?}, n {n}");
            }
        }
    }

    #[test]
    fn mean_queue_route_has_no_worse_expected_latency() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..40 {
            let n = rng.gen_range(4..=12);
            let s = random_connected(n, &mut rng);
            let plain = dijkstra(&s, WeightMode::Plain).unwrap();
            let mq = dijkstra(&s, WeightMode::MeanQueue).unwrap();
            let expected = |r: &Route| crate::routing::route_expected_latency(&s, &r.nodes).unwrap();
            assert!(expected(&mq) <= expected(&plain) + 1e-9);
        }
    }
}
