//! Scenario models shared by the routing and scheduling problems.
//!
//! A scenario is a fully materialized, self-describing problem instance:
//! the graph or access windows, every sampled parameter, and the seed it
//! was drawn from. Algorithms never re-derive scenario content; they only
//! read it. This keeps experiment runs reproducible from the scenario file
//! alone.

mod graph;
mod tasking;

pub use graph::{
    synthesize_routing_scenario, Link, QueueBounds, RoutingScenario, RoutingSynthParams,
};
pub use tasking::{
    synthesize_resource_scenario, RateConfig, RateSampling, ResourceScenario,
    ResourceSynthParams, SampledRates,
};

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Position of a satellite in a walker-style grid: which orbital plane and
/// which slot within the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatCoord {
    pub plane: usize,
    pub slot: usize,
}

impl SatCoord {
    /// Flat node ID: `plane * sats_per_plane + slot`. Bijective with
    /// [`SatCoord::from_id`] for in-range coordinates.
    pub fn to_id(self, sats_per_plane: usize) -> usize {
        self.plane * sats_per_plane + self.slot
    }

    pub fn from_id(id: usize, sats_per_plane: usize) -> Self {
        SatCoord {
            plane: id / sats_per_plane,
            slot: id % sats_per_plane,
        }
    }
}

/// Undirected inter-satellite connectivity of a `+Grid` constellation:
/// each plane forms a ring (neighbors at `slot +/- 1 mod sats_per_plane`)
/// and same-slot satellites in adjacent planes are linked. Planes are not
/// wrapped, so the first and last plane have no cross-plane seam links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridTopology {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    /// Canonical edge list: `(u, v)` with `u < v`, sorted ascending.
    edges: Vec<(usize, usize)>,
}

impl GridTopology {
    pub fn n(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn undirected_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| u == node || v == node)
            .count()
    }
}

/// Build the `+Grid` topology for `num_planes x sats_per_plane` satellites.
///
/// Duplicate edges collapse: a two-satellite ring contributes a single link
/// rather than a doubled one, so tiny grids stay simple graphs.
pub fn build_grid_topology(num_planes: usize, sats_per_plane: usize) -> Result<GridTopology> {
    if num_planes < 2 || sats_per_plane < 2 {
        return Err(Error::InvalidScenario(alloc::format!(
            "grid dimensions must both be >= 2, got {num_planes} x {sats_per_plane}"
        )));
    }
    let id = |plane: usize, slot: usize| SatCoord { plane, slot }.to_id(sats_per_plane);
    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut add = |a: usize, b: usize| {
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    };
    for plane in 0..num_planes {
        for slot in 0..sats_per_plane {
            // Intra-plane ring. For sats_per_plane == 1 this is a self-loop
            // and is skipped; for == 2 both directions collapse to one edge.
            add(id(plane, slot), id(plane, (slot + 1) % sats_per_plane));
            // Cross-plane link to the same slot of the next plane; the last
            // plane has none (no seam wrap).
            if plane + 1 < num_planes {
                add(id(plane, slot), id(plane + 1, slot));
            }
        }
    }
    Ok(GridTopology {
        num_planes,
        sats_per_plane,
        edges: set.into_iter().collect(),
    })
}
