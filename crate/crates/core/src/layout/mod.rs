//! Initial qubit placement: interaction graph, continuous annealed layout,
//! interaction radius and snapping onto the atom lattice.

mod anneal;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::config::{AnnealConfig, GridSpec};
use crate::geometry::{max_mst_edge, Point};

pub use anneal::{anneal_with_history, Objective};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("{qubits} qubits do not fit on a grid of {sites} sites")]
    InsufficientCapacity { qubits: usize, sites: usize },
    #[error("placement has {got} coordinates but the circuit has {want} qubits")]
    PlacementMismatch { got: usize, want: usize },
}

/// CZ counts per unordered qubit pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionGraph {
    pub num_qubits: usize,
    /// Keyed by `(i, j)` with `i < j`.
    pub edges: BTreeMap<(usize, usize), u32>,
}

impl InteractionGraph {
    pub fn build(circuit: &Circuit) -> Self {
        let mut edges = BTreeMap::new();
        for (a, b) in circuit.gates.iter().filter_map(|g| g.pair()) {
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        InteractionGraph {
            num_qubits: circuit.num_qubits,
            edges,
        }
    }

    pub fn weight(&self, a: usize, b: usize) -> u32 {
        self.edges.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u32 {
        self.edges.values().sum()
    }

    /// Sum of the weights of edges touching `q`.
    pub fn strength(&self, q: usize) -> u32 {
        self.edges
            .iter()
            .filter(|((a, b), _)| *a == q || *b == q)
            .map(|(_, w)| *w)
            .sum()
    }
}

/// Qubit coordinates in the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPlacement {
    pub coords: Vec<Point>,
    pub objective_value: f64,
}

/// Anneals a placement for `graph`; deterministic in `seed`.
pub fn anneal_placement(
    graph: &InteractionGraph,
    seed: u64,
    config: &AnnealConfig,
) -> ContinuousPlacement {
    anneal_with_history(graph, seed, config).0
}

/// Smallest radius at which the unit-disk graph over `points` is connected.
pub fn select_radius(points: &[Point]) -> f64 {
    max_mst_edge(points)
}

/// Qubits pinned to lattice sites, with the radii derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTopology {
    pub grid: GridSpec,
    /// (col, row) per qubit.
    pub sites: Vec<(usize, usize)>,
    /// Physical position per qubit, µm.
    pub positions: Vec<Point>,
    pub interaction_radius_um: f64,
    pub blockade_radius_um: f64,
}

impl DiscreteTopology {
    /// Builds a topology from explicit site assignments. Radii follow the
    /// usual rule: the minimal connecting radius, blockade `factor` times it.
    pub fn from_sites(grid: GridSpec, sites: Vec<(usize, usize)>, blockade_factor: f64) -> Self {
        let positions: Vec<Point> = sites
            .iter()
            .map(|&(c, r)| grid.site_position(c, r))
            .collect();
        let radius = select_radius(&positions);
        DiscreteTopology {
            grid,
            sites,
            positions,
            interaction_radius_um: radius,
            blockade_radius_um: blockade_factor * radius,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.sites.len()
    }

    /// Interaction test with a small tolerance for rounding.
    pub fn in_range(&self, a: Point, b: Point) -> bool {
        a.dist(b) <= self.interaction_radius_um + 1e-9
    }
}

/// Snaps a continuous placement onto the lattice. Qubits are placed in order
/// of decreasing total edge weight (lower index first on ties), each on the
/// free site nearest to its scaled coordinate (lower `row·sites_x + col`
/// first on ties).
pub fn discretize(
    placement: &ContinuousPlacement,
    graph: &InteractionGraph,
    grid: GridSpec,
    blockade_factor: f64,
) -> Result<DiscreteTopology, LayoutError> {
    let n = placement.coords.len();
    if n != graph.num_qubits {
        return Err(LayoutError::PlacementMismatch {
            got: n,
            want: graph.num_qubits,
        });
    }
    if n > grid.site_count() {
        return Err(LayoutError::InsufficientCapacity {
            qubits: n,
            sites: grid.site_count(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&q| (std::cmp::Reverse(graph.strength(q)), q));
    let mut taken = vec![false; grid.site_count()];
    let mut sites = vec![(0, 0); n];
    let sx = (grid.sites_x - 1) as f64;
    let sy = (grid.sites_y - 1) as f64;
    for q in order {
        let p = placement.coords[q];
        let (tx, ty) = (p.x.clamp(0.0, 1.0) * sx, p.y.clamp(0.0, 1.0) * sy);
        let mut best: Option<(f64, usize)> = None;
        for (idx, _) in taken.iter().enumerate().filter(|(_, t)| !**t) {
            let (c, r) = (idx % grid.sites_x, idx / grid.sites_x);
            let d = (c as f64 - tx).powi(2) + (r as f64 - ty).powi(2);
            // strict comparison keeps the lower index on ties
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, idx));
            }
        }
        let idx = best.expect("capacity checked").1;
        taken[idx] = true;
        sites[q] = (idx % grid.sites_x, idx / grid.sites_x);
    }
    Ok(DiscreteTopology::from_sites(grid, sites, blockade_factor))
}
