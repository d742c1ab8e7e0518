//! Choosing which atoms live in the AOD and giving each its own row and
//! column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::geometry::Point;
use crate::layout::DiscreteTopology;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AodError {
    #[error("AOD line for qubit {qubit} would leave the grid while deduplicating")]
    BoundaryExceeded { qubit: usize },
    #[error("qubit {qubit} is not part of the topology")]
    UnknownQubit { qubit: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitWeight {
    pub qubit: usize,
    /// CZ gates on this qubit whose partner is out of interaction range.
    pub out_of_range_count: u32,
    /// CZ gates on this qubit, in the dependency layering, during which it
    /// sits inside the blockade radius of another CZ of the same layer.
    pub interference_count: u32,
    pub score: f64,
}

/// Weights each qubit by how often it needs to move (0.99) and how often it
/// is blockaded (0.01), each normalized by its maximum over all qubits.
pub fn score_qubits(circuit: &Circuit, topo: &DiscreteTopology) -> Vec<QubitWeight> {
    let n = circuit.num_qubits;
    let pos = &topo.positions;
    let mut out_of_range = vec![0u32; n];
    let mut interference = vec![0u32; n];
    for (a, b) in circuit.gates.iter().filter_map(|g| g.pair()) {
        if !topo.in_range(pos[a], pos[b]) {
            out_of_range[a] += 1;
            out_of_range[b] += 1;
        }
    }
    for layer in circuit.nominal_layers() {
        let pairs: Vec<(usize, usize)> = layer
            .iter()
            .filter_map(|&id| circuit.gates[id].pair())
            .collect();
        for (k, &(a, b)) in pairs.iter().enumerate() {
            for q in [a, b] {
                let blocked = pairs.iter().enumerate().any(|(m, &(c, d))| {
                    m != k
                        && (pos[q].dist(pos[c]) <= topo.blockade_radius_um
                            || pos[q].dist(pos[d]) <= topo.blockade_radius_um)
                });
                if blocked {
                    interference[q] += 1;
                }
            }
        }
    }
    let norm = |counts: &[u32], q: usize| {
        let max = counts.iter().copied().max().unwrap_or(0);
        if max == 0 {
            0.0
        } else {
            counts[q] as f64 / max as f64
        }
    };
    (0..n)
        .map(|q| QubitWeight {
            qubit: q,
            out_of_range_count: out_of_range[q],
            interference_count: interference[q],
            score: 0.99 * norm(&out_of_range, q) + 0.01 * norm(&interference, q),
        })
        .collect()
}

/// Up to `aod_count` highest-scoring qubits, skipping zero scores; ties go
/// to the lower index. Returned in ascending qubit order.
pub fn select_aod_atoms(weights: &[QubitWeight], aod_count: usize) -> Vec<usize> {
    let mut ranked: Vec<&QubitWeight> = weights.iter().filter(|w| w.score > 0.0).collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.qubit.cmp(&b.qubit)));
    let mut chosen: Vec<usize> = ranked.iter().take(aod_count).map(|w| w.qubit).collect();
    chosen.sort_unstable();
    chosen
}

/// AOD lines and the atoms they hold. Row `i` sits at `row_coords[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AodGrid {
    pub row_coords: Vec<f64>,
    pub col_coords: Vec<f64>,
    /// qubit → (row index, column index)
    pub occupancy: BTreeMap<usize, (usize, usize)>,
}

impl AodGrid {
    pub fn empty() -> Self {
        AodGrid {
            row_coords: Vec::new(),
            col_coords: Vec::new(),
            occupancy: BTreeMap::new(),
        }
    }

    pub fn contains(&self, qubit: usize) -> bool {
        self.occupancy.contains_key(&qubit)
    }

    pub fn position(&self, qubit: usize) -> Option<Point> {
        self.occupancy
            .get(&qubit)
            .map(|&(r, c)| Point::new(self.col_coords[c], self.row_coords[r]))
    }

    /// Home positions of all qubits: AOD atoms at their line crossings, the
    /// rest at their lattice sites.
    pub fn home_positions(&self, topo: &DiscreteTopology) -> Vec<Point> {
        (0..topo.num_qubits())
            .map(|q| self.position(q).unwrap_or(topo.positions[q]))
            .collect()
    }
}

/// Spreads coordinates so consecutive values differ by at least `eps`,
/// moving later entries forward.
fn spread(base: &[f64], eps: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(base.len());
    for &b in base {
        let v = match out.last() {
            Some(&prev) if b < prev + eps => prev + eps,
            _ => b,
        };
        out.push(v);
    }
    out
}

/// Gives every selected atom its own AOD row and column at its site, then
/// shifts coinciding rows up and coinciding columns right by `min_sep`
/// until lines are at least that far apart. A row is pushed further up if
/// its atom would end up closer than `min_sep` to a static atom.
pub fn place_in_aod(selected: &[usize], topo: &DiscreteTopology) -> Result<AodGrid, AodError> {
    let eps = topo.grid.min_sep_um;
    let n = topo.num_qubits();
    if let Some(&q) = selected.iter().find(|&&q| q >= n) {
        return Err(AodError::UnknownQubit { qubit: q });
    }
    let mut in_aod = vec![false; n];
    for &q in selected {
        in_aod[q] = true;
    }
    let p = &topo.positions;
    let mut rows: Vec<usize> = selected.to_vec();
    rows.sort_by(|&a, &b| p[a].y.total_cmp(&p[b].y).then(a.cmp(&b)));
    let mut cols: Vec<usize> = selected.to_vec();
    cols.sort_by(|&a, &b| p[a].x.total_cmp(&p[b].x).then(a.cmp(&b)));
    let col_vals = spread(
        &cols.iter().map(|&q| topo.positions[q].x).collect::<Vec<_>>(),
        eps,
    );
    let mut x_of = vec![0.0; n];
    for (&q, &x) in cols.iter().zip(&col_vals) {
        x_of[q] = x;
    }
    let (_, xmax) = topo.grid.x_bounds();
    if let Some((&q, _)) = cols.iter().zip(&col_vals).find(|(_, &x)| x > xmax) {
        return Err(AodError::BoundaryExceeded { qubit: q });
    }
    let (_, ymax) = topo.grid.y_bounds();
    let mut row_base: Vec<f64> = rows.iter().map(|&q| topo.positions[q].y).collect();
    let statics: Vec<Point> = (0..n)
        .filter(|&q| !in_aod[q])
        .map(|q| topo.positions[q])
        .collect();
    let row_vals = loop {
        let vals = spread(&row_base, eps);
        if let Some(k) = vals.iter().position(|&v| v > ymax) {
            return Err(AodError::BoundaryExceeded { qubit: rows[k] });
        }
        // first row whose atom is too close to a static atom
        let clash = rows.iter().enumerate().find_map(|(k, &q)| {
            let y = vals[k];
            let lifted = clear_height(x_of[q], y, &statics, eps);
            (lifted > y).then_some((k, lifted))
        });
        match clash {
            None => break vals,
            Some((k, lifted)) => row_base[k] = lifted,
        }
    };
    let mut occupancy = BTreeMap::new();
    for (r, &q) in rows.iter().enumerate() {
        let c = cols.iter().position(|&cq| cq == q).expect("same selection");
        occupancy.insert(q, (r, c));
    }
    Ok(AodGrid {
        row_coords: row_vals,
        col_coords: col_vals,
        occupancy,
    })
}

/// Lowest y' ≥ y such that (x, y') keeps `sep` from every point.
fn clear_height(x: f64, y: f64, points: &[Point], sep: f64) -> f64 {
    let mut y = y;
    loop {
        let blocking = points
            .iter()
            .filter(|p| (p.x - x).abs() < sep)
            .map(|p| {
                let h = (sep * sep - (p.x - x).powi(2)).sqrt();
                (p.y - h, p.y + h)
            })
            .find(|&(lo, hi)| y > lo && y < hi);
        match blocking {
            Some((_, hi)) => y = hi,
            None => return y,
        }
    }
}
