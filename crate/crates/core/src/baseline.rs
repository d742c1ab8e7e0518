//! Static-layout router used as the comparison point: no atom ever moves,
//! and out-of-range CZ partners are brought together with SWAP chains.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind};
use crate::layout::DiscreteTopology;

/// A circuit over physical atoms with SWAPs expanded into U3/CZ gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedCircuit {
    /// Gates act on atom indices; atom `i` sits at `topo.positions[i]`.
    pub circuit: Circuit,
    pub swap_count: usize,
    pub original_cz_count: usize,
    pub cz_count_total: usize,
    /// Logical qubit → atom after the last gate.
    pub final_mapping: Vec<usize>,
}

/// Adjacency lists of the unit-disk graph at the interaction radius,
/// sorted by atom index.
pub fn connectivity(topo: &DiscreteTopology) -> Vec<Vec<usize>> {
    let n = topo.num_qubits();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && topo.in_range(topo.positions[i], topo.positions[j]))
                .collect()
        })
        .collect()
}

/// Hop counts from `from` to every atom; `usize::MAX` when unreachable.
pub fn bfs_distances(adj: &[Vec<usize>], from: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Shortest path from `a` to `b`, taking the lowest-index neighbour at each
/// step among those one hop closer to `b`.
pub fn shortest_path(adj: &[Vec<usize>], a: usize, b: usize) -> Option<Vec<usize>> {
    let dist = bfs_distances(adj, b);
    if dist[a] == usize::MAX {
        return None;
    }
    let mut path = vec![a];
    let mut v = a;
    while v != b {
        v = *adj[v].iter().find(|&&w| dist[w] + 1 == dist[v])?;
        path.push(v);
    }
    Some(path)
}

/// Appends SWAP(a, b) as three CX gates, each written H·CZ·H on its target.
fn push_swap(c: &mut Circuit, a: usize, b: usize) {
    for (ctrl, tgt) in [(a, b), (b, a), (a, b)] {
        c.u3(tgt, PI / 2.0, 0.0, PI);
        c.cz(ctrl, tgt);
        c.u3(tgt, PI / 2.0, 0.0, PI);
    }
}

/// Routes `circuit` on the static topology starting from the identity
/// mapping. Each out-of-range CZ walks its first operand along a shortest
/// path until it neighbours the second.
///
/// Panics if the unit-disk graph is disconnected, which the layout rules
/// exclude.
pub fn route_with_swaps(circuit: &Circuit, topo: &DiscreteTopology) -> RoutedCircuit {
    let n = circuit.num_qubits;
    let adj = connectivity(topo);
    let mut phys: Vec<usize> = (0..n).collect();
    let mut logical: Vec<usize> = (0..n).collect();
    let mut out = Circuit::new(n);
    let mut swaps = 0;
    for g in &circuit.gates {
        match g.kind {
            GateKind::U3 { .. } => {
                out.push(g.kind, vec![phys[g.operands[0]]], g.source_line);
            }
            GateKind::CZ => {
                let (pa, pb) = (phys[g.operands[0]], phys[g.operands[1]]);
                let path = shortest_path(&adj, pa, pb).expect("unit-disk graph is connected");
                for w in path[..path.len() - 1].windows(2) {
                    push_swap(&mut out, w[0], w[1]);
                    swaps += 1;
                    let (la, lb) = (logical[w[0]], logical[w[1]]);
                    logical.swap(w[0], w[1]);
                    phys[la] = w[1];
                    phys[lb] = w[0];
                }
                out.push(GateKind::CZ, vec![phys[g.operands[0]], pb], g.source_line);
            }
        }
    }
    RoutedCircuit {
        cz_count_total: out.cz_count(),
        circuit: out,
        swap_count: swaps,
        original_cz_count: circuit.cz_count(),
        final_mapping: phys,
    }
}
