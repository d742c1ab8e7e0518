//! Layer-by-layer scheduling with atom movement.
//!
//! Each iteration:
//!
//! 1. collect the next ready gate of every qubit (a CZ once);
//! 2. for out-of-range CZs, perform at most one move-into-range; further
//!    movable CZs wait for a later layer, and pairs of static atoms are
//!    handled by a trap change;
//! 3. shuffle the layer and drop any CZ that sits inside the blockade
//!    radius of a CZ kept earlier in the shuffled order;
//! 4. execute, then return moved atoms to their home positions.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aod::AodGrid;
use crate::circuit::{Circuit, GateId};
use crate::config::HardwareParams;
use crate::geometry::Point;
use crate::hardware::{gate_phase_us, trap_change_us};
use crate::layout::DiscreteTopology;
use crate::movement::{Frame, Leg, Move, MoveError, Planner};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("configuration exhausted at gate {gate} (source line {line}): {reason}")]
    ConfigurationExhausted {
        gate: GateId,
        line: usize,
        reason: String,
    },
}

/// One atom's round trip in the transient tweezer pair. `qubit` is either
/// static, and picked out of its SLM trap at `slm_site`, or AOD-held and
/// handed over from its own lines, which stay parked meanwhile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapChange {
    pub gate: GateId,
    pub qubit: usize,
    pub partner: usize,
    pub slm_site: (usize, usize),
    pub origin: Point,
    pub transient_aod: (usize, usize),
    pub legs: Vec<Leg>,
    pub max_distance_um: f64,
    pub duration_us: f64,
}

/// Where the two atoms of a CZ were when it fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzSite {
    pub gate: GateId,
    pub positions: [Point; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Executed gates in their shuffled order.
    pub gates: Vec<GateId>,
    pub movement: Option<Move>,
    pub trap_changes: Vec<TrapChange>,
    /// Gates that were ready but pushed back to a later layer.
    pub ejected: Vec<GateId>,
    pub cz_sites: Vec<CzSite>,
    pub homed: bool,
    pub max_distance_um: f64,
    pub move_time_us: f64,
    pub gate_time_us: f64,
    pub homing_time_us: f64,
    pub trap_change_time_us: f64,
    pub duration_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub layers: Vec<Layer>,
    pub total_runtime_us: f64,
    pub cz_count: usize,
    pub u3_count: usize,
    pub swap_count: usize,
    pub trap_change_count: usize,
    pub trap_change_cz_fraction: f64,
    /// Depth of the dependency-only layering, before blockade serialization.
    pub dependency_layer_count: usize,
    pub rng_seed: u64,
    pub homing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleOptions {
    pub seed: u64,
    pub homing: bool,
    pub transient_aod_pairs: usize,
    pub recursion_limit: usize,
}

/// Next ready gate of every qubit, each gate once, in qubit order.
pub fn build_layer(circuit: &Circuit, executed: &HashSet<GateId>) -> Vec<GateId> {
    let mut seen = HashSet::new();
    (0..circuit.num_qubits)
        .filter_map(|q| circuit.next_ready_gate(executed, q))
        .filter(|g| seen.insert(g.id))
        .map(|g| g.id)
        .collect()
}

/// In-place Fisher–Yates shuffle drawing from `rng`.
pub fn fisher_yates<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Keep-first blockade filter. `sites` lists CZs in scan order; a CZ is
/// dropped if any of its atoms lies within `blockade_radius` of an atom of a
/// CZ already kept. Returns (kept, dropped) gate ids.
pub fn enforce_blockade(sites: &[CzSite], blockade_radius: f64) -> (Vec<GateId>, Vec<GateId>) {
    let mut kept: Vec<&CzSite> = Vec::new();
    let mut dropped = Vec::new();
    for s in sites {
        let clash = kept.iter().any(|k| {
            s.positions
                .iter()
                .any(|p| k.positions.iter().any(|o| p.dist(*o) <= blockade_radius))
        });
        if clash {
            dropped.push(s.gate);
        } else {
            kept.push(s);
        }
    }
    (kept.into_iter().map(|s| s.gate).collect(), dropped)
}

/// Seeded generator for the layer shuffles; stream 1 keeps it independent
/// of the placement annealer, which uses stream 0 of the same seed.
pub fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

enum Plan {
    Main,
    Trap(TrapChange, [Point; 2]),
}

/// Schedules `circuit` on the given layout.
pub fn compile(
    circuit: &Circuit,
    topo: &DiscreteTopology,
    aod: &AodGrid,
    params: &HardwareParams,
    opts: ScheduleOptions,
) -> Result<Schedule, ScheduleError> {
    let planner = Planner::new(topo, opts.recursion_limit);
    let mut rng = shuffle_rng(opts.seed);
    let mut frame = Frame::home(topo, aod);
    let mut executed: HashSet<GateId> = HashSet::new();
    let mut layers = Vec::new();
    let exhausted = |gate: GateId, reason: String| ScheduleError::ConfigurationExhausted {
        gate,
        line: circuit.gates[gate].source_line,
        reason,
    };

    while executed.len() < circuit.gates.len() {
        let candidate = build_layer(circuit, &executed);
        let mut ejected = Vec::new();
        let mut failures: Vec<(GateId, String)> = Vec::new();
        let mut main_cz = Vec::new();
        let mut trap_cz = Vec::new();
        let mut movement: Option<Move> = None;
        for &id in &candidate {
            let Some((a, b)) = circuit.gates[id].pair() else {
                continue;
            };
            if planner.in_range(frame.positions[a], frame.positions[b]) {
                main_cz.push(id);
                continue;
            }
            if !frame.mobile[a] && !frame.mobile[b] {
                trap_cz.push(id);
                continue;
            }
            if movement.is_some() {
                ejected.push(id);
                continue;
            }
            movement = [(a, b), (b, a)]
                .into_iter()
                .filter(|&(mover, _)| frame.mobile[mover])
                .find_map(|(mover, anchor)| planner.move_into_range(&frame, mover, anchor).ok());
            if movement.is_some() {
                main_cz.push(id);
            } else {
                trap_cz.push(id);
            }
        }

        let mut mobile_frame = frame.clone();
        if let Some(m) = &movement {
            mobile_frame.apply_all(&m.legs);
        }
        // pushes can carry an atom of another pair out of range
        main_cz.retain(|&id| {
            let (a, b) = circuit.gates[id].pair().expect("CZ");
            let ok = planner.in_range(mobile_frame.positions[a], mobile_frame.positions[b]);
            if !ok {
                ejected.push(id);
            }
            ok
        });
        let rest_frame = if opts.homing { frame.clone() } else { mobile_frame.clone() };

        let mut plans: Vec<(GateId, Plan)> = main_cz.iter().map(|&id| (id, Plan::Main)).collect();
        for &id in &trap_cz {
            let (a, b) = circuit.gates[id].pair().expect("CZ");
            let mut last_err = None;
            let mut done = false;
            // a static operand is the natural one to pick up
            let mut attempts = [(a, b), (b, a)];
            attempts.sort_by_key(|&(carried, _)| rest_frame.mobile[carried]);
            for (carried, partner) in attempts {
                match planner.carry(&rest_frame, carried, partner, opts.transient_aod_pairs) {
                    Ok(ex) => {
                        let duration = trap_change_us(params, ex.max_distance_um);
                        let (pc, pp) = ex.gate_positions;
                        plans.push((
                            id,
                            Plan::Trap(
                                TrapChange {
                                    gate: id,
                                    qubit: carried,
                                    partner,
                                    slm_site: topo.sites[carried],
                                    origin: ex.origin,
                                    transient_aod: ex.transient_aod,
                                    legs: ex.legs,
                                    max_distance_um: ex.max_distance_um,
                                    duration_us: duration,
                                },
                                [pc, pp],
                            ),
                        ));
                        done = true;
                        break;
                    }
                    Err(MoveError::NoTransientAod) => {
                        return Err(exhausted(id, MoveError::NoTransientAod.to_string()));
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            if !done {
                ejected.push(id);
                failures.push((id, last_err.map_or_else(String::new, |e| e.to_string())));
            }
        }

        // shuffle everything that is still scheduled, then scan for blockade
        let mut order: Vec<GateId> = candidate
            .iter()
            .copied()
            .filter(|id| circuit.gates[*id].is_u3() || plans.iter().any(|(p, _)| p == id))
            .collect();
        fisher_yates(&mut order, &mut rng);
        let site_of = |id: GateId| -> CzSite {
            let (a, b) = circuit.gates[id].pair().expect("CZ");
            let positions = match plans.iter().find(|(p, _)| *p == id).map(|(_, plan)| plan) {
                Some(Plan::Trap(tc, [pc, pp])) if tc.qubit == a => [*pc, *pp],
                Some(Plan::Trap(_, [pc, pp])) => [*pp, *pc],
                _ => [mobile_frame.positions[a], mobile_frame.positions[b]],
            };
            CzSite { gate: id, positions }
        };
        let sites: Vec<CzSite> = order
            .iter()
            .filter(|id| circuit.gates[**id].is_cz())
            .map(|&id| site_of(id))
            .collect();
        let (kept_cz, blocked) = enforce_blockade(&sites, topo.blockade_radius_um);
        ejected.extend(blocked);
        let gates: Vec<GateId> = order
            .iter()
            .copied()
            .filter(|id| circuit.gates[*id].is_u3() || kept_cz.contains(id))
            .collect();
        if gates.is_empty() {
            let (gate, reason) = failures
                .into_iter()
                .next()
                .unwrap_or((candidate[0], "no gate of the layer could run".into()));
            return Err(exhausted(gate, reason));
        }
        let cz_sites: Vec<CzSite> = sites.into_iter().filter(|s| kept_cz.contains(&s.gate)).collect();
        let trap_changes: Vec<TrapChange> = plans
            .into_iter()
            .filter_map(|(id, plan)| match plan {
                Plan::Trap(tc, _) if kept_cz.contains(&id) => Some(tc),
                _ => None,
            })
            .collect();

        let max_distance_um = movement.as_ref().map_or(0.0, |m| m.max_distance_um);
        let move_time_us = params.move_time_us(max_distance_um);
        let homing_time_us = if opts.homing { move_time_us } else { 0.0 };
        let has_u3 = gates.iter().any(|&id| circuit.gates[id].is_u3());
        let gate_time_us = gate_phase_us(params, has_u3, !kept_cz.is_empty());
        let trap_change_time_us: f64 = trap_changes.iter().map(|t| t.duration_us).sum();
        let duration_us = move_time_us + gate_time_us + homing_time_us + trap_change_time_us;

        executed.extend(gates.iter().copied());
        ejected.sort_unstable();
        layers.push(Layer {
            gates,
            movement,
            trap_changes,
            ejected,
            cz_sites,
            homed: opts.homing,
            max_distance_um,
            move_time_us,
            gate_time_us,
            homing_time_us,
            trap_change_time_us,
            duration_us,
        });
        frame = rest_frame;
    }

    let cz_count = circuit.cz_count();
    let trap_change_count: usize = layers.iter().map(|l| l.trap_changes.len()).sum();
    Ok(Schedule {
        total_runtime_us: layers.iter().map(|l| l.duration_us).sum(),
        layers,
        cz_count,
        u3_count: circuit.u3_count(),
        swap_count: 0,
        trap_change_count,
        trap_change_cz_fraction: if cz_count == 0 {
            0.0
        } else {
            trap_change_count as f64 / cz_count as f64
        },
        dependency_layer_count: circuit.nominal_layers().len(),
        rng_seed: opts.seed,
        homing: opts.homing,
    })
}
