//! Independent replay of a schedule against the physical constraints.
//!
//! The checker shares only the plain data types with the planner. Every leg
//! is replayed from the home configuration and checked continuously: the
//! closest approach of every pair of atoms over the leg (exact, since atoms
//! move linearly and simultaneously), line ordering at the leg ends (gaps
//! interpolate linearly so the ends suffice), and grid bounds.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::aod::AodGrid;
use crate::circuit::{Circuit, GateId};
use crate::config::HardwareParams;
use crate::geometry::{min_distance_during, segment_point_distance, Point};
use crate::hardware::{gate_phase_us, trap_change_us};
use crate::layout::DiscreteTopology;
use crate::movement::{reverse_legs, Axis, Frame, Leg, LINE_GAP_UM, TOLERANCE};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Separation,
    Ordering,
    Bounds,
    LegMismatch,
    Depth,
    OutOfRange,
    SiteMismatch,
    TrapChange,
    Blockade,
    Homing,
    Dependency,
    Accounting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub layer: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "layer {}: {:?}: {}", self.layer, self.kind, self.detail)
    }
}

/// Replays `schedule` and returns every violation found; empty means valid.
pub fn validate_schedule(
    schedule: &Schedule,
    circuit: &Circuit,
    topo: &DiscreteTopology,
    aod: &AodGrid,
    params: &HardwareParams,
    recursion_limit: usize,
) -> Vec<Violation> {
    let mut v = Checker {
        topo,
        out: Vec::new(),
        layer: 0,
    };
    let home = Frame::home(topo, aod);
    v.check_static(&home, "home configuration");
    let mut frame = home.clone();
    let mut executed: HashSet<GateId> = HashSet::new();
    let mut runtime = 0.0;

    for (li, layer) in schedule.layers.iter().enumerate() {
        v.layer = li;
        v.check_dependencies(circuit, &executed, &layer.gates);
        let pre = frame.clone();

        if let Some(m) = &layer.movement {
            if m.depth > recursion_limit {
                v.push(ViolationKind::Depth, format!("depth {} over {recursion_limit}", m.depth));
            }
            if frame.positions[m.target_qubit] != m.from {
                v.push(ViolationKind::LegMismatch, format!("move of q{} starts elsewhere", m.target_qubit));
            }
            v.replay(&mut frame, &m.legs, "move");
            if frame.positions[m.target_qubit] != m.to {
                v.push(ViolationKind::LegMismatch, format!("move of q{} ends elsewhere", m.target_qubit));
            }
        }
        let mobile = frame.clone();
        let max_distance = net_displacement(&pre, &mobile);
        if (max_distance - layer.max_distance_um).abs() > 1e-9 {
            v.push(
                ViolationKind::Accounting,
                format!("max distance {} reported as {}", max_distance, layer.max_distance_um),
            );
        }

        let trap_gates: HashSet<GateId> = layer.trap_changes.iter().map(|t| t.gate).collect();
        let mut sites: Vec<(GateId, [Point; 2])> = Vec::new();
        for &id in &layer.gates {
            let Some((a, b)) = circuit.gates[id].pair() else {
                continue;
            };
            if trap_gates.contains(&id) {
                continue;
            }
            let pos = [mobile.positions[a], mobile.positions[b]];
            v.check_range(id, pos);
            sites.push((id, pos));
        }

        if layer.homed {
            if let Some(m) = &layer.movement {
                v.replay(&mut frame, &reverse_legs(&m.legs), "homing");
            }
            if frame.positions != pre.positions {
                v.push(ViolationKind::Homing, "homing does not restore the pre-layer positions".into());
            }
        }

        let mut trap_time = 0.0;
        for tc in &layer.trap_changes {
            let gate = &circuit.gates[tc.gate];
            let Some((a, b)) = gate.pair() else {
                v.push(ViolationKind::TrapChange, format!("trap change on non-CZ gate {}", tc.gate));
                continue;
            };
            if !layer.gates.contains(&tc.gate) || ![a, b].contains(&tc.qubit) || ![a, b].contains(&tc.partner) || tc.qubit == tc.partner {
                v.push(ViolationKind::TrapChange, format!("trap change does not match gate {}", tc.gate));
                continue;
            }
            let at = frame.positions[tc.qubit];
            let on_site = frame.mobile[tc.qubit] || (at == topo.positions[tc.qubit] && topo.sites[tc.qubit] == tc.slm_site);
            if at != tc.origin || !on_site {
                v.push(ViolationKind::TrapChange, format!("q{} does not start from its trap", tc.qubit));
            }
            let end = v.replay_transient(&frame, tc.qubit, &tc.legs);
            let partner_at = frame.positions[tc.partner];
            let pos = if tc.qubit == a { [end, partner_at] } else { [partner_at, end] };
            v.check_range(tc.gate, pos);
            sites.push((tc.gate, pos));
            let dist = at.dist(end);
            let expected = trap_change_us(params, dist);
            if (expected - tc.duration_us).abs() > 1e-9 || (dist - tc.max_distance_um).abs() > 1e-9 {
                v.push(ViolationKind::Accounting, format!("trap change duration {} expected {expected}", tc.duration_us));
            }
            trap_time += expected;
            // the return retraces the same sweeps, so only its endpoint needs checking
            if v.replay_transient_from(&frame, tc.qubit, end, &reverse_legs(&tc.legs)) != at {
                v.push(ViolationKind::TrapChange, format!("q{} is not returned to its trap", tc.qubit));
            }
        }

        // reported sites must match the replayed ones, gate for gate
        let mut reported: Vec<(GateId, [Point; 2])> = layer.cz_sites.iter().map(|s| (s.gate, s.positions)).collect();
        let mut replayed = sites.clone();
        reported.sort_by_key(|s| s.0);
        replayed.sort_by_key(|s| s.0);
        if reported != replayed {
            v.push(ViolationKind::SiteMismatch, "reported CZ sites differ from the replay".into());
        }
        for (i, (g1, p1)) in sites.iter().enumerate() {
            for (g2, p2) in &sites[i + 1..] {
                for x in p1 {
                    for y in p2 {
                        if x.dist(*y) <= topo.blockade_radius_um {
                            v.push(
                                ViolationKind::Blockade,
                                format!("gates {g1} and {g2} are {:.3} µm apart", x.dist(*y)),
                            );
                        }
                    }
                }
            }
        }

        let move_time = params.move_time_us(max_distance);
        let homing_time = if layer.homed { move_time } else { 0.0 };
        let has_u3 = layer.gates.iter().any(|&id| circuit.gates[id].is_u3());
        let has_cz = layer.gates.iter().any(|&id| circuit.gates[id].is_cz());
        let duration = move_time + gate_phase_us(params, has_u3, has_cz) + homing_time + trap_time;
        if (duration - layer.duration_us).abs() > 1e-9 * duration.max(1.0) {
            v.push(ViolationKind::Accounting, format!("duration {} expected {duration}", layer.duration_us));
        }
        runtime += layer.duration_us;
        executed.extend(layer.gates.iter().copied());
    }

    v.layer = schedule.layers.len();
    if executed.len() != circuit.gates.len() {
        v.push(
            ViolationKind::Dependency,
            format!("{} of {} gates executed", executed.len(), circuit.gates.len()),
        );
    }
    let trap_changes: usize = schedule.layers.iter().map(|l| l.trap_changes.len()).sum();
    let counts_ok = schedule.cz_count == circuit.cz_count()
        && schedule.u3_count == circuit.u3_count()
        && schedule.trap_change_count == trap_changes
        && (schedule.total_runtime_us - runtime).abs() <= 1e-9 * runtime.max(1.0);
    if !counts_ok {
        v.push(ViolationKind::Accounting, "schedule counters disagree with the layers".into());
    }
    v.out
}

struct Checker<'a> {
    topo: &'a DiscreteTopology,
    out: Vec<Violation>,
    layer: usize,
}

impl Checker<'_> {
    fn push(&mut self, kind: ViolationKind, detail: String) {
        self.out.push(Violation {
            layer: self.layer,
            kind,
            detail,
        });
    }

    fn sep(&self) -> f64 {
        self.topo.grid.min_sep_um
    }

    fn check_range(&mut self, gate: GateId, pos: [Point; 2]) {
        if pos[0].dist(pos[1]) > self.topo.interaction_radius_um + TOLERANCE {
            self.push(
                ViolationKind::OutOfRange,
                format!("CZ {gate} fires at {:.3} µm", pos[0].dist(pos[1])),
            );
        }
    }

    fn check_dependencies(&mut self, circuit: &Circuit, executed: &HashSet<GateId>, gates: &[GateId]) {
        let mut busy = HashSet::new();
        for &id in gates {
            let Some(gate) = circuit.gates.get(id) else {
                self.push(ViolationKind::Dependency, format!("unknown gate {id}"));
                continue;
            };
            if executed.contains(&id) {
                self.push(ViolationKind::Dependency, format!("gate {id} executed twice"));
            }
            for &q in &gate.operands {
                if !busy.insert(q) {
                    self.push(ViolationKind::Dependency, format!("q{q} runs two gates in one layer"));
                }
                let next = circuit.per_qubit_order[q].iter().find(|g| !executed.contains(g));
                if next != Some(&id) {
                    self.push(ViolationKind::Dependency, format!("gate {id} runs before its predecessor on q{q}"));
                }
            }
        }
    }

    /// Pairwise separation and line ordering of a configuration at rest.
    fn check_static(&mut self, frame: &Frame, what: &str) {
        let p = &frame.positions;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i].dist(p[j]) < self.sep() - TOLERANCE {
                    self.push(ViolationKind::Separation, format!("{what}: q{i} and q{j} too close"));
                }
            }
        }
        self.check_lines(frame, what);
    }

    fn check_lines(&mut self, frame: &Frame, what: &str) {
        for axis in [Axis::X, Axis::Y] {
            let order = match axis {
                Axis::X => &frame.cols,
                Axis::Y => &frame.rows,
            };
            for w in order.windows(2) {
                let gap = coord(frame.positions[w[1]], axis) - coord(frame.positions[w[0]], axis);
                if gap < LINE_GAP_UM - TOLERANCE {
                    self.push(
                        ViolationKind::Ordering,
                        format!("{what}: {axis:?} lines of q{} and q{} {gap:.3} µm apart", w[0], w[1]),
                    );
                }
            }
            let (lo, hi) = match axis {
                Axis::X => self.topo.grid.x_bounds(),
                Axis::Y => self.topo.grid.y_bounds(),
            };
            if order
                .iter()
                .any(|&q| coord(frame.positions[q], axis) < lo - TOLERANCE || coord(frame.positions[q], axis) > hi + TOLERANCE)
            {
                self.push(ViolationKind::Bounds, format!("{what}: {axis:?} line outside the grid"));
            }
        }
    }

    fn replay_transient(&mut self, frame: &Frame, q: usize, legs: &[Leg]) -> Point {
        self.replay_transient_from(frame, q, frame.positions[q], legs)
    }

    /// Sweeps of the transient pair carrying `q` from `start`; every other
    /// atom is parked at its `frame` position.
    fn replay_transient_from(&mut self, frame: &Frame, q: usize, start: Point, legs: &[Leg]) -> Point {
        let mut at = start;
        for leg in legs {
            let [m] = leg.moves.as_slice() else {
                self.push(ViolationKind::LegMismatch, format!("transient leg moves {} lines", leg.moves.len()));
                continue;
            };
            if m.qubit != q || coord(at, leg.axis) != m.from {
                self.push(ViolationKind::LegMismatch, format!("transient leg of q{} does not continue from {at:?}", m.qubit));
            }
            let next = match leg.axis {
                Axis::X => Point::new(m.to, at.y),
                Axis::Y => Point::new(at.x, m.to),
            };
            let (xlo, xhi) = self.topo.grid.x_bounds();
            let (ylo, yhi) = self.topo.grid.y_bounds();
            if next.x < xlo - TOLERANCE || next.x > xhi + TOLERANCE || next.y < ylo - TOLERANCE || next.y > yhi + TOLERANCE {
                self.push(ViolationKind::Bounds, format!("transient pair takes q{q} off the grid"));
            }
            for (o, &p) in frame.positions.iter().enumerate() {
                let d = segment_point_distance(at, next, p);
                if o != q && d < self.sep() - TOLERANCE {
                    self.push(ViolationKind::Separation, format!("carried q{q} passes {d:.3} µm from q{o}"));
                }
            }
            at = next;
        }
        at
    }

    fn replay(&mut self, frame: &mut Frame, legs: &[Leg], what: &str) {
        for leg in legs {
            let before = frame.positions.clone();
            let mut moved = HashSet::new();
            for m in &leg.moves {
                if !frame.mobile[m.qubit] || !moved.insert(m.qubit) {
                    self.push(ViolationKind::LegMismatch, format!("{what}: q{} cannot move here", m.qubit));
                    continue;
                }
                let p = &mut frame.positions[m.qubit];
                let cur = coord(*p, leg.axis);
                if cur != m.from {
                    self.push(
                        ViolationKind::LegMismatch,
                        format!("{what}: q{} leaves from {} but sits at {cur}", m.qubit, m.from),
                    );
                }
                match leg.axis {
                    Axis::X => p.x = m.to,
                    Axis::Y => p.y = m.to,
                }
            }
            let after = &frame.positions;
            for &q in &moved {
                for o in 0..after.len() {
                    if o == q || (moved.contains(&o) && o < q) {
                        continue;
                    }
                    let d = min_distance_during(before[q], after[q], before[o], after[o]);
                    if d < self.sep() - TOLERANCE {
                        self.push(
                            ViolationKind::Separation,
                            format!("{what}: q{q} passes {d:.3} µm from q{o}"),
                        );
                    }
                }
            }
            self.check_lines(frame, what);
        }
    }
}

fn coord(p: Point, axis: Axis) -> f64 {
    match axis {
        Axis::X => p.x,
        Axis::Y => p.y,
    }
}

fn net_displacement(a: &Frame, b: &Frame) -> f64 {
    a.positions
        .iter()
        .zip(&b.positions)
        .map(|(p, q)| p.dist(*q))
        .fold(0.0, f64::max)
}
