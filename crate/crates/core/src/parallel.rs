//! Running many logical shots at once by tiling circuit copies over the
//! array. Copies share AOD lines: a row carries one atom for every copy in
//! its tiling row, so all copies replay the same movement in tandem.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aod::AodGrid;
use crate::config::GridSpec;
use crate::geometry::{min_distance_during, Point};
use crate::layout::DiscreteTopology;
use crate::movement::{reverse_legs, Axis, Frame, Leg, LINE_GAP_UM, TOLERANCE};
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParallelError {
    #[error("footprint of {w}x{h} sites does not fit a {sites_x}x{sites_y} grid")]
    FootprintTooLarge {
        w: usize,
        h: usize,
        sites_x: usize,
        sites_y: usize,
    },
    #[error("shot count must be at least 1")]
    NoShots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelPlan {
    pub copies: usize,
    pub tiling: (usize, usize),
    /// Tile size in sites: the occupied sites plus wherever atoms and AOD
    /// lines travel.
    pub footprint: (usize, usize),
    pub atoms_per_aod_row: usize,
    pub atoms_per_aod_col: usize,
    pub shots: u64,
    pub physical_shots: u64,
    pub circuit_runtime_us: f64,
    pub inter_shot_overhead_us: f64,
    pub total_execution_time_us: f64,
    pub serial_execution_time_us: f64,
    /// 1 − parallel time / serial time.
    pub reduction_vs_serial: f64,
}

/// Bounding box of every position any atom, and so any AOD line, takes
/// during the schedule, trap-change excursions included. Legs are straight,
/// so their end frames bound their sweeps.
pub fn motion_envelope(schedule: &Schedule, topo: &DiscreteTopology, aod: &AodGrid) -> Option<(Point, Point)> {
    let mut bounds: Option<(Point, Point)> = None;
    for (_, _, f) in leg_frames(schedule, topo, aod) {
        for &p in &f.positions {
            let (lo, hi) = bounds.get_or_insert((p, p));
            *lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            *hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    bounds
}

/// Width and height, in sites, of a tile that holds the envelope `lo..hi`
/// once its corner is snapped down to the lattice, leaving at least one
/// pitch to the next tile. Bare sites spanning k columns give width k.
/// Tiles are laid out from site (0, 0), each copy shifted by whole tiles.
pub fn footprint(lo: Point, hi: Point, grid: &GridSpec) -> (usize, usize) {
    let u = grid.unit_um();
    // sites sit on multiples of the pitch; tiles are relocated by whole pitches
    let span = |lo: f64, hi: f64| {
        let start = (lo / u + TOLERANCE).floor() * u;
        ((hi - start) / u - TOLERANCE).ceil().max(0.0) as usize + 1
    };
    (span(lo.x, hi.x), span(lo.y, hi.y))
}

/// Tiles copies of the schedule's motion envelope over `grid` and prices
/// `shots` logical shots.
pub fn plan_parallel(
    schedule: &Schedule,
    topo: &DiscreteTopology,
    aod: &AodGrid,
    grid: &GridSpec,
    shots: u64,
    inter_shot_overhead_us: f64,
) -> Result<ParallelPlan, ParallelError> {
    let size = motion_envelope(schedule, topo, aod).map_or((1, 1), |(lo, hi)| footprint(lo, hi, grid));
    plan_tiling(size, schedule.total_runtime_us, grid, shots, inter_shot_overhead_us)
}

/// Copy count and timing for a footprint of `w`x`h` sites.
pub fn plan_tiling(
    (w, h): (usize, usize),
    runtime_us: f64,
    grid: &GridSpec,
    shots: u64,
    inter_shot_overhead_us: f64,
) -> Result<ParallelPlan, ParallelError> {
    if shots == 0 {
        return Err(ParallelError::NoShots);
    }
    let (cx, cy) = (grid.sites_x / w, grid.sites_y / h);
    if cx == 0 || cy == 0 {
        return Err(ParallelError::FootprintTooLarge {
            w,
            h,
            sites_x: grid.sites_x,
            sites_y: grid.sites_y,
        });
    }
    let copies = cx * cy;
    let per_shot = runtime_us + inter_shot_overhead_us;
    let physical_shots = shots.div_ceil(copies as u64);
    let total = physical_shots as f64 * per_shot;
    let serial = shots as f64 * per_shot;
    Ok(ParallelPlan {
        copies,
        tiling: (cx, cy),
        footprint: (w, h),
        atoms_per_aod_row: cx,
        atoms_per_aod_col: cy,
        shots,
        physical_shots,
        circuit_runtime_us: runtime_us,
        inter_shot_overhead_us,
        total_execution_time_us: total,
        serial_execution_time_us: serial,
        reduction_vs_serial: if serial > 0.0 { 1.0 - total / serial } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TandemViolation {
    pub layer: usize,
    pub detail: String,
}

/// Replays the schedule on a representative copy next to its neighbours
/// and checks separation between atoms of different copies, plus ordering
/// of the lines of vertically (rows) and horizontally (columns) stacked
/// copies. Copies in the same tiling row share rows, so their row
/// displacements agree by construction; the same holds for columns.
pub fn validate_tandem(
    plan: &ParallelPlan,
    schedule: &Schedule,
    topo: &DiscreteTopology,
    aod: &AodGrid,
) -> Result<(), TandemViolation> {
    let unit = topo.grid.unit_um();
    let (w, h) = plan.footprint;
    let (cx, cy) = plan.tiling;
    let mut offsets = Vec::new();
    if cx > 1 {
        offsets.push((w as f64 * unit, 0.0));
    }
    if cy > 1 {
        offsets.push((0.0, h as f64 * unit));
    }
    if cx > 1 && cy > 1 {
        offsets.push((w as f64 * unit, h as f64 * unit));
        offsets.push((w as f64 * unit, -(h as f64) * unit));
    }
    if offsets.is_empty() {
        return Ok(());
    }
    let sep = topo.grid.min_sep_um;
    for (layer, before, after) in leg_frames(schedule, topo, aod) {
        for &(dx, dy) in &offsets {
            let shift = |p: Point| Point::new(p.x + dx, p.y + dy);
            for q in 0..before.positions.len() {
                for o in 0..before.positions.len() {
                    let d = min_distance_during(
                        before.positions[q],
                        after.positions[q],
                        shift(before.positions[o]),
                        shift(after.positions[o]),
                    );
                    if d < sep - TOLERANCE {
                        return Err(TandemViolation {
                            layer,
                            detail: format!("q{q} comes {d:.3} µm from q{o} of the copy offset by ({dx}, {dy}) µm"),
                        });
                    }
                }
            }
            for (axis, off) in [(Axis::X, dx), (Axis::Y, dy)] {
                // copies stacked along this axis have distinct lines
                let stacked = match axis {
                    Axis::X => dy == 0.0 && dx != 0.0,
                    Axis::Y => dx == 0.0 && dy != 0.0,
                };
                if !stacked {
                    continue;
                }
                for f in [&before, &after] {
                    let order = match axis {
                        Axis::X => &f.cols,
                        Axis::Y => &f.rows,
                    };
                    let coord = |q: usize| match axis {
                        Axis::X => f.positions[q].x,
                        Axis::Y => f.positions[q].y,
                    };
                    if let (Some(&last), Some(&first)) = (order.last(), order.first()) {
                        let gap = coord(first) + off - coord(last);
                        if gap < LINE_GAP_UM - TOLERANCE {
                            return Err(TandemViolation {
                                layer,
                                detail: format!("{axis:?} lines of neighbouring copies {gap:.3} µm apart"),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Every leg of the schedule as (layer, frame before, frame after), in
/// execution order, starting with the home configuration at rest.
fn leg_frames(schedule: &Schedule, topo: &DiscreteTopology, aod: &AodGrid) -> Vec<(usize, Frame, Frame)> {
    let mut frame = Frame::home(topo, aod);
    let mut out = vec![(0, frame.clone(), frame.clone())];
    let run = |layer: usize, frame: &mut Frame, legs: &[Leg], out: &mut Vec<(usize, Frame, Frame)>| {
        for leg in legs {
            let before = frame.clone();
            frame.apply(leg);
            out.push((layer, before, frame.clone()));
        }
    };
    for (li, l) in schedule.layers.iter().enumerate() {
        if let Some(m) = &l.movement {
            run(li, &mut frame, &m.legs, &mut out);
            if l.homed {
                run(li, &mut frame, &reverse_legs(&m.legs), &mut out);
            }
        }
        for tc in &l.trap_changes {
            // the carried atom leaves its lines (if any) parked behind
            let mut carrying = frame.clone();
            carrying.remove_mobile(tc.qubit);
            run(li, &mut carrying, &tc.legs, &mut out);
            run(li, &mut carrying, &reverse_legs(&tc.legs), &mut out);
        }
    }
    out
}
