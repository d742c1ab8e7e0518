//! AOD motion planning.
//!
//! Every AOD atom owns one row line and one column line. A [`Leg`] slides a
//! set of lines along one axis simultaneously and linearly, so each moving
//! atom travels a straight axis-parallel segment. A leg is legal when
//!
//! * lines keep their order with gaps of at least [`LINE_GAP_UM`] at both
//!   ends (gaps interpolate linearly, so this holds throughout),
//! * two AOD atoms end the leg at least `min_sep` apart (their offset along
//!   the leg keeps its sign and the other offset is fixed, so the closest
//!   approach is at an end), and
//! * no moving atom passes within `min_sep` of a static (SLM) atom.
//!
//! Moving a line into a neighbour pushes the neighbour along. An AOD atom
//! that would end up too close to another is first displaced across the
//! leg, away from it; a pushed atom whose sweep would clip a static atom is
//! first slid sideways into the nearest corridor between lattice rows (or
//! columns). Each push, displacement and slide counts as one iteration
//! against the recursion limit.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aod::AodGrid;
use crate::config::GridSpec;
use crate::geometry::{segment_point_distance, Point};
use crate::layout::DiscreteTopology;

/// Slack for comparisons between coordinates produced by arithmetic.
pub const TOLERANCE: f64 = 1e-9;

/// Smallest spacing at which two AOD tones still count as distinct, ordered
/// lines. Atom separation is enforced on the atoms themselves.
pub const LINE_GAP_UM: f64 = 1.0;

/// Lattice pitch of the transient tweezer's path search. It must not exceed
/// the 2 µm free band between neighbouring lattice sites.
pub const TRANSIENT_STEP_UM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoveError {
    #[error("recursion limit of {limit} induced displacements exceeded")]
    DepthExceeded { limit: usize },
    #[error("no legal path brings qubit {mover} within range of qubit {anchor}")]
    NoLegalPath { mover: usize, anchor: usize },
    #[error("qubit {qubit} is not held by the AOD")]
    NotMobile { qubit: usize },
    #[error("no free transient AOD row/column pair for a trap change")]
    NoTransientAod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

/// One line sliding from `from` to `to`; `qubit` identifies the line by the
/// atom it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineMove {
    pub qubit: usize,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub axis: Axis,
    pub moves: Vec<LineMove>,
}

impl Leg {
    pub fn reversed(&self) -> Leg {
        Leg {
            axis: self.axis,
            moves: self
                .moves
                .iter()
                .map(|m| LineMove {
                    qubit: m.qubit,
                    from: m.to,
                    to: m.from,
                })
                .collect(),
        }
    }
}

/// Legs that undo `legs`.
pub fn reverse_legs(legs: &[Leg]) -> Vec<Leg> {
    legs.iter().rev().map(Leg::reversed).collect()
}

/// Atom positions plus the line order of the AOD-held atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub positions: Vec<Point>,
    pub mobile: Vec<bool>,
    /// AOD atoms by increasing row coordinate.
    pub rows: Vec<usize>,
    /// AOD atoms by increasing column coordinate.
    pub cols: Vec<usize>,
}

impl Frame {
    /// The home configuration: static atoms on their sites, AOD atoms at
    /// their (possibly deduplicated) line crossings.
    pub fn home(topo: &DiscreteTopology, aod: &AodGrid) -> Frame {
        let n = topo.num_qubits();
        let mut rows = vec![usize::MAX; aod.row_coords.len()];
        let mut cols = vec![usize::MAX; aod.col_coords.len()];
        let mut mobile = vec![false; n];
        for (&q, &(r, c)) in &aod.occupancy {
            rows[r] = q;
            cols[c] = q;
            mobile[q] = true;
        }
        Frame {
            positions: aod.home_positions(topo),
            mobile,
            rows,
            cols,
        }
    }

    pub fn coord(&self, q: usize, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.positions[q].x,
            Axis::Y => self.positions[q].y,
        }
    }

    pub fn order(&self, axis: Axis) -> &[usize] {
        match axis {
            Axis::X => &self.cols,
            Axis::Y => &self.rows,
        }
    }

    pub fn apply(&mut self, leg: &Leg) {
        for m in &leg.moves {
            match leg.axis {
                Axis::X => self.positions[m.qubit].x = m.to,
                Axis::Y => self.positions[m.qubit].y = m.to,
            }
        }
    }

    pub fn apply_all(&mut self, legs: &[Leg]) {
        for leg in legs {
            self.apply(leg);
        }
    }

    /// Loads a static atom into a fresh AOD row and column at its current
    /// position. Lines at the same coordinate keep qubit-index order.
    pub fn insert_mobile(&mut self, q: usize) -> (usize, usize) {
        self.mobile[q] = true;
        let p = self.positions[q];
        let key = |frame: &Frame, other: usize, axis: Axis| {
            let c = frame.coord(other, axis);
            let v = match axis {
                Axis::X => p.x,
                Axis::Y => p.y,
            };
            c < v || (c == v && other < q)
        };
        let r = self.rows.iter().take_while(|&&o| key(self, o, Axis::Y)).count();
        let c = self.cols.iter().take_while(|&&o| key(self, o, Axis::X)).count();
        self.rows.insert(r, q);
        self.cols.insert(c, q);
        (r, c)
    }

    pub fn remove_mobile(&mut self, q: usize) {
        self.mobile[q] = false;
        self.rows.retain(|&o| o != q);
        self.cols.retain(|&o| o != q);
    }

    pub fn statics(&self) -> impl Iterator<Item = (usize, Point)> + '_ {
        self.positions
            .iter()
            .enumerate()
            .filter(|(q, _)| !self.mobile[*q])
            .map(|(q, p)| (q, *p))
    }
}

/// Largest net displacement of any atom between two frames.
pub fn max_displacement(before: &Frame, after: &Frame) -> f64 {
    before
        .positions
        .iter()
        .zip(&after.positions)
        .map(|(a, b)| a.dist(*b))
        .fold(0.0, f64::max)
}

/// Net displacement of one atom during a move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub qubit: usize,
    pub from: Point,
    pub to: Point,
}

/// A move-into-range together with everything it pushed aside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub target_qubit: usize,
    pub anchor: usize,
    pub from: Point,
    pub to: Point,
    pub induced: Vec<Displacement>,
    /// Iterations (pushes and sideways slides) spent.
    pub depth: usize,
    pub legs: Vec<Leg>,
    pub max_distance_um: f64,
}

impl Move {
    fn between(before: &Frame, after: &Frame, mover: usize, anchor: usize, legs: Vec<Leg>, depth: usize) -> Move {
        let induced = (0..before.positions.len())
            .filter(|&q| q != mover && before.positions[q] != after.positions[q])
            .map(|q| Displacement {
                qubit: q,
                from: before.positions[q],
                to: after.positions[q],
            })
            .collect();
        Move {
            target_qubit: mover,
            anchor,
            from: before.positions[mover],
            to: after.positions[mover],
            induced,
            depth,
            legs,
            max_distance_um: max_displacement(before, after),
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.legs.is_empty()
    }
}

/// A trap change: `carried` is handed to a transient tweezer pair, taken
/// within range of `partner` while every other atom stays parked, and later
/// returned along the reversed legs. The transient pair has its own
/// deflector tones, so it is not ordered against the main AOD lines; only
/// atom separation constrains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub carried: usize,
    pub partner: usize,
    pub origin: Point,
    /// Row and column of the transient pair used.
    pub transient_aod: (usize, usize),
    /// Legs of the transient lines; each moves `carried` alone.
    pub legs: Vec<Leg>,
    /// Positions of the pair when the CZ fires.
    pub gate_positions: (Point, Point),
    pub max_distance_um: f64,
}

/// Planner state shared by all moves of one compilation.
#[derive(Debug, Clone, Copy)]
pub struct Planner {
    pub grid: GridSpec,
    pub radius: f64,
    pub limit: usize,
}

const ANGLE_STEP_DEG: f64 = 15.0;
const RADIUS_FACTORS: [f64; 3] = [1.0 - 1e-6, 0.8, 0.6];

impl Planner {
    pub fn new(topo: &DiscreteTopology, limit: usize) -> Self {
        Planner {
            grid: topo.grid,
            radius: topo.interaction_radius_um,
            limit,
        }
    }

    fn sep(&self) -> f64 {
        self.grid.min_sep_um
    }

    fn bounds(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => self.grid.x_bounds(),
            Axis::Y => self.grid.y_bounds(),
        }
    }

    pub fn in_range(&self, a: Point, b: Point) -> bool {
        a.dist(b) <= self.radius + TOLERANCE
    }

    /// Sets the given lines to their targets and pushes the others just far
    /// enough to restore ordering gaps. Fails if fixed lines collide or a
    /// line leaves the grid.
    fn repair(&self, frame: &Frame, axis: Axis, targets: &[(usize, f64)], pinned: &[usize]) -> Result<Leg, MoveError> {
        let eps = LINE_GAP_UM;
        let order = frame.order(axis);
        let old: Vec<f64> = order.iter().map(|&q| frame.coord(q, axis)).collect();
        let mut new = old.clone();
        let mut fixed: Vec<bool> = order.iter().map(|q| pinned.contains(q)).collect();
        for &(q, c) in targets {
            let i = order
                .iter()
                .position(|&o| o == q)
                .ok_or(MoveError::NotMobile { qubit: q })?;
            new[i] = c;
            fixed[i] = true;
        }
        let blocked = || MoveError::NoLegalPath {
            mover: targets.first().map_or(usize::MAX, |t| t.0),
            anchor: usize::MAX,
        };
        for i in 1..new.len() {
            if !fixed[i] && new[i] < new[i - 1] + eps - TOLERANCE {
                new[i] = new[i - 1] + eps;
            }
        }
        for i in (0..new.len().saturating_sub(1)).rev() {
            if !fixed[i] && new[i] > new[i + 1] - eps + TOLERANCE {
                new[i] = new[i + 1] - eps;
            }
        }
        let (lo, hi) = self.bounds(axis);
        if new.windows(2).any(|w| w[1] - w[0] < eps - TOLERANCE)
            || new.iter().any(|&v| v < lo - TOLERANCE || v > hi + TOLERANCE)
        {
            return Err(blocked());
        }
        let moves = order
            .iter()
            .zip(old.iter().zip(&new))
            .filter(|(_, (o, n))| o != n)
            .map(|(&q, (&from, &to))| LineMove { qubit: q, from, to })
            .collect();
        Ok(Leg { axis, moves })
    }

    /// First pair of AOD atoms closer than `min_sep` once `leg` is applied,
    /// with the atom to displace first. Targets and pinned atoms are never
    /// displaced; between two free atoms the one that does not move in the
    /// leg gives way, then the higher index.
    fn aod_conflict(&self, frame: &Frame, leg: &Leg, fixed: &[usize]) -> Option<(usize, usize)> {
        let mut after = frame.clone();
        after.apply(leg);
        let moving = |q: usize| leg.moves.iter().any(|m| m.qubit == q);
        let sep = self.sep() - TOLERANCE;
        let order = frame.order(leg.axis);
        for (i, &q) in order.iter().enumerate() {
            for &o in &order[i + 1..] {
                if !(moving(q) || moving(o)) || after.positions[q].dist(after.positions[o]) >= sep {
                    continue;
                }
                let rank = |x: usize| (fixed.contains(&x), moving(x), std::cmp::Reverse(x));
                return Some(if rank(q) <= rank(o) { (q, o) } else { (o, q) });
            }
        }
        None
    }

    /// First atom in `leg` whose sweep passes within `min_sep` of a static atom.
    fn static_conflict(&self, frame: &Frame, leg: &Leg) -> Option<usize> {
        let sep = self.sep() - TOLERANCE;
        leg.moves.iter().map(|m| m.qubit).find(|&q| {
            let start = frame.positions[q];
            let end = match leg.axis {
                Axis::X => Point::new(leg_target(leg, q), start.y),
                Axis::Y => Point::new(start.x, leg_target(leg, q)),
            };
            frame
                .statics()
                .any(|(_, s)| segment_point_distance(start, end, s) < sep)
        })
    }

    /// Corridor coordinates (midway between lattice lines) next to `q` along
    /// `axis`, nearest first, then toward the roomier side, then increasing.
    fn corridors(&self, frame: &Frame, q: usize, axis: Axis) -> Vec<f64> {
        let u = self.grid.unit_um();
        let v = frame.coord(q, axis);
        let below = ((v / u - 0.5).floor() + 0.5) * u;
        let mut cands: Vec<f64> = if (below - v).abs() < TOLERANCE {
            vec![below - u, below + u]
        } else {
            vec![below, below + u]
        };
        let (lo, hi) = self.bounds(axis);
        cands.retain(|&c| c >= lo - TOLERANCE && c <= hi + TOLERANCE);
        let room = |c: f64| {
            let order = frame.order(axis);
            let others = order.iter().filter(|&&o| o != q).map(|&o| frame.coord(o, axis));
            if c > v {
                others.filter(|&o| o > v).fold(hi, f64::min) - v
            } else {
                v - others.filter(|&o| o < v).fold(lo, f64::max)
            }
        };
        cands.sort_by(|&a, &b| {
            (a - v)
                .abs()
                .total_cmp(&(b - v).abs())
                .then(room(b).total_cmp(&room(a)))
                .then(a.total_cmp(&b))
        });
        cands
    }

    /// Slides the `targets` lines along `axis`, pushing and detouring other
    /// AOD atoms as needed. Returns the legs in execution order; the last one
    /// moves the targets.
    pub fn plan_lines(
        &self,
        frame: &Frame,
        axis: Axis,
        targets: &[(usize, f64)],
        pinned: &[usize],
        budget: &mut usize,
    ) -> Result<Vec<Leg>, MoveError> {
        let mut work = frame.clone();
        let mut legs = Vec::new();
        let is_target = |q: usize| targets.iter().any(|t| t.0 == q);
        let mut fixed = pinned.to_vec();
        fixed.extend(targets.iter().map(|t| t.0));
        loop {
            let leg = self.repair(&work, axis, targets, pinned)?;
            if let Some((q, other)) = self.aod_conflict(&work, &leg, &fixed) {
                if fixed.contains(&q) {
                    return Err(MoveError::NoLegalPath { mover: q, anchor: other });
                }
                if *budget == 0 {
                    return Err(MoveError::DepthExceeded { limit: self.limit });
                }
                *budget -= 1;
                // step across the leg to a full separation, on q's own side
                let across = axis.other();
                let (v, w) = (work.coord(q, across), work.coord(other, across));
                let c = if v >= w { w + self.sep() } else { w - self.sep() };
                let sub = self.plan_lines(&work, across, &[(q, c)], &fixed, budget)?;
                work.apply_all(&sub);
                legs.extend(sub);
                continue;
            }
            match self.static_conflict(&work, &leg) {
                None => {
                    let pushed = leg.moves.iter().filter(|m| !is_target(m.qubit)).count();
                    if pushed > *budget {
                        return Err(MoveError::DepthExceeded { limit: self.limit });
                    }
                    *budget -= pushed;
                    if !leg.moves.is_empty() {
                        legs.push(leg);
                    }
                    return Ok(legs);
                }
                Some(q) if is_target(q) || pinned.contains(&q) => {
                    return Err(MoveError::NoLegalPath {
                        mover: q,
                        anchor: usize::MAX,
                    });
                }
                Some(q) => {
                    if *budget == 0 {
                        return Err(MoveError::DepthExceeded { limit: self.limit });
                    }
                    *budget -= 1;
                    let sub_pinned = fixed.clone();
                    let mut last_err = MoveError::NoLegalPath {
                        mover: q,
                        anchor: usize::MAX,
                    };
                    let mut detoured = false;
                    for c in self.corridors(&work, q, axis.other()) {
                        let mut trial = *budget;
                        match self.plan_lines(&work, axis.other(), &[(q, c)], &sub_pinned, &mut trial) {
                            Ok(sub) => {
                                work.apply_all(&sub);
                                legs.extend(sub);
                                *budget = trial;
                                detoured = true;
                                break;
                            }
                            Err(e) => last_err = e,
                        }
                    }
                    if !detoured {
                        return Err(last_err);
                    }
                }
            }
        }
    }

    /// Candidate gate positions for `mover` near `anchor`, by increasing
    /// travel from the mover's current position.
    fn destinations(&self, frame: &Frame, mover: usize, anchor: usize) -> Vec<Point> {
        let home = frame.positions[mover];
        let a = frame.positions[anchor];
        let r = self.radius;
        let base = (home.y - a.y).atan2(home.x - a.x);
        let mut cands = Vec::new();
        for f in RADIUS_FACTORS {
            let steps = (180.0 / ANGLE_STEP_DEG) as i32;
            for k in -steps..=steps {
                let ang = base + (k as f64 * ANGLE_STEP_DEG).to_radians();
                cands.push(Point::new(a.x + f * r * ang.cos(), a.y + f * r * ang.sin()));
            }
        }
        // centres of lattice cells are as far from static atoms as possible
        let u = self.grid.unit_um();
        let span = (r / u).ceil() as i64 + 1;
        let (ci, cj) = ((a.x / u).floor() as i64, (a.y / u).floor() as i64);
        for i in ci - span..=ci + span {
            for j in cj - span..=cj + span {
                let c = Point::new((i as f64 + 0.5) * u, (j as f64 + 0.5) * u);
                if c.dist(a) <= r * (1.0 - 1e-6) {
                    cands.push(c);
                }
            }
        }
        // trigonometry leaves dust where a leg should be skipped
        for c in &mut cands {
            if (c.x - home.x).abs() < 1e-9 {
                c.x = home.x;
            }
            if (c.y - home.y).abs() < 1e-9 {
                c.y = home.y;
            }
        }
        let sep = self.sep();
        let (xlo, xhi) = self.grid.x_bounds();
        let (ylo, yhi) = self.grid.y_bounds();
        let anchor_mobile = frame.mobile[anchor];
        cands.retain(|p| {
            let inside = p.x >= xlo && p.x <= xhi && p.y >= ylo && p.y <= yhi;
            let clear = frame
                .statics()
                .all(|(q, s)| q == mover || p.dist(s) >= sep + TOLERANCE);
            // the mover's lines may not cross or crowd the anchor's lines
            let ordered = !anchor_mobile
                || ((p.x - a.x) * (home.x - a.x) > 0.0
                    && (p.x - a.x).abs() >= LINE_GAP_UM
                    && (p.y - a.y) * (home.y - a.y) > 0.0
                    && (p.y - a.y).abs() >= LINE_GAP_UM
                    && p.dist(a) >= sep + TOLERANCE);
            inside && clear && ordered && p.dist(a) <= r + TOLERANCE
        });
        cands.sort_by(|p, q| p.dist(home).total_cmp(&q.dist(home)));
        cands.dedup_by(|p, q| p.dist(*q) < 1e-6);
        cands
    }

    /// Axis-parallel waypoint sequences from the mover's position to `dest`:
    /// direct L-shapes first, then detours through the nearest corridors.
    fn paths(&self, frame: &Frame, mover: usize, dest: Point) -> Vec<Vec<(Axis, f64)>> {
        let mut paths = vec![
            vec![(Axis::X, dest.x), (Axis::Y, dest.y)],
            vec![(Axis::Y, dest.y), (Axis::X, dest.x)],
        ];
        for c in self.corridors(frame, mover, Axis::Y) {
            paths.push(vec![(Axis::Y, c), (Axis::X, dest.x), (Axis::Y, dest.y)]);
        }
        for c in self.corridors(frame, mover, Axis::X) {
            paths.push(vec![(Axis::X, c), (Axis::Y, dest.y), (Axis::X, dest.x)]);
        }
        paths
    }

    /// Brings AOD atom `mover` within the interaction radius of `anchor`.
    /// The anchor never moves; other AOD atoms may be pushed aside.
    pub fn move_into_range(&self, frame: &Frame, mover: usize, anchor: usize) -> Result<Move, MoveError> {
        if !frame.mobile[mover] {
            return Err(MoveError::NotMobile { qubit: mover });
        }
        if self.in_range(frame.positions[mover], frame.positions[anchor]) {
            return Ok(Move::between(frame, frame, mover, anchor, Vec::new(), 0));
        }
        let pinned: Vec<usize> = if frame.mobile[anchor] { vec![anchor] } else { Vec::new() };
        let mut depth_hit = false;
        for dest in self.destinations(frame, mover, anchor) {
            'path: for path in self.paths(frame, mover, dest) {
                let mut budget = self.limit;
                let mut work = frame.clone();
                let mut legs = Vec::new();
                for (axis, c) in path {
                    if work.coord(mover, axis) == c {
                        continue;
                    }
                    match self.plan_lines(&work, axis, &[(mover, c)], &pinned, &mut budget) {
                        Ok(sub) => {
                            work.apply_all(&sub);
                            legs.extend(sub);
                        }
                        Err(e) => {
                            depth_hit |= matches!(e, MoveError::DepthExceeded { .. });
                            continue 'path;
                        }
                    }
                }
                if self.in_range(work.positions[mover], work.positions[anchor])
                    && work.positions[anchor] == frame.positions[anchor]
                {
                    return Ok(Move::between(frame, &work, mover, anchor, legs, self.limit - budget));
                }
            }
        }
        Err(if depth_hit {
            MoveError::DepthExceeded { limit: self.limit }
        } else {
            MoveError::NoLegalPath { mover, anchor }
        })
    }

    /// Plans a trap change for `carried`, static or AOD-held, towards
    /// `partner`. The path is searched on a lattice of [`TRANSIENT_STEP_UM`]
    /// anchored at the atom, first in a window around the pair and then over
    /// the whole grid, preferring few turns.
    pub fn carry(&self, frame: &Frame, carried: usize, partner: usize, transient_pairs: usize) -> Result<Excursion, MoveError> {
        if transient_pairs == 0 {
            return Err(MoveError::NoTransientAod);
        }
        let origin = frame.positions[carried];
        let target = frame.positions[partner];
        if self.in_range(origin, target) {
            return Ok(Excursion {
                carried,
                partner,
                origin,
                transient_aod: (0, 0),
                legs: Vec::new(),
                gate_positions: (origin, target),
                max_distance_um: 0.0,
            });
        }
        let obstacles: Vec<Point> = frame
            .positions
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != carried)
            .map(|(_, p)| *p)
            .collect();
        let u = self.grid.unit_um();
        let (xlo, xhi) = self.grid.x_bounds();
        let (ylo, yhi) = self.grid.y_bounds();
        let near = (
            origin.x.min(target.x) - 2.0 * u,
            origin.x.max(target.x) + 2.0 * u,
            origin.y.min(target.y) - 2.0 * u,
            origin.y.max(target.y) + 2.0 * u,
        );
        let path = self
            .transient_path(origin, target, &obstacles, near)
            .or_else(|| self.transient_path(origin, target, &obstacles, (xlo, xhi, ylo, yhi)))
            .ok_or(MoveError::NoLegalPath {
                mover: carried,
                anchor: partner,
            })?;
        let mut legs: Vec<Leg> = Vec::new();
        for w in path.windows(2) {
            let (axis, from, to) = if w[0].y == w[1].y {
                (Axis::X, w[0].x, w[1].x)
            } else {
                (Axis::Y, w[0].y, w[1].y)
            };
            match legs.last_mut() {
                Some(last) if last.axis == axis => last.moves[0].to = to,
                _ => legs.push(Leg {
                    axis,
                    moves: vec![LineMove { qubit: carried, from, to }],
                }),
            }
        }
        let end = *path.last().expect("path starts at the origin");
        Ok(Excursion {
            carried,
            partner,
            origin,
            transient_aod: (0, 0),
            legs,
            gate_positions: (end, target),
            max_distance_um: origin.dist(end),
        })
    }

    /// Lattice path from `start` to any point within range of `target`
    /// that keeps `min_sep` from every obstacle, inside `window` (clipped to
    /// the grid). Cost is length in steps plus a penalty per turn.
    fn transient_path(&self, start: Point, target: Point, obstacles: &[Point], window: (f64, f64, f64, f64)) -> Option<Vec<Point>> {
        const TURN_COST: u32 = 3;
        let s = TRANSIENT_STEP_UM;
        let sep = self.sep() - TOLERANCE;
        let (xlo, xhi) = self.grid.x_bounds();
        let (ylo, yhi) = self.grid.y_bounds();
        let (wx0, wx1) = (window.0.max(xlo), window.1.min(xhi));
        let (wy0, wy1) = (window.2.max(ylo), window.3.min(yhi));
        let i0 = ((wx0 - start.x) / s).ceil() as i64;
        let i1 = ((wx1 - start.x) / s).floor() as i64;
        let j0 = ((wy0 - start.y) / s).ceil() as i64;
        let j1 = ((wy1 - start.y) / s).floor() as i64;
        if i0 > 0 || i1 < 0 || j0 > 0 || j1 < 0 {
            return None;
        }
        let (nx, ny) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        let point = |k: usize| Point::new(start.x + (i0 + (k % nx) as i64) as f64 * s, start.y + (j0 + (k / nx) as i64) as f64 * s);

        // obstacles bucketed so each check only looks at neighbouring cells
        let cell = self.sep() + s;
        let key = |p: Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
        for &o in obstacles {
            buckets.entry(key(o)).or_default().push(o);
        }
        let nearby = |p: Point| {
            let (cx, cy) = key(p);
            (cx - 1..=cx + 1)
                .flat_map(move |x| (cy - 1..=cy + 1).map(move |y| (x, y)))
                .filter_map(|c| buckets.get(&c))
                .flatten()
                .copied()
                .collect::<Vec<Point>>()
        };
        let free = |a: Point, b: Point| nearby(a).iter().all(|&o| segment_point_distance(a, b, o) >= sep);

        let start_k = (-j0) as usize * nx + (-i0) as usize;
        let n = nx * ny;
        // states are node * 5 + heading, heading 4 meaning "not moved yet"
        let mut dist = vec![u32::MAX; n * 5];
        let mut prev = vec![usize::MAX; n * 5];
        let mut heap = BinaryHeap::new();
        dist[start_k * 5 + 4] = 0;
        heap.push(Reverse((0u32, start_k * 5 + 4)));
        while let Some(Reverse((d, state))) = heap.pop() {
            if d > dist[state] {
                continue;
            }
            let (k, heading) = (state / 5, state % 5);
            let p = point(k);
            if k != start_k && self.in_range(p, target) {
                let mut path = vec![p];
                let mut cur = state;
                while prev[cur] != usize::MAX {
                    cur = prev[cur];
                    path.push(point(cur / 5));
                }
                path.reverse();
                return Some(path);
            }
            let (x, y) = (k % nx, k / nx);
            let steps = [
                (x + 1 < nx).then(|| k + 1),
                (x > 0).then(|| k - 1),
                (y + 1 < ny).then(|| k + nx),
                (y > 0).then(|| k - nx),
            ];
            for (h, next) in steps.into_iter().enumerate() {
                let Some(next) = next else { continue };
                let turn = if heading == 4 || heading == h { 0 } else { TURN_COST };
                let nd = d + 1 + turn;
                let ns = next * 5 + h;
                if nd < dist[ns] && free(p, point(next)) {
                    dist[ns] = nd;
                    prev[ns] = state;
                    heap.push(Reverse((nd, ns)));
                }
            }
        }
        None
    }
}

fn leg_target(leg: &Leg, q: usize) -> f64 {
    leg.moves
        .iter()
        .find(|m| m.qubit == q)
        .map(|m| m.to)
        .expect("qubit moves in this leg")
}
