//! Movement trace (JSON lines) and its SVG rendering.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::aod::AodGrid;
use crate::config::HardwareParams;
use crate::geometry::Point;
use crate::layout::DiscreteTopology;
use crate::movement::{Axis, Leg};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The atom brought into range.
    Move,
    /// An atom pushed aside by the move.
    Induced,
    Homing,
    /// An atom carried in the transient tweezer pair.
    TrapChange,
}

/// Net displacement of one atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub layer: usize,
    pub kind: EventKind,
    pub qubit: usize,
    pub from: Point,
    pub to: Point,
    pub duration_us: f64,
}

pub fn trace_events(schedule: &Schedule, params: &HardwareParams) -> Vec<TraceEvent> {
    let mut out = Vec::new();
    for (li, l) in schedule.layers.iter().enumerate() {
        if let Some(m) = &l.movement {
            if !m.is_stationary() {
                let ev = |kind, qubit, from: Point, to: Point| TraceEvent {
                    layer: li,
                    kind,
                    qubit,
                    from,
                    to,
                    duration_us: l.move_time_us,
                };
                out.push(ev(EventKind::Move, m.target_qubit, m.from, m.to));
                for d in &m.induced {
                    out.push(ev(EventKind::Induced, d.qubit, d.from, d.to));
                }
                if l.homed {
                    out.push(ev(EventKind::Homing, m.target_qubit, m.to, m.from));
                    for d in &m.induced {
                        out.push(ev(EventKind::Homing, d.qubit, d.to, d.from));
                    }
                }
            }
        }
        for tc in &l.trap_changes {
            let end = end_of(tc.legs.iter(), tc.qubit, tc.origin);
            out.push(TraceEvent {
                layer: li,
                kind: EventKind::TrapChange,
                qubit: tc.qubit,
                from: tc.origin,
                to: end,
                duration_us: params.move_time_us(tc.origin.dist(end)),
            });
        }
    }
    out
}

/// Where `q` ends after `legs`, starting at `start`.
fn end_of<'a>(legs: impl Iterator<Item = &'a Leg>, q: usize, start: Point) -> Point {
    let mut p = start;
    for leg in legs {
        for m in leg.moves.iter().filter(|m| m.qubit == q) {
            match leg.axis {
                Axis::X => p.x = m.to,
                Axis::Y => p.y = m.to,
            }
        }
    }
    p
}

pub fn to_jsonl(events: &[TraceEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
        .collect()
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

const SCALE: f64 = 4.0;
const MARGIN: f64 = 20.0;

/// SVG of the array with the events of `layers`. SLM atoms are filled,
/// AOD atoms hollow. Circles of half the interaction radius around every
/// atom touch exactly when two atoms are in range; the blockade circle,
/// also at half scale, is drawn around each moving atom's destination.
pub fn render_svg(events: &[TraceEvent], topo: &DiscreteTopology, aod: &AodGrid, layers: Range<usize>) -> String {
    let (xlo, xhi) = topo.grid.x_bounds();
    let (ylo, yhi) = topo.grid.y_bounds();
    let px = |v: f64, lo: f64| MARGIN + (v - lo) * SCALE;
    let width = 2.0 * MARGIN + (xhi - xlo) * SCALE;
    let height = 2.0 * MARGIN + (yhi - ylo) * SCALE;
    // flip y so rows grow upward as in the usual pictures
    let sx = |p: Point| px(p.x, xlo);
    let sy = |p: Point| height - px(p.y, ylo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="crimson"/></marker></defs>"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g id="sites" fill="lightgray">"#);
    for r in 0..topo.grid.sites_y {
        for c in 0..topo.grid.sites_x {
            let p = topo.grid.site_position(c, r);
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, sx(p), sy(p));
        }
    }
    let _ = writeln!(s, "</g>");
    let half_r = topo.interaction_radius_um / 2.0 * SCALE;
    let _ = writeln!(s, r#"<g id="atoms">"#);
    for q in 0..topo.num_qubits() {
        let p = aod.position(q).unwrap_or(topo.positions[q]);
        let fill = if aod.contains(q) { "none" } else { "steelblue" };
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{half_r:.2}" fill="none" stroke="gray" stroke-dasharray="3,3"/><circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{fill}" stroke="steelblue" stroke-width="2"/><text x="{tx:.2}" y="{ty:.2}" font-size="10">q{q}</text>"#,
            x = sx(p),
            y = sy(p),
            tx = sx(p) + 6.0,
            ty = sy(p) - 6.0,
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="moves" stroke="crimson" stroke-width="2" marker-end="url(#arrow)">"#);
    let half_b = topo.blockade_radius_um / 2.0 * SCALE;
    for e in events.iter().filter(|e| layers.contains(&e.layer)) {
        let dash = match e.kind {
            EventKind::Homing => r#" stroke-dasharray="4,2""#,
            _ => "",
        };
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"{dash}><title>layer {} {:?} q{} {:.3} us</title></line>"#,
            sx(e.from),
            sy(e.from),
            sx(e.to),
            sy(e.to),
            e.layer,
            e.kind,
            e.qubit,
            e.duration_us
        );
        if matches!(e.kind, EventKind::Move | EventKind::TrapChange) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{half_b:.2}" fill="none" stroke="orange" stroke-width="1" marker-end="none"/>"#,
                sx(e.to),
                sy(e.to)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="12" font-size="10">dashed: half interaction radius; orange: half blockade radius</text>"#
    );
    s.push_str("</svg>\n");
    s
}
