//! Plane geometry in micrometres.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Smallest distance between two points moving linearly and simultaneously
/// from `a0`/`b0` at t=0 to `a1`/`b1` at t=1.
pub fn min_distance_during(a0: Point, a1: Point, b0: Point, b1: Point) -> f64 {
    // relative position r(t) = r0 + t·v
    let (rx, ry) = (a0.x - b0.x, a0.y - b0.y);
    let (vx, vy) = ((a1.x - a0.x) - (b1.x - b0.x), (a1.y - a0.y) - (b1.y - b0.y));
    let vv = vx * vx + vy * vy;
    let t = if vv == 0.0 {
        0.0
    } else {
        (-(rx * vx + ry * vy) / vv).clamp(0.0, 1.0)
    };
    (rx + t * vx).hypot(ry + t * vy)
}

/// Distance from `p` to the segment `a`–`b`.
pub fn segment_point_distance(a: Point, b: Point, p: Point) -> f64 {
    min_distance_during(a, b, p, p)
}

/// Prim's algorithm over the complete Euclidean graph; returns the longest
/// tree edge, i.e. the smallest radius whose unit-disk graph is connected.
pub fn max_mst_edge(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut longest: f64 = 0.0;
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .expect("a vertex remains");
        in_tree[next] = true;
        longest = longest.max(best[next]);
        for i in 0..n {
            if !in_tree[i] {
                best[i] = best[i].min(points[next].dist(points[i]));
            }
        }
    }
    longest
}
