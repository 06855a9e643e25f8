//! Planar primitives: points, poses and the polygon predicates used for zone lookup.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance (meters) under which a point is treated as lying on a polygon edge.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn lerp(&self, other: &Point2, s: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * s,
            self.y + (other.y - self.y) * s,
        )
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point2,
    heading: f64,
}

impl Pose {
    pub fn new(position: Point2, heading: f64) -> Result<Self> {
        if !position.is_finite() || !heading.is_finite() {
            return Err(Error::Geometry(format!(
                "non-finite pose ({}, {}, {})",
                position.x, position.y, heading
            )));
        }
        Ok(Self {
            position,
            heading: normalize_angle(heading),
        })
    }

    /// Convenience constructor for poses known to be finite.
    ///
    /// Panics on NaN or infinite input.
    pub fn at(x: f64, y: f64, heading: f64) -> Self {
        Self::new(Point2::new(x, y), heading).expect("finite pose")
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }
}

fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc * 0.5
}

/// Area centroid of a simple polygon.
pub fn centroid(ring: &[Point2]) -> Point2 {
    let area = signed_area(ring);
    let n = ring.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let f = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * f;
        cy += (a.y + b.y) * f;
    }
    Point2::new(cx / (6.0 * area), cy / (6.0 * area))
}

/// Euclidean distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let s = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq).clamp(0.0, 1.0);
    p.distance(&a.lerp(b, s))
}

/// Distance from `p` to the boundary of the polygon (zero on an edge, positive elsewhere).
pub fn boundary_distance(p: &Point2, ring: &[Point2]) -> f64 {
    edges(ring)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

fn edges(ring: &[Point2]) -> impl Iterator<Item = (&Point2, &Point2)> {
    let n = ring.len();
    (0..n).map(move |i| (&ring[i], &ring[(i + 1) % n]))
}

/// Inclusive point-in-polygon test: points on an edge or vertex count as inside.
///
/// Interior classification uses the even-odd crossing rule, which is exact for simple polygons.
pub fn point_in_polygon(p: &Point2, ring: &[Point2]) -> bool {
    if ring.len() < 3 {
        return false;
    }
    let mut inside = false;
    for (a, b) in edges(ring) {
        if point_segment_distance(p, a, b) <= BOUNDARY_EPS {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Samples a polyline at arc-length intervals of at most `step`, always
/// including both endpoints of every segment. A single waypoint yields itself.
pub fn sample_polyline(route: &[Point2], step: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    let Some(first) = route.first() else {
        return out;
    };
    out.push(*first);
    for w in route.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(&b);
        let n = (len / step).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(if i == n {
                b
            } else {
                a.lerp(&b, i as f64 / n as f64)
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point2,
    pub max: Point2,
}

impl BoundingBox {
    pub fn of(ring: &[Point2]) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in ring {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn contains(&self, p: &Point2, slack: f64) -> bool {
        p.x >= self.min.x - slack
            && p.x <= self.max.x + slack
            && p.y >= self.min.y - slack
            && p.y <= self.max.y + slack
    }
}

fn on_segment(p: &Point2, a: &Point2, b: &Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching and collinear overlap included.
pub fn segments_intersect(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// Checks that a ring is a simple polygon: no repeated consecutive vertices,
/// no edge folding back onto its neighbour, no crossing between non-adjacent edges.
pub fn validate_simple(ring: &[Point2]) -> std::result::Result<(), String> {
    let n = ring.len();
    if n < 3 {
        return Err(format!("polygon has {n} vertices, at least 3 required"));
    }
    if let Some(p) = ring.iter().find(|p| !p.is_finite()) {
        return Err(format!("non-finite vertex ({}, {})", p.x, p.y));
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a == b {
            return Err(format!("repeated vertex at index {i}"));
        }
        // adjacent edges a-b and b-c may only share b
        let c = ring[(i + 2) % n];
        if cross(&a, &b, &c) == 0.0 {
            let ab = (b.x - a.x, b.y - a.y);
            let bc = (c.x - b.x, c.y - b.y);
            if ab.0 * bc.0 + ab.1 * bc.1 < 0.0 {
                return Err(format!("edge {} folds back onto edge {}", i, (i + 1) % n));
            }
        }
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(&a, &b, &c, &d) {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
    }
    if signed_area(ring) == 0.0 {
        return Err("polygon has zero area".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn unit_square_membership() {
        let sq = unit_square();
        assert!(point_in_polygon(&Point2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(&Point2::new(2.0, 2.0), &sq));
        assert!(point_in_polygon(&Point2::new(1.0, 0.5), &sq));
    }

    #[test]
    fn vertices_and_edges_are_inside() {
        let sq = unit_square();
        for p in &sq {
            assert!(point_in_polygon(p, &sq));
        }
        for p in [(0.5, 0.0), (0.0, 0.5), (0.5, 1.0), (1.0, 0.999)] {
            assert!(point_in_polygon(&Point2::new(p.0, p.1), &sq), "{p:?}");
        }
        assert!(!point_in_polygon(&Point2::new(1.0 + 1e-6, 0.5), &sq));
    }

    #[test]
    fn concave_notch_is_outside() {
        // U shape opening upward
        let u = vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 3.0),
            Point2::new(2.0, 3.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 3.0),
            Point2::new(0.0, 3.0),
        ];
        assert!(validate_simple(&u).is_ok());
        assert!(!point_in_polygon(&Point2::new(1.5, 2.0), &u));
        assert!(point_in_polygon(&Point2::new(0.5, 2.0), &u));
        assert!(point_in_polygon(&Point2::new(1.5, 0.5), &u));
    }

    #[test]
    fn heading_normalization() {
        assert_eq!(normalize_angle(PI), -PI);
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        let tiny = normalize_angle(-1e-18);
        assert!((-PI..PI).contains(&tiny));
        assert!(Pose::new(Point2::new(f64::NAN, 0.0), 0.0).is_err());
    }

    #[test]
    fn simplicity_checks() {
        let bowtie = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(validate_simple(&bowtie).is_err());
        assert!(validate_simple(&unit_square()[..2]).is_err());
        let spike = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
        ];
        assert!(validate_simple(&spike).is_err());
        assert!(validate_simple(&unit_square()).is_ok());
    }

    #[test]
    fn distances_and_centroid() {
        let sq = unit_square();
        assert_eq!(boundary_distance(&Point2::new(5.0, 0.5), &sq), 4.0);
        assert_eq!(boundary_distance(&Point2::new(0.5, 0.5), &sq), 0.5);
        let c = centroid(&sq);
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
        assert_eq!(signed_area(&sq), 1.0);
    }
}
