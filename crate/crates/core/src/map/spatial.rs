use std::collections::HashMap;

use crate::geometry::Point2;

/// Uniform-grid bucket index over keyframe positions for radius queries.
#[derive(Debug, Clone)]
pub(crate) struct PointGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    pub(crate) fn new(points: &[Point2], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: &Point2, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices of all points within `radius` of `center`, ascending.
    pub(crate) fn within(&self, points: &[Point2], center: &Point2, radius: f64) -> Vec<usize> {
        let r_sq = radius * radius;
        let lo = Self::key(
            &Point2::new(center.x - radius, center.y - radius),
            self.cell,
        );
        let hi = Self::key(
            &Point2::new(center.x + radius, center.y + radius),
            self.cell,
        );
        let mut out = Vec::new();
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                if let Some(bucket) = self.buckets.get(&(cx, cy)) {
                    out.extend(
                        bucket
                            .iter()
                            .copied()
                            .filter(|&i| points[i].distance_sq(center) <= r_sq),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}
