//! Synthetic corridor-and-rooms worlds and patrol trajectories.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::map::{KeyframeId, KeyframeRecord, MapData};
use crate::replay::Trajectory;
use crate::zone::{Zone, ZoneId, ZoneSet};

pub const CORRIDOR_NAME: &str = "corridor";
/// Patrol speed in m/s.
pub const PATROL_SPEED: f64 = 1.0;
/// Trajectory sampling rate in Hz.
pub const PATROL_RATE_HZ: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub rooms: usize,
    pub room_w: f64,
    pub room_h: f64,
    pub corridor_w: f64,
    pub kf_spacing: f64,
    pub payload_bytes: u64,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            rooms: 6,
            room_w: 8.0,
            room_h: 6.0,
            corridor_w: 3.0,
            kf_spacing: 0.5,
            payload_bytes: 2_097_152,
            seed: 42,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rooms == 0 {
            return Err(Error::InvalidParameter("rooms must be at least 1".into()));
        }
        for (name, v) in [
            ("room width", self.room_w),
            ("room height", self.room_h),
            ("corridor width", self.corridor_w),
            ("keyframe spacing", self.kf_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if self.payload_bytes == 0 {
            return Err(Error::InvalidParameter("payload bytes must be > 0".into()));
        }
        Ok(())
    }

    /// Corridor (id 0) along the bottom, rooms 1..=N side by side above it.
    pub fn zones(&self) -> Result<ZoneSet> {
        let width = self.rooms as f64 * self.room_w;
        let mut zones = vec![Zone::rect(
            0,
            CORRIDOR_NAME,
            0.0,
            0.0,
            width,
            self.corridor_w,
        )?];
        for i in 0..self.rooms {
            let x0 = i as f64 * self.room_w;
            zones.push(Zone::rect(
                i as u32 + 1,
                format!("room_{}", i + 1),
                x0,
                self.corridor_w,
                x0 + self.room_w,
                self.corridor_w + self.room_h,
            )?);
        }
        ZoneSet::new(zones)
    }
}

/// Grid coordinates along one axis: cell centres at `spacing` pitch, inset by half a pitch.
fn lane_positions(lo: f64, extent: f64, spacing: f64) -> Vec<f64> {
    let n = (extent / spacing + 1e-9).floor() as usize;
    if n == 0 {
        return vec![lo + extent / 2.0];
    }
    (0..n)
        .map(|i| lo + spacing / 2.0 + i as f64 * spacing)
        .collect()
}

/// Boustrophedon path covering a rectangle; lanes run along x.
pub fn lawnmower_path(x0: f64, y0: f64, w: f64, h: f64, spacing: f64) -> Vec<Point2> {
    let xs = lane_positions(x0, w, spacing);
    let ys = lane_positions(y0, h, spacing);
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    let mut path = Vec::with_capacity(ys.len() * 2);
    for (j, &y) in ys.iter().enumerate() {
        let (a, b) = if j % 2 == 0 {
            (first, last)
        } else {
            (last, first)
        };
        path.push(Point2::new(a, y));
        if b != a {
            path.push(Point2::new(b, y));
        }
    }
    path
}

pub fn polyline_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Poses at arc-length multiples of `spacing` along `path`, heading along the
/// segment each sample lies on. Returns `(arc_length, pose)` pairs.
pub fn resample(path: &[Point2], spacing: f64) -> Vec<(f64, Pose)> {
    let total = polyline_length(path);
    let count = (total / spacing + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(count + 1);
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    for k in 0..=count {
        let s = (k as f64 * spacing).min(total);
        while seg + 2 < path.len() && seg_start + path[seg].distance(&path[seg + 1]) < s - 1e-9 {
            seg_start += path[seg].distance(&path[seg + 1]);
            seg += 1;
        }
        out.push((s, pose_on_segment(path, seg, s - seg_start)));
    }
    out
}

fn pose_on_segment(path: &[Point2], seg: usize, offset: f64) -> Pose {
    if path.len() == 1 {
        return Pose::new(path[0], 0.0).expect("finite");
    }
    let (a, b) = (path[seg], path[seg + 1]);
    let len = a.distance(&b);
    let heading = (b.y - a.y).atan2(b.x - a.x);
    let p = if len == 0.0 {
        a
    } else {
        a.lerp(&b, (offset / len).clamp(0.0, 1.0))
    };
    Pose::new(p, heading).expect("finite")
}

/// Builds the synthetic map: one corridor zone, one zone per room, keyframes
/// every `kf_spacing` meters along a lawnmower mapping path through each zone
/// in id order.
pub fn generate_world(spec: &WorldSpec) -> Result<MapData> {
    spec.validate()?;
    let zones = spec.zones()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::new();
    for zone in zones.iter() {
        let bb = zone.bbox();
        let path = lawnmower_path(
            bb.min.x,
            bb.min.y,
            bb.max.x - bb.min.x,
            bb.max.y - bb.min.y,
            spec.kf_spacing,
        );
        for (_, pose) in resample(&path, spec.kf_spacing) {
            records.push(KeyframeRecord {
                id: KeyframeId(records.len() as u64),
                pose,
                payload_bytes: spec.payload_bytes,
                payload_seed: rng.next_u64(),
            });
        }
    }
    MapData::new(zones, records)
}

/// A row of 10 m × 10 m zones (`zone i` spans x ∈ [10i, 10i+10]) holding the
/// given number of keyframes each, spread along y = 5.
pub fn strip_map(sizes: &[usize], payload_bytes: u64) -> MapData {
    let zones = (0..sizes.len())
        .map(|i| {
            let x0 = 10.0 * i as f64;
            Zone::rect(i as u32, format!("zone_{i}"), x0, 0.0, x0 + 10.0, 10.0).expect("rect")
        })
        .collect();
    let zones = ZoneSet::new(zones).expect("distinct ids");
    let mut records = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        for j in 0..n {
            let x = 10.0 * i as f64 + 1.0 + 8.0 * j as f64 / n.max(1) as f64;
            records.push(KeyframeRecord {
                id: KeyframeId(records.len() as u64),
                pose: Pose::at(x, 5.0, 0.0),
                payload_bytes: payload_bytes.max(1),
                payload_seed: records.len() as u64,
            });
        }
    }
    if records.is_empty() {
        // the index needs at least one keyframe; park it in the last zone
        records.push(KeyframeRecord {
            id: KeyframeId(0),
            pose: Pose::at(10.0 * sizes.len().max(1) as f64 - 0.5, 9.5, 0.0),
            payload_bytes: payload_bytes.max(1),
            payload_seed: 0,
        });
    }
    MapData::new(zones, records).expect("valid strip map")
}

/// A patrol: waypoints through zone centroids plus the sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Patrol {
    pub waypoints: Vec<Point2>,
    pub trajectory: Trajectory,
}

/// Waypoints visiting the centroids of `visit` in order. Moves between two
/// non-corridor zones go down to the corridor axis, along it, and back up.
pub fn patrol_waypoints(map: &MapData, visit: &[ZoneId]) -> Result<Vec<Point2>> {
    let zones = map.zones();
    let first = *visit
        .first()
        .ok_or_else(|| Error::InvalidParameter("visit order is empty".into()))?;
    for &z in visit {
        if !zones.contains_id(z) {
            return Err(Error::UnknownZone(z));
        }
    }
    let corridor = zones.by_name(CORRIDOR_NAME);
    let axis_y = corridor.map(|c| c.centroid().y);
    let centroid = |z: ZoneId| zones.get(z).expect("checked").centroid();
    let door = |z: ZoneId| Point2::new(centroid(z).x, axis_y.expect("corridor present"));

    let mut wps = vec![centroid(first)];
    let mut prev = first;
    for &next in &visit[1..] {
        if next == prev {
            continue;
        }
        match corridor.map(|c| c.id()) {
            Some(cid) if prev != cid && next != cid => {
                wps.extend([door(prev), door(next), centroid(next)]);
            }
            Some(cid) if prev == cid => wps.extend([door(next), centroid(next)]),
            Some(_) => wps.extend([door(prev), centroid(next)]),
            None => wps.push(centroid(next)),
        }
        prev = next;
    }
    wps.dedup();
    if wps.len() == 1 {
        let c = wps[0];
        let around = [
            (0.5, 0.0),
            (0.5, 0.5),
            (-0.5, 0.5),
            (-0.5, -0.5),
            (0.5, -0.5),
            (0.5, 0.0),
        ];
        wps.extend(
            around
                .iter()
                .map(|&(dx, dy)| Point2::new(c.x + dx, c.y + dy)),
        );
        wps.push(c);
    }
    Ok(wps)
}

/// Constant-speed (1 m/s) trajectory sampled at 10 Hz along the patrol waypoints.
pub fn generate_patrol_route(map: &MapData, visit: &[ZoneId]) -> Result<Patrol> {
    let waypoints = patrol_waypoints(map, visit)?;
    let trajectory = trajectory_along(&waypoints)?;
    Ok(Patrol {
        waypoints,
        trajectory,
    })
}

/// Samples a polyline at the patrol speed and rate; the final waypoint is
/// always included.
pub fn trajectory_along(waypoints: &[Point2]) -> Result<Trajectory> {
    let step = PATROL_SPEED / PATROL_RATE_HZ;
    let total = polyline_length(waypoints);
    let mut samples: Vec<(f64, Pose)> = resample(waypoints, step)
        .into_iter()
        .enumerate()
        .map(|(k, (_, pose))| (k as f64 / PATROL_RATE_HZ, pose))
        .collect();
    let (last_t, last_pose) = *samples.last().expect("at least one sample");
    let end = *waypoints.last().expect("non-empty");
    if last_pose.position.distance(&end) > 1e-9 {
        let t_end = (total / PATROL_SPEED).max(last_t + 1e-6);
        samples.push((t_end, Pose::new(end, last_pose.heading())?));
    }
    Trajectory::new(samples)
}

/// Rooms in ascending order, then back to the first room.
pub fn default_visit_order(map: &MapData) -> Vec<ZoneId> {
    let rooms = room_ids(map);
    let mut order = rooms.clone();
    if let Some(&first) = rooms.first() {
        if rooms.len() > 1 {
            order.push(first);
        }
    }
    if order.is_empty() {
        order.extend(map.zones().ids().next());
    }
    order
}

/// Rooms out and back: 1, 2, …, N, N-1, …, 1. Every room except the last is
/// revisited.
pub fn revisit_order(map: &MapData) -> Vec<ZoneId> {
    let rooms = room_ids(map);
    let mut order = rooms.clone();
    order.extend(rooms.iter().rev().skip(1));
    if order.is_empty() {
        order.extend(map.zones().ids().next());
    }
    order
}

fn room_ids(map: &MapData) -> Vec<ZoneId> {
    map.zones()
        .iter()
        .filter(|z| z.name() != CORRIDOR_NAME)
        .map(|z| z.id())
        .collect()
}
