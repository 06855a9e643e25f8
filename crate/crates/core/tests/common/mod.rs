#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use zonemem::geometry::Point2;
use zonemem::map::{KeyframeId, MapData, TxEvent, TxKind};
use zonemem::replay::world::{self, Patrol, WorldSpec};
use zonemem::replay::{self, BudgetSchedule, ReplayConfig};
use zonemem::report::ReplayReport;
use zonemem::strategy::{SemanticManager, WorkingSetPolicy};
use zonemem::{Budget, Pose, StrategyKind, ZoneId};

/// Pose at the middle of zone `i` of a strip map.
pub fn strip_center(i: usize) -> Pose {
    Pose::at(10.0 * i as f64 + 5.0, 5.0, 0.0)
}

/// Highest residency reached after any single store transaction.
pub fn instant_peak(events: &[TxEvent]) -> usize {
    let mut resident: i64 = 0;
    let mut peak = 0;
    for e in events {
        match e.kind {
            TxKind::BatchLoad | TxKind::KfLoad => resident += e.count as i64,
            TxKind::BatchUnload | TxKind::KfUnload => resident -= e.count as i64,
        }
        peak = peak.max(resident);
    }
    peak as usize
}

/// Keyframes of every active zone, gathered by scanning the whole map.
pub fn brute_union(map: &MapData, active: impl Fn(ZoneId) -> bool) -> BTreeSet<KeyframeId> {
    map.keyframes()
        .iter()
        .filter(|k| active(k.zone_id))
        .map(|k| k.id)
        .collect()
}

/// Straight-line model of zone-level LRU: a list of (zone, tick entered),
/// scanned linearly for the oldest entry.
#[derive(Debug, Default)]
pub struct LruOracle {
    pub sizes: Vec<usize>,
    pub k_max: usize,
    pub active: Vec<(usize, u64)>,
    pub current: Option<usize>,
    pub loads: Vec<usize>,
    pub evictions: Vec<usize>,
}

impl LruOracle {
    pub fn new(sizes: Vec<usize>, k_max: usize) -> Self {
        Self {
            sizes,
            k_max,
            ..Default::default()
        }
    }

    pub fn enter(&mut self, z: usize, tick: u64) {
        self.enter_with_hint(z, tick, &[]);
    }

    /// Zones listed in `hint` are evicted only after every unlisted one.
    pub fn enter_with_hint(&mut self, z: usize, tick: u64, hint: &[usize]) {
        if self.current == Some(z) {
            return;
        }
        self.current = Some(z);
        if let Some(entry) = self.active.iter_mut().find(|(a, _)| *a == z) {
            entry.1 = tick;
            return;
        }
        let mut predicted: usize = self
            .active
            .iter()
            .map(|(a, _)| self.sizes[*a])
            .sum::<usize>()
            + self.sizes[z];
        while predicted > self.k_max && !self.active.is_empty() {
            let mut oldest = 0;
            for i in 1..self.active.len() {
                let (za, ta) = self.active[i];
                let (zb, tb) = self.active[oldest];
                let (ha, hb) = (hint.contains(&za), hint.contains(&zb));
                if (!ha && hb) || (ha == hb && (ta < tb || (ta == tb && za < zb))) {
                    oldest = i;
                }
            }
            let (victim, _) = self.active.remove(oldest);
            predicted -= self.sizes[victim];
            self.evictions.push(victim);
        }
        self.active.push((z, tick));
        self.loads.push(z);
    }
}

/// Random zone sizes, a budget that fits every zone, and a visit sequence.
pub fn random_case(
    rng: &mut impl Rng,
    max_zones: usize,
    max_steps: usize,
) -> (Vec<usize>, usize, Vec<usize>) {
    let n = rng.gen_range(2..=max_zones);
    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=20)).collect();
    let largest = *sizes.iter().max().unwrap();
    let total: usize = sizes.iter().sum();
    let k_max = rng.gen_range(largest..=total);
    let steps = rng.gen_range(1..=max_steps);
    let seq = (0..steps).map(|_| rng.gen_range(0..n)).collect();
    (sizes, k_max, seq)
}

pub fn semantic_manager(map: MapData) -> SemanticManager {
    SemanticManager::new(zonemem::MapStore::new(Arc::new(map)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// Residency never exceeds the budget, counting every store transaction.
    Budget,
    /// Resident set equals the union of active-zone rosters after each update.
    Union,
}

/// Runs a semantic manager over `seq`, applying `check` after every update.
pub fn drive_semantic(
    mgr: &mut SemanticManager,
    k_max: usize,
    seq: &[usize],
    check: Check,
) -> Result<(), String> {
    let budget = Budget::new(k_max).unwrap();
    for (t, &z) in seq.iter().enumerate() {
        mgr.on_pose_update(&strip_center(z), budget, t as u64, None)
            .map_err(|e| e.to_string())?;
        let store = mgr.store();
        match check {
            Check::Budget => {
                let peak = instant_peak(store.log().events()).max(store.peak_resident());
                if peak > k_max {
                    return Err(format!("step {t}: residency reached {peak} > {k_max}"));
                }
            }
            Check::Union => {
                let expected = brute_union(store.map(), |zone| mgr.state().is_active(zone));
                if *store.resident() != expected {
                    return Err(format!(
                        "step {t}: resident set ({}) differs from active union ({})",
                        store.resident().len(),
                        expected.len()
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn canonical_map() -> Arc<MapData> {
    Arc::new(world::generate_world(&WorldSpec::default()).unwrap())
}

pub fn default_patrol(map: &MapData) -> Patrol {
    world::generate_patrol_route(map, &world::default_visit_order(map)).unwrap()
}

pub fn revisit_patrol(map: &MapData) -> Patrol {
    world::generate_patrol_route(map, &world::revisit_order(map)).unwrap()
}

pub fn run(
    map: &Arc<MapData>,
    patrol: &Patrol,
    strategy: StrategyKind,
    schedule: BudgetSchedule,
) -> ReplayReport {
    let config = ReplayConfig::new(strategy, schedule);
    replay::run(map, &patrol.trajectory, &config).unwrap()
}

pub fn budget_of(map: &MapData, factor: f64) -> Budget {
    Budget::new(((map.largest_zone() as f64) * factor).round() as usize).unwrap()
}

/// Budget schedule for the pressure scenario: 1.5x the largest zone, then a
/// drop to 40% of the highest residency either strategy reaches without
/// pressure, from the midpoint of the patrol on.
pub fn pressure_schedule(map: &Arc<MapData>, patrol: &Patrol) -> (BudgetSchedule, usize) {
    let base = budget_of(map, 1.5);
    let peak = [StrategyKind::Semantic, StrategyKind::Geometric]
        .into_iter()
        .map(|s| {
            run(map, patrol, s, BudgetSchedule::constant(base))
                .summary
                .peak_resident_count
        })
        .max()
        .unwrap();
    let low = Budget::new(((peak as f64) * 0.4).round() as usize).unwrap();
    let mid = patrol.trajectory.duration() / 2.0;
    (
        BudgetSchedule::new(vec![(0.0, base), (mid, low)]).unwrap(),
        peak,
    )
}

/// Winding number of `ring` around `p` by summing the signed angles each
/// edge subtends.
pub fn winding_number(p: &Point2, ring: &[Point2]) -> i64 {
    let mut total = 0.0;
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        let (ax, ay) = (a.x - p.x, a.y - p.y);
        let (bx, by) = (b.x - p.x, b.y - p.y);
        total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    (total / std::f64::consts::TAU).round() as i64
}

/// Random star-shaped (hence simple) polygon around a random center.
pub fn star_polygon(rng: &mut impl Rng) -> Vec<Point2> {
    let n = rng.gen_range(3..=12);
    let cx = rng.gen_range(-10.0..10.0);
    let cy = rng.gen_range(-10.0..10.0);
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    if angles.len() < 3 {
        angles = vec![0.0, 2.1, 4.2];
    }
    angles
        .iter()
        .map(|&th| {
            let r = rng.gen_range(0.5..5.0);
            Point2::new(cx + r * th.cos(), cy + r * th.sin())
        })
        .collect()
}
