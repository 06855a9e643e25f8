//! Deterministic trajectory replay: drives a policy sample by sample under a
//! time-varying budget and scores loop-closure opportunities against what is
//! resident.

pub mod io;
pub mod world;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::map::{KeyframeId, MapData, MapStore, TxCounters};
use crate::report::{self, ReplayReport, RunEcho, RunParams, ScheduleSegment, TickRow};
use crate::strategy::{
    Budget, EventKind, GeometricManager, GeometricParams, SemanticManager, StrategyEvent,
    StrategyKind, WorkingSetPolicy,
};
use crate::zone::{ZoneId, DEFAULT_ROUTE_STEP};

/// Distance at which a route waypoint counts as reached.
pub const WAYPOINT_ARRIVAL_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, Pose)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(f64, Pose)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|(t, _)| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample {i}: non-finite time"
            )));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter(format!(
                "sample {}: time {} not after {}",
                i + 1,
                samples[i + 1].0,
                samples[i].0
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, Pose)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].0 - self.samples[0].0
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.samples.iter().map(|(_, p)| p.position).collect()
    }

    /// SHA-256 of the canonical CSV rendering.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(io::trajectory_to_csv(self).as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSchedule {
    segments: Vec<(f64, Budget)>,
}

impl BudgetSchedule {
    pub fn new(segments: Vec<(f64, Budget)>) -> Result<Self> {
        match segments.first() {
            None => return Err(Error::InvalidParameter("budget schedule is empty".into())),
            Some((t, _)) if *t != 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "budget schedule must start at t=0, starts at {t}"
                )))
            }
            _ => {}
        }
        if let Some(i) = segments
            .windows(2)
            .position(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidParameter(format!(
                "budget schedule segment {}: t_start not strictly increasing",
                i + 1
            )));
        }
        Ok(Self { segments })
    }

    pub fn constant(budget: Budget) -> Self {
        Self {
            segments: vec![(0.0, budget)],
        }
    }

    pub fn segments(&self) -> &[(f64, Budget)] {
        &self.segments
    }

    /// Budget in force at time `t` (times before 0 use the first segment).
    pub fn at(&self, t: f64) -> Budget {
        let i = self.segments.partition_point(|(start, _)| *start <= t);
        self.segments[i.saturating_sub(1)].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopClosureModel {
    pub d_lc: f64,
    pub m_lc: usize,
}

impl Default for LoopClosureModel {
    fn default() -> Self {
        Self { d_lc: 2.0, m_lc: 1 }
    }
}

impl LoopClosureModel {
    pub fn new(d_lc: f64, m_lc: usize) -> Result<Self> {
        let m = Self { d_lc, m_lc };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_lc > 0.0 && self.d_lc.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lc radius {} must be > 0",
                self.d_lc
            )));
        }
        if self.m_lc == 0 {
            return Err(Error::InvalidParameter("lc min must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcOutcome {
    NoOpportunity,
    Accepted,
    Missed,
}

impl fmt::Display for LcOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LcOutcome::NoOpportunity => "no_opportunity",
            LcOutcome::Accepted => "accepted",
            LcOutcome::Missed => "missed",
        })
    }
}

/// An opportunity exists when any mapped keyframe lies within `d_lc`; it is
/// accepted when at least `m_lc` of those keyframes are resident.
pub fn loop_closure_check(
    pose: &Pose,
    map: &MapData,
    resident: &BTreeSet<KeyframeId>,
    model: &LoopClosureModel,
) -> LcOutcome {
    let nearby = map.keyframes_within(&pose.position, model.d_lc);
    if nearby.is_empty() {
        return LcOutcome::NoOpportunity;
    }
    let hits = nearby.iter().filter(|kf| resident.contains(kf)).count();
    if hits >= model.m_lc {
        LcOutcome::Accepted
    } else {
        LcOutcome::Missed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayConfig {
    pub strategy: StrategyKind,
    pub geometric: GeometricParams,
    pub schedule: BudgetSchedule,
    pub lc: LoopClosureModel,
    pub prefetch: bool,
    /// Planned route waypoints. When absent and prefetch is on, the rest of
    /// the trajectory serves as the route.
    pub route: Option<Vec<Point2>>,
    pub route_step: f64,
}

impl ReplayConfig {
    pub fn new(strategy: StrategyKind, schedule: BudgetSchedule) -> Self {
        Self {
            strategy,
            geometric: GeometricParams::default(),
            schedule,
            lc: LoopClosureModel::default(),
            prefetch: false,
            route: None,
            route_step: DEFAULT_ROUTE_STEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometric.validate()?;
        self.lc.validate()?;
        if self.prefetch && self.strategy != StrategyKind::Semantic {
            return Err(Error::InvalidParameter(
                "prefetch is only available for the semantic strategy".into(),
            ));
        }
        if !(self.route_step > 0.0 && self.route_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "route step {} must be > 0",
                self.route_step
            )));
        }
        if self.route.as_ref().is_some_and(|r| r.is_empty()) {
            return Err(Error::InvalidParameter("route has no waypoints".into()));
        }
        Ok(())
    }

    fn route_aware(&self) -> bool {
        self.strategy == StrategyKind::Semantic && (self.route.is_some() || self.prefetch)
    }

    pub fn echo(&self, map_hash: String, trajectory_hash: String) -> RunEcho {
        RunEcho {
            map_hash,
            trajectory_hash,
            strategy: self.strategy,
            budget_schedule: self
                .schedule
                .segments()
                .iter()
                .map(|(t, b)| ScheduleSegment {
                    t_start: *t,
                    k_max: b.k_max(),
                })
                .collect(),
            params: RunParams {
                r_load: self.geometric.r_load,
                r_unload: self.geometric.r_unload,
                lc_radius: self.lc.d_lc,
                lc_min: self.lc.m_lc,
                prefetch: self.prefetch,
                route_aware: self.route_aware(),
                route_step: self.route_step,
            },
        }
    }
}

/// Upcoming-zone predictor for one run.
enum RouteSource<'a> {
    None,
    /// Zone of every trajectory sample, precomputed.
    Trajectory(Vec<Option<ZoneId>>),
    Waypoints {
        route: &'a [Point2],
        cursor: usize,
    },
}

impl RouteSource<'_> {
    fn upcoming(
        &mut self,
        map: &MapData,
        tick: usize,
        here: Point2,
        step: f64,
    ) -> Result<Option<Vec<ZoneId>>> {
        match self {
            RouteSource::None => Ok(None),
            RouteSource::Trajectory(zones) => {
                let mut out: Vec<ZoneId> = Vec::new();
                for z in zones[tick..].iter().flatten() {
                    if out.last() != Some(z) {
                        out.push(*z);
                    }
                }
                Ok(Some(out))
            }
            RouteSource::Waypoints { route, cursor } => {
                while *cursor < route.len()
                    && route[*cursor].distance(&here) <= WAYPOINT_ARRIVAL_RADIUS
                {
                    *cursor += 1;
                }
                let mut remaining = Vec::with_capacity(route.len() - *cursor + 1);
                remaining.push(here);
                remaining.extend_from_slice(&route[*cursor..]);
                map.zones().predict_route_zones(&remaining, step).map(Some)
            }
        }
    }
}

fn build_policy(map: &Arc<MapData>, config: &ReplayConfig) -> Result<Box<dyn WorkingSetPolicy>> {
    let store = MapStore::new(Arc::clone(map));
    Ok(match config.strategy {
        StrategyKind::Semantic => Box::new(SemanticManager::new(store)),
        StrategyKind::Geometric => Box::new(GeometricManager::new(store, config.geometric)?),
    })
}

/// Replays `trajectory` over `map` and returns the full report.
pub fn run(
    map: &Arc<MapData>,
    trajectory: &Trajectory,
    config: &ReplayConfig,
) -> Result<ReplayReport> {
    config.validate()?;
    let mut policy = build_policy(map, config)?;

    let mut route = match (&config.route, config.route_aware()) {
        (Some(r), true) => RouteSource::Waypoints {
            route: r,
            cursor: 0,
        },
        (None, true) => RouteSource::Trajectory(
            trajectory
                .samples()
                .iter()
                .map(|(_, p)| map.zones().locate(p))
                .collect(),
        ),
        _ => RouteSource::None,
    };

    let mut events: Vec<StrategyEvent> = Vec::new();
    let mut rows = Vec::with_capacity(trajectory.len());
    let mut prev_budget: Option<Budget> = None;

    for (i, (t, pose)) in trajectory.samples().iter().enumerate() {
        let tick = i as u64;
        let budget = config.schedule.at(*t);
        let upcoming = route.upcoming(map, i, pose.position, config.route_step)?;
        let hint = upcoming.as_deref();

        if prev_budget.is_some_and(|prev| budget < prev) {
            events.extend(policy.shrink_to(budget, tick, hint)?);
        }
        prev_budget = Some(budget);

        events.extend(policy.on_pose_update(pose, budget, tick, hint)?);
        if config.prefetch {
            if let Some(zones) = hint {
                events.extend(policy.prefetch_zones(zones, budget, tick)?);
            }
        }

        let store = policy.store();
        let lc = loop_closure_check(pose, map, store.resident(), &config.lc);
        rows.push(TickRow {
            t: *t,
            resident_count: store.resident_count(),
            resident_bytes: store.resident_bytes(),
            k_max: budget.k_max(),
            cum_transactions: store.log().counters().total_transactions(),
            lc_outcome: lc,
        });
    }

    let counters = policy.store().log().counters();
    let from_events = transaction_counters(&events);
    if counters != from_events {
        return Err(Error::Inconsistent(format!(
            "store counters {counters:?} disagree with strategy events {from_events:?}"
        )));
    }
    let echo = config.echo(map.content_hash(), trajectory.content_hash());
    report::summarize(echo, events, rows)
}

/// Transaction counters implied by a strategy event stream.
pub fn transaction_counters(events: &[StrategyEvent]) -> TxCounters {
    let mut c = TxCounters::default();
    for ev in events {
        let n = ev.count as u64;
        match ev.kind {
            EventKind::ZoneLoad => {
                c.loads_issued += 1;
                c.batch_loads += 1;
                c.keyframes_loaded += n;
            }
            EventKind::ZoneUnload => {
                c.unloads_issued += 1;
                c.batch_unloads += 1;
                c.keyframes_unloaded += n;
            }
            EventKind::KfLoad => {
                c.loads_issued += 1;
                c.keyframes_loaded += n;
            }
            EventKind::KfUnload => {
                c.unloads_issued += 1;
                c.keyframes_unloaded += n;
            }
            _ => {}
        }
    }
    c
}
