//! Map-management policies: the zone-level working-set manager and the
//! per-keyframe geometric baseline, both driven through [`WorkingSetPolicy`].

pub mod geometric;
pub mod semantic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::map::{KeyframeId, MapStore};
use crate::zone::ZoneId;

pub use geometric::{GeometricManager, GeometricParams, GeometricState};
pub use semantic::{SemanticManager, WorkingSetState};

/// Maximum number of resident keyframes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Budget(usize);

impl Budget {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidParameter("k_max must be at least 1".into()));
        }
        Ok(Self(k_max))
    }

    pub fn k_max(&self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Budget {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        Budget::new(k)
    }
}

impl From<Budget> for usize {
    fn from(b: Budget) -> usize {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ZoneEnter,
    ZoneLoad,
    ZoneUnload,
    KfLoad,
    KfUnload,
    Prefetch,
    OverBudgetZone,
    BudgetViolation,
}

impl EventKind {
    /// Whether the event corresponds to one database transaction.
    pub fn is_transaction(self) -> bool {
        matches!(
            self,
            EventKind::ZoneLoad | EventKind::ZoneUnload | EventKind::KfLoad | EventKind::KfUnload
        )
    }
}

/// What a policy did at one tick. `subject` is a zone id for zone-level kinds
/// and a keyframe id for `kf_load`, `kf_unload` and `budget_violation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyEvent {
    pub tick: u64,
    pub kind: EventKind,
    pub subject: u64,
    pub count: usize,
}

impl StrategyEvent {
    pub fn zone(tick: u64, kind: EventKind, zone: ZoneId, count: usize) -> Self {
        Self {
            tick,
            kind,
            subject: zone.0 as u64,
            count,
        }
    }

    pub fn keyframe(tick: u64, kind: EventKind, kf: KeyframeId) -> Self {
        Self {
            tick,
            kind,
            subject: kf.0,
            count: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Semantic,
    Geometric,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Semantic => "semantic",
            StrategyKind::Geometric => "geometric",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semantic" => Ok(StrategyKind::Semantic),
            "geometric" => Ok(StrategyKind::Geometric),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

/// Common driving interface for the replay loop.
pub trait WorkingSetPolicy {
    fn kind(&self) -> StrategyKind;

    fn store(&self) -> &MapStore;

    /// Reacts to a new pose estimate.
    fn on_pose_update(
        &mut self,
        pose: &Pose,
        budget: Budget,
        tick: u64,
        route_hint: Option<&[ZoneId]>,
    ) -> Result<Vec<StrategyEvent>>;

    /// Evicts until residency fits `budget` (or nothing more is evictable).
    fn shrink_to(
        &mut self,
        budget: Budget,
        tick: u64,
        route_hint: Option<&[ZoneId]>,
    ) -> Result<Vec<StrategyEvent>>;

    /// Speculative loading given the zones predicted along the remaining
    /// route. Policies without prefetch support do nothing.
    fn prefetch_zones(
        &mut self,
        _upcoming: &[ZoneId],
        _budget: Budget,
        _tick: u64,
    ) -> Result<Vec<StrategyEvent>> {
        Ok(Vec::new())
    }
}
