//! Zone-level keyframe working-set management for long-term SLAM maps.
//!
//! A map of keyframes is partitioned into named semantic zones (rooms, a
//! corridor). [`strategy::SemanticManager`] keeps whole zones resident and
//! evicts least-recently-used zones under a keyframe budget;
//! [`strategy::GeometricManager`] is the per-keyframe radius baseline. The
//! [`replay`] module drives either policy along a trajectory and [`report`]
//! turns the run into JSON/CSV.

pub mod error;
pub mod geometry;
pub mod map;
pub mod replay;
pub mod report;
pub mod strategy;
pub mod zone;

pub use error::{Error, Result};
pub use geometry::{Point2, Pose};
pub use map::{Keyframe, KeyframeId, MapData, MapStore};
pub use strategy::{Budget, StrategyKind, WorkingSetPolicy};
pub use zone::{Zone, ZoneId, ZoneSet};
