//! Map database: keyframes, the keyframe↔zone index, the transaction-counting
//! store and the on-disk map directory format.

mod index;
mod io;
mod spatial;
mod store;

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::zone::{ZoneId, ZoneSet};

pub use index::{IndexWarning, ZoneIndex};
pub use io::{read_map, write_map, MapFiles, INDEX_FILE, KEYFRAMES_FILE, ZONES_FILE};
pub use store::{MapStore, TransactionLog, TxCounters, TxEvent, TxKind};

use spatial::PointGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyframeId(pub u64);

impl fmt::Display for KeyframeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kf{}", self.0)
    }
}

/// A keyframe as stored on disk, before zone assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeRecord {
    pub id: KeyframeId,
    pub pose: Pose,
    pub payload_bytes: u64,
    pub payload_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub id: KeyframeId,
    pub pose: Pose,
    pub zone_id: ZoneId,
    pub payload_bytes: u64,
    pub payload_seed: u64,
}

impl Keyframe {
    pub fn position(&self) -> Point2 {
        self.pose.position
    }

    pub fn payload(&self) -> Payload {
        Payload {
            seed: self.payload_seed,
            len: self.payload_bytes,
        }
    }

    pub fn record(&self) -> KeyframeRecord {
        KeyframeRecord {
            id: self.id,
            pose: self.pose,
            payload_bytes: self.payload_bytes,
            payload_seed: self.payload_seed,
        }
    }
}

/// Synthetic keyframe payload; bytes are generated on demand from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Payload {
    pub seed: u64,
    pub len: u64,
}

impl Payload {
    pub fn materialize(&self) -> Vec<u8> {
        let mut buf = vec![0u8; self.len as usize];
        ChaCha8Rng::seed_from_u64(self.seed).fill_bytes(&mut buf);
        buf
    }
}

/// Read-only map content shared by every store and run over the same map.
#[derive(Debug, Clone)]
pub struct MapData {
    zones: ZoneSet,
    keyframes: Vec<Keyframe>,
    positions: Vec<Point2>,
    index: ZoneIndex,
    warnings: Vec<IndexWarning>,
    grid: PointGrid,
}

impl PartialEq for MapData {
    fn eq(&self, other: &Self) -> bool {
        self.zones == other.zones && self.keyframes == other.keyframes && self.index == other.index
    }
}

impl MapData {
    /// Assigns every keyframe to a zone and builds the index.
    pub fn new(zones: ZoneSet, mut records: Vec<KeyframeRecord>) -> Result<Self> {
        records.sort_by_key(|r| r.id);
        if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateKeyframe(w[0].id));
        }
        if let Some(r) = records.iter().find(|r| r.payload_bytes == 0) {
            return Err(Error::InvalidParameter(format!(
                "keyframe {} has payload_bytes 0",
                r.id
            )));
        }
        let (index, warnings) = ZoneIndex::build(&records, &zones)?;
        let keyframes: Vec<Keyframe> = records
            .iter()
            .map(|r| Keyframe {
                id: r.id,
                pose: r.pose,
                zone_id: index.zone_of(r.id).expect("indexed"),
                payload_bytes: r.payload_bytes,
                payload_seed: r.payload_seed,
            })
            .collect();
        let positions: Vec<Point2> = keyframes.iter().map(|k| k.position()).collect();
        let grid = PointGrid::new(&positions, 2.0);
        Ok(Self {
            zones,
            keyframes,
            positions,
            index,
            warnings,
            grid,
        })
    }

    pub fn zones(&self) -> &ZoneSet {
        &self.zones
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn index(&self) -> &ZoneIndex {
        &self.index
    }

    /// Keyframes that fell outside every zone and were snapped to the nearest one.
    pub fn warnings(&self) -> &[IndexWarning] {
        &self.warnings
    }

    pub fn keyframe(&self, id: KeyframeId) -> Option<&Keyframe> {
        self.keyframes
            .binary_search_by_key(&id, |k| k.id)
            .ok()
            .map(|i| &self.keyframes[i])
    }

    /// Ids of keyframes within `radius` of `center`, ascending.
    pub fn keyframes_within(&self, center: &Point2, radius: f64) -> Vec<KeyframeId> {
        self.grid
            .within(&self.positions, center, radius)
            .into_iter()
            .map(|i| self.keyframes[i].id)
            .collect()
    }

    /// Size of the largest zone roster, |S_z| maximized over zones.
    pub fn largest_zone(&self) -> usize {
        self.index
            .zone_counts()
            .values()
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn files(&self) -> MapFiles {
        MapFiles::render(self)
    }

    /// SHA-256 over the canonical serialization of all three map files.
    pub fn content_hash(&self) -> String {
        self.files().hash()
    }
}
