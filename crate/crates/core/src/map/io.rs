//! Map directory format: `zones.json`, `keyframes.jsonl`, `index.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::map::{KeyframeId, KeyframeRecord, MapData};
use crate::zone::ZoneSet;

pub const ZONES_FILE: &str = "zones.json";
pub const KEYFRAMES_FILE: &str = "keyframes.jsonl";
pub const INDEX_FILE: &str = "index.json";

#[derive(Serialize)]
struct KeyframeRow {
    id: u64,
    x: f64,
    y: f64,
    theta: f64,
    payload_bytes: u64,
    payload_seed: u64,
}

// signed on input so negative values get a validation error, not a parse error
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKeyframeRow {
    id: i64,
    x: f64,
    y: f64,
    theta: f64,
    payload_bytes: i64,
    payload_seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexFile {
    kf_to_zone: BTreeMap<u64, u32>,
    zone_counts: BTreeMap<u32, usize>,
}

/// Canonical byte content of the three map files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapFiles {
    pub zones_json: String,
    pub keyframes_jsonl: String,
    pub index_json: String,
}

impl MapFiles {
    pub(crate) fn render(map: &MapData) -> Self {
        let mut keyframes_jsonl = String::new();
        for kf in map.keyframes() {
            let row = KeyframeRow {
                id: kf.id.0,
                x: kf.pose.position.x,
                y: kf.pose.position.y,
                theta: kf.pose.heading(),
                payload_bytes: kf.payload_bytes,
                payload_seed: kf.payload_seed,
            };
            keyframes_jsonl.push_str(&serde_json::to_string(&row).expect("row serializes"));
            keyframes_jsonl.push('\n');
        }
        let index = IndexFile {
            kf_to_zone: map
                .index()
                .kf_to_zone()
                .iter()
                .map(|(k, z)| (k.0, z.0))
                .collect(),
            zone_counts: map
                .index()
                .zone_counts()
                .iter()
                .map(|(z, &n)| (z.0, n))
                .collect(),
        };
        let mut index_json = serde_json::to_string_pretty(&index).expect("index serializes");
        index_json.push('\n');
        Self {
            zones_json: map.zones().to_json(),
            keyframes_jsonl,
            index_json,
        }
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.zones_json, &self.keyframes_jsonl, &self.index_json] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            (ZONES_FILE, &self.zones_json),
            (KEYFRAMES_FILE, &self.keyframes_jsonl),
            (INDEX_FILE, &self.index_json),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        Ok(Self {
            zones_json: read(ZONES_FILE)?,
            keyframes_jsonl: read(KEYFRAMES_FILE)?,
            index_json: read(INDEX_FILE)?,
        })
    }

    /// Parses and validates; `dir` only labels error messages.
    pub fn parse(&self, dir: &Path) -> Result<MapData> {
        let zones = ZoneSet::from_json(&self.zones_json, &dir.join(ZONES_FILE))?;
        let records = parse_keyframes(&self.keyframes_jsonl, &dir.join(KEYFRAMES_FILE))?;
        let index_path = dir.join(INDEX_FILE);
        let stored: IndexFile = serde_json::from_str(&self.index_json)
            .map_err(|e| Error::format(&index_path, e.to_string()))?;
        let map = MapData::new(zones, records).map_err(|e| match e {
            Error::EmptyKeyframes | Error::DuplicateKeyframe(_) => {
                Error::format(dir.join(KEYFRAMES_FILE), e.to_string())
            }
            Error::EmptyZoneSet => Error::format(dir.join(ZONES_FILE), e.to_string()),
            other => other,
        })?;
        let rebuilt = IndexFile {
            kf_to_zone: map
                .index()
                .kf_to_zone()
                .iter()
                .map(|(k, z)| (k.0, z.0))
                .collect(),
            zone_counts: map
                .index()
                .zone_counts()
                .iter()
                .map(|(z, &n)| (z.0, n))
                .collect(),
        };
        if let Some((k, z)) = stored
            .kf_to_zone
            .iter()
            .find(|(k, z)| rebuilt.kf_to_zone.get(k) != Some(z))
        {
            return Err(Error::format(
                &index_path,
                format!(
                    "field `kf_to_zone`: keyframe {k} recorded in zone {z}, geometry assigns {:?}",
                    rebuilt.kf_to_zone.get(k)
                ),
            ));
        }
        if stored.kf_to_zone.len() != rebuilt.kf_to_zone.len() {
            return Err(Error::format(
                &index_path,
                format!(
                    "field `kf_to_zone`: {} entries, map has {} keyframes",
                    stored.kf_to_zone.len(),
                    rebuilt.kf_to_zone.len()
                ),
            ));
        }
        if stored.zone_counts != rebuilt.zone_counts {
            return Err(Error::format(
                &index_path,
                "field `zone_counts` disagrees with kf_to_zone",
            ));
        }
        Ok(map)
    }
}

fn parse_keyframes(text: &str, path: &Path) -> Result<Vec<KeyframeRecord>> {
    let mut out = Vec::new();
    let mut last: Option<u64> = None;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 1;
        let err = |detail: String| Error::format(path, format!("line {lineno}: {detail}"));
        let row: RawKeyframeRow = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if row.id < 0 {
            return Err(err(format!(
                "field `id` must be non-negative, got {}",
                row.id
            )));
        }
        if row.payload_bytes <= 0 {
            return Err(err(format!(
                "field `payload_bytes` must be positive, got {}",
                row.payload_bytes
            )));
        }
        let id = row.id as u64;
        if last.is_some_and(|prev| id <= prev) {
            return Err(err(format!("field `id`: {id} out of ascending order")));
        }
        last = Some(id);
        let pose = Pose::new(Point2::new(row.x, row.y), row.theta)
            .map_err(|e| err(format!("fields `x`/`y`/`theta`: {e}")))?;
        out.push(KeyframeRecord {
            id: KeyframeId(id),
            pose,
            payload_bytes: row.payload_bytes as u64,
            payload_seed: row.payload_seed,
        });
    }
    Ok(out)
}

pub fn write_map(map: &MapData, dir: &Path) -> Result<()> {
    map.files().write(dir)
}

pub fn read_map(dir: &Path) -> Result<MapData> {
    MapFiles::read(dir)?.parse(dir)
}
