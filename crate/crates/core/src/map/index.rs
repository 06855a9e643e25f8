use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::map::{KeyframeId, KeyframeRecord};
use crate::zone::{ZoneId, ZoneSet};

/// A keyframe that lay outside every zone and was snapped to the nearest one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexWarning {
    pub keyframe: KeyframeId,
    pub zone: ZoneId,
    pub distance: f64,
}

/// Bidirectional keyframe↔zone metadata.
///
/// Every zone of the map has an entry, possibly with an empty roster.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneIndex {
    kf_to_zone: BTreeMap<KeyframeId, ZoneId>,
    zone_to_kfs: BTreeMap<ZoneId, Vec<KeyframeId>>,
    zone_counts: BTreeMap<ZoneId, usize>,
}

impl ZoneIndex {
    pub fn build(
        keyframes: &[KeyframeRecord],
        zones: &ZoneSet,
    ) -> Result<(Self, Vec<IndexWarning>)> {
        if zones.is_empty() {
            return Err(Error::EmptyZoneSet);
        }
        if keyframes.is_empty() {
            return Err(Error::EmptyKeyframes);
        }
        let mut warnings = Vec::new();
        let mut assignment = BTreeMap::new();
        for kf in keyframes {
            let p = kf.pose.position;
            let zone = match zones.locate_point(&p) {
                Some(z) => z,
                None => {
                    let (z, distance) = zones.nearest(&p).expect("zone set is non-empty");
                    log::warn!("{} at ({:.3}, {:.3}) lies outside every zone; assigned to {z} ({distance:.3} m away)", kf.id, p.x, p.y);
                    warnings.push(IndexWarning {
                        keyframe: kf.id,
                        zone: z,
                        distance,
                    });
                    z
                }
            };
            if assignment.insert(kf.id, zone).is_some() {
                return Err(Error::DuplicateKeyframe(kf.id));
            }
        }
        Ok((Self::from_assignment(assignment, zones.ids()), warnings))
    }

    /// Builds the index from an explicit keyframe→zone mapping. `zones` lists
    /// every zone that should appear, including empty ones.
    pub fn from_assignment(
        kf_to_zone: BTreeMap<KeyframeId, ZoneId>,
        zones: impl IntoIterator<Item = ZoneId>,
    ) -> Self {
        let mut zone_to_kfs: BTreeMap<ZoneId, Vec<KeyframeId>> =
            zones.into_iter().map(|z| (z, Vec::new())).collect();
        // BTreeMap iteration is ascending, so rosters come out sorted
        for (&kf, &z) in &kf_to_zone {
            zone_to_kfs.entry(z).or_default().push(kf);
        }
        let zone_counts = zone_to_kfs.iter().map(|(&z, v)| (z, v.len())).collect();
        Self {
            kf_to_zone,
            zone_to_kfs,
            zone_counts,
        }
    }

    pub fn zone_of(&self, kf: KeyframeId) -> Option<ZoneId> {
        self.kf_to_zone.get(&kf).copied()
    }

    /// Sorted keyframe ids of zone `z` (S_z).
    pub fn roster(&self, z: ZoneId) -> Result<&[KeyframeId]> {
        self.zone_to_kfs
            .get(&z)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownZone(z))
    }

    /// |S_z|.
    pub fn count(&self, z: ZoneId) -> Result<usize> {
        self.zone_counts
            .get(&z)
            .copied()
            .ok_or(Error::UnknownZone(z))
    }

    pub fn contains_zone(&self, z: ZoneId) -> bool {
        self.zone_counts.contains_key(&z)
    }

    pub fn kf_to_zone(&self) -> &BTreeMap<KeyframeId, ZoneId> {
        &self.kf_to_zone
    }

    pub fn zone_counts(&self) -> &BTreeMap<ZoneId, usize> {
        &self.zone_counts
    }

    pub fn zone_ids(&self) -> impl Iterator<Item = ZoneId> + '_ {
        self.zone_counts.keys().copied()
    }

    pub fn total_keyframes(&self) -> usize {
        self.kf_to_zone.len()
    }

    /// Verifies the three views agree with one another.
    pub fn check_consistency(&self) -> Result<()> {
        let mut seen = 0usize;
        for (z, roster) in &self.zone_to_kfs {
            if self.zone_counts.get(z) != Some(&roster.len()) {
                return Err(Error::Inconsistent(format!("zone_counts[{z}] != |roster|")));
            }
            if roster.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Inconsistent(format!("roster of {z} is not sorted")));
            }
            for kf in roster {
                if self.kf_to_zone.get(kf) != Some(z) {
                    return Err(Error::Inconsistent(format!(
                        "{kf} listed under {z} but mapped elsewhere"
                    )));
                }
            }
            seen += roster.len();
        }
        if self.zone_counts.len() != self.zone_to_kfs.len() || seen != self.kf_to_zone.len() {
            return Err(Error::Inconsistent("index views differ in size".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, Pose};
    use crate::zone::Zone;

    fn rec(id: u64, x: f64, y: f64) -> KeyframeRecord {
        KeyframeRecord {
            id: KeyframeId(id),
            pose: Pose::at(x, y, 0.0),
            payload_bytes: 1,
            payload_seed: 0,
        }
    }

    fn two_squares() -> ZoneSet {
        ZoneSet::new(vec![
            Zone::rect(0, "a", 0.0, 0.0, 1.0, 1.0).unwrap(),
            Zone::rect(1, "b", 1.0, 0.0, 2.0, 1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn single_keyframe() {
        let (idx, w) = ZoneIndex::build(&[rec(7, 0.5, 0.5)], &two_squares()).unwrap();
        assert!(w.is_empty());
        assert_eq!(idx.zone_of(KeyframeId(7)), Some(ZoneId(0)));
        assert_eq!(idx.count(ZoneId(0)).unwrap(), 1);
        assert_eq!(idx.count(ZoneId(1)).unwrap(), 0);
    }

    #[test]
    fn counts_per_zone() {
        let kfs = [rec(0, 0.2, 0.2), rec(1, 0.8, 0.8), rec(2, 1.5, 0.5)];
        let (idx, _) = ZoneIndex::build(&kfs, &two_squares()).unwrap();
        assert_eq!(idx.count(ZoneId(0)).unwrap(), 2);
        assert_eq!(idx.count(ZoneId(1)).unwrap(), 1);
        assert_eq!(
            idx.roster(ZoneId(0)).unwrap(),
            &[KeyframeId(0), KeyframeId(1)]
        );
        idx.check_consistency().unwrap();
    }

    #[test]
    fn outside_keyframe_snaps_to_nearest_boundary() {
        let zones = ZoneSet::new(vec![
            Zone::rect(0, "a", 0.0, 0.0, 1.0, 1.0).unwrap(),
            Zone::rect(1, "b", 10.0, 0.0, 11.0, 1.0).unwrap(),
        ])
        .unwrap();
        let (idx, w) = ZoneIndex::build(&[rec(3, 5.0, 0.5)], &zones).unwrap();
        // brute-force oracle over every edge of both polygons
        let p = Point2::new(5.0, 0.5);
        let best = zones
            .iter()
            .map(|z| {
                let ring = z.polygon();
                let d = (0..ring.len())
                    .map(|i| {
                        crate::geometry::point_segment_distance(
                            &p,
                            &ring[i],
                            &ring[(i + 1) % ring.len()],
                        )
                    })
                    .fold(f64::INFINITY, f64::min);
                (d, z.id())
            })
            .fold((f64::INFINITY, ZoneId(u32::MAX)), |a, b| {
                if b.0 < a.0 {
                    b
                } else {
                    a
                }
            });
        assert_eq!(best, (4.0, ZoneId(0)));
        assert_eq!(idx.zone_of(KeyframeId(3)), Some(best.1));
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].distance, 4.0);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(
            ZoneIndex::build(&[rec(0, 0.0, 0.0)], &ZoneSet::default()),
            Err(Error::EmptyZoneSet)
        ));
        assert!(matches!(
            ZoneIndex::build(&[], &two_squares()),
            Err(Error::EmptyKeyframes)
        ));
    }

    #[test]
    fn unknown_zone_lookup() {
        let (idx, _) = ZoneIndex::build(&[rec(0, 0.5, 0.5)], &two_squares()).unwrap();
        assert!(matches!(
            idx.roster(ZoneId(9)),
            Err(Error::UnknownZone(ZoneId(9)))
        ));
    }
}
