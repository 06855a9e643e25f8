use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{Keyframe, KeyframeId, MapData};
use crate::zone::ZoneId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    BatchLoad,
    BatchUnload,
    KfLoad,
    KfUnload,
}

/// One database transaction. `subject` is a zone id for batch operations and a
/// keyframe id otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxEvent {
    pub tick: u64,
    pub kind: TxKind,
    pub subject: u64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TxCounters {
    pub loads_issued: u64,
    pub unloads_issued: u64,
    pub keyframes_loaded: u64,
    pub keyframes_unloaded: u64,
    pub batch_loads: u64,
    pub batch_unloads: u64,
}

impl TxCounters {
    pub fn apply(&mut self, ev: &TxEvent) {
        let n = ev.count as u64;
        match ev.kind {
            TxKind::BatchLoad => {
                self.loads_issued += 1;
                self.batch_loads += 1;
                self.keyframes_loaded += n;
            }
            TxKind::KfLoad => {
                self.loads_issued += 1;
                self.keyframes_loaded += n;
            }
            TxKind::BatchUnload => {
                self.unloads_issued += 1;
                self.batch_unloads += 1;
                self.keyframes_unloaded += n;
            }
            TxKind::KfUnload => {
                self.unloads_issued += 1;
                self.keyframes_unloaded += n;
            }
        }
    }

    pub fn fold<'a>(events: impl IntoIterator<Item = &'a TxEvent>) -> Self {
        let mut c = Self::default();
        for ev in events {
            c.apply(ev);
        }
        c
    }

    pub fn total_transactions(&self) -> u64 {
        self.loads_issued + self.unloads_issued
    }
}

/// Append-only transaction record with running counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransactionLog {
    counters: TxCounters,
    events: Vec<TxEvent>,
}

impl TransactionLog {
    fn record(&mut self, ev: TxEvent) {
        self.counters.apply(&ev);
        self.events.push(ev);
    }

    pub fn counters(&self) -> TxCounters {
        self.counters
    }

    pub fn events(&self) -> &[TxEvent] {
        &self.events
    }
}

/// The in-memory working set backed by the map database.
///
/// Every payload load or release goes through here and is logged as a
/// transaction. Map content is shared read-only through an `Arc`; the store
/// itself is owned by a single strategy instance.
#[derive(Debug, Clone)]
pub struct MapStore {
    map: Arc<MapData>,
    resident: BTreeSet<KeyframeId>,
    resident_zones: BTreeSet<ZoneId>,
    resident_bytes: u64,
    peak_resident: usize,
    log: TransactionLog,
    tick: u64,
}

impl MapStore {
    pub fn new(map: Arc<MapData>) -> Self {
        Self {
            map,
            resident: BTreeSet::new(),
            resident_zones: BTreeSet::new(),
            resident_bytes: 0,
            peak_resident: 0,
            log: TransactionLog::default(),
            tick: 0,
        }
    }

    pub fn map(&self) -> &Arc<MapData> {
        &self.map
    }

    /// Sets the simulation tick stamped on subsequent transactions.
    pub fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn resident(&self) -> &BTreeSet<KeyframeId> {
        &self.resident
    }

    pub fn resident_count(&self) -> usize {
        self.resident.len()
    }

    pub fn resident_bytes(&self) -> u64 {
        self.resident_bytes
    }

    pub fn is_resident(&self, kf: KeyframeId) -> bool {
        self.resident.contains(&kf)
    }

    pub fn zone_resident(&self, z: ZoneId) -> bool {
        self.resident_zones.contains(&z)
    }

    /// Highest residency ever observed after any single operation.
    pub fn peak_resident(&self) -> usize {
        self.peak_resident
    }

    pub fn log(&self) -> &TransactionLog {
        &self.log
    }

    fn admit(&mut self, kf: &Keyframe) {
        self.resident.insert(kf.id);
        self.resident_bytes += kf.payload_bytes;
    }

    fn release(&mut self, kf: KeyframeId) {
        self.resident.remove(&kf);
        let kf = self.map.keyframe(kf).expect("resident keyframe exists");
        self.resident_bytes -= kf.payload_bytes;
    }

    fn note_peak(&mut self) {
        self.peak_resident = self.peak_resident.max(self.resident.len());
    }

    /// Loads every keyframe of `zone` as one batch transaction.
    pub fn load_zone(&mut self, zone: ZoneId) -> Result<Vec<Keyframe>> {
        let map = Arc::clone(&self.map);
        let roster = map.index().roster(zone)?;
        if self.resident_zones.contains(&zone) {
            return Err(Error::ZoneAlreadyResident(zone));
        }
        if let Some(&kf) = roster.iter().find(|&&kf| self.resident.contains(&kf)) {
            return Err(Error::KeyframeAlreadyResident(kf));
        }
        let loaded: Vec<Keyframe> = roster
            .iter()
            .map(|&id| *map.keyframe(id).expect("indexed keyframe exists"))
            .collect();
        for kf in &loaded {
            self.admit(kf);
        }
        self.resident_zones.insert(zone);
        self.note_peak();
        self.log.record(TxEvent {
            tick: self.tick,
            kind: TxKind::BatchLoad,
            subject: zone.0 as u64,
            count: loaded.len(),
        });
        Ok(loaded)
    }

    /// Releases every keyframe of a resident zone as one batch transaction.
    pub fn unload_zone(&mut self, zone: ZoneId) -> Result<usize> {
        let map = Arc::clone(&self.map);
        let roster = map.index().roster(zone)?;
        if !self.resident_zones.remove(&zone) {
            return Err(Error::ZoneNotResident(zone));
        }
        for &kf in roster {
            self.release(kf);
        }
        self.log.record(TxEvent {
            tick: self.tick,
            kind: TxKind::BatchUnload,
            subject: zone.0 as u64,
            count: roster.len(),
        });
        Ok(roster.len())
    }

    /// Loads a single keyframe as its own transaction.
    pub fn load_keyframe(&mut self, id: KeyframeId) -> Result<Keyframe> {
        let kf = *self.map.keyframe(id).ok_or(Error::UnknownKeyframe(id))?;
        if self.resident.contains(&id) {
            return Err(Error::KeyframeAlreadyResident(id));
        }
        self.admit(&kf);
        self.note_peak();
        self.log.record(TxEvent {
            tick: self.tick,
            kind: TxKind::KfLoad,
            subject: id.0,
            count: 1,
        });
        Ok(kf)
    }

    pub fn unload_keyframe(&mut self, id: KeyframeId) -> Result<()> {
        if self.map.keyframe(id).is_none() {
            return Err(Error::UnknownKeyframe(id));
        }
        let zone = self.map.index().zone_of(id).expect("indexed");
        if !self.resident.contains(&id) || self.resident_zones.contains(&zone) {
            // keyframes that arrived in a zone batch leave with it
            return Err(Error::KeyframeNotResident(id));
        }
        self.release(id);
        self.log.record(TxEvent {
            tick: self.tick,
            kind: TxKind::KfUnload,
            subject: id.0,
            count: 1,
        });
        Ok(())
    }
}
