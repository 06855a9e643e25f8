//! Per-keyframe proximity baseline.
//!
//! Keyframes within `r_load` of the pose are loaded one transaction at a time
//! (ascending id); resident keyframes beyond `r_unload` are released one at a
//! time. When the budget is full, the least-recently-accessed resident
//! keyframe outside `r_load` makes room; if none exists the load is skipped
//! and a `budget_violation` is recorded.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::map::{KeyframeId, MapStore};
use crate::strategy::{Budget, EventKind, StrategyEvent, StrategyKind, WorkingSetPolicy};
use crate::zone::ZoneId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricParams {
    pub r_load: f64,
    pub r_unload: f64,
}

impl Default for GeometricParams {
    fn default() -> Self {
        Self {
            r_load: 5.0,
            r_unload: 10.0,
        }
    }
}

impl GeometricParams {
    pub fn new(r_load: f64, r_unload: f64) -> Result<Self> {
        let p = Self { r_load, r_unload };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_load > 0.0 && self.r_load.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r_load {} must be > 0",
                self.r_load
            )));
        }
        if !(self.r_unload >= self.r_load && self.r_unload.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r_unload {} must be >= r_load {}",
                self.r_unload, self.r_load
            )));
        }
        Ok(())
    }
}

/// Per-keyframe recency bookkeeping for resident keyframes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeometricState {
    last_access: BTreeMap<KeyframeId, u64>,
    lru: BTreeSet<(u64, KeyframeId)>,
}

impl GeometricState {
    fn touch(&mut self, kf: KeyframeId, tick: u64) {
        if let Some(old) = self.last_access.insert(kf, tick) {
            self.lru.remove(&(old, kf));
        }
        self.lru.insert((tick, kf));
    }

    fn forget(&mut self, kf: KeyframeId) {
        if let Some(old) = self.last_access.remove(&kf) {
            self.lru.remove(&(old, kf));
        }
    }

    pub fn last_access(&self, kf: KeyframeId) -> Option<u64> {
        self.last_access.get(&kf).copied()
    }

    /// Least-recently-accessed keyframe not excluded by `protected`.
    fn victim(&self, protected: impl Fn(KeyframeId) -> bool) -> Option<KeyframeId> {
        self.lru
            .iter()
            .map(|&(_, kf)| kf)
            .find(|&kf| !protected(kf))
    }
}

pub fn on_pose_update(
    state: &mut GeometricState,
    pose: &Pose,
    params: &GeometricParams,
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
) -> Result<Vec<StrategyEvent>> {
    let map = std::sync::Arc::clone(store.map());
    let here = pose.position;
    let mut events = Vec::new();

    let r_unload_sq = params.r_unload * params.r_unload;
    let far: Vec<KeyframeId> = store
        .resident()
        .iter()
        .copied()
        .filter(|&kf| {
            map.keyframe(kf)
                .is_some_and(|k| k.position().distance_sq(&here) > r_unload_sq)
        })
        .collect();
    for kf in far {
        store.unload_keyframe(kf)?;
        state.forget(kf);
        events.push(StrategyEvent::keyframe(tick, EventKind::KfUnload, kf));
    }

    let near = map.keyframes_within(&here, params.r_load);
    let in_range = |kf: KeyframeId| near.binary_search(&kf).is_ok();
    for &kf in &near {
        if store.is_resident(kf) {
            state.touch(kf, tick);
        }
    }
    for &kf in &near {
        if store.is_resident(kf) {
            continue;
        }
        if store.resident_count() >= budget.k_max() {
            match state.victim(in_range) {
                Some(victim) => {
                    store.unload_keyframe(victim)?;
                    state.forget(victim);
                    events.push(StrategyEvent::keyframe(tick, EventKind::KfUnload, victim));
                }
                None => {
                    events.push(StrategyEvent::keyframe(
                        tick,
                        EventKind::BudgetViolation,
                        kf,
                    ));
                    continue;
                }
            }
        }
        store.load_keyframe(kf)?;
        state.touch(kf, tick);
        events.push(StrategyEvent::keyframe(tick, EventKind::KfLoad, kf));
    }
    Ok(events)
}

/// Evicts least-recently-accessed keyframes until residency fits.
pub fn shrink_to(
    state: &mut GeometricState,
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
) -> Result<Vec<StrategyEvent>> {
    let mut events = Vec::new();
    while store.resident_count() > budget.k_max() {
        let Some(victim) = state.victim(|_| false) else {
            break;
        };
        store.unload_keyframe(victim)?;
        state.forget(victim);
        events.push(StrategyEvent::keyframe(tick, EventKind::KfUnload, victim));
    }
    Ok(events)
}

#[derive(Debug, Clone)]
pub struct GeometricManager {
    state: GeometricState,
    store: MapStore,
    params: GeometricParams,
}

impl GeometricManager {
    pub fn new(store: MapStore, params: GeometricParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            state: GeometricState::default(),
            store,
            params,
        })
    }

    pub fn state(&self) -> &GeometricState {
        &self.state
    }

    pub fn params(&self) -> &GeometricParams {
        &self.params
    }
}

impl WorkingSetPolicy for GeometricManager {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Geometric
    }

    fn store(&self) -> &MapStore {
        &self.store
    }

    fn on_pose_update(
        &mut self,
        pose: &Pose,
        budget: Budget,
        tick: u64,
        _route_hint: Option<&[ZoneId]>,
    ) -> Result<Vec<StrategyEvent>> {
        self.store.set_tick(tick);
        on_pose_update(
            &mut self.state,
            pose,
            &self.params,
            budget,
            &mut self.store,
            tick,
        )
    }

    fn shrink_to(
        &mut self,
        budget: Budget,
        tick: u64,
        _route_hint: Option<&[ZoneId]>,
    ) -> Result<Vec<StrategyEvent>> {
        self.store.set_tick(tick);
        shrink_to(&mut self.state, budget, &mut self.store, tick)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::replay::world::strip_map;

    fn manager(sizes: &[usize]) -> GeometricManager {
        let store = MapStore::new(Arc::new(strip_map(sizes, 1)));
        GeometricManager::new(store, GeometricParams::default()).unwrap()
    }

    fn b(k: usize) -> Budget {
        Budget::new(k).unwrap()
    }

    fn kinds(ev: &[StrategyEvent]) -> Vec<EventKind> {
        ev.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn nothing_nearby() {
        let mut m = manager(&[3]);
        let ev = m
            .on_pose_update(&Pose::at(500.0, 500.0, 0.0), b(10), 0, None)
            .unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn loads_each_nearby_keyframe() {
        let mut m = manager(&[3]);
        let ev = m
            .on_pose_update(&Pose::at(5.0, 5.0, 0.0), b(10), 0, None)
            .unwrap();
        assert_eq!(kinds(&ev), vec![EventKind::KfLoad; 3]);
        assert_eq!(m.store().log().counters().loads_issued, 3);
    }

    #[test]
    fn full_budget_skips_with_violation() {
        let mut m = manager(&[3]);
        let ev = m
            .on_pose_update(&Pose::at(5.0, 5.0, 0.0), b(2), 0, None)
            .unwrap();
        assert_eq!(
            kinds(&ev),
            vec![
                EventKind::KfLoad,
                EventKind::KfLoad,
                EventKind::BudgetViolation
            ]
        );
        assert_eq!(ev[2].subject, 2);
        assert_eq!(m.store().resident_count(), 2);
    }

    #[test]
    fn far_keyframes_unload_and_out_of_range_ones_make_room() {
        // kf0..2 at x = 1, 3.67, 6.33 and kf3..5 at x = 11, 13.67, 16.33 (y = 5)
        let mut m = manager(&[3, 3]);
        m.on_pose_update(&Pose::at(5.0, 5.0, 0.0), b(3), 0, None)
            .unwrap();
        assert_eq!(m.store().resident_count(), 3);
        // from x = 12: kf0 is beyond r_unload, kf1 and kf2 are outside r_load
        let ev = m
            .on_pose_update(&Pose::at(12.0, 5.0, 0.0), b(3), 1, None)
            .unwrap();
        let got: Vec<_> = ev.iter().map(|e| (e.kind, e.subject)).collect();
        assert_eq!(
            got,
            vec![
                (EventKind::KfUnload, 0),
                (EventKind::KfLoad, 3),
                (EventKind::KfUnload, 1),
                (EventKind::KfLoad, 4),
                (EventKind::KfUnload, 2),
                (EventKind::KfLoad, 5),
            ]
        );
        let resident: Vec<_> = m.store().resident().iter().map(|k| k.0).collect();
        assert_eq!(resident, vec![3, 4, 5]);
    }

    #[test]
    fn shrink_evicts_oldest() {
        let mut m = manager(&[4]);
        m.on_pose_update(&Pose::at(5.0, 5.0, 0.0), b(10), 0, None)
            .unwrap();
        let ev = m.shrink_to(b(1), 1, None).unwrap();
        assert_eq!(ev.len(), 3);
        assert_eq!(
            ev.iter().map(|e| e.subject).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn params_validated() {
        assert!(GeometricParams::new(5.0, 4.0).is_err());
        assert!(GeometricParams::new(0.0, 4.0).is_err());
        assert!(GeometricParams::new(5.0, 5.0).is_ok());
    }
}
