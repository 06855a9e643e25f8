//! Zone-level working-set management under a strict keyframe budget.
//!
//! The active zone set A holds whole zones; resident keyframes are exactly the
//! union of their rosters. Activating a zone first predicts the post-load
//! count from zone counts alone, evicts least-recently-used zones until the
//! prediction fits, and only then loads the new zone as one batch.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::map::{KeyframeId, MapStore, ZoneIndex};
use crate::strategy::{Budget, EventKind, StrategyEvent, StrategyKind, WorkingSetPolicy};
use crate::zone::ZoneId;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkingSetState {
    active: BTreeMap<ZoneId, u64>,
    current_zone: Option<ZoneId>,
    pinned: Option<ZoneId>,
}

impl WorkingSetState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Active zones with their last-access tick.
    pub fn active_zones(&self) -> &BTreeMap<ZoneId, u64> {
        &self.active
    }

    pub fn is_active(&self, z: ZoneId) -> bool {
        self.active.contains_key(&z)
    }

    pub fn last_access(&self, z: ZoneId) -> Option<u64> {
        self.active.get(&z).copied()
    }

    pub fn current_zone(&self) -> Option<ZoneId> {
        self.current_zone
    }

    pub fn pinned(&self) -> Option<ZoneId> {
        self.pinned
    }

    /// Sets the zone that eviction must never select.
    pub fn pin(&mut self, z: Option<ZoneId>) {
        self.pinned = z;
    }

    /// Marks `z` active with the given access tick without touching the store.
    /// Used to set up states directly, e.g. in tests and tools.
    pub fn insert_active(&mut self, z: ZoneId, tick: u64) {
        self.active.insert(z, tick);
    }

    fn touch(&mut self, z: ZoneId, tick: u64) {
        if let Some(t) = self.active.get_mut(&z) {
            *t = tick;
        }
    }

    /// Union of the rosters of all active zones.
    pub fn resident_keyframes(&self, index: &ZoneIndex) -> Result<BTreeSet<KeyframeId>> {
        let mut out = BTreeSet::new();
        for &z in self.active.keys() {
            out.extend(index.roster(z)?.iter().copied());
        }
        Ok(out)
    }

    /// Σ |S_z| over the active set.
    pub fn active_count(&self, index: &ZoneIndex) -> Result<usize> {
        self.active.keys().map(|&z| index.count(z)).sum()
    }
}

/// Resident count if `z_new` were added to the active zones.
pub fn predict_resident<'a>(
    active: impl IntoIterator<Item = &'a ZoneId>,
    z_new: ZoneId,
    index: &ZoneIndex,
) -> Result<usize> {
    let mut k = index.count(z_new)?;
    for &z in active {
        k += index.count(z)?;
    }
    Ok(k)
}

/// Picks the eviction victim: the non-pinned active zone with the oldest
/// access tick. With a route hint, zones absent from the hint go first and
/// LRU orders within each class. Equal ticks fall back to the smaller id.
pub fn select_unload_zone(
    state: &WorkingSetState,
    route_hint: Option<&[ZoneId]>,
) -> Result<ZoneId> {
    state
        .active
        .iter()
        .filter(|(&z, _)| Some(z) != state.pinned)
        .min_by_key(|(&z, &tick)| {
            let upcoming = route_hint.is_some_and(|h| h.contains(&z));
            (upcoming, tick, z)
        })
        .map(|(&z, _)| z)
        .ok_or(Error::NoEvictableZone)
}

/// Admits `z_new`: evict until the predicted count fits, then load in one batch.
///
/// All unload events precede the load. When eviction runs out of candidates
/// the zone is loaded anyway and an `over_budget_zone` event follows the load.
pub fn activate_zone(
    state: &mut WorkingSetState,
    z_new: ZoneId,
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
    route_hint: Option<&[ZoneId]>,
) -> Result<Vec<StrategyEvent>> {
    let map = std::sync::Arc::clone(store.map());
    let index = map.index();
    if state.is_active(z_new) {
        return Err(Error::ZoneAlreadyResident(z_new));
    }
    let mut k_pred = predict_resident(state.active.keys(), z_new, index)?;
    let mut events = Vec::new();
    while k_pred > budget.k_max() {
        let victim = match select_unload_zone(state, route_hint) {
            Ok(z) => z,
            Err(Error::NoEvictableZone) => break,
            Err(e) => return Err(e),
        };
        state.active.remove(&victim);
        let n = store.unload_zone(victim)?;
        events.push(StrategyEvent::zone(tick, EventKind::ZoneUnload, victim, n));
        k_pred -= n;
    }
    let over = k_pred > budget.k_max();
    state.active.insert(z_new, tick);
    let loaded = store.load_zone(z_new)?.len();
    events.push(StrategyEvent::zone(
        tick,
        EventKind::ZoneLoad,
        z_new,
        loaded,
    ));
    if over {
        log::warn!(
            "{z_new} activated over budget: {k_pred} > {}",
            budget.k_max()
        );
        events.push(StrategyEvent::zone(
            tick,
            EventKind::OverBudgetZone,
            z_new,
            loaded,
        ));
    }
    Ok(events)
}

/// One step of the zone manager for a new pose estimate.
pub fn on_pose_update(
    state: &mut WorkingSetState,
    pose: &Pose,
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
    route_hint: Option<&[ZoneId]>,
) -> Result<Vec<StrategyEvent>> {
    let located = store.map().zones().locate(pose);
    let z_new = match located {
        Some(z) if Some(z) != state.current_zone => z,
        _ => return Ok(Vec::new()),
    };
    let roster = store.map().index().count(z_new)?;
    let mut events = vec![StrategyEvent::zone(
        tick,
        EventKind::ZoneEnter,
        z_new,
        roster,
    )];
    // the zone being entered is the one the robot needs; the zone it leaves
    // becomes an ordinary eviction candidate
    state.pinned = Some(z_new);
    if state.is_active(z_new) {
        state.touch(z_new, tick);
    } else {
        events.extend(activate_zone(
            state, z_new, budget, store, tick, route_hint,
        )?);
    }
    state.current_zone = Some(z_new);
    Ok(events)
}

/// Activates the first not-yet-active zone on the remaining route, but only
/// if it fits without evicting anything.
pub fn prefetch(
    state: &mut WorkingSetState,
    route: &[Point2],
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
    step: f64,
) -> Result<Vec<StrategyEvent>> {
    if route.is_empty() {
        return Ok(Vec::new());
    }
    let map = std::sync::Arc::clone(store.map());
    let upcoming = map.zones().predict_route_zones(route, step)?;
    prefetch_upcoming(state, &upcoming, budget, store, tick)
}

/// [`prefetch`] with the route already mapped to its zone sequence.
pub fn prefetch_upcoming(
    state: &mut WorkingSetState,
    upcoming: &[ZoneId],
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
) -> Result<Vec<StrategyEvent>> {
    match upcoming.iter().find(|z| !state.is_active(**z)) {
        Some(&next) => prefetch_zone(state, next, budget, store, tick),
        None => Ok(Vec::new()),
    }
}

/// Loads `zone` speculatively when the predicted count fits the budget; otherwise no-op.
pub fn prefetch_zone(
    state: &mut WorkingSetState,
    zone: ZoneId,
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
) -> Result<Vec<StrategyEvent>> {
    if state.is_active(zone) {
        return Ok(Vec::new());
    }
    let k_pred = predict_resident(state.active.keys(), zone, store.map().index())?;
    if k_pred > budget.k_max() {
        return Ok(Vec::new());
    }
    state.active.insert(zone, tick);
    let n = store.load_zone(zone)?.len();
    Ok(vec![
        StrategyEvent::zone(tick, EventKind::Prefetch, zone, n),
        StrategyEvent::zone(tick, EventKind::ZoneLoad, zone, n),
    ])
}

/// Evicts LRU zones (never the pinned one) until residency fits `budget`.
pub fn shrink_to(
    state: &mut WorkingSetState,
    budget: Budget,
    store: &mut MapStore,
    tick: u64,
    route_hint: Option<&[ZoneId]>,
) -> Result<Vec<StrategyEvent>> {
    let mut events = Vec::new();
    while store.resident_count() > budget.k_max() {
        let victim = match select_unload_zone(state, route_hint) {
            Ok(z) => z,
            Err(Error::NoEvictableZone) => break,
            Err(e) => return Err(e),
        };
        state.active.remove(&victim);
        let n = store.unload_zone(victim)?;
        events.push(StrategyEvent::zone(tick, EventKind::ZoneUnload, victim, n));
    }
    Ok(events)
}

/// Zone manager bundled with the store it drives.
#[derive(Debug, Clone)]
pub struct SemanticManager {
    state: WorkingSetState,
    store: MapStore,
}

impl SemanticManager {
    pub fn new(store: MapStore) -> Self {
        Self {
            state: WorkingSetState::new(),
            store,
        }
    }

    pub fn state(&self) -> &WorkingSetState {
        &self.state
    }

    pub fn into_store(self) -> MapStore {
        self.store
    }
}

impl WorkingSetPolicy for SemanticManager {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Semantic
    }

    fn store(&self) -> &MapStore {
        &self.store
    }

    fn on_pose_update(
        &mut self,
        pose: &Pose,
        budget: Budget,
        tick: u64,
        route_hint: Option<&[ZoneId]>,
    ) -> Result<Vec<StrategyEvent>> {
        self.store.set_tick(tick);
        on_pose_update(
            &mut self.state,
            pose,
            budget,
            &mut self.store,
            tick,
            route_hint,
        )
    }

    fn shrink_to(
        &mut self,
        budget: Budget,
        tick: u64,
        route_hint: Option<&[ZoneId]>,
    ) -> Result<Vec<StrategyEvent>> {
        self.store.set_tick(tick);
        shrink_to(&mut self.state, budget, &mut self.store, tick, route_hint)
    }

    fn prefetch_zones(
        &mut self,
        upcoming: &[ZoneId],
        budget: Budget,
        tick: u64,
    ) -> Result<Vec<StrategyEvent>> {
        self.store.set_tick(tick);
        prefetch_upcoming(&mut self.state, upcoming, budget, &mut self.store, tick)
    }
}
