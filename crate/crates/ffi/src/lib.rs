//! C ABI over `zonemem`.
//!
//! Every fallible call returns a [`ZmStatus`]; on failure the message is
//! available from [`zm_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use zonemem::map::{read_map, write_map, MapStore};
use zonemem::replay::world::{self, WorldSpec};
use zonemem::replay::{
    self, io as rio, BudgetSchedule, LoopClosureModel, ReplayConfig, Trajectory,
};
use zonemem::report::ReplayReport;
use zonemem::strategy::{GeometricManager, GeometricParams, SemanticManager};
use zonemem::{Budget, Error, MapData, Point2, Pose, StrategyKind, WorkingSetPolicy};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    NotFound = 5,
    Inconsistent = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZmStrategy {
    Semantic = 0,
    Geometric = 1,
}

impl From<ZmStrategy> for StrategyKind {
    fn from(s: ZmStrategy) -> Self {
        match s {
            ZmStrategy::Semantic => StrategyKind::Semantic,
            ZmStrategy::Geometric => StrategyKind::Geometric,
        }
    }
}

/// Parameters for synthetic world generation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZmWorldSpec {
    pub rooms: usize,
    pub room_w: f64,
    pub room_h: f64,
    pub corridor_w: f64,
    pub kf_spacing: f64,
    pub payload_bytes: u64,
    pub seed: u64,
}

/// Replay parameters. `k_max == 0` selects 1.5x the largest zone.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZmReplayOptions {
    pub strategy: ZmStrategy,
    pub k_max: usize,
    pub prefetch: bool,
    pub lc_radius: f64,
    pub lc_min: usize,
    pub r_load: f64,
    pub r_unload: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZmSummary {
    pub total_transactions: u64,
    pub batch_loads: u64,
    pub batch_unloads: u64,
    pub kf_loads: u64,
    pub kf_unloads: u64,
    pub peak_resident_count: usize,
    pub peak_resident_bytes: u64,
    pub budget_violations: u64,
    pub over_budget_zone_events: u64,
    pub lc_opportunities: u64,
    pub lc_accepted: u64,
    pub lc_hit_ratio: f64,
}

/// A loaded or generated map.
pub struct ZmMap {
    inner: Arc<MapData>,
}

/// The result of one replay run.
pub struct ZmReport {
    inner: ReplayReport,
}

/// A live working-set policy fed one pose at a time.
pub struct ZmSession {
    policy: Box<dyn WorkingSetPolicy>,
    budget: Budget,
    tick: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ZmStatus {
    match err {
        Error::Io { .. } => ZmStatus::Io,
        Error::Format { .. } => ZmStatus::Format,
        Error::UnknownZone(_) | Error::UnknownKeyframe(_) => ZmStatus::NotFound,
        Error::Inconsistent(_) | Error::MapHashMismatch { .. } => ZmStatus::Inconsistent,
        _ => ZmStatus::InvalidArgument,
    }
}

struct Fail(ZmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ZmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ZmStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ZmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            ZmStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn zm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn zm_world_spec_default() -> ZmWorldSpec {
    let d = WorldSpec::default();
    ZmWorldSpec {
        rooms: d.rooms,
        room_w: d.room_w,
        room_h: d.room_h,
        corridor_w: d.corridor_w,
        kf_spacing: d.kf_spacing,
        payload_bytes: d.payload_bytes,
        seed: d.seed,
    }
}

#[no_mangle]
pub extern "C" fn zm_replay_options_default() -> ZmReplayOptions {
    let g = GeometricParams::default();
    let lc = LoopClosureModel::default();
    ZmReplayOptions {
        strategy: ZmStrategy::Semantic,
        k_max: 0,
        prefetch: false,
        lc_radius: lc.d_lc,
        lc_min: lc.m_lc,
        r_load: g.r_load,
        r_unload: g.r_unload,
    }
}

/// Generates a synthetic world.
///
/// # Safety
/// `spec` must point to a valid `ZmWorldSpec`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zm_world_generate(
    spec: *const ZmWorldSpec,
    out: *mut *mut ZmMap,
) -> ZmStatus {
    guard(|| {
        let s = ref_arg(spec, "spec")?;
        let out = out_arg(out, "out")?;
        let spec = WorldSpec {
            rooms: s.rooms,
            room_w: s.room_w,
            room_h: s.room_h,
            corridor_w: s.corridor_w,
            kf_spacing: s.kf_spacing,
            payload_bytes: s.payload_bytes,
            seed: s.seed,
        };
        let map = world::generate_world(&spec)?;
        *out = Box::into_raw(Box::new(ZmMap {
            inner: Arc::new(map),
        }));
        Ok(())
    })
}

/// Opens a map directory.
///
/// # Safety
/// `dir` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zm_map_open(dir: *const c_char, out: *mut *mut ZmMap) -> ZmStatus {
    guard(|| {
        let dir = path_arg(dir, "dir")?;
        let out = out_arg(out, "out")?;
        let map = read_map(&dir)?;
        *out = Box::into_raw(Box::new(ZmMap {
            inner: Arc::new(map),
        }));
        Ok(())
    })
}

/// Writes the map directory (zones.json, keyframes.jsonl, index.json).
///
/// # Safety
/// `map` must be a live handle; `dir` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn zm_map_write(map: *const ZmMap, dir: *const c_char) -> ZmStatus {
    guard(|| {
        let map = ref_arg(map, "map")?;
        let dir = path_arg(dir, "dir")?;
        write_map(&map.inner, &dir)?;
        Ok(())
    })
}

/// # Safety
/// `map` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zm_map_free(map: *mut ZmMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_map_zone_count(map: *const ZmMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.zones().len())
}

/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_map_keyframe_count(map: *const ZmMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.keyframes().len())
}

/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_map_largest_zone(map: *const ZmMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.largest_zone())
}

/// Zone containing `(x, y)`; `ZM_STATUS_NOT_FOUND` when outside every zone.
///
/// # Safety
/// `map` must be a live handle; `zone_id` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zm_map_locate(
    map: *const ZmMap,
    x: f64,
    y: f64,
    zone_id: *mut u32,
) -> ZmStatus {
    guard(|| {
        let map = ref_arg(map, "map")?;
        let out = out_arg(zone_id, "zone_id")?;
        match map.inner.zones().locate_point(&Point2::new(x, y)) {
            Some(z) => {
                *out = z.0;
                Ok(())
            }
            None => Err(Fail(
                ZmStatus::NotFound,
                format!("({x}, {y}) lies in no zone"),
            )),
        }
    })
}

fn config_from(map: &MapData, o: &ZmReplayOptions) -> Result<ReplayConfig, Fail> {
    let k = if o.k_max == 0 {
        ((map.largest_zone() as f64) * 1.5).round() as usize
    } else {
        o.k_max
    };
    let mut config = ReplayConfig::new(
        o.strategy.into(),
        BudgetSchedule::constant(Budget::new(k.max(1))?),
    );
    config.prefetch = o.prefetch;
    config.lc = LoopClosureModel::new(o.lc_radius, o.lc_min)?;
    config.geometric = GeometricParams::new(o.r_load, o.r_unload)?;
    config.validate()?;
    Ok(config)
}

unsafe fn run_into(
    map: *const ZmMap,
    options: *const ZmReplayOptions,
    out: *mut *mut ZmReport,
    trajectory: impl FnOnce(&MapData) -> Result<Trajectory, Fail>,
) -> ZmStatus {
    guard(|| {
        let map = ref_arg(map, "map")?;
        let options = ref_arg(options, "options")?;
        let out = out_arg(out, "out")?;
        let config = config_from(&map.inner, options)?;
        let traj = trajectory(&map.inner)?;
        let report = replay::run(&map.inner, &traj, &config)?;
        *out = Box::into_raw(Box::new(ZmReport { inner: report }));
        Ok(())
    })
}

/// Replays the map's default patrol.
///
/// # Safety
/// `map` and `options` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zm_replay_default_patrol(
    map: *const ZmMap,
    options: *const ZmReplayOptions,
    out: *mut *mut ZmReport,
) -> ZmStatus {
    run_into(map, options, out, |m| {
        Ok(world::generate_patrol_route(m, &world::default_visit_order(m))?.trajectory)
    })
}

/// Replays a `t,x,y,theta` trajectory CSV.
///
/// # Safety
/// `map` and `options` must be valid; `trajectory_csv` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zm_replay_run(
    map: *const ZmMap,
    trajectory_csv: *const c_char,
    options: *const ZmReplayOptions,
    out: *mut *mut ZmReport,
) -> ZmStatus {
    let path = match path_arg(trajectory_csv, "trajectory_csv") {
        Ok(p) => p,
        Err(Fail(status, msg)) => {
            set_error(msg);
            return status;
        }
    };
    run_into(map, options, out, |_| Ok(rio::load_trajectory(&path)?))
}

/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zm_report_summary(
    report: *const ZmReport,
    out: *mut ZmSummary,
) -> ZmStatus {
    guard(|| {
        let s = ref_arg(report, "report")?.inner.summary;
        *out_arg(out, "out")? = ZmSummary {
            total_transactions: s.total_transactions,
            batch_loads: s.batch_loads,
            batch_unloads: s.batch_unloads,
            kf_loads: s.kf_loads,
            kf_unloads: s.kf_unloads,
            peak_resident_count: s.peak_resident_count,
            peak_resident_bytes: s.peak_resident_bytes,
            budget_violations: s.budget_violations,
            over_budget_zone_events: s.over_budget_zone_events,
            lc_opportunities: s.lc_opportunities,
            lc_accepted: s.lc_accepted,
            lc_hit_ratio: s.lc_hit_ratio,
        };
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn zm_report_write_json(
    report: *const ZmReport,
    path: *const c_char,
) -> ZmStatus {
    guard(|| {
        let report = ref_arg(report, "report")?;
        report.inner.write_json(&path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn zm_report_write_timeseries(
    report: *const ZmReport,
    path: *const c_char,
) -> ZmStatus {
    guard(|| {
        let report = ref_arg(report, "report")?;
        report.inner.write_timeseries(&path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zm_report_free(report: *mut ZmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Starts a session with nothing resident. The session keeps its own
/// reference to the map, so the map handle may be freed afterwards.
///
/// # Safety
/// `map` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zm_session_new(
    map: *const ZmMap,
    strategy: ZmStrategy,
    k_max: usize,
    out: *mut *mut ZmSession,
) -> ZmStatus {
    guard(|| {
        let map = ref_arg(map, "map")?;
        let out = out_arg(out, "out")?;
        let budget = Budget::new(k_max)?;
        let store = MapStore::new(Arc::clone(&map.inner));
        let policy: Box<dyn WorkingSetPolicy> = match strategy {
            ZmStrategy::Semantic => Box::new(SemanticManager::new(store)),
            ZmStrategy::Geometric => {
                Box::new(GeometricManager::new(store, GeometricParams::default())?)
            }
        };
        *out = Box::into_raw(Box::new(ZmSession {
            policy,
            budget,
            tick: 0,
        }));
        Ok(())
    })
}

/// Feeds one pose; advances the session tick.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_session_update(
    session: *mut ZmSession,
    x: f64,
    y: f64,
    theta: f64,
) -> ZmStatus {
    guard(|| {
        let s = out_arg(session, "session")?;
        let pose = Pose::new(Point2::new(x, y), theta)?;
        s.policy.on_pose_update(&pose, s.budget, s.tick, None)?;
        s.tick += 1;
        Ok(())
    })
}

/// Changes the budget; evicts immediately when it shrinks.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_session_set_budget(session: *mut ZmSession, k_max: usize) -> ZmStatus {
    guard(|| {
        let s = out_arg(session, "session")?;
        let budget = Budget::new(k_max)?;
        if budget < s.budget {
            s.policy.shrink_to(budget, s.tick, None)?;
        }
        s.budget = budget;
        Ok(())
    })
}

/// # Safety
/// `session` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_session_resident_count(session: *const ZmSession) -> usize {
    session
        .as_ref()
        .map_or(0, |s| s.policy.store().resident_count())
}

/// # Safety
/// `session` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zm_session_transactions(session: *const ZmSession) -> u64 {
    session.as_ref().map_or(0, |s| {
        s.policy.store().log().counters().total_transactions()
    })
}

/// # Safety
/// `session` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zm_session_free(session: *mut ZmSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
