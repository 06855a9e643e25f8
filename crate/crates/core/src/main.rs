use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use zonemem::map::{read_map, write_map};
use zonemem::replay::world::{self, WorldSpec};
use zonemem::replay::{self, io as rio, BudgetSchedule, LoopClosureModel, ReplayConfig};
use zonemem::report::{self, ReplayReport};
use zonemem::strategy::GeometricParams;
use zonemem::{Budget, MapData, StrategyKind, ZoneId};

#[derive(Parser)]
#[command(
    name = "zonemem",
    version,
    about = "Zone-level keyframe working-set experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corridor-and-rooms map directory
    GenWorld(GenWorldArgs),
    /// Write a patrol trajectory (and its waypoint route) for a map
    GenTrajectory(GenTrajectoryArgs),
    /// Replay a trajectory under one or both strategies
    Replay(ReplayArgs),
    /// Compare two reports metric by metric
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenWorldArgs {
    #[arg(long, default_value_t = 6)]
    rooms: usize,
    /// Room size as WxH in meters
    #[arg(long, default_value = "8x6", value_parser = parse_size)]
    room_size: (f64, f64),
    #[arg(long, default_value_t = 3.0)]
    corridor_width: f64,
    #[arg(long, default_value_t = 0.5)]
    kf_spacing: f64,
    #[arg(long, default_value_t = 2_097_152)]
    payload_bytes: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "world")]
    out: PathBuf,
}

#[derive(Args)]
struct GenTrajectoryArgs {
    #[arg(long, default_value = "world")]
    map: PathBuf,
    /// Comma-separated zone names or ids; defaults to every room then back to the first
    #[arg(long, conflicts_with = "revisit")]
    visit: Option<String>,
    /// Rooms out and back (1..N..1)
    #[arg(long)]
    revisit: bool,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
    #[arg(long, default_value = "route.csv")]
    route_out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Semantic,
    Geometric,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long, default_value = "world")]
    map: PathBuf,
    /// Trajectory CSV; defaults to the map's default patrol
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    strategy: StrategyArg,
    /// Constant keyframe budget; defaults to 1.5x the largest zone
    #[arg(long, conflicts_with = "budget_schedule")]
    budget: Option<usize>,
    #[arg(long)]
    budget_schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "off")]
    prefetch: Switch,
    /// Planned route CSV (x,y waypoints)
    #[arg(long)]
    route: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    lc_radius: f64,
    #[arg(long, default_value_t = 1)]
    lc_min: usize,
    #[arg(long, default_value_t = 5.0)]
    r_load: f64,
    #[arg(long, default_value_t = 10.0)]
    r_unload: f64,
    /// Defaults to report-<strategy>.json
    #[arg(long)]
    report: Option<PathBuf>,
    /// Defaults to timeseries-<strategy>.csv
    #[arg(long)]
    timeseries: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value = "report-geometric.json")]
    a: PathBuf,
    #[arg(long, default_value = "report-semantic.json")]
    b: PathBuf,
    /// Also write the table as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<zonemem::Error> for Failure {
    fn from(e: zonemem::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_size(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: f64 = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: f64 = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    Ok((w, h))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenWorld(a) => gen_world(a),
        Command::GenTrajectory(a) => gen_trajectory(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn gen_world(a: GenWorldArgs) -> Result<(), Failure> {
    let spec = WorldSpec {
        rooms: a.rooms,
        room_w: a.room_size.0,
        room_h: a.room_size.1,
        corridor_w: a.corridor_width,
        kf_spacing: a.kf_spacing,
        payload_bytes: a.payload_bytes,
        seed: a.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let map = world::generate_world(&spec)?;
    write_map(&map, &a.out)?;
    println!(
        "wrote {}: {} zones, {} keyframes, largest zone {}",
        a.out.display(),
        map.zones().len(),
        map.keyframes().len(),
        map.largest_zone()
    );
    Ok(())
}

fn resolve_zone(map: &MapData, token: &str) -> Result<ZoneId, Failure> {
    let token = token.trim();
    if let Some(z) = map.zones().by_name(token) {
        return Ok(z.id());
    }
    let id = token
        .trim_start_matches('z')
        .parse::<u32>()
        .map_err(|_| usage(format!("unknown zone `{token}`")))?;
    if !map.zones().contains_id(ZoneId(id)) {
        return Err(usage(format!("unknown zone `{token}`")));
    }
    Ok(ZoneId(id))
}

fn gen_trajectory(a: GenTrajectoryArgs) -> Result<(), Failure> {
    let map = read_map(&a.map)?;
    let visit = match (&a.visit, a.revisit) {
        (Some(list), _) => list
            .split(',')
            .map(|t| resolve_zone(&map, t))
            .collect::<Result<Vec<_>, _>>()?,
        (None, true) => world::revisit_order(&map),
        (None, false) => world::default_visit_order(&map),
    };
    let patrol = world::generate_patrol_route(&map, &visit)?;
    rio::save_trajectory(&patrol.trajectory, &a.out)?;
    rio::save_route(&patrol.waypoints, &a.route_out)?;
    println!(
        "wrote {} ({} samples, {:.1} s) and {}",
        a.out.display(),
        patrol.trajectory.len(),
        patrol.trajectory.duration(),
        a.route_out.display()
    );
    Ok(())
}

fn replay_cmd(a: ReplayArgs) -> Result<(), Failure> {
    let strategies: Vec<StrategyKind> = match a.strategy {
        StrategyArg::Semantic => vec![StrategyKind::Semantic],
        StrategyArg::Geometric => vec![StrategyKind::Geometric],
        StrategyArg::Both => vec![StrategyKind::Geometric, StrategyKind::Semantic],
    };
    let prefetch = a.prefetch == Switch::On;
    if prefetch && a.strategy != StrategyArg::Semantic {
        return Err(usage("--prefetch on requires --strategy semantic"));
    }
    if strategies.len() > 1 && (a.report.is_some() || a.timeseries.is_some()) {
        return Err(usage("--report/--timeseries need a single --strategy"));
    }
    let geometric = GeometricParams::new(a.r_load, a.r_unload).map_err(|e| usage(e.to_string()))?;
    let lc = LoopClosureModel::new(a.lc_radius, a.lc_min).map_err(|e| usage(e.to_string()))?;
    let fixed_budget = a
        .budget
        .map(Budget::new)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;

    let map = Arc::new(read_map(&a.map)?);
    let trajectory = match &a.trajectory {
        Some(path) => rio::load_trajectory(path)?,
        None => world::generate_patrol_route(&map, &world::default_visit_order(&map))?.trajectory,
    };
    let schedule = match (&a.budget_schedule, fixed_budget) {
        (Some(path), _) => rio::load_schedule(path)?,
        (None, Some(b)) => BudgetSchedule::constant(b),
        (None, None) => BudgetSchedule::constant(default_budget(&map)),
    };
    let route = a.route.as_deref().map(rio::load_route).transpose()?;

    for strategy in strategies {
        let mut config = ReplayConfig::new(strategy, schedule.clone());
        config.geometric = geometric;
        config.lc = lc;
        config.prefetch = prefetch;
        config.route = route.clone();
        let report = replay::run(&map, &trajectory, &config)?;
        let report_path = a
            .report
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("report-{strategy}.json")));
        let ts_path = a
            .timeseries
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("timeseries-{strategy}.csv")));
        report.write_json(&report_path)?;
        report.write_timeseries(&ts_path)?;
        print_summary(&report, &report_path, &ts_path);
    }
    Ok(())
}

fn default_budget(map: &MapData) -> Budget {
    let k = (map.largest_zone() as f64 * 1.5).round() as usize;
    Budget::new(k.max(1)).expect("positive")
}

fn print_summary(r: &ReplayReport, report_path: &Path, ts_path: &Path) {
    let s = &r.summary;
    println!(
        "{}: {} transactions, peak {} keyframes, {} budget violations, lc {}/{}; wrote {} and {}",
        r.config.strategy,
        s.total_transactions,
        s.peak_resident_count,
        s.budget_violations,
        s.lc_accepted,
        s.lc_opportunities,
        report_path.display(),
        ts_path.display()
    );
}

fn compare_cmd(a: CompareArgs) -> Result<(), Failure> {
    let ra = ReplayReport::read_json(&a.a)?;
    let rb = ReplayReport::read_json(&a.b)?;
    let table = report::compare(&ra, &rb)
        .with_context(|| format!("comparing {} with {}", a.a.display(), a.b.display()))?;
    print!("{table}");
    if let Some(out) = &a.out {
        std::fs::write(out, table.to_csv())
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}
