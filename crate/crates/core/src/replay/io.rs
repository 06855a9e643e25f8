//! CSV formats for trajectories, budget schedules and routes.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::replay::{BudgetSchedule, Trajectory};
use crate::strategy::Budget;

#[derive(Serialize, Deserialize)]
struct TrajectoryRow {
    t: f64,
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRow {
    t_start: f64,
    k_max: i64,
}

#[derive(Serialize, Deserialize)]
struct RouteRow {
    x: f64,
    y: f64,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let detail = match e.position() {
        Some(pos) => format!("line {}: {e}", pos.line()),
        None => e.to_string(),
    };
    Error::format(path, detail)
}

fn check_header(path: &Path, rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::format(
            path,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

pub fn write_trajectory(traj: &Trajectory, mut out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    for (t, pose) in traj.samples() {
        w.serialize(TrajectoryRow {
            t: *t,
            x: pose.position.x,
            y: pose.position.y,
            theta: pose.heading(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory(traj, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf8")
}

pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(traj, create(path)?).map_err(|e| csv_err(path, e))
}

pub fn parse_trajectory(input: impl Read, path: &Path) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(path, &mut rdr, &["t", "x", "y", "theta"])?;
    let mut samples = Vec::new();
    for row in rdr.deserialize::<TrajectoryRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let pose = Pose::new(Point2::new(row.x, row.y), row.theta)
            .map_err(|e| Error::format(path, format!("row {}: {e}", samples.len() + 1)))?;
        samples.push((row.t, pose));
    }
    Trajectory::new(samples).map_err(|e| Error::format(path, e.to_string()))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(open(path)?, path)
}

pub fn save_schedule(schedule: &BudgetSchedule, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (t, b) in schedule.segments() {
        w.serialize(ScheduleRow {
            t_start: *t,
            k_max: b.k_max() as i64,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_schedule(input: impl Read, path: &Path) -> Result<BudgetSchedule> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(path, &mut rdr, &["t_start", "k_max"])?;
    let mut segments = Vec::new();
    for row in rdr.deserialize::<ScheduleRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let budget = usize::try_from(row.k_max)
            .ok()
            .and_then(|k| Budget::new(k).ok())
            .ok_or_else(|| {
                Error::format(
                    path,
                    format!(
                        "row {}: k_max must be >= 1, got {}",
                        segments.len() + 1,
                        row.k_max
                    ),
                )
            })?;
        segments.push((row.t_start, budget));
    }
    BudgetSchedule::new(segments).map_err(|e| Error::format(path, e.to_string()))
}

pub fn load_schedule(path: &Path) -> Result<BudgetSchedule> {
    parse_schedule(open(path)?, path)
}

pub fn save_route(route: &[Point2], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for p in route {
        w.serialize(RouteRow { x: p.x, y: p.y })
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_route(input: impl Read, path: &Path) -> Result<Vec<Point2>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(path, &mut rdr, &["x", "y"])?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<RouteRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let p = Point2::new(row.x, row.y);
        if !p.is_finite() {
            return Err(Error::format(
                path,
                format!("row {}: non-finite waypoint", out.len() + 1),
            ));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::format(path, "route has no waypoints"));
    }
    Ok(out)
}

pub fn load_route(path: &Path) -> Result<Vec<Point2>> {
    parse_route(open(path)?, path)
}
