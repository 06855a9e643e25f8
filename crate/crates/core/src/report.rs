//! Run summaries, A/B comparison tables and the JSON/CSV report formats.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::replay::{transaction_counters, LcOutcome};
use crate::strategy::{EventKind, StrategyEvent, StrategyKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub t_start: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub r_load: f64,
    pub r_unload: f64,
    pub lc_radius: f64,
    pub lc_min: usize,
    pub prefetch: bool,
    pub route_aware: bool,
    pub route_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub map_hash: String,
    pub trajectory_hash: String,
    pub strategy: StrategyKind,
    pub budget_schedule: Vec<ScheduleSegment>,
    pub params: RunParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRow {
    pub t: f64,
    pub resident_count: usize,
    pub resident_bytes: u64,
    pub k_max: usize,
    pub cum_transactions: u64,
    pub lc_outcome: LcOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
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

impl Summary {
    /// `(name, value)` pairs in report order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("total_transactions", self.total_transactions as f64),
            ("batch_loads", self.batch_loads as f64),
            ("batch_unloads", self.batch_unloads as f64),
            ("kf_loads", self.kf_loads as f64),
            ("kf_unloads", self.kf_unloads as f64),
            ("peak_resident_count", self.peak_resident_count as f64),
            ("peak_resident_bytes", self.peak_resident_bytes as f64),
            ("budget_violations", self.budget_violations as f64),
            (
                "over_budget_zone_events",
                self.over_budget_zone_events as f64,
            ),
            ("lc_opportunities", self.lc_opportunities as f64),
            ("lc_accepted", self.lc_accepted as f64),
            ("lc_hit_ratio", self.lc_hit_ratio),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub schema: u32,
    pub config: RunEcho,
    pub summary: Summary,
    pub timeseries: Vec<TickRow>,
    pub events: Vec<StrategyEvent>,
}

/// Folds events and per-tick rows into a report, checking that the
/// cumulative transaction column agrees with the event log tick by tick.
pub fn summarize(
    config: RunEcho,
    events: Vec<StrategyEvent>,
    timeseries: Vec<TickRow>,
) -> Result<ReplayReport> {
    let mut cum = 0u64;
    let mut ev = events.iter().peekable();
    for (i, row) in timeseries.iter().enumerate() {
        while let Some(e) = ev.next_if(|e| e.tick <= i as u64) {
            if e.kind.is_transaction() {
                cum += 1;
            }
        }
        if row.cum_transactions != cum {
            return Err(Error::Inconsistent(format!(
                "tick {i}: timeseries reports {} cumulative transactions, events imply {cum}",
                row.cum_transactions
            )));
        }
    }
    if let Some(e) = ev.next() {
        return Err(Error::Inconsistent(format!(
            "event at tick {} beyond the last of {} ticks (or out of order)",
            e.tick,
            timeseries.len()
        )));
    }

    let tx = transaction_counters(&events);
    let count = |kind: EventKind| events.iter().filter(|e| e.kind == kind).count() as u64;
    let lc_opportunities = timeseries
        .iter()
        .filter(|r| r.lc_outcome != LcOutcome::NoOpportunity)
        .count() as u64;
    let lc_accepted = timeseries
        .iter()
        .filter(|r| r.lc_outcome == LcOutcome::Accepted)
        .count() as u64;
    let summary = Summary {
        total_transactions: tx.total_transactions(),
        batch_loads: tx.batch_loads,
        batch_unloads: tx.batch_unloads,
        kf_loads: tx.keyframes_loaded,
        kf_unloads: tx.keyframes_unloaded,
        peak_resident_count: timeseries
            .iter()
            .map(|r| r.resident_count)
            .max()
            .unwrap_or(0),
        peak_resident_bytes: timeseries
            .iter()
            .map(|r| r.resident_bytes)
            .max()
            .unwrap_or(0),
        budget_violations: count(EventKind::BudgetViolation),
        over_budget_zone_events: count(EventKind::OverBudgetZone),
        lc_opportunities,
        lc_accepted,
        lc_hit_ratio: if lc_opportunities == 0 {
            0.0
        } else {
            lc_accepted as f64 / lc_opportunities as f64
        },
    };
    Ok(ReplayReport {
        schema: SCHEMA_VERSION,
        config,
        summary,
        timeseries,
        events,
    })
}

impl ReplayReport {
    /// Recomputes the summary from the stored events and time series.
    pub fn recompute(&self) -> Result<Summary> {
        summarize(
            self.config.clone(),
            self.events.clone(),
            self.timeseries.clone(),
        )
        .map(|r| r.summary)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self =
            serde_json::from_str(text).map_err(|e| Error::format("report", e.to_string()))?;
        if report.schema != SCHEMA_VERSION {
            return Err(Error::format(
                "report",
                format!(
                    "unsupported schema {}, expected {SCHEMA_VERSION}",
                    report.schema
                ),
            ));
        }
        Ok(report)
    }

    pub fn timeseries_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "t",
            "resident_count",
            "resident_bytes",
            "k_max",
            "cum_transactions",
            "lc_outcome",
        ])
        .expect("in-memory write");
        for r in &self.timeseries {
            w.write_record([
                r.t.to_string(),
                r.resident_count.to_string(),
                r.resident_bytes.to_string(),
                r.k_max.to_string(),
                r.cum_transactions.to_string(),
                r.lc_outcome.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn write_timeseries(&self, path: &Path) -> Result<()> {
        fs::write(path, self.timeseries_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { detail, .. } => Error::format(path, detail),
            other => other,
        })
    }
}

/// Parses the CSV written by [`ReplayReport::timeseries_csv`].
pub fn parse_timeseries_csv(text: &str) -> Result<Vec<TickRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format("timeseries", e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad =
            |what: &str| Error::format("timeseries", format!("row {}: bad {what}", rows.len() + 1));
        let lc_outcome = match field(5) {
            "no_opportunity" => LcOutcome::NoOpportunity,
            "accepted" => LcOutcome::Accepted,
            "missed" => LcOutcome::Missed,
            _ => return Err(bad("lc_outcome")),
        };
        rows.push(TickRow {
            t: field(0).parse().map_err(|_| bad("t"))?,
            resident_count: field(1).parse().map_err(|_| bad("resident_count"))?,
            resident_bytes: field(2).parse().map_err(|_| bad("resident_bytes"))?,
            k_max: field(3).parse().map_err(|_| bad("k_max"))?,
            cum_transactions: field(4).parse().map_err(|_| bad("cum_transactions"))?,
            lc_outcome,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub a: f64,
    pub b: f64,
    /// (B − A) / A in percent; `None` when A is zero.
    pub change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn relative_change_pct(a: f64, b: f64) -> Option<f64> {
    if a == 0.0 {
        None
    } else {
        Some((b - a) / a * 100.0)
    }
}

/// Metric-by-metric A/B table. Both reports must come from the same map and trajectory.
pub fn compare(a: &ReplayReport, b: &ReplayReport) -> Result<ComparisonTable> {
    if a.config.map_hash != b.config.map_hash {
        return Err(Error::MapHashMismatch {
            a: a.config.map_hash.clone(),
            b: b.config.map_hash.clone(),
        });
    }
    if a.config.trajectory_hash != b.config.trajectory_hash {
        return Err(Error::Inconsistent(format!(
            "trajectory hash mismatch: {} vs {}",
            a.config.trajectory_hash, b.config.trajectory_hash
        )));
    }
    let rows = a
        .summary
        .metrics()
        .into_iter()
        .zip(b.summary.metrics())
        .map(|((name, va), (_, vb))| ComparisonRow {
            name: name.to_string(),
            a: va,
            b: vb,
            change_pct: relative_change_pct(va, vb),
        })
        .collect();
    Ok(ComparisonTable {
        label_a: a.config.strategy.to_string(),
        label_b: b.config.strategy.to_string(),
        rows,
    })
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.4}")
    }
}

fn fmt_change(c: Option<f64>) -> String {
    match c {
        Some(c) => format!("{c:+.2}%"),
        None => "n/a".to_string(),
    }
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", &self.label_a, &self.label_b, "change"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                fmt_value(r.a),
                fmt_value(r.b),
                fmt_change(r.change_pct),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(6)
            .max(6);
        writeln!(
            f,
            "{:<width$}  {:>14}  {:>14}  {:>10}",
            "metric", self.label_a, self.label_b, "change"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<width$}  {:>14}  {:>14}  {:>10}",
                r.name,
                fmt_value(r.a),
                fmt_value(r.b),
                fmt_change(r.change_pct)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo(hash: &str) -> RunEcho {
        RunEcho {
            map_hash: hash.into(),
            trajectory_hash: "t".into(),
            strategy: StrategyKind::Semantic,
            budget_schedule: vec![ScheduleSegment {
                t_start: 0.0,
                k_max: 10,
            }],
            params: RunParams {
                r_load: 5.0,
                r_unload: 10.0,
                lc_radius: 2.0,
                lc_min: 1,
                prefetch: false,
                route_aware: false,
                route_step: 0.25,
            },
        }
    }

    fn row(t: f64, resident: usize, cum: u64, lc: LcOutcome) -> TickRow {
        TickRow {
            t,
            resident_count: resident,
            resident_bytes: resident as u64 * 10,
            k_max: 10,
            cum_transactions: cum,
            lc_outcome: lc,
        }
    }

    #[test]
    fn empty_log() {
        let rows = vec![row(0.0, 0, 0, LcOutcome::NoOpportunity); 3];
        let r = summarize(echo("h"), vec![], rows).unwrap();
        assert_eq!(r.summary, Summary::default());
        assert_eq!(r.summary.lc_hit_ratio, 0.0);
    }

    #[test]
    fn two_batches() {
        let ev = vec![
            StrategyEvent {
                tick: 0,
                kind: EventKind::ZoneLoad,
                subject: 0,
                count: 3,
            },
            StrategyEvent {
                tick: 1,
                kind: EventKind::ZoneLoad,
                subject: 1,
                count: 4,
            },
        ];
        let rows = vec![
            row(0.0, 3, 1, LcOutcome::Accepted),
            row(0.1, 7, 2, LcOutcome::Missed),
        ];
        let r = summarize(echo("h"), ev, rows).unwrap();
        assert_eq!(r.summary.total_transactions, 2);
        assert_eq!(r.summary.kf_loads, 7);
        assert_eq!(r.summary.peak_resident_count, 7);
        assert_eq!(r.summary.lc_hit_ratio, 0.5);
        assert_eq!(r.recompute().unwrap(), r.summary);
    }

    #[test]
    fn inconsistent_logs_rejected() {
        let ev = vec![StrategyEvent {
            tick: 0,
            kind: EventKind::ZoneLoad,
            subject: 0,
            count: 3,
        }];
        assert!(summarize(
            echo("h"),
            ev.clone(),
            vec![row(0.0, 3, 0, LcOutcome::Accepted)]
        )
        .is_err());
        let late = vec![StrategyEvent {
            tick: 5,
            kind: EventKind::ZoneLoad,
            subject: 0,
            count: 3,
        }];
        assert!(summarize(echo("h"), late, vec![row(0.0, 0, 0, LcOutcome::Accepted)]).is_err());
    }

    fn with_tx(n: u64) -> ReplayReport {
        let ev = (0..n)
            .map(|_| StrategyEvent {
                tick: 0,
                kind: EventKind::KfLoad,
                subject: 0,
                count: 1,
            })
            .collect();
        summarize(echo("h"), ev, vec![row(0.0, 1, n, LcOutcome::Accepted)]).unwrap()
    }

    #[test]
    fn comparison_arithmetic() {
        let same = compare(&with_tx(5), &with_tx(5)).unwrap();
        assert!(same
            .rows
            .iter()
            .all(|r| r.change_pct.is_none_or(|c| c == 0.0)));
        let t = compare(&with_tx(100), &with_tx(40)).unwrap();
        assert_eq!(t.rows[0].name, "total_transactions");
        assert_eq!(t.rows[0].change_pct, Some(-60.0));
        let zero = compare(&with_tx(0), &with_tx(4)).unwrap();
        assert_eq!(zero.rows[0].change_pct, None);
        assert!(zero.to_string().contains("n/a"));
    }

    #[test]
    fn hash_mismatch() {
        let mut b = with_tx(1);
        b.config.map_hash = "other".into();
        assert!(matches!(
            compare(&with_tx(1), &b),
            Err(Error::MapHashMismatch { .. })
        ));
    }

    #[test]
    fn json_and_csv_round_trip() {
        let r = with_tx(3);
        let json = r.to_json();
        let back = ReplayReport::from_json(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), json);
        let csv = r.timeseries_csv();
        assert!(
            csv.starts_with("t,resident_count,resident_bytes,k_max,cum_transactions,lc_outcome\n")
        );
        assert_eq!(parse_timeseries_csv(&csv).unwrap(), r.timeseries);
        assert!(json.contains("\"schema\": 1"));
    }

    #[test]
    fn csv_table_matches_display_rows() {
        let t = compare(&with_tx(100), &with_tx(40)).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), t.rows.len() + 1);
        assert!(csv.contains("total_transactions,100,40,-60.00%"));
    }
}
