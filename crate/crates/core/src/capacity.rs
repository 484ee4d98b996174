//! Capacity observations derived from throughput records.
//!
//! A record's throughput is taken as a capacity observation only when the
//! period was demand-saturated (rule 1) or suffered repeated long delays
//! (rule 2). Arrival and departure records are filtered independently.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{format_timestamp, parse_timestamp, Direction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRecord {
    pub airport: String,
    pub period: NaiveDateTime,
    pub direction: Direction,
    pub demand: u32,
    pub throughput: u32,
    pub avg_delay: f64,
    pub num_delayed: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityObservation {
    pub airport: String,
    pub period: NaiveDateTime,
    pub direction: Direction,
    pub capacity_hat: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapacityParams {
    pub tau: u32,
    /// Minutes; rule 2 requires strictly more.
    pub delay_thresh: f64,
    /// Rule 2 requires strictly more delayed flights than this.
    pub min_delayed: u32,
}

impl Default for CapacityParams {
    fn default() -> Self {
        Self {
            tau: 3,
            delay_thresh: 30.0,
            min_delayed: 1,
        }
    }
}

pub fn rule_demand_excess(r: &ThroughputRecord, tau: u32) -> bool {
    r.demand as u64 >= r.throughput as u64 + tau as u64
}

pub fn rule_delay(r: &ThroughputRecord, delay_thresh: f64, min_delayed: u32) -> bool {
    r.avg_delay > delay_thresh && r.num_delayed > min_delayed
}

pub fn rule_select(r: &ThroughputRecord, params: &CapacityParams) -> bool {
    rule_demand_excess(r, params.tau) || rule_delay(r, params.delay_thresh, params.min_delayed)
}

pub fn estimate_capacities(records: &[ThroughputRecord], params: &CapacityParams) -> Vec<CapacityObservation> {
    records
        .iter()
        .filter(|r| rule_select(r, params))
        .map(|r| CapacityObservation {
            airport: r.airport.clone(),
            period: r.period,
            direction: r.direction,
            capacity_hat: r.throughput,
        })
        .collect()
}

/// Records sorted by descending throughput; ties keep ascending period order.
pub fn throughput_ranking(records: &[ThroughputRecord], selected_only: bool, params: &CapacityParams) -> Vec<ThroughputRecord> {
    let mut out: Vec<ThroughputRecord> = records
        .iter()
        .filter(|r| !selected_only || rule_select(r, params))
        .cloned()
        .collect();
    out.sort_by(|a, b| b.throughput.cmp(&a.throughput).then(a.period.cmp(&b.period)));
    out
}

#[derive(Debug, Deserialize)]
struct ThroughputRow {
    airport: String,
    period_iso: String,
    direction: String,
    demand: f64,
    throughput: f64,
    avg_delay_min: f64,
    num_delayed: f64,
}

fn as_count(v: f64, field: &str, line: u64) -> Result<u32> {
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(Error::Parse {
            line,
            message: format!("{field} must be a nonnegative integer, got {v}"),
        });
    }
    Ok(v as u32)
}

/// Reads `airport,period_iso,direction,demand,throughput,avg_delay_min,num_delayed`.
pub fn read_throughput<R: Read>(reader: R) -> Result<Vec<ThroughputRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize::<ThroughputRow>().enumerate() {
        let line = k as u64 + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let parse_err = |e: Error| Error::Parse {
            line,
            message: e.to_string(),
        };
        if !(row.avg_delay_min.is_finite() && row.avg_delay_min >= 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("avg_delay_min must be nonnegative, got {}", row.avg_delay_min),
            });
        }
        out.push(ThroughputRecord {
            airport: row.airport,
            period: parse_timestamp(&row.period_iso).map_err(parse_err)?,
            direction: row.direction.parse().map_err(parse_err)?,
            demand: as_count(row.demand, "demand", line)?,
            throughput: as_count(row.throughput, "throughput", line)?,
            avg_delay: row.avg_delay_min,
            num_delayed: as_count(row.num_delayed, "num_delayed", line)?,
        });
    }
    Ok(out)
}

pub fn load_throughput(path: impl AsRef<Path>) -> Result<Vec<ThroughputRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_throughput(file)
}

pub fn write_throughput<W: Write>(records: &[ThroughputRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["airport", "period_iso", "direction", "demand", "throughput", "avg_delay_min", "num_delayed"])?;
    for r in records {
        w.write_record([
            r.airport.clone(),
            format_timestamp(&r.period),
            r.direction.to_string(),
            r.demand.to_string(),
            r.throughput.to_string(),
            r.avg_delay.to_string(),
            r.num_delayed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<throughput writer>", e))?;
    Ok(())
}

/// Writes `airport,period_iso,direction,capacity_hat`; the header is always present.
pub fn write_observations<W: Write>(obs: &[CapacityObservation], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["airport", "period_iso", "direction", "capacity_hat"])?;
    for o in obs {
        w.write_record([
            o.airport.clone(),
            format_timestamp(&o.period),
            o.direction.to_string(),
            o.capacity_hat.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<observation writer>", e))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ObservationRow {
    airport: String,
    period_iso: String,
    direction: String,
    capacity_hat: f64,
}

pub fn read_observations<R: Read>(reader: R) -> Result<Vec<CapacityObservation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize::<ObservationRow>().enumerate() {
        let line = k as u64 + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let parse_err = |e: Error| Error::Parse {
            line,
            message: e.to_string(),
        };
        out.push(CapacityObservation {
            airport: row.airport,
            period: parse_timestamp(&row.period_iso).map_err(parse_err)?,
            direction: row.direction.parse().map_err(parse_err)?,
            capacity_hat: as_count(row.capacity_hat, "capacity_hat", line)?,
        });
    }
    Ok(out)
}

pub fn load_observations(path: impl AsRef<Path>) -> Result<Vec<CapacityObservation>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_observations(file)
}
