//! Flights, airports and the discrete planning grid.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arrival or departure side of an airport.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Arrival,
    Departure,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Arrival, Direction::Departure];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Arrival => "arrival",
            Direction::Departure => "departure",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::Arrival => 0,
            Direction::Departure => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arrival" | "arr" | "a" => Ok(Direction::Arrival),
            "departure" | "dep" | "d" | "g" => Ok(Direction::Departure),
            other => Err(Error::Validation(format!("unknown direction '{other}'"))),
        }
    }
}

const TIMESTAMP_FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"];

/// Parses an ISO-8601 local timestamp with or without seconds.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| Error::Validation(format!("cannot parse timestamp '{s}'")))
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M").to_string()
}

pub(crate) mod timestamp_serde {
    use super::*;

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }
}

/// Planning horizon split into equal periods. Index `num_periods` is the
/// overflow period that absorbs flights pushed past the horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    #[serde(with = "timestamp_serde")]
    pub start: NaiveDateTime,
    pub num_periods: usize,
    #[serde(default = "default_period_minutes")]
    pub period_minutes: u32,
}

fn default_period_minutes() -> u32 {
    15
}

impl TimeGrid {
    pub fn new(start: NaiveDateTime, num_periods: usize, period_minutes: u32) -> Result<Self> {
        let grid = Self {
            start,
            num_periods,
            period_minutes,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_periods == 0 {
            return Err(Error::Validation("time grid needs at least one period".into()));
        }
        if self.period_minutes == 0 {
            return Err(Error::Validation("period length must be at least one minute".into()));
        }
        Ok(())
    }

    pub fn overflow(&self) -> usize {
        self.num_periods
    }

    /// Period index containing `ts` (floor division; negative before the start).
    pub fn period_of(&self, ts: &NaiveDateTime) -> i64 {
        let minutes = (*ts - self.start).num_minutes();
        minutes.div_euclid(self.period_minutes as i64)
    }

    pub fn timestamp_of(&self, period: usize) -> NaiveDateTime {
        self.start + Duration::minutes(period as i64 * self.period_minutes as i64)
    }

    pub fn end(&self) -> NaiveDateTime {
        self.timestamp_of(self.num_periods)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Airport {
    pub code: String,
    /// Largest capacity observed historically (per period).
    pub max_capacity_hist: u32,
}

/// Contiguous, inclusive range of period indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodWindow {
    pub first: usize,
    pub last: usize,
}

impl PeriodWindow {
    pub fn new(first: usize, last: usize) -> Self {
        debug_assert!(first <= last);
        Self { first, last }
    }

    pub fn contains(&self, t: usize) -> bool {
        (self.first..=self.last).contains(&t)
    }

    pub fn periods(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flight {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub sched_dep: usize,
    pub sched_arr: usize,
    pub tail: Option<String>,
    pub dep_window: PeriodWindow,
    pub arr_window: PeriodWindow,
}

impl Flight {
    pub fn duration(&self) -> usize {
        self.sched_arr - self.sched_dep
    }
}

/// Two consecutive legs flown by the same aircraft. `pred` and `succ` index
/// into [`Schedule::flights`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailConnection {
    pub pred: usize,
    pub succ: usize,
    /// Scheduled ground time beyond the minimum turnaround, in periods.
    pub slack: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub ground_cost: f64,
    pub airborne_cost: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            ground_cost: 1.0,
            airborne_cost: 2.0,
        }
    }
}

impl CostConfig {
    pub fn new(ground_cost: f64, airborne_cost: f64) -> Result<Self> {
        let c = Self {
            ground_cost,
            airborne_cost,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ground_cost > 0.0 && self.airborne_cost >= self.ground_cost && self.airborne_cost.is_finite()) {
            return Err(Error::Validation(format!(
                "costs must satisfy airborne ({}) >= ground ({}) > 0",
                self.airborne_cost, self.ground_cost
            )));
        }
        Ok(())
    }

    /// Per-flight, per-side price of assignment to the overflow period.
    pub fn overflow_penalty(&self) -> f64 {
        1000.0 * self.airborne_cost
    }
}

/// Window widths and turnaround used when building a [`Schedule`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    pub max_ground_delay: usize,
    pub max_airborne_delay: usize,
    pub min_turnaround: usize,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            max_ground_delay: 12,
            max_airborne_delay: 4,
            min_turnaround: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub airports: Vec<Airport>,
    pub flights: Vec<Flight>,
    pub connections: Vec<TailConnection>,
    pub grid: TimeGrid,
    /// Non-fatal findings from construction, such as clipped slack.
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Departure and arrival windows for `flight`, truncated at the overflow period.
pub fn build_time_windows(
    flight: &Flight,
    grid: &TimeGrid,
    max_ground_delay: usize,
    max_airborne_delay: usize,
) -> (PeriodWindow, PeriodWindow) {
    let overflow = grid.overflow();
    let dep_last = (flight.sched_dep + max_ground_delay).min(overflow);
    let arr_last = (flight.sched_arr + max_ground_delay + max_airborne_delay).min(overflow);
    (
        PeriodWindow::new(flight.sched_dep, dep_last.max(flight.sched_dep)),
        PeriodWindow::new(flight.sched_arr, arr_last.max(flight.sched_arr)),
    )
}

/// Pairs consecutive legs of each tail (ordered by scheduled departure).
///
/// Returns the connections and a warning for every clipped slack or
/// mismatched airport pair.
pub fn build_connections(flights: &[Flight], min_turnaround: usize) -> (Vec<TailConnection>, Vec<String>) {
    let mut by_tail: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, f) in flights.iter().enumerate() {
        if let Some(tail) = f.tail.as_deref().filter(|t| !t.is_empty()) {
            by_tail.entry(tail).or_default().push(i);
        }
    }
    let mut connections = Vec::new();
    let mut warnings = Vec::new();
    for (tail, mut legs) in by_tail {
        legs.sort_by(|&a, &b| {
            flights[a]
                .sched_dep
                .cmp(&flights[b].sched_dep)
                .then_with(|| flights[a].id.cmp(&flights[b].id))
        });
        for pair in legs.windows(2) {
            let (pred, succ) = (&flights[pair[0]], &flights[pair[1]]);
            if pred.destination != succ.origin {
                warnings.push(format!(
                    "tail {tail}: {} lands at {} but {} departs {}; legs not connected",
                    pred.id, pred.destination, succ.id, succ.origin
                ));
                continue;
            }
            let gap = succ.sched_dep as i64 - pred.sched_arr as i64 - min_turnaround as i64;
            if gap < 0 {
                warnings.push(format!(
                    "tail {tail}: turnaround {} -> {} is {} period(s) short; slack clipped to 0",
                    pred.id, succ.id, -gap
                ));
            }
            connections.push(TailConnection {
                pred: pair[0],
                succ: pair[1],
                slack: gap.max(0) as usize,
            });
        }
    }
    connections.sort_by_key(|c| (c.pred, c.succ));
    (connections, warnings)
}

impl Schedule {
    /// Builds a schedule from raw legs: derives the airport list, time
    /// windows and tail connections, then validates everything.
    pub fn from_flights(flights: Vec<Flight>, grid: TimeGrid, opts: &ScheduleOptions) -> Result<Self> {
        grid.validate()?;
        let mut flights = flights;
        for (i, f) in flights.iter().enumerate() {
            validate_leg(f, &grid).map_err(|e| Error::Validation(format!("flight #{i} ({}): {e}", f.id)))?;
        }
        for f in &mut flights {
            let (dep, arr) = build_time_windows(f, &grid, opts.max_ground_delay, opts.max_airborne_delay);
            f.dep_window = dep;
            f.arr_window = arr;
        }
        let codes: BTreeSet<&str> = flights
            .iter()
            .flat_map(|f| [f.origin.as_str(), f.destination.as_str()])
            .collect();
        let airports = codes
            .into_iter()
            .map(|c| Airport {
                code: c.to_string(),
                max_capacity_hist: 0,
            })
            .collect();
        let (connections, warnings) = build_connections(&flights, opts.min_turnaround);
        for w in &warnings {
            log::warn!("{w}");
        }
        let schedule = Self {
            airports,
            flights,
            connections,
            grid,
            warnings,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let mut codes = BTreeSet::new();
        for a in &self.airports {
            if !codes.insert(a.code.as_str()) {
                return Err(Error::Validation(format!("duplicate airport code {}", a.code)));
            }
        }
        let mut ids = HashMap::new();
        for (i, f) in self.flights.iter().enumerate() {
            if ids.insert(f.id.as_str(), i).is_some() {
                return Err(Error::Validation(format!("duplicate flight id {}", f.id)));
            }
            validate_leg(f, &self.grid).map_err(|e| Error::Validation(format!("flight {}: {e}", f.id)))?;
            for code in [&f.origin, &f.destination] {
                if !codes.contains(code.as_str()) {
                    return Err(Error::Validation(format!("flight {} references unknown airport {code}", f.id)));
                }
            }
            let overflow = self.grid.overflow();
            if !f.dep_window.contains(f.sched_dep) || f.dep_window.first != f.sched_dep || f.dep_window.last > overflow {
                return Err(Error::Validation(format!("flight {}: departure window must start at d_f within the grid", f.id)));
            }
            if f.arr_window.first != f.sched_arr || f.arr_window.last > overflow {
                return Err(Error::Validation(format!("flight {}: arrival window must start at r_f within the grid", f.id)));
            }
        }
        let mut succs = BTreeSet::new();
        for c in &self.connections {
            let (Some(p), Some(s)) = (self.flights.get(c.pred), self.flights.get(c.succ)) else {
                return Err(Error::Validation(format!("connection {} -> {} references a missing flight", c.pred, c.succ)));
            };
            if p.destination != s.origin {
                return Err(Error::Validation(format!("connection {} -> {}: airports do not match", p.id, s.id)));
            }
            if !succs.insert(c.succ) {
                return Err(Error::Validation(format!("flight {} succeeds more than one leg", s.id)));
            }
        }
        Ok(())
    }

    pub fn airport_index(&self, code: &str) -> Option<usize> {
        self.airports.iter().position(|a| a.code == code)
    }

    pub fn flight_index(&self, id: &str) -> Option<usize> {
        self.flights.iter().position(|f| f.id == id)
    }
}

fn validate_leg(f: &Flight, grid: &TimeGrid) -> std::result::Result<(), String> {
    if f.sched_arr <= f.sched_dep {
        return Err(format!(
            "scheduled arrival (period {}) must be after departure (period {})",
            f.sched_arr, f.sched_dep
        ));
    }
    if f.sched_dep >= grid.num_periods {
        return Err(format!("departs in period {} outside the {}-period horizon", f.sched_dep, grid.num_periods));
    }
    if f.sched_arr > grid.overflow() {
        return Err(format!("arrives in period {} beyond the overflow period {}", f.sched_arr, grid.overflow()));
    }
    if f.origin == f.destination {
        return Err("origin equals destination".into());
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct ScheduleRow {
    flight_id: String,
    origin: String,
    dest: String,
    sched_dep_iso: String,
    sched_arr_iso: String,
    tail: Option<String>,
}

/// Reads the schedule CSV (`flight_id,origin,dest,sched_dep_iso,sched_arr_iso,tail`).
pub fn read_schedule<R: Read>(reader: R, grid: &TimeGrid, opts: &ScheduleOptions) -> Result<Schedule> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut flights = Vec::new();
    for (k, row) in rdr.deserialize::<ScheduleRow>().enumerate() {
        let line = k as u64 + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let parse = |s: &str| -> Result<i64> {
            let ts = parse_timestamp(s).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            Ok(grid.period_of(&ts))
        };
        let dep = parse(&row.sched_dep_iso)?;
        let arr = parse(&row.sched_arr_iso)?;
        if dep < 0 || arr < 0 {
            return Err(Error::Parse {
                line,
                message: format!("flight {} is scheduled before the grid start", row.flight_id),
            });
        }
        flights.push(Flight {
            id: row.flight_id,
            origin: row.origin,
            destination: row.dest,
            sched_dep: dep as usize,
            sched_arr: arr as usize,
            tail: row.tail.filter(|t| !t.is_empty()),
            dep_window: PeriodWindow::new(dep as usize, dep as usize),
            arr_window: PeriodWindow::new(arr.max(0) as usize, arr.max(0) as usize),
        });
    }
    Schedule::from_flights(flights, grid.clone(), opts)
}

pub fn load_schedule(path: impl AsRef<Path>, grid: &TimeGrid) -> Result<Schedule> {
    load_schedule_with(path, grid, &ScheduleOptions::default())
}

pub fn load_schedule_with(path: impl AsRef<Path>, grid: &TimeGrid, opts: &ScheduleOptions) -> Result<Schedule> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_schedule(file, grid, opts)
}

/// Writes the schedule CSV with period-start timestamps.
pub fn write_schedule<W: Write>(schedule: &Schedule, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for f in &schedule.flights {
        w.serialize(ScheduleRow {
            flight_id: f.id.clone(),
            origin: f.origin.clone(),
            dest: f.destination.clone(),
            sched_dep_iso: format_timestamp(&schedule.grid.timestamp_of(f.sched_dep)),
            sched_arr_iso: format_timestamp(&schedule.grid.timestamp_of(f.sched_arr)),
            tail: f.tail.clone(),
        })?;
    }
    if schedule.flights.is_empty() {
        w.write_record(["flight_id", "origin", "dest", "sched_dep_iso", "sched_arr_iso", "tail"])?;
    }
    w.flush().map_err(|e| Error::io("<schedule writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(parse_timestamp("2019-12-31T09:00").unwrap(), n, 15).unwrap()
    }

    fn leg(id: &str, o: &str, d: &str, dep: usize, arr: usize, tail: Option<&str>) -> Flight {
        Flight {
            id: id.into(),
            origin: o.into(),
            destination: d.into(),
            sched_dep: dep,
            sched_arr: arr,
            tail: tail.map(String::from),
            dep_window: PeriodWindow::new(dep, dep),
            arr_window: PeriodWindow::new(arr, arr),
        }
    }

    const HEADER: &str = "flight_id,origin,dest,sched_dep_iso,sched_arr_iso,tail\n";

    #[test]
    fn timestamps_floor_into_periods() {
        let csv = format!("{HEADER}F1,AAA,BBB,2019-12-31T09:00,2019-12-31T10:00,T1\n");
        let s = read_schedule(csv.as_bytes(), &grid(48), &ScheduleOptions::default()).unwrap();
        assert_eq!(s.flights[0].sched_dep, 0);
        assert_eq!(s.flights[0].sched_arr, 4);
        assert_eq!(s.flights[0].tail.as_deref(), Some("T1"));

        let csv = format!("{HEADER}F1,AAA,BBB,2019-12-31T09:14,2019-12-31T10:29,\n");
        let s = read_schedule(csv.as_bytes(), &grid(48), &ScheduleOptions::default()).unwrap();
        assert_eq!((s.flights[0].sched_dep, s.flights[0].sched_arr), (0, 5));
        assert_eq!(s.flights[0].tail, None);
    }

    #[test]
    fn empty_flight_section_is_valid() {
        let s = read_schedule(HEADER.as_bytes(), &grid(48), &ScheduleOptions::default()).unwrap();
        assert!(s.flights.is_empty());
        assert!(s.airports.is_empty());
    }

    #[test]
    fn arrival_not_after_departure_is_rejected() {
        let csv = format!("{HEADER}F1,AAA,BBB,2019-12-31T10:00,2019-12-31T10:00,\n");
        let err = read_schedule(csv.as_bytes(), &grid(48), &ScheduleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("must be after departure")), "{err}");
    }

    #[test]
    fn parse_errors_carry_the_line_number() {
        let csv = format!("{HEADER}F1,AAA,BBB,2019-12-31T09:00,2019-12-31T10:00,\nF2,AAA,BBB,noon,2019-12-31T10:00,\n");
        let err = read_schedule(csv.as_bytes(), &grid(48), &ScheduleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn slack_is_ground_time_beyond_turnaround() {
        let flights = vec![leg("A", "AAA", "BBB", 6, 10, Some("T1")), leg("B", "BBB", "CCC", 15, 18, Some("T1"))];
        let (conns, warnings) = build_connections(&flights, 3);
        assert_eq!(conns, vec![TailConnection { pred: 0, succ: 1, slack: 2 }]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn single_leg_tail_has_no_connection() {
        let (conns, _) = build_connections(&[leg("A", "AAA", "BBB", 0, 4, Some("T1"))], 3);
        assert!(conns.is_empty());
    }

    #[test]
    fn short_turnaround_clips_slack_with_warning() {
        let flights = vec![leg("A", "AAA", "BBB", 6, 10, Some("T1")), leg("B", "BBB", "CCC", 12, 16, Some("T1"))];
        let (conns, warnings) = build_connections(&flights, 3);
        assert_eq!(conns[0].slack, 0);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn legs_are_ordered_by_departure_not_input_order() {
        let flights = vec![leg("B", "BBB", "AAA", 12, 14, Some("T")), leg("A", "AAA", "BBB", 2, 6, Some("T"))];
        let (conns, _) = build_connections(&flights, 3);
        assert_eq!(conns, vec![TailConnection { pred: 1, succ: 0, slack: 3 }]);
    }

    #[test]
    fn windows_extend_by_delay_budgets() {
        let g = grid(48);
        let f = leg("A", "AAA", "BBB", 0, 4, None);
        let (dep, arr) = build_time_windows(&f, &g, 2, 1);
        assert_eq!(dep.periods().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(arr.periods().collect::<Vec<_>>(), vec![4, 5, 6, 7]);
        assert_eq!(arr.first - dep.first, f.duration());
    }

    #[test]
    fn windows_truncate_at_overflow() {
        let g = grid(8);
        let f = leg("A", "AAA", "BBB", 5, 7, None);
        let (dep, arr) = build_time_windows(&f, &g, 12, 4);
        assert_eq!((dep.first, dep.last), (5, 8));
        assert_eq!((arr.first, arr.last), (7, 8));
        assert!(dep.contains(g.overflow()) && arr.contains(g.overflow()));
    }

    #[test]
    fn zero_delays_give_singleton_windows() {
        let f = leg("A", "AAA", "BBB", 3, 6, None);
        let (dep, arr) = build_time_windows(&f, &grid(48), 0, 0);
        assert_eq!(dep, PeriodWindow::new(3, 3));
        assert_eq!(arr, PeriodWindow::new(6, 6));
    }

    #[test]
    fn csv_round_trip_preserves_schedule() {
        let g = grid(16);
        let flights = vec![
            leg("A", "AAA", "BBB", 1, 4, Some("T1")),
            leg("B", "BBB", "AAA", 9, 12, Some("T1")),
            leg("C", "CCC", "AAA", 2, 16, None),
        ];
        let s = Schedule::from_flights(flights, g.clone(), &ScheduleOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_schedule(&s, &mut buf).unwrap();
        let back = read_schedule(buf.as_slice(), &g, &ScheduleOptions::default()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn grid_json_accepts_minute_precision() {
        let g: TimeGrid = serde_json::from_str(r#"{"start": "2019-12-31T09:00", "num_periods": 48, "period_minutes": 15}"#).unwrap();
        assert_eq!(g.num_periods, 48);
        assert_eq!(format_timestamp(&g.timestamp_of(4)), "2019-12-31T10:00");
        assert!(TimeGrid::new(g.start, 0, 15).is_err());
    }

    #[test]
    fn cost_config_requires_costlier_airborne_delay() {
        assert!(CostConfig::new(2.0, 1.0).is_err());
        assert!(CostConfig::new(0.0, 1.0).is_err());
        assert!(CostConfig::new(1.0, 1.0).is_ok());
    }
}
