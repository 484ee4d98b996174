//! Desk-scale synthetic dataset: a flight schedule, weather driven by a
//! latent severity process, capacities that respond to the weather, and
//! throughput records over a run of history days before the planning day.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Duration, NaiveDateTime};
use gdp_core::capacity::ThroughputRecord;
use gdp_core::predictor::{WeatherFeatures, WeatherRecord};
use gdp_core::schedule::{format_timestamp, Direction, Flight, PeriodWindow, Schedule, ScheduleOptions, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const AIRPORT_CODES: [&str; 8] = ["ATL", "ORD", "DFW", "DEN", "JFK", "LAX", "SFO", "SEA"];

/// Weights of each weather term in the capacity reduction. The weighted
/// sum is clipped to `[0, 1]` and scales the base capacity down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherResponse {
    pub ceiling: f64,
    pub visibility: f64,
    pub vil: f64,
    pub wind: f64,
}

impl Default for WeatherResponse {
    fn default() -> Self {
        Self {
            ceiling: 0.25,
            visibility: 0.35,
            vil: 0.3,
            wind: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub airports: usize,
    /// Flights per ordered airport pair.
    pub flights_per_pair: usize,
    pub history_days: usize,
    pub base_arrival_capacity: u32,
    pub base_departure_capacity: u32,
    pub response: WeatherResponse,
    /// Probability that a throughput count is perturbed by one.
    pub noise: f64,
    /// Upper bound of the uniform background traffic added to scheduled
    /// demand on history days.
    pub background_demand: u32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            airports: 3,
            flights_per_pair: 2,
            history_days: 30,
            base_arrival_capacity: 3,
            base_departure_capacity: 3,
            response: WeatherResponse::default(),
            noise: 0.1,
            background_demand: 4,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self, grid: &TimeGrid) -> Result<(), CliError> {
        if self.airports < 2 || self.flights_per_pair == 0 || self.history_days == 0 {
            return Err(CliError::config("synth needs at least 2 airports, 1 flight per pair and 1 history day"));
        }
        if self.base_arrival_capacity == 0 || self.base_departure_capacity == 0 {
            return Err(CliError::config("synth base capacities must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(CliError::config("synth noise must lie in [0, 1]"));
        }
        let w = self.response;
        if [w.ceiling, w.visibility, w.vil, w.wind].iter().any(|c| !(*c >= 0.0)) {
            return Err(CliError::config("synth response coefficients must be nonnegative"));
        }
        if grid.num_periods < 4 {
            return Err(CliError::config("synth needs a grid of at least 4 periods"));
        }
        Ok(())
    }

    pub fn airport_codes(&self) -> Vec<String> {
        (0..self.airports)
            .map(|k| AIRPORT_CODES.get(k).map_or_else(|| format!("Z{k:02}"), |c| c.to_string()))
            .collect()
    }

    /// Capacity implied by one weather observation.
    pub fn capacity(&self, w: &WeatherFeatures, direction: Direction) -> u32 {
        let r = self.response;
        let severity = r.ceiling * (1.0 - w.ceiling / 5000.0).clamp(0.0, 1.0)
            + r.visibility * (1.0 - w.visibility / 10.0).clamp(0.0, 1.0)
            + r.vil * (w.vil / 25.0).clamp(0.0, 1.0)
            + r.wind * (w.wind_speed / 35.0).clamp(0.0, 1.0);
        let base = match direction {
            Direction::Arrival => self.base_arrival_capacity,
            Direction::Departure => self.base_departure_capacity,
        };
        (base as f64 * (1.0 - severity.clamp(0.0, 1.0))).round() as u32
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub airport: String,
    pub period: NaiveDateTime,
    pub direction: Direction,
    pub capacity: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub schedule: Schedule,
    pub weather: Vec<WeatherRecord>,
    pub throughput: Vec<ThroughputRecord>,
    pub truth: Vec<TruthRecord>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate(spec: &SyntheticSpec, grid: &TimeGrid, opts: &ScheduleOptions, seed: u64) -> Result<SyntheticData, CliError> {
    spec.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = spec.airport_codes();
    let schedule = generate_schedule(spec, &codes, grid, opts, &mut rng)?;

    let p = grid.num_periods;
    let mut weather = Vec::new();
    let mut throughput = Vec::new();
    let mut truth = Vec::new();
    let mut demand: BTreeMap<(&str, Direction, usize), u32> = BTreeMap::new();
    for f in &schedule.flights {
        *demand.entry((f.origin.as_str(), Direction::Departure, f.sched_dep)).or_default() += 1;
        *demand.entry((f.destination.as_str(), Direction::Arrival, f.sched_arr)).or_default() += 1;
    }
    for code in &codes {
        let mut wind_dir: f64 = rng.random_range(0.0..360.0);
        for day in 0..=spec.history_days {
            let offset = Duration::days(day as i64 - spec.history_days as i64);
            let intensity: f64 = rng.random::<f64>().powi(2);
            let mut latent = intensity;
            for t in 0..p {
                latent = (0.8 * latent + 0.2 * intensity + 0.1 * normal(&mut rng)).clamp(0.0, 1.0);
                let temperature = 10.0 + 5.0 * (2.0 * std::f64::consts::PI * t as f64 / 96.0).sin() + normal(&mut rng);
                wind_dir = (wind_dir + 10.0 * normal(&mut rng)).rem_euclid(360.0);
                let features = WeatherFeatures {
                    ceiling: (5000.0 * (1.0 - 0.9 * latent) + 300.0 * normal(&mut rng)).clamp(100.0, 10000.0),
                    visibility: (10.0 * (1.0 - 0.85 * latent) + 0.5 * normal(&mut rng)).clamp(0.0, 10.0),
                    vil: (25.0 * latent * latent + 0.5 * normal(&mut rng)).max(0.0),
                    temperature,
                    dew_point: temperature - 5.0 * (1.0 - latent) - normal(&mut rng).abs(),
                    wind_direction: wind_dir,
                    wind_speed: (8.0 + 25.0 * latent + 2.0 * normal(&mut rng)).max(0.0),
                };
                let period = grid.timestamp_of(t) + offset;
                weather.push(WeatherRecord {
                    airport: code.clone(),
                    period,
                    features,
                });
                for direction in Direction::ALL {
                    let cap = spec.capacity(&features, direction);
                    truth.push(TruthRecord {
                        airport: code.clone(),
                        period,
                        direction,
                        capacity: cap,
                    });
                    if day == spec.history_days {
                        continue;
                    }
                    let scheduled = demand.get(&(code.as_str(), direction, t)).copied().unwrap_or(0);
                    let d = scheduled + rng.random_range(0..=spec.background_demand);
                    let mut served = d.min(cap);
                    if rng.random_bool(spec.noise) {
                        served = if rng.random_bool(0.5) { served + 1 } else { served.saturating_sub(1) };
                    }
                    let delayed = d.saturating_sub(cap);
                    throughput.push(ThroughputRecord {
                        airport: code.clone(),
                        period,
                        direction,
                        demand: d,
                        throughput: served,
                        avg_delay: 20.0 * delayed as f64,
                        num_delayed: delayed,
                    });
                }
            }
        }
    }
    Ok(SyntheticData {
        schedule,
        weather,
        throughput,
        truth,
    })
}

/// Flights for every ordered pair, departing in the first third of the
/// horizon with one- or two-period blocks. Flights are chained onto tails
/// when an aircraft is on the ground at the origin in time.
fn generate_schedule(spec: &SyntheticSpec, codes: &[String], grid: &TimeGrid, opts: &ScheduleOptions, rng: &mut ChaCha8Rng) -> Result<Schedule, CliError> {
    let p = grid.num_periods;
    let bank_end = (p / 3).clamp(1, p - 3);
    let mut flights = Vec::new();
    for (o, origin) in codes.iter().enumerate() {
        for (d, dest) in codes.iter().enumerate() {
            if o == d {
                continue;
            }
            for _ in 0..spec.flights_per_pair {
                let dep = rng.random_range(0..=bank_end);
                let arr = (dep + rng.random_range(1..=2)).min(p - 1);
                flights.push(Flight {
                    id: String::new(),
                    origin: origin.clone(),
                    destination: dest.clone(),
                    sched_dep: dep,
                    sched_arr: arr,
                    tail: None,
                    dep_window: PeriodWindow::new(dep, dep),
                    arr_window: PeriodWindow::new(arr, arr),
                });
            }
        }
    }
    flights.sort_by(|a, b| (a.sched_dep, &a.origin, &a.destination).cmp(&(b.sched_dep, &b.origin, &b.destination)));
    // (tail, airport, ready period) of aircraft on the ground.
    let mut parked: Vec<(String, String, usize)> = Vec::new();
    let mut next_tail = 0;
    for (k, f) in flights.iter_mut().enumerate() {
        f.id = format!("SY{k:03}");
        let slot = parked
            .iter()
            .position(|(_, at, ready)| *at == f.origin && *ready <= f.sched_dep)
            .filter(|_| rng.random_bool(0.5));
        let tail = match slot {
            Some(i) => parked.remove(i).0,
            None => {
                next_tail += 1;
                format!("N{next_tail:03}")
            }
        };
        parked.push((tail.clone(), f.destination.clone(), f.sched_arr + opts.min_turnaround));
        f.tail = Some(tail);
    }
    Ok(Schedule::from_flights(flights, grid.clone(), opts)?)
}

/// Writes `airport,period_iso,ceiling,visibility,vil,temperature,dew_point,wind_dir,wind_speed`.
pub fn write_weather<W: Write>(records: &[WeatherRecord], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CliError::input(e.to_string());
    out.write_record(["airport", "period_iso", "ceiling", "visibility", "vil", "temperature", "dew_point", "wind_dir", "wind_speed"])
        .map_err(io)?;
    for r in records {
        let mut row = vec![r.airport.clone(), format_timestamp(&r.period)];
        row.extend(r.features.to_array().iter().map(|v| format!("{v:.3}")));
        out.write_record(&row).map_err(io)?;
    }
    out.flush().map_err(|e| CliError::input(e.to_string()))
}

/// Writes `airport,period_iso,direction,capacity`.
pub fn write_truth<W: Write>(records: &[TruthRecord], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CliError::input(e.to_string());
    out.write_record(["airport", "period_iso", "direction", "capacity"]).map_err(io)?;
    for r in records {
        out.write_record([r.airport.clone(), format_timestamp(&r.period), r.direction.as_str().to_string(), r.capacity.to_string()])
            .map_err(io)?;
    }
    out.flush().map_err(|e| CliError::input(e.to_string()))
}
