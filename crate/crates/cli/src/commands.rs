//! One function per subcommand. Every command reads its inputs from the
//! resolved config, writes under `out_dir`, and is byte-for-byte
//! reproducible for a fixed config and seed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gdp_core::capacity::{estimate_capacities, load_observations, load_throughput, write_observations, write_throughput};
use gdp_core::distributions::{group_marginals, reduce_scenarios, sample_scenarios, DiscretePmf, ScenarioSet, SeriesKey, TimeGroup};
use gdp_core::maghp::{build_model, delay_flow_report, solve_model, GroundHoldingPolicy, MaghpInstance, Mode, Radii, SolveReport};
use gdp_core::predictor::{build_dataset, load_weather, CapacityModel, WeatherRecord};
use gdp_core::schedule::{format_timestamp, load_schedule_with, write_schedule, Direction, Schedule};
use gdp_core::sensitivity::{sensitivity_sweep, write_series_csv, write_summary_csv, write_sweep_csv, ReductionConfig, SweepResult};
use gdp_lp::write_lp_format;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::error::CliError;
use crate::synth;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn require(path: &Path, hint: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(format!("{} not found; run `{hint}` first", path.display())))
    }
}

fn series_stem(airport: &str, direction: Direction) -> String {
    format!("{airport}_{direction}")
}

/// Sorted `.json` files of an artifact directory; missing or empty is an error.
fn artifact_files(dir: &Path, hint: &str) -> Result<Vec<PathBuf>, CliError> {
    require(dir, hint)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::missing(format!("{} holds no artifacts; run `{hint}` first", dir.display())));
    }
    Ok(files)
}

pub fn cmd_synth(res: &Resolved) -> Result<(), CliError> {
    let c = &res.config;
    let data = synth::generate(&c.synth, &c.grid, &c.schedule, c.seed)?;
    write_schedule(&data.schedule, create(&res.schedule_path())?)?;
    synth::write_weather(&data.weather, create(&res.weather_path())?)?;
    write_throughput(&data.throughput, create(&res.throughput_path())?)?;
    let truth_path = res.out("data/capacity_truth.csv");
    synth::write_truth(&data.truth, create(&truth_path)?)?;
    info!(
        "synth: {} flights, {} weather rows, {} throughput rows",
        data.schedule.flights.len(),
        data.weather.len(),
        data.throughput.len()
    );
    Ok(())
}

pub fn cmd_estimate(res: &Resolved) -> Result<(), CliError> {
    let records = load_throughput(res.throughput_path())?;
    let obs = estimate_capacities(&records, &res.config.estimate);
    if obs.is_empty() {
        warn!("estimate: no period met the selection rules; writing an empty table");
    }
    write_observations(&obs, create(&res.out("observations.csv"))?)?;
    info!("estimate: {} of {} periods selected", obs.len(), records.len());
    Ok(())
}

pub fn cmd_train(res: &Resolved) -> Result<(), CliError> {
    let obs_path = res.out("observations.csv");
    require(&obs_path, "estimate")?;
    let obs = load_observations(&obs_path)?;
    let weather = load_weather(res.weather_path())?;
    let series: Vec<SeriesKey> = obs
        .iter()
        .map(|o| SeriesKey::new(o.airport.clone(), o.direction))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut hyper = res.config.train.hyper;
    hyper.seed = res.config.seed;
    let mut summary = csv::Writer::from_writer(create(&res.out("models/validation.csv"))?);
    let csv_err = |e: csv::Error| CliError::input(e.to_string());
    summary
        .write_record(["airport", "direction", "rows", "max_capacity", "rmse", "cr", "acil_mean", "acil_std"])
        .map_err(csv_err)?;
    for key in series {
        let data = build_dataset(&weather, &obs, &key.airport, key.direction);
        if data.is_empty() {
            warn!("train: no weather rows match observations of {key}; skipping");
            continue;
        }
        let model = CapacityModel::fit(&key.airport, key.direction, &data, &hyper, res.config.train.ci_level)?;
        write_json(&res.out(format!("models/{}.json", series_stem(&key.airport, key.direction))), &model)?;
        let m = model.validation;
        let cell = |f: fn(&gdp_core::predictor::ForecastMetrics) -> f64| m.as_ref().map_or(String::new(), |m| f(m).to_string());
        summary
            .write_record([
                key.airport.clone(),
                key.direction.to_string(),
                data.len().to_string(),
                model.max_capacity.to_string(),
                cell(|m| m.rmse),
                cell(|m| m.cr),
                cell(|m| m.acil_mean),
                cell(|m| m.acil_std),
            ])
            .map_err(csv_err)?;
        info!("train: {key} on {} rows", data.len());
    }
    summary.flush().map_err(|e| CliError::input(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodPmf {
    pub period: usize,
    pub period_iso: String,
    /// Probabilities of capacities `0..=max_capacity`.
    pub probs: Vec<f64>,
}

/// Predicted capacity distributions of one series over the planning grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesForecast {
    pub airport: String,
    pub direction: Direction,
    pub max_capacity: u32,
    pub periods: Vec<PeriodPmf>,
}

pub fn cmd_predict(res: &Resolved) -> Result<(), CliError> {
    let grid = &res.config.grid;
    let weather = load_weather(res.weather_path())?;
    let by_key: BTreeMap<(&str, chrono::NaiveDateTime), &WeatherRecord> = weather.iter().map(|w| ((w.airport.as_str(), w.period), w)).collect();
    for path in artifact_files(&res.out("models"), "train")? {
        let model = CapacityModel::from_json(&std::fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?)?;
        let mut periods = Vec::with_capacity(grid.num_periods);
        for t in 0..grid.num_periods {
            let ts = grid.timestamp_of(t);
            let w = by_key.get(&(model.airport.as_str(), ts)).ok_or_else(|| {
                CliError::input(format!("no weather for {} at {}", model.airport, format_timestamp(&ts)))
            })?;
            periods.push(PeriodPmf {
                period: t,
                period_iso: format_timestamp(&ts),
                probs: model.predict_raw(&w.features.to_array())?.probs,
            });
        }
        let stem = series_stem(&model.airport, model.direction);
        let mut heat = csv::Writer::from_writer(create(&res.out(format!("predictions/heatmap_{stem}.csv")))?);
        let csv_err = |e: csv::Error| CliError::input(e.to_string());
        heat.write_record(["period", "capacity", "prob"]).map_err(csv_err)?;
        for p in &periods {
            for (c, q) in p.probs.iter().enumerate() {
                heat.write_record([p.period.to_string(), c.to_string(), q.to_string()]).map_err(csv_err)?;
            }
        }
        heat.flush().map_err(|e| CliError::input(e.to_string()))?;
        write_json(
            &res.out(format!("predictions/{stem}.json")),
            &SeriesForecast {
                airport: model.airport.clone(),
                direction: model.direction,
                max_capacity: model.max_capacity,
                periods,
            },
        )?;
        info!("predict: {stem}");
    }
    Ok(())
}

/// Schedule, time groups and sampled scenarios built from the forecasts.
pub fn build_instance(res: &Resolved) -> Result<MaghpInstance, CliError> {
    let c = &res.config;
    let files = artifact_files(&res.out("predictions"), "predict")?;
    let schedule: Schedule = load_schedule_with(res.schedule_path(), &c.grid, &c.schedule)?;
    for w in &schedule.warnings {
        warn!("schedule: {w}");
    }
    let mut per_period: BTreeMap<SeriesKey, Vec<DiscretePmf>> = BTreeMap::new();
    for path in files {
        let f: SeriesForecast = read_json(&path)?;
        if f.periods.len() != c.grid.num_periods {
            return Err(CliError::input(format!(
                "{} covers {} periods but the grid has {}",
                path.display(),
                f.periods.len(),
                c.grid.num_periods
            )));
        }
        let pmfs = f
            .periods
            .into_iter()
            .map(|p| DiscretePmf::over_range(p.probs))
            .collect::<Result<Vec<_>, _>>()?;
        per_period.insert(SeriesKey::new(f.airport, f.direction), pmfs);
    }
    let groups: Vec<TimeGroup> = reduce_scenarios(&per_period, c.scenarios.threshold)?;
    let scenarios: ScenarioSet = sample_scenarios(&group_marginals(&groups), c.scenarios.count, c.seed)?;
    info!("instance: {} time groups, {} distinct scenarios", groups.len(), scenarios.scenarios.len());
    Ok(MaghpInstance::new(schedule, c.costs, scenarios, groups, c.solve.radii)?)
}

/// Written in place of a report when the solver stops without an optimum.
#[derive(Serialize)]
struct FailedSolve<'a> {
    mode: Mode,
    status: String,
    message: &'a str,
}

/// Builds and solves `mode`; `export` receives the model in LP format first.
fn solve_or_report(inst: &MaghpInstance, mode: Mode, res: &Resolved, dir: &Path, export: Option<&Path>) -> Result<(GroundHoldingPolicy, SolveReport), CliError> {
    let model = build_model(inst, mode)?;
    if let Some(path) = export {
        let mut w = create(path)?;
        w.write_all(write_lp_format(&model.mip).as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    match solve_model(&model, &inst.schedule, &inst.costs, &res.config.solve.solver()) {
        Ok(r) => Ok(r),
        Err(gdp_core::Error::SolverStatus(status)) => {
            let message = format!("solver stopped with status {status}");
            write_json(
                &dir.join("report.json"),
                &FailedSolve {
                    mode,
                    status: status.to_string(),
                    message: &message,
                },
            )?;
            Err(gdp_core::Error::SolverStatus(status).into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Solves `mode` and writes `solve/<mode>/{policy,report,scenarios,groups}.json`.
/// Robust solves also write `radii_series.csv` over `solve.eps_grid`, and
/// `delay_flow.csv` against an existing sp policy. With `export_lp` the
/// model is also written to `model.lp`.
pub fn cmd_solve(res: &Resolved, mode: Mode, eps: Option<f64>, export_lp: bool) -> Result<(), CliError> {
    let mut inst = build_instance(res)?;
    if let Some(e) = eps {
        if !(e >= 0.0) {
            return Err(CliError::config("--eps must be nonnegative"));
        }
        inst = inst.with_radii(Radii::uniform(e));
    }
    let dir = res.out(format!("solve/{}", mode.as_str()));
    let lp_path = dir.join("model.lp");
    let (policy, report) = solve_or_report(&inst, mode, res, &dir, export_lp.then_some(lp_path.as_path()))?;
    write_json(&dir.join("policy.json"), &policy)?;
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("scenarios.json"), &inst.scenarios)?;
    write_json(&dir.join("groups.json"), &inst.groups)?;
    info!("solve {}: objective {}", mode.as_str(), report.objective);
    if mode == Mode::Dr {
        let grid = &res.config.solve.eps_grid;
        if !grid.is_empty() {
            let mut w = csv::Writer::from_writer(create(&dir.join("radii_series.csv"))?);
            let csv_err = |e: csv::Error| CliError::input(e.to_string());
            w.write_record(["eps", "in_sample_objective"]).map_err(csv_err)?;
            for &e in grid {
                let (_, r) = solve_or_report(&inst.with_radii(Radii::uniform(e)), Mode::Dr, res, &dir, None)?;
                w.write_record([e.to_string(), r.objective.to_string()]).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::input(e.to_string()))?;
        }
        let sp_path = res.out("solve/sp/policy.json");
        if sp_path.exists() {
            let sp: GroundHoldingPolicy = read_json(&sp_path)?;
            let edges = delay_flow_report(&sp, &policy, &inst.schedule)?;
            let mut w = csv::Writer::from_writer(create(&dir.join("delay_flow.csv"))?);
            let csv_err = |e: csv::Error| CliError::input(e.to_string());
            w.write_record(["origin", "destination", "flights", "pct_delayed_sp", "pct_delayed_dr", "delta_pct"])
                .map_err(csv_err)?;
            for e in edges {
                w.write_record([
                    e.origin,
                    e.destination,
                    e.flights.to_string(),
                    e.pct_delayed_a.to_string(),
                    e.pct_delayed_b.to_string(),
                    e.delta_pct.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::input(e.to_string()))?;
        }
    }
    Ok(())
}

/// Runs the sweep and writes `sensitivity/{sweep,table_iv}.csv` plus one
/// `series_r<r>.csv` per reduction level.
pub fn cmd_sensitivity(res: &Resolved) -> Result<SweepResult, CliError> {
    let c = &res.config;
    let inst = build_instance(res)?;
    let config = ReductionConfig {
        reduction_level: 0.0,
        max_variability: c.sensitivity.max_variability,
        sample_count: c.sensitivity.sample_count,
        seed: c.seed,
    };
    let result = sensitivity_sweep(&inst, &c.sensitivity.r_grid, &c.sensitivity.eps_grid, &config, &c.solve.solver())?;
    write_sweep_csv(create(&res.out("sensitivity/sweep.csv"))?, &result)?;
    write_summary_csv(create(&res.out("sensitivity/table_iv.csv"))?, &result)?;
    for s in &result.summary {
        write_series_csv(create(&res.out(format!("sensitivity/series_r{}.csv", s.r)))?, &result, s.r)?;
    }
    for s in &result.summary {
        info!(
            "sensitivity r={}: sp {} dr {} (eps* {}, {:.3}% lower)",
            s.r, s.phi_sp, s.phi_dr, s.best_eps, s.pct_decrease
        );
    }
    Ok(result)
}
