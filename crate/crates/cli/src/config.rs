//! Pipeline configuration: one JSON document with a section per command.
//! Relative paths are resolved against the directory holding the config
//! file; command-line flags override `seed` and `out_dir`.

use std::path::{Path, PathBuf};

use gdp_core::capacity::CapacityParams;
use gdp_core::maghp::Radii;
use gdp_core::predictor::Hyper;
use gdp_core::schedule::{parse_timestamp, CostConfig, ScheduleOptions, TimeGrid};
use gdp_lp::{BranchAndBound, MipOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::synth::SyntheticSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub grid: TimeGrid,
    pub data: DataPaths,
    pub synth: SyntheticSpec,
    pub estimate: CapacityParams,
    pub train: TrainConfig,
    pub scenarios: ScenarioConfig,
    pub schedule: ScheduleOptions,
    pub costs: CostConfig,
    pub solve: SolveConfig,
    pub sensitivity: SensitivityConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            grid: TimeGrid {
                start: parse_timestamp("2020-01-31T08:00").expect("valid literal"),
                num_periods: 48,
                period_minutes: 15,
            },
            data: DataPaths::default(),
            synth: SyntheticSpec::default(),
            estimate: CapacityParams::default(),
            train: TrainConfig::default(),
            scenarios: ScenarioConfig::default(),
            schedule: ScheduleOptions::default(),
            costs: CostConfig::default(),
            solve: SolveConfig::default(),
            sensitivity: SensitivityConfig::default(),
        }
    }
}

/// Input tables. Unset paths default to `<out_dir>/data/<name>.csv`, which
/// is where `synth` writes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub schedule: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub throughput: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hyper: Hyper,
    /// Confidence level of the validation intervals.
    pub ci_level: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hyper: Hyper::default(),
            ci_level: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Wasserstein threshold that splits consecutive periods into groups.
    pub threshold: f64,
    /// Joint draws from the group centroids; duplicates are merged.
    pub count: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            count: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub radii: Radii,
    /// Uniform radii for the in-sample series written by robust solves.
    pub eps_grid: Vec<f64>,
    pub gap_tol: f64,
    pub node_limit: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            radii: Radii::uniform(0.1),
            eps_grid: vec![0.0, 0.05, 0.1, 0.25, 0.5],
            gap_tol: 1e-9,
            node_limit: 1_000_000,
        }
    }
}

impl SolveConfig {
    pub fn solver(&self) -> BranchAndBound {
        BranchAndBound::new(MipOptions {
            gap_tol: self.gap_tol,
            node_limit: self.node_limit,
            ..MipOptions::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub r_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub max_variability: f64,
    pub sample_count: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            r_grid: (1..=10).map(|k| k as f64 / 10.0).collect(),
            eps_grid: vec![0.0, 0.05, 0.1, 0.25, 0.5, 1.0],
            max_variability: 1e9,
            sample_count: 100,
        }
    }
}

/// A loaded config together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

impl Resolved {
    pub fn load(path: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<Self, CliError> {
        let (mut config, base_dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
                let config: PipelineConfig = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (config, dir)
            }
            None => (PipelineConfig::default(), PathBuf::new()),
        };
        if let Some(s) = seed {
            config.seed = s;
        }
        let mut resolved = Self { config, base_dir };
        if let Some(o) = out {
            resolved.config.out_dir = o.to_path_buf();
        } else {
            resolved.config.out_dir = resolved.resolve(&resolved.config.out_dir);
        }
        resolved.validate()?;
        Ok(resolved)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        c.grid.validate()?;
        c.costs.validate()?;
        if c.scenarios.count == 0 {
            return Err(CliError::config("scenarios.count must be at least 1"));
        }
        if c.solve.eps_grid.iter().chain(&c.sensitivity.eps_grid).any(|e| !(*e >= 0.0)) {
            return Err(CliError::config("radius grids must hold nonnegative values"));
        }
        if c.sensitivity.r_grid.is_empty() || c.sensitivity.eps_grid.is_empty() {
            return Err(CliError::config("sensitivity grids must be nonempty"));
        }
        Ok(())
    }

    pub fn out(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.config.out_dir.join(rel)
    }

    fn data_path(&self, set: &Option<PathBuf>, name: &str) -> PathBuf {
        match set {
            Some(p) => self.resolve(p),
            None => self.out(Path::new("data").join(name)),
        }
    }

    pub fn schedule_path(&self) -> PathBuf {
        self.data_path(&self.config.data.schedule, "schedule.csv")
    }

    pub fn weather_path(&self) -> PathBuf {
        self.data_path(&self.config.data.weather, "weather.csv")
    }

    pub fn throughput_path(&self) -> PathBuf {
        self.data_path(&self.config.data.throughput, "throughput.csv")
    }
}
