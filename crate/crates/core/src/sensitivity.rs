//! Out-of-sample evaluation under shifted capacity distributions.
//!
//! Each predicted marginal is shifted to a lower target mean inside a box
//! around its probabilities, joint samples are drawn from the shifted
//! marginals, and fixed policies are scored by their average realized cost.

use std::collections::BTreeMap;
use std::io::Write;

use gdp_lp::MipSolver;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{group_marginals, DiscretePmf, ScenarioKey, TimeGroup};
use crate::error::{Error, Result};
use crate::maghp::{evaluate_policy, solve, CapacityTable, GroundHoldingPolicy, MaghpInstance, Mode, Radii};
use crate::schedule::{CostConfig, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub reduction_level: f64,
    pub max_variability: f64,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_sample_count() -> usize {
    100
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        check_level(self.reduction_level)?;
        check_delta(self.max_variability)?;
        if self.sample_count == 0 {
            return Err(Error::Validation("sample_count must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_level(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Validation(format!("reduction level {r} is outside [0, 1]")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("maximum variability {delta} must be positive")))
    }
}

/// Shifts `pmf` to mean `μ̂(1 − r)` with every probability kept inside
/// `[max(0, (1 − δ) p̂), (1 + δ) p̂]`.
///
/// Among the optimal solutions this returns `p̂` when it already attains the
/// target, else the vertex reached by moving mass from the highest atoms to
/// the lowest ones. That vertex moves monotonically with `r`, so reduced
/// distributions are stochastically ordered across reduction levels.
pub fn reduce_pmf(pmf: &DiscretePmf, r: f64, delta: f64) -> Result<DiscretePmf> {
    check_level(r)?;
    check_delta(delta)?;
    let mean = pmf.mean();
    let target = mean * (1.0 - r);
    let tol = 1e-12 * (1.0 + mean.abs());
    let mut need = mean - target;
    if need <= tol {
        return Ok(pmf.clone());
    }
    let xs = pmf.supports();
    let mut p = pmf.probs().to_vec();
    let mut up: Vec<f64> = p.iter().map(|&q| delta * q).collect();
    let mut down: Vec<f64> = p.iter().map(|&q| delta.min(1.0) * q).collect();
    let (mut lo, mut hi) = (0, p.len() - 1);
    while need > tol && lo < hi {
        if up[lo] <= 0.0 {
            lo += 1;
            continue;
        }
        if down[hi] <= 0.0 {
            hi -= 1;
            continue;
        }
        let gain = xs[hi] - xs[lo];
        let m = up[lo].min(down[hi]).min(need / gain);
        p[lo] += m;
        p[hi] -= m;
        up[lo] -= m;
        down[hi] -= m;
        need -= m * gain;
    }
    if need > tol {
        return Err(Error::InfeasibleReduction {
            series: String::new(),
            target,
            attainable: target + need,
        });
    }
    for q in &mut p {
        *q = q.max(0.0);
    }
    DiscretePmf::new(xs.to_vec(), p)
}

/// Joint capacity draws over `keys`; `draws[i][k]` is the capacity of
/// `keys[k]` in sample `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitySamples {
    pub keys: Vec<ScenarioKey>,
    pub draws: Vec<Vec<u32>>,
}

impl CapacitySamples {
    pub fn tables(&self, groups: &[TimeGroup]) -> Result<Vec<CapacityTable>> {
        self.draws
            .iter()
            .map(|d| CapacityTable::from_vector(&self.keys, d, groups))
            .collect()
    }
}

/// Reduces every marginal and draws `sample_count` independent joint
/// samples by inverse-CDF sampling. One uniform is consumed per key and
/// sample in key order, so the uniforms depend only on the seed and the key
/// set; runs at different reduction levels are coupled draw by draw.
pub fn resample_capacities(config: &ReductionConfig, marginals: &BTreeMap<ScenarioKey, DiscretePmf>) -> Result<CapacitySamples> {
    config.validate()?;
    let mut reduced = Vec::with_capacity(marginals.len());
    for (key, pmf) in marginals {
        let shifted = reduce_pmf(pmf, config.reduction_level, config.max_variability).map_err(|e| match e {
            Error::InfeasibleReduction { target, attainable, .. } => Error::InfeasibleReduction {
                series: format!("{} {} (group {})", key.airport, key.direction, key.group),
                target,
                attainable,
            },
            other => other,
        })?;
        let values = shifted
            .supports()
            .iter()
            .map(|&s| {
                if s >= 0.0 && s.fract() == 0.0 && s <= u32::MAX as f64 {
                    Ok(s as u32)
                } else {
                    Err(Error::Validation(format!("capacity support {s} of {} is not a nonnegative integer", key.airport)))
                }
            })
            .collect::<Result<Vec<u32>>>()?;
        let mut cdf = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for &q in shifted.probs() {
            acc += q;
            cdf.push(acc);
        }
        let last = shifted.probs().iter().rposition(|&q| q > 0.0).unwrap_or(values.len() - 1);
        reduced.push((values, cdf, last));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draws = (0..config.sample_count)
        .map(|_| {
            reduced
                .iter()
                .map(|(values, cdf, last)| {
                    let u: f64 = rng.random();
                    let k = cdf.iter().position(|&c| u < c).unwrap_or(*last);
                    values[k]
                })
                .collect()
        })
        .collect();
    Ok(CapacitySamples {
        keys: marginals.keys().cloned().collect(),
        draws,
    })
}

/// Mean realized cost of a fixed policy over capacity samples.
pub fn out_of_sample(schedule: &Schedule, policy: &GroundHoldingPolicy, samples: &[CapacityTable], costs: &CostConfig) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Validation("out-of-sample evaluation needs at least one sample".into()));
    }
    let totals = samples
        .par_iter()
        .map(|s| evaluate_policy(schedule, policy, s, costs).map(|c| c.total))
        .collect::<Result<Vec<f64>>>()?;
    Ok(totals.iter().sum::<f64>() / totals.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub eps: f64,
    pub phi_sp: f64,
    pub phi_dr: f64,
}

/// One reduction level: the sp cost, the best robust cost and its radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub r: f64,
    pub phi_sp: f64,
    pub phi_dr: f64,
    pub best_eps: f64,
    /// `100 (phi_sp - phi_dr) / phi_sp`, zero when `phi_sp` is zero.
    pub pct_decrease: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

/// Scores fixed sp and robust policies at every reduction level. Samples
/// for all levels share `config.seed`; `config.reduction_level` is ignored.
pub fn sweep_policies(
    schedule: &Schedule,
    costs: &CostConfig,
    groups: &[TimeGroup],
    sp_policy: &GroundHoldingPolicy,
    dr_policies: &[(f64, GroundHoldingPolicy)],
    r_grid: &[f64],
    config: &ReductionConfig,
) -> Result<SweepResult> {
    if r_grid.is_empty() || dr_policies.is_empty() {
        return Err(Error::Validation("sensitivity sweep needs nonempty reduction and radius grids".into()));
    }
    let marginals = group_marginals(groups);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &r in r_grid {
        let cfg = ReductionConfig {
            reduction_level: r,
            ..*config
        };
        let tables = resample_capacities(&cfg, &marginals)?.tables(groups)?;
        let phi_sp = out_of_sample(schedule, sp_policy, &tables, costs)?;
        let mut best: Option<(f64, f64)> = None;
        for (eps, policy) in dr_policies {
            let phi_dr = out_of_sample(schedule, policy, &tables, costs)?;
            rows.push(SweepRow {
                r,
                eps: *eps,
                phi_sp,
                phi_dr,
            });
            if best.is_none_or(|(_, b)| phi_dr < b) {
                best = Some((*eps, phi_dr));
            }
        }
        let (best_eps, phi_dr) = best.expect("nonempty radius grid");
        let pct_decrease = if phi_sp == 0.0 { 0.0 } else { 100.0 * (phi_sp - phi_dr) / phi_sp };
        summary.push(SweepSummary {
            r,
            phi_sp,
            phi_dr,
            best_eps,
            pct_decrease,
        });
    }
    Ok(SweepResult { rows, summary })
}

/// Solves the sp policy once and one robust policy per radius (applied to
/// both sides), then sweeps the reduction grid.
pub fn sensitivity_sweep(
    instance: &MaghpInstance,
    r_grid: &[f64],
    eps_grid: &[f64],
    config: &ReductionConfig,
    solver: &dyn MipSolver,
) -> Result<SweepResult> {
    if eps_grid.is_empty() {
        return Err(Error::Validation("sensitivity sweep needs a nonempty radius grid".into()));
    }
    let (sp_policy, _) = solve(instance, Mode::Sp, solver)?;
    let mut dr_policies = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let (policy, _) = solve(&instance.with_radii(Radii::uniform(eps)), Mode::Dr, solver)?;
        dr_policies.push((eps, policy));
    }
    sweep_policies(&instance.schedule, &instance.costs, &instance.groups, &sp_policy, &dr_policies, r_grid, config)
}

/// One row per `(r, eps)`: `r,eps,phi_sp,phi_dr,best_eps,pct_decrease`,
/// with the last two columns repeating the summary of that `r`.
pub fn write_sweep_csv<W: Write>(w: W, result: &SweepResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "eps", "phi_sp", "phi_dr", "best_eps", "pct_decrease"])?;
    for row in &result.rows {
        let s = result
            .summary
            .iter()
            .find(|s| s.r == row.r)
            .ok_or_else(|| Error::Validation(format!("no summary for reduction level {}", row.r)))?;
        out.write_record([row.r, row.eps, row.phi_sp, row.phi_dr, s.best_eps, s.pct_decrease].map(|v| v.to_string()))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per reduction level: `r,phi_sp,phi_dr,best_eps,pct_decrease`.
pub fn write_summary_csv<W: Write>(w: W, result: &SweepResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "phi_sp", "phi_dr", "best_eps", "pct_decrease"])?;
    for s in &result.summary {
        out.write_record([s.r, s.phi_sp, s.phi_dr, s.best_eps, s.pct_decrease].map(|v| v.to_string()))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Robust cost against radius at one reduction level: `eps,phi_os_dr`.
pub fn write_series_csv<W: Write>(w: W, result: &SweepResult, r: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eps", "phi_os_dr"])?;
    for row in result.rows.iter().filter(|row| row.r == r) {
        out.write_record([row.eps, row.phi_dr].map(|v| v.to_string()))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_reduction_keeps_the_pmf() {
        let p = DiscretePmf::new(vec![1.0, 2.0, 5.0], vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(reduce_pmf(&p, 0.0, 0.5).unwrap(), p);
    }

    #[test]
    fn two_atom_reduction_hits_the_target() {
        let p = DiscretePmf::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        let q = reduce_pmf(&p, 0.25, 1.0).unwrap();
        assert!((q.mean() - 1.5).abs() < 1e-12);
        assert!((q.probs()[0] - 0.75).abs() < 1e-12);
        assert!((q.probs()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tight_box_is_infeasible_and_names_the_attainable_mean() {
        let p = DiscretePmf::new(vec![0.0, 4.0], vec![0.5, 0.5]).unwrap();
        match reduce_pmf(&p, 0.9, 0.01) {
            Err(Error::InfeasibleReduction { target, attainable, .. }) => {
                assert!((target - 0.2).abs() < 1e-12);
                // 0.005 moves from 4 to 0.
                assert!((attainable - 1.98).abs() < 1e-12);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn zero_atoms_stay_zero() {
        let p = DiscretePmf::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        let q = reduce_pmf(&p, 0.2, 0.5).unwrap();
        assert_eq!(q.probs()[0], 0.0);
        assert_eq!(q.probs()[2], 0.0);
        assert!((q.mean() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn mean_of_costs() {
        let mut s = Schedule::from_flights(Vec::new(), crate::schedule::TimeGrid::new(ts(), 2, 15).unwrap(), &Default::default()).unwrap();
        s.warnings.clear();
        let policy = GroundHoldingPolicy::on_schedule(&s).unwrap();
        let phi = out_of_sample(&s, &policy, &[CapacityTable::default()], &CostConfig::default()).unwrap();
        assert_eq!(phi, 0.0);
        assert!(out_of_sample(&s, &policy, &[], &CostConfig::default()).is_err());
    }

    fn ts() -> chrono::NaiveDateTime {
        crate::schedule::parse_timestamp("2024-01-01T00:00").unwrap()
    }
}
