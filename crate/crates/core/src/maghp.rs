//! Multi-airport ground holding models: deterministic, two-stage stochastic
//! and Wasserstein distributionally robust.
//!
//! First-stage columns are binaries `u[f][t]` (departure period) and
//! `v[f][t]` (arrival period) over each flight's windows. The last grid index
//! `P = num_periods` is the overflow period: it carries no capacity limit and
//! each assignment to it on either side costs [`CostConfig::overflow_penalty`].
//! A flight that departs in `P` is also forced to arrive in `P`, and its
//! airborne delay is counted as zero there.
//!
//! Second-stage queues are indexed per side by the distinct projections of
//! the scenario set onto that side's coordinates. The robust model replaces
//! each side's worst-case expectation by its LP dual, so the result is a
//! single MILP.

use std::collections::BTreeMap;

use gdp_lp::{MipProblem, MipSolver, Relation, Sense, Solution, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::distributions::{group_of, worst_case_over_support, ScenarioKey, ScenarioSet, SeriesKey, TimeGroup};
use crate::error::{Error, Result};
use crate::schedule::{CostConfig, Direction, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Det,
    Sp,
    Dr,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Det => "det",
            Mode::Sp => "sp",
            Mode::Dr => "dr",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" => Ok(Mode::Det),
            "sp" => Ok(Mode::Sp),
            "dr" => Ok(Mode::Dr),
            other => Err(Error::Validation(format!("unknown mode '{other}' (expected det, sp or dr)"))),
        }
    }
}

/// Wasserstein radii of the arrival and departure ambiguity sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub arrival: f64,
    pub departure: f64,
}

impl Radii {
    pub fn uniform(eps: f64) -> Self {
        Self {
            arrival: eps,
            departure: eps,
        }
    }

    pub fn get(&self, side: Direction) -> f64 {
        match side {
            Direction::Arrival => self.arrival,
            Direction::Departure => self.departure,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaghpInstance {
    pub schedule: Schedule,
    pub costs: CostConfig,
    pub scenarios: ScenarioSet,
    pub groups: Vec<TimeGroup>,
    pub radii: Radii,
}

impl MaghpInstance {
    pub fn new(schedule: Schedule, costs: CostConfig, scenarios: ScenarioSet, groups: Vec<TimeGroup>, radii: Radii) -> Result<Self> {
        let inst = Self {
            schedule,
            costs,
            scenarios,
            groups,
            radii,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.costs.validate()?;
        self.scenarios.validate()?;
        validate_groups(&self.groups, self.schedule.grid.num_periods)?;
        for k in &self.scenarios.keys {
            if k.group >= self.groups.len() {
                return Err(Error::Validation(format!("scenario key {}/{} references missing group {}", k.airport, k.direction, k.group)));
            }
        }
        if !(self.radii.arrival >= 0.0 && self.radii.departure >= 0.0) {
            return Err(Error::Validation("ambiguity radii must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn with_radii(&self, radii: Radii) -> Self {
        Self { radii, ..self.clone() }
    }

    /// Distinct projections of the scenario set onto one side's coordinates.
    pub fn side_support(&self, side: Direction) -> SideSupport {
        SideSupport::new(&self.scenarios, side)
    }
}

fn validate_groups(groups: &[TimeGroup], num_periods: usize) -> Result<()> {
    let mut next = 0;
    for g in groups {
        if g.first != next || g.last < g.first {
            return Err(Error::Validation(format!("time groups must partition the horizon; group [{}, {}] breaks at {next}", g.first, g.last)));
        }
        next = g.last + 1;
    }
    if next != num_periods {
        return Err(Error::Validation(format!("time groups cover {next} of {num_periods} periods")));
    }
    Ok(())
}

/// Support of one side's ambiguity set: distinct capacity vectors over the
/// side's scenario coordinates with merged probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct SideSupport {
    pub side: Direction,
    /// Indices into [`ScenarioSet::keys`] belonging to this side.
    pub key_idx: Vec<usize>,
    pub points: Vec<Vec<u32>>,
    pub probs: Vec<f64>,
}

impl SideSupport {
    pub fn new(set: &ScenarioSet, side: Direction) -> Self {
        let key_idx: Vec<usize> = (0..set.keys.len()).filter(|&k| set.keys[k].direction == side).collect();
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for s in &set.scenarios {
            let proj: Vec<u32> = key_idx.iter().map(|&k| s.capacities[k]).collect();
            *merged.entry(proj).or_default() += s.prob;
        }
        let (points, probs) = merged.into_iter().unzip();
        Self {
            side,
            key_idx,
            points,
            probs,
        }
    }

    /// Euclidean distances between support points.
    pub fn distances(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|a| {
                self.points
                    .iter()
                    .map(|b| a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect()
    }

    /// Capacity of `airport` in period `t` under support point `j`, or
    /// `None` when that coordinate is unconstrained.
    pub fn capacity(&self, set: &ScenarioSet, groups: &[TimeGroup], j: usize, airport: &str, t: usize) -> Option<u32> {
        let g = group_of(groups, t)?;
        let key = ScenarioKey::new(airport, g, self.side);
        let k = set.key_index(&key)?;
        let pos = self.key_idx.binary_search(&k).ok()?;
        Some(self.points[j][pos])
    }
}

/// Per-period capacities keyed by series. Missing series or periods are
/// unconstrained.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityTable {
    pub per_period: BTreeMap<SeriesKey, Vec<u32>>,
}

impl CapacityTable {
    pub fn get(&self, airport: &str, side: Direction, t: usize) -> Option<u32> {
        self.per_period
            .get(&SeriesKey::new(airport, side))
            .and_then(|v| v.get(t).copied())
    }

    pub fn set(&mut self, airport: &str, side: Direction, caps: Vec<u32>) {
        self.per_period.insert(SeriesKey::new(airport, side), caps);
    }

    /// Expands one joint capacity vector over `keys` to per-period values.
    pub fn from_vector(keys: &[ScenarioKey], values: &[u32], groups: &[TimeGroup]) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(Error::Dimension(format!("{} capacities for {} keys", values.len(), keys.len())));
        }
        let horizon = groups.last().map_or(0, |g| g.last + 1);
        let mut table = CapacityTable::default();
        for (k, &c) in keys.iter().zip(values) {
            let g = groups
                .get(k.group)
                .ok_or_else(|| Error::Validation(format!("key references missing group {}", k.group)))?;
            let series = table
                .per_period
                .entry(SeriesKey::new(k.airport.clone(), k.direction))
                .or_insert_with(|| vec![u32::MAX; horizon]);
            for t in g.first..=g.last {
                series[t] = c;
            }
        }
        Ok(table)
    }

    pub fn from_scenario(set: &ScenarioSet, s: usize, groups: &[TimeGroup]) -> Result<Self> {
        Self::from_vector(&set.keys, &set.scenarios[s].capacities, groups)
    }

    /// Most likely capacity of every group centroid, expanded per period.
    pub fn modal(groups: &[TimeGroup]) -> Self {
        let horizon = groups.last().map_or(0, |g| g.last + 1);
        let mut table = CapacityTable::default();
        for g in groups {
            for (k, pmf) in &g.centroids {
                let series = table
                    .per_period
                    .entry(k.clone())
                    .or_insert_with(|| vec![u32::MAX; horizon]);
                for t in g.first..=g.last {
                    series[t] = pmf.mode().max(0.0) as u32;
                }
            }
        }
        table
    }
}

/// Assigned periods and implied delays of one flight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightAssignment {
    pub assigned_dep_period: usize,
    pub assigned_arr_period: usize,
    pub g_f: usize,
    pub a_f: usize,
}

/// First-stage decisions keyed by flight id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundHoldingPolicy {
    pub assignments: BTreeMap<String, FlightAssignment>,
}

impl GroundHoldingPolicy {
    /// Builds a policy from per-flight periods (parallel to `schedule.flights`),
    /// checking windows, nonnegative delays and tail coupling.
    pub fn from_periods(schedule: &Schedule, deps: &[usize], arrs: &[usize]) -> Result<Self> {
        if deps.len() != schedule.flights.len() || arrs.len() != schedule.flights.len() {
            return Err(Error::Dimension("one departure and one arrival period per flight".into()));
        }
        let overflow = schedule.grid.overflow();
        let mut assignments = BTreeMap::new();
        for (k, f) in schedule.flights.iter().enumerate() {
            let (dep, arr) = (deps[k], arrs[k]);
            if !f.dep_window.contains(dep) || !f.arr_window.contains(arr) {
                return Err(Error::Validation(format!("flight {}: period outside its window", f.id)));
            }
            let g = dep - f.sched_dep;
            let adjust = if dep == overflow { f.duration() } else { 0 };
            let a = arr as i64 - f.sched_arr as i64 - g as i64 + adjust as i64;
            if a < 0 {
                return Err(Error::Validation(format!("flight {}: arrival period {arr} precedes departure {dep} plus flight time", f.id)));
            }
            assignments.insert(
                f.id.clone(),
                FlightAssignment {
                    assigned_dep_period: dep,
                    assigned_arr_period: arr,
                    g_f: g,
                    a_f: a as usize,
                },
            );
        }
        let policy = Self { assignments };
        if let Some(c) = policy.violated_connection(schedule) {
            return Err(Error::Validation(format!(
                "tail coupling violated between {} and {}",
                schedule.flights[c.0].id, schedule.flights[c.1].id
            )));
        }
        Ok(policy)
    }

    /// Assigns every flight its scheduled periods.
    pub fn on_schedule(schedule: &Schedule) -> Result<Self> {
        let deps: Vec<usize> = schedule.flights.iter().map(|f| f.sched_dep).collect();
        let arrs: Vec<usize> = schedule.flights.iter().map(|f| f.sched_arr).collect();
        Self::from_periods(schedule, &deps, &arrs)
    }

    pub fn get(&self, id: &str) -> Option<&FlightAssignment> {
        self.assignments.get(id)
    }

    /// First connection `(pred, succ)` with `g' + a' - s' > a`, if any.
    pub fn violated_connection(&self, schedule: &Schedule) -> Option<(usize, usize)> {
        schedule.connections.iter().find_map(|c| {
            let p = self.assignments.get(&schedule.flights[c.pred].id)?;
            let s = self.assignments.get(&schedule.flights[c.succ].id)?;
            ((s.g_f + s.a_f) as i64 - c.slack as i64 > p.a_f as i64).then_some((c.pred, c.succ))
        })
    }

    fn assignment(&self, id: &str) -> Result<&FlightAssignment> {
        self.assignments
            .get(id)
            .ok_or_else(|| Error::Validation(format!("policy has no assignment for flight {id}")))
    }
}

/// Cost components of a fixed policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyCost {
    /// `Σ C_g g_f + C_a a_f`.
    pub delay_cost: f64,
    pub overflow_penalty: f64,
    pub second_stage: f64,
    pub total: f64,
}

/// Delay cost and overflow penalty of a policy.
pub fn first_stage_cost(schedule: &Schedule, policy: &GroundHoldingPolicy, costs: &CostConfig) -> Result<(f64, f64)> {
    let overflow = schedule.grid.overflow();
    let mut delay = 0.0;
    let mut penalty = 0.0;
    for f in &schedule.flights {
        let a = policy.assignment(&f.id)?;
        delay += costs.ground_cost * a.g_f as f64 + costs.airborne_cost * a.a_f as f64;
        penalty += costs.overflow_penalty()
            * ((a.assigned_dep_period == overflow) as u8 + (a.assigned_arr_period == overflow) as u8) as f64;
    }
    Ok((delay, penalty))
}

/// Flights assigned to each `(airport, period)` on one side, excluding the
/// overflow period.
pub fn side_loads(schedule: &Schedule, policy: &GroundHoldingPolicy, side: Direction) -> Result<BTreeMap<(String, usize), u32>> {
    let overflow = schedule.grid.overflow();
    let mut loads = BTreeMap::new();
    for f in &schedule.flights {
        let a = policy.assignment(&f.id)?;
        let (z, t) = match side {
            Direction::Departure => (&f.origin, a.assigned_dep_period),
            Direction::Arrival => (&f.destination, a.assigned_arr_period),
        };
        if t < overflow {
            *loads.entry((z.clone(), t)).or_insert(0u32) += 1;
        }
    }
    Ok(loads)
}

fn side_unit_cost(costs: &CostConfig, side: Direction) -> f64 {
    match side {
        Direction::Departure => costs.ground_cost,
        Direction::Arrival => costs.airborne_cost,
    }
}

/// Realized queue cost of one side: `Σ C · max(0, load - capacity)`.
fn queue_cost<F: Fn(&str, usize) -> Option<u32>>(loads: &BTreeMap<(String, usize), u32>, unit: f64, cap: F) -> f64 {
    loads
        .iter()
        .map(|((z, t), &load)| match cap(z, *t) {
            Some(c) if load > c => unit * (load - c) as f64,
            _ => 0.0,
        })
        .sum()
}

/// Cost of a fixed policy under realized capacities. With the first stage
/// fixed the queue LP separates by row, so each queue equals the capacity
/// excess at its row.
pub fn evaluate_policy(schedule: &Schedule, policy: &GroundHoldingPolicy, realized: &CapacityTable, costs: &CostConfig) -> Result<PolicyCost> {
    let (delay_cost, overflow_penalty) = first_stage_cost(schedule, policy, costs)?;
    let mut second_stage = 0.0;
    for side in Direction::ALL {
        let loads = side_loads(schedule, policy, side)?;
        second_stage += queue_cost(&loads, side_unit_cost(costs, side), |z, t| realized.get(z, side, t));
    }
    Ok(PolicyCost {
        delay_cost,
        overflow_penalty,
        second_stage,
        total: delay_cost + overflow_penalty + second_stage,
    })
}

/// Per-support-point queue costs `Q_j` of one side for a fixed policy.
pub fn side_scenario_costs(inst: &MaghpInstance, policy: &GroundHoldingPolicy, support: &SideSupport) -> Result<Vec<f64>> {
    let loads = side_loads(&inst.schedule, policy, support.side)?;
    let unit = side_unit_cost(&inst.costs, support.side);
    Ok((0..support.points.len())
        .map(|j| queue_cost(&loads, unit, |z, t| support.capacity(&inst.scenarios, &inst.groups, j, z, t)))
        .collect())
}

/// In-sample second-stage term of a fixed policy: the expectation under the
/// nominal scenarios (`Sp`) or the worst case over each side's ambiguity set
/// (`Dr`). `Det` returns zero.
pub fn second_stage_value(inst: &MaghpInstance, policy: &GroundHoldingPolicy, mode: Mode) -> Result<f64> {
    let mut total = 0.0;
    for side in Direction::ALL {
        let support = inst.side_support(side);
        let q = side_scenario_costs(inst, policy, &support)?;
        total += match mode {
            Mode::Det => 0.0,
            Mode::Sp => support.probs.iter().zip(&q).map(|(p, c)| p * c).sum(),
            Mode::Dr => worst_case_over_support(&support.probs, &support.distances(), &q, inst.radii.get(side))?.value,
        };
    }
    Ok(total)
}

/// Column indices of the first-stage binaries.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstStageColumns {
    /// Per flight, `(period, column)` for each departure period in its window.
    pub u: Vec<Vec<(usize, usize)>>,
    pub v: Vec<Vec<(usize, usize)>>,
}

/// Columns carrying one side's second-stage term.
#[derive(Clone, Debug, PartialEq)]
pub struct SideColumns {
    pub side: Direction,
    pub probs: Vec<f64>,
    /// Per support point: `(column, unit cost)` of each queue variable.
    pub queues: Vec<Vec<(usize, f64)>>,
    /// Robust model only: `α_i` per support point and `λ`.
    pub alpha: Vec<usize>,
    pub lambda: Option<usize>,
    pub radius: f64,
}

/// A built model with the bookkeeping needed to read a policy back.
#[derive(Clone, Debug, PartialEq)]
pub struct MaghpModel {
    pub mode: Mode,
    pub mip: MipProblem,
    pub first_stage: FirstStageColumns,
    pub sides: Vec<SideColumns>,
}

fn add_first_stage(schedule: &Schedule, costs: &CostConfig, mip: &mut MipProblem) -> FirstStageColumns {
    let overflow = schedule.grid.overflow();
    let (cg, ca, big) = (costs.ground_cost, costs.airborne_cost, costs.overflow_penalty());
    let mut cols = FirstStageColumns {
        u: Vec::with_capacity(schedule.flights.len()),
        v: Vec::with_capacity(schedule.flights.len()),
    };
    for f in &schedule.flights {
        let dur = f.duration() as f64;
        // C_g g + C_a a = (C_g - C_a) Σ t u + C_a Σ t v + C_a dur u_P - C_g d - C_a (r - d)
        mip.lp.objective_offset += -cg * f.sched_dep as f64 - ca * dur;
        let u: Vec<(usize, usize)> = f
            .dep_window
            .periods()
            .map(|t| {
                let mut c = (cg - ca) * t as f64;
                if t == overflow {
                    c += ca * dur + big;
                }
                (t, mip.add_named_binary(format!("u_{}_{t}", f.id), c))
            })
            .collect();
        let v: Vec<(usize, usize)> = f
            .arr_window
            .periods()
            .map(|t| {
                let mut c = ca * t as f64;
                if t == overflow {
                    c += big;
                }
                (t, mip.add_named_binary(format!("v_{}_{t}", f.id), c))
            })
            .collect();
        mip.lp
            .add_named_constraint(format!("dep_{}", f.id), u.iter().map(|&(_, j)| (j, 1.0)).collect(), Relation::Eq, 1.0);
        mip.lp
            .add_named_constraint(format!("arr_{}", f.id), v.iter().map(|&(_, j)| (j, 1.0)).collect(), Relation::Eq, 1.0);
        // a_f >= 0
        let mut terms: Vec<(usize, f64)> = v.iter().map(|&(t, j)| (j, t as f64)).collect();
        terms.extend(u.iter().map(|&(t, j)| (j, -(t as f64) + if t == overflow { dur } else { 0.0 })));
        mip.lp
            .add_named_constraint(format!("air_{}", f.id), terms, Relation::Ge, dur);
        cols.u.push(u);
        cols.v.push(v);
    }
    // g_{f'} + a_{f'} - s_{f'} <= a_f, with g + a = Σ t v - r + dur u_P:
    // Σ t v' + dur' u'_P - Σ t v_f + Σ t u_f - dur_f u_{f,P} <= r' + s' - r_f + d_f
    for c in &schedule.connections {
        let (p, s) = (&schedule.flights[c.pred], &schedule.flights[c.succ]);
        let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
        for &(t, j) in &cols.v[c.succ] {
            *terms.entry(j).or_default() += t as f64;
        }
        for &(t, j) in &cols.u[c.succ] {
            if t == overflow {
                *terms.entry(j).or_default() += s.duration() as f64;
            }
        }
        for &(t, j) in &cols.v[c.pred] {
            *terms.entry(j).or_default() -= t as f64;
        }
        for &(t, j) in &cols.u[c.pred] {
            *terms.entry(j).or_default() += t as f64 - if t == overflow { p.duration() as f64 } else { 0.0 };
        }
        let rhs = s.sched_arr as f64 + c.slack as f64 - p.sched_arr as f64 + p.sched_dep as f64;
        mip.lp.add_named_constraint(
            format!("tail_{}_{}", p.id, s.id),
            terms.into_iter().filter(|&(_, a)| a != 0.0).collect(),
            Relation::Le,
            rhs,
        );
    }
    cols
}

/// Load terms `Σ u_{f,t}` (or `Σ v_{f,t}`) per `(airport, period)` below the
/// overflow period.
fn load_terms(schedule: &Schedule, cols: &FirstStageColumns, side: Direction) -> BTreeMap<(String, usize), Vec<usize>> {
    let overflow = schedule.grid.overflow();
    let mut rows: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
    for (k, f) in schedule.flights.iter().enumerate() {
        let (z, list) = match side {
            Direction::Departure => (&f.origin, &cols.u[k]),
            Direction::Arrival => (&f.destination, &cols.v[k]),
        };
        for &(t, j) in list {
            if t < overflow {
                rows.entry((z.clone(), t)).or_default().push(j);
            }
        }
    }
    rows
}

/// Deterministic model with hard capacities.
pub fn build_deterministic(schedule: &Schedule, costs: &CostConfig, capacities: &CapacityTable) -> Result<MaghpModel> {
    schedule.validate()?;
    costs.validate()?;
    let mut mip = MipProblem::new(gdp_lp::LinearProgram::new(Sense::Minimize));
    let cols = add_first_stage(schedule, costs, &mut mip);
    for side in Direction::ALL {
        for ((z, t), terms) in load_terms(schedule, &cols, side) {
            if let Some(cap) = capacities.get(&z, side, t) {
                if terms.len() as u64 > cap as u64 {
                    mip.lp.add_named_constraint(
                        format!("cap_{side}_{z}_{t}"),
                        terms.iter().map(|&j| (j, 1.0)).collect(),
                        Relation::Le,
                        cap as f64,
                    );
                }
            }
        }
    }
    Ok(MaghpModel {
        mode: Mode::Det,
        mip,
        first_stage: cols,
        sides: Vec::new(),
    })
}

/// Adds queue variables and soft capacity rows for every support point of
/// one side. Returns per-point `(column, unit cost)` lists.
fn add_queues(inst: &MaghpInstance, cols: &FirstStageColumns, support: &SideSupport, mip: &mut MipProblem) -> Vec<Vec<(usize, f64)>> {
    let unit = side_unit_cost(&inst.costs, support.side);
    let rows = load_terms(&inst.schedule, cols, support.side);
    (0..support.points.len())
        .map(|j| {
            let mut queues = Vec::new();
            for ((z, t), terms) in &rows {
                let Some(cap) = support.capacity(&inst.scenarios, &inst.groups, j, z, *t) else {
                    continue;
                };
                if terms.len() as u64 <= cap as u64 {
                    continue;
                }
                let y = mip
                    .lp
                    .add_named_var(format!("y_{}_{j}_{z}_{t}", support.side), 0.0, 0.0, f64::INFINITY);
                let mut row: Vec<(usize, f64)> = terms.iter().map(|&c| (c, 1.0)).collect();
                row.push((y, -1.0));
                mip.lp
                    .add_named_constraint(format!("q_{}_{j}_{z}_{t}", support.side), row, Relation::Le, cap as f64);
                queues.push((y, unit));
            }
            queues
        })
        .collect()
}

/// Two-stage stochastic model (extensive form).
pub fn build_sp(inst: &MaghpInstance) -> Result<MaghpModel> {
    inst.validate()?;
    let mut mip = MipProblem::new(gdp_lp::LinearProgram::new(Sense::Minimize));
    let cols = add_first_stage(&inst.schedule, &inst.costs, &mut mip);
    let mut sides = Vec::new();
    for side in Direction::ALL {
        let support = inst.side_support(side);
        let queues = add_queues(inst, &cols, &support, &mut mip);
        for (j, list) in queues.iter().enumerate() {
            for &(y, c) in list {
                mip.lp.objective[y] = support.probs[j] * c;
            }
        }
        sides.push(SideColumns {
            side,
            probs: support.probs,
            queues,
            alpha: Vec::new(),
            lambda: None,
            radius: 0.0,
        });
    }
    Ok(MaghpModel {
        mode: Mode::Sp,
        mip,
        first_stage: cols,
        sides,
    })
}

/// Distributionally robust model: each side's worst-case expectation is
/// replaced by `min Σ p_i α_i + ε λ` s.t. `α_i + λ d_ij ≥ Q_j`, `λ ≥ 0`.
pub fn build_dr(inst: &MaghpInstance) -> Result<MaghpModel> {
    inst.validate()?;
    let mut mip = MipProblem::new(gdp_lp::LinearProgram::new(Sense::Minimize));
    let cols = add_first_stage(&inst.schedule, &inst.costs, &mut mip);
    let mut sides = Vec::new();
    for side in Direction::ALL {
        let support = inst.side_support(side);
        let radius = inst.radii.get(side);
        let queues = add_queues(inst, &cols, &support, &mut mip);
        let alpha: Vec<usize> = support
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| mip.lp.add_named_var(format!("alpha_{side}_{i}"), p, f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        let lambda = mip.lp.add_named_var(format!("lambda_{side}"), radius, 0.0, f64::INFINITY);
        let d = support.distances();
        for i in 0..alpha.len() {
            for (j, list) in queues.iter().enumerate() {
                let mut row = vec![(alpha[i], 1.0)];
                if d[i][j] != 0.0 {
                    row.push((lambda, d[i][j]));
                }
                row.extend(list.iter().map(|&(y, c)| (y, -c)));
                mip.lp
                    .add_named_constraint(format!("dual_{side}_{i}_{j}"), row, Relation::Ge, 0.0);
            }
        }
        sides.push(SideColumns {
            side,
            probs: support.probs,
            queues,
            alpha,
            lambda: Some(lambda),
            radius,
        });
    }
    Ok(MaghpModel {
        mode: Mode::Dr,
        mip,
        first_stage: cols,
        sides,
    })
}

/// Builds the model for `mode`. `Det` plans against the modal group capacities.
pub fn build_model(inst: &MaghpInstance, mode: Mode) -> Result<MaghpModel> {
    match mode {
        Mode::Det => build_deterministic(&inst.schedule, &inst.costs, &CapacityTable::modal(&inst.groups)),
        Mode::Sp => build_sp(inst),
        Mode::Dr => build_dr(inst),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub status: String,
    pub objective: f64,
    pub delay_cost: f64,
    pub overflow_penalty: f64,
    /// `delay_cost + overflow_penalty`.
    pub first_stage_cost: f64,
    /// Expected (`sp`) or worst-case (`dr`) queue cost; zero for `det`.
    pub second_stage_cost: f64,
    pub second_stage_by_side: BTreeMap<Direction, f64>,
    pub radii: Option<Radii>,
    pub mip_gap: f64,
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub num_variables: usize,
    pub num_constraints: usize,
    pub num_binaries: usize,
    pub flights_delayed_pct: BTreeMap<String, f64>,
}

/// Solves a built model and reads back the policy. A non-optimal status is
/// reported as [`Error::SolverStatus`].
pub fn solve_model(model: &MaghpModel, schedule: &Schedule, costs: &CostConfig, solver: &dyn MipSolver) -> Result<(GroundHoldingPolicy, SolveReport)> {
    let sol = solver.solve(&model.mip)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::SolverStatus(sol.status));
    }
    let policy = extract_policy(model, schedule, &sol)?;
    let (delay_cost, overflow_penalty) = first_stage_cost(schedule, &policy, costs)?;
    let mut by_side = BTreeMap::new();
    for s in &model.sides {
        let value = match s.lambda {
            Some(l) => {
                s.probs.iter().zip(&s.alpha).map(|(p, &a)| p * sol.x[a]).sum::<f64>() + s.radius * sol.x[l]
            }
            None => s
                .queues
                .iter()
                .zip(&s.probs)
                .map(|(list, p)| p * list.iter().map(|&(y, c)| c * sol.x[y]).sum::<f64>())
                .sum(),
        };
        by_side.insert(s.side, value);
    }
    let second: f64 = by_side.values().sum();
    let radii = model.sides.iter().find(|s| s.lambda.is_some()).map(|_| Radii {
        arrival: model.sides.iter().find(|s| s.side == Direction::Arrival).map_or(0.0, |s| s.radius),
        departure: model.sides.iter().find(|s| s.side == Direction::Departure).map_or(0.0, |s| s.radius),
    });
    let report = SolveReport {
        mode: model.mode,
        status: sol.status.to_string(),
        objective: sol.objective,
        delay_cost,
        overflow_penalty,
        first_stage_cost: delay_cost + overflow_penalty,
        second_stage_cost: second,
        second_stage_by_side: by_side,
        radii,
        mip_gap: sol.gap(),
        bound: sol.bound,
        nodes: sol.nodes,
        lp_iterations: sol.iterations,
        num_variables: model.mip.lp.num_vars(),
        num_constraints: model.mip.lp.num_constraints(),
        num_binaries: model.mip.binary_vars.len(),
        flights_delayed_pct: delayed_by_origin(schedule, &policy),
    };
    Ok((policy, report))
}

/// Builds and solves `mode` on `inst`.
pub fn solve(inst: &MaghpInstance, mode: Mode, solver: &dyn MipSolver) -> Result<(GroundHoldingPolicy, SolveReport)> {
    let model = build_model(inst, mode)?;
    solve_model(&model, &inst.schedule, &inst.costs, solver)
}

fn pick(cols: &[(usize, usize)], x: &[f64]) -> Option<usize> {
    cols.iter().find(|&&(_, j)| x[j] > 0.5).map(|&(t, _)| t)
}

fn extract_policy(model: &MaghpModel, schedule: &Schedule, sol: &Solution) -> Result<GroundHoldingPolicy> {
    let mut deps = Vec::with_capacity(schedule.flights.len());
    let mut arrs = Vec::with_capacity(schedule.flights.len());
    for (k, f) in schedule.flights.iter().enumerate() {
        let (Some(d), Some(a)) = (pick(&model.first_stage.u[k], &sol.x), pick(&model.first_stage.v[k], &sol.x)) else {
            return Err(Error::Validation(format!("solution assigns no period to flight {}", f.id)));
        };
        deps.push(d);
        arrs.push(a);
    }
    GroundHoldingPolicy::from_periods(schedule, &deps, &arrs)
}

fn is_delayed(a: &FlightAssignment) -> bool {
    a.g_f + a.a_f > 0
}

fn delayed_by_origin(schedule: &Schedule, policy: &GroundHoldingPolicy) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for f in &schedule.flights {
        let e = counts.entry(f.origin.clone()).or_default();
        e.0 += 1;
        if policy.get(&f.id).is_some_and(is_delayed) {
            e.1 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(z, (n, d))| (z, 100.0 * d as f64 / n as f64))
        .collect()
}

/// Share of delayed flights on one directed airport pair under two policies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDelay {
    pub origin: String,
    pub destination: String,
    pub flights: usize,
    pub pct_delayed_a: f64,
    pub pct_delayed_b: f64,
    /// `pct_delayed_b - pct_delayed_a`.
    pub delta_pct: f64,
}

/// Per-edge delayed-flight percentages of two policies over the same
/// schedule. Edges without flights do not appear.
pub fn delay_flow_report(policy_a: &GroundHoldingPolicy, policy_b: &GroundHoldingPolicy, schedule: &Schedule) -> Result<Vec<EdgeDelay>> {
    let mut edges: BTreeMap<(String, String), (usize, usize, usize)> = BTreeMap::new();
    for f in &schedule.flights {
        let e = edges.entry((f.origin.clone(), f.destination.clone())).or_default();
        e.0 += 1;
        e.1 += is_delayed(policy_a.assignment(&f.id)?) as usize;
        e.2 += is_delayed(policy_b.assignment(&f.id)?) as usize;
    }
    Ok(edges
        .into_iter()
        .map(|((origin, destination), (n, a, b))| {
            let pa = 100.0 * a as f64 / n as f64;
            let pb = 100.0 * b as f64 / n as f64;
            EdgeDelay {
                origin,
                destination,
                flights: n,
                pct_delayed_a: pa,
                pct_delayed_b: pb,
                delta_pct: pb - pa,
            }
        })
        .collect())
}
