//! Test oracles that share no model-building code with `gdp-core::maghp`.
//!
//! [`enumerate`] scores every feasible assignment directly from the delay
//! definitions; [`minimax`] solves the robust model by alternating a master
//! MILP with the primal worst-case LP until the two bounds meet.

use std::collections::BTreeMap;

use gdp_core::distributions::{worst_case_over_support, Provenance, Scenario, ScenarioKey, ScenarioSet, TimeGroup};
use gdp_core::maghp::{MaghpInstance, Radii};
use gdp_core::schedule::{CostConfig, Direction, Flight, PeriodWindow, Schedule, ScheduleOptions, TimeGrid};
use gdp_lp::{solve_mip_with, LinearProgram, MipOptions, MipProblem, Relation, Sense, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Periods of one feasible assignment of every flight.
pub type Assignment = Vec<(usize, usize)>;

/// Optimal objectives found by exhaustive search; `None` when infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumerated {
    pub det: Option<f64>,
    pub sp: f64,
    pub dr: f64,
}

fn overflow(s: &Schedule) -> usize {
    s.grid.num_periods
}

/// Ground delay, airborne delay and overflow count of one flight, or `None`
/// when the arrival is infeasible.
fn flight_delays(f: &Flight, dep: usize, arr: usize, p: usize) -> Option<(i64, i64, u32)> {
    let g = dep as i64 - f.sched_dep as i64;
    let mut a = arr as i64 - f.sched_arr as i64 - g;
    if dep == p {
        a += (f.sched_arr - f.sched_dep) as i64;
    }
    (a >= 0).then_some((g, a, (dep == p) as u32 + (arr == p) as u32))
}

/// Every assignment satisfying windows, `a_f >= 0` and tail coupling.
pub fn feasible_assignments(s: &Schedule) -> Vec<Assignment> {
    let p = overflow(s);
    let per_flight: Vec<Vec<(usize, usize)>> = s
        .flights
        .iter()
        .map(|f| {
            f.dep_window
                .periods()
                .flat_map(|d| f.arr_window.periods().map(move |a| (d, a)))
                .filter(|&(d, a)| flight_delays(f, d, a, p).is_some())
                .collect()
        })
        .collect();
    let mut out: Vec<Assignment> = vec![Vec::new()];
    for opts in &per_flight {
        out = out
            .iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out.retain(|asg| {
        s.connections.iter().all(|c| {
            let (pf, sf) = (&s.flights[c.pred], &s.flights[c.succ]);
            let (_, ap, _) = flight_delays(pf, asg[c.pred].0, asg[c.pred].1, p).unwrap();
            let (gs, as_, _) = flight_delays(sf, asg[c.succ].0, asg[c.succ].1, p).unwrap();
            gs + as_ - c.slack as i64 <= ap
        })
    });
    out
}

pub fn first_stage(s: &Schedule, costs: &CostConfig, asg: &Assignment) -> f64 {
    let p = overflow(s);
    s.flights
        .iter()
        .zip(asg)
        .map(|(f, &(d, a))| {
            let (g, air, over) = flight_delays(f, d, a, p).unwrap();
            costs.ground_cost * g as f64 + costs.airborne_cost * air as f64 + 1000.0 * costs.airborne_cost * over as f64
        })
        .sum()
}

/// Flights per `(airport, period)` on one side, overflow excluded.
pub fn loads(s: &Schedule, asg: &Assignment, side: Direction) -> BTreeMap<(String, usize), u32> {
    let mut m = BTreeMap::new();
    for (f, &(d, a)) in s.flights.iter().zip(asg) {
        let (z, t) = match side {
            Direction::Departure => (f.origin.clone(), d),
            Direction::Arrival => (f.destination.clone(), a),
        };
        if t < overflow(s) {
            *m.entry((z, t)).or_insert(0) += 1;
        }
    }
    m
}

fn capacity_of(set: &ScenarioSet, caps: &[u32], groups: &[TimeGroup], z: &str, t: usize, side: Direction) -> Option<u32> {
    let g = groups.iter().position(|g| g.first <= t && t <= g.last)?;
    let k = set.keys.iter().position(|k| k.airport == z && k.group == g && k.direction == side)?;
    Some(caps[k])
}

/// Distinct side projections with merged probabilities, in the order of
/// their capacity vectors.
fn side_points(set: &ScenarioSet, side: Direction) -> (Vec<usize>, Vec<Vec<u32>>, Vec<f64>) {
    let idx: Vec<usize> = (0..set.keys.len()).filter(|&k| set.keys[k].direction == side).collect();
    let mut m: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for sc in &set.scenarios {
        *m.entry(idx.iter().map(|&k| sc.capacities[k]).collect()).or_default() += sc.prob;
    }
    let (pts, probs) = m.into_iter().unzip();
    (idx, pts, probs)
}

fn euclid(points: &[Vec<u32>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

/// Queue cost of one side for each distinct projected capacity vector.
fn side_costs(inst: &MaghpInstance, asg: &Assignment, side: Direction, idx: &[usize], points: &[Vec<u32>]) -> Vec<f64> {
    let unit = match side {
        Direction::Departure => inst.costs.ground_cost,
        Direction::Arrival => inst.costs.airborne_cost,
    };
    let l = loads(&inst.schedule, asg, side);
    points
        .iter()
        .map(|pt| {
            let mut full = vec![0u32; inst.scenarios.keys.len()];
            for (pos, &k) in idx.iter().enumerate() {
                full[k] = pt[pos];
            }
            l.iter()
                .map(|((z, t), &n)| match capacity_of(&inst.scenarios, &full, &inst.groups, z, *t, side) {
                    Some(c) if n > c => unit * (n - c) as f64,
                    _ => 0.0,
                })
                .sum()
        })
        .collect()
}

/// Exhaustive optimum of the three models. The deterministic model uses the
/// capacities of scenario 0 as hard limits.
pub fn enumerate(inst: &MaghpInstance) -> Enumerated {
    let s = &inst.schedule;
    let mut det: Option<f64> = None;
    let mut sp = f64::INFINITY;
    let mut dr = f64::INFINITY;
    let sides: Vec<_> = Direction::ALL.iter().map(|&d| (d, side_points(&inst.scenarios, d))).collect();
    let det_caps = &inst.scenarios.scenarios[0].capacities;
    for asg in feasible_assignments(s) {
        let fs = first_stage(s, &inst.costs, &asg);
        let hard_ok = Direction::ALL.iter().all(|&side| {
            loads(s, &asg, side)
                .iter()
                .all(|((z, t), &n)| capacity_of(&inst.scenarios, det_caps, &inst.groups, z, *t, side).is_none_or(|c| n <= c))
        });
        if hard_ok {
            det = Some(det.map_or(fs, |d| d.min(fs)));
        }
        let mut e = fs;
        let mut w = fs;
        for (side, (idx, pts, probs)) in &sides {
            let q = side_costs(inst, &asg, *side, idx, pts);
            e += probs.iter().zip(&q).map(|(p, c)| p * c).sum::<f64>();
            w += worst_case_over_support(probs, &euclid(pts), &q, inst.radii.get(*side)).unwrap().value;
        }
        sp = sp.min(e);
        dr = dr.min(w);
    }
    Enumerated { det, sp, dr }
}

/// Robust optimum by cutting planes: the master minimizes first-stage cost
/// plus `θ_g + θ_a`, each bounded below by the expectation under every
/// worst-case distribution found so far; the primal worst-case LP supplies
/// the next distribution. Stops when the bounds meet within `tol`.
pub fn minimax(inst: &MaghpInstance, tol: f64, max_rounds: usize) -> f64 {
    let s = &inst.schedule;
    let p = overflow(s);
    let costs = &inst.costs;
    let mut mip = MipProblem::new(LinearProgram::new(Sense::Minimize));
    let mut u = Vec::new();
    let mut v = Vec::new();
    for f in &s.flights {
        let dur = (f.sched_arr - f.sched_dep) as f64;
        let uf: Vec<(usize, usize)> = f.dep_window.periods().map(|t| (t, mip.add_binary(0.0))).collect();
        let vf: Vec<(usize, usize)> = f.arr_window.periods().map(|t| (t, mip.add_binary(0.0))).collect();
        // Explicit integer delay columns keep this formulation independent.
        let g = mip.add_integer(costs.ground_cost, 0.0, 1000.0);
        let a = mip.add_integer(costs.airborne_cost, 0.0, 1000.0);
        let mut gt = vec![(g, 1.0)];
        gt.extend(uf.iter().map(|&(t, j)| (j, -(t as f64))));
        mip.lp.add_constraint(gt, Relation::Eq, -(f.sched_dep as f64));
        let mut at = vec![(a, 1.0), (g, 1.0)];
        at.extend(vf.iter().map(|&(t, j)| (j, -(t as f64))));
        at.extend(uf.iter().filter(|&&(t, _)| t == p).map(|&(_, j)| (j, -dur)));
        mip.lp.add_constraint(at, Relation::Eq, -(f.sched_arr as f64));
        for &(t, j) in uf.iter().chain(&vf) {
            if t == p {
                mip.lp.objective[j] += 1000.0 * costs.airborne_cost;
            }
        }
        mip.lp.add_constraint(uf.iter().map(|&(_, j)| (j, 1.0)).collect(), Relation::Eq, 1.0);
        mip.lp.add_constraint(vf.iter().map(|&(_, j)| (j, 1.0)).collect(), Relation::Eq, 1.0);
        u.push((uf, g, a));
        v.push(vf);
    }
    for c in &s.connections {
        let (_, _, ap) = u[c.pred];
        let (_, gs, as_) = u[c.succ];
        mip.lp
            .add_constraint(vec![(gs, 1.0), (as_, 1.0), (ap, -1.0)], Relation::Le, c.slack as f64);
    }
    // Queue columns per side and distinct capacity vector.
    let mut theta = Vec::new();
    let mut side_data = Vec::new();
    for side in Direction::ALL {
        let (idx, pts, probs) = side_points(&inst.scenarios, side);
        let unit = match side {
            Direction::Departure => costs.ground_cost,
            Direction::Arrival => costs.airborne_cost,
        };
        let mut q_terms: Vec<Vec<(usize, f64)>> = Vec::new();
        for pt in &pts {
            let mut full = vec![0u32; inst.scenarios.keys.len()];
            for (pos, &k) in idx.iter().enumerate() {
                full[k] = pt[pos];
            }
            let mut rows: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
            for (k, f) in s.flights.iter().enumerate() {
                let (z, list) = match side {
                    Direction::Departure => (&f.origin, &u[k].0),
                    Direction::Arrival => (&f.destination, &v[k]),
                };
                for &(t, j) in list {
                    if t < p {
                        rows.entry((z.clone(), t)).or_default().push(j);
                    }
                }
            }
            let mut terms = Vec::new();
            for ((z, t), cols) in rows {
                if let Some(cap) = capacity_of(&inst.scenarios, &full, &inst.groups, &z, t, side) {
                    let y = mip.lp.add_var(0.0, 0.0, f64::INFINITY);
                    let mut row: Vec<(usize, f64)> = cols.iter().map(|&j| (j, 1.0)).collect();
                    row.push((y, -1.0));
                    mip.lp.add_constraint(row, Relation::Le, cap as f64);
                    terms.push((y, unit));
                }
            }
            q_terms.push(terms);
        }
        theta.push(mip.lp.add_var(1.0, 0.0, f64::INFINITY));
        side_data.push((side, pts, probs, q_terms));
    }
    let opts = MipOptions {
        gap_tol: 1e-10,
        ..MipOptions::default()
    };
    // Start from the nominal distribution on each side.
    let mut cuts: Vec<Vec<f64>> = side_data.iter().map(|(_, _, probs, _)| probs.clone()).collect();
    for (k, (_, _, _, q_terms)) in side_data.iter().enumerate() {
        add_cut(&mut mip, theta[k], &cuts[k], q_terms);
    }
    for _ in 0..max_rounds {
        let sol = solve_mip_with(&mip, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "master problem not optimal");
        let lower = sol.objective;
        let mut upper = sol.objective - theta.iter().map(|&t| sol.x[t]).sum::<f64>();
        for (k, (side, pts, probs, q_terms)) in side_data.iter().enumerate() {
            let q: Vec<f64> = q_terms
                .iter()
                .map(|terms| terms.iter().map(|&(y, c)| c * sol.x[y]).sum())
                .collect();
            let wc = worst_case_over_support(probs, &euclid(pts), &q, inst.radii.get(*side)).unwrap();
            upper += wc.value;
            cuts[k] = wc.marginal.iter().map(|m| m.max(0.0)).collect();
            add_cut(&mut mip, theta[k], &cuts[k], q_terms);
        }
        if upper - lower <= tol * upper.abs().max(1.0) {
            return upper;
        }
    }
    panic!("minimax oracle did not converge in {max_rounds} rounds");
}

fn add_cut(mip: &mut MipProblem, theta: usize, weights: &[f64], q_terms: &[Vec<(usize, f64)>]) {
    let mut row = vec![(theta, 1.0)];
    for (w, terms) in weights.iter().zip(q_terms) {
        if *w > 0.0 {
            row.extend(terms.iter().map(|&(y, c)| (y, -w * c)));
        }
    }
    mip.lp.add_constraint(row, Relation::Ge, 0.0);
}

/// Seeded micro-instance: at most 3 flights between 2 airports over at most
/// 4 periods, with at most 2 scenarios.
pub fn micro_instance(seed: u64) -> MaghpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periods = rng.random_range(3..=4usize);
    let airports = ["AAA", "BBB"];
    let n_flights = rng.random_range(1..=3usize);
    let grid = TimeGrid::new(gdp_core::schedule::parse_timestamp("2020-01-01T06:00").unwrap(), periods, 15).unwrap();
    let tail = rng.random_bool(0.5);
    let mut flights = Vec::new();
    let mut next_origin = rng.random_range(0..2usize);
    let mut earliest = 0usize;
    for k in 0..n_flights {
        // Scheduled arrivals stay inside the horizon so the overflow period
        // is reached only through delay.
        if earliest + 1 >= periods {
            break;
        }
        let o = next_origin;
        let dep = rng.random_range(earliest..periods - 1);
        let arr = rng.random_range(dep + 1..=(dep + 2).min(periods - 1));
        flights.push(Flight {
            id: format!("F{k}"),
            origin: airports[o].into(),
            destination: airports[1 - o].into(),
            sched_dep: dep,
            sched_arr: arr,
            tail: tail.then(|| "T1".to_string()),
            dep_window: PeriodWindow::new(dep, dep),
            arr_window: PeriodWindow::new(arr, arr),
        });
        if tail {
            next_origin = 1 - o;
            earliest = arr;
        } else {
            next_origin = rng.random_range(0..2usize);
        }
    }
    let opts = ScheduleOptions {
        max_ground_delay: rng.random_range(0..=2),
        max_airborne_delay: rng.random_range(0..=1),
        min_turnaround: rng.random_range(0..=1),
    };
    let schedule = Schedule::from_flights(flights, grid, &opts).unwrap();
    let split = rng.random_bool(0.5);
    let groups = if split {
        let mid = periods / 2;
        vec![group(0, mid - 1), group(mid, periods - 1)]
    } else {
        vec![group(0, periods - 1)]
    };
    let mut keys = Vec::new();
    for z in airports {
        for (g, _) in groups.iter().enumerate() {
            for d in Direction::ALL {
                if rng.random_bool(0.7) {
                    keys.push(ScenarioKey::new(z, g, d));
                }
            }
        }
    }
    keys.sort();
    let n_scen = rng.random_range(1..=2usize);
    let p0 = if n_scen == 1 { 1.0 } else { [0.25, 0.5, 0.75][rng.random_range(0..3)] };
    let scenarios = (0..n_scen)
        .map(|k| Scenario {
            capacities: keys.iter().map(|_| rng.random_range(0..=2)).collect(),
            prob: if k == 0 { p0 } else { 1.0 - p0 },
        })
        .collect();
    let set = ScenarioSet::new(keys, scenarios, Provenance::Enumerated).unwrap();
    let costs = CostConfig::new(1.0, [1.0, 2.0, 3.0][rng.random_range(0..3)]).unwrap();
    let radii = Radii {
        arrival: [0.0, 0.3, 1.0, 5.0][rng.random_range(0..4)],
        departure: [0.0, 0.3, 1.0, 5.0][rng.random_range(0..4)],
    };
    MaghpInstance::new(schedule, costs, set, groups, radii).unwrap()
}

fn group(first: usize, last: usize) -> TimeGroup {
    TimeGroup {
        first,
        last,
        centroids: BTreeMap::new(),
    }
}

/// Solves the mean-reduction LP directly: minimize `Σ p ξ` over the
/// `δ`-box around `p̂` with `Σ p = 1`, optionally subject to `Σ p ξ >= target`.
/// Returns the optimal mean and point, or `None` when the box is empty.
pub fn reduction_lp(supports: &[f64], probs: &[f64], target: Option<f64>, delta: f64) -> Option<(f64, Vec<f64>)> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let cols: Vec<usize> = supports
        .iter()
        .zip(probs)
        .map(|(&x, &p)| lp.add_var(x, (p - delta * p).max(0.0), p + delta * p))
        .collect();
    lp.add_constraint(cols.iter().map(|&c| (c, 1.0)).collect(), Relation::Eq, 1.0);
    if let Some(t) = target {
        lp.add_constraint(cols.iter().zip(supports).map(|(&c, &x)| (c, x)).collect(), Relation::Ge, t);
    }
    let sol = gdp_lp::solve_lp(&lp).expect("well-formed reduction LP");
    match sol.status {
        SolveStatus::Optimal => Some((sol.objective, sol.x)),
        SolveStatus::Infeasible => None,
        other => panic!("reduction LP ended with {other}"),
    }
}
