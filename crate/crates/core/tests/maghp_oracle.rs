use gdp_core::maghp::*;
use gdp_core::schedule::Direction;
use gdp_lp::{BranchAndBound, MipOptions};
use gdp_testkit::{enumerate, micro_instance, minimax};

fn solver() -> BranchAndBound {
    BranchAndBound::new(MipOptions {
        gap_tol: 1e-10,
        ..MipOptions::default()
    })
}

fn objective(inst: &MaghpInstance, mode: Mode) -> f64 {
    solve(inst, mode, &solver()).unwrap().1.objective
}

#[test]
fn builders_match_exhaustive_enumeration() {
    for seed in 0..40 {
        let inst = micro_instance(seed);
        let truth = enumerate(&inst);
        let det_caps = CapacityTable::from_scenario(&inst.scenarios, 0, &inst.groups).unwrap();
        let det_model = build_deterministic(&inst.schedule, &inst.costs, &det_caps).unwrap();
        match (solve_model(&det_model, &inst.schedule, &inst.costs, &solver()), truth.det) {
            (Ok((_, r)), Some(v)) => assert!((r.objective - v).abs() < 1e-9, "seed {seed}: det {} vs {v}", r.objective),
            (Err(gdp_core::Error::SolverStatus(gdp_lp::SolveStatus::Infeasible)), None) => {}
            (got, want) => panic!("seed {seed}: det {got:?} vs {want:?}"),
        }
        let sp = objective(&inst, Mode::Sp);
        assert!((sp - truth.sp).abs() < 1e-9, "seed {seed}: sp {sp} vs {}", truth.sp);
        let dr = objective(&inst, Mode::Dr);
        assert!((dr - truth.dr).abs() < 1e-9, "seed {seed}: dr {dr} vs {}", truth.dr);
    }
}

#[test]
fn robust_model_matches_cutting_plane_oracle() {
    for seed in 100..115 {
        let inst = micro_instance(seed);
        let dr = objective(&inst, Mode::Dr);
        let oracle = minimax(&inst, 1e-10, 50);
        assert!((dr - oracle).abs() < 1e-6, "seed {seed}: {dr} vs {oracle}");
    }
}

#[test]
fn zero_radius_robust_equals_stochastic() {
    for seed in 200..220 {
        let inst = micro_instance(seed).with_radii(Radii::uniform(0.0));
        let sp = objective(&inst, Mode::Sp);
        let dr = objective(&inst, Mode::Dr);
        assert!((sp - dr).abs() <= 1e-9 * sp.abs().max(1.0), "seed {seed}: {sp} vs {dr}");
    }
}

#[test]
fn robust_objective_grows_with_each_radius() {
    for seed in 300..315 {
        let base = micro_instance(seed);
        let mut prev = f64::NEG_INFINITY;
        for eps in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let v = objective(&base.with_radii(Radii::uniform(eps)), Mode::Dr);
            assert!(v >= prev - 1e-9, "seed {seed}: eps {eps} gave {v} < {prev}");
            prev = v;
        }
        let a = objective(&base.with_radii(Radii { arrival: 1.0, departure: 0.0 }), Mode::Dr);
        let b = objective(&base.with_radii(Radii { arrival: 1.0, departure: 1.0 }), Mode::Dr);
        assert!(b >= a - 1e-9);
    }
}

#[test]
fn saturated_radius_prices_the_worst_scenario() {
    for seed in 400..420 {
        let inst = micro_instance(seed).with_radii(Radii::uniform(1e6));
        let (policy, report) = solve(&inst, Mode::Dr, &solver()).unwrap();
        // For the chosen policy the worst case is the costliest support point per side.
        let mut worst = 0.0;
        for side in Direction::ALL {
            let support = inst.side_support(side);
            let q = side_scenario_costs(&inst, &policy, &support).unwrap();
            worst += q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        assert!((report.second_stage_cost - worst).abs() < 1e-6, "seed {seed}");
    }
}

#[test]
fn solved_policies_satisfy_first_stage_constraints() {
    for seed in 500..530 {
        let inst = micro_instance(seed);
        for mode in [Mode::Sp, Mode::Dr] {
            let (policy, report) = solve(&inst, mode, &solver()).unwrap();
            assert_eq!(policy.assignments.len(), inst.schedule.flights.len());
            assert!(policy.violated_connection(&inst.schedule).is_none());
            for f in &inst.schedule.flights {
                let a = policy.get(&f.id).unwrap();
                assert!(f.dep_window.contains(a.assigned_dep_period));
                assert!(f.arr_window.contains(a.assigned_arr_period));
            }
            assert!((report.objective - report.first_stage_cost - report.second_stage_cost).abs() < 1e-6);
            let direct = second_stage_value(&inst, &policy, mode).unwrap();
            assert!((direct - report.second_stage_cost).abs() < 1e-6, "seed {seed} {mode:?}");
        }
    }
}

/// Second-stage LP for a fixed assignment, built row by row.
fn queue_lp(inst: &MaghpInstance, policy: &GroundHoldingPolicy, caps: &CapacityTable) -> f64 {
    use gdp_lp::{solve_lp, LinearProgram, Relation, Sense};
    let mut lp = LinearProgram::new(Sense::Minimize);
    let p = inst.schedule.grid.num_periods;
    for side in Direction::ALL {
        let unit = match side {
            Direction::Departure => inst.costs.ground_cost,
            Direction::Arrival => inst.costs.airborne_cost,
        };
        for a in &inst.schedule.airports {
            for t in 0..p {
                let Some(cap) = caps.get(&a.code, side, t) else { continue };
                let load = inst
                    .schedule
                    .flights
                    .iter()
                    .filter(|f| {
                        let asg = policy.get(&f.id).unwrap();
                        match side {
                            Direction::Departure => f.origin == a.code && asg.assigned_dep_period == t,
                            Direction::Arrival => f.destination == a.code && asg.assigned_arr_period == t,
                        }
                    })
                    .count();
                let y = lp.add_var(unit, 0.0, f64::INFINITY);
                lp.add_constraint(vec![(y, 1.0)], Relation::Ge, load as f64 - cap as f64);
            }
        }
    }
    let sol = solve_lp(&lp).unwrap();
    assert!(sol.is_optimal());
    sol.objective
}

#[test]
fn closed_form_evaluation_matches_queue_lp() {
    for seed in 600..640 {
        let inst = micro_instance(seed);
        let (policy, _) = solve(&inst, Mode::Sp, &solver()).unwrap();
        let (delay, penalty) = first_stage_cost(&inst.schedule, &policy, &inst.costs).unwrap();
        for s in 0..inst.scenarios.scenarios.len() {
            let caps = CapacityTable::from_scenario(&inst.scenarios, s, &inst.groups).unwrap();
            let cost = evaluate_policy(&inst.schedule, &policy, &caps, &inst.costs).unwrap();
            let lp = queue_lp(&inst, &policy, &caps);
            assert!((cost.second_stage - lp).abs() < 1e-9, "seed {seed}: {} vs {lp}", cost.second_stage);
            assert!((cost.total - delay - penalty - lp).abs() < 1e-9);
        }
    }
}
