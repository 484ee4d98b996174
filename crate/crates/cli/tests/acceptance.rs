//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! measured runtime and exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gdp_core::distributions::{wasserstein_1d, wasserstein_lp, worst_case_dual, worst_case_over_support, DiscretePmf};
use gdp_core::maghp::{build_deterministic, solve, solve_model, CapacityTable, MaghpInstance, Mode};
use gdp_core::predictor::{encode_one_hot, predict, train, Hyper, MlpModel};
use gdp_core::sensitivity::reduce_pmf;
use gdp_lp::{BranchAndBound, MipOptions};
use gdp_testkit::{enumerate, micro_instance, reduction_lp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pipeline.json")
}

fn drgdp(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_drgdp"))
        .arg("--config")
        .arg(fixture())
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("drgdp {} exited with {status}", args.join(" ")))
    }
}

fn prepare(out: &Path) -> Result<(), String> {
    for cmd in ["synth", "estimate", "train", "predict"] {
        drgdp(out, &[cmd])?;
    }
    Ok(())
}

fn read_objective(path: &Path) -> Result<f64, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v["objective"].as_f64().ok_or_else(|| format!("{}: no objective", path.display()))
}

fn read_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    rdr.deserialize().collect::<Result<_, _>>().map_err(|e| e.to_string())
}

fn num(row: &BTreeMap<String, String>, col: &str) -> Result<f64, String> {
    row.get(col).ok_or_else(|| format!("missing column {col}"))?.parse().map_err(|e| format!("{col}: {e}"))
}

fn in_sample_equivalence(dir: &Path) -> Outcome {
    prepare(dir)?;
    drgdp(dir, &["solve", "--mode", "sp"])?;
    drgdp(dir, &["solve", "--mode", "dr", "--eps", "0"])?;
    let sp = read_objective(&dir.join("solve/sp/report.json"))?;
    let dr = read_objective(&dir.join("solve/dr/report.json"))?;
    let rel = (sp - dr).abs() / sp.abs().max(1e-12);
    if rel <= 1e-6 {
        Ok(format!("sp {sp:.9} dr(0) {dr:.9} rel {rel:.2e}"))
    } else {
        Err(format!("sp {sp} dr(0) {dr} rel {rel:.2e}"))
    }
}

fn conservatism(dir: &Path) -> Outcome {
    drgdp(dir, &["solve", "--mode", "dr"])?;
    let rows = read_rows(&dir.join("solve/dr/radii_series.csv"))?;
    let eps: Vec<f64> = rows.iter().map(|r| num(r, "eps")).collect::<Result<_, _>>()?;
    if eps != [0.0, 0.05, 0.1, 0.25, 0.5] {
        return Err(format!("unexpected radius grid {eps:?}"));
    }
    let obj: Vec<f64> = rows.iter().map(|r| num(r, "in_sample_objective")).collect::<Result<_, _>>()?;
    match obj.windows(2).position(|w| w[1] < w[0] - 1e-9) {
        None => Ok(format!("objectives {obj:.4?}")),
        Some(k) => Err(format!("decrease between eps {} and {}: {obj:?}", eps[k], eps[k + 1])),
    }
}

fn random_pmf(rng: &mut ChaCha8Rng, max_atoms: usize, span: u32) -> DiscretePmf {
    let k = rng.random_range(1..=max_atoms);
    DiscretePmf::from_weights((0..k).map(|_| (rng.random_range(0..span) as f64, rng.random_range(0.01..1.0)))).unwrap()
}

fn wasserstein_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_pmf(&mut rng, 8, 25);
        let q = random_pmf(&mut rng, 8, 25);
        let lp = wasserstein_lp(&p, &q).map_err(|e| e.to_string())?;
        worst = worst.max((wasserstein_1d(&p, &q) - lp).abs());
    }
    if worst <= 1e-9 {
        Ok(format!("max deviation {worst:.2e} over 100 pairs"))
    } else {
        Err(format!("max deviation {worst:.2e}"))
    }
}

fn strong_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4048);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let dim = rng.random_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0..10) as f64).collect()).collect();
        let d: Vec<Vec<f64>> = points
            .iter()
            .map(|a| points.iter().map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()).collect())
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let eps = rng.random_range(0.0..4.0);
        let primal = worst_case_over_support(&p, &d, &q, eps).map_err(|e| e.to_string())?;
        let dual = worst_case_dual(&p, &d, &q, eps).map_err(|e| e.to_string())?;
        worst = worst.max((primal.value - dual).abs());
    }
    if worst <= 1e-6 {
        Ok(format!("max gap {worst:.2e} over 50 triples"))
    } else {
        Err(format!("max gap {worst:.2e}"))
    }
}

fn brute_force() -> Outcome {
    let solver = BranchAndBound::new(MipOptions {
        gap_tol: 1e-10,
        ..MipOptions::default()
    });
    let objective = |inst: &MaghpInstance, mode: Mode| solve(inst, mode, &solver).map(|(_, r)| r.objective).map_err(|e| e.to_string());
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let inst = micro_instance(seed);
        let truth = enumerate(&inst);
        let caps = CapacityTable::from_scenario(&inst.scenarios, 0, &inst.groups).map_err(|e| e.to_string())?;
        let model = build_deterministic(&inst.schedule, &inst.costs, &caps).map_err(|e| e.to_string())?;
        match (solve_model(&model, &inst.schedule, &inst.costs, &solver), truth.det) {
            (Ok((_, r)), Some(v)) => worst = worst.max((r.objective - v).abs()),
            (Err(gdp_core::Error::SolverStatus(gdp_lp::SolveStatus::Infeasible)), None) => {}
            (got, want) => return Err(format!("seed {seed}: det {:?} vs {want:?}", got.map(|(_, r)| r.objective))),
        }
        worst = worst.max((objective(&inst, Mode::Sp)? - truth.sp).abs());
        worst = worst.max((objective(&inst, Mode::Dr)? - truth.dr).abs());
    }
    if worst <= 1e-9 {
        Ok(format!("max deviation {worst:.2e} over 20 instances x 3 modes"))
    } else {
        Err(format!("max deviation {worst:.2e}"))
    }
}

fn reduction_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let deltas = [0.05, 0.3, 1.0, 5.0];
    let (mut feasible, mut infeasible) = (0, 0);
    for k in 0..20 {
        let pmf = random_pmf(&mut rng, 6, 12);
        let delta = deltas[k % deltas.len()];
        let mean = pmf.mean();
        for step in 1..=10 {
            let r = step as f64 / 10.0;
            let target = mean * (1.0 - r);
            let (lp_min, _) = reduction_lp(pmf.supports(), pmf.probs(), None, delta).ok_or("reduction LP failed")?;
            let reachable = lp_min <= target + 1e-9;
            match reduce_pmf(&pmf, r, delta) {
                Ok(q) => {
                    if !reachable {
                        return Err(format!("pmf {k} r {r}: reduced although the LP minimum {lp_min} exceeds {target}"));
                    }
                    if (q.mean() - target).abs() > 1e-6 {
                        return Err(format!("pmf {k} r {r}: mean {} vs {target}", q.mean()));
                    }
                    for (s, p0) in pmf.supports().iter().zip(pmf.probs()) {
                        let p = q.prob_of(*s);
                        if p < (1.0 - delta.min(1.0)) * p0 - 1e-12 || p > (1.0 + delta) * p0 + 1e-12 {
                            return Err(format!("pmf {k} r {r}: atom {s} prob {p} outside the box around {p0}"));
                        }
                    }
                    feasible += 1;
                }
                Err(gdp_core::Error::InfeasibleReduction { attainable, .. }) => {
                    if reachable || (attainable - lp_min).abs() > 1e-6 {
                        return Err(format!("pmf {k} r {r}: infeasible with attainable {attainable}, LP minimum {lp_min}"));
                    }
                    infeasible += 1;
                }
                Err(e) => return Err(format!("pmf {k} r {r}: {e}")),
            }
        }
    }
    Ok(format!("{feasible} feasible and {infeasible} infeasible cases agree with the LP"))
}

fn table_iv(dir: &Path) -> Outcome {
    drgdp(dir, &["sensitivity"])?;
    let rows = read_rows(&dir.join("sensitivity/table_iv.csv"))?;
    let sweep = read_rows(&dir.join("sensitivity/sweep.csv"))?;
    if rows.len() != 10 {
        return Err(format!("{} reduction levels, expected 10", rows.len()));
    }
    let mut phi_sp = Vec::new();
    let mut phi_dr = Vec::new();
    for row in &rows {
        let r = num(row, "r")?;
        let sp = num(row, "phi_sp")?;
        let min_dr = sweep
            .iter()
            .filter(|s| num(s, "r").is_ok_and(|v| v == r))
            .map(|s| num(s, "phi_dr"))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_dr > sp + 1e-9 {
            return Err(format!("r {r}: min dr {min_dr} above sp {sp}"));
        }
        phi_sp.push(sp);
        phi_dr.push(min_dr);
    }
    for (name, series) in [("sp", &phi_sp), ("dr", &phi_dr)] {
        if let Some(k) = series.windows(2).position(|w| w[1] <= w[0]) {
            return Err(format!("{name} cost does not increase from level {} to {}: {series:?}", k + 1, k + 2));
        }
    }
    Ok(format!("sp {phi_sp:?}, best dr {phi_dr:?}"))
}

fn predictor_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let h = 1e-5;
    let mut worst_grad: f64 = 0.0;
    for trial in 0..3 {
        let sizes = vec![7, rng.random_range(2..6), rng.random_range(2..6), 6];
        let mut model = MlpModel::initialized(sizes, trial).map_err(|e| e.to_string())?;
        for p in &mut model.params {
            *p += rng.random_range(-0.1..0.1);
        }
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..7).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ts: Vec<Vec<f64>> = (0..4).map(|_| encode_one_hot(rng.random_range(0..6), 5).unwrap()).collect();
        let (_, grad) = model.loss_and_gradient(&xs, &ts).map_err(|e| e.to_string())?;
        for k in 0..model.params.len() {
            let mut plus = model.clone();
            plus.params[k] += h;
            let mut minus = model.clone();
            minus.params[k] -= h;
            let fd = (plus.loss(&xs, &ts).unwrap() - minus.loss(&xs, &ts).unwrap()) / (2.0 * h);
            worst_grad = worst_grad.max((fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-7));
        }
        for x in &xs {
            let scaled: Vec<f64> = x.iter().map(|v| v * 40.0).collect();
            for input in [x, &scaled] {
                let out = model.forward(input).map_err(|e| e.to_string())?;
                let sum: f64 = out.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || out.iter().any(|p| !(*p >= 0.0)) {
                    return Err(format!("softmax output {out:?} sums to {sum}"));
                }
            }
        }
    }
    if worst_grad > 1e-4 {
        return Err(format!("gradient relative error {worst_grad:.2e}"));
    }

    let mut data_rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
        .map(|i| {
            let class = i % 4;
            let x = (0..7).map(|k| if k == class { 0.9 } else { 0.1 } + data_rng.random_range(-0.05..0.05)).collect();
            (x, encode_one_hot(class as u32, 3).unwrap())
        })
        .collect();
    let model = train(&data, &Hyper { seed: 1, ..Hyper::default() }).map_err(|e| e.to_string())?;
    let hits = data
        .iter()
        .filter(|(x, t)| predict(&model, x).is_ok_and(|p| p.argmax() == t.iter().position(|&v| v == 1.0).unwrap()))
        .count();
    let acc = hits as f64 / data.len() as f64;
    if acc < 0.95 {
        return Err(format!("training accuracy {acc}"));
    }

    let one_hot = encode_one_hot(2, 5).map_err(|e| e.to_string())?;
    if one_hot != [0.0, 0.0, 1.0, 0.0, 0.0, 0.0] {
        return Err(format!("one-hot of 2 over 0..=5 is {one_hot:?}"));
    }
    Ok(format!("gradient error {worst_grad:.2e}, training accuracy {acc}"))
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path)?);
        }
    }
    Ok(())
}

fn full_run(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    prepare(dir)?;
    drgdp(dir, &["solve", "--mode", "det"])?;
    drgdp(dir, &["solve", "--mode", "sp"])?;
    drgdp(dir, &["solve", "--mode", "dr"])?;
    drgdp(dir, &["sensitivity"])?;
    let mut files = BTreeMap::new();
    collect_files(dir, dir, &mut files).map_err(|e| e.to_string())?;
    Ok(files)
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let first = full_run(a)?;
    let second = full_run(b)?;
    if first.keys().ne(second.keys()) {
        return Err("the two runs wrote different file sets".into());
    }
    if let Some((path, _)) = first.iter().find(|(p, bytes)| second[*p] != **bytes) {
        return Err(format!("{} differs between runs", path.display()));
    }
    let bytes: usize = first.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical", first.len()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let shared = tmp.path().join("fixture");
    let (run_a, run_b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));

    type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("in-sample equivalence at zero radius", Duration::from_secs(60), Box::new(|| in_sample_equivalence(&shared))),
        ("conservatism monotonicity", Duration::from_secs(60), Box::new(|| conservatism(&shared))),
        ("wasserstein closed form vs transport LP", Duration::from_secs(5), Box::new(wasserstein_oracle)),
        ("inner-max strong duality", Duration::from_secs(10), Box::new(strong_duality)),
        ("MAGHP brute-force oracle", Duration::from_secs(60), Box::new(brute_force)),
        ("capacity reduction fidelity", Duration::from_secs(5), Box::new(reduction_fidelity)),
        ("out-of-sample sensitivity table", Duration::from_secs(600), Box::new(|| table_iv(&shared))),
        ("predictor sanity", Duration::from_secs(60), Box::new(predictor_sanity)),
        ("end-to-end determinism", Duration::from_secs(300), Box::new(|| determinism(&run_a, &run_b))),
    ];

    let mut failures = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; runtime over the {limit:?} limit")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name} ({:.2}s): {detail}", elapsed.as_secs_f64()),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
