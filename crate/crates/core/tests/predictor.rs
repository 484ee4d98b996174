use gdp_core::predictor::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(rng: &mut ChaCha8Rng, n: usize, d_in: usize, d_out: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let xs = (0..n).map(|_| (0..d_in).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ts = (0..n)
        .map(|_| {
            let mut t = vec![0.0; d_out];
            t[rng.random_range(0..d_out)] = 1.0;
            t
        })
        .collect();
    (xs, ts)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-5;
    for trial in 0..5 {
        let sizes = vec![7, rng.random_range(2..6), rng.random_range(2..6), rng.random_range(2..5)];
        let mut model = MlpModel::initialized(sizes.clone(), trial).unwrap();
        for p in &mut model.params {
            *p += rng.random_range(-0.1..0.1);
        }
        let (xs, ts) = random_batch(&mut rng, 4, 7, sizes[3]);
        let (_, grad) = model.loss_and_gradient(&xs, &ts).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..model.params.len() {
            let mut plus = model.clone();
            plus.params[k] += h;
            let mut minus = model.clone();
            minus.params[k] -= h;
            let fd = (plus.loss(&xs, &ts).unwrap() - minus.loss(&xs, &ts).unwrap()) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-7);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-4, "trial {trial}: worst relative error {worst}");
    }
}

/// Twenty points in four well-separated clusters, one per class.
fn toy_set() -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..20)
        .map(|i| {
            let class = i % 4;
            let x: Vec<f64> = (0..7)
                .map(|k| if k == class { 0.9 } else { 0.1 } + rng.random_range(-0.05..0.05))
                .collect();
            (x, encode_one_hot(class as u32, 3).unwrap())
        })
        .collect()
}

fn toy_hyper() -> Hyper {
    Hyper {
        seed: 1,
        ..Hyper::default()
    }
}

fn accuracy(model: &MlpModel, data: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let hits = data
        .iter()
        .filter(|(x, t)| predict(model, x).unwrap().argmax() == t.iter().position(|&v| v == 1.0).unwrap())
        .count();
    hits as f64 / data.len() as f64
}

#[test]
fn overfits_a_separable_toy_set() {
    let data = toy_set();
    let model = train(&data, &toy_hyper()).unwrap();
    let acc = accuracy(&model, &data);
    assert!(acc >= 0.95, "training accuracy {acc}");
    let first = predict(&model, &data[0].0).unwrap();
    assert_eq!(first.argmax(), 0);
}

#[test]
fn training_is_bitwise_deterministic() {
    let data = toy_set();
    let hyper = Hyper {
        epochs: 20,
        ..toy_hyper()
    };
    let a = train(&data, &hyper).unwrap();
    let b = train(&data, &hyper).unwrap();
    assert_eq!(
        a.params.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
        b.params.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn dimension_mismatch_is_reported() {
    let data = vec![(vec![0.0; 7], vec![1.0, 0.0]), (vec![0.0; 6], vec![1.0, 0.0])];
    assert!(matches!(train(&data, &Hyper::default()), Err(gdp_core::Error::Dimension(_))));
    let m = MlpModel::zeros(vec![7, 3, 2]).unwrap();
    assert!(predict(&m, &[0.0; 3]).is_err());
}

/// Shortest interval by exact integer arithmetic on probabilities given in
/// units of `1/denom`.
fn exact_interval(units: &[u64], denom: u64, level_units: u64) -> (usize, usize) {
    assert_eq!(units.iter().sum::<u64>(), denom);
    let n = units.len();
    for width in 1..=n {
        let mut best: Option<(usize, u64)> = None;
        for lo in 0..=n - width {
            let mass: u64 = units[lo..lo + width].iter().sum();
            if mass >= level_units && best.is_none_or(|(_, m)| mass > m) {
                best = Some((lo, mass));
            }
        }
        if let Some((lo, _)) = best {
            return (lo, lo + width - 1);
        }
    }
    unreachable!()
}

#[test]
fn uniform_interval_matches_exact_oracle() {
    // Uniform over 0..=9 at level 0.9: nine values hold exactly 0.9.
    let oracle = exact_interval(&[1; 10], 10, 9);
    assert_eq!(oracle, (0, 8));
    let p = PredictedPmf { probs: vec![0.1; 10] };
    assert_eq!(p.interval(0.9), oracle);
    let m = metrics(&[p.clone()], &[4], 0.9).unwrap();
    assert_eq!(m.acil_mean, 8.0);
    assert_eq!(m.cr, 1.0);
}

#[test]
fn random_intervals_match_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.random_range(1..12);
        let denom = 100u64;
        let mut units = vec![0u64; n];
        for _ in 0..denom {
            units[rng.random_range(0..n)] += 1;
        }
        let level = rng.random_range(1..100u64);
        let p = PredictedPmf {
            probs: units.iter().map(|&u| u as f64 / denom as f64).collect(),
        };
        assert_eq!(p.interval(level as f64 / 100.0), exact_interval(&units, denom, level), "{units:?} @ {level}");
    }
}

fn pmf_strategy() -> impl Strategy<Value = PredictedPmf> {
    prop::collection::vec(0.0f64..1.0, 1..10).prop_filter_map("positive mass", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-6).then(|| PredictedPmf {
            probs: w.iter().map(|x| x / total).collect(),
        })
    })
}

/// Atoms nondecreasing up to a mode and nonincreasing after it.
fn unimodal_strategy() -> impl Strategy<Value = PredictedPmf> {
    (prop::collection::vec(0.0f64..1.0, 0..5), prop::collection::vec(0.0f64..1.0, 0..5), 0.5f64..1.0).prop_map(|(mut left, mut right, peak)| {
        left.sort_by(f64::total_cmp);
        right.sort_by(|a, b| b.total_cmp(a));
        let mut w: Vec<f64> = left.iter().map(|x| x * peak).collect();
        w.push(peak);
        w.extend(right.iter().map(|x| x * peak));
        let total: f64 = w.iter().sum();
        PredictedPmf { probs: w.iter().map(|x| x / total).collect() }
    })
}

#[test]
fn coverage_can_drop_with_level_on_bimodal_pmfs() {
    let p = PredictedPmf { probs: vec![0.25, 0.255, 0.07, 0.425] };
    assert_eq!(p.interval(0.43), (0, 1));
    assert_eq!(p.interval(0.63), (1, 3));
    assert_eq!(metrics(&[p.clone()], &[0], 0.43).unwrap().cr, 1.0);
    assert_eq!(metrics(&[p], &[0], 0.63).unwrap().cr, 0.0);
}

proptest! {
    #[test]
    fn softmax_output_is_a_pmf(x in prop::collection::vec(-50.0f64..50.0, 7), seed in 0u64..100) {
        let m = MlpModel::initialized(vec![7, 17, 32, 9], seed).unwrap();
        let p = predict(&m, &x).unwrap();
        prop_assert!(p.probs.iter().all(|&v| v >= 0.0));
        prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn interval_length_grows_with_level(
        preds in prop::collection::vec(pmf_strategy(), 1..6),
        a in 0.05f64..0.95,
        b in 0.05f64..0.95,
    ) {
        let actuals = vec![0; preds.len()];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(metrics(&preds, &actuals, hi).unwrap().acil_mean >= metrics(&preds, &actuals, lo).unwrap().acil_mean);
    }

    #[test]
    fn coverage_and_length_grow_with_level_for_unimodal_pmfs(
        preds in prop::collection::vec(unimodal_strategy(), 1..6),
        a in 0.05f64..0.95,
        b in 0.05f64..0.95,
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actuals: Vec<u32> = preds.iter().map(|p| rng.random_range(0..p.probs.len() as u32)).collect();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m_lo = metrics(&preds, &actuals, lo).unwrap();
        let m_hi = metrics(&preds, &actuals, hi).unwrap();
        prop_assert!(m_hi.cr >= m_lo.cr);
        prop_assert!(m_hi.acil_mean >= m_lo.acil_mean);
    }

    #[test]
    fn rmse_depends_only_on_the_argmax(p in pmf_strategy(), scale in 0.1f64..0.9, actual in 0u32..10) {
        let k = p.argmax();
        // Shrink every other atom towards zero and renormalize: the mode survives.
        let mut q = p.probs.clone();
        for (i, v) in q.iter_mut().enumerate() {
            if i != k { *v *= scale; }
        }
        let total: f64 = q.iter().sum();
        let q = PredictedPmf { probs: q.iter().map(|v| v / total).collect() };
        prop_assert_eq!(q.argmax(), k);
        let r1 = metrics(&[p], &[actual], 0.5).unwrap().rmse;
        let r2 = metrics(&[q], &[actual], 0.5).unwrap().rmse;
        prop_assert_eq!(r1, r2);
    }
}

#[test]
fn capacity_model_round_trips_through_json() {
    let data: Vec<([f64; 7], u32)> = (0..30)
        .map(|i| {
            let c = (i % 3) as u32 + 2;
            let mut f = [0.0; 7];
            f[0] = c as f64 * 100.0;
            f[1] = i as f64;
            (f, c)
        })
        .collect();
    let hyper = Hyper {
        epochs: 5,
        ..Hyper::default()
    };
    let m = CapacityModel::fit("AAA", gdp_core::schedule::Direction::Arrival, &data, &hyper, 0.9).unwrap();
    assert_eq!(m.max_capacity, 4);
    assert_eq!(m.network.layer_sizes, vec![7, 17, 32, 5]);
    assert!(m.validation.is_some());
    let json = serde_json::to_string(&m).unwrap();
    assert_eq!(CapacityModel::from_json(&json).unwrap(), m);
}
