use std::collections::BTreeMap;

use gdp_core::distributions::*;
use gdp_core::schedule::Direction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pmf(rng: &mut ChaCha8Rng, max_atoms: usize, span: u32) -> DiscretePmf {
    let k = rng.random_range(1..=max_atoms);
    DiscretePmf::from_weights((0..k).map(|_| (rng.random_range(0..span) as f64, rng.random_range(0.01..1.0)))).unwrap()
}

fn pmf_strategy() -> impl Strategy<Value = DiscretePmf> {
    prop::collection::vec((0u32..20, 0.01f64..1.0), 1..8)
        .prop_map(|v| DiscretePmf::from_weights(v.into_iter().map(|(s, w)| (s as f64, w))).unwrap())
}

#[test]
fn closed_form_matches_transport_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = random_pmf(&mut rng, 8, 25);
        let q = random_pmf(&mut rng, 8, 25);
        let w = wasserstein_1d(&p, &q);
        let lp = wasserstein_lp(&p, &q).unwrap();
        assert!((w - lp).abs() <= 1e-9, "{w} vs {lp}");
    }
}

proptest! {
    #[test]
    fn wasserstein_is_a_metric(p in pmf_strategy(), q in pmf_strategy(), r in pmf_strategy()) {
        let pq = wasserstein_1d(&p, &q);
        prop_assert!((pq - wasserstein_1d(&q, &p)).abs() < 1e-12);
        prop_assert!(wasserstein_1d(&p, &p).abs() < 1e-12);
        prop_assert!(pq >= 0.0);
        prop_assert!(pq <= wasserstein_1d(&p, &r) + wasserstein_1d(&r, &q) + 1e-9);
        if pq < 1e-12 {
            prop_assert_eq!(p.supports(), q.supports());
        }
    }

    #[test]
    fn worst_case_grows_with_radius(center in pmf_strategy(), seed in 0u64..1000, e1 in 0.0f64..5.0, e2 in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let costs: Vec<f64> = (0..center.len()).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let v_lo = worst_case_expectation(&AmbiguitySet::new(center.clone(), lo).unwrap(), &costs).unwrap().0;
        let v_hi = worst_case_expectation(&AmbiguitySet::new(center.clone(), hi).unwrap(), &costs).unwrap().0;
        prop_assert!(v_hi >= v_lo - 1e-9);
        let plain: f64 = center.probs().iter().zip(&costs).map(|(p, c)| p * c).sum();
        let v0 = worst_case_expectation(&AmbiguitySet::new(center.clone(), 0.0).unwrap(), &costs).unwrap().0;
        prop_assert!((v0 - plain).abs() < 1e-9);
    }
}

#[test]
fn primal_and_dual_inner_problems_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let dim = rng.random_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0..10) as f64).collect()).collect();
        let d: Vec<Vec<f64>> = points
            .iter()
            .map(|a| points.iter().map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()).collect())
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let eps = rng.random_range(0.0..4.0);
        let primal = worst_case_over_support(&p, &d, &q, eps).unwrap();
        let dual = worst_case_dual(&p, &d, &q, eps).unwrap();
        assert!((primal.value - dual).abs() <= 1e-6, "{} vs {dual}", primal.value);
        let moved: f64 = primal.marginal.iter().sum();
        assert!((moved - 1.0).abs() < 1e-9);
    }
}

#[test]
fn large_radius_moves_all_mass_to_the_worst_point() {
    let center = DiscretePmf::new(vec![1.0, 4.0, 9.0], vec![0.2, 0.3, 0.5]).unwrap();
    let costs = [3.0, 7.0, -1.0];
    let (v, q) = worst_case_expectation(&AmbiguitySet::new(center, 8.0).unwrap(), &costs).unwrap();
    assert!((v - 7.0).abs() < 1e-9);
    assert!((q.prob_of(4.0) - 1.0).abs() < 1e-9);
}

#[test]
fn tiny_threshold_splits_at_every_change() {
    let key = SeriesKey::new("AAA", Direction::Departure);
    let a = DiscretePmf::point_mass(3.0);
    let b = DiscretePmf::new(vec![3.0, 4.0], vec![0.5, 0.5]).unwrap();
    let series = vec![a.clone(), a.clone(), b.clone(), a.clone(), a, b.clone(), b];
    let groups = reduce_scenarios(&BTreeMap::from([(key, series)]), 1e-12).unwrap();
    let starts: Vec<usize> = groups.iter().map(|g| g.first).collect();
    assert_eq!(starts, vec![0, 2, 3, 5]);
    assert_eq!(groups.last().unwrap().last, 6);
}

#[test]
fn split_uses_the_worst_series() {
    let flat = vec![DiscretePmf::point_mass(5.0); 4];
    let mut moving = vec![DiscretePmf::point_mass(5.0); 2];
    moving.extend(vec![DiscretePmf::point_mass(8.0); 2]);
    let per = BTreeMap::from([
        (SeriesKey::new("AAA", Direction::Arrival), flat),
        (SeriesKey::new("BBB", Direction::Arrival), moving),
    ]);
    let groups = reduce_scenarios(&per, 0.5).unwrap();
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[1].first, 2);
}

#[test]
fn sampling_frequencies_converge() {
    let u = DiscretePmf::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
    let m = BTreeMap::from([
        (ScenarioKey::new("AAA", 0, Direction::Arrival), u.clone()),
        (ScenarioKey::new("BBB", 0, Direction::Arrival), u),
    ]);
    let s = sample_scenarios(&m, 10_000, 3).unwrap();
    assert_eq!(s.scenarios.len(), 4);
    for sc in &s.scenarios {
        assert!((sc.prob - 0.25).abs() < 0.05, "{sc:?}");
    }
    assert_eq!(s, sample_scenarios(&m, 10_000, 3).unwrap());
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<ScenarioSet>(&json).unwrap(), s);
}
