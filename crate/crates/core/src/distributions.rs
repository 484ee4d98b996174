//! Discrete capacity distributions, Wasserstein distances, ambiguity sets,
//! time grouping and joint scenario sampling.

use std::collections::BTreeMap;
use std::fmt;

use gdp_lp::{solve_lp, LinearProgram, Relation, Sense, SolveStatus};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Direction;

pub const PROB_TOL: f64 = 1e-9;

/// Finite-support PMF with strictly increasing support points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct DiscretePmf {
    supports: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    supports: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for DiscretePmf {
    type Error = Error;
    fn try_from(raw: RawPmf) -> Result<Self> {
        DiscretePmf::new(raw.supports, raw.probs)
    }
}

impl From<DiscretePmf> for RawPmf {
    fn from(p: DiscretePmf) -> Self {
        RawPmf {
            supports: p.supports,
            probs: p.probs,
        }
    }
}

impl DiscretePmf {
    pub fn new(supports: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if supports.is_empty() || supports.len() != probs.len() {
            return Err(Error::Validation(format!(
                "pmf needs matching nonempty supports ({}) and probs ({})",
                supports.len(),
                probs.len()
            )));
        }
        if supports.iter().any(|s| !s.is_finite()) || supports.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("pmf supports must be finite and strictly increasing".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Validation("pmf probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Validation(format!("pmf probabilities sum to {total}, not 1")));
        }
        Ok(Self { supports, probs })
    }

    /// Builds a PMF from unsorted `(support, weight)` pairs, merging equal
    /// supports and normalizing the weights.
    pub fn from_weights(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        if pairs.iter().any(|(s, w)| !s.is_finite() || !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut supports: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (s, w) in pairs {
            if supports.last() == Some(&s) {
                *weights.last_mut().unwrap() += w;
            } else {
                supports.push(s);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Validation("weights must have positive total".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Self::new(supports, probs)
    }

    pub fn point_mass(x: f64) -> Self {
        Self {
            supports: vec![x],
            probs: vec![1.0],
        }
    }

    /// PMF over the integers `0..probs.len()`.
    pub fn over_range(probs: Vec<f64>) -> Result<Self> {
        Self::new((0..probs.len()).map(|k| k as f64).collect(), probs)
    }

    pub fn supports(&self) -> &[f64] {
        &self.supports
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.supports.iter().zip(&self.probs).map(|(s, p)| s * p).sum()
    }

    pub fn prob_of(&self, x: f64) -> f64 {
        self.supports.iter().position(|&s| s == x).map_or(0.0, |k| self.probs[k])
    }

    /// Support point with the highest probability (smallest on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for k in 1..self.len() {
            if self.probs[k] > self.probs[best] {
                best = k;
            }
        }
        self.supports[best]
    }

    /// Equal-weight mixture on the union support.
    pub fn mixture(members: &[&DiscretePmf]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("mixture of zero distributions".into()));
        }
        let w = 1.0 / members.len() as f64;
        Self::from_weights(
            members
                .iter()
                .flat_map(|m| m.supports.iter().zip(&m.probs).map(move |(&s, &p)| (s, p * w))),
        )
    }
}

/// 1-Wasserstein distance with ground metric `|x - y|`, via the integral of
/// the absolute CDF difference.
pub fn wasserstein_1d(p: &DiscretePmf, q: &DiscretePmf) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fp, mut fq) = (0.0f64, 0.0f64);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < p.len() || j < q.len() {
        let x = match (p.supports.get(i), q.supports.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if let Some(px) = prev {
            total += (fp - fq).abs() * (x - px);
        }
        if i < p.len() && p.supports[i] == x {
            fp += p.probs[i];
            i += 1;
        }
        if j < q.len() && q.supports[j] == x {
            fq += q.probs[j];
            j += 1;
        }
        prev = Some(x);
    }
    total
}

fn optimal(sol: gdp_lp::Solution) -> Result<gdp_lp::Solution> {
    if sol.status != SolveStatus::Optimal {
        return Err(Error::SolverStatus(sol.status));
    }
    Ok(sol)
}

/// 1-Wasserstein distance from the transportation LP.
pub fn wasserstein_lp(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut pi = vec![vec![0usize; q.len()]; p.len()];
    for (i, &x) in p.supports.iter().enumerate() {
        for (j, &y) in q.supports.iter().enumerate() {
            pi[i][j] = lp.add_var((x - y).abs(), 0.0, f64::INFINITY);
        }
    }
    for i in 0..p.len() {
        lp.add_constraint(pi[i].iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, p.probs[i]);
    }
    // The last column sum is implied by the others.
    for j in 0..q.len().saturating_sub(1) {
        lp.add_constraint((0..p.len()).map(|i| (pi[i][j], 1.0)).collect(), Relation::Eq, q.probs[j]);
    }
    Ok(optimal(solve_lp(&lp)?)?.objective)
}

/// Wasserstein ball of radius `radius` around `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySet {
    pub center: DiscretePmf,
    pub radius: f64,
}

impl AmbiguitySet {
    pub fn new(center: DiscretePmf, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::Validation(format!("ambiguity radius must be nonnegative, got {radius}")));
        }
        Ok(Self { center, radius })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    /// Worst-case marginal `q_j = Σ_i π_ij` over the support points.
    pub marginal: Vec<f64>,
}

/// Maximizes `Σ π_ij Q_j` over couplings with row sums `center_probs` and
/// transport cost `Σ π_ij d_ij ≤ radius`.
pub fn worst_case_over_support(center_probs: &[f64], distances: &[Vec<f64>], costs: &[f64], radius: f64) -> Result<WorstCase> {
    let n = center_probs.len();
    check_support_dims(n, distances, costs, radius)?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let pi: Vec<Vec<usize>> = (0..n)
        .map(|_| costs.iter().map(|&c| lp.add_var(c, 0.0, f64::INFINITY)).collect())
        .collect();
    for i in 0..n {
        lp.add_constraint(pi[i].iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, center_probs[i]);
    }
    let budget = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| distances[i][j] != 0.0)
        .map(|(i, j)| (pi[i][j], distances[i][j]))
        .collect::<Vec<_>>();
    lp.add_constraint(budget, Relation::Le, radius);
    let sol = optimal(solve_lp(&lp)?)?;
    let marginal = (0..n).map(|j| (0..n).map(|i| sol.x[pi[i][j]]).sum()).collect();
    Ok(WorstCase {
        value: sol.objective,
        marginal,
    })
}

/// Dual of [`worst_case_over_support`]:
/// `min Σ p_i α_i + radius·λ` s.t. `α_i + λ d_ij ≥ Q_j`, `λ ≥ 0`.
pub fn worst_case_dual(center_probs: &[f64], distances: &[Vec<f64>], costs: &[f64], radius: f64) -> Result<f64> {
    let n = center_probs.len();
    check_support_dims(n, distances, costs, radius)?;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let alpha: Vec<usize> = center_probs
        .iter()
        .map(|&p| lp.add_var(p, f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let lambda = lp.add_var(radius, 0.0, f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            lp.add_constraint(vec![(alpha[i], 1.0), (lambda, distances[i][j])], Relation::Ge, costs[j]);
        }
    }
    Ok(optimal(solve_lp(&lp)?)?.objective)
}

fn check_support_dims(n: usize, distances: &[Vec<f64>], costs: &[f64], radius: f64) -> Result<()> {
    if n == 0 || costs.len() != n || distances.len() != n || distances.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "support of size {n} needs {n} costs (got {}) and an {n}x{n} distance matrix",
            costs.len()
        )));
    }
    if costs.iter().chain(distances.iter().flatten()).any(|v| !v.is_finite()) || !(radius >= 0.0) {
        return Err(Error::Validation("costs, distances and radius must be finite; radius nonnegative".into()));
    }
    Ok(())
}

/// Worst-case expectation of per-atom costs over a scalar ambiguity set
/// whose support is the center's support. Returns the value and the
/// worst-case PMF.
pub fn worst_case_expectation(set: &AmbiguitySet, costs: &[f64]) -> Result<(f64, DiscretePmf)> {
    let s = set.center.supports();
    let d: Vec<Vec<f64>> = s.iter().map(|x| s.iter().map(|y| (x - y).abs()).collect()).collect();
    let wc = worst_case_over_support(set.center.probs(), &d, costs, set.radius)?;
    let total: f64 = wc.marginal.iter().map(|q| q.max(0.0)).sum();
    let probs = wc.marginal.iter().map(|q| q.max(0.0) / total).collect();
    Ok((wc.value, DiscretePmf::new(s.to_vec(), probs)?))
}

/// Identifies one capacity series.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub airport: String,
    pub direction: Direction,
}

impl SeriesKey {
    pub fn new(airport: impl Into<String>, direction: Direction) -> Self {
        Self {
            airport: airport.into(),
            direction,
        }
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.airport, self.direction)
    }
}

/// Contiguous run of periods sharing one centroid PMF per series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGroup {
    pub first: usize,
    pub last: usize,
    #[serde(with = "series_map")]
    pub centroids: BTreeMap<SeriesKey, DiscretePmf>,
}

impl TimeGroup {
    pub fn contains(&self, t: usize) -> bool {
        (self.first..=self.last).contains(&t)
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Index of the group containing period `t`, if any.
pub fn group_of(groups: &[TimeGroup], t: usize) -> Option<usize> {
    groups.iter().position(|g| g.contains(t))
}

/// Serializes a series-keyed map as a list so it survives JSON.
mod series_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry<T> {
        airport: String,
        direction: Direction,
        #[serde(flatten)]
        value: T,
    }

    pub fn serialize<S: Serializer, T: Serialize + Clone>(m: &BTreeMap<SeriesKey, T>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry<T>> = m
            .iter()
            .map(|(k, v)| Entry {
                airport: k.airport.clone(),
                direction: k.direction,
                value: v.clone(),
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> std::result::Result<BTreeMap<SeriesKey, T>, D::Error> {
        let entries: Vec<Entry<T>> = Vec::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| (SeriesKey::new(e.airport, e.direction), e.value))
            .collect())
    }
}

/// Groups consecutive periods left to right. A new group starts at `t + 1`
/// when any series moves by more than `threshold` in Wasserstein distance
/// between `t` and `t + 1`.
pub fn reduce_scenarios(per_period: &BTreeMap<SeriesKey, Vec<DiscretePmf>>, threshold: f64) -> Result<Vec<TimeGroup>> {
    if !(threshold > 0.0) {
        return Err(Error::Validation(format!("reduction threshold must be positive, got {threshold}")));
    }
    let horizon = per_period.values().next().map_or(0, Vec::len);
    if horizon == 0 {
        return Err(Error::Validation("scenario reduction needs at least one period".into()));
    }
    if let Some((k, v)) = per_period.iter().find(|(_, v)| v.len() != horizon) {
        return Err(Error::Dimension(format!("series {k} has {} periods, expected {horizon}", v.len())));
    }
    let mut bounds = vec![0usize];
    for t in 1..horizon {
        let stat = per_period
            .values()
            .map(|s| wasserstein_1d(&s[t - 1], &s[t]))
            .fold(0.0, f64::max);
        if stat > threshold {
            bounds.push(t);
        }
    }
    bounds.push(horizon);
    bounds
        .windows(2)
        .map(|w| {
            let (first, end) = (w[0], w[1]);
            let centroids = per_period
                .iter()
                .map(|(k, s)| {
                    let members: Vec<&DiscretePmf> = s[first..end].iter().collect();
                    Ok((k.clone(), DiscretePmf::mixture(&members)?))
                })
                .collect::<Result<_>>()?;
            Ok(TimeGroup {
                first,
                last: end - 1,
                centroids,
            })
        })
        .collect()
}

/// Identifies one scenario coordinate: a series within a time group.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScenarioKey {
    pub airport: String,
    pub group: usize,
    pub direction: Direction,
}

impl ScenarioKey {
    pub fn new(airport: impl Into<String>, group: usize, direction: Direction) -> Self {
        Self {
            airport: airport.into(),
            group,
            direction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Parallel to [`ScenarioSet::keys`].
    pub capacities: Vec<u32>,
    pub prob: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Sampled,
    Enumerated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub keys: Vec<ScenarioKey>,
    pub scenarios: Vec<Scenario>,
    pub provenance: Provenance,
}

impl ScenarioSet {
    pub fn new(keys: Vec<ScenarioKey>, scenarios: Vec<Scenario>, provenance: Provenance) -> Result<Self> {
        let set = Self {
            keys,
            scenarios,
            provenance,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Validation("scenario set is empty".into()));
        }
        if self.keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("scenario keys must be sorted and unique".into()));
        }
        for s in &self.scenarios {
            if s.capacities.len() != self.keys.len() {
                return Err(Error::Dimension(format!(
                    "scenario has {} capacities for {} keys",
                    s.capacities.len(),
                    self.keys.len()
                )));
            }
            if !(s.prob.is_finite() && s.prob >= 0.0) {
                return Err(Error::Validation(format!("scenario probability {} is invalid", s.prob)));
            }
        }
        let total: f64 = self.scenarios.iter().map(|s| s.prob).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Validation(format!("scenario probabilities sum to {total}")));
        }
        Ok(())
    }

    pub fn key_index(&self, key: &ScenarioKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }

    /// Capacity of `key` in scenario `s`.
    pub fn capacity(&self, s: usize, key: &ScenarioKey) -> Option<u32> {
        self.key_index(key).map(|k| self.scenarios[s].capacities[k])
    }
}

/// Group centroids as scenario marginals, one per `(airport, group, direction)`.
pub fn group_marginals(groups: &[TimeGroup]) -> BTreeMap<ScenarioKey, DiscretePmf> {
    groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| {
            group
                .centroids
                .iter()
                .map(move |(k, pmf)| (ScenarioKey::new(k.airport.clone(), g, k.direction), pmf.clone()))
        })
        .collect()
}

fn integral_support(key: &ScenarioKey, pmf: &DiscretePmf) -> Result<Vec<u32>> {
    pmf.supports()
        .iter()
        .map(|&s| {
            if s < 0.0 || s.fract() != 0.0 || s > u32::MAX as f64 {
                Err(Error::Validation(format!(
                    "capacity support {s} for {}/{}/{} is not a nonnegative integer",
                    key.airport, key.group, key.direction
                )))
            } else {
                Ok(s as u32)
            }
        })
        .collect()
}

/// Draws `n` joint scenarios from independent marginals and merges duplicates
/// with probability `count / n`.
pub fn sample_scenarios(marginals: &BTreeMap<ScenarioKey, DiscretePmf>, n: usize, seed: u64) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::Validation("scenario count must be at least 1".into()));
    }
    let mut samplers = Vec::with_capacity(marginals.len());
    for (key, pmf) in marginals {
        let values = integral_support(key, pmf)?;
        let dist = WeightedIndex::new(pmf.probs()).map_err(|e| Error::Validation(format!("marginal {key:?}: {e}")))?;
        samplers.push((values, dist));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for _ in 0..n {
        let draw: Vec<u32> = samplers.iter().map(|(v, d)| v[d.sample(&mut rng)]).collect();
        *counts.entry(draw).or_default() += 1;
    }
    let scenarios = counts
        .into_iter()
        .map(|(capacities, c)| Scenario {
            capacities,
            prob: c as f64 / n as f64,
        })
        .collect();
    ScenarioSet::new(marginals.keys().cloned().collect(), scenarios, Provenance::Sampled)
}

/// Full product of independent marginals, dropping zero-probability atoms.
/// Fails when the product would exceed `max_scenarios`.
pub fn enumerate_scenarios(marginals: &BTreeMap<ScenarioKey, DiscretePmf>, max_scenarios: usize) -> Result<ScenarioSet> {
    let mut scenarios = vec![Scenario {
        capacities: Vec::new(),
        prob: 1.0,
    }];
    for (key, pmf) in marginals {
        let values = integral_support(key, pmf)?;
        let atoms: Vec<(u32, f64)> = values
            .into_iter()
            .zip(pmf.probs().iter().copied())
            .filter(|&(_, p)| p > 0.0)
            .collect();
        if scenarios.len().saturating_mul(atoms.len()) > max_scenarios {
            return Err(Error::Validation(format!("scenario product exceeds {max_scenarios} scenarios")));
        }
        scenarios = scenarios
            .iter()
            .flat_map(|s| {
                atoms.iter().map(move |&(v, p)| {
                    let mut capacities = s.capacities.clone();
                    capacities.push(v);
                    Scenario {
                        capacities,
                        prob: s.prob * p,
                    }
                })
            })
            .collect();
    }
    ScenarioSet::new(marginals.keys().cloned().collect(), scenarios, Provenance::Enumerated)
}
