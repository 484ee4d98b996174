//! Capacity distribution predictor: a small ReLU network with a softmax
//! output over the integer capacities `0..=max`, trained with mini-batch
//! Adam on mean cross-entropy. Also forecast metrics over predicted PMFs.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDateTime;
use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::CapacityObservation;
use crate::distributions::DiscretePmf;
use crate::error::{Error, Result};
use crate::schedule::{parse_timestamp, Direction};

pub const NUM_FEATURES: usize = 7;
pub const HIDDEN_LAYERS: [usize; 2] = [17, 32];
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherFeatures {
    pub ceiling: f64,
    pub visibility: f64,
    pub vil: f64,
    pub temperature: f64,
    pub dew_point: f64,
    pub wind_direction: f64,
    pub wind_speed: f64,
}

impl WeatherFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.ceiling,
            self.visibility,
            self.vil,
            self.temperature,
            self.dew_point,
            self.wind_direction,
            self.wind_speed,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub airport: String,
    pub period: NaiveDateTime,
    pub features: WeatherFeatures,
}

#[derive(Debug, Deserialize)]
struct WeatherRow {
    airport: String,
    period_iso: String,
    ceiling: f64,
    visibility: f64,
    vil: f64,
    temperature: f64,
    dew_point: f64,
    wind_dir: f64,
    wind_speed: f64,
}

/// Reads `airport,period_iso,ceiling,visibility,vil,temperature,dew_point,wind_dir,wind_speed`.
pub fn read_weather<R: Read>(reader: R) -> Result<Vec<WeatherRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize::<WeatherRow>().enumerate() {
        let line = k as u64 + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let features = WeatherFeatures {
            ceiling: row.ceiling,
            visibility: row.visibility,
            vil: row.vil,
            temperature: row.temperature,
            dew_point: row.dew_point,
            wind_direction: row.wind_dir,
            wind_speed: row.wind_speed,
        };
        if features.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: "weather features must be finite".into(),
            });
        }
        out.push(WeatherRecord {
            airport: row.airport,
            period: parse_timestamp(&row.period_iso).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?,
            features,
        });
    }
    Ok(out)
}

pub fn load_weather(path: impl AsRef<Path>) -> Result<Vec<WeatherRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_weather(file)
}

pub fn encode_one_hot(capacity: u32, max_capacity: u32) -> Result<Vec<f64>> {
    if capacity > max_capacity {
        return Err(Error::Validation(format!("capacity {capacity} exceeds maximum {max_capacity}")));
    }
    let mut v = vec![0.0; max_capacity as usize + 1];
    v[capacity as usize] = 1.0;
    Ok(v)
}

/// Per-feature training minimum and maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_normalizer(rows: &[Vec<f64>]) -> Result<NormalizationStats> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Validation("cannot fit a normalizer on an empty training set".into()))?;
    let mut min = first.clone();
    let mut max = first.clone();
    for r in rows {
        if r.len() != min.len() {
            return Err(Error::Dimension(format!("feature row of length {} (expected {})", r.len(), min.len())));
        }
        for (k, &v) in r.iter().enumerate() {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    Ok(NormalizationStats { min, max })
}

impl NormalizationStats {
    /// Affine map to `[0, 1]` with clipping; constant features map to 0.
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.min.len() {
            return Err(Error::Dimension(format!("feature row of length {} (expected {})", row.len(), self.min.len())));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let span = self.max[k] - self.min[k];
                if span > 0.0 {
                    ((v - self.min[k]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

pub fn apply_normalizer(stats: &NormalizationStats, row: &[f64]) -> Result<Vec<f64>> {
    stats.apply(row)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 300,
            batch_size: 16,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Fully connected network. `params` holds, per layer, the weights
/// (`out × in`, row-major) followed by the biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl MlpModel {
    pub fn num_params(layer_sizes: &[usize]) -> usize {
        layer_sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    pub fn zeros(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::Dimension(format!("invalid layer sizes {layer_sizes:?}")));
        }
        let n = Self::num_params(&layer_sizes);
        Ok(Self {
            layer_sizes,
            params: vec![0.0; n],
        })
    }

    /// He-uniform weights, zero biases.
    pub fn initialized(layer_sizes: Vec<usize>, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut off = 0;
        for w in m.layer_sizes.clone().windows(2) {
            let (fan_in, out) = (w[0], w[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let dist = Uniform::new(-limit, limit).expect("positive fan-in");
            for p in &mut m.params[off..off + out * fan_in] {
                *p = dist.sample(&mut rng);
            }
            off += out * fan_in + out;
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.params.len() != Self::num_params(&self.layer_sizes) {
            return Err(Error::Dimension(format!(
                "{} parameters for layer sizes {:?}",
                self.params.len(),
                self.layer_sizes
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation("model has non-finite parameters".into()));
        }
        Ok(())
    }

    /// Activations of every layer; the last entry holds softmax probabilities.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let last = self.layer_sizes.len() - 2;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let input = acts.last().unwrap();
            let mut z: Vec<f64> = (0..n_out)
                .map(|o| bias[o] + weights[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l == last {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
            off += n_in * n_out + n_out;
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!("input of length {} (expected {})", x.len(), self.input_dim())));
        }
        Ok(self.forward_all(x).pop().unwrap())
    }

    fn check_batch(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
        if xs.is_empty() || xs.len() != targets.len() {
            return Err(Error::Dimension(format!("{} inputs for {} targets", xs.len(), targets.len())));
        }
        for (x, t) in xs.iter().zip(targets) {
            if x.len() != self.input_dim() || t.len() != self.output_dim() {
                return Err(Error::Dimension(format!(
                    "example of shape ({}, {}) for a {}→{} network",
                    x.len(),
                    t.len(),
                    self.input_dim(),
                    self.output_dim()
                )));
            }
        }
        Ok(())
    }

    /// Mean cross-entropy `-Σ t log p` over the batch.
    pub fn loss(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        self.check_batch(xs, targets)?;
        Ok(xs
            .iter()
            .zip(targets)
            .map(|(x, t)| cross_entropy(&self.forward_all(x).pop().unwrap(), t))
            .sum::<f64>()
            / xs.len() as f64)
    }

    /// Mean loss and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        self.check_batch(xs, targets)?;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let n_layers = self.layer_sizes.len() - 1;
        let offsets: Vec<usize> = self
            .layer_sizes
            .windows(2)
            .scan(0, |off, w| {
                let start = *off;
                *off += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();
        for (x, t) in xs.iter().zip(targets) {
            let acts = self.forward_all(x);
            loss += cross_entropy(&acts[n_layers], t);
            // Softmax with cross-entropy: dL/dz = p * Σt - t.
            let mass: f64 = t.iter().sum();
            let mut delta: Vec<f64> = acts[n_layers].iter().zip(t).map(|(p, ti)| p * mass - ti).collect();
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                let off = offsets[l];
                let input = &acts[l];
                for o in 0..n_out {
                    let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += delta[o] * a;
                    }
                    grad[off + n_in * n_out + o] += delta[o];
                }
                if l > 0 {
                    let weights = &self.params[off..off + n_in * n_out];
                    delta = (0..n_in)
                        .map(|i| {
                            if input[i] > 0.0 {
                                (0..n_out).map(|o| weights[o * n_in + i] * delta[o]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        let n = xs.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, grad))
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

fn cross_entropy(p: &[f64], t: &[f64]) -> f64 {
    p.iter()
        .zip(t)
        .filter(|(_, &ti)| ti > 0.0)
        .map(|(&pi, &ti)| -ti * pi.max(f64::MIN_POSITIVE).ln())
        .sum()
}

/// Trains a network with hidden sizes [`HIDDEN_LAYERS`] from `examples`
/// of `(features, target distribution)`.
pub fn train(examples: &[(Vec<f64>, Vec<f64>)], hyper: &Hyper) -> Result<MlpModel> {
    let (x0, t0) = examples
        .first()
        .ok_or_else(|| Error::Validation("training needs at least one example".into()))?;
    let mut sizes = vec![x0.len()];
    sizes.extend(HIDDEN_LAYERS);
    sizes.push(t0.len());
    let model = MlpModel::initialized(sizes, hyper.seed)?;
    train_from(model, examples, hyper)
}

/// Continues training `model` with Adam; `epochs = 0` returns it unchanged.
pub fn train_from(mut model: MlpModel, examples: &[(Vec<f64>, Vec<f64>)], hyper: &Hyper) -> Result<MlpModel> {
    if hyper.batch_size == 0 || !(hyper.lr > 0.0) {
        return Err(Error::Validation("batch size and learning rate must be positive".into()));
    }
    let xs: Vec<Vec<f64>> = examples.iter().map(|e| e.0.clone()).collect();
    let ts: Vec<Vec<f64>> = examples.iter().map(|e| e.1.clone()).collect();
    model.check_batch(&xs, &ts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x5eed_0f_ba7c4);
    let mut m = vec![0.0; model.params.len()];
    let mut v = vec![0.0; model.params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let bt: Vec<Vec<f64>> = chunk.iter().map(|&i| ts[i].clone()).collect();
            let (loss, grad) = model.loss_and_gradient(&bx, &bt)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            step += 1;
            let c1 = 1.0 - hyper.beta1.powi(step);
            let c2 = 1.0 - hyper.beta2.powi(step);
            for k in 0..grad.len() {
                m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * grad[k];
                v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * grad[k] * grad[k];
                model.params[k] -= hyper.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + hyper.adam_eps);
            }
        }
        log::trace!("epoch {epoch}: loss {}", epoch_loss / xs.len() as f64);
    }
    Ok(model)
}

/// Predicted distribution over capacities `0..probs.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedPmf {
    pub probs: Vec<f64>,
}

impl PredictedPmf {
    /// Likeliest capacity (smallest on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for k in 1..self.probs.len() {
            if self.probs[k] > self.probs[best] {
                best = k;
            }
        }
        best
    }

    pub fn to_pmf(&self) -> Result<DiscretePmf> {
        DiscretePmf::over_range(self.probs.clone())
    }

    /// Shortest contiguous capacity range `[lo, hi]` holding at least
    /// `level` of the mass (within 1e-9). Ties go to the larger mass, then
    /// the lower start. Intervals for different levels need not be nested
    /// when the PMF has several modes.
    pub fn interval(&self, level: f64) -> (usize, usize) {
        let n = self.probs.len();
        let mut prefix = vec![0.0; n + 1];
        for k in 0..n {
            prefix[k + 1] = prefix[k] + self.probs[k];
        }
        for width in 1..=n {
            let mut best: Option<(usize, f64)> = None;
            for lo in 0..=n - width {
                let mass = prefix[lo + width] - prefix[lo];
                if mass >= level - 1e-9 && best.is_none_or(|(_, m)| mass > m + 1e-12) {
                    best = Some((lo, mass));
                }
            }
            if let Some((lo, _)) = best {
                return (lo, lo + width - 1);
            }
        }
        (0, n - 1)
    }
}

pub fn predict(model: &MlpModel, features: &[f64]) -> Result<PredictedPmf> {
    Ok(PredictedPmf {
        probs: model.forward(features)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub rmse: f64,
    pub cr: f64,
    pub acil_mean: f64,
    pub acil_std: f64,
}

/// RMSE of argmax predictions, coverage of the shortest `ci_level`
/// intervals, and mean and standard deviation of their lengths (`hi - lo`).
pub fn metrics(preds: &[PredictedPmf], actuals: &[u32], ci_level: f64) -> Result<ForecastMetrics> {
    if preds.is_empty() || preds.len() != actuals.len() {
        return Err(Error::Dimension(format!("{} predictions for {} actuals", preds.len(), actuals.len())));
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::Validation(format!("confidence level {ci_level} outside (0, 1)")));
    }
    let n = preds.len() as f64;
    let mut se = 0.0;
    let mut covered = 0usize;
    let mut lengths = Vec::with_capacity(preds.len());
    for (p, &a) in preds.iter().zip(actuals) {
        se += (p.argmax() as f64 - a as f64).powi(2);
        let (lo, hi) = p.interval(ci_level);
        if (lo..=hi).contains(&(a as usize)) {
            covered += 1;
        }
        lengths.push((hi - lo) as f64);
    }
    let mean = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    Ok(ForecastMetrics {
        rmse: (se / n).sqrt(),
        cr: covered as f64 / n,
        acil_mean: mean,
        acil_std: var.sqrt(),
    })
}

/// Seeded 80:20 split of `0..n` into (train, validation) indices. The
/// training part is never empty.
pub fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * 0.8).round() as usize).clamp(n.min(1), n);
    let val = idx.split_off(n_train);
    (idx, val)
}

/// Labelled rows of one airport and direction: weather features at each
/// observed period with the observed capacity.
pub fn build_dataset(weather: &[WeatherRecord], observations: &[CapacityObservation], airport: &str, direction: Direction) -> Vec<([f64; NUM_FEATURES], u32)> {
    let by_period: BTreeMap<NaiveDateTime, &WeatherRecord> = weather
        .iter()
        .filter(|w| w.airport == airport)
        .map(|w| (w.period, w))
        .collect();
    let mut rows: Vec<(NaiveDateTime, [f64; NUM_FEATURES], u32)> = observations
        .iter()
        .filter(|o| o.airport == airport && o.direction == direction)
        .filter_map(|o| by_period.get(&o.period).map(|w| (o.period, w.features.to_array(), o.capacity_hat)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.into_iter().map(|(_, f, c)| (f, c)).collect()
}

/// Trained predictor for one airport and direction with its normalizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityModel {
    pub format_version: u32,
    pub airport: String,
    pub direction: Direction,
    pub max_capacity: u32,
    pub normalization: NormalizationStats,
    pub network: MlpModel,
    pub validation: Option<ForecastMetrics>,
}

impl CapacityModel {
    /// Fits the normalizer and network on an 80:20 split of `data` and
    /// scores the held-out part at `ci_level`.
    pub fn fit(airport: &str, direction: Direction, data: &[([f64; NUM_FEATURES], u32)], hyper: &Hyper, ci_level: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Validation(format!("no labelled rows for {airport}/{direction}")));
        }
        let max_capacity = data.iter().map(|d| d.1).max().unwrap();
        let (train_idx, val_idx) = split_indices(data.len(), hyper.seed);
        let raw: Vec<Vec<f64>> = train_idx.iter().map(|&i| data[i].0.to_vec()).collect();
        let normalization = fit_normalizer(&raw)?;
        let examples = train_idx
            .iter()
            .map(|&i| Ok((normalization.apply(&data[i].0)?, encode_one_hot(data[i].1, max_capacity)?)))
            .collect::<Result<Vec<_>>>()?;
        let network = train(&examples, hyper)?;
        let mut model = Self {
            format_version: MODEL_FORMAT_VERSION,
            airport: airport.to_string(),
            direction,
            max_capacity,
            normalization,
            network,
            validation: None,
        };
        if !val_idx.is_empty() {
            let preds = val_idx
                .iter()
                .map(|&i| model.predict_raw(&data[i].0))
                .collect::<Result<Vec<_>>>()?;
            let actuals: Vec<u32> = val_idx.iter().map(|&i| data[i].1).collect();
            model.validation = Some(metrics(&preds, &actuals, ci_level)?);
        }
        Ok(model)
    }

    /// Predicts from unnormalized features.
    pub fn predict_raw(&self, features: &[f64]) -> Result<PredictedPmf> {
        predict(&self.network, &self.normalization.apply(features)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!("unsupported model format version {}", self.format_version)));
        }
        self.network.validate()?;
        if self.network.output_dim() != self.max_capacity as usize + 1 || self.network.input_dim() != self.normalization.min.len() {
            return Err(Error::Dimension("model shape disagrees with its capacity range or normalizer".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_examples() {
        assert_eq!(encode_one_hot(2, 5).unwrap(), vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(encode_one_hot(0, 0).unwrap(), vec![1.0]);
        assert_eq!(encode_one_hot(5, 5).unwrap(), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(encode_one_hot(6, 5).is_err());
    }

    #[test]
    fn normalizer_maps_and_clips() {
        let stats = fit_normalizer(&[vec![10.0, 4.0], vec![30.0, 4.0]]).unwrap();
        assert_eq!(stats.apply(&[20.0, 4.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(stats.apply(&[35.0, 9.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(stats.apply(&[-5.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(fit_normalizer(&[]).is_err());
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let m = MlpModel::zeros(vec![7, 17, 32, 4]).unwrap();
        let p = predict(&m, &[0.3; 7]).unwrap();
        assert!(p.probs.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let ex = vec![(vec![0.1; 7], encode_one_hot(1, 3).unwrap())];
        let hyper = Hyper {
            epochs: 0,
            seed: 9,
            ..Hyper::default()
        };
        let trained = train(&ex, &hyper).unwrap();
        assert_eq!(trained, MlpModel::initialized(vec![7, 17, 32, 4], 9).unwrap());
    }

    #[test]
    fn point_mass_interval() {
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let p = PredictedPmf { probs };
        assert_eq!(p.interval(0.9), (5, 5));
        let m = metrics(&[p.clone(), p], &[5, 6], 0.9).unwrap();
        assert_eq!(m.cr, 0.5);
        assert_eq!(m.acil_mean, 0.0);
        assert_eq!(m.rmse, (0.5f64).sqrt());
    }

    #[test]
    fn metrics_reject_bad_input() {
        assert!(metrics(&[], &[], 0.9).is_err());
        let p = PredictedPmf { probs: vec![1.0] };
        assert!(metrics(&[p.clone()], &[0, 1], 0.9).is_err());
        assert!(metrics(&[p], &[0], 1.0).is_err());
    }

    #[test]
    fn split_is_eighty_twenty() {
        let (t, v) = split_indices(20, 1);
        assert_eq!((t.len(), v.len()), (16, 4));
        let (t, v) = split_indices(1, 1);
        assert_eq!((t.len(), v.len()), (1, 0));
        assert_eq!(split_indices(20, 1), split_indices(20, 1));
    }
}
