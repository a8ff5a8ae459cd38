//! Logistic regression over [`FeatureVector`]s.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{feature_names, FeatureVector, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Examples per update; 0 means the whole training set.
    pub batch: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 20,
            batch: 32,
            l2: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Precision target (as written, e.g. "0.95") to score threshold.
    pub thresholds: BTreeMap<String, f64>,
    /// Mean training loss after each epoch.
    #[serde(default)]
    pub epoch_losses: Vec<f64>,
}

impl Default for ClassifierModel {
    fn default() -> Self {
        Self::zero()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl ClassifierModel {
    pub fn zero() -> Self {
        Self {
            feature_names: feature_names(),
            weights: vec![0.0; FEATURE_DIM],
            bias: 0.0,
            thresholds: BTreeMap::new(),
            epoch_losses: Vec::new(),
        }
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }

    pub fn threshold(&self, precision_target: f64) -> Option<f64> {
        self.thresholds.get(&precision_key(precision_target)).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        text::write_string(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: Self = serde_json::from_str(&text::read_to_string(path)?)?;
        if model.weights.len() != FEATURE_DIM || model.feature_names.len() != FEATURE_DIM {
            return Err(Error::Config(format!(
                "{}: expected {FEATURE_DIM} weights, found {}",
                path.display(),
                model.weights.len()
            )));
        }
        Ok(model)
    }
}

pub fn precision_key(target: f64) -> String {
    format!("{target}")
}

/// Mean logistic loss plus `l2/2 * |w|^2`, and its gradient with respect to
/// the weights and the bias.
pub fn loss_and_gradient(weights: &[f64], bias: f64, batch: &[(&FeatureVector, u8)], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = batch.len().max(1) as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (x, y) in batch {
        let z = x.dot(weights) + bias;
        let y = *y as f64;
        loss += softplus(z) - y * z;
        let r = (sigmoid(z) - y) / n;
        for (g, v) in grad.iter_mut().zip(&x.dense) {
            *g += r * v;
        }
        for &i in &x.hashed {
            grad[i as usize] += r;
        }
        grad_b += r;
    }
    let reg: f64 = weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (loss / n + reg, grad, grad_b)
}

/// Requires both labels. Batches are drawn from a seeded shuffle each epoch.
pub fn train_on_features(examples: &[(FeatureVector, u8)], hyper: &TrainHyper) -> Result<ClassifierModel> {
    let pos = examples.iter().filter(|(_, y)| *y == 1).count();
    if pos == 0 {
        return Err(Error::SingleClass(0));
    }
    if pos == examples.len() {
        return Err(Error::SingleClass(1));
    }
    let mut model = ClassifierModel::zero();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let batch = if hyper.batch == 0 { examples.len() } else { hyper.batch };
    let all: Vec<(&FeatureVector, u8)> = examples.iter().map(|(x, y)| (x, *y)).collect();
    for _ in 0..hyper.epochs {
        if batch < examples.len() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let b: Vec<(&FeatureVector, u8)> = chunk.iter().map(|&i| all[i]).collect();
            let (_, grad, grad_b) = loss_and_gradient(&model.weights, model.bias, &b, hyper.l2);
            if hyper.l2 > 0.0 {
                for (w, g) in model.weights.iter_mut().zip(&grad) {
                    *w -= hyper.learning_rate * g;
                }
            } else {
                // only touched coordinates have non-zero gradient
                let mut touched: Vec<usize> = (0..super::features::DENSE_DIM).collect();
                touched.extend(b.iter().flat_map(|(x, _)| x.hashed.iter().map(|&i| i as usize)));
                touched.sort_unstable();
                touched.dedup();
                for i in touched {
                    model.weights[i] -= hyper.learning_rate * grad[i];
                }
            }
            model.bias -= hyper.learning_rate * grad_b;
        }
        let (loss, _, _) = loss_and_gradient(&model.weights, model.bias, &all, hyper.l2);
        model.epoch_losses.push(loss);
    }
    Ok(model)
}
