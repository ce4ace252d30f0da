//! One-vs-rest logistic regression over hashed features.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, HashDim, SparseVector, MIN_TRAIN_HASH_DIM};
use super::{MentionContext, TrainingExample, TyperError};
use crate::type_system::TypeMap;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupWeights {
    pub name: String,
    pub bias: f64,
    pub weights: Vec<f64>,
}

/// Per-group linear scorers over a shared hashed feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TyperModel {
    pub version: u32,
    pub hash_dim: u32,
    pub window_k: usize,
    pub seed: u64,
    pub groups: Vec<GroupWeights>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `y`, computed from the logit.
pub(crate) fn logistic_loss(z: f64, y: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if y {
        softplus - z
    } else {
        softplus
    }
}

impl TyperModel {
    /// All-zero model: every score is exactly 0.5.
    pub fn zeros(groups: &[String], hash_dim: HashDim, window_k: usize, seed: u64) -> Self {
        Self {
            version: MODEL_VERSION,
            hash_dim: hash_dim.get(),
            window_k,
            seed,
            groups: groups
                .iter()
                .map(|name| GroupWeights {
                    name: name.clone(),
                    bias: 0.0,
                    weights: vec![0.0; hash_dim.get() as usize],
                })
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TyperError> {
        let file = std::fs::File::open(path)?;
        let model: Self = serde_json::from_reader(std::io::BufReader::new(file))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TyperError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), TyperError> {
        if self.version != MODEL_VERSION {
            return Err(TyperError::InvalidModel(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        HashDim::new(self.hash_dim).map_err(|e| TyperError::InvalidModel(e.to_string()))?;
        let mut names = BTreeSet::new();
        for g in &self.groups {
            if !names.insert(g.name.as_str()) {
                return Err(TyperError::InvalidModel(format!("duplicate group {}", g.name)));
            }
            if g.weights.len() != self.hash_dim as usize {
                return Err(TyperError::InvalidModel(format!(
                    "group {} has {} weights",
                    g.name,
                    g.weights.len()
                )));
            }
            if !g.bias.is_finite() || g.weights.iter().any(|w| !w.is_finite()) {
                return Err(TyperError::InvalidModel(format!(
                    "group {} has non-finite weights",
                    g.name
                )));
            }
        }
        Ok(())
    }

    /// Fails unless the model's groups are exactly the type map's groups, in order.
    pub fn check_groups(&self, type_map: &TypeMap) -> Result<(), TyperError> {
        let ours: Vec<&str> = self.group_names().collect();
        let theirs: Vec<&str> = type_map.groups().iter().map(String::as_str).collect();
        if ours != theirs {
            return Err(TyperError::InvalidModel(format!(
                "model has {} groups that do not match the type map's {}",
                ours.len(),
                theirs.len()
            )));
        }
        Ok(())
    }

    pub fn group_names(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|g| g.name.as_str())
    }

    pub fn dim(&self) -> HashDim {
        HashDim::new(self.hash_dim).expect("validated model")
    }

    pub fn logits(&self, x: &SparseVector) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| g.bias + x.iter().map(|&(i, v)| g.weights[i as usize] * v).sum::<f64>())
            .collect()
    }

    /// Per-group probabilities in model group order.
    pub fn predict_scores(&self, ctx: &MentionContext) -> Vec<f64> {
        self.logits(&featurize(ctx, self.dim()))
            .into_iter()
            .map(sigmoid)
            .collect()
    }
}

/// Gradient of the per-example objective with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Loss `sum_g BCE(sigmoid(w_g.x + b_g), y_g) + l2/2 * sum_g |w_g|^2` for one
/// example, and its analytic gradient.
pub fn loss_and_gradient(model: &TyperModel, x: &SparseVector, labels: &[bool], l2: f64) -> (f64, Gradient) {
    let logits = model.logits(x);
    let mut loss = 0.0;
    let mut grad = Gradient {
        weights: Vec::with_capacity(model.groups.len()),
        bias: Vec::new(),
    };
    for ((g, &z), &y) in model.groups.iter().zip(&logits).zip(labels) {
        loss += logistic_loss(z, y) + 0.5 * l2 * g.weights.iter().map(|w| w * w).sum::<f64>();
        let residual = sigmoid(z) - if y { 1.0 } else { 0.0 };
        let mut gw: Vec<f64> = g.weights.iter().map(|w| l2 * w).collect();
        for &(i, v) in x {
            gw[i as usize] += residual * v;
        }
        grad.weights.push(gw);
        grad.bias.push(residual);
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hash_dim: u32,
    pub window_k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hash_dim: 1 << 14,
            window_k: 64,
            epochs: 10,
            learning_rate: 0.5,
            l2: 1e-6,
            seed: 42,
            batch_size: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TyperError> {
        HashDim::new(self.hash_dim)?;
        if self.hash_dim < MIN_TRAIN_HASH_DIM {
            return Err(TyperError::InvalidConfig(format!(
                "hash_dim must be at least {MIN_TRAIN_HASH_DIM}"
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TyperError::InvalidConfig(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TyperError::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0 && self.learning_rate * self.l2 < 1.0) {
            return Err(TyperError::InvalidConfig(
                "l2 must be >= 0 with learning_rate * l2 < 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TyperModel,
    /// Full-dataset objective after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Weight vectors stored as `scale * v` so that L2 decay is O(1) per step.
struct ScaledWeights {
    scale: f64,
    v: Vec<f64>,
    bias: f64,
}

impl ScaledWeights {
    fn logit(&self, x: &SparseVector) -> f64 {
        self.bias + self.scale * x.iter().map(|&(i, val)| self.v[i as usize] * val).sum::<f64>()
    }

    fn sq_norm(&self) -> f64 {
        self.scale * self.scale * self.v.iter().map(|w| w * w).sum::<f64>()
    }

    fn materialize(self, name: String) -> GroupWeights {
        let scale = self.scale;
        GroupWeights {
            name,
            bias: self.bias,
            weights: self.v.into_iter().map(|w| w * scale).collect(),
        }
    }
}

/// Trains one logistic scorer per group with mini-batch SGD.
///
/// Examples are shuffled every epoch by a ChaCha8 stream seeded from
/// `config.seed`, so a fixed seed gives a bit-identical model. Passing `init`
/// continues from an existing model (pretrain, then fine-tune).
pub fn train(
    dataset: &[TrainingExample],
    groups: &[String],
    config: &TrainConfig,
    init: Option<&TyperModel>,
) -> Result<TrainOutcome, TyperError> {
    if dataset.is_empty() {
        return Err(TyperError::EmptyDataset);
    }
    config.validate()?;
    let dim = HashDim::new(config.hash_dim)?;
    let start = match init {
        Some(m) => {
            m.validate()?;
            if m.hash_dim != config.hash_dim || m.window_k != config.window_k {
                return Err(TyperError::ConfigMismatch(format!(
                    "init model has hash_dim {} / window_k {}, config has {} / {}",
                    m.hash_dim, m.window_k, config.hash_dim, config.window_k
                )));
            }
            if !m.group_names().eq(groups.iter().map(String::as_str)) {
                return Err(TyperError::ConfigMismatch("init model groups differ".into()));
            }
            m.clone()
        }
        None => TyperModel::zeros(groups, dim, config.window_k, config.seed),
    };

    let features: Vec<SparseVector> = dataset.iter().map(|ex| featurize(&ex.context, dim)).collect();
    let labels: Vec<Vec<bool>> = dataset
        .iter()
        .map(|ex| {
            for l in &ex.labels {
                if !groups.contains(l) {
                    return Err(TyperError::UnknownGroup {
                        group: l.clone(),
                        line: 0,
                    });
                }
            }
            Ok(groups.iter().map(|g| ex.labels.contains(g)).collect())
        })
        .collect::<Result<_, _>>()?;

    let mut params: Vec<ScaledWeights> = start
        .groups
        .into_iter()
        .map(|g| ScaledWeights {
            scale: 1.0,
            v: g.weights,
            bias: g.bias,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let decay = 1.0 - config.learning_rate * config.l2;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let step = config.learning_rate / batch.len() as f64;
            // gradients for the whole batch are taken at the pre-update weights
            let batch_residuals: Vec<Vec<f64>> = batch
                .iter()
                .map(|&ex| {
                    params
                        .iter()
                        .zip(&labels[ex])
                        .map(|(p, &y)| sigmoid(p.logit(&features[ex])) - if y { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            for (gi, p) in params.iter_mut().enumerate() {
                p.scale *= decay;
                if p.scale < 1e-9 {
                    p.v.iter_mut().for_each(|w| *w *= p.scale);
                    p.scale = 1.0;
                }
                for (k, &ex) in batch.iter().enumerate() {
                    let r = batch_residuals[k][gi];
                    if r == 0.0 {
                        continue;
                    }
                    let coef = step * r / p.scale;
                    for &(i, val) in &features[ex] {
                        p.v[i as usize] -= coef * val;
                    }
                    p.bias -= step * r;
                }
            }
        }

        let data_loss: f64 = features
            .iter()
            .zip(&labels)
            .map(|(x, y)| {
                params
                    .iter()
                    .zip(y)
                    .map(|(p, &yy)| logistic_loss(p.logit(x), yy))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / dataset.len() as f64;
        let penalty: f64 = 0.5 * config.l2 * params.iter().map(ScaledWeights::sq_norm).sum::<f64>();
        let loss = data_loss + penalty;
        if !loss.is_finite() || params.iter().any(|p| !p.bias.is_finite() || !p.scale.is_finite()) {
            return Err(TyperError::NumericalDivergence { epoch });
        }
        log::debug!("epoch {epoch}: loss {loss:.6}");
        epoch_losses.push(loss);
    }

    let groups_out: Vec<GroupWeights> = params
        .into_iter()
        .zip(groups)
        .map(|(p, name)| p.materialize(name.clone()))
        .collect();
    if groups_out.iter().any(|g| g.weights.iter().any(|w| !w.is_finite())) {
        return Err(TyperError::NumericalDivergence {
            epoch: config.epochs.saturating_sub(1),
        });
    }
    Ok(TrainOutcome {
        model: TyperModel {
            version: MODEL_VERSION,
            hash_dim: config.hash_dim,
            window_k: config.window_k,
            seed: config.seed,
            groups: groups_out,
        },
        epoch_losses,
    })
}
