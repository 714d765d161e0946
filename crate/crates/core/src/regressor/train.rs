use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureSet, FeatureVector, FEATURE_LEN};
use super::mlp::MlpParams;
use super::Model;
use crate::codec::FrustumCode;
use crate::error::{Error, Result};
use crate::loss::{loss_3d, CodeTarget, LossWeights};
use crate::scene::Box2D;

pub const LAYER_SIZES: [usize; 4] = [FEATURE_LEN, 64, 64, 8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning rate at the last epoch as a fraction of the initial one
    /// (cosine schedule).
    pub final_lr_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossWeights,
    pub feature_set: FeatureSet,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            final_lr_fraction: 0.05,
            epochs: 60,
            batch_size: 32,
            seed: 0,
            loss: LossWeights::default(),
            feature_set: FeatureSet::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("train.learning_rate", "must be > 0"));
        }
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be >= 1"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0) {
            return Err(Error::config("train.beta1/beta2/epsilon", "out of range"));
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return Err(Error::config("train.final_lr_fraction", "must be in (0, 1]"));
        }
        self.loss.validate()
    }
}

/// One training example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub target: FrustumCode,
    pub box2d: Box2D,
}

/// Mean loss terms over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub loc: f64,
    pub dim: f64,
    pub ori: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train: LossTerms,
    pub val: Option<LossTerms>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochMetrics>,
}

pub fn evaluate_loss(model: &Model, samples: &[Sample], weights: &LossWeights) -> Result<LossTerms> {
    let mut acc = LossTerms::default();
    if samples.is_empty() {
        return Ok(acc);
    }
    for s in samples {
        let x = s.features.masked(model.feature_set).values;
        let q = FrustumCode::from_slice(&model.params.forward(&x)?)?;
        let l = loss_3d(&q, &CodeTarget::from(&s.target), weights);
        acc.loc += l.loc;
        acc.dim += l.dim;
        acc.ori += l.ori;
        acc.total += l.total;
    }
    let n = samples.len() as f64;
    Ok(LossTerms {
        loc: acc.loc / n,
        dim: acc.dim / n,
        ori: acc.ori / n,
        total: acc.total / n,
    })
}

/// Per-feature shift and gain that standardize the training inputs.
/// Constant features get zero gain.
fn standardizer(inputs: &[[f64; FEATURE_LEN]]) -> ([f64; FEATURE_LEN], [f64; FEATURE_LEN]) {
    let n = inputs.len() as f64;
    let mut mean = [0.0; FEATURE_LEN];
    let mut gain = [0.0; FEATURE_LEN];
    for j in 0..FEATURE_LEN {
        mean[j] = inputs.iter().map(|x| x[j]).sum::<f64>() / n;
        let var = inputs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
        if var.sqrt() > STD_FLOOR {
            gain[j] = 1.0 / var.sqrt();
        }
    }
    (mean, gain)
}

/// Features with a smaller spread than this are treated as constant.
const STD_FLOOR: f64 = 1e-9;

/// Adam on the mean per-sample loss over standardized inputs. The returned
/// model takes raw features. Deterministic for a fixed seed and sample
/// order.
pub fn train(samples: &[Sample], val: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw: Vec<[f64; FEATURE_LEN]> = samples
        .iter()
        .map(|s| s.features.masked(cfg.feature_set).values)
        .collect();
    let (shift, gain) = standardizer(&raw);
    let inputs: Vec<[f64; FEATURE_LEN]> = raw
        .iter()
        .map(|x| std::array::from_fn(|j| (x[j] - shift[j]) * gain[j]))
        .collect();
    let mut net = MlpParams::init(&LAYER_SIZES, &mut rng);
    let raw_model = |net: &MlpParams| -> Result<Model> {
        Ok(Model {
            params: net.fold_input_affine(&shift, &gain)?,
            feature_set: cfg.feature_set,
        })
    };
    let targets: Vec<CodeTarget> = samples.iter().map(|s| CodeTarget::from(&s.target)).collect();

    let n_params = net.num_params();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let progress = if cfg.epochs > 1 {
            epoch as f64 / (cfg.epochs - 1) as f64
        } else {
            0.0
        };
        let floor = cfg.final_lr_fraction;
        let lr = cfg.learning_rate
            * (floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()));
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = MlpParams::zeros(&LAYER_SIZES);
            for &i in batch {
                let cache = net.forward_cached(&inputs[i])?;
                let q = FrustumCode::from_slice(cache.output())?;
                let l = loss_3d(&q, &targets[i], &cfg.loss);
                net.backward_into(&cache, &l.gradient, &mut grad)?;
            }
            let scale = 1.0 / batch.len() as f64;
            let g = grad.flat();
            step += 1;
            let bc1 = 1.0 - cfg.beta1.powi(step);
            let bc2 = 1.0 - cfg.beta2.powi(step);
            net.for_each_param_mut(|j, p| {
                let gj = g[j] * scale;
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                *p -= lr * mh / (vh.sqrt() + cfg.epsilon);
            });
        }
        let model = raw_model(&net)?;
        let train_terms = evaluate_loss(&model, samples, &cfg.loss)?;
        let val_terms = if val.is_empty() {
            None
        } else {
            Some(evaluate_loss(&model, val, &cfg.loss)?)
        };
        log::debug!("epoch {epoch}: train {:.5}", train_terms.total);
        history.push(EpochMetrics {
            epoch,
            train: train_terms,
            val: val_terms,
        });
    }
    Ok(TrainOutcome {
        model: raw_model(&net)?,
        history,
    })
}

/// Training history as CSV.
pub fn history_csv(history: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,loc,dim,ori,total,val_loc,val_dim,val_ori,val_total\n");
    for h in history {
        let t = h.train;
        out.push_str(&format!("{},{:.9},{:.9},{:.9},{:.9}", h.epoch, t.loc, t.dim, t.ori, t.total));
        match h.val {
            Some(v) => out.push_str(&format!(",{:.9},{:.9},{:.9},{:.9}\n", v.loc, v.dim, v.ori, v.total)),
            None => out.push_str(",,,,\n"),
        }
    }
    out
}
