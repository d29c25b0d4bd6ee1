use ndarray::Array2;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::mlp::{backward, forward_cached, split_logits, MlpParams};
use crate::error::{Error, Result};
use crate::labels::LabelSpace;
use crate::losses::{
    batch_mean, cce_loss, compute_alpha, pairwise_sum, softmax_head, total_loss, Beta, LossConfig, LossResult,
    PenaltyMode,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossMode {
    #[serde(rename = "abstain+static")]
    AbstainStatic,
    #[serde(rename = "abstain+dynamic")]
    AbstainDynamic,
    #[serde(rename = "ce+cce")]
    CeCce,
    #[serde(rename = "ce")]
    Ce,
}

impl LossMode {
    pub const ALL: [LossMode; 4] = [LossMode::AbstainStatic, LossMode::AbstainDynamic, LossMode::CeCce, LossMode::Ce];

    pub fn name(self) -> &'static str {
        match self {
            LossMode::AbstainStatic => "abstain+static",
            LossMode::AbstainDynamic => "abstain+dynamic",
            LossMode::CeCce => "ce+cce",
            LossMode::Ce => "ce",
        }
    }

    /// The penalty branches are meaningless without outlier points.
    pub fn requires_outliers(self) -> bool {
        matches!(self, LossMode::AbstainStatic | LossMode::AbstainDynamic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: LossMode,
    pub learning_rate: f64,
    pub epochs: usize,
    pub scenes_per_batch: usize,
    pub hidden: Vec<usize>,
    /// Random subset of points drawn from each scene per step; 0 uses all.
    pub points_per_scene: usize,
    /// How β is stepped in dynamic mode.
    pub beta_step: BetaStep,
    /// Rescale each step's weight gradient to at most this global L2 norm;
    /// 0 disables clipping.
    pub grad_clip: f64,
}

/// Parametrization in which the SGD step on β is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaStep {
    /// `β ← β − lr·∂ℓ/∂β`, the same step as the network weights.
    Shared,
    /// Step on the effective margin `β·m` instead, i.e.
    /// `β ← β − lr·(∂ℓ/∂β)/m²`.
    Margin,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: LossMode::AbstainStatic,
            learning_rate: 0.05,
            epochs: 20,
            scenes_per_batch: 4,
            hidden: vec![64, 64],
            points_per_scene: 0,
            beta_step: BetaStep::Shared,
            grad_clip: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "train.learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("train.epochs must be >= 1".into()));
        }
        if !(self.grad_clip >= 0.0 && self.grad_clip.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "train.grad_clip must be finite and >= 0, got {}",
                self.grad_clip
            )));
        }
        if self.scenes_per_batch == 0 {
            return Err(Error::InvalidInput("train.scenes_per_batch must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidInput("train.hidden sizes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Features and labels of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: Array2<f64>,
    pub labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub beta: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: MlpParams,
    pub beta: Beta,
    pub log: Vec<EpochLog>,
}

impl TrainedModel {
    pub fn log_csv(&self) -> String {
        let mut s = String::from("epoch,loss,beta_in,beta_rout,beta_sout\n");
        for e in &self.log {
            s.push_str(&format!("{},{},{},{},{}\n", e.epoch, e.loss, e.beta[0], e.beta[1], e.beta[2]));
        }
        s
    }
}

fn head_loss(mode: LossMode, logits: &Array2<f64>, labels: &[u32], cfg: &LossConfig, beta: Beta) -> Result<LossResult> {
    let head = split_logits(logits)?;
    match mode {
        LossMode::Ce => cce_loss(&head, labels, 0.0),
        LossMode::CeCce => cce_loss(&head, labels, cfg.lambda_cce),
        LossMode::AbstainStatic | LossMode::AbstainDynamic => {
            let p = softmax_head(&head);
            let a = compute_alpha(&head.inlier);
            let penalty = if mode == LossMode::AbstainStatic { PenaltyMode::Static } else { PenaltyMode::Dynamic };
            total_loss(&p, &a, labels, cfg, penalty, beta)
        }
    }
}

fn subsample(sample: &TrainingSample, k: usize, rng: &mut RngStream) -> TrainingSample {
    let n = sample.labels.len();
    if k == 0 || k >= n {
        return sample.clone();
    }
    let mut idx = index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    TrainingSample {
        features: sample.features.select(ndarray::Axis(0), &idx),
        labels: idx.iter().map(|&i| sample.labels[i]).collect(),
    }
}

/// Plain minibatch SGD over scenes. β shares the weights' step size and is
/// only updated in dynamic mode.
pub fn train(
    data: &[TrainingSample],
    classes: u32,
    cfg: &TrainConfig,
    loss_cfg: &LossConfig,
    rng: &mut RngStream,
) -> Result<TrainedModel> {
    cfg.validate()?;
    loss_cfg.validate()?;
    let space = LabelSpace::new(classes)?;
    if data.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    let dim = data[0].features.ncols();
    for (k, s) in data.iter().enumerate() {
        if s.features.ncols() != dim || s.features.nrows() != s.labels.len() || s.labels.is_empty() {
            return Err(Error::Shape(format!("training scene {k} has inconsistent features/labels")));
        }
        space.check_all(&s.labels)?;
    }
    if cfg.mode.requires_outliers() && !data.iter().any(|s| s.labels.iter().any(|&l| space.is_outlier(l))) {
        return Err(Error::InvalidInput(format!(
            "loss mode {} needs outlier labels ({} or {}) in the training data",
            cfg.mode.name(),
            space.resized_outlier(),
            space.synth_outlier()
        )));
    }

    let mut params = MlpParams::init(dim, &cfg.hidden, classes as usize, rng)?;
    let mut beta = Beta::from(loss_cfg.beta_init);
    let mut log = Vec::with_capacity(cfg.epochs);
    let lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut batch_values = Vec::new();
        for chunk in order.chunks(cfg.scenes_per_batch) {
            let batch: Vec<TrainingSample> =
                chunk.iter().map(|&k| subsample(&data[k], cfg.points_per_scene, rng)).collect();
            let caches = batch.iter().map(|s| forward_cached(&s.features, &params)).collect::<Result<Vec<_>>>()?;
            if caches.iter().any(|c| !c.logits().iter().all(|v| v.is_finite())) {
                return Err(Error::Diverged { epoch, last_good: (epoch > 1).then(|| epoch - 1) });
            }
            let results = batch
                .iter()
                .zip(&caches)
                .map(|(s, c)| head_loss(cfg.mode, c.logits(), &s.labels, loss_cfg, beta))
                .collect::<Result<Vec<_>>>()?;
            let (value, grad_beta, scaled) = batch_mean(results)?;
            if !value.is_finite() {
                return Err(Error::Diverged { epoch, last_good: (epoch > 1).then(|| epoch - 1) });
            }
            batch_values.push(value);

            let mut grads = None::<Vec<super::mlp::Layer>>;
            for (cache, r) in caches.iter().zip(&scaled) {
                let g = backward(cache, &params, (&r.grad_inlier, &r.grad_outlier));
                match &mut grads {
                    None => grads = Some(g),
                    Some(acc) => {
                        for (a, b) in acc.iter_mut().zip(&g) {
                            a.weight += &b.weight;
                            a.bias += &b.bias;
                        }
                    }
                }
            }
            let grads = grads.expect("non-empty batch");
            let mut step = lr;
            if cfg.grad_clip > 0.0 {
                let sq: Vec<f64> = grads
                    .iter()
                    .flat_map(|g| [g.weight.iter().map(|v| v * v).sum::<f64>(), g.bias.iter().map(|v| v * v).sum()])
                    .collect();
                let norm = pairwise_sum(&sq).sqrt();
                if norm > cfg.grad_clip {
                    step *= cfg.grad_clip / norm;
                }
            }
            for (layer, g) in params.layers.iter_mut().zip(&grads) {
                layer.weight.scaled_add(-step, &g.weight);
                layer.bias.scaled_add(-step, &g.bias);
            }
            if cfg.mode == LossMode::AbstainDynamic {
                if let Some(gb) = grad_beta {
                    let mut b = beta.to_array();
                    let margins = [loss_cfg.m_in, loss_cfg.m_rout, loss_cfg.m_sout];
                    for k in 0..3 {
                        let scale = match cfg.beta_step {
                            BetaStep::Shared => 1.0,
                            BetaStep::Margin if margins[k] != 0.0 => 1.0 / (margins[k] * margins[k]),
                            BetaStep::Margin => 1.0,
                        };
                        b[k] -= lr * scale * gb[k];
                        if loss_cfg.clamp_beta {
                            b[k] = b[k].max(0.0);
                        }
                    }
                    beta = Beta::from(b);
                }
            }
        }
        let loss = pairwise_sum(&batch_values) / batch_values.len() as f64;
        let finite_params = params.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()));
        if !loss.is_finite() || !finite_params {
            return Err(Error::Diverged { epoch, last_good: (epoch > 1).then(|| epoch - 1) });
        }
        log.push(EpochLog { epoch, loss, beta: beta.to_array() });
    }
    Ok(TrainedModel { params, beta, log })
}
