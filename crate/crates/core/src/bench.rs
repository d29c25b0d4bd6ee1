//! Desk-scale benchmark comparing the training objectives.
//!
//! Procedural sweeps (ground, boxes, cylinders) are split into train and
//! eval scenes. Training scenes get outliers from the resize baseline and
//! from one asset family; eval scenes get outliers from a different, held-out
//! family. Every loss mode is trained on the same data per seed and scored by
//! AUPR/AUROC of `p^o` on the eval points.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::procedural::{family_assets, AssetFamily};
use crate::io::{generate_scan, LayoutConfig, ScanConfig};
use crate::labels::LabelSpace;
use crate::losses::{softmax_head, LossConfig};
use crate::metrics::{aupr, auroc, ScoredPoint};
use crate::model::{
    forward, predict_classes, score_outlier_prob, train, training_sample, FeatureConfig, LossMode, TrainConfig,
    TrainedModel, TrainingSample,
};
use crate::rng::{RngStream, ASSET_STREAM, SCAN_STREAM, SYNTH_STREAM, TRAIN_STREAM};
use crate::scene::Scene;
use crate::synthesis::{augment_scene, SynthesisConfig, SynthesisMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub scans: usize,
    pub eval_fraction: f64,
    pub seeds: Vec<u64>,
    pub modes: Vec<LossMode>,
    pub classes: u32,
    pub beams: usize,
    pub azimuth_step_deg: f64,
    pub layout: LayoutConfig,
    pub train_family: AssetFamily,
    pub eval_family: AssetFamily,
    pub train_synthesis: SynthesisConfig,
    pub eval_synthesis: SynthesisConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub loss: LossConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scans: 200,
            eval_fraction: 0.2,
            seeds: vec![0, 1, 2, 3, 4],
            modes: LossMode::ALL.to_vec(),
            classes: 3,
            beams: 16,
            azimuth_step_deg: 1.0,
            layout: LayoutConfig::default(),
            train_family: AssetFamily::Round,
            eval_family: AssetFamily::Angular,
            train_synthesis: SynthesisConfig { mode: SynthesisMode::Both, ..SynthesisConfig::default() },
            eval_synthesis: SynthesisConfig { mode: SynthesisMode::Asset, ..SynthesisConfig::default() },
            features: FeatureConfig::default(),
            train: TrainConfig {
                epochs: 12,
                learning_rate: 0.05,
                scenes_per_batch: 4,
                hidden: vec![32, 32],
                points_per_scene: 1024,
                grad_clip: 1.0,
                ..TrainConfig::default()
            },
            loss: LossConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scans < 2 {
            return Err(Error::InvalidInput("bench.scans must be >= 2".into()));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::InvalidInput("bench.eval_fraction must lie in (0, 1)".into()));
        }
        if self.seeds.is_empty() || self.modes.is_empty() {
            return Err(Error::InvalidInput("bench.seeds and bench.modes must be non-empty".into()));
        }
        if self.train_family == self.eval_family {
            return Err(Error::InvalidInput("bench eval family must differ from the training family".into()));
        }
        self.train_synthesis.validate()?;
        self.eval_synthesis.validate()?;
        self.features.validate()?;
        self.train.validate()?;
        self.loss.validate()
    }

    fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            beam_elevations: crate::io::evenly_spaced_beams(self.beams, -25.0, 3.0),
            azimuth_step: self.azimuth_step_deg.to_radians(),
            ..ScanConfig::default()
        }
    }

    pub fn eval_scans(&self) -> usize {
        ((self.scans as f64 * self.eval_fraction).round() as usize).clamp(1, self.scans - 1)
    }
}

/// Train and eval splits of one seed, features already extracted.
pub struct BenchData {
    pub train: Vec<TrainingSample>,
    pub eval: Vec<TrainingSample>,
    pub eval_scenes: Vec<Scene>,
}

pub fn build_data(cfg: &BenchConfig, seed: u64) -> Result<BenchData> {
    let labels = LabelSpace::new(cfg.classes)?;
    let base = cfg.scan_config();
    let mut asset_rng = RngStream::new(seed, ASSET_STREAM);
    let train_assets = family_assets(cfg.train_family, cfg.train_synthesis.asset_samples, &mut asset_rng)?;
    let eval_assets = family_assets(cfg.eval_family, cfg.eval_synthesis.asset_samples, &mut asset_rng)?;
    let n_eval = cfg.eval_scans();

    let mut data = BenchData { train: Vec::new(), eval: Vec::new(), eval_scenes: Vec::new() };
    for k in 0..cfg.scans {
        let mut scan_rng = RngStream::new(seed, SCAN_STREAM).derive(k as u64);
        let scene = generate_scan(&base.with_random_layout(&cfg.layout, &mut scan_rng)?)?;
        let mut synth_rng = RngStream::new(seed, SYNTH_STREAM).derive(k as u64);
        let is_eval = k >= cfg.scans - n_eval;
        let (scene, _) = if is_eval {
            augment_scene(&scene, &eval_assets, &cfg.eval_synthesis, labels, &mut synth_rng)
        } else {
            augment_scene(&scene, &train_assets, &cfg.train_synthesis, labels, &mut synth_rng)
        };
        let sample = training_sample(&scene, &cfg.features)?;
        if is_eval {
            data.eval.push(sample);
            data.eval_scenes.push(scene);
        } else {
            data.train.push(sample);
        }
    }
    Ok(data)
}

/// Scored eval points of a trained model under the `p^o` rule.
pub fn score_points(model: &TrainedModel, eval: &[TrainingSample], classes: u32) -> Result<Vec<ScoredPoint>> {
    let mut out = Vec::new();
    for s in eval {
        let head = forward(&s.features, &model.params)?;
        let probs = softmax_head(&head);
        let scores = score_outlier_prob(&probs);
        let predicted = predict_classes(&head.inlier);
        for i in 0..s.labels.len() {
            out.push(ScoredPoint {
                score: scores[i],
                is_outlier: s.labels[i] > classes,
                predicted: predicted[i],
                truth: s.labels[i],
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub seed: u64,
    pub mode: LossMode,
    pub aupr: f64,
    pub auroc: f64,
    pub final_loss: f64,
    /// Training hit a non-finite value; `aupr`/`auroc` are NaN.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

impl BenchReport {
    /// Median AUPR (in percent) of each mode over seeds. Diverged runs count as 0.
    pub fn median_aupr(&self) -> BTreeMap<&'static str, f64> {
        let mut by_mode: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        for r in &self.runs {
            let v = if r.diverged { 0.0 } else { 100.0 * r.aupr };
            by_mode.entry(r.mode.name()).or_default().push(v);
        }
        by_mode.into_iter().filter_map(|(k, mut v)| median(&mut v).map(|m| (k, m))).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("seed,mode,aupr,auroc,final_loss,diverged\n");
        for r in &self.runs {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.seed,
                r.mode.name(),
                r.aupr,
                r.auroc,
                r.final_loss,
                r.diverged
            ));
        }
        s
    }
}

pub fn run_seed(cfg: &BenchConfig, seed: u64) -> Result<Vec<BenchRun>> {
    let data = build_data(cfg, seed)?;
    let mut runs = Vec::new();
    for &mode in &cfg.modes {
        let train_cfg = TrainConfig { mode, ..cfg.train.clone() };
        let mut rng = RngStream::new(seed, TRAIN_STREAM);
        let model = match train(&data.train, cfg.classes, &train_cfg, &cfg.loss, &mut rng) {
            Ok(m) => m,
            Err(Error::Diverged { .. }) => {
                runs.push(BenchRun {
                    seed,
                    mode,
                    aupr: f64::NAN,
                    auroc: f64::NAN,
                    final_loss: f64::NAN,
                    diverged: true,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let points = score_points(&model, &data.eval, cfg.classes)?;
        runs.push(BenchRun {
            seed,
            mode,
            aupr: aupr(&points)?,
            auroc: auroc(&points)?,
            final_loss: model.log.last().map_or(f64::NAN, |e| e.loss),
            diverged: false,
        });
    }
    Ok(runs)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        runs.extend(run_seed(cfg, seed)?);
    }
    Ok(BenchReport { runs })
}
