//! A small per-point classifier: hand-built features, a fully-connected
//! network with an extra outlier logit, and a plain SGD trainer.

mod checkpoint;
mod features;
mod mlp;
mod scores;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use features::{extract_features, neighbor_counts, Feature, FeatureConfig};
pub use mlp::{backward, forward, forward_cached, split_logits, ForwardCache, Layer, MlpParams};
pub use scores::{predict_classes, score_maxlogit, score_msp, score_outlier_prob, ScoringRule};
pub use train::{train, BetaStep, EpochLog, LossMode, TrainConfig, TrainedModel, TrainingSample};

use crate::error::Result;
use crate::scene::Scene;

pub fn training_sample(scene: &Scene, cfg: &FeatureConfig) -> Result<TrainingSample> {
    Ok(TrainingSample { features: extract_features(scene, cfg)?, labels: scene.labels().to_vec() })
}
