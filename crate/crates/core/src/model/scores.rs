use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::losses::{HeadOutput, Probs};

/// Anomaly scores: higher means more likely an outlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringRule {
    /// The outlier probability `p^o`.
    #[serde(rename = "p_o")]
    OutlierProb,
    Msp,
    MaxLogit,
}

impl ScoringRule {
    pub const ALL: [ScoringRule; 3] = [ScoringRule::OutlierProb, ScoringRule::Msp, ScoringRule::MaxLogit];

    pub fn name(self) -> &'static str {
        match self {
            ScoringRule::OutlierProb => "p_o",
            ScoringRule::Msp => "msp",
            ScoringRule::MaxLogit => "maxlogit",
        }
    }

    pub fn score(self, head: &HeadOutput, probs: &Probs) -> Vec<f64> {
        match self {
            ScoringRule::OutlierProb => score_outlier_prob(probs),
            ScoringRule::Msp => score_msp(probs),
            ScoringRule::MaxLogit => score_maxlogit(&head.inlier),
        }
    }
}

/// `1 −` the largest inlier probability after renormalizing over the `c`
/// inlier classes.
pub fn score_msp(p: &Probs) -> Vec<f64> {
    p.inlier()
        .rows()
        .into_iter()
        .map(|row| {
            let total: f64 = row.sum();
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            1.0 - best / total
        })
        .collect()
}

pub fn score_maxlogit(inlier: &Array2<f64>) -> Vec<f64> {
    inlier.rows().into_iter().map(|row| -row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
}

pub fn score_outlier_prob(p: &Probs) -> Vec<f64> {
    (0..p.p.nrows()).map(|i| p.outlier(i)).collect()
}

/// Closed-set prediction: the 1-based argmax of the inlier logits.
pub fn predict_classes(inlier: &Array2<f64>) -> Vec<u32> {
    inlier
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best as u32 + 1
        })
        .collect()
}
