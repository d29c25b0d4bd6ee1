#![allow(dead_code)]

use oodlab::metrics::ScoredPoint;
use oodlab::RngStream;

/// Pair-counting AUROC: `(ordered + ties/2) / (pos * neg)`.
pub fn auroc_pairs(points: &[ScoredPoint]) -> Option<f64> {
    let pos: Vec<f64> = points.iter().filter(|p| p.is_outlier).map(|p| p.score).collect();
    let neg: Vec<f64> = points.iter().filter(|p| !p.is_outlier).map(|p| p.score).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let (mut ordered, mut ties) = (0u64, 0u64);
    for &a in &pos {
        for &b in &neg {
            if a > b {
                ordered += 1;
            } else if a == b {
                ties += 1;
            }
        }
    }
    Some((2 * ordered + ties) as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// Average precision by sweeping every distinct score as a `score >= t`
/// threshold from high to low: `sum (R_t - R_prev) * P_t`.
pub fn aupr_sweep(points: &[ScoredPoint]) -> Option<f64> {
    let total_pos = points.iter().filter(|p| p.is_outlier).count();
    if total_pos == 0 || total_pos == points.len() {
        return None;
    }
    let mut thresholds: Vec<f64> = points.iter().map(|p| p.score).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_tp = 0usize;
    for t in thresholds {
        let flagged: Vec<&ScoredPoint> = points.iter().filter(|p| p.score >= t).collect();
        let tp = flagged.iter().filter(|p| p.is_outlier).count();
        if tp > prev_tp {
            ap += (tp - prev_tp) as f64 / total_pos as f64 * (tp as f64 / flagged.len() as f64);
        }
        prev_tp = tp;
    }
    Some(ap)
}

/// Random scored points; `levels > 0` draws scores from that many values to
/// force heavy ties.
pub fn random_points(rng: &mut RngStream, n: usize, levels: usize, classes: u32) -> Vec<ScoredPoint> {
    (0..n)
        .map(|_| {
            let score = if levels > 0 { rng.below(levels) as f64 / levels as f64 } else { rng.next_f64() };
            let is_outlier = rng.next_f64() < 0.3;
            let truth =
                if is_outlier { classes + 1 + rng.below(2) as u32 } else { 1 + rng.below(classes as usize) as u32 };
            let predicted = 1 + rng.below(classes as usize) as u32;
            ScoredPoint { score, is_outlier, predicted, truth }
        })
        .collect()
}
