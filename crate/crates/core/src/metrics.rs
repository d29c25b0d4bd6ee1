//! Outlier-detection and selective-classification metrics.
//!
//! Scores are "higher = more anomalous". The selective rule predicts a point
//! when its score is below the threshold `τ` and abstains otherwise.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredPoint {
    pub score: f64,
    pub is_outlier: bool,
    pub predicted: u32,
    pub truth: u32,
}

pub const CURVE_HEADER: &str = "coverage,threshold,risk,aupr,auroc";
pub const HISTOGRAM_HEADER: &str = "bin_lo,bin_hi,inlier_count,outlier_count";
pub const HISTOGRAM_BINS: usize = 10;

fn check_scores(points: &[ScoredPoint]) -> Result<()> {
    match points.iter().find(|p| !p.score.is_finite()) {
        Some(p) => Err(Error::InvalidInput(format!("non-finite score {}", p.score))),
        None => Ok(()),
    }
}

fn sorted_ascending(points: &[ScoredPoint]) -> Vec<ScoredPoint> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.score.total_cmp(&b.score));
    v
}

/// Tie blocks of an ascending-sorted slice as `(positives, negatives)`.
fn tie_blocks(sorted: &[ScoredPoint]) -> impl Iterator<Item = (u64, u64)> + '_ {
    sorted.chunk_by(|a, b| a.score == b.score).map(|block| {
        let pos = block.iter().filter(|p| p.is_outlier).count() as u64;
        (pos, block.len() as u64 - pos)
    })
}

fn auroc_sorted(sorted: &[ScoredPoint]) -> Result<f64> {
    // twice the Mann–Whitney U, kept in integers so ties are exact
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let (mut pos_total, mut neg_total) = (0u128, 0u128);
    for (pos, neg) in tie_blocks(sorted) {
        let (pos, neg) = (pos as u128, neg as u128);
        twice_u += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        pos_total += pos;
        neg_total += neg;
    }
    if pos_total == 0 || neg_total == 0 {
        return Err(Error::UndefinedMetric("AUROC needs at least one outlier and one inlier"));
    }
    Ok(twice_u as f64 / (2 * pos_total * neg_total) as f64)
}

fn aupr_sorted(sorted: &[ScoredPoint]) -> Result<f64> {
    let blocks: Vec<(u64, u64)> = tie_blocks(sorted).collect();
    let positives: u64 = blocks.iter().map(|b| b.0).sum();
    if positives == 0 {
        return Err(Error::UndefinedMetric("AUPR needs at least one outlier"));
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut ap = 0.0;
    for &(pos, neg) in blocks.iter().rev() {
        tp += pos;
        fp += neg;
        if pos > 0 {
            ap += (pos as f64 / positives as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

/// Area under the ROC curve, midrank ties.
pub fn auroc(points: &[ScoredPoint]) -> Result<f64> {
    check_scores(points)?;
    auroc_sorted(&sorted_ascending(points))
}

/// Average precision with step interpolation; tied scores enter together.
pub fn aupr(points: &[ScoredPoint]) -> Result<f64> {
    check_scores(points)?;
    aupr_sorted(&sorted_ascending(points))
}

/// Inlier mIoU (×100) over classes `1..=c` present in ground truth or
/// prediction. Outlier ground truth is skipped; a predicted outlier counts as
/// a miss for the point's true class.
pub fn miou_old(points: &[ScoredPoint], c: u32) -> Result<f64> {
    let c = c as usize;
    let mut tp = vec![0u64; c + 1];
    let mut fp = vec![0u64; c + 1];
    let mut fn_ = vec![0u64; c + 1];
    for p in points {
        let t = p.truth as usize;
        if t == 0 {
            return Err(Error::InvalidLabel { label: p.truth, max: c as u32 + 2 });
        }
        if t > c {
            continue;
        }
        let q = p.predicted as usize;
        if q == t {
            tp[t] += 1;
        } else {
            fn_[t] += 1;
            if (1..=c).contains(&q) {
                fp[q] += 1;
            }
        }
    }
    let ious: Vec<f64> = (1..=c)
        .filter_map(|k| {
            let denom = tp[k] + fp[k] + fn_[k];
            (denom > 0).then(|| tp[k] as f64 / denom as f64)
        })
        .collect();
    if ious.is_empty() {
        return Err(Error::UndefinedMetric("mIoU needs at least one inlier class present"));
    }
    Ok(100.0 * ious.iter().sum::<f64>() / ious.len() as f64)
}

/// Fraction of scores strictly below `tau`.
pub fn coverage(scores: &[f64], tau: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().filter(|&&s| s < tau).count() as f64 / scores.len() as f64
}

/// `(100 − mIoU on covered points) / coverage`.
pub fn selective_risk(points: &[ScoredPoint], tau: f64, c: u32) -> Result<f64> {
    let covered: Vec<ScoredPoint> = points.iter().copied().filter(|p| p.score < tau).collect();
    if covered.is_empty() {
        return Err(Error::UndefinedMetric("selective risk at zero coverage"));
    }
    let phi = covered.len() as f64 / points.len() as f64;
    Ok((100.0 - miou_old(&covered, c)?) / phi)
}

/// Target coverages `k/size` for `k = 1..=size`.
pub fn default_grid(size: usize) -> Vec<f64> {
    (1..=size).map(|k| k as f64 / size as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub target: f64,
    /// Coverage actually realized by `threshold` (ties can overshoot the target).
    pub coverage: f64,
    pub threshold: f64,
    pub risk: Option<f64>,
    pub aupr: Option<f64>,
    pub auroc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Risk,
    Aupr,
    Auroc,
    Threshold,
}

/// `(coverage, value, τ)` triples sorted by coverage; `None` marks a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub points: Vec<(f64, Option<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCurves {
    pub rows: Vec<CurveRow>,
}

impl CoverageCurves {
    pub fn series(&self, kind: CurveKind) -> CurveSeries {
        CurveSeries {
            points: self
                .rows
                .iter()
                .map(|r| {
                    let v = match kind {
                        CurveKind::Risk => r.risk,
                        CurveKind::Aupr => r.aupr,
                        CurveKind::Auroc => r.auroc,
                        CurveKind::Threshold => Some(r.threshold),
                    };
                    (r.coverage, v, r.threshold)
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CURVE_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.coverage, r.threshold, na(r.risk), na(r.aupr), na(r.auroc));
        }
        s
    }
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Risk, AUPR, AUROC and threshold as functions of coverage. For each target
/// `γ` the threshold is the smallest `τ` whose coverage is at least `γ`;
/// AUPR and AUROC are computed on the covered subset.
pub fn coverage_curves(points: &[ScoredPoint], c: u32, grid: &[f64]) -> Result<CoverageCurves> {
    check_scores(points)?;
    if points.is_empty() {
        return Err(Error::InvalidInput("coverage curves need at least one point".into()));
    }
    if let Some(g) = grid.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
        return Err(Error::InvalidInput(format!("coverage grid value {g} outside (0, 1]")));
    }
    let sorted = sorted_ascending(points);
    let m = sorted.len();
    let rows = grid
        .par_iter()
        .map(|&gamma| {
            let k = ((gamma * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
            let tau = sorted[k - 1].score.next_up();
            let count = sorted.partition_point(|p| p.score < tau);
            let covered = &sorted[..count];
            let phi = count as f64 / m as f64;
            let risk = miou_old(covered, c).ok().map(|miou| (100.0 - miou) / phi);
            CurveRow {
                target: gamma,
                coverage: phi,
                threshold: tau,
                risk,
                aupr: aupr_sorted(covered).ok(),
                auroc: auroc_sorted(covered).ok(),
            }
        })
        .collect();
    Ok(CoverageCurves { rows })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub inlier: [u64; HISTOGRAM_BINS],
    pub outlier: [u64; HISTOGRAM_BINS],
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{HISTOGRAM_HEADER}\n");
        for k in 0..HISTOGRAM_BINS {
            let lo = k as f64 / HISTOGRAM_BINS as f64;
            let hi = (k + 1) as f64 / HISTOGRAM_BINS as f64;
            let _ = writeln!(s, "{lo},{hi},{},{}", self.inlier[k], self.outlier[k]);
        }
        s
    }
}

/// Bin of a probability: `[k/10, (k+1)/10)`, with 1.0 in the last bin.
pub fn histogram_bin(p: f64) -> usize {
    (1..HISTOGRAM_BINS).filter(|&k| p.partial_cmp(&(k as f64 / HISTOGRAM_BINS as f64)) != Some(Ordering::Less)).count()
}

pub fn po_histogram(points: &[ScoredPoint]) -> Result<Histogram> {
    let mut h = Histogram { inlier: [0; HISTOGRAM_BINS], outlier: [0; HISTOGRAM_BINS] };
    for p in points {
        if !(0.0..=1.0).contains(&p.score) {
            return Err(Error::InvalidInput(format!("outlier probability {} outside [0, 1]", p.score)));
        }
        let bin = histogram_bin(p.score);
        if p.is_outlier {
            h.outlier[bin] += 1;
        } else {
            h.inlier[bin] += 1;
        }
    }
    Ok(h)
}
