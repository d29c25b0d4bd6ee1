use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic label values: `1..=c` are inlier classes, `c + 1` marks resized
/// (or real) outliers and `c + 2` marks asset-synthesized outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    classes: u32,
}

/// How a label is treated by the losses and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Inlier(usize),
    ResizedOutlier,
    SynthOutlier,
}

impl LabelSpace {
    pub fn new(classes: u32) -> Result<Self> {
        if classes == 0 {
            return Err(Error::InvalidInput("label space needs at least one inlier class".into()));
        }
        Ok(Self { classes })
    }

    /// Number of inlier classes `c`.
    #[inline]
    pub fn inlier_classes(&self) -> usize {
        self.classes as usize
    }

    #[inline]
    pub fn resized_outlier(&self) -> u32 {
        self.classes + 1
    }

    #[inline]
    pub fn synth_outlier(&self) -> u32 {
        self.classes + 2
    }

    #[inline]
    pub fn max_label(&self) -> u32 {
        self.classes + 2
    }

    #[inline]
    pub fn is_valid(&self, label: u32) -> bool {
        (1..=self.max_label()).contains(&label)
    }

    #[inline]
    pub fn is_outlier(&self, label: u32) -> bool {
        label > self.classes
    }

    /// Classifies a label; inlier classes are returned zero-based.
    pub fn kind(&self, label: u32) -> Result<LabelKind> {
        match label {
            l if l >= 1 && l <= self.classes => Ok(LabelKind::Inlier((l - 1) as usize)),
            l if l == self.classes + 1 => Ok(LabelKind::ResizedOutlier),
            l if l == self.classes + 2 => Ok(LabelKind::SynthOutlier),
            l => Err(Error::InvalidLabel { label: l, max: self.max_label() }),
        }
    }

    pub fn check_all(&self, labels: &[u32]) -> Result<()> {
        match labels.iter().find(|&&l| !self.is_valid(l)) {
            Some(&l) => Err(Error::InvalidLabel { label: l, max: self.max_label() }),
            None => Ok(()),
        }
    }
}
