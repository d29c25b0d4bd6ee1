//! Outlier injection.
//!
//! The asset pipeline runs, per object: load, rotate upright, move along +x,
//! rotate about the scene center, overlap gate, resize, put on ground and
//! finally a spherical merge that only rewrites ranges of existing scene
//! points, so the sensor's (azimuth, elevation) sampling pattern survives.
//! The resize baseline instead enlarges an instance already in the scene.

mod merge;
mod pipeline;
mod placement;
mod resize_existing;

pub use merge::{merge_spherical, AngularWindow, MergeReport};
pub use pipeline::{synthesize_scene, SynthesisOutcome};
pub use placement::{
    check_overlap, manhattan_gap, place_object, place_with, resize, rotate_upright, snap_to_ground, PlacedObject,
};
pub use resize_existing::{cluster_instances, resize_existing, ResizeReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::io::{ObjectAsset, UpAxis};
use crate::labels::LabelSpace;
use crate::rng::RngStream;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisMode {
    Asset,
    Resize,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisConfig {
    pub mode: SynthesisMode,
    /// Object count law `Binomial(count_trials, count_p)`.
    pub count_trials: u32,
    pub count_p: f64,
    /// Upper bound of the radial offset as a fraction of the farthest range.
    pub placement_max_fraction: f64,
    /// Rotation about the scene center, degrees.
    pub rotation_deg: [f64; 2],
    /// Resize factor range.
    pub scale: [f64; 2],
    /// Manhattan xy distance for the overlap gate, meters.
    pub overlap_delta: f64,
    pub window_lon: f64,
    pub window_lat: f64,
    pub window_unit: AngleUnit,
    /// Search radius for the ground point under an object, meters.
    pub ground_search_radius: f64,
    /// Only shorten ranges (occlusion-consistent variant of the merge).
    pub occlusion_cap: bool,
    pub center: [f64; 3],
    /// Surface samples drawn per mesh asset.
    pub asset_samples: usize,
    pub asset_up: UpAxis,
    pub resize_class: u32,
    pub resize_scale: [f64; 2],
    pub cluster_threshold: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            mode: SynthesisMode::Asset,
            count_trials: crate::rng::OBJECT_COUNT_TRIALS,
            count_p: crate::rng::OBJECT_COUNT_P,
            placement_max_fraction: 0.8,
            rotation_deg: [0.0, 360.0],
            scale: [1.0, 7.0],
            overlap_delta: 1.0,
            window_lon: 0.02,
            window_lat: 0.2,
            window_unit: AngleUnit::Radians,
            ground_search_radius: 5.0,
            occlusion_cap: false,
            center: [0.0, 0.0, 0.0],
            asset_samples: 2000,
            asset_up: UpAxis::PosZ,
            resize_class: 2,
            resize_scale: [1.5, 3.0],
            cluster_threshold: 0.5,
        }
    }
}

impl SynthesisConfig {
    /// Checks invariants, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::InvalidInput(format!("{key}: {why}")));
        if !(self.overlap_delta > 0.0) {
            return bad("overlap_delta", "must be > 0");
        }
        if !(self.window_lon > 0.0) {
            return bad("window_lon", "must be > 0");
        }
        if !(self.window_lat > 0.0) {
            return bad("window_lat", "must be > 0");
        }
        if !(self.scale[0] >= 1.0 && self.scale[0] < self.scale[1]) {
            return bad("scale", "need 1 <= lower < upper");
        }
        if !(self.resize_scale[0] >= 1.0 && self.resize_scale[0] <= self.resize_scale[1]) {
            return bad("resize_scale", "need 1 <= lower <= upper");
        }
        if !(self.rotation_deg[0] <= self.rotation_deg[1]) {
            return bad("rotation_deg", "need lower <= upper");
        }
        if !(0.0..=1.0).contains(&self.count_p) {
            return bad("count_p", "must lie in [0, 1]");
        }
        if !(self.placement_max_fraction > 0.0) {
            return bad("placement_max_fraction", "must be > 0");
        }
        if !(self.ground_search_radius > 0.0) {
            return bad("ground_search_radius", "must be > 0");
        }
        if !(self.cluster_threshold > 0.0) {
            return bad("cluster_threshold", "must be > 0");
        }
        if self.asset_samples < crate::io::MIN_ASSET_POINTS {
            return bad("asset_samples", "must be >= 10");
        }
        Ok(())
    }

    pub fn center_point(&self) -> Point3 {
        Point3::new(self.center[0], self.center[1], self.center[2])
    }

    /// Merge windows converted to radians.
    pub fn window(&self) -> AngularWindow {
        match self.window_unit {
            AngleUnit::Radians => AngularWindow { lon: self.window_lon, lat: self.window_lat },
            AngleUnit::Degrees => {
                AngularWindow { lon: self.window_lon.to_radians(), lat: self.window_lat.to_radians() }
            }
        }
    }

    pub fn uses_assets(&self) -> bool {
        matches!(self.mode, SynthesisMode::Asset | SynthesisMode::Both)
    }

    pub fn uses_resize(&self) -> bool {
        matches!(self.mode, SynthesisMode::Resize | SynthesisMode::Both)
    }
}

/// Everything one call to [`augment_scene`] did.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AugmentReport {
    pub resize: Option<ResizeReport>,
    pub merges: Vec<MergeReport>,
    pub outcome: SynthesisOutcome,
}

/// Applies the configured pipelines: first the resize baseline on an existing
/// instance, then asset injection.
pub fn augment_scene(
    scene: &Scene,
    assets: &[ObjectAsset],
    cfg: &SynthesisConfig,
    labels: LabelSpace,
    rng: &mut RngStream,
) -> (Scene, AugmentReport) {
    let mut report = AugmentReport::default();
    let mut current = scene.clone();
    if cfg.uses_resize() {
        let (resized, r) =
            resize_existing(&current, cfg.resize_class, cfg.resize_scale, cfg.cluster_threshold, labels, rng);
        current = resized;
        report.resize = r;
    }
    if cfg.uses_assets() {
        let (merged, merges, outcome) = synthesize_scene(&current, assets, cfg, labels, rng);
        current = merged;
        report.merges = merges;
        report.outcome = outcome;
    }
    (current, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SynthesisConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_fields_named() {
        let cfg = SynthesisConfig { scale: [0.5, 7.0], ..Default::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("scale"), "{msg}");
        let cfg = SynthesisConfig { overlap_delta: 0.0, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("overlap_delta"));
    }

    #[test]
    fn degree_windows_convert() {
        let cfg = SynthesisConfig { window_unit: AngleUnit::Degrees, window_lon: 180.0, ..Default::default() };
        assert!((cfg.window().lon - std::f64::consts::PI).abs() < 1e-15);
    }
}
