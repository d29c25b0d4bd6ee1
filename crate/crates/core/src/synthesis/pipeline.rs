use serde::Serialize;

use crate::io::ObjectAsset;
use crate::labels::LabelSpace;
use crate::rng::{sample_binomial, sample_uniform, RngStream};
use crate::scene::Scene;

use super::placement::{check_overlap, draw_degrees, place_with, resize, rotate_upright, snap_to_ground};
use super::{merge_spherical, MergeReport, SynthesisConfig};

/// Per-scene outcome counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SynthesisOutcome {
    pub drawn: u32,
    pub failed_range: u32,
    pub failed_overlap: u32,
    pub failed_ground: u32,
    pub merged: u32,
}

/// Runs the asset pipeline on one scene.
///
/// Geometric queries (range bounds, overlap gate, ground height) look at the
/// input scene; merges accumulate into the output. Each object consumes its
/// four random draws (asset, offset, rotation, scale) before any gate, so the
/// stream position never depends on whether an earlier object was skipped.
pub fn synthesize_scene(
    scene: &Scene,
    assets: &[ObjectAsset],
    cfg: &SynthesisConfig,
    labels: LabelSpace,
    rng: &mut RngStream,
) -> (Scene, Vec<MergeReport>, SynthesisOutcome) {
    let mut out = scene.clone();
    let mut reports = Vec::new();
    let mut outcome = SynthesisOutcome::default();
    if assets.is_empty() {
        return (out, reports, outcome);
    }

    let center = cfg.center_point();
    let (r_min, r_max) = scene.range_bounds(center);
    let window = cfg.window();
    outcome.drawn = sample_binomial(rng, cfg.count_trials, cfg.count_p);

    for object_id in 0..outcome.drawn as usize {
        let asset = &assets[rng.below(assets.len())];
        let dx = sample_uniform(rng, r_min, cfg.placement_max_fraction * r_max);
        let dlon = draw_degrees(rng, cfg.rotation_deg).unwrap_or(0.0);
        let k = sample_uniform(rng, cfg.scale[0], cfg.scale[1]).unwrap_or(cfg.scale[0]);

        let Ok(dx) = dx else {
            outcome.failed_range += 1;
            continue;
        };
        let upright = rotate_upright(asset);
        let placed = place_with(&upright.points, center, dx, dlon);
        if !check_overlap(&placed, scene, cfg.overlap_delta) {
            outcome.failed_overlap += 1;
            continue;
        }
        let Ok(resized) = resize(&placed, k) else {
            continue;
        };
        let Some(grounded) = snap_to_ground(&resized, scene, cfg.ground_search_radius) else {
            outcome.failed_ground += 1;
            continue;
        };
        let (merged, report) =
            merge_spherical(&out, &grounded, window, labels.synth_outlier(), cfg.occlusion_cap, object_id);
        out = merged;
        outcome.merged += 1;
        reports.push(report);
    }
    (out, reports, outcome)
}
