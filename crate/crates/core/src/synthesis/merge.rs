use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::geometry::{angle_diff, from_spherical_unchecked, to_spherical_unchecked, SphericalCoord};
use crate::scene::Scene;

use super::PlacedObject;

/// Half-widths of the angular match window, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularWindow {
    pub lon: f64,
    pub lat: f64,
}

/// Which scene points a merge rewrote.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MergeReport {
    pub object_id: usize,
    pub indices: Vec<usize>,
    /// `(old r, new r)` per entry of `indices`.
    pub radii: Vec<(f64, f64)>,
}

impl MergeReport {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Rewrites the range of every scene point whose (lon, lat) falls strictly
/// inside `window` of at least one object point. The new range is the
/// smallest matching object range and the label becomes `outlier_label`.
/// Azimuth differences wrap at +-pi.
///
/// With `occlusion_cap` a range is only ever shortened.
pub fn merge_spherical(
    scene: &Scene,
    obj: &PlacedObject,
    window: AngularWindow,
    outlier_label: u32,
    occlusion_cap: bool,
    object_id: usize,
) -> (Scene, MergeReport) {
    let mut sorted: Vec<SphericalCoord> = obj.points.iter().map(|&p| to_spherical_unchecked(p)).collect();
    // copies across the seam so a plain sorted scan sees wrapped neighbours
    let seam: Vec<SphericalCoord> = sorted
        .iter()
        .filter_map(|s| {
            if s.lon > PI - window.lon {
                Some(SphericalCoord { lon: s.lon - TAU, ..*s })
            } else if s.lon < -PI + window.lon {
                Some(SphericalCoord { lon: s.lon + TAU, ..*s })
            } else {
                None
            }
        })
        .collect();
    sorted.extend(seam);
    sorted.sort_by(|a, b| a.lon.total_cmp(&b.lon));
    let lons: Vec<f64> = sorted.iter().map(|s| s.lon).collect();
    // coarse bracket, refined by the exact strict test below
    let slack = 1e-12;

    let mut out = scene.clone();
    let mut report = MergeReport { object_id, ..Default::default() };
    for (k, p) in scene.points().iter().enumerate() {
        let sk = to_spherical_unchecked(*p);
        let start = lons.partition_point(|&l| l < sk.lon - window.lon - slack);
        let mut best = f64::INFINITY;
        for s in &sorted[start..] {
            if s.lon > sk.lon + window.lon + slack {
                break;
            }
            if angle_diff(sk.lon, s.lon).abs() < window.lon && (sk.lat - s.lat).abs() < window.lat {
                best = best.min(s.r);
            }
        }
        if !best.is_finite() || (occlusion_cap && best >= sk.r) {
            continue;
        }
        let moved = from_spherical_unchecked(SphericalCoord { r: best, ..sk });
        out.set_point(k, moved, outlier_label);
        report.indices.push(k);
        report.radii.push((sk.r, best));
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{from_spherical, to_spherical, Point3};

    fn sph(lon: f64, lat: f64, r: f64) -> Point3 {
        from_spherical(SphericalCoord::new(lon, lat, r).unwrap()).unwrap()
    }

    const W: AngularWindow = AngularWindow { lon: 0.02, lat: 0.2 };

    #[test]
    fn hand_window_match() {
        let scene = Scene::new(vec![sph(0.0, 0.0, 10.0)], None, vec![1]).unwrap();
        let obj = PlacedObject::new(vec![sph(0.01, 0.1, 5.0)]).unwrap();
        let (out, rep) = merge_spherical(&scene, &obj, W, 5, false, 0);
        let s = to_spherical(out.points()[0]).unwrap();
        assert!((s.r - 5.0).abs() < 1e-12);
        assert!(s.lon.abs() < 1e-12 && s.lat.abs() < 1e-12);
        assert_eq!(out.labels(), &[5]);
        assert_eq!(rep.indices, vec![0]);
        assert!((rep.radii[0].0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_radius_wins() {
        let scene = Scene::new(vec![sph(0.0, 0.0, 10.0)], None, vec![1]).unwrap();
        let obj = PlacedObject::new(vec![sph(0.0, 0.0, 5.0), sph(0.005, -0.05, 4.0)]).unwrap();
        let (out, _) = merge_spherical(&scene, &obj, W, 5, false, 0);
        assert!((out.points()[0].norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_exclusive() {
        let scene = Scene::new(vec![sph(0.0, 0.0, 10.0)], None, vec![1]).unwrap();
        let obj = PlacedObject::new(vec![Point3::new(0.02f64.cos() * 5.0, 0.02f64.sin() * 5.0, 0.0)]).unwrap();
        let lon = to_spherical(obj.points[0]).unwrap().lon;
        assert!((lon - 0.02).abs() < 1e-15);
        let obj = PlacedObject::new(vec![sph(0.02, 0.0, 5.0)]).unwrap();
        let (out, rep) = merge_spherical(&scene, &obj, W, 5, false, 0);
        assert!(rep.is_empty());
        assert_eq!(out, scene);
    }

    #[test]
    fn wraps_across_seam() {
        let scene = Scene::new(vec![sph(-PI, 0.0, 10.0)], None, vec![1]).unwrap();
        let obj = PlacedObject::new(vec![sph(PI - 0.01, 0.0, 3.0)]).unwrap();
        let (_, rep) = merge_spherical(&scene, &obj, W, 5, false, 0);
        assert_eq!(rep.indices, vec![0]);
    }

    #[test]
    fn occlusion_cap_only_shortens() {
        let scene = Scene::new(vec![sph(0.0, 0.0, 4.0), sph(1.0, 0.0, 9.0)], None, vec![1, 1]).unwrap();
        let obj = PlacedObject::new(vec![sph(0.0, 0.0, 6.0), sph(1.0, 0.0, 6.0)]).unwrap();
        let (_, rep) = merge_spherical(&scene, &obj, W, 5, true, 0);
        assert_eq!(rep.indices, vec![1]);
        let (_, rep) = merge_spherical(&scene, &obj, W, 5, false, 0);
        assert_eq!(rep.indices, vec![0, 1]);
    }

    #[test]
    fn no_match_returns_scene_unchanged() {
        let scene = Scene::new(vec![sph(0.0, 0.0, 10.0)], None, vec![2]).unwrap();
        let obj = PlacedObject::new(vec![sph(1.0, 0.0, 5.0)]).unwrap();
        let (out, rep) = merge_spherical(&scene, &obj, W, 5, false, 3);
        assert_eq!(out, scene);
        assert!(rep.is_empty());
        assert_eq!(rep.object_id, 3);
    }
}
