use crate::error::{Error, Result};
use crate::geometry::{centroid, Point3};
use crate::io::{ObjectAsset, UpAxis};
use crate::rng::{sample_uniform, RngStream};
use crate::scene::Scene;

use super::SynthesisConfig;

/// An object's points after it has been moved into a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedObject {
    pub points: Vec<Point3>,
}

impl PlacedObject {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("placed object must be nonempty and finite".into()));
        }
        Ok(Self { points })
    }

    pub fn centroid(&self) -> Point3 {
        centroid(&self.points)
    }

    pub fn min_z(&self) -> f64 {
        self.points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min)
    }
}

/// Maps the asset's up axis onto +z with a proper rotation.
pub fn rotate_upright(asset: &ObjectAsset) -> ObjectAsset {
    let map: fn(Point3) -> Point3 = match asset.up {
        UpAxis::PosZ => return asset.clone(),
        UpAxis::NegZ => |p| Point3::new(p.x, -p.y, -p.z),
        UpAxis::PosY => |p| Point3::new(p.x, -p.z, p.y),
        UpAxis::NegY => |p| Point3::new(p.x, p.z, -p.y),
        UpAxis::PosX => |p| Point3::new(-p.z, p.y, p.x),
        UpAxis::NegX => |p| Point3::new(p.z, p.y, -p.x),
    };
    ObjectAsset {
        points: asset.points.iter().map(|&p| map(p)).collect(),
        source_id: asset.source_id.clone(),
        up: UpAxis::PosZ,
    }
}

/// Moves `points` by `dx` along +x from `center`, then rotates them about
/// `center` in the xy-plane by `dlon` radians. Heights are untouched.
pub fn place_with(points: &[Point3], center: Point3, dx: f64, dlon: f64) -> PlacedObject {
    let placed = points
        .iter()
        .map(|p| {
            let local = Point3::new(p.x + dx, p.y, 0.0).rotate_z(dlon);
            Point3::new(center.x + local.x, center.y + local.y, p.z)
        })
        .collect();
    PlacedObject { points: placed }
}

/// Samples the radial offset `Uniform(r_min, f * r_max)` and the rotation
/// `Uniform(rotation_deg)` and places the object.
pub fn place_object(
    obj: &ObjectAsset,
    scene: &Scene,
    cfg: &SynthesisConfig,
    rng: &mut RngStream,
) -> Result<PlacedObject> {
    let center = cfg.center_point();
    let (r_min, r_max) = scene.range_bounds(center);
    let dx = sample_uniform(rng, r_min, cfg.placement_max_fraction * r_max)?;
    let dlon = draw_degrees(rng, cfg.rotation_deg)?;
    Ok(place_with(&obj.points, center, dx, dlon))
}

pub(crate) fn draw_degrees(rng: &mut RngStream, range: [f64; 2]) -> Result<f64> {
    if range[0] == range[1] {
        return Ok(range[0].to_radians());
    }
    Ok(sample_uniform(rng, range[0], range[1])?.to_radians())
}

/// Smallest Manhattan xy distance between the object's mean position and any
/// scene point.
pub fn manhattan_gap(obj: &PlacedObject, scene: &Scene) -> f64 {
    let c = obj.centroid();
    scene.points().iter().map(|p| (c.x - p.x).abs() + (c.y - p.y).abs()).fold(f64::INFINITY, f64::min)
}

/// `true` when the object lies over the scene (gap `<= delta`); the merge is
/// skipped when this returns `false`.
pub fn check_overlap(obj: &PlacedObject, scene: &Scene, delta: f64) -> bool {
    manhattan_gap(obj, scene) <= delta
}

/// Uniform scaling by `k >= 1` about the object centroid.
pub fn resize(obj: &PlacedObject, k: f64) -> Result<PlacedObject> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("resize factor {k} below 1")));
    }
    let c = obj.centroid();
    Ok(PlacedObject { points: obj.points.iter().map(|&p| c + (p - c).scale(k)).collect() })
}

/// Drops the object so its lowest point sits at the height of the scene
/// point nearest (in xy) to the object centroid. Returns `None` when no scene
/// point lies within `search_radius`.
pub fn snap_to_ground(obj: &PlacedObject, scene: &Scene, search_radius: f64) -> Option<PlacedObject> {
    let c = obj.centroid();
    let (dist, ground) = scene
        .points()
        .iter()
        .map(|p| ((p.x - c.x).hypot(p.y - c.y), p.z))
        .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best });
    if !(dist <= search_radius) {
        return None;
    }
    let shift = obj.min_z() - ground;
    Some(PlacedObject { points: obj.points.iter().map(|p| Point3::new(p.x, p.y, p.z - shift)).collect() })
}
