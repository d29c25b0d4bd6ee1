//! Procedural LiDAR sweeps: a spinning multi-beam sensor above a ground plane
//! with box and cylinder obstacles, ray cast for the nearest hit.
//!
//! Returned points are in the sensor frame (sensor at the origin), matching
//! the layout of real sweep files. The world frame used by [`ScanConfig`] has
//! the sensor at `(0, 0, sensor_height)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::rng::{sample_uniform, RngStream};
use crate::scene::Scene;

const HIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    /// Box with footprint `length x width` rotated by `yaw` about its center.
    Box { center: [f64; 2], base_z: f64, length: f64, width: f64, height: f64, yaw: f64 },
    /// Vertical cylinder.
    Cylinder { center: [f64; 2], base_z: f64, radius: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub shape: Primitive,
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub sensor_height: f64,
    /// Beam elevation angles, radians.
    pub beam_elevations: Vec<f64>,
    /// Azimuth increment, radians.
    pub azimuth_step: f64,
    pub ground_z: f64,
    pub ground_label: u32,
    pub obstacles: Vec<Obstacle>,
    pub max_range: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            sensor_height: 1.73,
            beam_elevations: evenly_spaced_beams(16, -25.0, 3.0),
            azimuth_step: 1f64.to_radians(),
            ground_z: 0.0,
            ground_label: 1,
            obstacles: Vec::new(),
            max_range: 80.0,
        }
    }
}

/// `count` elevations spread evenly over `[lo_deg, hi_deg]`, in radians.
pub fn evenly_spaced_beams(count: usize, lo_deg: f64, hi_deg: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo_deg.to_radians()],
        n => (0..n).map(|i| (lo_deg + (hi_deg - lo_deg) * i as f64 / (n - 1) as f64).to_radians()).collect(),
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.azimuth_step > 0.0) || !self.azimuth_step.is_finite() {
            return Err(Error::InvalidInput("azimuth step must be > 0".into()));
        }
        if self.beam_elevations.is_empty() {
            return Err(Error::InvalidInput("at least one beam is required".into()));
        }
        if self.beam_elevations.iter().any(|e| !e.is_finite() || e.abs() >= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput("beam elevations must lie in (-90deg, 90deg)".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::InvalidInput("max range must be > 0".into()));
        }
        if !(self.sensor_height > self.ground_z) {
            return Err(Error::InvalidInput("sensor must be above the ground plane".into()));
        }
        Ok(())
    }

    /// Azimuth grid `-pi + j * step`, all strictly below `pi`.
    pub fn azimuths(&self) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        let count = (std::f64::consts::TAU / self.azimuth_step - 1e-9).ceil() as usize;
        (0..count).map(|j| -pi + j as f64 * self.azimuth_step).filter(|a| *a < pi).collect()
    }

    /// Copy of this config with a freshly sampled obstacle layout.
    pub fn with_random_layout(&self, layout: &LayoutConfig, rng: &mut RngStream) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.obstacles = layout.sample(self.ground_z, rng)?;
        Ok(cfg)
    }
}

/// Distribution of obstacles for randomized worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    /// Inclusive count range of boxes.
    pub boxes: [u32; 2],
    pub cylinders: [u32; 2],
    /// Radial placement range of obstacle centers, meters.
    pub radius: [f64; 2],
    pub box_length: [f64; 2],
    pub box_width: [f64; 2],
    pub box_height: [f64; 2],
    pub cylinder_radius: [f64; 2],
    pub cylinder_height: [f64; 2],
    pub box_label: u32,
    pub cylinder_label: u32,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            boxes: [4, 10],
            cylinders: [4, 12],
            radius: [4.0, 30.0],
            box_length: [3.5, 5.0],
            box_width: [1.6, 2.0],
            box_height: [1.3, 1.8],
            cylinder_radius: [0.1, 0.4],
            cylinder_height: [2.5, 6.0],
            box_label: 2,
            cylinder_label: 3,
        }
    }
}

impl LayoutConfig {
    fn sample(&self, ground_z: f64, rng: &mut RngStream) -> Result<Vec<Obstacle>> {
        let count = |rng: &mut RngStream, r: [u32; 2]| -> Result<u32> {
            if r[0] > r[1] {
                return Err(Error::InvalidRange { lo: r[0] as f64, hi: r[1] as f64 });
            }
            Ok(r[0] + rng.below((r[1] - r[0] + 1) as usize) as u32)
        };
        let draw = |rng: &mut RngStream, r: [f64; 2]| -> Result<f64> {
            if r[0] == r[1] {
                return Ok(r[0]);
            }
            sample_uniform(rng, r[0], r[1])
        };
        let mut out = Vec::new();
        let center = |rng: &mut RngStream| -> Result<[f64; 2]> {
            let d = draw(rng, self.radius)?;
            let a = draw(rng, [-std::f64::consts::PI, std::f64::consts::PI])?;
            Ok([d * a.cos(), d * a.sin()])
        };
        for _ in 0..count(rng, self.boxes)? {
            let c = center(rng)?;
            out.push(Obstacle {
                shape: Primitive::Box {
                    center: c,
                    base_z: ground_z,
                    length: draw(rng, self.box_length)?,
                    width: draw(rng, self.box_width)?,
                    height: draw(rng, self.box_height)?,
                    yaw: draw(rng, [-std::f64::consts::PI, std::f64::consts::PI])?,
                },
                label: self.box_label,
            });
        }
        for _ in 0..count(rng, self.cylinders)? {
            let c = center(rng)?;
            out.push(Obstacle {
                shape: Primitive::Cylinder {
                    center: c,
                    base_z: ground_z,
                    radius: draw(rng, self.cylinder_radius)?,
                    height: draw(rng, self.cylinder_height)?,
                },
                label: self.cylinder_label,
            });
        }
        Ok(out)
    }
}

fn ray_box(o: Point3, d: Point3, center: [f64; 2], base_z: f64, half: [f64; 2], height: f64, yaw: f64) -> Option<f64> {
    let lo = Point3::new(o.x - center[0], o.y - center[1], o.z).rotate_z(-yaw);
    let ld = d.rotate_z(-yaw);
    let bounds = [(-half[0], half[0]), (-half[1], half[1]), (base_z, base_z + height)];
    let (oc, dc) = ([lo.x, lo.y, lo.z], [ld.x, ld.y, ld.z]);
    let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
    for axis in 0..3 {
        let (bmin, bmax) = bounds[axis];
        if dc[axis].abs() < 1e-15 {
            if oc[axis] < bmin || oc[axis] > bmax {
                return None;
            }
            continue;
        }
        let t1 = (bmin - oc[axis]) / dc[axis];
        let t2 = (bmax - oc[axis]) / dc[axis];
        tmin = tmin.max(t1.min(t2));
        tmax = tmax.min(t1.max(t2));
    }
    if tmax < tmin.max(HIT_EPS) {
        return None;
    }
    Some(if tmin > HIT_EPS { tmin } else { tmax })
}

fn ray_cylinder(o: Point3, d: Point3, center: [f64; 2], base_z: f64, radius: f64, height: f64) -> Option<f64> {
    let (ox, oy) = (o.x - center[0], o.y - center[1]);
    let top = base_z + height;
    let mut best = f64::INFINITY;
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = 2.0 * (ox * d.x + oy * d.y);
        let c = ox * ox + oy * oy - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                let z = o.z + t * d.z;
                if t > HIT_EPS && z >= base_z && z <= top {
                    best = best.min(t);
                    break;
                }
            }
        }
    }
    if d.z != 0.0 {
        for zc in [top, base_z] {
            let t = (zc - o.z) / d.z;
            if t > HIT_EPS {
                let (x, y) = (ox + t * d.x, oy + t * d.y);
                if x * x + y * y <= radius * radius {
                    best = best.min(t);
                }
            }
        }
    }
    best.is_finite().then_some(best)
}

impl Primitive {
    fn intersect(&self, o: Point3, d: Point3) -> Option<f64> {
        match *self {
            Primitive::Box { center, base_z, length, width, height, yaw } => {
                ray_box(o, d, center, base_z, [0.5 * length, 0.5 * width], height, yaw)
            }
            Primitive::Cylinder { center, base_z, radius, height } => {
                ray_cylinder(o, d, center, base_z, radius, height)
            }
        }
    }
}

/// Casts one ray per `(beam, azimuth)` and keeps the nearest hit within max
/// range. Rays without a return are omitted. Points are ordered by azimuth
/// column, then by beam.
pub fn generate_scan(cfg: &ScanConfig) -> Result<Scene> {
    cfg.validate()?;
    let origin = Point3::new(0.0, 0.0, cfg.sensor_height);
    let columns: Vec<Vec<(Point3, u32)>> = cfg
        .azimuths()
        .into_par_iter()
        .map(|az| {
            let (saz, caz) = az.sin_cos();
            cfg.beam_elevations
                .iter()
                .filter_map(|&el| {
                    let (sel, cel) = el.sin_cos();
                    let d = Point3::new(cel * caz, cel * saz, sel);
                    let mut best = (f64::INFINITY, 0u32);
                    if d.z < 0.0 {
                        best = ((cfg.ground_z - origin.z) / d.z, cfg.ground_label);
                    }
                    for ob in &cfg.obstacles {
                        if let Some(t) = ob.shape.intersect(origin, d) {
                            if t < best.0 {
                                best = (t, ob.label);
                            }
                        }
                    }
                    (best.0 <= cfg.max_range).then(|| (d.scale(best.0), best.1))
                })
                .collect()
        })
        .collect();
    let (points, labels): (Vec<Point3>, Vec<u32>) = columns.into_iter().flatten().unzip();
    if points.is_empty() {
        return Err(Error::InvalidInput("scan produced no returns".into()));
    }
    Scene::new(points, None, labels)
}
