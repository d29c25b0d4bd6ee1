use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{to_spherical, Point3};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    X,
    Y,
    Z,
    /// Distance from the sensor.
    R,
    Lat,
    Lon,
    /// Number of other points within `density_radius`.
    Density,
}

/// Per-point input features. Each raw value is divided by its scale; angles
/// are divided by π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub features: Vec<Feature>,
    pub density_radius: f64,
    pub xy_scale: f64,
    pub z_scale: f64,
    pub range_scale: f64,
    pub density_scale: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            features: vec![Feature::Z, Feature::R, Feature::Lat, Feature::Density],
            density_radius: 1.0,
            xy_scale: 40.0,
            z_scale: 2.0,
            range_scale: 40.0,
            density_scale: 20.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidInput("features.features must list at least one feature".into()));
        }
        if self.features.contains(&Feature::Density) && !(self.density_radius > 0.0 && self.density_radius.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "features.density_radius must be > 0, got {}",
                self.density_radius
            )));
        }
        for (name, v) in [
            ("xy_scale", self.xy_scale),
            ("z_scale", self.z_scale),
            ("range_scale", self.range_scale),
            ("density_scale", self.density_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("features.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

type Cell = (i64, i64, i64);

fn cell_of(p: &Point3, size: f64) -> Cell {
    ((p.x / size).floor() as i64, (p.y / size).floor() as i64, (p.z / size).floor() as i64)
}

/// Exact count of other points within `radius` (inclusive) of each point.
pub fn neighbor_counts(points: &[Point3], radius: f64) -> Vec<u32> {
    let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell_of(p, radius)).or_default().push(i);
    }
    let r2 = radius * radius;
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy, cz) = cell_of(p, radius);
            let mut count = 0;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                            for &j in bucket {
                                if j != i {
                                    let d = *p - points[j];
                                    if d.x * d.x + d.y * d.y + d.z * d.z <= r2 {
                                        count += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            count
        })
        .collect()
}

pub fn extract_features(scene: &Scene, cfg: &FeatureConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let pts = scene.points();
    let density = cfg.features.contains(&Feature::Density).then(|| neighbor_counts(pts, cfg.density_radius));
    let mut out = Array2::zeros((pts.len(), cfg.dim()));
    for (i, p) in pts.iter().enumerate() {
        let sph = to_spherical(*p)?;
        for (k, f) in cfg.features.iter().enumerate() {
            out[[i, k]] = match f {
                Feature::X => p.x / cfg.xy_scale,
                Feature::Y => p.y / cfg.xy_scale,
                Feature::Z => p.z / cfg.z_scale,
                Feature::R => sph.r / cfg.range_scale,
                Feature::Lat => sph.lat / PI,
                Feature::Lon => sph.lon / PI,
                Feature::Density => density.as_ref().map_or(0.0, |d| d[i] as f64) / cfg.density_scale,
            };
        }
    }
    Ok(out)
}
