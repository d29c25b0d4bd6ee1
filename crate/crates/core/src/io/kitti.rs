//! KITTI odometry layout: `*.bin` holds little-endian `f32` quadruples
//! `(x, y, z, intensity)`, `*.label` holds one little-endian `u32` per point
//! with the semantic class in the low 16 bits.

use std::fs;
use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scene::Scene;

pub const POINT_RECORD_BYTES: usize = 16;
pub const LABEL_MASK: u32 = 0xFFFF;

pub fn read_scene(path_points: impl AsRef<Path>, path_labels: impl AsRef<Path>) -> Result<Scene> {
    let path_points = path_points.as_ref();
    let path_labels = path_labels.as_ref();
    let raw = fs::read(path_points).map_err(|e| Error::io(path_points, e))?;
    let raw_labels = fs::read(path_labels).map_err(|e| Error::io(path_labels, e))?;

    if raw.len() % POINT_RECORD_BYTES != 0 {
        return Err(Error::format(
            path_points,
            format!("{} bytes is not a multiple of {POINT_RECORD_BYTES}", raw.len()),
        ));
    }
    if raw_labels.len() % 4 != 0 {
        return Err(Error::format(path_labels, format!("{} bytes is not a multiple of 4", raw_labels.len())));
    }
    let n = raw.len() / POINT_RECORD_BYTES;
    if raw_labels.len() / 4 != n {
        return Err(Error::format(path_labels, format!("{} labels for {n} points", raw_labels.len() / 4)));
    }
    if n == 0 {
        return Err(Error::format(path_points, "empty point file"));
    }

    let f32_at = |b: &[u8], i: usize| f32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
    let mut points = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for rec in raw.chunks_exact(POINT_RECORD_BYTES) {
        points.push(Point3::new(f32_at(rec, 0) as f64, f32_at(rec, 4) as f64, f32_at(rec, 8) as f64));
        intensity.push(f32_at(rec, 12));
    }
    let labels =
        raw_labels.chunks_exact(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) & LABEL_MASK).collect();
    Scene::new(points, Some(intensity), labels).map_err(|e| Error::format(path_points, e.to_string()))
}

/// Serializes the point payload; missing intensity is written as 0.
pub fn encode_points(scene: &Scene) -> Vec<u8> {
    let mut buf = Vec::with_capacity(scene.len() * POINT_RECORD_BYTES);
    for (i, p) in scene.points().iter().enumerate() {
        let inten = scene.intensity().map_or(0.0, |v| v[i]);
        for v in [p.x as f32, p.y as f32, p.z as f32, inten] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn encode_labels(scene: &Scene) -> Vec<u8> {
    scene.labels().iter().flat_map(|l| l.to_le_bytes()).collect()
}

pub fn write_scene(scene: &Scene, path_points: impl AsRef<Path>, path_labels: impl AsRef<Path>) -> Result<()> {
    write_atomic(path_points.as_ref(), &encode_points(scene))?;
    write_atomic(path_labels.as_ref(), &encode_labels(scene))?;
    Ok(())
}
