//! Small library of procedural meshes standing in for an external asset
//! collection. Shapes are grouped into two disjoint families so that training
//! and evaluation can use different object categories.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Point3;
use crate::rng::RngStream;

use super::mesh::{sample_mesh_surface, write_obj, ObjectAsset, TriangleMesh, UpAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetFamily {
    /// Smooth shapes: sphere, ellipsoid, torus, capsule-like spindle.
    Round,
    /// Faceted shapes: cone, pyramid, octahedron, tetrahedron.
    Angular,
}

pub fn uv_sphere(rx: f64, ry: f64, rz: f64, rings: usize, segments: usize) -> TriangleMesh {
    let mut v = vec![Point3::new(0.0, 0.0, rz)];
    for i in 1..rings {
        let phi = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let th = TAU * j as f64 / segments as f64;
            v.push(Point3::new(rx * phi.sin() * th.cos(), ry * phi.sin() * th.sin(), rz * phi.cos()));
        }
    }
    v.push(Point3::new(0.0, 0.0, -rz));
    let bottom = v.len() - 1;
    let idx = |ring: usize, seg: usize| 1 + (ring - 1) * segments + seg % segments;
    let mut t = Vec::new();
    for j in 0..segments {
        t.push([0, idx(1, j), idx(1, j + 1)]);
        t.push([bottom, idx(rings - 1, j + 1), idx(rings - 1, j)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            t.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            t.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh { vertices: v, triangles: t }
}

pub fn torus(major: f64, minor: f64, segments: usize, sides: usize) -> TriangleMesh {
    let mut v = Vec::with_capacity(segments * sides);
    for i in 0..segments {
        let u = TAU * i as f64 / segments as f64;
        for j in 0..sides {
            let w = TAU * j as f64 / sides as f64;
            let r = major + minor * w.cos();
            v.push(Point3::new(r * u.cos(), r * u.sin(), minor * w.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % segments) * sides + j % sides;
    let mut t = Vec::new();
    for i in 0..segments {
        for j in 0..sides {
            t.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            t.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh { vertices: v, triangles: t }
}

/// Cone with its base centered at `z = -height / 2`.
pub fn cone(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let h2 = 0.5 * height;
    let mut v = vec![Point3::new(0.0, 0.0, h2), Point3::new(0.0, 0.0, -h2)];
    for j in 0..segments {
        let th = TAU * j as f64 / segments as f64;
        v.push(Point3::new(radius * th.cos(), radius * th.sin(), -h2));
    }
    let ring = |j: usize| 2 + j % segments;
    let mut t = Vec::new();
    for j in 0..segments {
        t.push([0, ring(j), ring(j + 1)]);
        t.push([1, ring(j + 1), ring(j)]);
    }
    TriangleMesh { vertices: v, triangles: t }
}

pub fn pyramid(base: f64, height: f64) -> TriangleMesh {
    let (b, h2) = (0.5 * base, 0.5 * height);
    let v = vec![
        Point3::new(-b, -b, -h2),
        Point3::new(b, -b, -h2),
        Point3::new(b, b, -h2),
        Point3::new(-b, b, -h2),
        Point3::new(0.0, 0.0, h2),
    ];
    let t = vec![[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
    TriangleMesh { vertices: v, triangles: t }
}

pub fn octahedron(rxy: f64, rz: f64) -> TriangleMesh {
    let v = vec![
        Point3::new(rxy, 0.0, 0.0),
        Point3::new(0.0, rxy, 0.0),
        Point3::new(-rxy, 0.0, 0.0),
        Point3::new(0.0, -rxy, 0.0),
        Point3::new(0.0, 0.0, rz),
        Point3::new(0.0, 0.0, -rz),
    ];
    let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]];
    TriangleMesh { vertices: v, triangles: t }
}

pub fn tetrahedron(size: f64) -> TriangleMesh {
    let s = 0.5 * size;
    let v = vec![Point3::new(s, s, s), Point3::new(s, -s, -s), Point3::new(-s, s, -s), Point3::new(-s, -s, s)];
    TriangleMesh { vertices: v, triangles: vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]] }
}

pub fn family_meshes(family: AssetFamily) -> Vec<(&'static str, TriangleMesh)> {
    match family {
        AssetFamily::Round => vec![
            ("sphere", uv_sphere(0.4, 0.4, 0.4, 12, 24)),
            ("ellipsoid", uv_sphere(0.6, 0.3, 0.25, 12, 24)),
            ("torus", torus(0.4, 0.12, 32, 12)),
            ("spindle", uv_sphere(0.15, 0.15, 0.5, 12, 24)),
        ],
        AssetFamily::Angular => vec![
            ("cone", cone(0.35, 0.8, 24)),
            ("pyramid", pyramid(0.7, 0.6)),
            ("octahedron", octahedron(0.4, 0.55)),
            ("tetrahedron", tetrahedron(0.6)),
        ],
    }
}

/// Surface-samples every mesh of a family into an asset.
pub fn family_assets(family: AssetFamily, samples: usize, rng: &mut RngStream) -> Result<Vec<ObjectAsset>> {
    family_meshes(family)
        .into_iter()
        .map(|(name, mesh)| sample_mesh_surface(&mesh, samples, rng, name, UpAxis::PosZ))
        .collect()
}

/// Writes a family as `<name>.obj` files into `dir`.
pub fn export_family(family: AssetFamily, dir: impl AsRef<Path>) -> Result<()> {
    for (name, mesh) in family_meshes(family) {
        write_obj(&mesh, dir.as_ref().join(format!("{name}.obj")))?;
    }
    Ok(())
}
