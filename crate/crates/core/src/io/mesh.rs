//! Object assets: point sets in a canonical pose, optionally sampled from
//! triangle meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::rng::RngStream;

pub const MIN_ASSET_POINTS: usize = 10;

/// The axis that points "up" in an asset's own frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UpAxis {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[default]
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAsset {
    pub points: Vec<Point3>,
    pub source_id: String,
    pub up: UpAxis,
}

impl ObjectAsset {
    pub fn new(points: Vec<Point3>, source_id: impl Into<String>, up: UpAxis) -> Result<Self> {
        if points.len() < MIN_ASSET_POINTS {
            return Err(Error::InvalidInput(format!(
                "asset has {} points, need at least {MIN_ASSET_POINTS}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("asset has non-finite coordinates".into()));
        }
        let first = points[0];
        if points.iter().all(|p| *p == first) {
            return Err(Error::InvalidInput("asset bounding box is empty".into()));
        }
        Ok(Self { points, source_id: source_id.into(), up })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= vertices.len())) {
            return Err(Error::InvalidMesh(format!("triangle {t:?} indexes past {} vertices", vertices.len())));
        }
        let mesh = Self { vertices, triangles };
        if !mesh.triangle_areas().iter().any(|&a| a > 0.0) {
            return Err(Error::InvalidMesh("no triangle with positive area".into()));
        }
        Ok(mesh)
    }

    pub fn triangle_areas(&self) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                let (u, v) = (b - a, c - a);
                let cross = Point3::new(u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x);
                0.5 * cross.norm()
            })
            .collect()
    }
}

/// Area-weighted surface sampling with uniform barycentric draws per triangle.
pub fn sample_mesh_surface(
    mesh: &TriangleMesh,
    count: usize,
    rng: &mut RngStream,
    source_id: impl Into<String>,
    up: UpAxis,
) -> Result<ObjectAsset> {
    if count < MIN_ASSET_POINTS {
        return Err(Error::InvalidInput(format!("sample count {count} < {MIN_ASSET_POINTS}")));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for a in mesh.triangle_areas() {
        total += a;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidMesh("all triangles are degenerate".into()));
    }

    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.next_f64() * total;
        // first triangle whose cumulative area exceeds the target; zero-area
        // triangles have an empty interval and are never picked
        let t = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let [ia, ib, ic] = mesh.triangles[t];
        let (a, b, c) = (mesh.vertices[ia], mesh.vertices[ib], mesh.vertices[ic]);
        let s = rng.next_f64().sqrt();
        let r2 = rng.next_f64();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        points.push(Point3::new(
            wa * a.x + wb * b.x + wc * c.x,
            wa * a.y + wb * b.y + wc * c.y,
            wa * a.z + wb * b.z + wc * c.z,
        ));
    }
    ObjectAsset::new(points, source_id, up)
}

/// ASCII point list, one `x y z` triple per line. Blank lines and `#`
/// comments are skipped; extra columns are ignored.
pub fn parse_xyz(text: &str) -> std::result::Result<Vec<Point3>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
        let mut next = || -> std::result::Result<f64, String> {
            it.next()
                .ok_or_else(|| format!("line {}: expected 3 coordinates", lineno + 1))?
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", lineno + 1))
        };
        out.push(Point3::new(next()?, next()?, next()?));
    }
    Ok(out)
}

/// OBJ subset: `v` and `f` records only. Polygon faces are fan-triangulated;
/// `f` entries may carry `/vt/vn` suffixes and negative (relative) indices.
pub fn parse_obj(text: &str) -> std::result::Result<(Vec<Point3>, Vec<[usize; 3]>), String> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1)))
                    .collect::<std::result::Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(format!("line {}: vertex needs 3 coordinates", lineno + 1));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = fields
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|e| format!("line {}: {e}", lineno + 1))?;
                        let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                        if resolved < 0 {
                            return Err(format!("line {}: bad vertex index {i}", lineno + 1));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<std::result::Result<_, String>>()?;
                if idx.len() < 3 {
                    return Err(format!("line {}: face needs at least 3 vertices", lineno + 1));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Loads an asset file: `.obj` meshes are surface-sampled with
/// `sample_count` points, anything else is read as an ASCII point list.
pub fn load_asset(path: impl AsRef<Path>, sample_count: usize, up: UpAxis, rng: &mut RngStream) -> Result<ObjectAsset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let is_obj = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    if is_obj {
        let (v, t) = parse_obj(&text).map_err(|r| Error::format(path, r))?;
        let mesh = TriangleMesh::new(v, t)?;
        sample_mesh_surface(&mesh, sample_count, rng, id, up)
    } else {
        let pts = parse_xyz(&text).map_err(|r| Error::format(path, r))?;
        ObjectAsset::new(pts, id, up)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_containment() {
        let mut rng = RngStream::new(1, 0);
        let a = sample_mesh_surface(&unit_square(), 1000, &mut rng, "sq", UpAxis::PosZ).unwrap();
        assert_eq!(a.points.len(), 1000);
        for p in &a.points {
            assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn single_triangle_centroid() {
        let mesh = TriangleMesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut rng = RngStream::new(2, 0);
        let a = sample_mesh_surface(&mesh, 100_000, &mut rng, "t", UpAxis::PosZ).unwrap();
        let c = crate::geometry::centroid(&a.points);
        assert!((c.x - 1.0 / 3.0).abs() < 0.02 && (c.y - 1.0 / 3.0).abs() < 0.02);
        assert_eq!(c.z, 0.0);
    }

    #[test]
    fn area_weighting() {
        // areas 1 and 3, disjoint in x
        let mesh = TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(10.0, 0.0, 0.0),
                Point3::new(13.0, 0.0, 0.0),
                Point3::new(10.0, 2.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert_eq!(mesh.triangle_areas(), vec![1.0, 3.0]);
        let mut rng = RngStream::new(3, 0);
        let a = sample_mesh_surface(&mesh, 100_000, &mut rng, "two", UpAxis::PosZ).unwrap();
        let first = a.points.iter().filter(|p| p.x < 5.0).count() as f64;
        let second = a.points.len() as f64 - first;
        let ratio = first / second;
        assert!((ratio - 1.0 / 3.0).abs() <= 0.02 / 3.0, "ratio {ratio}");
    }

    #[test]
    fn degenerate_triangles_never_selected() {
        let mesh = TriangleMesh::new(
            vec![
                Point3::new(5.0, 5.0, 5.0),
                Point3::new(6.0, 6.0, 6.0),
                Point3::new(7.0, 7.0, 7.0),
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5], [0, 0, 1]],
        )
        .unwrap();
        let mut rng = RngStream::new(4, 0);
        let a = sample_mesh_surface(&mesh, 5000, &mut rng, "d", UpAxis::PosZ).unwrap();
        assert!(a.points.iter().all(|p| p.z == 0.0 && p.x + p.y <= 1.0 + 1e-12));
    }

    #[test]
    fn all_degenerate_is_invalid() {
        let err = TriangleMesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0), Point3::new(2.0, 2.0, 2.0)],
            vec![[0, 1, 2]],
        );
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
        assert!(TriangleMesh::new(vec![Point3::ORIGIN], vec![[0, 0, 3]]).is_err());
    }

    #[test]
    fn too_few_samples() {
        let mut rng = RngStream::new(4, 0);
        assert!(sample_mesh_surface(&unit_square(), 9, &mut rng, "x", UpAxis::PosZ).is_err());
    }

    #[test]
    fn obj_fan_triangulation() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let (v, t) = parse_obj(text).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(t, vec![[0, 1, 2], [0, 2, 3]]);
        let (_, t) = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(t, vec![[0, 1, 2]]);
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nf 1 2\n").is_err());
    }

    #[test]
    fn xyz_parsing() {
        let pts = parse_xyz("# c\n1 2 3\n\n4.5 5 6 99\n").unwrap();
        assert_eq!(pts, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.5, 5.0, 6.0)]);
        assert!(parse_xyz("1 2\n").is_err());
    }

    #[test]
    fn asset_invariants() {
        assert!(ObjectAsset::new(vec![Point3::ORIGIN; 20], "flat", UpAxis::PosZ).is_err());
        assert!(ObjectAsset::new(vec![Point3::new(1.0, 0.0, 0.0); 5], "few", UpAxis::PosZ).is_err());
    }

    #[test]
    fn obj_write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sq.obj");
        write_obj(&unit_square(), &path).unwrap();
        let mut rng = RngStream::new(9, 0);
        let a = load_asset(&path, 200, UpAxis::PosZ, &mut rng).unwrap();
        assert_eq!(a.points.len(), 200);
        assert_eq!(a.source_id, "sq.obj");
    }
}
