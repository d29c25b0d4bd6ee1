//! Area-weighted surface sampling of a triangle mesh.

use oodlab::geometry::centroid;
use oodlab::io::{sample_mesh_surface, TriangleMesh, UpAxis};
use oodlab::{Point3, RngStream};

fn main() -> oodlab::Result<()> {
    // two triangles with areas 0.5 and 1.0
    let mesh = TriangleMesh::new(
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(3.0, 0.0, 0.0),
            Point3::new(3.0, 1.0, 0.0),
        ],
        vec![[0, 1, 2], [1, 3, 4]],
    )?;
    let mut rng = RngStream::new(7, 0);
    let asset = sample_mesh_surface(&mesh, 100_000, &mut rng, "demo", UpAxis::PosZ)?;
    let on_second = asset.points.iter().filter(|p| p.x > 1.0).count();
    println!("areas: {:?}", mesh.triangle_areas());
    println!("share on the larger triangle: {:.4} (expected 2/3)", on_second as f64 / 100_000.0);
    let c = centroid(&asset.points);
    println!("sample centroid: ({:.4}, {:.4}, {:.4})", c.x, c.y, c.z);
    Ok(())
}
