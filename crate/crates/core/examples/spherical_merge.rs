//! Merging an object into a scene by matching spherical angles: the scene
//! points behind the object take the object's range and the outlier label.

use oodlab::synthesis::{merge_spherical, AngularWindow, PlacedObject};
use oodlab::{from_spherical, to_spherical, Point3, Scene, SphericalCoord};

fn main() -> oodlab::Result<()> {
    // a 10 m wall seen over a small patch of azimuth and elevation
    let mut points = Vec::new();
    for i in -10..=10 {
        for j in -5..=5 {
            points.push(from_spherical(SphericalCoord::new(i as f64 * 0.01, j as f64 * 0.01, 10.0)?)?);
        }
    }
    let n = points.len();
    let scene = Scene::new(points, None, vec![1; n])?;

    // a small cube 4 m out along +x
    let mut cube = Vec::new();
    for dx in [-0.1, 0.0, 0.1] {
        for dy in [-0.1, 0.0, 0.1] {
            for dz in [-0.1, 0.0, 0.1] {
                cube.push(Point3::new(4.0 + dx, dy, dz));
            }
        }
    }
    let obj = PlacedObject::new(cube)?;
    let window = AngularWindow { lon: 0.02, lat: 0.02 };
    let (merged, report) = merge_spherical(&scene, &obj, window, 5, false, 0);

    println!("{} of {} scene points replaced", report.indices.len(), n);
    for (&i, &(old, new)) in report.indices.iter().zip(&report.radii).take(5) {
        let s = to_spherical(merged.points()[i])?;
        println!(
            "point {i:3}: r {old:.2} -> {new:.2}  lon {:+.3} lat {:+.3}  label {}",
            s.lon,
            s.lat,
            merged.labels()[i]
        );
    }
    Ok(())
}
