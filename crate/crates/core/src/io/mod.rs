//! Scene files, object assets and procedural scans.

mod atomic;
mod kitti;
mod mesh;
pub mod procedural;
mod scan;

pub use atomic::write_atomic;
pub use kitti::{encode_labels, encode_points, read_scene, write_scene, LABEL_MASK, POINT_RECORD_BYTES};
pub use mesh::{
    load_asset, parse_obj, parse_xyz, sample_mesh_surface, write_obj, ObjectAsset, TriangleMesh, UpAxis,
    MIN_ASSET_POINTS,
};
pub use scan::{evenly_spaced_beams, generate_scan, LayoutConfig, Obstacle, Primitive, ScanConfig};
