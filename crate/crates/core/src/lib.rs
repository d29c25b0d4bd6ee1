//! Point-wise abstaining-penalty anomaly detection for LiDAR point clouds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod gradcheck;
pub mod io;
pub mod labels;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scene;
pub mod synthesis;

pub use error::{Error, Result};
pub use geometry::{from_spherical, to_spherical, Point3, SphericalCoord};
pub use labels::LabelSpace;
pub use rng::{sample_object_count, sample_uniform, RngStream};
pub use scene::Scene;
