//! Points and the Cartesian/spherical conversions used throughout the crate.
//!
//! Spherical coordinates follow the automotive LiDAR convention: `lon` is the
//! azimuth `atan2(y, x)` and `lat` is the elevation above the xy-plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    #[inline]
    pub fn xy_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    #[inline]
    pub fn scale(&self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }

    /// Rotation about the z axis by `angle` radians.
    #[inline]
    pub fn rotate_z(&self, angle: f64) -> Point3 {
        let (s, c) = angle.sin_cos();
        Point3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl std::ops::Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// Azimuth / elevation / range triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCoord {
    pub lon: f64,
    pub lat: f64,
    pub r: f64,
}

impl SphericalCoord {
    pub fn new(lon: f64, lat: f64, r: f64) -> Result<Self> {
        let s = Self { lon, lat, r };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lon.is_finite() && self.lat.is_finite() && self.r.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite spherical coordinate {self:?}")));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidInput(format!("negative radius {}", self.r)));
        }
        if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&self.lon) {
            return Err(Error::InvalidInput(format!("lon {} outside [-pi, pi]", self.lon)));
        }
        if self.lat.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidInput(format!("lat {} outside [-pi/2, pi/2]", self.lat)));
        }
        Ok(())
    }
}

/// Cartesian to spherical. The origin maps to `(0, 0, 0)`.
pub fn to_spherical(p: Point3) -> Result<SphericalCoord> {
    if !p.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite point {p:?}")));
    }
    Ok(to_spherical_unchecked(p))
}

#[inline]
pub(crate) fn to_spherical_unchecked(p: Point3) -> SphericalCoord {
    let r = p.norm();
    if r == 0.0 {
        return SphericalCoord { lon: 0.0, lat: 0.0, r: 0.0 };
    }
    // atan2 returns pi for (-x, +0); fold onto -pi so lon stays in [-pi, pi).
    let mut lon = p.y.atan2(p.x);
    if lon == std::f64::consts::PI {
        lon = -std::f64::consts::PI;
    }
    let lat = (p.z / r).clamp(-1.0, 1.0).asin();
    SphericalCoord { lon, lat, r }
}

/// Spherical to Cartesian.
pub fn from_spherical(s: SphericalCoord) -> Result<Point3> {
    s.validate()?;
    Ok(from_spherical_unchecked(s))
}

#[inline]
pub(crate) fn from_spherical_unchecked(s: SphericalCoord) -> Point3 {
    let (slat, clat) = s.lat.sin_cos();
    let (slon, clon) = s.lon.sin_cos();
    Point3::new(s.r * clat * clon, s.r * clat * slon, s.r * slat)
}

/// Signed smallest difference `a - b` between two angles, in `(-pi, pi]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut d = (a - b) % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let n = points.len() as f64;
    let sum = points.iter().fold(Point3::ORIGIN, |acc, p| acc + *p);
    sum.scale(1.0 / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn axis_aligned_and_pole() {
        let s = to_spherical(Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(close(s.lon, 0.0) && close(s.lat, 0.0) && close(s.r, 1.0));
        let s = to_spherical(Point3::new(0.0, 0.0, 2.0)).unwrap();
        assert!(close(s.lon, 0.0) && close(s.lat, FRAC_PI_2) && close(s.r, 2.0));
    }

    #[test]
    fn diagonal_point() {
        let s = to_spherical(Point3::new(1.0, 1.0, 2f64.sqrt())).unwrap();
        assert!(close(s.lon, FRAC_PI_4));
        assert!(close(s.lat, FRAC_PI_4));
        assert!(close(s.r, 2.0));
    }

    #[test]
    fn origin_convention() {
        let s = to_spherical(Point3::ORIGIN).unwrap();
        assert_eq!((s.lon, s.lat, s.r), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(to_spherical(Point3::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(to_spherical(Point3::new(0.0, f64::INFINITY, 0.0)).is_err());
        assert!(from_spherical(SphericalCoord { lon: 0.0, lat: 0.0, r: -1.0 }).is_err());
    }

    #[test]
    fn inverse_examples() {
        let p = from_spherical(SphericalCoord::new(0.0, 0.0, 5.0).unwrap()).unwrap();
        assert!(close(p.x, 5.0) && close(p.y, 0.0) && close(p.z, 0.0));
        let p = from_spherical(SphericalCoord::new(FRAC_PI_2, 0.0, 1.0).unwrap()).unwrap();
        assert!(close(p.x, 0.0) && close(p.y, 1.0) && close(p.z, 0.0));
    }

    #[test]
    fn negative_x_axis_lon_is_minus_pi() {
        let s = to_spherical(Point3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(s.lon, -std::f64::consts::PI);
    }

    #[test]
    fn angle_diff_wraps() {
        assert!(close(angle_diff(3.1, -3.1), 6.2 - std::f64::consts::TAU));
        assert!(close(angle_diff(0.3, 0.1), 0.2));
    }
}
