use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::labels::LabelSpace;

/// One LiDAR sweep in the sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    points: Vec<Point3>,
    intensity: Option<Vec<f32>>,
    labels: Vec<u32>,
}

impl Scene {
    pub fn new(points: Vec<Point3>, intensity: Option<Vec<f32>>, labels: Vec<u32>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("scene must contain at least one point".into()));
        }
        if labels.len() != points.len() {
            return Err(Error::Shape(format!("{} labels for {} points", labels.len(), points.len())));
        }
        if let Some(i) = &intensity {
            if i.len() != points.len() {
                return Err(Error::Shape(format!("{} intensities for {} points", i.len(), points.len())));
            }
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite point {p:?}")));
        }
        Ok(Self { points, intensity, labels })
    }

    /// Like [`Scene::new`] but also checks labels against `space`.
    pub fn with_label_space(
        points: Vec<Point3>,
        intensity: Option<Vec<f32>>,
        labels: Vec<u32>,
        space: LabelSpace,
    ) -> Result<Self> {
        space.check_all(&labels)?;
        Self::new(points, intensity, labels)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn intensity(&self) -> Option<&[f32]> {
        self.intensity.as_deref()
    }

    pub(crate) fn set_point(&mut self, idx: usize, p: Point3, label: u32) {
        self.points[idx] = p;
        self.labels[idx] = label;
    }

    /// Nearest and farthest distances of scene points from `center`.
    pub fn range_bounds(&self, center: Point3) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
            let d = p.distance(&center);
            (lo.min(d), hi.max(d))
        })
    }

    pub fn count_label(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}
