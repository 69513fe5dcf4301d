//! Point-cloud domain types and unit-sphere normalization.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A 3D point. All components must be finite.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        self.sub(other).norm()
    }

    pub fn dist_sq(&self, other: &Point3) -> f64 {
        self.sub(other).norm_sq()
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// An ordered point set; indices into `points` are meaningful and stable.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub label: Option<usize>,
}

impl PointCloud {
    /// Build a cloud, validating the non-empty / all-finite invariants.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidCloud(String::from("empty point set")));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCloud(alloc::format!(
                "non-finite coordinate at point {i}"
            )));
        }
        Ok(PointCloud { points, label: None })
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Componentwise arithmetic mean of the cloud.
pub fn centroid(cloud: &PointCloud) -> Result<Point3> {
    if cloud.is_empty() {
        return Err(Error::InvalidCloud(String::from("empty point set")));
    }
    let n = cloud.len() as f64;
    let mut c = Point3::ORIGIN;
    for p in &cloud.points {
        c.x += p.x;
        c.y += p.y;
        c.z += p.z;
    }
    Ok(c.scale(1.0 / n))
}

/// Center the cloud at the origin and scale so the farthest point has norm 1.
///
/// A fixed query radius is only meaningful when every cloud lives in the same
/// coordinate range, so this runs before any grouping. An all-coincident
/// cloud maps to the origin instead of erroring, keeping batch pipelines total.
pub fn normalize_unit_sphere(cloud: &PointCloud) -> Result<PointCloud> {
    let c = centroid(cloud)?;
    let mut centered: Vec<Point3> = cloud.points.iter().map(|p| p.sub(&c)).collect();
    let max_norm = centered
        .iter()
        .map(|p| p.norm())
        .fold(0.0_f64, f64::max);
    if max_norm > 0.0 {
        let inv = 1.0 / max_norm;
        for p in &mut centered {
            *p = p.scale(inv);
        }
    }
    let mut out = PointCloud::new(centered)?;
    out.label = cloud.label;
    Ok(out)
}
