//! Pinhole and equidistant fisheye projection.
//!
//! Pixel coordinates put the centre of pixel `(i, j)` at `(i, j)`. Rays are
//! unit vectors in camera coordinates: `+z` along the optical axis, `+x`
//! right, `+y` down.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// `r = focal * angle`, focal in pixels per radian.
    EquidistantFisheye,
    /// `r = focal * tan(angle)`.
    Rectilinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub projection: Projection,
    pub focal: f64,
    pub center: [f64; 2],
    pub width: u32,
    pub height: u32,
    /// Full field of view in degrees.
    pub fov: f64,
}

impl CameraModel {
    pub fn new(projection: Projection, focal: f64, center: [f64; 2], width: u32, height: u32, fov: f64) -> Result<Self> {
        let cam = Self { projection, focal, center, width, height, fov };
        cam.validate()?;
        Ok(cam)
    }

    /// A centred fisheye whose field of view exactly fills the shorter image
    /// side, one pixel inside the border.
    pub fn fisheye_filling(width: u32, height: u32, fov: f64) -> Result<Self> {
        let half = f64::from(width.min(height)) / 2.0 - 1.0;
        let focal = half / (fov / 2.0).to_radians();
        Self::new(Projection::EquidistantFisheye, focal, centre_of(width, height), width, height, fov)
    }

    pub fn rectilinear(width: u32, height: u32, focal: f64) -> Result<Self> {
        let half_diag = f64::from(width).hypot(f64::from(height)) / 2.0;
        let fov = 2.0 * (half_diag / focal).atan().to_degrees() + 1e-6;
        Self::new(Projection::Rectilinear, focal, centre_of(width, height), width, height, fov.min(179.999))
    }

    fn validate(&self) -> Result<()> {
        if !(self.focal > 0.0) || !self.focal.is_finite() {
            return Err(Error::invalid(format!("focal must be positive, got {}", self.focal)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("camera image must be non-empty"));
        }
        let [cx, cy] = self.center;
        if !(cx >= 0.0 && cx <= f64::from(self.width - 1) && cy >= 0.0 && cy <= f64::from(self.height - 1)) {
            return Err(Error::invalid(format!("principal point {:?} outside the image", self.center)));
        }
        let max_fov = match self.projection {
            Projection::EquidistantFisheye => 360.0,
            Projection::Rectilinear => 180.0,
        };
        if !(self.fov > 0.0 && self.fov < max_fov) {
            return Err(Error::invalid(format!("fov {} outside (0, {max_fov})", self.fov)));
        }
        Ok(())
    }

    /// Half field of view in radians.
    pub fn half_fov(&self) -> f64 {
        (self.fov / 2.0).to_radians()
    }

    /// Radial sampling density at the principal point, pixels per degree.
    pub fn native_density(&self) -> f64 {
        self.focal * PI / 180.0
    }

    pub fn contains(&self, pixel: [f64; 2]) -> bool {
        pixel[0] >= 0.0
            && pixel[1] >= 0.0
            && pixel[0] <= f64::from(self.width - 1)
            && pixel[1] <= f64::from(self.height - 1)
    }

    /// Unit ray through a pixel. Pixels beyond the field of view are rejected.
    pub fn unproject(&self, pixel: [f64; 2]) -> Result<Vec3> {
        let dx = pixel[0] - self.center[0];
        let dy = pixel[1] - self.center[1];
        let r = dx.hypot(dy);
        let angle = match self.projection {
            Projection::EquidistantFisheye => r / self.focal,
            Projection::Rectilinear => (r / self.focal).atan(),
        };
        if angle > self.half_fov() + 1e-12 {
            return Err(Error::OutOfFov);
        }
        if r == 0.0 {
            return Ok([0.0, 0.0, 1.0]);
        }
        let s = angle.sin() / r;
        Ok([dx * s, dy * s, angle.cos()])
    }

    /// Pixel hit by a ray; the ray need not be normalized.
    pub fn project(&self, ray: Vec3) -> Result<[f64; 2]> {
        let lateral = ray[0].hypot(ray[1]);
        let angle = lateral.atan2(ray[2]);
        if !angle.is_finite() || angle > self.half_fov() + 1e-12 {
            return Err(Error::OutOfFov);
        }
        if lateral == 0.0 {
            return Ok(self.center);
        }
        let r = match self.projection {
            Projection::EquidistantFisheye => self.focal * angle,
            Projection::Rectilinear => self.focal * angle.tan(),
        };
        Ok([self.center[0] + r * ray[0] / lateral, self.center[1] + r * ray[1] / lateral])
    }

    /// Pixel coordinate of a normalized image point.
    pub fn pixel_of(&self, normalized: [f64; 2]) -> [f64; 2] {
        [
            normalized[0] * f64::from(self.width) - 0.5,
            normalized[1] * f64::from(self.height) - 0.5,
        ]
    }
}

fn centre_of(width: u32, height: u32) -> [f64; 2] {
    [(f64::from(width) - 1.0) / 2.0, (f64::from(height) - 1.0) / 2.0]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn normalize(v: Vec3) -> Vec3 {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Angle between two unit rays, radians.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}
