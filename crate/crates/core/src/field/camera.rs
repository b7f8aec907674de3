use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Point3};
use crate::{Error, Result};

/// Pinhole camera with an orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Point3,
    pub forward: Point3,
    pub up: Point3,
    pub width: usize,
    pub height: usize,
    pub vfov: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub direction: Point3,
}

impl Camera {
    /// Orthonormalizes `up` against `forward`.
    pub fn new(position: Point3, forward: Point3, up: Point3, width: usize, height: usize, vfov: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("camera resolution must be positive"));
        }
        if !(vfov > 0.0 && vfov < std::f64::consts::PI) {
            return Err(Error::invalid(format!("vertical fov {vfov} outside (0, pi)")));
        }
        if position.iter().chain(forward.iter()).chain(up.iter()).any(|c| !c.is_finite()) {
            return Err(Error::invalid("camera vectors must be finite"));
        }
        let f = forward
            .try_normalize(1e-12)
            .ok_or_else(|| Error::invalid("camera forward vector is zero"))?;
        let right = f
            .cross(&up)
            .try_normalize(1e-9)
            .ok_or_else(|| Error::invalid("camera up vector is parallel to forward"))?;
        let up = right.cross(&f);
        Ok(Self {
            position,
            forward: f,
            up,
            width,
            height,
            vfov,
        })
    }

    pub fn look_at(position: Point3, target: Point3, up_hint: Point3, width: usize, height: usize, vfov: f64) -> Result<Self> {
        Self::new(position, target - position, up_hint, width, height, vfov)
    }

    pub fn right(&self) -> Point3 {
        self.forward.cross(&self.up)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Same pose at a different resolution.
    pub fn with_resolution(&self, width: usize, height: usize) -> Self {
        Self { width, height, ..*self }
    }

    /// Ray through the center of pixel `index` (row-major, top row first).
    pub fn ray(&self, index: usize) -> Ray {
        let (px, py) = (index % self.width, index / self.width);
        let tan_half = (self.vfov * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let u = ((px as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * tan_half * aspect;
        let v = (1.0 - (py as f64 + 0.5) / self.height as f64 * 2.0) * tan_half;
        let direction = (self.forward + self.right() * u + self.up * v).normalize();
        Ray {
            origin: self.position,
            direction,
        }
    }
}

impl Ray {
    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.direction * t
    }

    /// Parametric interval inside `bounds` (clipped to `t ≥ 0`), if any.
    pub fn clip(&self, bounds: &Aabb<3>) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for k in 0..3 {
            let d = self.direction[k];
            let o = self.origin[k];
            if d.abs() < 1e-15 {
                if o < bounds.min[k] || o > bounds.max[k] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (mut a, mut b) = ((bounds.min[k] - o) * inv, (bounds.max[k] - o) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
        (t1 > t0).then_some((t0, t1))
    }
}
