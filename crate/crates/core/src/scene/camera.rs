use super::{Ray, RAY_EPSILON};
use crate::sampler::PixelJitter;
use glam::DVec3;

/// Pinhole camera. Raster x grows right, raster y grows down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: DVec3,
    pub forward: DVec3,
    pub right: DVec3,
    pub up: DVec3,
    pub vfov_deg: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn look_at(position: DVec3, target: DVec3, up_hint: DVec3, vfov_deg: f64, width: u32, height: u32) -> Camera {
        let forward = (target - position).normalize();
        let right = forward.cross(up_hint).normalize();
        let up = right.cross(forward);
        Camera {
            position,
            forward,
            right,
            up,
            vfov_deg,
            width,
            height,
        }
    }

    pub fn with_resolution(mut self, width: u32, height: u32) -> Camera {
        self.width = width;
        self.height = height;
        self
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Primary ray through raster position `(px + jx, py + jy)`.
    pub fn camera_ray(&self, px: u32, py: u32, jitter: PixelJitter) -> Ray {
        let tan_half = (self.vfov_deg.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (px as f64 + jitter.jx) / self.width as f64 - 1.0) * tan_half * aspect;
        let sy = (1.0 - 2.0 * (py as f64 + jitter.jy) / self.height as f64) * tan_half;
        let dir = (self.forward + self.right * sx + self.up * sy).normalize();
        Ray {
            origin: self.position,
            direction: dir,
            t_min: RAY_EPSILON,
            t_max: f64::INFINITY,
        }
    }
}
