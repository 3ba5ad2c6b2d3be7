use glam::Vec3;
use serde::{Deserialize, Serialize};

use crate::geometry::Ray;
use crate::{Error, Result};

/// Pinhole camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_y_deg: f32,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        let fwd = self.look_at - self.position;
        if !(self.fov_y_deg > 0.0 && self.fov_y_deg < 180.0) {
            return Err(Error::InvalidConfig(format!("camera FOV {} outside (0, 180)", self.fov_y_deg)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("camera image must be at least 1x1".into()));
        }
        if fwd.length_squared() == 0.0 || fwd.cross(self.up).length_squared() == 0.0 {
            return Err(Error::InvalidConfig("camera look-at/up are degenerate".into()));
        }
        Ok(())
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Primary ray through the center of pixel `(x, y)`, `y` counted from the top.
    pub fn ray(&self, x: u32, y: u32) -> Ray {
        let fwd = (self.look_at - self.position).normalize();
        let right = fwd.cross(self.up).normalize();
        let up = right.cross(fwd);
        let half_h = (self.fov_y_deg.to_radians() * 0.5).tan();
        let half_w = half_h * self.width as f32 / self.height as f32;
        let sx = ((x as f32 + 0.5) / self.width as f32 * 2.0 - 1.0) * half_w;
        let sy = (1.0 - (y as f32 + 0.5) / self.height as f32 * 2.0) * half_h;
        let dir = (fwd + sx * right + sy * up).normalize();
        Ray::new(self.position, dir, 0.0, f32::INFINITY)
    }

    pub fn content_hash(&self) -> String {
        crate::config::hash_json(self)
    }
}
