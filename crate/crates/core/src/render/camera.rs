use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};

/// Pinhole camera, `x_cam = R x + t` with `+z` forward, `+x` right and `+y`
/// down in the image. Pixel `(i, j)` covers `[i, i+1) × [j, j+1)`, so its
/// center sits at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation, row-major.
    pub rotation: Mat3<f64>,
    pub translation: Vec3<f64>,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3<f64>,
    /// Unit length.
    pub dir: Vec3<f64>,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3<f64> {
        self.origin + self.dir * t
    }
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument(format!(
                "camera needs fx, fy > 0 and a non-empty image, got fx={} fy={} {}x{}",
                self.fx, self.fy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`, principal point at the image
    /// center, vertical field of view `fov_y` (radians).
    pub fn look_at(eye: Vec3<f64>, target: Vec3<f64>, up: Vec3<f64>, fov_y: f64, width: usize, height: usize) -> Self {
        let forward = (target - eye).normalize();
        let right = forward.cross(up).normalize();
        let down = forward.cross(right);
        let rotation = Mat3::from_rows(right, down, forward);
        let f = 0.5 * height as f64 / (0.5 * fov_y).tan();
        Self {
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            translation: -(rotation * eye),
            rotation,
            width,
            height,
        }
    }

    /// Optical center in world space.
    pub fn center(&self) -> Vec3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, x: Vec3<f64>) -> Vec3<f64> {
        self.rotation * x + self.translation
    }

    /// Image coordinates and camera depth `z`; `None` behind the camera.
    pub fn project(&self, x: Vec3<f64>) -> Option<(f64, f64, f64)> {
        let p = self.to_camera(x);
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy, p.z))
    }

    /// Unnormalized camera-space direction through image point `(u, v)`.
    pub fn camera_dir(&self, u: f64, v: f64) -> Vec3<f64> {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn ray_through(&self, u: f64, v: f64) -> Ray {
        Ray { origin: self.center(), dir: (self.rotation.transpose() * self.camera_dir(u, v)).normalize() }
    }

    pub fn pixel_ray(&self, i: usize, j: usize) -> Result<Ray> {
        if i >= self.width || j >= self.height {
            return Err(Error::PixelOutOfBounds { x: i, y: j, width: self.width, height: self.height });
        }
        Ok(self.ray_through(i as f64 + 0.5, j as f64 + 0.5))
    }
}

/// Rays through the centers of `pixels` (column, row).
pub fn generate_rays(camera: &Camera, pixels: &[(usize, usize)]) -> Result<Vec<Ray>> {
    camera.validate()?;
    pixels.iter().map(|&(i, j)| camera.pixel_ray(i, j)).collect()
}

/// Every pixel in row-major order.
pub fn all_pixels(camera: &Camera) -> Vec<(usize, usize)> {
    (0..camera.height).flat_map(|j| (0..camera.width).map(move |i| (i, j))).collect()
}
