use serde::{Deserialize, Serialize};

use crate::error::{Result, WavePlanesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    #[default]
    White,
    Black,
}

impl Background {
    pub fn rgb(self) -> [f64; 3] {
        match self {
            Background::White => [1.0; 3],
            Background::Black => [0.0; 3],
        }
    }
}

/// Pinhole camera in the OpenGL convention: the camera looks down its local
/// -z axis with +y up. `pose` is camera-to-world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub pose: [[f64; 4]; 4],
    pub focal: f64,
    pub width: usize,
    pub height: usize,
    pub background: Background,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub near: f64,
    pub far: f64,
}

impl Ray {
    #[inline]
    pub fn at(&self, distance: f64) -> [f64; 3] {
        [
            self.origin[0] + distance * self.direction[0],
            self.origin[1] + distance * self.direction[1],
            self.origin[2] + distance * self.direction[2],
        ]
    }
}

pub fn focal_from_fov(width: usize, fov_x: f64) -> f64 {
    0.5 * width as f64 / (0.5 * fov_x).tan()
}

impl Camera {
    pub fn new(pose: [[f64; 4]; 4], focal: f64, width: usize, height: usize, background: Background) -> Result<Self> {
        let cam = Camera {
            pose,
            focal,
            width,
            height,
            background,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn from_fov(pose: [[f64; 4]; 4], fov_x: f64, width: usize, height: usize, background: Background) -> Result<Self> {
        Self::new(pose, focal_from_fov(width, fov_x), width, height, background)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.focal.is_finite() && self.focal > 0.0) {
            return Err(WavePlanesError::Config("camera needs positive size and focal".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| self.pose[k][i] * self.pose[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > 1e-4 {
                    return Err(WavePlanesError::Config("camera rotation is not orthonormal".into()));
                }
            }
        }
        if self.pose.iter().flatten().any(|v| !v.is_finite()) {
            return Err(WavePlanesError::Config("camera pose is not finite".into()));
        }
        Ok(())
    }

    pub fn position(&self) -> [f64; 3] {
        [self.pose[0][3], self.pose[1][3], self.pose[2][3]]
    }

    /// Ray through the continuous image position `(x, y)` (pixel units,
    /// origin at the top-left corner).
    pub fn ray_through(&self, x: f64, y: f64, near: f64, far: f64) -> Ray {
        let local = [
            (x - 0.5 * self.width as f64) / self.focal,
            -(y - 0.5 * self.height as f64) / self.focal,
            -1.0,
        ];
        let mut dir = [0.0; 3];
        for (r, d) in dir.iter_mut().enumerate() {
            *d = (0..3).map(|k| self.pose[r][k] * local[k]).sum();
        }
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        Ray {
            origin: self.position(),
            direction: [dir[0] / norm, dir[1] / norm, dir[2] / norm],
            near,
            far,
        }
    }

    /// Projects a world point to continuous pixel coordinates, or `None` when
    /// it lies behind the camera.
    pub fn project(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        let d = [p[0] - self.pose[0][3], p[1] - self.pose[1][3], p[2] - self.pose[2][3]];
        // R^T d
        let local: Vec<f64> = (0..3).map(|c| (0..3).map(|r| self.pose[r][c] * d[r]).sum()).collect();
        if local[2] >= 0.0 {
            return None;
        }
        let x = 0.5 * self.width as f64 + self.focal * local[0] / -local[2];
        let y = 0.5 * self.height as f64 - self.focal * local[1] / -local[2];
        Some((x, y))
    }
}

/// Rays through the centers of the given `(column, row)` pixels.
pub fn generate_rays(cam: &Camera, pixels: &[(usize, usize)], near: f64, far: f64) -> Vec<Ray> {
    pixels
        .iter()
        .map(|&(x, y)| cam.ray_through(x as f64 + 0.5, y as f64 + 0.5, near, far))
        .collect()
}

/// Camera-to-world pose at `position` looking at `target` with world +z up.
pub fn look_at(position: [f64; 3], target: [f64; 3]) -> [[f64; 4]; 4] {
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let normalize = |a: [f64; 3]| {
        let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        [a[0] / n, a[1] / n, a[2] / n]
    };
    let back = normalize(sub(position, target));
    let mut right = cross([0.0, 0.0, 1.0], back);
    if right.iter().map(|v| v * v).sum::<f64>() < 1e-12 {
        right = [1.0, 0.0, 0.0];
    }
    let right = normalize(right);
    let up = cross(back, right);
    [
        [right[0], up[0], back[0], position[0]],
        [right[1], up[1], back[1], position[1]],
        [right[2], up[2], back[2], position[2]],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub const IDENTITY_POSE: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];
