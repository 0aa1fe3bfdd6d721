//! Pinhole projection helpers shared by the synthetic generator and the
//! dense reference algorithm. Distortion coefficients are carried by the
//! sensor descriptor but never applied here.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinholeIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl PinholeIntrinsics {
    /// Camera-frame point for pixel `(u, v)` at depth `z` (meters along the
    /// optical axis).
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Pixel coordinates of a camera-frame point, `None` behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Unit-depth ray through the pixel center (z component is 1).
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        self.unproject(u, v, 1.0)
    }
}

/// Unprojects a row-major DEPTH16 image, visiting every `stride`-th pixel in
/// both directions. Zero depth marks a missing measurement and is skipped.
/// Points are appended to `out` (which is cleared first).
pub fn unproject_depth(
    raw: &[u16],
    width: usize,
    height: usize,
    intrinsics: &PinholeIntrinsics,
    depth_scale: f64,
    stride: usize,
    out: &mut Vec<Vec3>,
) {
    out.clear();
    let stride = stride.max(1);
    for v in (0..height).step_by(stride) {
        for u in (0..width).step_by(stride) {
            let d = raw[v * width + u];
            if d == 0 {
                continue;
            }
            out.push(intrinsics.unproject(u as f64, v as f64, f64::from(d) * depth_scale));
        }
    }
}
