use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Conversion, ConversionSummary, IngestError, PendingFrame, Source};
use crate::camera::PinholeIntrinsics;
use crate::datafile::payload::{encode_depth16, encode_point_cloud, encode_pose};
use crate::datafile::{CameraParams, PixelFormat, SensorDescriptor};
use crate::geometry::{Pose, Timestamp, Vec3};

/// A closed box room seen by a depth camera moving on a horizontal circle
/// around the room centre while yawing with the circle angle.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSceneConfig {
    /// Room half-extents along x, y, z (m); the room is centred on the origin.
    pub half_extents: [f64; 3],
    pub width: u32,
    pub height: u32,
    pub intrinsics: PinholeIntrinsics,
    /// Meters per raw depth unit.
    pub depth_scale: f64,
    /// Circle radius in the x-z plane (m).
    pub radius: f64,
    /// Angle advanced per frame (rad).
    pub angular_rate: f64,
    pub start_angle: f64,
    pub frames: u32,
    pub rate_hz: f64,
    /// Standard deviation of additive Gaussian depth noise (m).
    pub sigma_depth: f64,
    pub seed: u64,
    /// Grid spacing of the ground-truth wall cloud (m).
    pub cloud_spacing: f64,
}

impl Default for SyntheticSceneConfig {
    fn default() -> Self {
        Self {
            // small room and wide field of view, so every frame sees a
            // corner and registration is well constrained
            half_extents: [1.2, 0.8, 1.2],
            width: 160,
            height: 120,
            intrinsics: PinholeIntrinsics {
                fx: 70.0,
                fy: 70.0,
                cx: 79.5,
                cy: 59.5,
            },
            depth_scale: 1.0 / 5000.0,
            radius: 0.3,
            angular_rate: 0.01,
            start_angle: 0.0,
            frames: 60,
            rate_hz: 30.0,
            sigma_depth: 0.0,
            seed: 0,
            cloud_spacing: 0.01,
        }
    }
}

impl SyntheticSceneConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| IngestError::InvalidConfig(format!("line {}: {what}: {raw:?}", n + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| bad("not a number"));
            let int = || value.parse::<u64>().map_err(|_| bad("not a non-negative integer"));
            match key {
                "half_extents" => {
                    let v: Vec<f64> = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("expected three comma-separated numbers"))?;
                    cfg.half_extents = v.try_into().map_err(|_| bad("expected three comma-separated numbers"))?;
                }
                "width" => cfg.width = u32::try_from(int()?).map_err(|_| bad("too large"))?,
                "height" => cfg.height = u32::try_from(int()?).map_err(|_| bad("too large"))?,
                "fx" => cfg.intrinsics.fx = num()?,
                "fy" => cfg.intrinsics.fy = num()?,
                "cx" => cfg.intrinsics.cx = num()?,
                "cy" => cfg.intrinsics.cy = num()?,
                "depth_scale" => cfg.depth_scale = num()?,
                "radius" => cfg.radius = num()?,
                "angular_rate" => cfg.angular_rate = num()?,
                "start_angle" => cfg.start_angle = num()?,
                "frames" => cfg.frames = u32::try_from(int()?).map_err(|_| bad("too large"))?,
                "rate_hz" => cfg.rate_hz = num()?,
                "sigma_depth" => cfg.sigma_depth = num()?,
                "seed" => cfg.seed = int()?,
                "cloud_spacing" => cfg.cloud_spacing = num()?,
                _ => return Err(bad("unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |m: String| Err(IngestError::InvalidConfig(m));
        let [hx, hy, hz] = self.half_extents;
        if !(hx > 0.0 && hy > 0.0 && hz > 0.0) {
            return fail(format!("half extents {:?} must be positive", self.half_extents));
        }
        if !(self.radius >= 0.0 && self.radius < hx.min(hz)) {
            return fail(format!("radius {} must lie strictly inside the room", self.radius));
        }
        if self.frames < 2 {
            return fail(format!("frame count {} must be at least 2", self.frames));
        }
        if self.width == 0 || self.height == 0 {
            return fail("image size must be at least 1x1".into());
        }
        let k = &self.intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0) {
            return fail("focal lengths must be positive".into());
        }
        if !(k.cx >= 0.0 && k.cx < f64::from(self.width) && k.cy >= 0.0 && k.cy < f64::from(self.height)) {
            return fail("principal point outside the image".into());
        }
        if !(self.depth_scale > 0.0 && self.rate_hz > 0.0 && self.cloud_spacing > 0.0) {
            return fail("depth_scale, rate_hz and cloud_spacing must be positive".into());
        }
        if !(self.sigma_depth >= 0.0) || !self.angular_rate.is_finite() || !self.start_angle.is_finite() {
            return fail("sigma_depth must be non-negative and angles finite".into());
        }
        Ok(())
    }

    /// World-from-camera pose of frame `k`. The camera looks along its +z
    /// axis, with y pointing down.
    pub fn camera_pose(&self, k: u32) -> Pose {
        let theta = self.start_angle + self.angular_rate * f64::from(k);
        let centre = Vec3::new(self.radius * theta.cos(), 0.0, self.radius * theta.sin());
        Pose::from_axis_angle(Vec3::y(), theta, centre)
    }

    pub fn timestamp(&self, k: u32) -> Timestamp {
        let nanos = 1_000_000_000 + (f64::from(k) * 1e9 / self.rate_hz).round() as u64;
        Timestamp::from_nanos(nanos).expect("synthetic timestamps fit in u32 seconds")
    }

    fn camera(&self) -> CameraParams {
        CameraParams {
            width: self.width,
            height: self.height,
            pixel_format: PixelFormat::Depth16,
            rate_hz: self.rate_hz as f32,
            fx: self.intrinsics.fx as f32,
            fy: self.intrinsics.fy as f32,
            cx: self.intrinsics.cx as f32,
            cy: self.intrinsics.cy as f32,
            distortion: [0.0; 5],
            depth_scale: self.depth_scale as f32,
        }
    }

    /// Uniform grid over the six walls.
    pub fn wall_cloud(&self) -> Vec<[f32; 3]> {
        let h = self.half_extents;
        let mut points = Vec::new();
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let na = (2.0 * h[a] / self.cloud_spacing).round().max(1.0) as usize;
            let nb = (2.0 * h[b] / self.cloud_spacing).round().max(1.0) as usize;
            for side in [-1.0, 1.0] {
                for i in 0..=na {
                    for j in 0..=nb {
                        let mut p = [0.0f64; 3];
                        p[axis] = side * h[axis];
                        p[a] = -h[a] + 2.0 * h[a] * i as f64 / na as f64;
                        p[b] = -h[b] + 2.0 * h[b] * j as f64 / nb as f64;
                        points.push([p[0] as f32, p[1] as f32, p[2] as f32]);
                    }
                }
            }
        }
        points
    }
}

/// Metric depth (camera z) per pixel from ray/wall intersection, row-major.
pub fn render_depth(cfg: &SyntheticSceneConfig, pose: &Pose) -> Vec<f64> {
    let origin = pose.translation();
    let mut depth = Vec::with_capacity(cfg.width as usize * cfg.height as usize);
    for v in 0..cfg.height {
        for u in 0..cfg.width {
            // camera ray with unit z, so the hit distance along it is the depth
            let dir = pose.rotation() * cfg.intrinsics.ray(f64::from(u), f64::from(v));
            let mut t = f64::INFINITY;
            for axis in 0..3 {
                if dir[axis] != 0.0 {
                    let wall = cfg.half_extents[axis] * dir[axis].signum();
                    t = t.min((wall - origin[axis]) / dir[axis]);
                }
            }
            depth.push(t);
        }
    }
    depth
}

fn quantize(meters: f64, scale: f64) -> u16 {
    let raw = (meters / scale).round();
    if raw >= 1.0 && raw <= f64::from(u16::MAX) {
        raw as u16
    } else {
        0
    }
}

pub fn generate_synthetic(cfg: &SyntheticSceneConfig, out: &Path) -> Result<ConversionSummary, IngestError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.sigma_depth).map_err(|e| IngestError::InvalidConfig(e.to_string()))?;
    let sensors = vec![
        ("depth".to_string(), SensorDescriptor::CameraDepth(cfg.camera())),
        ("gt_pose".to_string(), SensorDescriptor::GtPose),
        ("gt_point_cloud".to_string(), SensorDescriptor::GtPointCloud),
    ];
    let mut frames = vec![PendingFrame {
        timestamp: Timestamp::default(),
        sensor: 2,
        source: Source::Bytes(encode_point_cloud(&cfg.wall_cloud())),
    }];
    for k in 0..cfg.frames {
        let pose = cfg.camera_pose(k);
        let timestamp = cfg.timestamp(k);
        let raw: Vec<u16> = render_depth(cfg, &pose)
            .into_iter()
            .map(|d| {
                let d = if cfg.sigma_depth > 0.0 { d + noise.sample(&mut rng) } else { d };
                quantize(d, cfg.depth_scale)
            })
            .collect();
        frames.push(PendingFrame {
            timestamp,
            sensor: 1,
            source: Source::Bytes(encode_pose(&pose)),
        });
        frames.push(PendingFrame {
            timestamp,
            sensor: 0,
            source: Source::Bytes(encode_depth16(&raw)),
        });
    }
    Conversion {
        sensors,
        frames,
        notes: Vec::new(),
    }
    .write(out)
}
