use serde::{Deserialize, Serialize};

pub const DATAFILE_VERSION: u32 = 2;
pub const FRAME_HEADER_LEN: usize = 12;
pub const GT_POSE_PAYLOAD_LEN: usize = 64;
pub const IMU_PAYLOAD_LEN: usize = 24;

/// Numeric sensor type tags as stored in the sensor table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u32)]
pub enum SensorType {
    CameraRgb = 0,
    CameraGrey = 1,
    CameraDepth = 2,
    Imu = 3,
    GtPose = 4,
    GtPointCloud = 5,
    /// Reserved; no codec.
    PixelEvent = 6,
}

impl SensorType {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => Self::CameraRgb,
            1 => Self::CameraGrey,
            2 => Self::CameraDepth,
            3 => Self::Imu,
            4 => Self::GtPose,
            5 => Self::GtPointCloud,
            6 => Self::PixelEvent,
            _ => return None,
        })
    }

    pub fn is_ground_truth(self) -> bool {
        matches!(self, Self::GtPose | Self::GtPointCloud)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::CameraRgb => "camera_rgb",
            Self::CameraGrey => "camera_grey",
            Self::CameraDepth => "camera_depth",
            Self::Imu => "imu",
            Self::GtPose => "gt_pose",
            Self::GtPointCloud => "gt_point_cloud",
            Self::PixelEvent => "pixel_event",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u32)]
pub enum PixelFormat {
    Rgb8 = 0,
    Grey8 = 1,
    Depth16 = 2,
}

impl PixelFormat {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => Self::Rgb8,
            1 => Self::Grey8,
            2 => Self::Depth16,
            _ => return None,
        })
    }

    pub fn bytes_per_pixel(self) -> usize {
        match self {
            Self::Rgb8 => 3,
            Self::Grey8 => 1,
            Self::Depth16 => 2,
        }
    }
}

/// Pinhole calibration plus raster layout of a camera sensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub width: u32,
    pub height: u32,
    pub pixel_format: PixelFormat,
    pub rate_hz: f32,
    pub fx: f32,
    pub fy: f32,
    pub cx: f32,
    pub cy: f32,
    /// OpenCV order: k1, k2, p1, p2, k3.
    pub distortion: [f32; 5],
    /// Meters per raw depth unit; only meaningful for depth cameras.
    pub depth_scale: f32,
}

impl CameraParams {
    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * self.pixel_format.bytes_per_pixel()
    }

    pub fn intrinsics(&self) -> crate::camera::PinholeIntrinsics {
        crate::camera::PinholeIntrinsics {
            fx: f64::from(self.fx),
            fy: f64::from(self.fy),
            cx: f64::from(self.cx),
            cy: f64::from(self.cy),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuParams {
    pub rate_hz: f32,
    /// Gyroscope noise density; 0 when unknown.
    pub gyro_noise: f32,
    /// Accelerometer noise density; 0 when unknown.
    pub accel_noise: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SensorDescriptor {
    CameraRgb(CameraParams),
    CameraGrey(CameraParams),
    CameraDepth(CameraParams),
    Imu(ImuParams),
    GtPose,
    GtPointCloud,
}

/// How the payload length of a frame is determined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadLen {
    Fixed(usize),
    /// `u32` point count followed by `count * 12` bytes.
    PointCloud,
}

impl SensorDescriptor {
    pub fn sensor_type(&self) -> SensorType {
        match self {
            Self::CameraRgb(_) => SensorType::CameraRgb,
            Self::CameraGrey(_) => SensorType::CameraGrey,
            Self::CameraDepth(_) => SensorType::CameraDepth,
            Self::Imu(_) => SensorType::Imu,
            Self::GtPose => SensorType::GtPose,
            Self::GtPointCloud => SensorType::GtPointCloud,
        }
    }

    pub fn is_ground_truth(&self) -> bool {
        self.sensor_type().is_ground_truth()
    }

    pub fn camera(&self) -> Option<&CameraParams> {
        match self {
            Self::CameraRgb(c) | Self::CameraGrey(c) | Self::CameraDepth(c) => Some(c),
            _ => None,
        }
    }

    pub fn payload_len(&self) -> PayloadLen {
        match self {
            Self::CameraRgb(c) | Self::CameraGrey(c) | Self::CameraDepth(c) => PayloadLen::Fixed(c.frame_len()),
            Self::Imu(_) => PayloadLen::Fixed(IMU_PAYLOAD_LEN),
            Self::GtPose => PayloadLen::Fixed(GT_POSE_PAYLOAD_LEN),
            Self::GtPointCloud => PayloadLen::PointCloud,
        }
    }

    /// Size of the encoded descriptor in bytes.
    pub fn encoded_len(&self) -> usize {
        match self {
            Self::CameraRgb(_) | Self::CameraGrey(_) | Self::CameraDepth(_) => 4 * 15,
            Self::Imu(_) => 16,
            Self::GtPose | Self::GtPointCloud => 4,
        }
    }

    /// Checks the per-type invariants of the descriptor.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::CameraRgb(c) => validate_camera(c, PixelFormat::Rgb8, false),
            Self::CameraGrey(c) => validate_camera(c, PixelFormat::Grey8, false),
            Self::CameraDepth(c) => validate_camera(c, PixelFormat::Depth16, true),
            Self::Imu(imu) => {
                let vals = [imu.rate_hz, imu.gyro_noise, imu.accel_noise];
                if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(format!("IMU parameters must be finite and non-negative: {imu:?}"));
                }
                Ok(())
            }
            Self::GtPose | Self::GtPointCloud => Ok(()),
        }
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.sensor_type() as u32).to_le_bytes());
        match self {
            Self::CameraRgb(c) | Self::CameraGrey(c) | Self::CameraDepth(c) => {
                for v in [c.width, c.height, c.pixel_format as u32] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                let floats = [
                    c.rate_hz,
                    c.fx,
                    c.fy,
                    c.cx,
                    c.cy,
                    c.distortion[0],
                    c.distortion[1],
                    c.distortion[2],
                    c.distortion[3],
                    c.distortion[4],
                    c.depth_scale,
                ];
                for v in floats {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Self::Imu(imu) => {
                for v in [imu.rate_hz, imu.gyro_noise, imu.accel_noise] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Self::GtPose | Self::GtPointCloud => {}
        }
    }
}

fn validate_camera(c: &CameraParams, format: PixelFormat, depth: bool) -> Result<(), String> {
    if c.pixel_format != format {
        return Err(format!("pixel format {:?} does not match camera type (expected {format:?})", c.pixel_format));
    }
    if c.width == 0 || c.height == 0 {
        return Err(format!("image size {}x{} must be non-zero", c.width, c.height));
    }
    let all = [c.rate_hz, c.fx, c.fy, c.cx, c.cy, c.depth_scale]
        .into_iter()
        .chain(c.distortion);
    if all.into_iter().any(|v| !v.is_finite()) {
        return Err("camera parameters must be finite".into());
    }
    if !(c.fx > 0.0 && c.fy > 0.0) {
        return Err(format!("focal lengths must be positive (fx {}, fy {})", c.fx, c.fy));
    }
    if !(c.cx >= 0.0 && c.cx < c.width as f32 && c.cy >= 0.0 && c.cy < c.height as f32) {
        return Err(format!("principal point ({}, {}) outside the image", c.cx, c.cy));
    }
    if depth && !(c.depth_scale > 0.0) {
        return Err(format!("depth scale {} must be positive", c.depth_scale));
    }
    if c.rate_hz < 0.0 {
        return Err(format!("negative rate {}", c.rate_hz));
    }
    Ok(())
}
