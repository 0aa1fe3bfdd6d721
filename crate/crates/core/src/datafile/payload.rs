//! Encoders and decoders for the fixed frame payload layouts.

use crate::geometry::Pose;

use super::format::{GT_POSE_PAYLOAD_LEN, IMU_PAYLOAD_LEN};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PayloadError {
    #[error("payload has {found} bytes, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("pose payload is not a rigid transform: {0}")]
    BadPose(String),
}

fn check_len(bytes: &[u8], expected: usize) -> Result<(), PayloadError> {
    if bytes.len() != expected {
        return Err(PayloadError::Length { expected, found: bytes.len() });
    }
    Ok(())
}

fn f32s(bytes: &[u8]) -> impl Iterator<Item = f32> + '_ {
    bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
}

/// 16 little-endian `f32`, row-major 4x4, world-from-body.
pub fn encode_pose(pose: &Pose) -> Vec<u8> {
    let mut out = Vec::with_capacity(GT_POSE_PAYLOAD_LEN);
    for v in pose.to_row_major() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_pose(bytes: &[u8]) -> Result<Pose, PayloadError> {
    check_len(bytes, GT_POSE_PAYLOAD_LEN)?;
    let mut m = [0.0f64; 16];
    for (dst, v) in m.iter_mut().zip(f32s(bytes)) {
        *dst = f64::from(v);
    }
    Pose::from_row_major(&m).map_err(|e| PayloadError::BadPose(e.to_string()))
}

pub fn encode_point_cloud(points: &[[f32; 3]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + points.len() * 12);
    out.extend_from_slice(&(points.len() as u32).to_le_bytes());
    for p in points {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_point_cloud(bytes: &[u8]) -> Result<Vec<[f32; 3]>, PayloadError> {
    if bytes.len() < 4 {
        return Err(PayloadError::Length { expected: 4, found: bytes.len() });
    }
    let count = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    check_len(bytes, 4 + count * 12)?;
    let values: Vec<f32> = f32s(&bytes[4..]).collect();
    Ok(values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

/// Gyroscope (rad/s) then accelerometer (m/s²) readings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ImuSample {
    pub gyro: [f32; 3],
    pub accel: [f32; 3],
}

pub fn encode_imu(sample: &ImuSample) -> Vec<u8> {
    let mut out = Vec::with_capacity(IMU_PAYLOAD_LEN);
    for v in sample.gyro.iter().chain(sample.accel.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_imu(bytes: &[u8]) -> Result<ImuSample, PayloadError> {
    check_len(bytes, IMU_PAYLOAD_LEN)?;
    let v: Vec<f32> = f32s(bytes).collect();
    Ok(ImuSample {
        gyro: [v[0], v[1], v[2]],
        accel: [v[3], v[4], v[5]],
    })
}

pub fn encode_depth16(raw: &[u16]) -> Vec<u8> {
    raw.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Decodes into `out`, reusing its allocation.
pub fn decode_depth16_into(bytes: &[u8], out: &mut Vec<u16>) {
    out.clear();
    out.extend(bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])));
}

pub fn decode_depth16(bytes: &[u8]) -> Vec<u16> {
    let mut out = Vec::with_capacity(bytes.len() / 2);
    decode_depth16_into(bytes, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn pose_payload_is_row_major() {
        let p = Pose::from_translation(Vec3::new(1.0, 2.0, 3.0));
        let bytes = encode_pose(&p);
        assert_eq!(bytes.len(), 64);
        let v: Vec<f32> = f32s(&bytes).collect();
        assert_eq!(v[3], 1.0);
        assert_eq!(v[7], 2.0);
        assert_eq!(v[11], 3.0);
        assert_eq!(v[15], 1.0);
        assert!(decode_pose(&bytes).unwrap().approx_eq(&p, 0.0));
    }

    #[test]
    fn imu_payload_order() {
        let s = ImuSample { gyro: [0.0, 0.0, 0.0], accel: [0.0, 0.0, -9.81] };
        let bytes = encode_imu(&s);
        let v: Vec<f32> = f32s(&bytes).collect();
        assert_eq!(v, vec![0.0, 0.0, 0.0, 0.0, 0.0, -9.81]);
        assert_eq!(decode_imu(&bytes).unwrap(), s);
    }

    #[test]
    fn point_cloud_rejects_bad_count() {
        let mut bytes = encode_point_cloud(&[[1.0, 2.0, 3.0]]);
        assert_eq!(decode_point_cloud(&bytes).unwrap(), vec![[1.0, 2.0, 3.0]]);
        bytes[0] = 2;
        assert!(decode_point_cloud(&bytes).is_err());
    }

    #[test]
    fn depth_is_little_endian() {
        assert_eq!(encode_depth16(&[0x0102]), vec![0x02, 0x01]);
        assert_eq!(decode_depth16(&[0x02, 0x01]), vec![0x0102]);
    }
}
