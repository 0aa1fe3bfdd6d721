use nalgebra::{Matrix3, UnitQuaternion, Rotation3, SVD};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose, Vec3};

/// Similarity transform `x -> scale * R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTransform {
    pub scale: f64,
    pub pose: Pose,
}

impl SimTransform {
    pub fn new(scale: f64, pose: Pose) -> Result<Self, GeometryError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GeometryError::InvalidPose(format!("scale {scale} must be positive")));
        }
        Ok(Self { scale, pose })
    }

    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            pose: Pose::identity(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.pose.rotation() * (p * self.scale) + self.pose.translation()
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        self.pose.rotation()
    }

    pub fn translation(&self) -> &Vec3 {
        self.pose.translation()
    }
}

/// Least-squares rigid (or similarity) transform mapping `src` onto `dst`,
/// via the SVD of the cross-covariance with determinant correction so the
/// result is always a proper rotation.
pub fn umeyama_align(src: &[Vec3], dst: &[Vec3], with_scale: bool) -> Result<SimTransform, GeometryError> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(GeometryError::SizeMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    let n = src.len() as f64;
    let mean_src = src.iter().sum::<Vec3>() / n;
    let mean_dst = dst.iter().sum::<Vec3>() / n;

    let mut cov = Matrix3::zeros();
    let mut var_src = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let sc = s - mean_src;
        let dc = d - mean_dst;
        cov += dc * sc.transpose();
        var_src += sc.norm_squared();
    }
    cov /= n;
    var_src /= n;

    let svd = SVD::new(cov, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(GeometryError::DegenerateGeometry("SVD did not converge".into())),
    };
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= sv[0] * 1e-12 {
        return Err(GeometryError::DegenerateGeometry(format!(
            "cross-covariance rank < 2 (singular values {sv:?})"
        )));
    }

    let mut correction = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        correction[(2, 2)] = -1.0;
    }
    let r = u * correction * v_t;
    let scale = if with_scale {
        let trace: f64 = (0..3)
            .map(|i| svd.singular_values[i] * correction[(i, i)])
            .sum();
        trace / var_src
    } else {
        1.0
    };
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let translation = mean_dst - scale * (rotation * mean_src);
    SimTransform::new(scale, Pose::new(rotation, translation))
}

/// Root-mean-square distance between `dst` and the transformed `src`.
pub fn alignment_rmse(transform: &SimTransform, src: &[Vec3], dst: &[Vec3]) -> f64 {
    if src.is_empty() {
        return 0.0;
    }
    let sum: f64 = src
        .iter()
        .zip(dst)
        .map(|(s, d)| (d - transform.apply(s)).norm_squared())
        .sum();
    (sum / src.len() as f64).sqrt()
}
