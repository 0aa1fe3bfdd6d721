use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

pub type Vec3 = Vector3<f64>;

/// Rigid-body transform: unit quaternion rotation followed by a translation
/// in meters. The quaternion is kept normalised with `w >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    rotation: UnitQuaternion<f64>,
    translation: Vec3,
}

fn canonical(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    let q = if q.w < 0.0 { -q } else { q };
    // renormalising a unit quaternion can move it by an ulp; keep it bit-exact
    if (q.norm_squared() - 1.0).abs() <= 4.0 * f64::EPSILON {
        UnitQuaternion::new_unchecked(q)
    } else {
        UnitQuaternion::new_normalize(q)
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation: canonical(rotation.into_inner()),
            translation,
        }
    }

    /// Builds a pose from a (possibly unnormalised) quaternion `w, x, y, z`.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64, translation: Vec3) -> Result<Self, GeometryError> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidPose(format!(
                "quaternion ({w}, {x}, {y}, {z}) / translation {translation:?}"
            )));
        }
        Ok(Self {
            rotation: canonical(q),
            translation,
        })
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Self {
        let rot = match nalgebra::Unit::try_new(axis, 1e-15) {
            Some(axis) => UnitQuaternion::from_axis_angle(&axis, angle),
            None => UnitQuaternion::identity(),
        };
        Self::new(rot, translation)
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// Quaternion components in `(w, x, y, z)` order.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Rotation angle in radians, in `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        self.rotation.angle()
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: canonical((self.rotation * other.rotation).into_inner()),
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            rotation: canonical(inv.into_inner()),
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Converts a homogeneous matrix; the rotation block must be close to a
    /// proper rotation (it is re-orthonormalised through the quaternion).
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Pose, GeometryError> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite matrix".into()));
        }
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom
            .iter()
            .zip([0.0, 0.0, 0.0, 1.0])
            .any(|(a, b)| (a - b).abs() > 1e-6)
        {
            return Err(GeometryError::InvalidPose(format!("bottom row {bottom:?}")));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let det = r.determinant();
        if (det - 1.0).abs() > 1e-3 {
            return Err(GeometryError::InvalidPose(format!(
                "rotation block determinant {det}"
            )));
        }
        let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
        Ok(Pose::new(rot, m.fixed_view::<3, 1>(0, 3).into_owned()))
    }

    /// Row-major 4x4 matrix, as stored in ground-truth pose frames.
    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_matrix();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(values: &[f64; 16]) -> Result<Pose, GeometryError> {
        Pose::from_matrix(&Matrix4::from_row_slice(values))
    }

    /// True when both poses agree to `tol` on every quaternion and
    /// translation component.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        let a = self.quaternion_wxyz();
        let b = other.quaternion_wxyz();
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
            && (self.translation - other.translation).amax() <= tol
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Pose> for &'a Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// Serialised as `[qw, qx, qy, qz, x, y, z]`.
impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let [w, x, y, z] = self.quaternion_wxyz();
        let t = self.translation;
        [w, x, y, z, t.x, t.y, t.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z, tx, ty, tz] = <[f64; 7]>::deserialize(d)?;
        // Stored quaternions are already unit-norm and canonical; keep them
        // bit-exact instead of renormalising.
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > 1e-9 || w < 0.0 {
            return Pose::from_wxyz(w, x, y, z, Vec3::new(tx, ty, tz)).map_err(serde::de::Error::custom);
        }
        Ok(Pose {
            rotation: UnitQuaternion::new_unchecked(q),
            translation: Vec3::new(tx, ty, tz),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn random_pose(rng: &mut impl Rng) -> Pose {
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let angle = rng.random_range(-3.1..3.1);
        let t = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        Pose::from_axis_angle(axis, angle, t)
    }

    fn matmul4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    fn to_rows(p: &Pose) -> [[f64; 4]; 4] {
        let flat = p.to_row_major();
        let mut out = [[0.0; 4]; 4];
        for r in 0..4 {
            out[r].copy_from_slice(&flat[r * 4..r * 4 + 4]);
        }
        out
    }

    /// Gauss-Jordan elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn gauss_jordan_inverse(m: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut a = [[0.0; 8]; 4];
        for i in 0..4 {
            a[i][..4].copy_from_slice(&m[i]);
            a[i][4 + i] = 1.0;
        }
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            let p = a[col][col];
            for v in a[col].iter_mut() {
                *v /= p;
            }
            for row in 0..4 {
                if row != col {
                    let f = a[row][col];
                    for k in 0..8 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            out[i].copy_from_slice(&a[i][4..]);
        }
        out
    }

    fn max_abs_diff(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_pose(&mut rng);
        assert!(Pose::identity().compose(&p).approx_eq(&p, 1e-15));
        assert!(p.compose(&Pose::identity()).approx_eq(&p, 1e-15));
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = random_pose(&mut rng);
            assert!(p.compose(&p.inverse()).approx_eq(&Pose::identity(), 1e-9));
            assert!(p.inverse().compose(&p).approx_eq(&Pose::identity(), 1e-9));
        }
    }

    #[test]
    fn compose_matches_matrix_product_oracle() {
        let a = Pose::from_axis_angle(Vec3::z(), FRAC_PI_2, Vec3::new(1.0, 0.0, 0.0));
        let b = Pose::from_axis_angle(Vec3::z(), FRAC_PI_2, Vec3::new(0.0, 1.0, 0.0));
        let oracle = matmul4(&to_rows(&a), &to_rows(&b));
        let c = a.compose(&b);
        assert!(max_abs_diff(&to_rows(&c), &oracle) < 1e-12);
        // frozen from the oracle: Rz(180), t = (1,0,0) + Rz(90)(0,1,0) = (0,0,0)
        let want = Pose::from_axis_angle(Vec3::z(), std::f64::consts::PI, Vec3::zeros());
        assert!(max_abs_diff(&to_rows(&c), &to_rows(&want)) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let oracle = matmul4(&to_rows(&a), &to_rows(&b));
            assert!(max_abs_diff(&to_rows(&a.compose(&b)), &oracle) < 1e-12);
        }
    }

    #[test]
    fn inverse_of_pure_translation() {
        let p = Pose::from_translation(Vec3::new(1.0, 2.0, 3.0));
        let inv = p.inverse();
        assert_eq!(*inv.translation(), Vec3::new(-1.0, -2.0, -3.0));
        assert_eq!(inv.quaternion_wxyz(), [1.0, 0.0, 0.0, 0.0]);
        assert!(Pose::identity().inverse().approx_eq(&Pose::identity(), 0.0));
    }

    #[test]
    fn inverse_matches_gauss_jordan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = random_pose(&mut rng);
            let oracle = gauss_jordan_inverse(&to_rows(&p));
            assert!(max_abs_diff(&to_rows(&p.inverse()), &oracle) < 1e-12);
        }
    }

    #[test]
    fn compose_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (a, b, c) = (random_pose(&mut rng), random_pose(&mut rng), random_pose(&mut rng));
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert!(left.approx_eq(&right, 1e-9));
        }
    }

    #[test]
    fn quaternion_matrix_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let p = random_pose(&mut rng);
            let back = Pose::from_matrix(&p.to_matrix()).unwrap();
            let a = p.quaternion_wxyz();
            let b = back.quaternion_wxyz();
            for i in 0..4 {
                worst = worst.max((a[i] - b[i]).abs());
            }
            worst = worst.max((p.translation() - back.translation()).amax());
        }
        assert!(worst < 1e-12, "worst round-trip error {worst}");
    }

    #[test]
    fn canonical_sign_and_unit_norm() {
        let p = Pose::from_wxyz(-2.0, 0.0, 0.0, 0.0, Vec3::zeros()).unwrap();
        assert_eq!(p.quaternion_wxyz(), [1.0, 0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut acc = Pose::identity();
        for _ in 0..10_000 {
            acc = acc.compose(&random_pose(&mut rng));
            let q = acc.quaternion_wxyz();
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-9);
            assert!(q[0] >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = Matrix4::identity();
        m[(3, 0)] = 1.0;
        assert!(Pose::from_matrix(&m).is_err());
        let mut m = Matrix4::identity();
        m[(0, 0)] = -1.0;
        assert!(Pose::from_matrix(&m).is_err());
        assert!(Pose::from_wxyz(0.0, 0.0, 0.0, 0.0, Vec3::zeros()).is_err());
    }
}
