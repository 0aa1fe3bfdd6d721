use serde::{Deserialize, Serialize};

use super::{KdTree, MetricsError};
use nalgebra::{Matrix6, Vector6};

use crate::geometry::{umeyama_align, Pose, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop once the residual improves by less than this (m).
    pub tolerance: f64,
    /// Correspondences further apart than this are ignored (m).
    pub max_correspondence: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-9,
            max_correspondence: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Maps source points onto the target.
    pub transform: Pose,
    /// Final residual (m), see [`icp`].
    pub residual: f64,
    pub iterations: usize,
    /// Residual before the first iteration followed by the residual after
    /// each accepted iteration.
    pub residual_history: Vec<f64>,
    /// Correspondences within the gate at the final transform.
    pub matched: usize,
}

/// Point-to-point ICP of `source` onto `target`, starting from identity.
///
/// The residual is the root mean of `min(d, max_correspondence)²` over all
/// source points, where `d` is the distance to the nearest target point.
/// Truncating instead of discarding far points makes it non-increasing: each
/// alignment step lowers the matched term, and an unmatched point can never
/// cost more than the gate.
pub fn icp(source: &[Vec3], target: &[Vec3], params: &IcpParams) -> Result<IcpResult, MetricsError> {
    let tree = KdTree::new(target);
    icp_from(source, &tree, Pose::identity(), params)
}

/// As [`icp`], reusing a prebuilt target index and an initial guess.
pub fn icp_from(source: &[Vec3], target: &KdTree, initial: Pose, params: &IcpParams) -> Result<IcpResult, MetricsError> {
    if source.len() < 3 || target.len() < 3 {
        return Err(MetricsError::InsufficientPairs {
            needed: 3,
            got: source.len().min(target.len()),
        });
    }
    let gate2 = params.max_correspondence * params.max_correspondence;
    let mut transform = initial;
    let (mut residual, mut matches) = evaluate(source, target, &transform, gate2);
    let mut history = vec![residual];
    let mut iterations = 0;
    while iterations < params.max_iterations.max(1) {
        if matches.src.len() < 3 {
            return Err(MetricsError::NoCorrespondences {
                max_distance: params.max_correspondence,
            });
        }
        let step = umeyama_align(&matches.src, &matches.dst, false)?;
        let candidate = step.pose * transform;
        let (next, next_matches) = evaluate(source, target, &candidate, gate2);
        iterations += 1;
        if next > residual {
            // only reachable through rounding; keep the better transform
            break;
        }
        let improvement = residual - next;
        transform = candidate;
        residual = next;
        matches = next_matches;
        history.push(residual);
        if improvement < params.tolerance {
            break;
        }
    }
    Ok(IcpResult {
        transform,
        residual,
        iterations,
        residual_history: history,
        matched: matches.src.len(),
    })
}

struct Matches {
    src: Vec<Vec3>,
    dst: Vec<Vec3>,
    dst_index: Vec<usize>,
}

/// Truncated residual at `transform` together with the gated pairs.
fn evaluate(source: &[Vec3], target: &KdTree, transform: &Pose, gate2: f64) -> (f64, Matches) {
    let mut m = Matches {
        src: Vec::with_capacity(source.len()),
        dst: Vec::with_capacity(source.len()),
        dst_index: Vec::with_capacity(source.len()),
    };
    let mut cost = 0.0;
    for p in source {
        let q = transform.transform_point(p);
        match target.nearest_within(&q, gate2) {
            Some((i, d2)) => {
                cost += d2;
                m.src.push(q);
                m.dst.push(target.points()[i]);
                m.dst_index.push(i);
            }
            None => cost += gate2,
        }
    }
    ((cost / source.len() as f64).sqrt(), m)
}

/// Point-to-plane ICP: correspondences are still nearest neighbours, but
/// each step minimises the distance to the tangent plane at the matched
/// target point (`normals` is indexed like the target points). Converges
/// to the surface motion rather than to the sample positions, so it stays
/// accurate when source and target sample the surfaces at different spots.
///
/// The residual is the root mean of `min(|n·(p - q)|, max_correspondence)²`
/// over all source points, unmatched points counting as the gate. A step
/// that would raise it ends the iteration with the better transform.
pub fn icp_point_to_plane(
    source: &[Vec3],
    target: &KdTree,
    normals: &[Vec3],
    initial: Pose,
    params: &IcpParams,
) -> Result<IcpResult, MetricsError> {
    if source.len() < 6 || target.len() < 6 {
        return Err(MetricsError::InsufficientPairs {
            needed: 6,
            got: source.len().min(target.len()),
        });
    }
    assert_eq!(normals.len(), target.len(), "one normal per target point");
    let gate2 = params.max_correspondence * params.max_correspondence;
    let plane_cost = |transform: &Pose| {
        let (_, m) = evaluate(source, target, transform, gate2);
        let mut cost = (source.len() - m.src.len()) as f64 * gate2;
        for ((p, q), &i) in m.src.iter().zip(&m.dst).zip(&m.dst_index) {
            cost += normals[i].dot(&(p - q)).powi(2).min(gate2);
        }
        ((cost / source.len() as f64).sqrt(), m)
    };

    let mut transform = initial;
    let (mut residual, mut matches) = plane_cost(&transform);
    let mut history = vec![residual];
    let mut iterations = 0;
    while iterations < params.max_iterations.max(1) {
        if matches.src.len() < 6 {
            return Err(MetricsError::NoCorrespondences {
                max_distance: params.max_correspondence,
            });
        }
        let mut h = Matrix6::<f64>::zeros();
        let mut g = Vector6::<f64>::zeros();
        for ((p, q), &i) in matches.src.iter().zip(&matches.dst).zip(&matches.dst_index) {
            let n = normals[i];
            let r = n.dot(&(p - q));
            let c = p.cross(&n);
            let j = Vector6::new(c.x, c.y, c.z, n.x, n.y, n.z);
            h += j * j.transpose();
            g += j * r;
        }
        let Some(x) = h.cholesky().map(|c| c.solve(&(-g))) else {
            // degenerate geometry: motion along some direction is unobservable
            break;
        };
        let omega = Vec3::new(x[0], x[1], x[2]);
        let angle = omega.norm();
        let step = if angle > 0.0 {
            Pose::from_axis_angle(omega / angle, angle, Vec3::new(x[3], x[4], x[5]))
        } else {
            Pose::from_translation(Vec3::new(x[3], x[4], x[5]))
        };
        let candidate = step * transform;
        let (next, next_matches) = plane_cost(&candidate);
        iterations += 1;
        if next > residual {
            break;
        }
        let improvement = residual - next;
        transform = candidate;
        residual = next;
        matches = next_matches;
        history.push(residual);
        if improvement < params.tolerance {
            break;
        }
    }
    Ok(IcpResult {
        transform,
        residual,
        iterations,
        residual_history: history,
        matched: matches.src.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut impl Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn identical_clouds_converge_in_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = cloud(&mut rng, 300);
        let r = icp(&c, &c, &IcpParams::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.residual < 1e-12);
        assert!(r.transform.approx_eq(&Pose::identity(), 1e-12));
    }

    #[test]
    fn disjoint_clouds_have_no_correspondences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = cloud(&mut rng, 50);
        let b: Vec<Vec3> = a.iter().map(|p| p + Vec3::new(10.0, 0.0, 0.0)).collect();
        assert!(matches!(
            icp(&a, &b, &IcpParams::default()),
            Err(MetricsError::NoCorrespondences { .. })
        ));
    }

    #[test]
    fn recovers_small_rigid_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = IcpParams {
            max_iterations: 200,
            tolerance: 1e-12,
            max_correspondence: 0.5,
        };
        for _ in 0..20 {
            let src = cloud(&mut rng, 600);
            let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let angle = rng.random_range(0.0..5f64.to_radians());
            let t = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                .normalize()
                * rng.random_range(0.0..0.05);
            let truth = Pose::from_axis_angle(axis, angle, t);
            let dst: Vec<Vec3> = src.iter().map(|p| truth.transform_point(p)).collect();
            let r = icp(&src, &dst, &params).unwrap();
            assert!(r.transform.approx_eq(&truth, 1e-4), "{:?} vs {:?}", r.transform, truth);
            assert!(r.residual < 1e-6);
            assert!(r.residual_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    /// Jittered samples of the three planes x=0, y=0, z=0 around a corner,
    /// with their normals.
    fn corner(rng: &mut impl Rng, per_plane: usize, range: std::ops::Range<f64>) -> (Vec<Vec3>, Vec<Vec3>) {
        let mut points = Vec::new();
        let mut normals = Vec::new();
        for axis in 0..3 {
            for _ in 0..per_plane {
                let mut p = Vec3::new(
                    rng.random_range(range.clone()),
                    rng.random_range(range.clone()),
                    rng.random_range(range.clone()),
                );
                p[axis] = 0.0;
                points.push(p);
                let mut n = Vec3::zeros();
                n[axis] = 1.0;
                normals.push(n);
            }
        }
        (points, normals)
    }

    #[test]
    fn point_to_plane_recovers_motion_between_different_samplings() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = IcpParams {
            max_iterations: 50,
            tolerance: 1e-14,
            max_correspondence: 0.2,
        };
        for _ in 0..10 {
            let (target, normals) = corner(&mut rng, 3000, 0.0..1.0);
            // an independent sampling of the same surfaces, away from the
            // edges where the nearest target point may lie on another plane
            let (surface, _) = corner(&mut rng, 200, 0.1..0.9);
            let angle = rng.random_range(0.0..2f64.to_radians());
            let truth = Pose::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), angle, Vec3::new(0.01, -0.02, 0.015));
            let source: Vec<Vec3> = surface.iter().map(|p| truth.inverse().transform_point(p)).collect();
            let tree = KdTree::new(&target);
            let r = icp_point_to_plane(&source, &tree, &normals, Pose::identity(), &params).unwrap();
            assert!(r.transform.approx_eq(&truth, 1e-6), "{:?} vs {:?}", r.transform, truth);
            assert!(r.residual < 1e-9);
        }
    }

    #[test]
    fn point_to_plane_identity_on_identical_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (points, normals) = corner(&mut rng, 100, 0.0..1.0);
        let tree = KdTree::new(&points);
        let r = icp_point_to_plane(&points, &tree, &normals, Pose::identity(), &IcpParams::default()).unwrap();
        assert_eq!(r.transform, Pose::identity());
        assert_eq!(r.residual, 0.0);
    }
}
