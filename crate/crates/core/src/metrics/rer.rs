use serde::{Deserialize, Serialize};

use super::{icp_from, IcpParams, IcpResult, KdTree, MetricsError};
use crate::geometry::{Pose, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerResult {
    /// Mean distance (m) from each aligned estimated point to its nearest
    /// ground-truth point.
    pub mean: f64,
    pub icp: IcpResult,
}

/// Reconstruction error: align `est` onto `gt` with ICP, then average the
/// est→gt nearest-neighbour distances. Not symmetric: spurious estimated
/// geometry is penalised, missing geometry is not.
pub fn rer(est: &[Vec3], gt: &[Vec3], params: &IcpParams) -> Result<RerResult, MetricsError> {
    if est.is_empty() || gt.is_empty() {
        return Err(MetricsError::EmptyCloud);
    }
    let tree = KdTree::new(gt);
    let icp = icp_from(est, &tree, Pose::identity(), params)?;
    let total: f64 = est
        .iter()
        .map(|p| {
            let q = icp.transform.transform_point(p);
            tree.nearest(&q).map(|(_, d2)| d2.sqrt()).unwrap_or(0.0)
        })
        .sum();
    Ok(RerResult {
        mean: total / est.len() as f64,
        icp,
    })
}
