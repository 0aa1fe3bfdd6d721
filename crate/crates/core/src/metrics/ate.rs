use serde::{Deserialize, Serialize};

use super::stats::{max, mean, rmse};
use super::{AssociatedPair, MetricsError};
use crate::geometry::{alignment_rmse, umeyama_align, Pose, SimTransform, Vec3};

/// Per-pair translational errors and their summaries, in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AteStats {
    pub errors: Vec<f64>,
    pub rmse: f64,
    pub mean: f64,
    pub max: f64,
}

impl AteStats {
    pub fn from_errors(errors: Vec<f64>) -> Self {
        Self {
            rmse: rmse(&errors),
            mean: mean(&errors),
            max: max(&errors),
            errors,
        }
    }
}

/// The transform `S = Q_1 ∘ P_1⁻¹` that puts the first estimate on its
/// ground truth.
pub fn runtime_alignment(first: &AssociatedPair) -> Pose {
    first.gt.pose * first.est.pose.inverse()
}

pub fn runtime_error(alignment: &Pose, pair: &AssociatedPair) -> f64 {
    let est = *alignment * pair.est.pose;
    (pair.gt.pose.translation() - est.translation()).norm()
}

/// ATE with first-pose alignment, as computed while the run is in progress.
pub fn ate_runtime(pairs: &[AssociatedPair]) -> Result<AteStats, MetricsError> {
    let first = pairs.first().ok_or(MetricsError::EmptyPairs)?;
    let s = runtime_alignment(first);
    Ok(AteStats::from_errors(pairs.iter().map(|p| runtime_error(&s, p)).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    Rigid,
    Similarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedAte {
    pub stats: AteStats,
    pub transform: SimTransform,
}

/// ATE after a least-squares alignment of the estimated positions onto the
/// ground-truth positions.
pub fn ate_aligned(pairs: &[AssociatedPair], mode: AlignMode) -> Result<AlignedAte, MetricsError> {
    if pairs.len() < 3 {
        return Err(MetricsError::InsufficientPairs {
            needed: 3,
            got: pairs.len(),
        });
    }
    let est: Vec<Vec3> = pairs.iter().map(|p| *p.est.pose.translation()).collect();
    let gt: Vec<Vec3> = pairs.iter().map(|p| *p.gt.pose.translation()).collect();
    let transform = umeyama_align(&est, &gt, mode == AlignMode::Similarity)?;
    let errors: Vec<f64> = est
        .iter()
        .zip(&gt)
        .map(|(e, g)| (g - transform.apply(e)).norm())
        .collect();
    debug_assert!((alignment_rmse(&transform, &est, &gt) - rmse(&errors)).abs() < 1e-9);
    Ok(AlignedAte {
        stats: AteStats::from_errors(errors),
        transform,
    })
}
