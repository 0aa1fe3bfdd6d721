use serde::{Deserialize, Serialize};

use super::stats::{mean, rmse};
use super::{AssociatedPair, MetricsError};

/// Interval over which relative motion is compared.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpeDelta {
    /// Step in associated-pair index.
    Pairs(usize),
    /// Time interval in seconds; each pair is matched with the later pair
    /// whose estimate timestamp lies nearest to `t_i + delta`.
    Seconds(f64),
}

impl Default for RpeDelta {
    fn default() -> Self {
        RpeDelta::Pairs(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpeStats {
    /// Index pairs `(i, j)` compared.
    pub intervals: Vec<(usize, usize)>,
    pub trans_errors: Vec<f64>,
    pub rot_errors: Vec<f64>,
    pub trans_rmse: f64,
    pub rot_rmse: f64,
    pub trans_mean: f64,
    pub rot_mean: f64,
}

pub fn rpe(pairs: &[AssociatedPair], delta: RpeDelta) -> Result<RpeStats, MetricsError> {
    let intervals: Vec<(usize, usize)> = match delta {
        RpeDelta::Pairs(step) => {
            let step = step.max(1);
            if pairs.len() < step + 1 {
                return Err(MetricsError::InsufficientPairs {
                    needed: step + 1,
                    got: pairs.len(),
                });
            }
            (0..pairs.len() - step).map(|i| (i, i + step)).collect()
        }
        RpeDelta::Seconds(dt) => (0..pairs.len())
            .filter_map(|i| {
                let t0 = pairs[i].est.timestamp;
                (i + 1..pairs.len()).min_by(|&a, &b| {
                    let da = (pairs[a].est.timestamp.secs_since(t0) - dt).abs();
                    let db = (pairs[b].est.timestamp.secs_since(t0) - dt).abs();
                    da.total_cmp(&db)
                })
                .map(|j| (i, j))
            })
            .collect(),
    };
    if intervals.is_empty() {
        return Err(MetricsError::InsufficientPairs {
            needed: 2,
            got: pairs.len(),
        });
    }
    let mut trans_errors = Vec::with_capacity(intervals.len());
    let mut rot_errors = Vec::with_capacity(intervals.len());
    for &(i, j) in &intervals {
        let gt_rel = pairs[i].gt.pose.inverse() * pairs[j].gt.pose;
        let est_rel = pairs[i].est.pose.inverse() * pairs[j].est.pose;
        let e = gt_rel.inverse() * est_rel;
        trans_errors.push(e.translation().norm());
        rot_errors.push(e.rotation_angle());
    }
    Ok(RpeStats {
        intervals,
        trans_rmse: rmse(&trans_errors),
        rot_rmse: rmse(&rot_errors),
        trans_mean: mean(&trans_errors),
        rot_mean: mean(&rot_errors),
        trans_errors,
        rot_errors,
    })
}
