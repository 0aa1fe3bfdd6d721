use serde::{Deserialize, Serialize};

use crate::sweep::SweepSample;
use crate::RunnerError;

/// Both objectives are minimised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    /// Mean per-frame processing time (s).
    pub duration: f64,
    /// ATE RMSE (m).
    pub ate: f64,
}

impl Objectives {
    pub fn new(duration: f64, ate: f64) -> Self {
        Self { duration, ate }
    }

    /// At least as good in both objectives and strictly better in one.
    pub fn dominates(&self, other: &Objectives) -> bool {
        self.duration <= other.duration && self.ate <= other.ate && (self.duration < other.duration || self.ate < other.ate)
    }

    fn is_finite(&self) -> bool {
        self.duration.is_finite() && self.ate.is_finite()
    }
}

/// Indices of the non-dominated points, ordered by duration (ties by
/// index). Points with a non-finite objective are ignored. Equal points do
/// not dominate each other, so duplicates on the front are all kept.
pub fn pareto_indices(points: &[Objectives]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_finite()).collect();
    order.sort_by(|&a, &b| points[a].duration.total_cmp(&points[b].duration).then(a.cmp(&b)));
    let mut front = Vec::new();
    let mut best_ate = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        // points sharing a duration are compared only by ATE
        let d = points[order[i]].duration;
        let end = i + order[i..].iter().take_while(|&&k| points[k].duration == d).count();
        let group_best = order[i..end].iter().map(|&k| points[k].ate).fold(f64::INFINITY, f64::min);
        if group_best < best_ate {
            front.extend(order[i..end].iter().filter(|&&k| points[k].ate == group_best));
            best_ate = group_best;
        }
        i = end;
    }
    front
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    /// Positions in the sample list, ordered by duration.
    pub indices: Vec<usize>,
    pub members: Vec<SweepSample>,
}

/// Non-dominated subset of the samples that have both objectives.
pub fn compute_pareto(samples: &[SweepSample]) -> Result<ParetoFront, RunnerError> {
    let points: Vec<Objectives> = samples
        .iter()
        .map(|s| s.objectives.unwrap_or(Objectives::new(f64::NAN, f64::NAN)))
        .collect();
    if !points.iter().any(Objectives::is_finite) {
        return Err(RunnerError::NoValidSamples);
    }
    let indices = pareto_indices(&points);
    Ok(ParetoFront {
        members: indices.iter().map(|&i| samples[i].clone()).collect(),
        indices,
    })
}
