use super::{AssociatedPair, TrajectorySample};

/// Default association gate in seconds.
pub const DEFAULT_MAX_DT: f64 = 0.02;

/// Greedy timestamp association. Estimates are visited in order and each
/// takes the nearest ground-truth sample not yet used; ties go to the earlier
/// ground-truth sample. Matches further apart than `max_dt` are dropped and
/// leave the ground-truth sample available.
pub fn associate(est: &[TrajectorySample], gt: &[TrajectorySample], max_dt: f64) -> Vec<AssociatedPair> {
    let mut associator = Associator::new(gt.to_vec(), max_dt);
    est.iter().filter_map(|e| associator.push(*e)).collect()
}

/// Incremental form of [`associate`] for estimates arriving one at a time.
#[derive(Debug, Clone)]
pub struct Associator {
    gt: Vec<TrajectorySample>,
    used: Vec<bool>,
    max_dt: f64,
}

impl Associator {
    pub fn new(gt: Vec<TrajectorySample>, max_dt: f64) -> Self {
        let used = vec![false; gt.len()];
        Self { gt, used, max_dt }
    }

    pub fn ground_truth(&self) -> &[TrajectorySample] {
        &self.gt
    }

    pub fn push(&mut self, est: TrajectorySample) -> Option<AssociatedPair> {
        let t = est.timestamp;
        let split = self.gt.partition_point(|g| g.timestamp < t);
        let before = (0..split).rev().find(|&i| !self.used[i]).map(|b| {
            // earliest unused sample sharing that timestamp
            let ts = self.gt[b].timestamp;
            (0..=b)
                .rev()
                .take_while(|&i| self.gt[i].timestamp == ts)
                .filter(|&i| !self.used[i])
                .last()
                .unwrap_or(b)
        });
        let after = (split..self.gt.len()).find(|&i| !self.used[i]);
        let best = match (before, after) {
            (Some(b), Some(a)) => {
                if self.gt[b].timestamp.abs_diff_nanos(t) <= self.gt[a].timestamp.abs_diff_nanos(t) {
                    b
                } else {
                    a
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => return None,
        };
        let dt = self.gt[best].timestamp.abs_diff_secs(t);
        if dt > self.max_dt {
            return None;
        }
        self.used[best] = true;
        Some(AssociatedPair {
            gt: self.gt[best],
            est,
            dt,
        })
    }
}
