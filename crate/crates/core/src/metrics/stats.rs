//! Summary statistics shared by reports and metrics. Empty inputs give 0.

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn rmse(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Frames per second over a set of per-frame durations in seconds.
pub fn fps(durations: &[f64]) -> Option<f64> {
    let total: f64 = durations.iter().sum();
    (total > 0.0).then(|| durations.len() as f64 / total)
}
