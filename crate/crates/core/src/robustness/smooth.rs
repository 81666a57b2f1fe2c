//! Log-sum-exp approximations of max and min.

/// `(1/a)·ln Σ exp(a·xᵢ)`, shifted by the maximum for stability.
pub fn softmax(xs: &[f64], a: f64) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = xs.iter().map(|x| (a * (x - m)).exp()).sum();
    m + sum.ln() / a
}

/// `−softmax(−x)`.
pub fn softmin(xs: &[f64], a: f64) -> f64 {
    let m = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = xs.iter().map(|x| (-a * (x - m)).exp()).sum();
    m - sum.ln() / a
}

/// Partial derivatives of [`softmax`]: `exp(a·xᵢ) / Σ exp(a·xⱼ)`.
pub fn softmax_weights(xs: &[f64], a: f64) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (a * (x - m)).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Partial derivatives of [`softmin`]: `exp(−a·xᵢ) / Σ exp(−a·xⱼ)`.
pub fn softmin_weights(xs: &[f64], a: f64) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = xs.iter().map(|x| (-a * (x - m)).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}
