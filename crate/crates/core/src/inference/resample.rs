//! Systematic resampling and effective sample size.

/// Systematic resampling of `out.len()` ancestors from unnormalized
/// nonnegative `weights` using a single uniform `u` in `[0, 1)`.
///
/// Weights must have a positive finite sum.
pub fn systematic_resample(weights: &[f64], u: f64, out: &mut [usize]) {
    let total: f64 = weights.iter().sum();
    let m = out.len();
    let step = total / m as f64;
    let mut target = u * step;
    // Rounding in `cum` must never select a trailing zero-weight particle.
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    let mut cum = weights[0];
    let mut i = 0;
    for o in out.iter_mut() {
        while cum <= target && i < last {
            i += 1;
            cum += weights[i];
        }
        *o = i;
        target += step;
    }
}

/// `(Σw)² / Σw²`; zero when all weights vanish.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let (s, s2) = weights.iter().fold((0.0, 0.0), |(s, s2), &w| (s + w, s2 + w * w));
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}
