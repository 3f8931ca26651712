use crate::error::{Error, Result};
use crate::units::WEEK;

/// Observation times and the process-integration step.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    obs_times: Vec<f64>,
    euler_step: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, obs_times: Vec<f64>, euler_step: f64) -> Result<Self> {
        if obs_times.is_empty() {
            return Err(Error::InvalidGrid("no observation times".into()));
        }
        if !(euler_step > 0.0) || !euler_step.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "euler step must be positive, got {euler_step}"
            )));
        }
        if !(t0 < obs_times[0]) {
            return Err(Error::InvalidGrid(format!(
                "t0 = {t0} must precede the first observation time {}",
                obs_times[0]
            )));
        }
        let mut min_gap = obs_times[0] - t0;
        for (i, w) in obs_times.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "observation times not strictly increasing at index {}",
                    i + 1
                )));
            }
            min_gap = min_gap.min(gap);
        }
        if euler_step > min_gap * (1.0 + 1e-9) {
            return Err(Error::InvalidGrid(format!(
                "euler step {euler_step} exceeds the smallest observation spacing {min_gap}"
            )));
        }
        Ok(Self {
            t0,
            obs_times,
            euler_step,
        })
    }

    /// `n_weeks` weekly observations starting one week after `t0`.
    pub fn weekly(t0: f64, n_weeks: usize, euler_step: f64) -> Result<Self> {
        let obs = (1..=n_weeks).map(|k| t0 + k as f64 * WEEK).collect();
        Self::new(t0, obs, euler_step)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn obs_times(&self) -> &[f64] {
        &self.obs_times
    }

    pub fn euler_step(&self) -> f64 {
        self.euler_step
    }

    pub fn len(&self) -> usize {
        self.obs_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs_times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.obs_times.last().expect("non-empty grid")
    }

    /// Start and end of the interval leading to observation `n` (0-based).
    pub fn interval(&self, n: usize) -> (f64, f64) {
        let start = if n == 0 { self.t0 } else { self.obs_times[n - 1] };
        (start, self.obs_times[n])
    }
}

/// Number of Euler sub-steps and their common length covering `[start, end]`
/// with steps no longer than `max_step`.
pub fn euler_substeps(start: f64, end: f64, max_step: f64) -> (usize, f64) {
    let span = end - start;
    if span <= 0.0 {
        return (0, 0.0);
    }
    let n = ((span / max_step) - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}
