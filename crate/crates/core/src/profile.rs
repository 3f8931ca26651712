//! Profile likelihood designs and a synthetic profile surface.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::exec::{try_map_range, Parallelism};
use crate::rng::{derive_seed, stream, Domain};

/// Replicate searches per grid point unless configured otherwise.
pub const DEFAULT_REPLICATES: usize = 3;

/// One maximization with the profiled parameter held fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileJob {
    pub parameter: String,
    pub value: f64,
    pub replicate: usize,
    /// Parameters searched over; never contains `parameter`.
    pub free: Vec<String>,
    pub seed: u64,
}

/// `n` evenly spaced values over `[lo, hi]`.
pub fn profile_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || n == 0 {
        return Err(Error::input(format!("empty profile grid [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// One job per (grid value, replicate); job seeds derive from `seed`.
pub fn profile_design(parameter: &str, values: &[f64], replicates: usize, free: &[String], seed: u64) -> Result<Vec<ProfileJob>> {
    if values.is_empty() || replicates == 0 {
        return Err(Error::input("a profile needs at least one grid value and one replicate"));
    }
    let free: Vec<String> = free.iter().filter(|f| *f != parameter).cloned().collect();
    let mut jobs = Vec::with_capacity(values.len() * replicates);
    for (i, &value) in values.iter().enumerate() {
        for replicate in 0..replicates {
            jobs.push(ProfileJob {
                parameter: parameter.to_string(),
                value,
                replicate,
                free: free.clone(),
                seed: derive_seed(seed, i as u64, replicate as u64),
            });
        }
    }
    Ok(jobs)
}

/// Run every job, returning `(value, loglik)` in job order. Failing jobs
/// yield `-inf` and a warning.
pub fn run_profile<F>(jobs: &[ProfileJob], par: Parallelism, eval: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&ProfileJob) -> Result<f64> + Sync + Send,
{
    try_map_range(jobs.len(), par, |i| {
        let job = &jobs[i];
        let ll = eval(job).unwrap_or_else(|e| {
            log::warn!("profile job {}={} #{} failed: {e}", job.parameter, job.value, job.replicate);
            f64::NEG_INFINITY
        });
        Ok((job.value, ll))
    })
}

/// `ℓ(θ) = -(θ - θ₀)² / (2 s²)` plus independent Gaussian noise per job.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSurface {
    pub theta0: f64,
    pub s: f64,
    pub noise_sd: f64,
}

impl SyntheticSurface {
    pub fn eval(&self, theta: f64, seed: u64) -> f64 {
        let exact = -(theta - self.theta0).powi(2) / (2.0 * self.s * self.s);
        if self.noise_sd > 0.0 {
            let noise = Normal::new(0.0, self.noise_sd).expect("positive sd");
            exact + noise.sample(&mut stream(seed, Domain::Misc, 0, 0))
        } else {
            exact
        }
    }
}
