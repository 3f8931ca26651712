//! Measurement densities and samplers shared by the built-in models.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use crate::euler::poisson;

/// Negative binomial log pmf with mean `mean` and size `size`
/// (variance `mean + mean² / size`).
pub fn nb_logpmf(y: f64, mean: f64, size: f64) -> f64 {
    if !(y >= 0.0) || y.fract() != 0.0 {
        return f64::NEG_INFINITY;
    }
    if mean <= 0.0 {
        return if y == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if !size.is_finite() {
        return y * mean.ln() - mean - ln_gamma(y + 1.0);
    }
    let lp = size / (size + mean);
    ln_gamma(y + size) - ln_gamma(size) - ln_gamma(y + 1.0) + size * lp.ln() + y * (1.0 - lp).ln()
}

/// Poisson log pmf; a zero mean puts all mass on zero.
pub fn poisson_logpmf(y: f64, mean: f64) -> f64 {
    nb_logpmf(y, mean, f64::INFINITY)
}

/// Gaussian log density.
pub fn normal_logpdf(y: f64, mean: f64, var: f64) -> f64 {
    let z = y - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + z * z / var)
}

/// Gamma–Poisson draw matching [`nb_logpmf`].
pub fn nb_sample<R: Rng + ?Sized>(mean: f64, size: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let lambda = match Gamma::new(size, mean / size) {
        Ok(g) => g.sample(rng),
        Err(_) => mean,
    };
    poisson(lambda, rng)
}

/// Gaussian log density of `ln(y + 1)` with mean `ln(rho * incidence + 1)`
/// and standard deviation `psi`.
pub fn log_normal_logdens(y: f64, incidence: f64, rho: f64, psi: f64) -> f64 {
    if !(y >= 0.0) {
        return f64::NEG_INFINITY;
    }
    let z = ((y + 1.0).ln() - (rho * incidence + 1.0).ln()) / psi;
    -(psi * (2.0 * std::f64::consts::PI).sqrt()).ln() - 0.5 * z * z
}

/// Draw matching [`log_normal_logdens`], rounded to a whole count.
pub fn log_normal_sample<R: Rng + ?Sized>(incidence: f64, rho: f64, psi: f64, rng: &mut R) -> f64 {
    let mu = (rho * incidence + 1.0).ln();
    let z = Normal::new(mu, psi).map_or(mu, |d| d.sample(rng));
    (z.exp() - 1.0).round().max(0.0)
}

/// Central interval of the log-normal measurement model at incidence `m`.
pub fn log_normal_band(m: f64, rho: f64, psi: f64, z: f64) -> (f64, f64) {
    let c = (rho * m + 1.0).ln();
    ((c - z * psi).exp() - 1.0, (c + z * psi).exp() - 1.0)
}
