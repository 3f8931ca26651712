//! Likelihood-weighted parameter draws.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::pomp::ParameterSet;
use crate::rng::{stream, Domain};

/// Draw `k` parameter sets with probability proportional to the likelihood.
/// Non-finite log likelihoods get zero weight.
pub fn sample_params_by_likelihood(candidates: &[(ParameterSet, f64)], k: usize, seed: u64) -> Result<Vec<ParameterSet>> {
    let max = candidates
        .iter()
        .map(|c| c.1)
        .filter(|l| l.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NoFiniteCandidate);
    }
    let weights: Vec<f64> = candidates
        .iter()
        .map(|c| if c.1.is_finite() { (c.1 - max).exp() } else { 0.0 })
        .collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::input(format!("candidate weights: {e}")))?;
    let mut rng = stream(seed, Domain::Draw, 1, 0);
    Ok((0..k).map(|_| candidates[dist.sample(&mut rng)].0.clone()).collect())
}
