//! Bootstrap and block particle filters.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::pomp::{bind_params, ParameterSet};
use crate::rng::{stream, Domain};

use super::engine::{self, Params};
use super::Problem;

/// A partition of the units into filtering blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blocks {
    members: Vec<Vec<usize>>,
    of_unit: Vec<usize>,
}

impl Blocks {
    /// `members` must partition `0..n_units`.
    pub fn new(members: Vec<Vec<usize>>, n_units: usize) -> Result<Self> {
        let mut of_unit = vec![usize::MAX; n_units];
        for (b, units) in members.iter().enumerate() {
            if units.is_empty() {
                return Err(Error::input(format!("block {b} is empty")));
            }
            for &u in units {
                if u >= n_units {
                    return Err(Error::input(format!("block {b} names unit {u} of {n_units}")));
                }
                if of_unit[u] != usize::MAX {
                    return Err(Error::input(format!("unit {u} appears in more than one block")));
                }
                of_unit[u] = b;
            }
        }
        if let Some(u) = of_unit.iter().position(|&b| b == usize::MAX) {
            return Err(Error::input(format!("unit {u} is in no block")));
        }
        Ok(Self { members, of_unit })
    }

    /// One block holding every unit.
    pub fn single(n_units: usize) -> Self {
        Self {
            members: vec![(0..n_units).collect()],
            of_unit: vec![0; n_units],
        }
    }

    /// One block per unit.
    pub fn per_unit(n_units: usize) -> Self {
        Self {
            members: (0..n_units).map(|u| vec![u]).collect(),
            of_unit: (0..n_units).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn of_unit(&self) -> &[usize] {
        &self.of_unit
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FilterSettings {
    pub particles: usize,
    /// Number of states drawn from the final filtering distribution.
    pub sample: usize,
    pub par: Parallelism,
}

impl FilterSettings {
    pub fn new(particles: usize) -> Self {
        Self {
            particles,
            sample: particles,
            par: Parallelism::default(),
        }
    }

    pub fn with_sample(mut self, sample: usize) -> Self {
        self.sample = sample;
        self
    }

    pub fn with_parallelism(mut self, par: Parallelism) -> Self {
        self.par = par;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::input("the number of particles must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PfResult {
    /// Sum of `cond_logliks` in storage order; `-inf` after a failure.
    pub loglik: f64,
    /// Time-major `N × blocks` conditional log likelihoods.
    pub cond_logliks: Vec<f64>,
    /// Effective sample size per time and block, before resampling.
    /// Zero at a filtering failure.
    pub ess: Vec<f64>,
    pub blocks: usize,
    /// First observation index at which every particle had zero weight.
    pub failure: Option<usize>,
    pub dim: usize,
    /// `sample × dim` states drawn from the filtering distribution at `t_N`.
    pub filter_sample: Vec<f64>,
}

impl PfResult {
    /// Conditional log likelihood per observation time, summed over blocks.
    pub fn time_cond_logliks(&self) -> Vec<f64> {
        self.cond_logliks.chunks(self.blocks).map(|c| c.iter().sum()).collect()
    }

    pub fn sample_len(&self) -> usize {
        self.filter_sample.len() / self.dim.max(1)
    }

    pub fn sample_state(&self, k: usize) -> &[f64] {
        &self.filter_sample[k * self.dim..(k + 1) * self.dim]
    }
}

/// Bootstrap particle filter with systematic resampling.
pub fn particle_filter(prob: &Problem, params: &ParameterSet, settings: &FilterSettings, seed: u64) -> Result<PfResult> {
    block_filter(prob, params, &Blocks::single(prob.model.unit_count()), settings, seed)
}

/// Block particle filter: weights and resampling are computed separately for
/// each block of units.
pub fn block_filter(
    prob: &Problem,
    params: &ParameterSet,
    blocks: &Blocks,
    settings: &FilterSettings,
    seed: u64,
) -> Result<PfResult> {
    settings.check()?;
    check_blocks(prob, blocks)?;
    let values = bind_params(prob.model, params)?;
    let pass = engine::run(prob, blocks, settings.particles, Params::Fixed(&values), seed, settings.par)?;
    let filter_sample = draw_states(&pass.particles, pass.width, pass.dim, settings.sample, seed);
    Ok(PfResult {
        loglik: pass.loglik,
        cond_logliks: pass.cond,
        ess: pass.ess,
        blocks: blocks.len(),
        failure: pass.failure,
        dim: pass.dim,
        filter_sample,
    })
}

pub(crate) fn check_blocks(prob: &Problem, blocks: &Blocks) -> Result<()> {
    if blocks.of_unit().len() != prob.model.unit_count() {
        return Err(Error::Dimension(format!(
            "blocks cover {} units but the model has {}",
            blocks.of_unit().len(),
            prob.model.unit_count()
        )));
    }
    Ok(())
}

/// Uniform draws with replacement from equally weighted particles.
fn draw_states(particles: &[f64], width: usize, dim: usize, k: usize, seed: u64) -> Vec<f64> {
    let j = particles.len() / width;
    let mut rng = stream(seed, Domain::Draw, 0, 0);
    let mut out = Vec::with_capacity(k * dim);
    for _ in 0..k {
        let i = rng.random_range(0..j);
        out.extend_from_slice(&particles[i * width..i * width + dim]);
    }
    out
}
