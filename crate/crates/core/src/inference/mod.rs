//! Likelihood evaluation and maximization: bootstrap and block particle
//! filters, IF2, the iterated block particle filter, trajectory matching and
//! likelihood-weighted parameter sampling.

mod engine;
pub mod filter;
pub mod if2;
pub mod optim;
pub mod resample;
pub mod sampling;
pub mod trajmatch;

pub use filter::{block_filter, particle_filter, Blocks, FilterSettings, PfResult};
pub use if2::{ibpf, if2, IbpfSettings, If2Result, If2Settings, TraceEntry};
pub use optim::{nelder_mead, NelderMeadSettings, Optimum};
pub use resample::{effective_sample_size, systematic_resample};
pub use sampling::sample_params_by_likelihood;
pub use trajmatch::{trajectory_loglik, trajectory_match, TrajMatchResult, TrajMatchSettings};

use crate::error::{Error, Result};
use crate::pomp::{CovariateTable, ObservationSeries, PompModel, TimeGrid};

/// A model together with the data, time grid and covariates it is fitted to.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub model: &'a dyn PompModel,
    pub data: &'a ObservationSeries,
    pub grid: &'a TimeGrid,
    pub covs: &'a CovariateTable,
}

impl<'a> Problem<'a> {
    /// Check that data, grid and covariates agree with the model.
    pub fn new(
        model: &'a dyn PompModel,
        data: &'a ObservationSeries,
        grid: &'a TimeGrid,
        covs: &'a CovariateTable,
    ) -> Result<Self> {
        data.check_against(grid, model.unit_count())?;
        if data.unit_names() != model.unit_names() {
            return Err(Error::Dimension(format!(
                "data units {:?} differ from model units {:?}",
                data.unit_names(),
                model.unit_names()
            )));
        }
        covs.check_coverage(grid.t0(), grid.t_end())?;
        Ok(Self { model, data, grid, covs })
    }
}
