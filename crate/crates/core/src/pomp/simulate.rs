use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::rng::{stream, Domain};

use super::covariates::CovariateTable;
use super::data::ObservationSeries;
use super::grid::TimeGrid;
use super::model::{advance, bind_params, PompModel};
use super::params::{ParamView, ParameterSet};

/// One realization: states at `t0` and each observation time, plus draws
/// from the measurement model.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dim: usize,
    /// `(N + 1) * dim` values; row 0 is the initial state.
    pub states: Vec<f64>,
    pub observations: ObservationSeries,
    /// Total mass clamped at zero by a deterministic integrator.
    pub clamped: f64,
}

impl Trajectory {
    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }
}

/// Draw `n_sims` independent realizations.
///
/// Replicate `i` uses streams addressed by `(seed, ·, i, n)`, so results do
/// not depend on `par`.
pub fn simulate(
    model: &dyn PompModel,
    params: &ParameterSet,
    grid: &TimeGrid,
    covs: &CovariateTable,
    n_sims: usize,
    seed: u64,
    par: Parallelism,
) -> Result<Vec<Trajectory>> {
    if n_sims == 0 {
        return Err(Error::input("n_sims must be positive"));
    }
    let values = bind_params(model, params)?;
    covs.check_coverage(grid.t0(), grid.t_end())?;
    let view = ParamView::uniform(&values);
    exec::try_map_range(n_sims, par, |i| simulate_one(model, view, grid, covs, seed, i as u64))
}

fn simulate_one(
    model: &dyn PompModel,
    p: ParamView,
    grid: &TimeGrid,
    covs: &CovariateTable,
    seed: u64,
    rep: u64,
) -> Result<Trajectory> {
    let dim = model.state_dim();
    let n_obs = grid.len();
    let n_units = model.unit_count();
    let mut states = vec![0.0; (n_obs + 1) * dim];
    let mut x = vec![0.0; dim];
    model.rinit(&mut x, p, &mut stream(seed, Domain::Init, rep, 0))?;
    states[..dim].copy_from_slice(&x);
    let mut by_unit = vec![Vec::with_capacity(n_obs); n_units];
    let mut clamped = 0.0;
    for n in 0..n_obs {
        let (a, b) = grid.interval(n);
        let mut rng = stream(seed, Domain::Process, rep, n as u64);
        clamped += advance(model, &mut x, a, b, grid.euler_step(), p, covs, &mut rng)?;
        states[(n + 1) * dim..(n + 2) * dim].copy_from_slice(&x);
        let mut mrng = stream(seed, Domain::Measure, rep, n as u64);
        for (u, series) in by_unit.iter_mut().enumerate() {
            series.push(Some(model.rmeasure(&x, u, b, p, &mut mrng)));
        }
    }
    let (names, times) = (model.unit_names().to_vec(), grid.obs_times().to_vec());
    let observations = if model.count_data() {
        ObservationSeries::new(names, times, by_unit)?
    } else {
        ObservationSeries::real(names, times, by_unit)?
    };
    Ok(Trajectory {
        dim,
        states,
        observations,
        clamped,
    })
}
