use crate::error::{Error, Result};
use crate::rng::StreamRng;

use super::covariates::CovariateTable;
use super::params::{ParamDef, ParamView, ParameterSet};

/// A partially observed Markov process model.
///
/// The latent state is a flat slice of `unit_count() * unit_width()` values,
/// one contiguous block of `state_names()` per unit. Accumulator slots are
/// zeroed by the driver at the start of every observation interval.
pub trait PompModel: Send + Sync {
    fn name(&self) -> &str;

    fn unit_names(&self) -> &[String];

    fn unit_count(&self) -> usize {
        self.unit_names().len()
    }

    fn param_defs(&self) -> &[ParamDef];

    /// Per-unit compartment names.
    fn state_names(&self) -> &[String];

    fn unit_width(&self) -> usize {
        self.state_names().len()
    }

    fn state_dim(&self) -> usize {
        self.unit_width() * self.unit_count()
    }

    /// Offsets (within a unit block) of the weekly accumulators.
    fn accumulators(&self) -> &[usize];

    /// Offsets (within a unit block) counted towards the unit population.
    fn person_slots(&self) -> &[usize] {
        &[]
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    /// Whether observations are counts (otherwise any real value).
    fn count_data(&self) -> bool {
        true
    }

    /// Model-specific checks beyond per-parameter domains.
    fn validate(&self, _values: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Parameter values the model ships with.
    fn default_params(&self) -> ParameterSet;

    fn rinit(&self, x: &mut [f64], p: ParamView, rng: &mut StreamRng) -> Result<()>;

    /// Advance `x` from `t_start` to `t_end` using steps no longer than
    /// `max_step`. Returns the total mass clamped at zero (deterministic
    /// models only; stochastic models return 0).
    #[allow(clippy::too_many_arguments)]
    fn rprocess(
        &self,
        x: &mut [f64],
        t_start: f64,
        t_end: f64,
        max_step: f64,
        p: ParamView,
        covs: &CovariateTable,
        rng: &mut StreamRng,
    ) -> Result<f64>;

    /// Log density of observation `y` for `unit` at time `t`.
    fn dmeasure(&self, y: f64, x: &[f64], unit: usize, t: f64, p: ParamView) -> f64;

    fn rmeasure(&self, x: &[f64], unit: usize, t: f64, p: ParamView, rng: &mut StreamRng) -> f64;

    /// Expected observation for `unit`.
    fn measure_mean(&self, x: &[f64], unit: usize, t: f64, p: ParamView) -> f64;

    /// New true infections in `unit` over the last interval.
    fn unit_infections(&self, x: &[f64], unit: usize) -> f64;

    /// National new true infections over the last interval.
    fn infections(&self, x: &[f64]) -> f64 {
        (0..self.unit_count()).map(|u| self.unit_infections(x, u)).sum()
    }
}

/// Bind and validate a parameter set against `model`.
pub fn bind_params(model: &dyn PompModel, params: &ParameterSet) -> Result<Vec<f64>> {
    let values = params.bind(model.param_defs())?;
    model.validate(&values)?;
    Ok(values)
}

/// Index of parameter `name` in `model`'s declaration order.
pub fn param_index(model: &dyn PompModel, name: &str) -> Result<usize> {
    model
        .param_defs()
        .iter()
        .position(|d| d.name == name)
        .ok_or_else(|| Error::UnknownParameter(name.to_string()))
}

pub fn reset_accumulators(model: &dyn PompModel, x: &mut [f64]) {
    let w = model.unit_width();
    for u in 0..model.unit_count() {
        for &a in model.accumulators() {
            x[u * w + a] = 0.0;
        }
    }
}

/// Zero accumulators, then advance one observation interval.
#[allow(clippy::too_many_arguments)]
pub fn advance(
    model: &dyn PompModel,
    x: &mut [f64],
    t_start: f64,
    t_end: f64,
    max_step: f64,
    p: ParamView,
    covs: &CovariateTable,
    rng: &mut StreamRng,
) -> Result<f64> {
    reset_accumulators(model, x);
    model.rprocess(x, t_start, t_end, max_step, p, covs, rng)
}

/// Per-unit sum of person compartments.
pub fn unit_populations(model: &dyn PompModel, x: &[f64]) -> Vec<f64> {
    let w = model.unit_width();
    (0..model.unit_count())
        .map(|u| model.person_slots().iter().map(|&s| x[u * w + s]).sum())
        .collect()
}

/// Copy a state of `from` into the layout of `to`, matching compartments by
/// unit and name. Compartments `to` has but `from` lacks start at zero.
pub fn embed_state(from: &dyn PompModel, to: &dyn PompModel, x: &[f64]) -> Result<Vec<f64>> {
    if from.unit_count() != to.unit_count() {
        return Err(Error::Dimension(format!(
            "cannot embed a {}-unit state into a {}-unit model",
            from.unit_count(),
            to.unit_count()
        )));
    }
    let (wf, wt) = (from.unit_width(), to.unit_width());
    let mut map = Vec::with_capacity(wf);
    for name in from.state_names() {
        let j = to
            .state_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Dimension(format!("compartment `{name}` missing from target model")))?;
        map.push(j);
    }
    let mut out = vec![0.0; to.state_dim()];
    for u in 0..from.unit_count() {
        for (i, &j) in map.iter().enumerate() {
            out[u * wt + j] = x[u * wf + i];
        }
    }
    Ok(out)
}
