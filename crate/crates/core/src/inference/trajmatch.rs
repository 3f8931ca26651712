//! Trajectory matching for deterministic models.

use crate::error::{Error, Result};
use crate::pomp::{advance, bind_params, ParamView, ParameterSet, Transform};
use crate::rng::{stream, Domain};

use super::optim::{nelder_mead, NelderMeadSettings};
use super::Problem;

#[derive(Clone, Copy, Debug, Default)]
pub struct TrajMatchSettings {
    pub optimizer: NelderMeadSettings,
}

#[derive(Clone, Debug)]
pub struct TrajMatchResult {
    pub params: ParameterSet,
    pub loglik: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Log likelihood of the data along the deterministic skeleton.
pub fn trajectory_loglik(prob: &Problem, params: &ParameterSet) -> Result<f64> {
    let model = prob.model;
    if !model.is_deterministic() {
        return Err(Error::input(format!("model `{}` has no deterministic skeleton", model.name())));
    }
    let values = bind_params(model, params)?;
    let p = ParamView::uniform(&values);
    let mut rng = stream(0, Domain::Misc, 0, 0);
    let mut x = vec![0.0; model.state_dim()];
    model.rinit(&mut x, p, &mut rng)?;
    let mut ll = 0.0;
    for n in 0..prob.grid.len() {
        let (a, b) = prob.grid.interval(n);
        advance(model, &mut x, a, b, prob.grid.euler_step(), p, prob.covs, &mut rng)?;
        for u in 0..model.unit_count() {
            if let Some(y) = prob.data.get(u, n) {
                ll += model.dmeasure(y, &x, u, b, p);
            }
        }
    }
    Ok(ll)
}

/// Maximize [`trajectory_loglik`] over the `free` parameters, searching on
/// each parameter's estimation scale.
pub fn trajectory_match(
    prob: &Problem,
    start: &ParameterSet,
    free: &[&str],
    settings: &TrajMatchSettings,
) -> Result<TrajMatchResult> {
    let defs = prob.model.param_defs();
    let transforms = start.transforms(defs)?;
    let mut slots: Vec<(String, Transform)> = Vec::with_capacity(free.len());
    for name in free {
        let k = defs
            .iter()
            .position(|d| d.name == *name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        slots.push((name.to_string(), transforms[k]));
    }
    let start_ll = match trajectory_loglik(prob, start) {
        Ok(v) => v,
        Err(Error::NonFiniteDerivative(c)) => {
            return Err(Error::NonFiniteObjective(format!(
                "derivative of `{c}` is not finite with free parameters {}",
                describe(start, &slots)
            )))
        }
        Err(e) => return Err(e),
    };
    if !start_ll.is_finite() {
        return Err(Error::NonFiniteObjective(format!(
            "log likelihood {start_ll} with free parameters {}",
            describe(start, &slots)
        )));
    }
    let x0: Vec<f64> = slots
        .iter()
        .map(|(name, t)| t.to_estimation(start.get(name).expect("bound above")))
        .collect();
    let build = |x: &[f64]| -> Result<ParameterSet> {
        let mut p = start.clone();
        for ((name, t), &v) in slots.iter().zip(x) {
            p.set(name, t.to_natural(v))?;
        }
        Ok(p)
    };
    let opt = nelder_mead(
        |x| match build(x).and_then(|p| trajectory_loglik(prob, &p)) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        },
        &x0,
        &settings.optimizer,
    );
    if slots.is_empty() || -opt.value <= start_ll {
        return Ok(TrajMatchResult {
            params: start.clone(),
            loglik: start_ll,
            evals: opt.evals,
            converged: opt.converged,
        });
    }
    Ok(TrajMatchResult {
        params: build(&opt.x)?,
        loglik: -opt.value,
        evals: opt.evals,
        converged: opt.converged,
    })
}

fn describe(p: &ParameterSet, slots: &[(String, Transform)]) -> String {
    let parts: Vec<String> = slots
        .iter()
        .map(|(n, _)| format!("`{n}` = {}", p.get(n).unwrap_or(f64::NAN)))
        .collect();
    if parts.is_empty() {
        "(none)".into()
    } else {
        parts.join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SirToy;
    use crate::pomp::{CovariateTable, ObservationSeries, PompModel, TimeGrid};

    /// Data equal to the rounded skeleton mean.
    fn skeleton_data(m: &SirToy, params: &ParameterSet, grid: &TimeGrid) -> ObservationSeries {
        let values = params.bind(m.param_defs()).unwrap();
        let p = ParamView::uniform(&values);
        let mut x = vec![0.0; m.state_dim()];
        let mut rng = stream(0, Domain::Misc, 0, 0);
        m.rinit(&mut x, p, &mut rng).unwrap();
        let covs = CovariateTable::default();
        let mut ys = Vec::new();
        for n in 0..grid.len() {
            let (a, b) = grid.interval(n);
            advance(m, &mut x, a, b, grid.euler_step(), p, &covs, &mut rng).unwrap();
            ys.push(Some(m.measure_mean(&x, 0, b, p).round()));
        }
        ObservationSeries::single("unit", grid.obs_times().to_vec(), ys).unwrap()
    }

    #[test]
    fn recovers_skeleton_parameters() {
        let m = SirToy::single().skeleton();
        let truth = m.default_params().with("psi", 50.0);
        let grid = TimeGrid::new(0.0, (1..=30).map(f64::from).collect(), 0.1).unwrap();
        let data = skeleton_data(&m, &truth, &grid);
        let covs = CovariateTable::default();
        let prob = Problem::new(&m, &data, &grid, &covs).unwrap();
        let ll0 = trajectory_loglik(&prob, &truth).unwrap();
        let start = truth.clone().with("beta", 2.4).with("gamma", 0.8);
        let r = trajectory_match(&prob, &start, &["beta", "gamma"], &TrajMatchSettings::default()).unwrap();
        assert!(r.loglik >= ll0 - 0.01, "{} vs {ll0}", r.loglik);
        assert!((r.params.get("beta").unwrap() - 2.0).abs() < 0.05);
    }

    #[test]
    fn empty_free_list_changes_nothing() {
        let m = SirToy::single().skeleton();
        let truth = m.default_params();
        let grid = TimeGrid::new(0.0, (1..=10).map(f64::from).collect(), 0.1).unwrap();
        let data = skeleton_data(&m, &truth, &grid);
        let covs = CovariateTable::default();
        let prob = Problem::new(&m, &data, &grid, &covs).unwrap();
        let r = trajectory_match(&prob, &truth, &[], &TrajMatchSettings::default()).unwrap();
        assert_eq!(r.params, truth);
        assert_eq!(r.loglik, trajectory_loglik(&prob, &truth).unwrap());
    }

    #[test]
    fn impossible_start_is_reported() {
        let m = SirToy::single().skeleton();
        let truth = m.default_params();
        let grid = TimeGrid::new(0.0, (1..=10).map(f64::from).collect(), 0.1).unwrap();
        let data = skeleton_data(&m, &truth, &grid);
        let covs = CovariateTable::default();
        let prob = Problem::new(&m, &data, &grid, &covs).unwrap();
        let zero = truth
            .clone()
            .with_transform("beta", Transform::Identity)
            .with("beta", 0.0);
        let err = trajectory_match(&prob, &zero, &["beta"], &TrajMatchSettings::default()).unwrap_err();
        assert!(err.to_string().contains("`beta` = 0"), "{err}");
    }
}
