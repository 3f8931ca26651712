//! Forecasts launched from the filtering distribution, vaccination scenario
//! projections and elimination probabilities.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::inference::{sample_params_by_likelihood, PfResult};
use crate::models::measure::log_normal_band;
use crate::models::{GeographyData, ScenarioSpec};
use crate::pomp::{
    advance, bind_params, embed_state, param_index, simulate, Campaign, CovariateTable, ParamView, ParameterSet,
    PompModel, TimeGrid,
};
use crate::rng::{derive_seed, stream, Domain};
use crate::units::WEEK;

/// Consecutive weeks without infections that count as elimination.
pub const DEFAULT_WINDOW_WEEKS: usize = 52;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForecastSource {
    FilteringDistribution,
    InitialConditions,
}

impl ForecastSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ForecastSource::FilteringDistribution => "filtering-distribution",
            ForecastSource::InitialConditions => "initial-conditions",
        }
    }
}

/// Parameters driving each simulation.
#[derive(Clone, Copy, Debug)]
pub enum ParamSource<'a> {
    Fixed(&'a ParameterSet),
    /// Candidates with log likelihoods; each simulation draws one with
    /// probability proportional to its likelihood.
    Weighted(&'a [(ParameterSet, f64)]),
}

/// Equally weighted latent states at the forecast origin.
#[derive(Clone, Copy)]
pub struct FilterSample<'a> {
    /// Model whose state layout `states` uses.
    pub model: &'a dyn PompModel,
    pub states: &'a [f64],
}

impl<'a> FilterSample<'a> {
    pub fn from_result(model: &'a dyn PompModel, pf: &'a PfResult) -> Self {
        Self {
            model,
            states: &pf.filter_sample,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.model.state_dim().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn state(&self, k: usize) -> &[f64] {
        let d = self.model.state_dim();
        &self.states[k * d..(k + 1) * d]
    }
}

#[derive(Clone, Debug)]
pub struct ForecastSettings {
    pub scenario: String,
    /// Time of the last observation (years).
    pub origin: f64,
    pub horizon_weeks: usize,
    pub n_sims: usize,
    pub euler_step: f64,
    pub window_weeks: usize,
    /// Length of one forecast week in model time units.
    pub interval: f64,
    pub par: Parallelism,
}

impl ForecastSettings {
    pub fn new(scenario: &str, origin: f64, horizon_weeks: usize, n_sims: usize, euler_step: f64) -> Self {
        Self {
            scenario: scenario.to_string(),
            origin,
            horizon_weeks,
            n_sims,
            euler_step,
            window_weeks: DEFAULT_WINDOW_WEEKS,
            interval: WEEK,
            par: Parallelism::default(),
        }
    }

    pub fn with_window(mut self, weeks: usize) -> Self {
        self.window_weeks = weeks;
        self
    }

    pub fn with_parallelism(mut self, par: Parallelism) -> Self {
        self.par = par;
        self
    }

    pub fn with_interval(mut self, interval: f64) -> Self {
        self.interval = interval;
        self
    }

    fn time(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.interval
    }

    fn times(&self) -> Vec<f64> {
        (1..=self.horizon_weeks).map(|k| self.time(k)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ForecastResult {
    pub scenario: String,
    pub source: ForecastSource,
    pub unit_names: Vec<String>,
    /// End of each forecast week.
    pub times: Vec<f64>,
    /// `infections[s][n * U + u]`: new true infections in week `n`.
    pub infections: Vec<Vec<f64>>,
    /// Reported cases, same layout.
    pub cases: Vec<Vec<f64>>,
    pub eliminated: Vec<bool>,
    pub window_weeks: usize,
    pub probability: f64,
}

impl ForecastResult {
    pub fn n_sims(&self) -> usize {
        self.infections.len()
    }

    /// Weekly new infections summed over units.
    pub fn national_infections(&self, sim: usize) -> Vec<f64> {
        let u = self.unit_names.len();
        self.infections[sim].chunks(u).map(|w| w.iter().sum()).collect()
    }

    pub fn national_cases(&self, sim: usize) -> Vec<f64> {
        let u = self.unit_names.len();
        self.cases[sim].chunks(u).map(|w| w.iter().sum()).collect()
    }
}

/// True iff `series` holds at least `window` consecutive zeros.
pub fn eliminated(series: &[f64], window: usize) -> bool {
    let mut run = 0;
    for &v in series {
        run = if v == 0.0 { run + 1 } else { 0 };
        if run >= window {
            return true;
        }
    }
    window == 0
}

/// Fraction of national infection series that eliminate.
pub fn elimination_probability(series: &[Vec<f64>], window: usize) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::input("no simulations"));
    }
    if let Some(s) = series.iter().find(|s| s.len() < window) {
        return Err(Error::input(format!(
            "horizon of {} weeks is shorter than the {window}-week elimination window",
            s.len()
        )));
    }
    let hits = series.iter().filter(|s| eliminated(s, window)).count();
    Ok(hits as f64 / series.len() as f64)
}

/// Scenario campaigns on top of `base`: per department, or as national
/// one-week pulses for single-unit models.
pub fn scenario_covariates(
    base: &CovariateTable,
    scenario: &ScenarioSpec,
    geo: &GeographyData,
    national: bool,
) -> Result<CovariateTable> {
    let mut campaigns = base.campaigns().to_vec();
    let extra = if national {
        scenario.national_campaigns(geo)?
    } else {
        scenario.department_campaigns(geo)?
    };
    campaigns.extend(extra);
    Ok(base.clone().with_campaigns(campaigns))
}

/// Largest number of campaigns any one unit receives.
pub fn campaigns_per_unit(campaigns: &[Campaign]) -> usize {
    let mut counts = std::collections::HashMap::new();
    for c in campaigns {
        *counts.entry(c.unit).or_insert(0usize) += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

fn check_settings(model: &dyn PompModel, covs: &CovariateTable, s: &ForecastSettings) -> Result<()> {
    if s.n_sims == 0 || s.horizon_weeks == 0 {
        return Err(Error::input("forecast needs at least one simulation and one week"));
    }
    if s.horizon_weeks < s.window_weeks {
        return Err(Error::input(format!(
            "horizon of {} weeks is shorter than the {}-week elimination window",
            s.horizon_weeks, s.window_weeks
        )));
    }
    if !(s.euler_step > 0.0 && s.interval > 0.0) {
        return Err(Error::input("euler step and forecast interval must be positive"));
    }
    covs.check_coverage(s.origin, s.time(s.horizon_weeks))?;
    let _ = model;
    Ok(())
}

/// Bound parameter rows, one per simulation.
fn resolve_params(model: &dyn PompModel, params: ParamSource, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    match params {
        ParamSource::Fixed(p) => {
            let v = bind_params(model, p)?;
            Ok(vec![v; n])
        }
        ParamSource::Weighted(c) => {
            let bound = c
                .iter()
                .map(|(p, ll)| Ok((bind_params(model, p)?, *ll)))
                .collect::<Result<Vec<_>>>()?;
            let keyed: Vec<(ParameterSet, f64)> = bound
                .iter()
                .enumerate()
                .map(|(i, (_, ll))| (ParameterSet::new().with("index", i as f64), *ll))
                .collect();
            let draws = sample_params_by_likelihood(&keyed, n, derive_seed(seed, 3, 0))?;
            Ok(draws
                .iter()
                .map(|d| bound[d.get("index").expect("index entry") as usize].0.clone())
                .collect())
        }
    }
}

/// Simulate forward from states drawn uniformly from `sample`, under the
/// scenario covariates `covs`.
pub fn forecast_from_filter(
    model: &dyn PompModel,
    params: ParamSource,
    sample: FilterSample,
    covs: &CovariateTable,
    settings: &ForecastSettings,
    seed: u64,
) -> Result<ForecastResult> {
    if sample.is_empty() {
        return Err(Error::input("filter sample is empty"));
    }
    check_settings(model, covs, settings)?;
    let starts = (0..sample.len())
        .map(|k| embed_state(sample.model, model, sample.state(k)))
        .collect::<Result<Vec<_>>>()?;
    let rows = resolve_params(model, params, settings.n_sims, seed)?;
    let sims = exec::try_map_range(settings.n_sims, settings.par, |i| {
        let k = stream(seed, Domain::Forecast, i as u64, 0).random_range(0..starts.len());
        let mut x = starts[k].clone();
        project(model, &mut x, &rows[i], covs, settings, seed, i as u64)
    })?;
    finish(model, sims, ForecastSource::FilteringDistribution, settings)
}

/// Simulate forward from the model's initial-state distribution at `origin`.
pub fn forecast_from_init(
    model: &dyn PompModel,
    params: ParamSource,
    covs: &CovariateTable,
    settings: &ForecastSettings,
    seed: u64,
) -> Result<ForecastResult> {
    check_settings(model, covs, settings)?;
    let rows = resolve_params(model, params, settings.n_sims, seed)?;
    let sims = exec::try_map_range(settings.n_sims, settings.par, |i| {
        let mut x = vec![0.0; model.state_dim()];
        model.rinit(&mut x, ParamView::uniform(&rows[i]), &mut stream(seed, Domain::Init, i as u64, 0))?;
        project(model, &mut x, &rows[i], covs, settings, seed, i as u64)
    })?;
    finish(model, sims, ForecastSource::InitialConditions, settings)
}

type Sim = (Vec<f64>, Vec<f64>);

fn project(
    model: &dyn PompModel,
    x: &mut [f64],
    values: &[f64],
    covs: &CovariateTable,
    s: &ForecastSettings,
    seed: u64,
    rep: u64,
) -> Result<Sim> {
    let p = ParamView::uniform(values);
    let u = model.unit_count();
    let mut inf = Vec::with_capacity(s.horizon_weeks * u);
    let mut cases = Vec::with_capacity(s.horizon_weeks * u);
    for n in 0..s.horizon_weeks {
        let (a, b) = (s.time(n), s.time(n + 1));
        let mut rng = stream(seed, Domain::Forecast, rep, n as u64 + 1);
        advance(model, x, a, b, s.euler_step, p, covs, &mut rng)?;
        let mut mrng = stream(seed, Domain::Measure, rep, n as u64);
        for unit in 0..u {
            inf.push(model.unit_infections(x, unit));
            cases.push(model.rmeasure(x, unit, b, p, &mut mrng));
        }
    }
    Ok((inf, cases))
}

fn finish(model: &dyn PompModel, sims: Vec<Sim>, source: ForecastSource, s: &ForecastSettings) -> Result<ForecastResult> {
    let (infections, cases): (Vec<_>, Vec<_>) = sims.into_iter().unzip();
    let mut out = ForecastResult {
        scenario: s.scenario.clone(),
        source,
        unit_names: model.unit_names().to_vec(),
        times: s.times(),
        infections,
        cases,
        eliminated: Vec::new(),
        window_weeks: s.window_weeks,
        probability: f64::NAN,
    };
    let national: Vec<Vec<f64>> = (0..out.n_sims()).map(|i| out.national_infections(i)).collect();
    out.eliminated = national.iter().map(|v| eliminated(v, s.window_weeks)).collect();
    out.probability = elimination_probability(&national, s.window_weeks)?;
    Ok(out)
}

/// Deterministic trajectory with a 95% log-normal measurement band.
#[derive(Clone, Debug)]
pub struct Projection {
    pub unit_names: Vec<String>,
    pub times: Vec<f64>,
    /// `[n * U + u]` layouts throughout.
    pub infections: Vec<f64>,
    pub incidence: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Projection {
    pub fn national_infections(&self) -> Vec<f64> {
        let u = self.unit_names.len();
        self.infections.chunks(u).map(|w| w.iter().sum()).collect()
    }
}

/// Run the skeleton of a deterministic model over `grid` and attach the
/// band `exp(ln(ρm + 1) ± z ψ) − 1` around each unit's incidence `m`.
pub fn trajectory_projection(
    model: &dyn PompModel,
    params: &ParameterSet,
    grid: &TimeGrid,
    covs: &CovariateTable,
) -> Result<Projection> {
    if !model.is_deterministic() {
        return Err(Error::input(format!("`{}` is not deterministic", model.name())));
    }
    let values = bind_params(model, params)?;
    let (rho, psi) = (param_index(model, "rho")?, param_index(model, "psi")?);
    let traj = simulate(model, params, grid, covs, 1, 0, Parallelism::Sequential)?.remove(0);
    let p = ParamView::uniform(&values);
    let u = model.unit_count();
    let mut out = Projection {
        unit_names: model.unit_names().to_vec(),
        times: grid.obs_times().to_vec(),
        infections: Vec::with_capacity(grid.len() * u),
        incidence: Vec::with_capacity(grid.len() * u),
        lower: Vec::with_capacity(grid.len() * u),
        upper: Vec::with_capacity(grid.len() * u),
    };
    let acc = model.accumulators();
    for n in 0..grid.len() {
        let x = traj.state(n + 1);
        for unit in 0..u {
            // Incidence is the first accumulator (reported-case flow).
            let m = x[unit * model.unit_width() + acc[0]];
            let (lo, hi) = log_normal_band(m, p.get(rho, unit), p.get(psi, unit), Z95);
            out.infections.push(model.unit_infections(x, unit));
            out.incidence.push(m);
            out.lower.push(lo);
            out.upper.push(hi);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{particle_filter, FilterSettings, Problem};
    use crate::models::{DeathToy, Model2, SirToy};
    use crate::units::ymd;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_force(s: &[f64], w: usize) -> bool {
        (0..s.len().saturating_sub(w) + 1).any(|i| i + w <= s.len() && s[i..i + w].iter().all(|v| *v == 0.0))
    }

    #[test]
    fn predicate_examples() {
        assert!(eliminated(&[0.0; 52], 52));
        let pulses: Vec<f64> = (0..520).map(|k| if k % 10 == 0 { 1.0 } else { 0.0 }).collect();
        assert!(!eliminated(&pulses, 52));
        let mut ten = vec![vec![1.0; 60]; 7];
        ten.extend(vec![vec![0.0; 60]; 3]);
        assert_eq!(elimination_probability(&ten, 52).unwrap(), 0.3);
        assert!(elimination_probability(&[vec![0.0; 51]], 52).is_err());
    }

    #[test]
    fn predicate_matches_window_scan() {
        let mut rng = stream(5, Domain::Misc, 0, 0);
        for _ in 0..1000 {
            let n = rng.random_range(1..120);
            let w = rng.random_range(1..=n);
            let p0: f64 = rng.random();
            let s: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < p0 { 0.0 } else { 1.0 }).collect();
            assert_eq!(eliminated(&s, w), brute_force(&s, w));
        }
    }

    proptest! {
        #[test]
        fn predicate_is_window_monotone(bits in proptest::collection::vec(0u8..2, 1..200), w in 1usize..60) {
            let s: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
            if eliminated(&s, w + 1) {
                prop_assert!(eliminated(&s, w));
            }
            prop_assert_eq!(eliminated(&s, w), brute_force(&s, w));
        }
    }

    fn sir_without_transmission() -> (SirToy, ParameterSet) {
        let m = SirToy::single();
        let p = m.default_params().with("beta", 0.0).with_transform("beta", crate::pomp::Transform::Identity);
        (m, p)
    }

    #[test]
    fn no_transmission_always_eliminates() {
        let (m, p) = sir_without_transmission();
        let settings = ForecastSettings::new("V0", 0.0, 60, 40, 0.1).with_window(52).with_interval(1.0);
        let states = vec![9990.0, 10.0, 0.0, 0.0];
        let sample = FilterSample { model: &m, states: &states };
        let r = forecast_from_filter(&m, ParamSource::Fixed(&p), sample, &CovariateTable::default(), &settings, 1)
            .unwrap();
        assert_eq!(r.probability, 1.0);
        assert!(r.eliminated.iter().all(|e| *e));
    }

    #[test]
    fn identical_particles_on_a_skeleton_give_identical_runs() {
        let m = SirToy::single().skeleton();
        let p = m.default_params().with("beta", 3.0);
        let states = [9000.0, 1000.0, 0.0, 0.0].repeat(5);
        let s = ForecastSettings::new("V0", 0.0, 60, 8, 0.01).with_interval(0.1);
        let r = forecast_from_filter(&m, ParamSource::Fixed(&p), FilterSample { model: &m, states: &states },
            &CovariateTable::default(), &s, 3).unwrap();
        assert!(r.infections.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn results_do_not_depend_on_parallelism() {
        let m = SirToy::single();
        let p = m.default_params();
        let states = [9000.0, 1000.0, 0.0, 0.0, 9500.0, 500.0, 0.0, 0.0];
        let s = ForecastSettings::new("V0", 0.0, 60, 16, 0.1);
        let run = |par| {
            forecast_from_filter(&m, ParamSource::Fixed(&p), FilterSample { model: &m, states: &states },
                &CovariateTable::default(), &s.clone().with_parallelism(par), 9).unwrap()
        };
        let (a, b) = (run(Parallelism::Sequential), run(Parallelism::Parallel));
        assert_eq!(a.infections, b.infections);
        assert_eq!(a.probability, b.probability);
    }

    #[test]
    fn pure_death_matches_extinction_oracle() {
        let m = DeathToy::new();
        let p = m.default_params();
        let k = 10;
        // Zero prevalence at week k persists, so a window ending at the
        // horizon starts exactly at week k.
        let s = ForecastSettings::new("V0", 0.0, k + 51, 4000, 1.0).with_window(52).with_interval(1.0);
        let r = forecast_from_init(&m, ParamSource::Fixed(&p), &CovariateTable::default(), &s, 11).unwrap();
        let exact = DeathToy::extinction_probability(0.5, 10.0, k as u32);
        let se = (exact * (1.0 - exact) / 4000.0).sqrt();
        assert!((r.probability - exact).abs() < 3.0 * se, "{} vs {exact}", r.probability);
    }

    #[test]
    fn weighted_draws_from_filter() {
        let m = SirToy::single();
        let truth = m.default_params();
        let grid = TimeGrid::new(0.0, (1..=10).map(f64::from).collect(), 0.1).unwrap();
        let covs = CovariateTable::default();
        let sim = simulate(&m, &truth, &grid, &covs, 1, 2, Parallelism::Sequential).unwrap().remove(0);
        let prob = Problem::new(&m, &sim.observations, &grid, &covs).unwrap();
        let pf = particle_filter(&prob, &truth, &FilterSettings::new(200).with_sample(50), 4).unwrap();
        let cands = vec![(truth.clone(), pf.loglik), (truth.clone().with("beta", 50.0), f64::NEG_INFINITY)];
        let s = ForecastSettings::new("V0", 10.0, 52, 20, 0.1);
        let r = forecast_from_filter(&m, ParamSource::Weighted(&cands), FilterSample::from_result(&m, &pf), &covs, &s, 5)
            .unwrap();
        assert_eq!(r.n_sims(), 20);
        assert!((0.0..=1.0).contains(&r.probability));
        assert!(forecast_from_filter(&m, ParamSource::Fixed(&truth), FilterSample { model: &m, states: &[] }, &covs, &s, 5)
            .is_err());
    }

    #[test]
    fn horizon_beyond_covariates_fails() {
        let (m, p) = sir_without_transmission();
        let covs = CovariateTable::default().with_span(0.0, 0.5);
        let s = ForecastSettings::new("V0", 0.0, 52, 2, 0.1);
        assert!(matches!(
            forecast_from_init(&m, ParamSource::Fixed(&p), &covs, &s, 1),
            Err(Error::CovariateGap { .. })
        ));
        let short = ForecastSettings::new("V0", 0.0, 10, 2, 0.1);
        assert!(forecast_from_init(&m, ParamSource::Fixed(&p), &CovariateTable::default(), &short, 1).is_err());
    }

    fn model2_projection(id: &str) -> Projection {
        let geo = GeographyData::haiti_synthetic();
        let start = ymd(2010, 10, 23);
        let m = Model2::new(geo.clone(), vec![100.0; 10]).unwrap();
        let p = m.default_params();
        let grid = TimeGrid::weekly(start, 156, 1.0 / 365.0).unwrap();
        let scen = ScenarioSpec::builtin(id, &geo, start + 10.0 * WEEK).unwrap();
        let covs = scenario_covariates(&CovariateTable::default(), &scen, &geo, false).unwrap();
        trajectory_projection(&m, &p, &grid, &covs).unwrap()
    }

    #[test]
    fn vaccination_never_adds_projected_infections() {
        let (v0, v4) = (model2_projection("V0"), model2_projection("V4"));
        let total = |p: &Projection| p.national_infections().iter().sum::<f64>();
        assert!(total(&v4) <= total(&v0));
        assert!(total(&v4) < total(&v0));
    }

    #[test]
    fn band_follows_the_log_normal_quantiles() {
        let geo = GeographyData::haiti_synthetic();
        let m = Model2::new(geo, vec![100.0; 10]).unwrap();
        let grid = TimeGrid::weekly(ymd(2010, 10, 23), 20, 1.0 / 365.0).unwrap();
        let p = m.default_params();
        let (rho, psi) = (p.get("rho").unwrap(), p.get("psi").unwrap());
        let r = trajectory_projection(&m, &p, &grid, &CovariateTable::default()).unwrap();
        for i in 0..r.incidence.len() {
            let c = (rho * r.incidence[i] + 1.0).ln();
            assert!((r.lower[i] - ((c - 1.959964 * psi).exp() - 1.0)).abs() <= 1e-5 * r.upper[i].max(1.0));
            assert!((r.upper[i] - ((c + 1.959964 * psi).exp() - 1.0)).abs() <= 1e-5 * r.upper[i].max(1.0));
        }
        let tight = trajectory_projection(&m, &p.clone().with("psi", 1e-12), &grid, &CovariateTable::default()).unwrap();
        for i in 0..tight.incidence.len() {
            let target = rho * tight.incidence[i];
            assert!((tight.lower[i] - target).abs() < 1e-6 * target.max(1.0));
            assert!((tight.upper[i] - target).abs() < 1e-6 * target.max(1.0));
        }
    }

    #[test]
    fn campaigns_are_counted_per_unit() {
        let c = |unit| Campaign { unit, start: 0.0, end: 1.0, doses_one: 0.0, doses_two: 0.0 };
        assert_eq!(campaigns_per_unit(&[c(0), c(1), c(1)]), 2);
        assert_eq!(campaigns_per_unit(&[]), 0);
    }
}
