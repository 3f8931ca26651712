//! Turn a configuration into a model, data, time grid and covariates.

use anyhow::{bail, Context, Result};

use cholera_pomp::io;
use cholera_pomp::models::scenario::ScenarioSpec;
use cholera_pomp::models::{
    DeathToy, EfficacyCurve, GeographyData, HmmToy, LinearGaussianToy, Model1, Model2, Model3, SirToy,
};
use cholera_pomp::pomp::{CovariateTable, ObservationSeries, ParameterSet, PompModel, TimeGrid};
use cholera_pomp::units::{date_to_time, parse_date, DAY, WEEK};

use crate::config::RunConfig;

/// Epidemic/endemic switch of the national model.
const PHASE_BREAK: (i32, u32, u32) = (2015, 3, 1);

pub struct Setup {
    pub model: Box<dyn PompModel>,
    /// Observed data, when a case file was given.
    pub data: Option<ObservationSeries>,
    pub grid: TimeGrid,
    pub covs: CovariateTable,
    pub geo: Option<GeographyData>,
    /// Whether model time is calendar years (dates in outputs).
    pub dated: bool,
    /// Length of one observation interval in model time.
    pub interval: f64,
    pub params: ParameterSet,
}

impl Setup {
    pub fn data(&self) -> Result<&ObservationSeries> {
        self.data.as_ref().context("this command needs observed data (`data.cases`)")
    }
}

fn geography(cfg: &RunConfig) -> Result<GeographyData> {
    let d = &cfg.data;
    match (&d.geography, &d.distance, &d.river) {
        (None, None, None) => Ok(GeographyData::haiti_synthetic()),
        (Some(g), Some(dist), Some(r)) => Ok(io::load_geography(g, dist, r)?),
        _ => bail!("`data.geography`, `data.distance` and `data.river` must be given together"),
    }
}

fn efficacy(cfg: &RunConfig) -> Result<EfficacyCurve> {
    Ok(match &cfg.data.efficacy {
        Some(p) => io::load_efficacy(p)?,
        None => EfficacyCurve::default(),
    })
}

/// Cases split into `k` initialization weeks and the fitted remainder.
struct Split {
    init: Vec<Vec<f64>>,
    data: Option<ObservationSeries>,
    grid: TimeGrid,
}

fn split_cases(cfg: &RunConfig, units: &[String], k: usize, step: f64) -> Result<Split> {
    match &cfg.data.cases {
        Some(path) => {
            let all = io::load_cases(path, Some(units))?;
            if all.len() <= k {
                bail!("{} needs more than {k} weeks of cases", path.display());
            }
            let init = (0..units.len())
                .map(|u| (0..k).map(|n| all.get(u, n).unwrap_or(0.0)).collect())
                .collect();
            let times = all.times()[k..].to_vec();
            let t0 = if k == 0 { all.times()[0] - WEEK } else { all.times()[k - 1] };
            let by_unit = (0..units.len()).map(|u| all.unit_series(u)[k..].to_vec()).collect();
            let data = ObservationSeries::new(units.to_vec(), times.clone(), by_unit)?;
            Ok(Split {
                init,
                data: Some(data),
                grid: TimeGrid::new(t0, times, step)?,
            })
        }
        None => {
            let t0 = date_to_time(parse_date(&cfg.data.start)?);
            Ok(Split {
                init: vec![vec![cfg.data.init_cases; k]; units.len()],
                data: None,
                grid: TimeGrid::weekly(t0, cfg.data.weeks, step)?,
            })
        }
    }
}

/// Campaign slots to allocate: enough for the configured forecast scenario.
fn campaign_capacity(cfg: &RunConfig, geo: &GeographyData, national: bool) -> Result<usize> {
    let spec = scenario(cfg, geo, 0.0)?;
    if national {
        return Ok(spec.campaigns.len());
    }
    Ok(cholera_pomp::forecast::campaigns_per_unit(&spec.department_campaigns(geo)?))
}

/// The configured scenario; built-in ids start at `start` (years).
pub fn scenario(cfg: &RunConfig, geo: &GeographyData, start: f64) -> Result<ScenarioSpec> {
    let id = &cfg.forecast.scenario;
    if let Some(path) = &cfg.data.scenarios {
        let specs = io::load_scenarios(path)?;
        if let Some(s) = specs.into_iter().find(|s| &s.id == id) {
            return Ok(s.with_horizon(cfg.forecast.horizon_weeks));
        }
    }
    Ok(ScenarioSpec::builtin(id, geo, start)?.with_horizon(cfg.forecast.horizon_weeks))
}

fn toy_grid(cfg: &RunConfig) -> Result<TimeGrid> {
    let step = cfg.data.euler_step.unwrap_or(0.1);
    let times = (1..=cfg.data.weeks).map(|k| k as f64).collect();
    Ok(TimeGrid::new(0.0, times, step)?)
}

fn toy_data(cfg: &RunConfig, model: &dyn PompModel, grid: &TimeGrid) -> Result<Option<ObservationSeries>> {
    let Some(path) = &cfg.data.cases else { return Ok(None) };
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let units = model.unit_count();
    let mut by_unit = vec![Vec::new(); units];
    for rec in rdr.records() {
        let rec = rec?;
        // `time,unit,value` rows in time-major order.
        let u: usize = rec[1].parse().context("toy data unit index")?;
        let v = if &rec[2] == "NA" { None } else { Some(rec[2].parse::<f64>()?) };
        by_unit.get_mut(u).context("toy data unit out of range")?.push(v);
    }
    let data = if model.count_data() {
        ObservationSeries::new(model.unit_names().to_vec(), grid.obs_times().to_vec(), by_unit)?
    } else {
        ObservationSeries::real(model.unit_names().to_vec(), grid.obs_times().to_vec(), by_unit)?
    };
    Ok(Some(data))
}

/// Model defaults, then the parameter file, then config overrides.
pub fn resolve_params(model: &dyn PompModel, cfg: &RunConfig, file: Option<&std::path::Path>) -> Result<ParameterSet> {
    let mut p = model.default_params();
    if let Some(path) = file {
        for e in io::load_params(path)?.entries() {
            if p.entry(&e.name).is_none() {
                bail!("{}: unknown parameter `{}` for {}", path.display(), e.name, model.name());
            }
            p.insert(&e.name, e.value, e.transform, e.scope);
        }
    }
    for (name, v) in &cfg.params {
        p.set(name, *v).with_context(|| format!("override for {}", model.name()))?;
    }
    Ok(p)
}

pub fn build(cfg: &RunConfig) -> Result<Setup> {
    let dated_step = cfg.data.euler_step.unwrap_or(1.0) * DAY;
    let (model, data, grid, covs, geo, dated): (Box<dyn PompModel>, _, _, _, _, _) = match cfg.model.as_str() {
        "model1" => {
            let geo = geography(cfg)?;
            let national = vec!["Haiti".to_string()];
            let split = split_cases(cfg, &national, 0, dated_step)?;
            let (y, m, d) = PHASE_BREAK;
            let m1 = Model1::new(
                split.grid.t0(),
                split.grid.t_end(),
                cholera_pomp::units::ymd(y, m, d),
                campaign_capacity(cfg, &geo, true)?,
            )
            .with_efficacy(efficacy(cfg)?)
            .with_population(geo.population.iter().sum());
            (Box::new(m1) as Box<dyn PompModel>, split.data, split.grid, CovariateTable::default(), Some(geo), true)
        }
        "model2" => {
            let geo = geography(cfg)?;
            let split = split_cases(cfg, &geo.names, 1, dated_step)?;
            let init = split.init.iter().map(|v| v[0]).collect();
            let m2 = Model2::new(geo.clone(), init)?;
            (Box::new(m2) as Box<dyn PompModel>, split.data, split.grid, CovariateTable::default(), Some(geo), true)
        }
        "model3" => {
            let geo = geography(cfg)?;
            let split = split_cases(cfg, &geo.names, 4, dated_step)?;
            let init = split.init.iter().map(|v| [v[0], v[1], v[2], v[3]]).collect();
            let m3 = Model3::new(geo.clone(), init, campaign_capacity(cfg, &geo, false)?)?.with_efficacy(efficacy(cfg)?);
            let rain_path = cfg.data.rainfall.as_ref().context("model3 needs `data.rainfall`")?;
            let rain = io::load_rainfall(rain_path, &geo.names, true)?;
            let covs = CovariateTable::default().with_rainfall(rain);
            (Box::new(m3) as Box<dyn PompModel>, split.data, split.grid, covs, Some(geo), true)
        }
        toy => {
            let model: Box<dyn PompModel> = match toy {
                "toy:sir" => Box::new(SirToy::single()),
                "toy:sir-skeleton" => Box::new(SirToy::single().skeleton()),
                "toy:sir-coupled" => Box::new(SirToy::coupled(cfg.data.units)),
                "toy:hmm" => Box::new(HmmToy::new()),
                "toy:linear-gaussian" => Box::new(LinearGaussianToy::new()),
                "toy:death" => Box::new(DeathToy::new()),
                other => bail!("unknown model `{other}`"),
            };
            let grid = toy_grid(cfg)?;
            let data = toy_data(cfg, model.as_ref(), &grid)?;
            (model, data, grid, CovariateTable::default(), None, false)
        }
    };
    let params = resolve_params(model.as_ref(), cfg, cfg.data.params.as_deref())?;
    let interval = if dated { WEEK } else { 1.0 };
    Ok(Setup {
        model,
        data,
        grid,
        covs,
        geo,
        dated,
        interval,
        params,
    })
}
