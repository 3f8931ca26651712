//! One function per subcommand. Each writes its tables into the run
//! directory and returns the JSON summary.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use cholera_pomp::benchmark::fit_benchmark;
use cholera_pomp::exec::Parallelism;
use cholera_pomp::forecast::{
    forecast_from_filter, scenario_covariates, FilterSample, ForecastSettings, ParamSource,
};
use cholera_pomp::inference::{
    block_filter, ibpf, if2, trajectory_match, Blocks, FilterSettings, IbpfSettings, If2Result, If2Settings,
    NelderMeadSettings, PfResult, Problem, TrajMatchSettings,
};
use cholera_pomp::io::{self, format_time};
use cholera_pomp::mcap::{mcap_ci, McapSettings};
use cholera_pomp::pomp::{simulate, ParameterSet};
use cholera_pomp::profile::{profile_design, profile_grid, run_profile, ProfileJob, SyntheticSurface};
use cholera_pomp::rng::derive_seed;
use cholera_pomp::units::{date_to_time, parse_date};

use crate::config::RunConfig;
use crate::output::{finite, RunDir};
use crate::setup::{self, Setup};

fn params_json(p: &ParameterSet) -> Value {
    let m: BTreeMap<&str, Option<f64>> = p.entries().iter().map(|e| (e.name.as_str(), finite(e.value))).collect();
    json!(m)
}

fn blocks(kind: &str, units: usize) -> Result<Blocks> {
    match kind {
        "single" => Ok(Blocks::single(units)),
        "unit" => Ok(Blocks::per_unit(units)),
        other => bail!("unknown block layout `{other}` (expected `single` or `unit`)"),
    }
}

fn problem(s: &Setup) -> Result<Problem<'_>> {
    Ok(Problem::new(s.model.as_ref(), s.data()?, &s.grid, &s.covs)?)
}

pub fn simulate_cmd(cfg: &RunConfig, par: Parallelism, out: &mut RunDir) -> Result<Value> {
    let seed = cfg.require_seed("simulate")?;
    let s = setup::build(cfg)?;
    let m = s.model.as_ref();
    let trajs = simulate(m, &s.params, &s.grid, &s.covs, cfg.simulate.n_sims, seed, par)?;
    let mut w = csv::Writer::from_writer(out.file("simulations.csv")?);
    w.write_record(["sim", "time", "unit", "observation", "infections"])?;
    for (i, t) in trajs.iter().enumerate() {
        for (n, time) in s.grid.obs_times().iter().enumerate() {
            let x = t.state(n + 1);
            for (u, name) in m.unit_names().iter().enumerate() {
                let y = t.observations.get(u, n).expect("simulated observation");
                w.write_record([
                    i.to_string(),
                    format_time(*time, s.dated),
                    name.clone(),
                    y.to_string(),
                    m.unit_infections(x, u).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    drop(w);
    if s.dated {
        io::write_cases(&trajs[0].observations, out.file("cases.csv")?)?;
    } else {
        let mut w = csv::Writer::from_writer(out.file("observations.csv")?);
        w.write_record(["time", "unit", "value"])?;
        for (n, time) in s.grid.obs_times().iter().enumerate() {
            for u in 0..m.unit_count() {
                let y = trajs[0].observations.get(u, n).expect("simulated observation");
                w.write_record([time.to_string(), u.to_string(), y.to_string()])?;
            }
        }
        w.flush()?;
    }
    io::write_params(&s.params, out.file("params.csv")?)?;
    Ok(json!({
        "model": m.name(),
        "n_sims": trajs.len(),
        "weeks": s.grid.len(),
        "clamped_mass": trajs.iter().map(|t| t.clamped).sum::<f64>(),
    }))
}

/// Log of the mean of `exp(ll)` and its delta-method standard error.
pub fn log_mean_exp(ll: &[f64]) -> (f64, f64) {
    let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return (max, f64::NAN);
    }
    let w: Vec<f64> = ll.iter().map(|l| (l - max).exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let se = if w.len() > 1 {
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt() / mean
    } else {
        f64::NAN
    };
    (max + mean.ln(), se)
}

fn write_filter(out: &mut RunDir, s: &Setup, runs: &[PfResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out.file("filter.csv")?);
    w.write_record(["replicate", "time", "block", "cond_loglik", "ess"])?;
    for (r, pf) in runs.iter().enumerate() {
        for (n, t) in s.grid.obs_times().iter().enumerate() {
            for b in 0..pf.blocks {
                let k = n * pf.blocks + b;
                w.write_record([
                    r.to_string(),
                    format_time(*t, s.dated),
                    b.to_string(),
                    pf.cond_logliks[k].to_string(),
                    pf.ess[k].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn filter_cmd(cfg: &RunConfig, par: Parallelism, out: &mut RunDir) -> Result<Value> {
    let seed = cfg.require_seed("filter")?;
    let s = setup::build(cfg)?;
    let prob = problem(&s)?;
    let b = blocks(&cfg.filter.blocks, s.model.unit_count())?;
    let settings = FilterSettings::new(cfg.filter.particles).with_parallelism(par);
    let runs = (0..cfg.filter.replicates.max(1))
        .map(|r| block_filter(&prob, &s.params, &b, &settings, derive_seed(seed, 10, r as u64)))
        .collect::<cholera_pomp::Result<Vec<_>>>()?;
    write_filter(out, &s, &runs)?;
    let lls: Vec<f64> = runs.iter().map(|r| r.loglik).collect();
    let (ll, se) = log_mean_exp(&lls);
    Ok(json!({
        "model": s.model.name(),
        "particles": cfg.filter.particles,
        "blocks": b.len(),
        "logliks": lls.iter().map(|l| finite(*l)).collect::<Vec<_>>(),
        "loglik": finite(ll),
        "loglik_se": finite(se),
        "failures": runs.iter().map(|r| r.failure).collect::<Vec<_>>(),
    }))
}

fn if2_settings(particles: usize, iterations: usize, cooling: f64, rw: &BTreeMap<String, f64>, eval: usize, par: Parallelism) -> If2Settings {
    let mut st = If2Settings::new(particles, iterations, cooling)
        .with_eval_particles(if eval == 0 { particles } else { eval })
        .with_parallelism(par);
    for (k, v) in rw {
        st = st.with_rw_sd(k, *v);
    }
    st
}

fn write_fit(out: &mut RunDir, s: &Setup, r: &If2Result) -> Result<Value> {
    let mut w = csv::Writer::from_writer(out.file("trace.csv")?);
    let names: Vec<String> = r.estimate.names().map(str::to_string).collect();
    let mut header = vec!["iteration".to_string(), "loglik".into(), "filter_loglik".into()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for e in &r.trace {
        let mut row = vec![e.iteration.to_string(), e.loglik.to_string(), e.filter_loglik.to_string()];
        row.extend(names.iter().map(|n| e.params.get(n).map_or(String::new(), |v| v.to_string())));
        w.write_record(&row)?;
    }
    w.flush()?;
    drop(w);
    io::write_params(&r.estimate, out.file("params.csv")?)?;
    Ok(json!({
        "model": s.model.name(),
        "loglik": finite(r.loglik),
        "initial_loglik": r.trace.first().and_then(|e| finite(e.loglik)),
        "iterations": r.trace.len().saturating_sub(1),
        "halted_at": r.halted,
        "estimate": params_json(&r.estimate),
    }))
}

pub fn fit_if2_cmd(cfg: &RunConfig, par: Parallelism, out: &mut RunDir) -> Result<Value> {
    let seed = cfg.require_seed("fit-if2")?;
    let s = setup::build(cfg)?;
    let prob = problem(&s)?;
    let c = &cfg.if2;
    let st = if2_settings(c.particles, c.iterations, c.cooling, &c.rw_sd, c.eval_particles, par);
    let r = if2(&prob, &s.params, &st, seed)?;
    write_fit(out, &s, &r)
}

pub fn fit_ibpf_cmd(cfg: &RunConfig, par: Parallelism, out: &mut RunDir) -> Result<Value> {
    let seed = cfg.require_seed("fit-ibpf")?;
    let s = setup::build(cfg)?;
    let prob = problem(&s)?;
    let c = &cfg.ibpf;
    let st = IbpfSettings {
        if2: if2_settings(c.particles, c.iterations, c.cooling, &c.rw_sd, c.eval_particles, par),
        blocks: blocks(&c.blocks, s.model.unit_count())?,
    };
    let r = ibpf(&prob, &s.params, &st, seed)?;
    write_fit(out, &s, &r)
}

fn traj_settings(cfg: &RunConfig) -> TrajMatchSettings {
    TrajMatchSettings {
        optimizer: NelderMeadSettings {
            max_evals: cfg.traj.max_evals,
            restarts: cfg.traj.restarts,
            ..NelderMeadSettings::default()
        },
    }
}

pub fn fit_traj_cmd(cfg: &RunConfig, out: &mut RunDir) -> Result<Value> {
    let s = setup::build(cfg)?;
    let prob = problem(&s)?;
    let free: Vec<&str> = cfg.traj.free.iter().map(String::as_str).collect();
    let r = trajectory_match(&prob, &s.params, &free, &traj_settings(cfg))?;
    io::write_params(&r.params, out.file("params.csv")?)?;
    Ok(json!({
        "model": s.model.name(),
        "loglik": finite(r.loglik),
        "evals": r.evals,
        "converged": r.converged,
        "estimate": params_json(&r.params),
    }))
}

pub fn benchmark_cmd(cfg: &RunConfig, out: &mut RunDir) -> Result<Value> {
    let path = cfg.data.cases.as_ref().context("`benchmark` needs `data.cases`")?;
    let data = io::load_cases(path, None)?;
    let fit = fit_benchmark(&data, cfg.benchmark.per_unit)?;
    let mut w = csv::Writer::from_writer(out.file("benchmark.csv")?);
    w.write_record(["unit", "alpha", "b", "phi", "loglik"])?;
    for u in &fit.units {
        w.write_record([
            u.unit.clone(),
            u.params.alpha.to_string(),
            u.params.b.to_string(),
            u.params.phi.to_string(),
            u.loglik.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(json!({
        "per_unit": cfg.benchmark.per_unit,
        "loglik": finite(fit.loglik),
        "n_params": fit.n_params,
        "aic": finite(fit.aic),
    }))
}

fn profile_eval(cfg: &RunConfig, s: Option<&Setup>, par: Parallelism, job: &ProfileJob) -> cholera_pomp::Result<f64> {
    let p = &cfg.profile;
    match p.method.as_str() {
        "surface" => {
            let surf = SyntheticSurface {
                theta0: p.surface.theta0,
                s: p.surface.s,
                noise_sd: p.surface.noise_sd,
            };
            Ok(surf.eval(job.value, job.seed))
        }
        "traj" => {
            let s = s.expect("setup for model-based profiles");
            let prob = Problem::new(s.model.as_ref(), s.data.as_ref().expect("checked data"), &s.grid, &s.covs)?;
            let start = s.params.clone().with(&job.parameter, job.value);
            let free: Vec<&str> = job.free.iter().map(String::as_str).collect();
            Ok(trajectory_match(&prob, &start, &free, &traj_settings(cfg))?.loglik)
        }
        "if2" => {
            let s = s.expect("setup for model-based profiles");
            let prob = Problem::new(s.model.as_ref(), s.data.as_ref().expect("checked data"), &s.grid, &s.covs)?;
            let start = s.params.clone().with(&job.parameter, job.value);
            let c = &cfg.if2;
            let rw: BTreeMap<String, f64> =
                c.rw_sd.iter().filter(|(k, _)| job.free.contains(k)).map(|(k, v)| (k.clone(), *v)).collect();
            let st = if2_settings(c.particles, c.iterations, c.cooling, &rw, c.eval_particles, par);
            Ok(if2(&prob, &start, &st, job.seed)?.loglik)
        }
        other => Err(cholera_pomp::Error::InvalidInput(format!(
            "unknown profile method `{other}` (expected surface, traj or if2)"
        ))),
    }
}

pub fn profile_cmd(cfg: &RunConfig, par: Parallelism, out: &mut RunDir) -> Result<Value> {
    let p = &cfg.profile;
    let stochastic = p.method != "surface" || p.surface.noise_sd > 0.0;
    let seed = if stochastic && p.method != "traj" { cfg.require_seed("profile")? } else { cfg.seed.unwrap_or(0) };
    let setup = if p.method == "surface" {
        None
    } else {
        let s = setup::build(cfg)?;
        s.data()?;
        Some(s)
    };
    let grid = profile_grid(p.lower, p.upper, p.points)?;
    let jobs = profile_design(&p.parameter, &grid, p.replicates, &p.free, seed)?;
    let points = run_profile(&jobs, par, |job| profile_eval(cfg, setup.as_ref(), Parallelism::Sequential, job))?;
    let lls: Vec<f64> = points.iter().map(|p| p.1).collect();
    io::write_profile(&jobs, &lls, out.file("profile.csv")?)?;
    let best = points.iter().copied().filter(|p| p.1.is_finite()).max_by(|a, b| a.1.total_cmp(&b.1));
    Ok(json!({
        "parameter": p.parameter,
        "method": p.method,
        "jobs": jobs.len(),
        "best_value": best.map(|b| b.0),
        "best_loglik": best.map(|b| b.1),
    }))
}

pub fn mcap_cmd(cfg: &RunConfig, out: &mut RunDir) -> Result<Value> {
    let input = cfg.mcap.input.clone().unwrap_or_else(|| out.path("profile.csv"));
    let f = std::fs::File::open(&input).with_context(|| format!("opening profile table {}", input.display()))?;
    let points = io::read_profile(f)?;
    let settings = McapSettings {
        level: cfg.mcap.level,
        span: cfg.mcap.span,
        ..McapSettings::default()
    };
    let r = mcap_ci(&points, &settings)?;
    let mut w = csv::Writer::from_writer(out.file("mcap.csv")?);
    w.write_record(["value", "smoothed"])?;
    for (x, y) in r.grid.iter().zip(&r.smoothed) {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(json!({
        "mle": r.mle,
        "ci": [r.ci.0, r.ci.1],
        "open_lower": r.open_lower,
        "open_upper": r.open_upper,
        "level": r.settings.level,
        "cutoff": r.cutoff,
        "se_mc": finite(r.se_mc),
        "se_stat": finite(r.se_stat),
        "points": r.points.len(),
    }))
}

pub fn forecast_cmd(cfg: &RunConfig, par: Parallelism, out: &mut RunDir) -> Result<Value> {
    let seed = cfg.require_seed("forecast")?;
    let mut s = setup::build(cfg)?;
    if let Some(path) = &cfg.forecast.params {
        s.params = setup::resolve_params(s.model.as_ref(), cfg, Some(path))?;
    }
    let prob = problem(&s)?;
    let f = &cfg.forecast;
    let origin = s.grid.t_end();
    let covs = match &s.geo {
        Some(geo) => {
            let start = match &f.start {
                Some(d) => date_to_time(parse_date(d)?),
                None => origin + s.interval,
            };
            let spec = setup::scenario(cfg, geo, start)?;
            let national = s.model.unit_count() == 1 && geo.len() > 1;
            scenario_covariates(&s.covs, &spec, geo, national)?
        }
        None if f.scenario == "V0" => s.covs.clone(),
        None => bail!("scenario `{}` needs a model with a geography", f.scenario),
    };
    let b = blocks(&cfg.filter.blocks, s.model.unit_count())?;
    let fs = FilterSettings::new(f.particles).with_sample(f.particles).with_parallelism(par);
    let pf = block_filter(&prob, &s.params, &b, &fs, derive_seed(seed, 20, 0))?;
    if pf.failure.is_some() {
        log::warn!("filter failed at observation {:?}; forecasting from the last filtering particles", pf.failure);
    }
    let settings = ForecastSettings::new(&f.scenario, origin, f.horizon_weeks, f.n_sims, s.grid.euler_step())
        .with_window(f.window_weeks)
        .with_interval(s.interval)
        .with_parallelism(par);
    let sample = FilterSample::from_result(s.model.as_ref(), &pf);
    let r = forecast_from_filter(s.model.as_ref(), ParamSource::Fixed(&s.params), sample, &covs, &settings, derive_seed(seed, 21, 0))?;
    io::write_forecast(&r, s.dated, out.file("forecast.csv")?)?;
    Ok(json!({
        "model": s.model.name(),
        "scenario": r.scenario,
        "source": r.source.as_str(),
        "filter_loglik": finite(pf.loglik),
        "n_sims": r.n_sims(),
        "horizon_weeks": f.horizon_weeks,
        "window_weeks": r.window_weeks,
        "eliminated": r.eliminated.iter().filter(|e| **e).count(),
        "probability": r.probability,
    }))
}
