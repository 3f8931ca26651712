//! Regenerate the bundled synthetic dataset: weekly seasonal rainfall, the
//! ten-department geography, and 400 weeks of cases simulated from the
//! stochastic metapopulation model at its default parameters.
//!
//! Usage: make-synthetic-data [OUT_DIR] [SEED]

use std::path::PathBuf;

use anyhow::{Context, Result};
use rand_distr::{Distribution, Gamma};
use serde_json::json;

use cholera_pomp::exec::Parallelism;
use cholera_pomp::io;
use cholera_pomp::models::{GeographyData, Model3};
use cholera_pomp::pomp::{simulate, standardize_rainfall, CovariateTable, ObservationSeries, PompModel, Rainfall, TimeGrid};
use cholera_pomp::rng::{stream, Domain};
use cholera_pomp::units::{ymd, DAY, WEEK};

const WEEKS: usize = 400;
const INIT_WEEKS: usize = 4;
/// Rainfall extends past the data far enough for a ten-year forecast.
const RAIN_WEEKS: usize = WEEKS + 540;
const DEFAULT_SEED: u64 = 20_190_112;

/// Weekly rainfall (mm): two rainy seasons, gamma-distributed around the
/// seasonal mean.
fn rainfall(geo: &GeographyData, start: f64, seed: u64) -> Rainfall {
    let values = (0..geo.len())
        .map(|u| {
            let mut rng = stream(seed, Domain::Misc, u as u64, 0);
            let base = 20.0 + 4.0 * u as f64;
            (0..RAIN_WEEKS)
                .map(|k| {
                    let t = start + k as f64 * WEEK;
                    let phase = 2.0 * std::f64::consts::PI * t;
                    let mean = base * (1.0 + 0.6 * (phase - 1.8).sin() + 0.3 * (2.0 * phase).sin()).max(0.05);
                    let shape = 2.0;
                    let draw = Gamma::new(shape, mean / shape).expect("positive gamma").sample(&mut rng);
                    (draw * 10.0).round() / 10.0
                })
                .collect()
        })
        .collect();
    Rainfall {
        start,
        step: WEEK,
        values,
        unit_names: geo.names.clone(),
    }
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/synthetic".into()));
    let seed: u64 = match args.next() {
        Some(s) => s.parse().context("seed must be an integer")?,
        None => DEFAULT_SEED,
    };
    std::fs::create_dir_all(&dir)?;
    let geo = GeographyData::haiti_synthetic();
    let start = ymd(2014, 3, 1);
    let rain = rainfall(&geo, start, seed);
    io::write_rainfall(&rain, std::fs::File::create(dir.join("rainfall.csv"))?)?;
    io::save_geography(&geo, &dir)?;

    // The first weeks of the case file seed the initial state.
    let init: Vec<[f64; 4]> = geo.population.iter().map(|p| [(p * 2e-5).round(); 4]).collect();
    let model = Model3::new(geo.clone(), init.clone(), 0)?;
    let params = model.default_params();
    // Read the written file back so the simulation sees exactly what a user
    // loading the dataset sees.
    let rain_std = Rainfall {
        values: standardize_rainfall(&io::load_rainfall(&dir.join("rainfall.csv"), &geo.names, false)?.values, &geo.names)?,
        ..rain
    };
    let covs = CovariateTable::default().with_rainfall(rain_std);
    let t0 = start + (INIT_WEEKS - 1) as f64 * WEEK;
    let grid = TimeGrid::weekly(t0, WEEKS - INIT_WEEKS, DAY)?;
    let sim = simulate(&model, &params, &grid, &covs, 1, seed, Parallelism::Sequential)?.remove(0);

    let mut times: Vec<f64> = (0..INIT_WEEKS).map(|k| start + k as f64 * WEEK).collect();
    times.extend_from_slice(grid.obs_times());
    let by_unit = (0..geo.len())
        .map(|u| {
            let mut s: Vec<Option<f64>> = init[u].iter().map(|v| Some(*v)).collect();
            s.extend(sim.observations.unit_series(u));
            s
        })
        .collect();
    let cases = ObservationSeries::new(geo.names.clone(), times, by_unit)?;
    io::save_cases(&cases, &dir.join("cases.csv"))?;
    io::save_params(&params, &dir.join("params.csv"))?;
    let manifest = json!({
        "generator": "make-synthetic-data",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "model": model.name(),
        "start": cholera_pomp::units::time_to_date(start).to_string(),
        "weeks": WEEKS,
        "initial_weeks": INIT_WEEKS,
        "rainfall_weeks": RAIN_WEEKS,
        "euler_step_days": 1,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("wrote {} ({} weeks, seed {seed})", dir.display(), WEEKS);
    Ok(())
}
