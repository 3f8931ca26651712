//! Library pipeline on the bundled synthetic ten-department dataset.

use std::path::{Path, PathBuf};

use cholera_pomp::benchmark::{aic, fit_benchmark};
use cholera_pomp::inference::{block_filter, Blocks, FilterSettings, Problem};
use cholera_pomp::io;
use cholera_pomp::models::{GeographyData, Model3};
use cholera_pomp::pomp::{CovariateTable, ObservationSeries, PompModel, TimeGrid};
use cholera_pomp::units::DAY;
use cholera_pomp::Parallelism;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn geography() -> GeographyData {
    let d = data_dir();
    io::load_geography(&d.join("geography.csv"), &d.join("distance.csv"), &d.join("river.csv")).unwrap()
}

/// Model 3 initialized from the first four weeks, fitted to the next `weeks`.
fn model3(weeks: usize) -> (Model3, ObservationSeries, TimeGrid, CovariateTable) {
    let geo = geography();
    let all = io::load_cases(&data_dir().join("cases.csv"), Some(&geo.names)).unwrap();
    let init = (0..geo.len())
        .map(|u| {
            let v: Vec<f64> = (0..4).map(|n| all.get(u, n).unwrap_or(0.0)).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect();
    let times = all.times()[4..4 + weeks].to_vec();
    let by_unit = (0..geo.len()).map(|u| all.unit_series(u)[4..4 + weeks].to_vec()).collect();
    let data = ObservationSeries::new(geo.names.clone(), times.clone(), by_unit).unwrap();
    let grid = TimeGrid::new(all.times()[3], times, DAY).unwrap();
    let rain = io::load_rainfall(&data_dir().join("rainfall.csv"), &geo.names, true).unwrap();
    let model = Model3::new(geo, init, 0).unwrap();
    (model, data, grid, CovariateTable::default().with_rainfall(rain))
}

#[test]
fn bundled_files_are_consistent() {
    let geo = geography();
    assert_eq!(geo.len(), 10);
    let cases = io::load_cases(&data_dir().join("cases.csv"), Some(&geo.names)).unwrap();
    assert_eq!(cases.n_units(), 10);
    assert_eq!(cases.len(), 400);
    let params = io::load_params(&data_dir().join("params.csv")).unwrap();
    let (model, ..) = model3(4);
    params.bind(model.param_defs()).unwrap();
}

#[test]
fn cases_round_trip_through_csv() {
    let geo = geography();
    let cases = io::load_cases(&data_dir().join("cases.csv"), Some(&geo.names)).unwrap();
    let mut buf = Vec::new();
    io::write_cases(&cases, &mut buf).unwrap();
    let back = io::read_cases(buf.as_slice(), Some(&geo.names)).unwrap();
    assert_eq!(back.times(), cases.times());
    for u in 0..cases.n_units() {
        assert_eq!(back.unit_series(u), cases.unit_series(u));
    }
}

#[test]
fn block_filter_runs_on_the_synthetic_data() {
    let (model, data, grid, covs) = model3(26);
    let params = io::load_params(&data_dir().join("params.csv")).unwrap();
    let prob = Problem::new(&model, &data, &grid, &covs).unwrap();
    let blocks = Blocks::per_unit(10);
    let run = |par| block_filter(&prob, &params, &blocks, &FilterSettings::new(100).with_parallelism(par), 5).unwrap();
    let (seq, par) = (run(Parallelism::Sequential), run(Parallelism::Parallel));
    assert!(seq.loglik.is_finite());
    assert_eq!(seq.loglik.to_bits(), par.loglik.to_bits());
    assert_eq!(seq.cond_logliks, par.cond_logliks);
}

#[test]
fn benchmark_totals_on_the_synthetic_data() {
    let geo = geography();
    let cases = io::load_cases(&data_dir().join("cases.csv"), Some(&geo.names)).unwrap();
    let fit = fit_benchmark(&cases, true).unwrap();
    let sum: f64 = fit.units.iter().map(|u| u.loglik).sum();
    assert_eq!(fit.loglik, sum);
    assert_eq!(fit.n_params, 30);
    assert_eq!(fit.aic, aic(fit.loglik, 30));
    let national = fit_benchmark(&cases, false).unwrap();
    assert_eq!(national.n_params, 3);
}
