use std::fs;
use std::path::Path;

use serde_json::Value;

use cholera_pomp::inference::{trajectory_loglik, Problem};
use cholera_pomp::models::SirToy;
use cholera_pomp::pomp::{CovariateTable, ObservationSeries, PompModel, TimeGrid};
use cholera_pomp_cli::run;

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("cholera-pomp").chain(args.iter().copied()))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let code = cli(&["simulate", "--seed", "42", "--out", &s(d.path()), "--set", "model=toy:sir", "--set", "simulate.n_sims=3"]);
        assert_eq!(code, 0);
    }
    for f in ["simulations.csv", "observations.csv", "params.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["simulate", "--seed", "43", "--out", &s(c.path()), "--set", "model=toy:sir"]), 0);
    assert_ne!(fs::read(a.path().join("simulations.csv")).unwrap(), fs::read(c.path().join("simulations.csv")).unwrap());
}

#[test]
fn configuration_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "model = \"toy:hmm\"\nseed = 5\n[filter]\nparticles = 50\n[data]\nweeks = 10\n").unwrap();
    let data = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["simulate", "--config", &s(&cfg), "--out", &s(data.path())]), 0);
    let cases = data.path().join("observations.csv");
    let with_data = format!("data.cases={}", s(&cases));

    let out = |tag: &str| dir.path().join(tag);
    let config_of = |tag: &str| json(&out(tag), "manifest.json")["config"].clone();

    // Defaults only.
    assert_eq!(cli(&["filter", "--out", &s(&out("d")), "--seed", "1", "--set", "model=toy:hmm", "--set", "data.weeks=10", "--set", &with_data]), 0);
    assert_eq!(config_of("d")["filter"]["particles"], 1000);
    // File over defaults.
    assert_eq!(cli(&["filter", "--config", &s(&cfg), "--out", &s(&out("f")), "--set", &with_data]), 0);
    assert_eq!(config_of("f")["filter"]["particles"], 50);
    assert_eq!(config_of("f")["seed"], 5);
    // Command line over file.
    let args = ["filter", "--config", &s(&cfg), "--out", &s(&out("c")), "--seed", "9", "--set", "filter.particles=20", "--set", &with_data];
    assert_eq!(cli(&args), 0);
    assert_eq!(config_of("c")["filter"]["particles"], 20);
    assert_eq!(config_of("c")["seed"], 9);
    assert_eq!(json(&out("c"), "manifest.json")["seed"], 9);
}

#[test]
fn one_particle_on_a_skeleton_is_the_trajectory_likelihood() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--set", "model=toy:sir-skeleton", "--set", "data.weeks=30"];
    let sim = dir.path().join("sim");
    let sim_out = s(&sim);
    let mut args = vec!["simulate", "--seed", "3", "--out", &sim_out];
    args.extend(base);
    assert_eq!(cli(&args), 0);
    let cases = sim.join("observations.csv");
    let set_cases = format!("data.cases={}", s(&cases));
    let filt = s(&dir.path().join("filter"));
    let mut args = vec!["filter", "--seed", "4", "--out", &filt, "--set", "filter.particles=1", "--set", &set_cases];
    args.extend(base);
    assert_eq!(cli(&args), 0);
    let got = json(Path::new(&filt), "summary.json")["result"]["loglik"].as_f64().unwrap();

    let ys: Vec<Option<f64>> = fs::read_to_string(&cases)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| Some(l.split(',').nth(2).unwrap().parse().unwrap()))
        .collect();
    let model = SirToy::single().skeleton();
    let grid = TimeGrid::new(0.0, (1..=30).map(f64::from).collect(), 0.1).unwrap();
    let data = ObservationSeries::new(model.unit_names().to_vec(), grid.obs_times().to_vec(), vec![ys]).unwrap();
    let covs = CovariateTable::default();
    let prob = Problem::new(&model, &data, &grid, &covs).unwrap();
    let want = trajectory_loglik(&prob, &model.default_params()).unwrap();
    assert!((got - want).abs() <= 1e-9 * want.abs(), "{got} vs {want}");
}

#[test]
fn profile_then_mcap_recovers_the_quadratic_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let sets = [
        "profile.lower=-0.7",
        "profile.upper=2.3",
        "profile.points=31",
        "profile.replicates=1",
        "profile.surface.theta0=0.8",
        "profile.surface.s=0.5",
    ];
    let mut args = vec!["profile", "--out", &out];
    for v in &sets {
        args.extend(["--set", v]);
    }
    assert_eq!(cli(&args), 0);
    assert_eq!(cli(&["mcap", "--out", &out]), 0);
    let r = &json(dir.path(), "summary.json")["result"];
    let (lo, hi) = (r["ci"][0].as_f64().unwrap(), r["ci"][1].as_f64().unwrap());
    let half = 1.959964 * 0.5;
    assert!(((lo - (0.8 - half)) / half).abs() < 0.02, "{lo}");
    assert!(((hi - (0.8 + half)) / half).abs() < 0.02, "{hi}");
    assert!((r["cutoff"].as_f64().unwrap() - 1.920729).abs() < 1e-5);
    assert!(dir.path().join("mcap.csv").exists());
}

#[test]
fn failures_map_to_exit_codes_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let run_in = |tag: &str, extra: &[&str]| {
        let out = s(&dir.path().join(tag));
        let mut args = vec!["filter", "--seed", "1", "--out", &out];
        args.extend(extra);
        (cli(&args), dir.path().join(tag))
    };

    let (code, path) = run_in("config", &["--set", "filter.bogus=1"]);
    assert_eq!(code, 2);
    let m = json(&path, "manifest.json");
    assert_eq!(m["status"], "failed");
    assert_eq!(m["error"]["category"], "config");

    let (code, _) = run_in("params", &["--set", "model=toy:sir", "--set", "data.cases=/nonexistent.csv"]);
    assert_eq!(code, 5, "missing data file");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "time,unit,value\n1,0,-3\n").unwrap();
    let (code, path) = run_in("data", &["--set", "model=toy:sir", "--set", "data.weeks=1", "--set", &format!("data.cases={}", s(&bad))]);
    assert_eq!(code, 3);
    assert_eq!(json(&path, "manifest.json")["error"]["category"], "data");

    let (code, _) = run_in("param", &["--set", "model=toy:sir", "--set", "gamma=-1"]);
    assert_eq!(code, 2);

    assert_ne!(cli(&["no-such-command"]), 0);
}
