//! Run configuration: defaults, then the config file, then command-line
//! overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `model1`, `model2`, `model3`, `benchmark` or `toy:<name>`.
    pub model: String,
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    pub workers: usize,
    pub out: PathBuf,
    pub data: DataConfig,
    /// Natural-scale parameter overrides.
    pub params: BTreeMap<String, f64>,
    pub simulate: SimulateConfig,
    pub filter: FilterConfig,
    pub if2: If2Config,
    pub ibpf: IbpfConfig,
    pub traj: TrajConfig,
    pub benchmark: BenchmarkConfig,
    pub profile: ProfileConfig,
    pub mcap: McapConfig,
    pub forecast: ForecastConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "toy:sir".into(),
            seed: None,
            workers: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            params: BTreeMap::new(),
            simulate: SimulateConfig::default(),
            filter: FilterConfig::default(),
            if2: If2Config::default(),
            ibpf: IbpfConfig::default(),
            traj: TrajConfig::default(),
            benchmark: BenchmarkConfig::default(),
            profile: ProfileConfig::default(),
            mcap: McapConfig::default(),
            forecast: ForecastConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub cases: Option<PathBuf>,
    pub rainfall: Option<PathBuf>,
    pub geography: Option<PathBuf>,
    pub distance: Option<PathBuf>,
    pub river: Option<PathBuf>,
    pub efficacy: Option<PathBuf>,
    pub scenarios: Option<PathBuf>,
    /// Parameter table (`name,value,transform,scope`).
    pub params: Option<PathBuf>,
    /// First day of simulation when no case file is given (ISO date).
    pub start: String,
    /// Observation weeks to simulate when no case file is given.
    pub weeks: usize,
    /// Integration step in days (dated models) or model time units (toys).
    pub euler_step: Option<f64>,
    /// Weekly reported cases per unit before the start, used to initialize
    /// metapopulation models when no case file is given.
    pub init_cases: f64,
    /// Units of the coupled toy model.
    pub units: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            cases: None,
            rainfall: None,
            geography: None,
            distance: None,
            river: None,
            efficacy: None,
            scenarios: None,
            params: None,
            start: "2010-10-23".into(),
            weeks: 52,
            euler_step: None,
            init_cases: 50.0,
            units: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_sims: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { n_sims: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub particles: usize,
    /// `single` (one block) or `unit` (one block per unit).
    pub blocks: String,
    pub replicates: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            blocks: "single".into(),
            replicates: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct If2Config {
    pub particles: usize,
    pub iterations: usize,
    pub cooling: f64,
    /// Random-walk sd on the estimation scale; unlisted parameters stay fixed.
    pub rw_sd: BTreeMap<String, f64>,
    /// Particles for the per-iteration likelihood evaluation (0 skips it).
    pub eval_particles: usize,
}

impl Default for If2Config {
    fn default() -> Self {
        Self {
            particles: 1000,
            iterations: 50,
            cooling: 0.5,
            rw_sd: BTreeMap::new(),
            eval_particles: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IbpfConfig {
    pub particles: usize,
    pub iterations: usize,
    pub cooling: f64,
    pub rw_sd: BTreeMap<String, f64>,
    pub eval_particles: usize,
    /// `unit` or `single`.
    pub blocks: String,
}

impl Default for IbpfConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            iterations: 50,
            cooling: 0.5,
            rw_sd: BTreeMap::new(),
            eval_particles: 0,
            blocks: "unit".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajConfig {
    pub free: Vec<String>,
    pub max_evals: usize,
    pub restarts: usize,
}

impl Default for TrajConfig {
    fn default() -> Self {
        Self {
            free: Vec::new(),
            max_evals: 20_000,
            restarts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Fit each unit separately rather than national totals.
    pub per_unit: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { per_unit: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub parameter: String,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub replicates: usize,
    /// `surface`, `traj` or `if2`.
    pub method: String,
    /// Parameters maximized at each grid point (`traj` and `if2`).
    pub free: Vec<String>,
    pub surface: SurfaceConfig,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            parameter: "theta".into(),
            lower: -2.0,
            upper: 2.0,
            points: 21,
            replicates: 3,
            method: "surface".into(),
            free: Vec::new(),
            surface: SurfaceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub theta0: f64,
    pub s: f64,
    pub noise_sd: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            theta0: 0.0,
            s: 1.0,
            noise_sd: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McapConfig {
    /// Profile table; defaults to `profile.csv` in the output directory.
    pub input: Option<PathBuf>,
    pub level: f64,
    pub span: f64,
}

impl Default for McapConfig {
    fn default() -> Self {
        Self {
            input: None,
            level: 0.95,
            span: 0.75,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// Built-in `V0`..`V4` or an id from the scenario file.
    pub scenario: String,
    pub horizon_weeks: usize,
    pub n_sims: usize,
    /// Particles of the filter launching the forecast.
    pub particles: usize,
    pub window_weeks: usize,
    /// Scenario start (ISO date); defaults to one week after the last observation.
    pub start: Option<String>,
    /// Parameter table to forecast with, e.g. a fit's `params.csv`.
    pub params: Option<PathBuf>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            scenario: "V0".into(),
            horizon_weeks: 520,
            n_sims: 100,
            particles: 1000,
            window_weeks: 52,
            start: None,
            params: None,
        }
    }
}

/// Command-line values that override the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// `key=value` pairs; dotted keys address config tables, bare keys that
    /// are not top-level settings are parameter overrides.
    pub sets: Vec<String>,
}

const TOP_LEVEL: [&str; 4] = ["model", "seed", "workers", "out"];

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("nonempty key");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("`{p}` is not a table"),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Merge `overrides` into the raw config table.
pub fn apply_overrides(table: &mut toml::Table, o: &Overrides) -> Result<()> {
    for s in &o.sets {
        let (key, raw) = s.split_once('=').with_context(|| format!("--set `{s}` is not key=value"))?;
        let key = key.trim();
        if key.is_empty() {
            bail!("--set `{s}` has an empty key");
        }
        let path: Vec<&str> = if key.contains('.') || TOP_LEVEL.contains(&key) {
            key.split('.').collect()
        } else {
            vec!["params", key]
        };
        set_path(table, &path, parse_value(raw.trim()))?;
    }
    if let Some(seed) = o.seed {
        table.insert("seed".into(), toml::Value::Integer(i64::try_from(seed).context("seed too large")?));
    }
    if let Some(w) = o.workers {
        table.insert("workers".into(), toml::Value::Integer(w as i64));
    }
    if let Some(out) = &o.out {
        table.insert("out".into(), toml::Value::String(out.display().to_string()));
    }
    Ok(())
}

/// Resolve the configuration. Relative data paths are taken relative to the
/// config file.
pub fn load(path: Option<&Path>, o: &Overrides) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    apply_overrides(&mut table, o)?;
    let mut cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
    if let Some(base) = path.and_then(Path::parent) {
        cfg.rebase(base);
    }
    Ok(cfg)
}

impl RunConfig {
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        let d = &mut self.data;
        for p in [
            &mut d.cases,
            &mut d.rainfall,
            &mut d.geography,
            &mut d.distance,
            &mut d.river,
            &mut d.efficacy,
            &mut d.scenarios,
            &mut d.params,
            &mut self.mcap.input,
            &mut self.forecast.params,
        ] {
            fix(p);
        }
    }

    pub fn require_seed(&self, command: &str) -> Result<u64> {
        self.seed
            .with_context(|| format!("`{command}` is stochastic and needs a seed (--seed or `seed` in the config)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse_as_toml_or_strings() {
        assert_eq!(parse_value("3"), toml::Value::Integer(3));
        assert_eq!(parse_value("0.5"), toml::Value::Float(0.5));
        assert_eq!(parse_value("V2"), toml::Value::String("V2".into()));
        assert_eq!(parse_value("[\"a\"]"), toml::Value::Array(vec![toml::Value::String("a".into())]));
    }

    #[test]
    fn bare_keys_override_parameters() {
        let mut t = toml::Table::new();
        let o = Overrides {
            sets: vec!["beta=2.5".into(), "if2.iterations=7".into(), "model=toy:hmm".into()],
            ..Default::default()
        };
        apply_overrides(&mut t, &o).unwrap();
        let cfg: RunConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.params["beta"], 2.5);
        assert_eq!(cfg.if2.iterations, 7);
        assert_eq!(cfg.model, "toy:hmm");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut t = toml::Table::new();
        let o = Overrides {
            sets: vec!["if2.iteratons=7".into()],
            ..Default::default()
        };
        apply_overrides(&mut t, &o).unwrap();
        assert!(toml::Value::Table(t).try_into::<RunConfig>().is_err());
    }
}
