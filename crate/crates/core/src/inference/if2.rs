//! Iterated filtering (IF2) and the iterated block particle filter.

use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::pomp::{bind_params, ParameterSet, Scope};
use crate::rng::derive_seed;

use super::engine::{self, Params, Perturbation};
use super::filter::{block_filter, check_blocks, Blocks, FilterSettings};
use super::Problem;

/// Iterations over which the random-walk sd shrinks by `cooling_fraction`.
const COOLING_SPAN: f64 = 50.0;

const SEED_PASS: u64 = 1;
const SEED_EVAL: u64 = 2;

#[derive(Clone, Debug)]
pub struct If2Settings {
    pub particles: usize,
    pub iterations: usize,
    /// Random-walk sd on the estimation scale; unlisted parameters are fixed.
    pub rw_sd: Vec<(String, f64)>,
    /// Random-walk sd multiplier after 50 iterations.
    pub cooling_fraction: f64,
    /// Particles used for the per-iteration log likelihood evaluation.
    pub eval_particles: usize,
    pub par: Parallelism,
}

impl If2Settings {
    pub fn new(particles: usize, iterations: usize, cooling_fraction: f64) -> Self {
        Self {
            particles,
            iterations,
            rw_sd: Vec::new(),
            cooling_fraction,
            eval_particles: particles,
            par: Parallelism::default(),
        }
    }

    pub fn with_rw_sd(mut self, name: &str, sd: f64) -> Self {
        self.rw_sd.push((name.to_string(), sd));
        self
    }

    pub fn with_eval_particles(mut self, j: usize) -> Self {
        self.eval_particles = j;
        self
    }

    pub fn with_parallelism(mut self, par: Parallelism) -> Self {
        self.par = par;
        self
    }

    /// Random-walk multiplier before step `n` of iteration `m` (both from 0).
    pub fn cooling(&self, m: usize, n: usize, n_obs: usize) -> f64 {
        let n_obs = n_obs.max(1) as f64;
        self.cooling_fraction.powf((m as f64 * n_obs + n as f64) / (COOLING_SPAN * n_obs))
    }

    fn check(&self) -> Result<()> {
        if self.particles == 0 || self.eval_particles == 0 {
            return Err(Error::input("the number of particles must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::input("the number of iterations must be positive"));
        }
        if !(self.cooling_fraction > 0.0 && self.cooling_fraction <= 1.0) {
            return Err(Error::input(format!(
                "cooling fraction {} outside (0, 1]",
                self.cooling_fraction
            )));
        }
        for (name, sd) in &self.rw_sd {
            if !(sd.is_finite() && *sd >= 0.0) {
                return Err(Error::param(name, format!("random-walk sd {sd} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IbpfSettings {
    pub if2: If2Settings,
    pub blocks: Blocks,
}

#[derive(Clone, Debug)]
pub struct TraceEntry {
    /// 0 for the starting point.
    pub iteration: usize,
    /// Filter log likelihood at the iteration's center, with a fresh seed.
    pub loglik: f64,
    /// Log likelihood of the perturbed pass (NaN for the starting point).
    pub filter_loglik: f64,
    pub params: ParameterSet,
}

#[derive(Clone, Debug)]
pub struct If2Result {
    pub estimate: ParameterSet,
    pub loglik: f64,
    pub trace: Vec<TraceEntry>,
    /// Final parameter particles.
    pub swarm: Vec<ParameterSet>,
    /// Iteration at which the center's log likelihood stopped being finite.
    pub halted: Option<usize>,
}

/// IF2: repeated filtering with geometrically cooled parameter random walks
/// on the estimation scale.
pub fn if2(prob: &Problem, start: &ParameterSet, settings: &If2Settings, seed: u64) -> Result<If2Result> {
    iterate(prob, start, &Blocks::single(prob.model.unit_count()), settings, seed)
}

/// Iterated block particle filter. Unit-scoped parameters are learned from
/// their own block; shared parameters are averaged over blocks on the
/// estimation scale after each iteration.
pub fn ibpf(prob: &Problem, start: &ParameterSet, settings: &IbpfSettings, seed: u64) -> Result<If2Result> {
    check_blocks(prob, &settings.blocks)?;
    iterate(prob, start, &settings.blocks, &settings.if2, seed)
}

fn iterate(prob: &Problem, start: &ParameterSet, blocks: &Blocks, s: &If2Settings, seed: u64) -> Result<If2Result> {
    s.check()?;
    let model = prob.model;
    let defs = model.param_defs();
    let values = bind_params(model, start)?;
    let transforms = start.transforms(defs)?;
    let mut sd = vec![0.0; defs.len()];
    for (name, v) in &s.rw_sd {
        let k = defs
            .iter()
            .position(|d| &d.name == name)
            .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
        sd[k] = *v;
    }
    let spec = Perturbation {
        sd,
        transforms,
        lower: defs.iter().map(|d| d.lower).collect(),
        upper: defs.iter().map(|d| d.upper).collect(),
        start: values.clone(),
    };
    let p = defs.len();
    let nb = blocks.len();
    let bp = nb * p;
    let j = s.particles;
    let row: Vec<f64> = (0..p)
        .map(|k| if spec.sd[k] > 0.0 { spec.transforms[k].to_estimation(values[k]) } else { 0.0 })
        .collect();
    let mut swarm: Vec<f64> = row.iter().copied().cycle().take(j * bp).collect();

    let eval_settings = FilterSettings::new(s.eval_particles).with_sample(0).with_parallelism(s.par);
    let evaluate = |params: &ParameterSet, m: usize| -> Result<f64> {
        Ok(block_filter(prob, params, blocks, &eval_settings, derive_seed(seed, SEED_EVAL, m as u64))?.loglik)
    };
    let mut estimate = start.clone();
    let mut loglik = evaluate(&estimate, 0)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        loglik,
        filter_loglik: f64::NAN,
        params: estimate.clone(),
    }];
    let mut halted = None;
    let n_obs = prob.grid.len();
    for m in 0..s.iterations {
        let scale: Vec<f64> = (0..=n_obs).map(|n| s.cooling(m, n, n_obs)).collect();
        let pass = engine::run(
            prob,
            blocks,
            j,
            Params::Perturbed {
                spec: &spec,
                est: &swarm,
                scale: &scale,
            },
            derive_seed(seed, SEED_PASS, m as u64),
            s.par,
        )?;
        for (i, dst) in swarm.chunks_mut(bp).enumerate() {
            let off = i * pass.width + pass.est_offset;
            dst.copy_from_slice(&pass.particles[off..off + bp]);
        }
        if nb > 1 {
            reconcile(&mut swarm, &spec, defs, blocks);
        }
        let center = center_of(&swarm, &spec, bp, start, defs)?;
        let ll = evaluate(&center, m + 1)?;
        trace.push(TraceEntry {
            iteration: m + 1,
            loglik: ll,
            filter_loglik: pass.loglik,
            params: center.clone(),
        });
        if !ll.is_finite() {
            halted = Some(m + 1);
            log::warn!("iterated filtering halted at iteration {}: non-finite log likelihood", m + 1);
            break;
        }
        estimate = center;
        loglik = ll;
    }
    let swarm = swarm
        .chunks(bp)
        .map(|r| to_params(&r[..p], &spec, start, defs))
        .collect::<Result<Vec<_>>>()?;
    Ok(If2Result {
        estimate,
        loglik,
        trace,
        swarm,
        halted,
    })
}

/// Give every block row of a particle the same parameter vector.
fn reconcile(swarm: &mut [f64], spec: &Perturbation, defs: &[crate::pomp::ParamDef], blocks: &Blocks) {
    let p = spec.width();
    let nb = blocks.len();
    for particle in swarm.chunks_mut(nb * p) {
        for k in 0..p {
            if spec.sd[k] == 0.0 {
                continue;
            }
            let v = match defs[k].scope {
                Scope::Unit(u) if u < blocks.of_unit().len() => particle[blocks.of_unit()[u] * p + k],
                _ => (0..nb).map(|b| particle[b * p + k]).sum::<f64>() / nb as f64,
            };
            for b in 0..nb {
                particle[b * p + k] = v;
            }
        }
    }
}

/// Swarm mean on the estimation scale, mapped back to natural values.
fn center_of(
    swarm: &[f64],
    spec: &Perturbation,
    bp: usize,
    start: &ParameterSet,
    defs: &[crate::pomp::ParamDef],
) -> Result<ParameterSet> {
    let p = spec.width();
    let mut row = vec![0.0; p];
    for (k, r) in row.iter_mut().enumerate() {
        if spec.sd[k] == 0.0 {
            continue;
        }
        let first = swarm[k];
        let mut sum = 0.0;
        let mut same = true;
        for particle in swarm.chunks(bp) {
            sum += particle[k];
            same &= particle[k] == first;
        }
        *r = if same { first } else { sum / (swarm.len() / bp) as f64 };
    }
    to_params(&row, spec, start, defs)
}

fn to_params(est: &[f64], spec: &Perturbation, start: &ParameterSet, defs: &[crate::pomp::ParamDef]) -> Result<ParameterSet> {
    let mut out = start.clone();
    for (k, d) in defs.iter().enumerate() {
        if spec.sd[k] > 0.0 {
            out.set(&d.name, spec.natural(k, est[k]))?;
        }
    }
    Ok(out)
}
