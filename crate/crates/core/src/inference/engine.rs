//! Block particle filter shared by every filtering algorithm.
//!
//! Each particle is one row: the latent state, followed (when parameters are
//! perturbed) by one natural-scale and one estimation-scale parameter row per
//! block. Resampling runs independently per block and moves the block's units
//! together with the block's parameter row.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::exec::{try_map_rows, Parallelism};
use crate::pomp::{advance, ParamView, Transform};
use crate::rng::{stream, Domain, StreamRng};

use super::filter::Blocks;
use super::resample::{effective_sample_size, systematic_resample};
use super::Problem;

/// Random-walk specification on the estimation scale.
#[derive(Clone, Debug)]
pub(crate) struct Perturbation {
    pub sd: Vec<f64>,
    pub transforms: Vec<Transform>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Natural-scale values used verbatim for parameters with `sd == 0`.
    pub start: Vec<f64>,
}

impl Perturbation {
    pub fn width(&self) -> usize {
        self.sd.len()
    }

    pub fn natural(&self, k: usize, e: f64) -> f64 {
        if self.sd[k] > 0.0 {
            self.transforms[k].to_natural(e).clamp(self.lower[k], self.upper[k])
        } else {
            self.start[k]
        }
    }

    /// Move every block row of `est` by `scale * sd * N(0, 1)` and refresh `nat`.
    fn apply(&self, est: &mut [f64], nat: &mut [f64], scale: f64, rng: &mut StreamRng) {
        let p = self.width();
        for (e, n) in est.chunks_mut(p).zip(nat.chunks_mut(p)) {
            for k in 0..p {
                if self.sd[k] > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    e[k] += scale * self.sd[k] * z;
                }
                n[k] = self.natural(k, e[k]);
            }
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Params<'a> {
    /// Natural-scale values shared by every particle.
    Fixed(&'a [f64]),
    /// Per-particle parameters: `est` holds `J × B × P` starting rows and
    /// `scale[n]` the random-walk multiplier before step `n` (index 0 is
    /// applied before initialization).
    Perturbed {
        spec: &'a Perturbation,
        est: &'a [f64],
        scale: &'a [f64],
    },
}

pub(crate) struct Pass {
    pub loglik: f64,
    /// Time-major `N × B`.
    pub cond: Vec<f64>,
    pub ess: Vec<f64>,
    pub failure: Option<usize>,
    /// Final equally weighted particles, `J × width`.
    pub particles: Vec<f64>,
    pub width: usize,
    pub dim: usize,
    /// Offset of the estimation-scale rows within a particle.
    pub est_offset: usize,
}

pub(crate) fn run(
    prob: &Problem,
    blocks: &Blocks,
    j: usize,
    params: Params,
    seed: u64,
    par: Parallelism,
) -> Result<Pass> {
    let model = prob.model;
    let dim = model.state_dim();
    let uw = model.unit_width();
    let nb = blocks.len();
    let bp = match params {
        Params::Fixed(_) => 0,
        Params::Perturbed { spec, .. } => nb * spec.width(),
    };
    let pw = match params {
        Params::Fixed(v) => v.len(),
        Params::Perturbed { spec, .. } => spec.width(),
    };
    let width = dim + 2 * bp;
    let of_unit = blocks.of_unit();

    let mut buf = vec![0.0; j * width];
    try_map_rows(&mut buf, width, par, |i, row| {
        let (x, rest) = row.split_at_mut(dim);
        let (nat, est) = rest.split_at_mut(bp);
        if let Params::Perturbed { spec, est: est0, scale } = params {
            est.copy_from_slice(&est0[i * bp..(i + 1) * bp]);
            spec.apply(est, nat, scale[0], &mut stream(seed, Domain::Perturb, i as u64, 0));
        }
        model.rinit(x, view(params, nat, pw, of_unit), &mut stream(seed, Domain::Init, i as u64, 0))
    })?;

    let n_obs = prob.grid.len();
    let mut next = vec![0.0; j * width];
    let mut cond = Vec::with_capacity(n_obs * nb);
    let mut ess = Vec::with_capacity(n_obs * nb);
    let mut failure = None;
    let mut weights = vec![0.0; j];
    let mut ancestors = vec![vec![0usize; j]; nb];
    for n in 0..n_obs {
        let (t_a, t_b) = prob.grid.interval(n);
        let logw: Vec<Vec<f64>> = try_map_rows(&mut buf, width, par, |i, row| {
            let (x, rest) = row.split_at_mut(dim);
            let (nat, est) = rest.split_at_mut(bp);
            if let Params::Perturbed { spec, scale, .. } = params {
                let mut rng = stream(seed, Domain::Perturb, i as u64, n as u64 + 1);
                spec.apply(est, nat, scale[n + 1], &mut rng);
            }
            let v = view(params, nat, pw, of_unit);
            let mut rng = stream(seed, Domain::Process, i as u64, n as u64);
            advance(model, x, t_a, t_b, prob.grid.euler_step(), v, prob.covs, &mut rng)?;
            Ok(blocks
                .members()
                .iter()
                .map(|units| {
                    let s: f64 = units
                        .iter()
                        .filter_map(|&u| prob.data.get(u, n).map(|y| model.dmeasure(y, x, u, t_b, v)))
                        .sum();
                    if s.is_nan() {
                        f64::NEG_INFINITY
                    } else {
                        s
                    }
                })
                .collect())
        })?;
        for (b, anc) in ancestors.iter_mut().enumerate() {
            let max = logw.iter().map(|r| r[b]).fold(f64::NEG_INFINITY, f64::max);
            if max.is_finite() {
                for (w, r) in weights.iter_mut().zip(&logw) {
                    *w = (r[b] - max).exp();
                }
                let total: f64 = weights.iter().sum();
                cond.push(max + (total / j as f64).ln());
                ess.push(effective_sample_size(&weights));
                let u: f64 = stream(seed, Domain::Resample, b as u64, n as u64).random();
                systematic_resample(&weights, u, anc);
            } else {
                failure.get_or_insert(n);
                cond.push(f64::NEG_INFINITY);
                ess.push(0.0);
                for (i, a) in anc.iter_mut().enumerate() {
                    *a = i;
                }
            }
        }
        let src = &buf;
        try_map_rows(&mut next, width, par, |i, row| {
            if nb == 1 {
                let a = ancestors[0][i];
                row.copy_from_slice(&src[a * width..(a + 1) * width]);
                return Ok(());
            }
            for (b, units) in blocks.members().iter().enumerate() {
                let a = ancestors[b][i];
                let from = &src[a * width..(a + 1) * width];
                for &u in units {
                    row[u * uw..(u + 1) * uw].copy_from_slice(&from[u * uw..(u + 1) * uw]);
                }
                for off in [dim, dim + bp] {
                    let r = off + b * pw..off + (b + 1) * pw;
                    if bp > 0 {
                        row[r.clone()].copy_from_slice(&from[r]);
                    }
                }
            }
            Ok(())
        })?;
        std::mem::swap(&mut buf, &mut next);
    }
    let loglik = cond.iter().sum();
    Ok(Pass {
        loglik,
        cond,
        ess,
        failure,
        particles: buf,
        width,
        dim,
        est_offset: dim + bp,
    })
}

fn view<'a>(params: Params<'a>, nat: &'a [f64], width: usize, of_unit: &'a [usize]) -> ParamView<'a> {
    match params {
        Params::Fixed(v) => ParamView::uniform(v),
        Params::Perturbed { .. } => ParamView::blocked(nat, width, of_unit),
    }
}
