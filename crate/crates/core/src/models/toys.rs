//! Small reference models: SIR (single or coupled units, stochastic or
//! deterministic), a two-state hidden Markov chain, a scalar linear-Gaussian
//! model and a pure-death process. Time is in whatever unit the grid uses.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::euler::{binomial, draw_exits, gamma_noise, rk4_step, Rk4Work};
use crate::pomp::{euler_substeps, CovariateTable, ParamDef, ParamView, ParameterSet, PompModel};
use crate::rng::StreamRng;

use super::measure::{nb_logpmf, nb_sample, normal_logpdf, poisson_logpmf};

/// SIRS with per-unit transmission, optional coupling between units,
/// multiplicative gamma noise and negative binomial reporting.
///
/// Per unit: S, I, R, then the new-infection accumulator `cases`.
#[derive(Clone, Debug)]
pub struct SirToy {
    units: Vec<String>,
    defs: Vec<ParamDef>,
    states: Vec<String>,
    deterministic: bool,
}

const S: usize = 0;
const I: usize = 1;
const R: usize = 2;
const CASES: usize = 3;

impl SirToy {
    /// One unit; the transmission rate is named `beta`.
    pub fn single() -> Self {
        Self::build(vec!["unit".into()], false)
    }

    /// `n` units with rates `beta_1..beta_n` and coupling `c`.
    pub fn coupled(n: usize) -> Self {
        Self::build((1..=n).map(|u| format!("unit{u}")).collect(), false)
    }

    /// Deterministic RK4 skeleton of the same rates.
    pub fn skeleton(mut self) -> Self {
        self.deterministic = true;
        self
    }

    fn build(units: Vec<String>, deterministic: bool) -> Self {
        let n = units.len();
        let mut defs: Vec<ParamDef> = if n == 1 {
            vec![ParamDef::nonneg("beta")]
        } else {
            (0..n).map(|u| ParamDef::nonneg(format!("beta_{}", u + 1)).for_unit(u)).collect()
        };
        defs.extend([
            ParamDef::positive("gamma"),
            ParamDef::nonneg("omega"),
            ParamDef::nonneg("c"),
            ParamDef::nonneg("sigma"),
            ParamDef::fraction("rho"),
            ParamDef::positive("psi"),
            ParamDef::positive("pop"),
            ParamDef::fraction("i0"),
        ]);
        let states = ["S", "I", "R", "cases"].map(String::from).to_vec();
        Self { units, defs, states, deterministic }
    }

    /// Index of the first shared parameter.
    fn shared_base(&self) -> usize {
        self.units.len()
    }

    /// Per-unit force of infection, before noise.
    fn lambda(&self, x: &[f64], p: ParamView, out: &mut [f64]) {
        let k = self.shared_base();
        let coupling = p.shared(k + 2);
        let pop = p.shared(k + 6);
        let total: f64 = (0..self.units.len()).map(|u| x[u * 4 + I]).sum();
        for (u, o) in out.iter_mut().enumerate() {
            let own = x[u * 4 + I];
            *o = p.get(u, u) * (own + coupling * (total - own)) / pop;
        }
    }
}

impl PompModel for SirToy {
    fn name(&self) -> &str {
        if self.deterministic {
            "toy:sir-skeleton"
        } else {
            "toy:sir"
        }
    }

    fn unit_names(&self) -> &[String] {
        &self.units
    }

    fn param_defs(&self) -> &[ParamDef] {
        &self.defs
    }

    fn state_names(&self) -> &[String] {
        &self.states
    }

    fn accumulators(&self) -> &[usize] {
        &[CASES]
    }

    fn person_slots(&self) -> &[usize] {
        &[S, I, R]
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn default_params(&self) -> ParameterSet {
        let n = self.units.len();
        let mut v = vec![2.0; n];
        v.extend([1.0, 0.0, 0.0, 0.0, 0.5, 10.0, 10_000.0, 0.001]);
        ParameterSet::from_defs(&self.defs, &v)
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, _rng: &mut StreamRng) -> Result<()> {
        let k = self.shared_base();
        let pop = p.shared(k + 6);
        let i0 = (pop * p.shared(k + 7)).round();
        for u in 0..self.units.len() {
            x[u * 4..u * 4 + 4].copy_from_slice(&[pop.round() - i0, i0, 0.0, 0.0]);
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    fn rprocess(
        &self,
        x: &mut [f64],
        t_start: f64,
        t_end: f64,
        max_step: f64,
        p: ParamView,
        _covs: &CovariateTable,
        rng: &mut StreamRng,
    ) -> Result<f64> {
        let n = self.units.len();
        let k = self.shared_base();
        let (steps, h) = euler_substeps(t_start, t_end, max_step);
        let mut lam = vec![0.0; n];
        if self.deterministic {
            let mut work = Rk4Work::new(x.len());
            let clamp: Vec<usize> = (0..n).flat_map(|u| [u * 4 + S, u * 4 + I, u * 4 + R]).collect();
            let names = |i: usize| format!("{}:{}", self.units[i / 4], self.states[i % 4]);
            let mut clamped = 0.0;
            for s in 0..steps {
                let t = t_start + s as f64 * h;
                clamped += rk4_step(x, t, h, &mut work, &clamp, &names, |_, y, dy| {
                    self.lambda(y, p, &mut lam);
                    for u in 0..n {
                        let b = u * 4;
                        let (gamma, omega) = (p.get(k, u), p.get(k + 1, u));
                        let inf = lam[u] * y[b + S];
                        dy[b + S] = -inf + omega * y[b + R];
                        dy[b + I] = inf - gamma * y[b + I];
                        dy[b + R] = gamma * y[b + I] - omega * y[b + R];
                        dy[b + CASES] = inf;
                    }
                })?;
            }
            return Ok(clamped);
        }
        let mut out = [0.0; 1];
        for _ in 0..steps {
            self.lambda(x, p, &mut lam);
            for u in 0..n {
                let b = u * 4;
                let (gamma, omega, sigma) = (p.get(k, u), p.get(k + 1, u), p.get(k + 3, u));
                let noise = gamma_noise(h, sigma * sigma, rng) / h;
                draw_exits(x[b + S], &[lam[u] * noise], h, rng, &mut out);
                let inf = out[0];
                draw_exits(x[b + I], &[gamma], h, rng, &mut out);
                let rec = out[0];
                draw_exits(x[b + R], &[omega], h, rng, &mut out);
                let wane = out[0];
                x[b + S] += wane - inf;
                x[b + I] += inf - rec;
                x[b + R] += rec - wane;
                x[b + CASES] += inf;
            }
        }
        Ok(0.0)
    }

    fn dmeasure(&self, y: f64, x: &[f64], unit: usize, t: f64, p: ParamView) -> f64 {
        let k = self.shared_base();
        nb_logpmf(y, self.measure_mean(x, unit, t, p), p.get(k + 5, unit))
    }

    fn rmeasure(&self, x: &[f64], unit: usize, t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        let k = self.shared_base();
        nb_sample(self.measure_mean(x, unit, t, p), p.get(k + 5, unit), rng)
    }

    fn measure_mean(&self, x: &[f64], unit: usize, _t: f64, p: ParamView) -> f64 {
        let k = self.shared_base();
        p.get(k + 4, unit) * x[unit * 4 + CASES]
    }

    fn unit_infections(&self, x: &[f64], unit: usize) -> f64 {
        x[unit * 4 + CASES]
    }
}

/// Two-state Markov chain with one transition per observation interval and
/// Poisson emissions.
#[derive(Clone, Debug)]
pub struct HmmToy {
    units: Vec<String>,
    defs: Vec<ParamDef>,
    states: Vec<String>,
}

impl Default for HmmToy {
    fn default() -> Self {
        Self::new()
    }
}

impl HmmToy {
    pub fn new() -> Self {
        Self {
            units: vec!["unit".into()],
            defs: vec![
                ParamDef::fraction("p01"),
                ParamDef::fraction("p10"),
                ParamDef::positive("lambda0"),
                ParamDef::positive("lambda1"),
                ParamDef::fraction("pi1"),
            ],
            states: vec!["x".into()],
        }
    }

    /// Exact log likelihood by the forward algorithm.
    pub fn exact_loglik(values: &[f64], ys: &[f64]) -> f64 {
        let (p01, p10, l0, l1, pi1) = (values[0], values[1], values[2], values[3], values[4]);
        let mut alpha = [1.0 - pi1, pi1];
        let mut ll = 0.0;
        for &y in ys {
            let pred = [alpha[0] * (1.0 - p01) + alpha[1] * p10, alpha[0] * p01 + alpha[1] * (1.0 - p10)];
            let w = [pred[0] * poisson_logpmf(y, l0).exp(), pred[1] * poisson_logpmf(y, l1).exp()];
            let z = w[0] + w[1];
            ll += z.ln();
            alpha = [w[0] / z, w[1] / z];
        }
        ll
    }
}

impl PompModel for HmmToy {
    fn name(&self) -> &str {
        "toy:hmm"
    }

    fn unit_names(&self) -> &[String] {
        &self.units
    }

    fn param_defs(&self) -> &[ParamDef] {
        &self.defs
    }

    fn state_names(&self) -> &[String] {
        &self.states
    }

    fn accumulators(&self) -> &[usize] {
        &[]
    }

    fn default_params(&self) -> ParameterSet {
        ParameterSet::from_defs(&self.defs, &[0.1, 0.2, 1.0, 6.0, 0.5])
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, rng: &mut StreamRng) -> Result<()> {
        x[0] = f64::from(u8::from(rng.random::<f64>() < p.shared(4)));
        Ok(())
    }

    fn rprocess(
        &self,
        x: &mut [f64],
        _t_start: f64,
        _t_end: f64,
        _max_step: f64,
        p: ParamView,
        _covs: &CovariateTable,
        rng: &mut StreamRng,
    ) -> Result<f64> {
        let flip = if x[0] == 0.0 { p.shared(0) } else { p.shared(1) };
        if rng.random::<f64>() < flip {
            x[0] = 1.0 - x[0];
        }
        Ok(0.0)
    }

    fn dmeasure(&self, y: f64, x: &[f64], unit: usize, t: f64, p: ParamView) -> f64 {
        poisson_logpmf(y, self.measure_mean(x, unit, t, p))
    }

    fn rmeasure(&self, x: &[f64], unit: usize, t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        crate::euler::poisson(self.measure_mean(x, unit, t, p), rng)
    }

    fn measure_mean(&self, x: &[f64], _unit: usize, _t: f64, p: ParamView) -> f64 {
        if x[0] == 0.0 {
            p.shared(2)
        } else {
            p.shared(3)
        }
    }

    fn unit_infections(&self, x: &[f64], _unit: usize) -> f64 {
        x[0]
    }
}

/// `x_n = a x_{n-1} + N(0, q)`, `y_n = x_n + N(0, r)`, `x_0 ~ N(m0, v0)`.
#[derive(Clone, Debug)]
pub struct LinearGaussianToy {
    units: Vec<String>,
    defs: Vec<ParamDef>,
    states: Vec<String>,
}

impl Default for LinearGaussianToy {
    fn default() -> Self {
        Self::new()
    }
}

impl LinearGaussianToy {
    pub fn new() -> Self {
        Self {
            units: vec!["unit".into()],
            defs: vec![
                ParamDef::real("a"),
                ParamDef::positive("q"),
                ParamDef::positive("r"),
                ParamDef::real("m0"),
                ParamDef::positive("v0"),
            ],
            states: vec!["x".into()],
        }
    }

    /// Exact log likelihood by the Kalman filter.
    pub fn exact_loglik(values: &[f64], ys: &[f64]) -> f64 {
        let (a, q, r) = (values[0], values[1], values[2]);
        let (mut m, mut v) = (values[3], values[4]);
        let mut ll = 0.0;
        for &y in ys {
            let (mp, vp) = (a * m, a * a * v + q);
            let s = vp + r;
            ll += normal_logpdf(y, mp, s);
            let k = vp / s;
            m = mp + k * (y - mp);
            v = (1.0 - k) * vp;
        }
        ll
    }
}

impl PompModel for LinearGaussianToy {
    fn name(&self) -> &str {
        "toy:linear-gaussian"
    }

    fn unit_names(&self) -> &[String] {
        &self.units
    }

    fn param_defs(&self) -> &[ParamDef] {
        &self.defs
    }

    fn state_names(&self) -> &[String] {
        &self.states
    }

    fn accumulators(&self) -> &[usize] {
        &[]
    }

    fn count_data(&self) -> bool {
        false
    }

    fn default_params(&self) -> ParameterSet {
        ParameterSet::from_defs(&self.defs, &[0.8, 1.0, 0.5, 0.0, 1.0])
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, rng: &mut StreamRng) -> Result<()> {
        x[0] = p.shared(3) + p.shared(4).sqrt() * Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
        Ok(())
    }

    fn rprocess(
        &self,
        x: &mut [f64],
        _t_start: f64,
        _t_end: f64,
        _max_step: f64,
        p: ParamView,
        _covs: &CovariateTable,
        rng: &mut StreamRng,
    ) -> Result<f64> {
        let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
        x[0] = p.shared(0) * x[0] + p.shared(1).sqrt() * z;
        Ok(0.0)
    }

    fn dmeasure(&self, y: f64, x: &[f64], _unit: usize, _t: f64, p: ParamView) -> f64 {
        normal_logpdf(y, x[0], p.shared(2))
    }

    fn rmeasure(&self, x: &[f64], _unit: usize, _t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
        x[0] + p.shared(2).sqrt() * z
    }

    fn measure_mean(&self, x: &[f64], _unit: usize, _t: f64, _p: ParamView) -> f64 {
        x[0]
    }

    fn unit_infections(&self, x: &[f64], _unit: usize) -> f64 {
        x[0]
    }
}

/// Pure death: each infected recovers independently with probability `p`
/// per observation interval. The infection signal is current prevalence.
#[derive(Clone, Debug)]
pub struct DeathToy {
    units: Vec<String>,
    defs: Vec<ParamDef>,
    states: Vec<String>,
}

impl Default for DeathToy {
    fn default() -> Self {
        Self::new()
    }
}

impl DeathToy {
    pub fn new() -> Self {
        Self {
            units: vec!["unit".into()],
            defs: vec![ParamDef::fraction("p"), ParamDef::fraction("rho"), ParamDef::nonneg("i0")],
            states: vec!["I".into()],
        }
    }

    /// Probability that all `i0` infecteds have recovered within `k` intervals.
    pub fn extinction_probability(p: f64, i0: f64, k: u32) -> f64 {
        (1.0 - (1.0 - p).powi(k as i32)).powf(i0)
    }
}

impl PompModel for DeathToy {
    fn name(&self) -> &str {
        "toy:death"
    }

    fn unit_names(&self) -> &[String] {
        &self.units
    }

    fn param_defs(&self) -> &[ParamDef] {
        &self.defs
    }

    fn state_names(&self) -> &[String] {
        &self.states
    }

    fn accumulators(&self) -> &[usize] {
        &[]
    }

    fn person_slots(&self) -> &[usize] {
        &[0]
    }

    fn default_params(&self) -> ParameterSet {
        ParameterSet::from_defs(&self.defs, &[0.5, 0.5, 10.0])
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, _rng: &mut StreamRng) -> Result<()> {
        x[0] = p.shared(2).round();
        Ok(())
    }

    fn rprocess(
        &self,
        x: &mut [f64],
        _t_start: f64,
        _t_end: f64,
        _max_step: f64,
        p: ParamView,
        _covs: &CovariateTable,
        rng: &mut StreamRng,
    ) -> Result<f64> {
        x[0] -= binomial(x[0], p.shared(0), rng);
        Ok(0.0)
    }

    fn dmeasure(&self, y: f64, x: &[f64], unit: usize, t: f64, p: ParamView) -> f64 {
        poisson_logpmf(y, self.measure_mean(x, unit, t, p))
    }

    fn rmeasure(&self, x: &[f64], unit: usize, t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        crate::euler::poisson(self.measure_mean(x, unit, t, p), rng)
    }

    fn measure_mean(&self, x: &[f64], _unit: usize, _t: f64, p: ParamView) -> f64 {
        p.shared(1) * x[0]
    }

    fn unit_infections(&self, x: &[f64], _unit: usize) -> f64 {
        x[0]
    }
}
