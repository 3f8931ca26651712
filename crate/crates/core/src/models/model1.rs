//! National stochastic SEIAR model with spline seasonality, a log-linear
//! trend and gamma noise on transmission.

use crate::error::{Error, Result};
use crate::euler::{draw_exits, gamma_noise, poisson};
use crate::pomp::{CovariateTable, ParamDef, ParamView, ParameterSet, PompModel};
use crate::rng::StreamRng;
use crate::units::{sigma_week_to_year, RateUnit};

use super::efficacy::{under_five_correction, EfficacyCurve};
use super::geography::HAITI_POPULATION;
use super::measure::{nb_logpmf, nb_sample};
use super::spline::{seasonal_beta, N_BASIS};
use super::unit_campaigns;

const BETA: usize = 0;
const ZETA: usize = 6;
const NU: usize = 7;
const SIGMA_EPI: usize = 8;
const SIGMA_END: usize = 9;
const RHO: usize = 10;
const PSI_EPI: usize = 11;
const PSI_END: usize = 12;
const I00: usize = 13;
const E00: usize = 14;
const MU_EI: usize = 15;
const MU_IR: usize = 16;
const MU_RS: usize = 17;
const MU_S: usize = 18;
const DELTA: usize = 19;
const EPS: usize = 20;

const CASES: usize = 0;
const INFECTIONS: usize = 1;
const FIRST: usize = 2;
const S: usize = 0;
const E: usize = 1;
const I: usize = 2;
const A: usize = 3;
const R: usize = 4;

/// Convert initial counts into the initial-value fractions.
pub fn initial_fractions(infected: f64, exposed: f64, population: f64) -> (f64, f64) {
    (infected / population, exposed / population)
}

#[derive(Clone, Debug)]
pub struct Model1 {
    units: Vec<String>,
    defs: Vec<ParamDef>,
    states: Vec<String>,
    persons: Vec<usize>,
    campaigns: usize,
    efficacy: EfficacyCurve,
    correction: f64,
    population: f64,
    /// Trend rescaling span.
    t0: f64,
    tn: f64,
    /// Epidemic/endemic switch for process noise and overdispersion.
    phase_break: f64,
}

impl Model1 {
    /// `campaigns` is the number of vaccination pulses the model can hold.
    pub fn new(t0: f64, tn: f64, phase_break: f64, campaigns: usize) -> Self {
        let mut defs: Vec<ParamDef> = (1..=N_BASIS).map(|j| ParamDef::real(format!("beta{j}"))).collect();
        defs.extend([
            ParamDef::real("zeta"),
            ParamDef::fraction("nu"),
            ParamDef::positive("sigma_epi"),
            ParamDef::positive("sigma_end"),
            ParamDef::fraction("rho"),
            ParamDef::positive("psi_epi"),
            ParamDef::positive("psi_end"),
            ParamDef::fraction("I_0_0"),
            ParamDef::fraction("E_0_0"),
            ParamDef::nonneg("mu_EI"),
            ParamDef::nonneg("mu_IR"),
            ParamDef::nonneg("mu_RS"),
            ParamDef::nonneg("mu_S"),
            ParamDef::nonneg("delta"),
            ParamDef::nonneg("epsilon"),
        ]);
        let mut states = vec!["cases".to_string(), "infections".to_string()];
        for z in 0..=2 * campaigns {
            for c in ["S", "E", "I", "A", "R"] {
                states.push(format!("{c}_{z}"));
            }
        }
        let persons = (FIRST..states.len()).collect();
        Self {
            units: vec!["Haiti".to_string()],
            defs,
            states,
            persons,
            campaigns,
            efficacy: EfficacyCurve::default(),
            correction: under_five_correction(),
            population: HAITI_POPULATION,
            t0,
            tn,
            phase_break,
        }
    }

    pub fn with_efficacy(mut self, curve: EfficacyCurve) -> Self {
        self.efficacy = curve;
        self
    }

    pub fn with_population(mut self, population: f64) -> Self {
        self.population = population;
        self
    }

    fn cohorts(&self) -> usize {
        1 + 2 * self.campaigns
    }

    /// Per-year transmission rate at `t`.
    pub fn beta(&self, t: f64, p: ParamView) -> f64 {
        let mut c = [0.0; N_BASIS];
        for (j, v) in c.iter_mut().enumerate() {
            *v = p.shared(BETA + j);
        }
        seasonal_beta(t, &c, p.shared(ZETA), self.t0, self.tn)
    }
}

/// `λ = (I + εA)^ν (ΔΓ/δ) β / N`.
pub fn force_of_infection(infected: f64, asymptomatic: f64, eps: f64, nu: f64, noise: f64, beta: f64, n: f64) -> f64 {
    let load = infected + eps * asymptomatic;
    if load <= 0.0 || n <= 0.0 {
        return 0.0;
    }
    load.powf(nu) * noise * beta / n
}

impl PompModel for Model1 {
    fn name(&self) -> &str {
        "model1"
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
        &[CASES, INFECTIONS]
    }

    fn validate(&self, v: &[f64]) -> Result<()> {
        if v[I00] + v[E00] >= 1.0 {
            return Err(Error::param("I_0_0", "I_0_0 + E_0_0 must be below 1"));
        }
        Ok(())
    }

    fn default_params(&self) -> ParameterSet {
        let (i0, e0) = initial_fractions(7298.0, 350.0, self.population);
        let mut v = vec![1.4, 1.2, 1.1, 1.1, 1.4, 1.0];
        v.extend([
            -0.04,
            0.98,
            0.09,
            0.12,
            0.679,
            279.15,
            78.33,
            i0,
            e0,
            RateUnit::PerDay.to_per_year(1.0 / 1.4),
            RateUnit::PerDay.to_per_year(1.0 / 2.0),
            1.0 / 8.0,
            2.23e-2,
            7.5e-3,
            0.05,
        ]);
        ParameterSet::from_defs(&self.defs, &v)
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, _rng: &mut StreamRng) -> Result<()> {
        x.fill(0.0);
        let pop = self.population.round();
        let i = (pop * p.shared(I00)).round();
        let e = (pop * p.shared(E00)).round();
        x[FIRST + I] = i;
        x[FIRST + E] = e;
        x[FIRST + S] = (pop - i - e).max(0.0);
        Ok(())
    }

    fn rprocess(
        &self,
        x: &mut [f64],
        t_start: f64,
        t_end: f64,
        max_step: f64,
        p: ParamView,
        covs: &CovariateTable,
        rng: &mut StreamRng,
    ) -> Result<f64> {
        let (n_steps, h) = crate::pomp::euler_substeps(t_start, t_end, max_step);
        let nz = self.cohorts();
        let nu = p.shared(NU);
        let eps = p.shared(EPS);
        let mu_ei = p.shared(MU_EI);
        let mu_ir = p.shared(MU_IR);
        let mu_rs = p.shared(MU_RS);
        let mu_s = p.shared(MU_S);
        let delta = p.shared(DELTA);
        let camps: Vec<_> = unit_campaigns(covs, 0).collect();
        if camps.len() > self.campaigns {
            return Err(Error::input(format!(
                "{} campaigns supplied but the model holds {}",
                camps.len(),
                self.campaigns
            )));
        }
        let mut eta = vec![0.0; nz];
        let mut flows = vec![0.0; nz * 5 * (4 + nz)];
        let mut rates = Vec::with_capacity(4 + nz);
        let mut out = vec![0.0; 4 + nz];
        for k in 0..n_steps {
            let t = t_start + k as f64 * h;
            let sigma = if t < self.phase_break { p.shared(SIGMA_EPI) } else { p.shared(SIGMA_END) };
            let s2 = sigma_week_to_year(sigma).powi(2);
            let noise = gamma_noise(h, s2, rng) / h;
            let comp = &x[FIRST..FIRST + 5 * nz];
            let (mut it, mut at, mut n, mut n0) = (0.0, 0.0, 0.0, 0.0);
            for z in 0..nz {
                it += comp[5 * z + I];
                at += comp[5 * z + A];
                for c in 0..5 {
                    n += comp[5 * z + c];
                }
            }
            for v in &comp[..5] {
                n0 += v;
            }
            let lambda = force_of_infection(it, at, eps, nu, noise, self.beta(t, p), n);
            eta.fill(0.0);
            if n0 > 0.0 {
                for (local, c) in &camps {
                    eta[1 + 2 * local] = c.dose_rate(t, false) / n0;
                    eta[2 + 2 * local] = c.dose_rate(t, true) / n0;
                }
            }
            // Draw every source from the start-of-step state, then apply.
            let mut fi = 0;
            for z in 0..nz {
                // Odd cohorts hold one-dose recipients, even cohorts two-dose.
                let f = if z == 0 {
                    0.0
                } else {
                    camps
                        .get((z - 1) / 2)
                        .map_or(0.0, |(_, c)| self.correction * self.efficacy.at(t - c.start, z % 2 == 0))
                };
                for c in 0..5 {
                    rates.clear();
                    match c {
                        S => rates.push(lambda),
                        E => {
                            rates.push(mu_ei * (1.0 - f));
                            rates.push(mu_ei * f);
                        }
                        I | A => rates.push(mu_ir),
                        _ => rates.push(mu_rs),
                    }
                    rates.push(delta);
                    if z == 0 {
                        rates.extend_from_slice(&eta[1..]);
                    }
                    let o = &mut out[..rates.len()];
                    draw_exits(x[FIRST + 5 * z + c], &rates, h, rng, o);
                    flows[fi..fi + o.len()].copy_from_slice(o);
                    fi += o.len();
                }
            }
            let births = poisson(mu_s * n * h, rng);
            let mut fi = 0;
            for z in 0..nz {
                let base = FIRST + 5 * z;
                for c in 0..5 {
                    let src = base + c;
                    let take = |x: &mut [f64], k: f64| {
                        x[src] -= k;
                        k
                    };
                    match c {
                        S => {
                            let k = take(x, flows[fi]);
                            x[base + E] += k;
                            x[INFECTIONS] += k;
                            fi += 1;
                        }
                        E => {
                            let ki = take(x, flows[fi]);
                            let ka = take(x, flows[fi + 1]);
                            x[base + I] += ki;
                            x[base + A] += ka;
                            x[CASES] += ki;
                            fi += 2;
                        }
                        I | A => {
                            let k = take(x, flows[fi]);
                            x[base + R] += k;
                            fi += 1;
                        }
                        _ => {
                            let k = take(x, flows[fi]);
                            x[base + S] += k;
                            fi += 1;
                        }
                    }
                    take(x, flows[fi]);
                    fi += 1;
                    if z == 0 {
                        for zz in 1..nz {
                            let k = take(x, flows[fi]);
                            x[FIRST + 5 * zz + c] += k;
                            fi += 1;
                        }
                    }
                }
            }
            x[FIRST + S] += births;
        }
        Ok(0.0)
    }

    fn dmeasure(&self, y: f64, x: &[f64], _unit: usize, t: f64, p: ParamView) -> f64 {
        let size = if t < self.phase_break { p.shared(PSI_EPI) } else { p.shared(PSI_END) };
        nb_logpmf(y, p.shared(RHO) * x[CASES], size)
    }

    fn rmeasure(&self, x: &[f64], _unit: usize, t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        let size = if t < self.phase_break { p.shared(PSI_EPI) } else { p.shared(PSI_END) };
        nb_sample(p.shared(RHO) * x[CASES], size, rng)
    }

    fn measure_mean(&self, x: &[f64], _unit: usize, _t: f64, p: ParamView) -> f64 {
        p.shared(RHO) * x[CASES]
    }

    fn unit_infections(&self, x: &[f64], _unit: usize) -> f64 {
        x[INFECTIONS]
    }

    fn person_slots(&self) -> &[usize] {
        &self.persons
    }
}
