//! Deterministic metapopulation model with an aquatic reservoir and gravity
//! coupling, integrated with RK4.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::euler::{rk4_step, Rk4Work};
use crate::pomp::{euler_substeps, CovariateTable, ParamDef, ParamView, ParameterSet, PompModel};
use crate::rng::StreamRng;
use crate::units::RateUnit;

use super::geography::GeographyData;
use super::measure::{log_normal_logdens, log_normal_sample};

const BETA: usize = 0;
const BETA_W: usize = 1;
const W_SAT: usize = 2;
const AMP: usize = 3;
const PHI: usize = 4;
const MU_EI: usize = 5;
const MU_IR: usize = 6;
const MU_RS: usize = 7;
const OMEGA1: usize = 8;
const OMEGA2: usize = 9;
const FRAC: usize = 10;
const EPS: usize = 11;
const EPS_W: usize = 12;
const MU_W: usize = 13;
const DELTA_W: usize = 14;
const RHO: usize = 15;
const PSI: usize = 16;
const V_RATE: usize = 17;
const W_R: usize = 18;

/// Vaccination classes: unvaccinated, then one/two doses under five, then
/// one/two doses over five.
pub const COHORTS: usize = 5;
const PER_COHORT: usize = 6;
const S: usize = 0;
const E: usize = 1;
const I: usize = 2;
const A: usize = 3;
const R: usize = 4;
const RA: usize = 5;
const W: usize = COHORTS * PER_COHORT;
const CASES: usize = W + 1;
const INFECTIONS: usize = W + 2;
const WIDTH: usize = W + 3;

/// Share of doses going to the under-five classes.
const UNDER_FIVE_SHARE: f64 = 0.11;
const CHILD_FACTOR: f64 = 0.4688;

/// Efficacy per vaccination class.
pub fn class_efficacy() -> [f64; COHORTS] {
    [0.0, 0.429 * CHILD_FACTOR, 0.519 * CHILD_FACTOR, 0.429, 0.519]
}

#[derive(Clone, Debug)]
pub struct Model2 {
    geo: GeographyData,
    defs: Vec<ParamDef>,
    states: Vec<String>,
    persons: Vec<usize>,
    /// First-week reported cases per unit.
    init_cases: Vec<f64>,
}

impl Model2 {
    pub fn new(geo: GeographyData, init_cases: Vec<f64>) -> Result<Self> {
        if init_cases.len() != geo.len() {
            return Err(Error::Dimension(format!(
                "{} initial case counts for {} units",
                init_cases.len(),
                geo.len()
            )));
        }
        let defs = vec![
            ParamDef::positive("beta"),
            ParamDef::positive("beta_W"),
            ParamDef::positive("W_sat"),
            ParamDef::nonneg("a").bounded(0.0, 1.0 - f64::EPSILON),
            ParamDef::real("phi"),
            ParamDef::nonneg("mu_EI"),
            ParamDef::nonneg("mu_IR"),
            ParamDef::positive("mu_RS"),
            ParamDef::nonneg("omega1"),
            ParamDef::nonneg("omega2"),
            ParamDef::nonneg("f").bounded(0.0, 1.0),
            ParamDef::nonneg("epsilon"),
            ParamDef::nonneg("epsilon_W"),
            ParamDef::positive("mu_W"),
            ParamDef::nonneg("delta_W"),
            ParamDef::fraction("rho"),
            ParamDef::positive("psi"),
            ParamDef::nonneg("v_rate"),
            ParamDef::nonneg("w_r"),
        ];
        let mut states = Vec::with_capacity(WIDTH);
        for z in 0..COHORTS {
            for c in ["S", "E", "I", "A", "R", "RA"] {
                states.push(format!("{c}_{z}"));
            }
        }
        states.push("W".into());
        states.push("cases".into());
        states.push("infections".into());
        Ok(Self {
            geo,
            defs,
            states,
            persons: (0..W).collect(),
            init_cases,
        })
    }

    pub fn geography(&self) -> &GeographyData {
        &self.geo
    }
}

/// `λ_u = 0.5(1 + a cos(2πt + φ)) β_W W/(W_sat + W) + β (ΣI + εΣA)`.
#[allow(clippy::too_many_arguments)]
pub fn force_of_infection(t: f64, w: f64, infected: f64, asymptomatic: f64, a: f64, phi: f64, beta_w: f64, w_sat: f64, beta: f64, eps: f64) -> f64 {
    0.5 * (1.0 + a * (2.0 * PI * t + phi).cos()) * beta_w * w / (w_sat + w) + beta * (infected + eps * asymptomatic)
}

struct Rates<'a> {
    p: ParamView<'a>,
    move_rate: Vec<f64>,
    water_rate: Vec<f64>,
    theta: [f64; COHORTS],
    /// `eta[u * COHORTS + z]`, per capita of `S_0`.
    eta: Vec<f64>,
    n: usize,
}

impl Rates<'_> {
    fn deriv(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let p = &self.p;
        let (beta, beta_w, w_sat) = (p.shared(BETA), p.shared(BETA_W), p.shared(W_SAT));
        let (a, phi) = (p.shared(AMP), p.shared(PHI));
        let (mu_ei, mu_ir, mu_rs) = (p.shared(MU_EI), p.shared(MU_IR), p.shared(MU_RS));
        let (om1, om2, f) = (p.shared(OMEGA1), p.shared(OMEGA2), p.shared(FRAC));
        let (eps, eps_w, mu_w, delta_w) = (p.shared(EPS), p.shared(EPS_W), p.shared(MU_W), p.shared(DELTA_W));
        let wr = p.shared(W_R);
        let n = self.n;
        dx.fill(0.0);
        for u in 0..n {
            let xu = &x[u * WIDTH..(u + 1) * WIDTH];
            let d = &mut dx[u * WIDTH..(u + 1) * WIDTH];
            let (mut it, mut at) = (0.0, 0.0);
            for z in 0..COHORTS {
                it += xu[z * PER_COHORT + I];
                at += xu[z * PER_COHORT + A];
            }
            let lambda = force_of_infection(t, xu[W], it, at, a, phi, beta_w, w_sat, beta, eps);
            for z in 0..COHORTS {
                let b = z * PER_COHORT;
                let inf = (1.0 - self.theta[z]) * lambda * xu[b + S];
                let onset = mu_ei * xu[b + E];
                d[b + S] += mu_rs * (xu[b + R] + xu[b + RA]) - inf;
                d[b + E] += inf - onset;
                d[b + I] += f * onset - mu_ir * xu[b + I];
                d[b + A] += (1.0 - f) * onset - mu_ir * xu[b + A];
                d[b + R] += mu_ir * xu[b + I] - mu_rs * xu[b + R];
                d[b + RA] += mu_ir * xu[b + A] - mu_rs * xu[b + RA];
                d[CASES] += f * onset;
                d[INFECTIONS] += inf;
                if z > 0 {
                    let omega = if z % 2 == 1 { om1 } else { om2 };
                    let vacc = self.eta[u * COHORTS + z] * xu[S];
                    let wane = omega * xu[b + S];
                    d[b + S] += vacc - wane;
                    d[S] += wane - vacc;
                }
            }
            d[W] += mu_w * (it + eps_w * at) - delta_w * xu[W];
        }
        for u in 0..n {
            for v in 0..n {
                let m = self.move_rate[u * n + v];
                if m > 0.0 {
                    for c in 0..W {
                        let flow = m * x[u * WIDTH + c];
                        dx[u * WIDTH + c] -= flow;
                        dx[v * WIDTH + c] += flow;
                    }
                }
                let mw = wr * self.water_rate[u * n + v];
                if mw > 0.0 {
                    let flow = mw * x[u * WIDTH + W];
                    dx[u * WIDTH + W] -= flow;
                    dx[v * WIDTH + W] += flow;
                }
            }
        }
    }
}

impl PompModel for Model2 {
    fn name(&self) -> &str {
        "model2"
    }

    fn unit_names(&self) -> &[String] {
        &self.geo.names
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

    fn person_slots(&self) -> &[usize] {
        &self.persons
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn default_params(&self) -> ParameterSet {
        let week = RateUnit::PerWeek;
        let v = [
            5.97e-15,
            1.1,
            1e5,
            0.4,
            0.97,
            RateUnit::PerDay.to_per_year(1.0 / 1.3),
            RateUnit::PerDay.to_per_year(1.0 / 7.0),
            1.0 / 1.4e11,
            1.0,
            1.0 / 5.0,
            0.2,
            0.001,
            1e-7,
            week.to_per_year(179.0),
            week.to_per_year(1.0 / 3.0),
            0.2,
            1.319,
            1e-12,
            1.0,
        ];
        ParameterSet::from_defs(&self.defs, &v)
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, _rng: &mut StreamRng) -> Result<()> {
        x.fill(0.0);
        for u in 0..self.geo.len() {
            let i = self.init_cases[u] / p.get(RHO, u);
            let b = u * WIDTH;
            x[b + I] = i;
            x[b + S] = (self.geo.population[u] - i).max(0.0);
        }
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
        _rng: &mut StreamRng,
    ) -> Result<f64> {
        let n = self.geo.len();
        let gravity = self.geo.gravity(p.shared(V_RATE));
        let move_rate: Vec<f64> = (0..n * n).map(|k| gravity[k] / self.geo.population[k / n]).collect();
        let mut rates = Rates {
            p,
            move_rate,
            water_rate: self.geo.river.clone(),
            theta: class_efficacy(),
            eta: vec![0.0; n * COHORTS],
            n,
        };
        let (steps, h) = euler_substeps(t_start, t_end, max_step);
        let mut work = Rk4Work::new(x.len());
        let clamp: Vec<usize> = (0..n).flat_map(|u| (0..=W).map(move |c| u * WIDTH + c)).collect();
        let names = |i: usize| format!("{}:{}", self.geo.names[i / WIDTH], self.states[i % WIDTH]);
        let mut clamped = 0.0;
        for k in 0..steps {
            let t = t_start + k as f64 * h;
            rates.eta.fill(0.0);
            for c in covs.campaigns() {
                let s0 = x[c.unit * WIDTH + S];
                if c.is_active(t) && s0 > 0.0 {
                    let e = &mut rates.eta[c.unit * COHORTS..(c.unit + 1) * COHORTS];
                    let one = c.dose_rate(t, false) / s0;
                    let two = c.dose_rate(t, true) / s0;
                    e[1] += UNDER_FIVE_SHARE * one;
                    e[2] += UNDER_FIVE_SHARE * two;
                    e[3] += (1.0 - UNDER_FIVE_SHARE) * one;
                    e[4] += (1.0 - UNDER_FIVE_SHARE) * two;
                }
            }
            clamped += rk4_step(x, t, h, &mut work, &clamp, &names, |t, s, d| rates.deriv(t, s, d))?;
        }
        if clamped > 0.0 {
            log::debug!("model2: clamped {clamped:.3e} at zero over [{t_start}, {t_end}]");
        }
        Ok(clamped)
    }

    fn dmeasure(&self, y: f64, x: &[f64], unit: usize, _t: f64, p: ParamView) -> f64 {
        log_normal_logdens(y, x[unit * WIDTH + CASES], p.get(RHO, unit), p.get(PSI, unit))
    }

    fn rmeasure(&self, x: &[f64], unit: usize, _t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        log_normal_sample(x[unit * WIDTH + CASES], p.get(RHO, unit), p.get(PSI, unit), rng)
    }

    fn measure_mean(&self, x: &[f64], unit: usize, _t: f64, p: ParamView) -> f64 {
        p.get(RHO, unit) * x[unit * WIDTH + CASES]
    }

    fn unit_infections(&self, x: &[f64], unit: usize) -> f64 {
        x[unit * WIDTH + INFECTIONS]
    }
}
