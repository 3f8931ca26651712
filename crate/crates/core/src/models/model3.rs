//! Stochastic metapopulation model with rainfall-driven aquatic reservoirs,
//! hurricane forcing, Erlang immunity and balanced demography.

use crate::error::{Error, Result};
use crate::euler::{draw_exits, gamma_noise};
use crate::pomp::{euler_substeps, Campaign, CovariateTable, ParamDef, ParamView, ParameterSet, PompModel};
use crate::rng::StreamRng;
use crate::units::{sigma_week_to_year, ymd, RateUnit};

use super::efficacy::{under_five_correction, EfficacyCurve};
use super::geography::GeographyData;
use super::measure::{nb_logpmf, nb_sample};
use super::unit_campaigns;

/// Median standardized rainfall used to initialize the reservoirs.
pub const MEDIAN_RAINFALL: f64 = 0.002376;

/// Shared parameter names, in order after the per-unit blocks.
const SHARED: [&str; 22] = [
    "mu_W", "delta_W", "a", "r", "epsilon", "epsilon_W", "f", "mu_IR", "mu_RS", "delta", "delta_C", "sigma", "rho",
    "psi", "betahm_3", "betahm_9", "hhm_3", "hhm_9", "t_hm", "I_0_0_3", "I_0_0_4", "J_med",
];

#[derive(Clone, Copy, Debug)]
struct Idx {
    beta: usize,
    beta_w: usize,
    mu_w: usize,
    delta_w: usize,
    a: usize,
    r: usize,
    eps: usize,
    eps_w: usize,
    f: usize,
    mu_ir: usize,
    mu_rs: usize,
    delta: usize,
    delta_c: usize,
    sigma: usize,
    rho: usize,
    psi: usize,
    hm_beta: [usize; 2],
    hm_h: [usize; 2],
    t_hm: usize,
    i00: [usize; 2],
    j_med: usize,
}

impl Idx {
    fn new(n: usize) -> Self {
        let s = 2 * n;
        Self {
            beta: 0,
            beta_w: n,
            mu_w: s,
            delta_w: s + 1,
            a: s + 2,
            r: s + 3,
            eps: s + 4,
            eps_w: s + 5,
            f: s + 6,
            mu_ir: s + 7,
            mu_rs: s + 8,
            delta: s + 9,
            delta_c: s + 10,
            sigma: s + 11,
            rho: s + 12,
            psi: s + 13,
            hm_beta: [s + 14, s + 15],
            hm_h: [s + 16, s + 17],
            t_hm: s + 18,
            i00: [s + 19, s + 20],
            j_med: s + 21,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Model3 {
    geo: GeographyData,
    defs: Vec<ParamDef>,
    states: Vec<String>,
    persons: Vec<usize>,
    accs: Vec<usize>,
    idx: Idx,
    /// Campaigns per unit the state can hold.
    campaigns: usize,
    efficacy: EfficacyCurve,
    correction: f64,
    /// Reported cases in the four weeks up to `t0`, oldest first.
    init_cases: Vec<[f64; 4]>,
    /// Units receiving hurricane forcing (Grand'Anse, Sud).
    hurricane_units: [Option<usize>; 2],
    /// Units whose initial infections are estimated (Grand'Anse, Nippes).
    estimated_init_units: [Option<usize>; 2],
}

impl Model3 {
    pub fn new(geo: GeographyData, init_cases: Vec<[f64; 4]>, campaigns: usize) -> Result<Self> {
        let n = geo.len();
        if init_cases.len() != n {
            return Err(Error::Dimension(format!("{} initial case rows for {n} units", init_cases.len())));
        }
        let mut defs = Vec::with_capacity(2 * n + SHARED.len());
        for u in 0..n {
            defs.push(ParamDef::positive(format!("beta_{}", u + 1)).for_unit(u));
        }
        for u in 0..n {
            defs.push(ParamDef::positive(format!("betaW_{}", u + 1)).for_unit(u));
        }
        let find = |name: &str| geo.names.iter().position(|g| g == name);
        let hurricane_units = [find("Grand'Anse"), find("Sud")];
        let estimated_init_units = [find("Grand'Anse"), find("Nippes")];
        for name in SHARED {
            let def = match name {
                "epsilon" | "f" | "mu_IR" | "mu_RS" | "delta" | "delta_C" | "J_med" => ParamDef::nonneg(name),
                "t_hm" => ParamDef::real(name),
                "epsilon_W" | "rho" => ParamDef::fraction(name),
                "betahm_3" | "hhm_3" => ParamDef::positive(name).for_unit(hurricane_units[0].unwrap_or(0)),
                "betahm_9" | "hhm_9" => ParamDef::positive(name).for_unit(hurricane_units[1].unwrap_or(0)),
                "I_0_0_3" => ParamDef::positive(name).for_unit(estimated_init_units[0].unwrap_or(0)),
                "I_0_0_4" => ParamDef::positive(name).for_unit(estimated_init_units[1].unwrap_or(0)),
                _ => ParamDef::positive(name),
            };
            defs.push(def);
        }
        let cohorts = 1 + 2 * campaigns;
        let mut states: Vec<String> = (0..cohorts).map(|z| format!("S_{z}")).collect();
        for s in ["I", "A", "R1", "R2", "R3", "W", "cases", "infections"] {
            states.push(s.to_string());
        }
        let persons = (0..cohorts + 5).collect();
        Ok(Self {
            geo,
            defs,
            states,
            persons,
            accs: vec![cohorts + 6, cohorts + 7],
            idx: Idx::new(n),
            campaigns,
            efficacy: EfficacyCurve::default(),
            correction: under_five_correction(),
            init_cases,
            hurricane_units,
            estimated_init_units,
        })
    }

    pub fn with_efficacy(mut self, curve: EfficacyCurve) -> Self {
        self.efficacy = curve;
        self
    }

    pub fn geography(&self) -> &GeographyData {
        &self.geo
    }

    fn cohorts(&self) -> usize {
        1 + 2 * self.campaigns
    }

    fn slot(&self, name: Slot) -> usize {
        let c = self.cohorts();
        match name {
            Slot::I => c,
            Slot::A => c + 1,
            Slot::R(k) => c + 2 + k,
            Slot::W => c + 5,
            Slot::Cases => c + 6,
            Slot::Infections => c + 7,
        }
    }

    fn width(&self) -> usize {
        self.cohorts() + 8
    }

    /// Hurricane-forcing term for `unit` at `t`, in yr⁻¹.
    fn hurricane(&self, unit: usize, t: f64, p: ParamView) -> f64 {
        let t_hm = p.get(self.idx.t_hm, unit);
        if t < t_hm {
            return 0.0;
        }
        for k in 0..2 {
            if self.hurricane_units[k] == Some(unit) {
                return p.get(self.idx.hm_beta[k], unit) * (-p.get(self.idx.hm_h[k], unit) * (t - t_hm)).exp();
            }
        }
        0.0
    }

    /// Force of infection per unit at `t`.
    pub fn force_of_infection(&self, x: &[f64], t: f64, p: ParamView, out: &mut [f64]) {
        let w = self.width();
        let (si, sa, sw) = (self.slot(Slot::I), self.slot(Slot::A), self.slot(Slot::W));
        let n = self.geo.len();
        let mut load = 0.0;
        for u in 0..n {
            load += x[u * w + si] + p.get(self.idx.eps, u) * x[u * w + sa];
        }
        for (u, o) in out.iter_mut().enumerate() {
            let own = x[u * w + si] + p.get(self.idx.eps, u) * x[u * w + sa];
            let wu = x[u * w + sw];
            let water = (p.get(self.idx.beta_w + u, u) + self.hurricane(u, t, p)) * wu / (1.0 + wu);
            *o = water + p.get(self.idx.beta + u, u) * (load - own);
        }
    }
}

#[derive(Clone, Copy)]
enum Slot {
    I,
    A,
    R(usize),
    W,
    Cases,
    Infections,
}

/// Rainfall amplification of shedding, `1 + a J^r`.
pub fn rainfall_factor(j: f64, a: f64, r: f64) -> f64 {
    1.0 + a * j.powf(r)
}

impl PompModel for Model3 {
    fn name(&self) -> &str {
        "model3"
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
        &self.accs
    }

    fn person_slots(&self) -> &[usize] {
        &self.persons
    }

    fn default_params(&self) -> ParameterSet {
        let n = self.geo.len();
        let beta = [0.82, 0.02, 0.38, 0.21, 0.51, 0.51, 0.35, 0.12, 0.26, 0.10];
        let beta_w = [4.70, 21.00, 24.97, 27.14, 5.28, 30.70, 10.17, 0.99, 11.89, 12.82];
        let mut v: Vec<f64> = (0..n).map(|u| beta[u % 10] * 1e-6).collect();
        v.extend((0..n).map(|u| beta_w[u % 10]));
        let week = RateUnit::PerWeek;
        v.extend([
            week.to_per_year(9.77e-7),
            week.to_per_year(1.0 / 0.11),
            1.0,
            0.78,
            1.0,
            0.008,
            0.25,
            RateUnit::PerDay.to_per_year(1.0 / 5.0),
            1.0 / 8.0,
            1.59e-2,
            1.46,
            0.218,
            0.98,
            88.58,
            36.88,
            31.64,
            98.98,
            58.43,
            ymd(2016, 10, 4),
            21.0,
            6.0,
            MEDIAN_RAINFALL,
        ]);
        ParameterSet::from_defs(&self.defs, &v)
    }

    fn rinit(&self, x: &mut [f64], p: ParamView, _rng: &mut StreamRng) -> Result<()> {
        x.fill(0.0);
        let w = self.width();
        let ix = self.idx;
        for u in 0..self.geo.len() {
            let y = self.init_cases[u];
            let rho = p.get(ix.rho, u);
            let f = p.get(ix.f, u);
            let mu_ir_day = RateUnit::PerDay.from_per_year(p.get(ix.mu_ir, u));
            let exit_day = mu_ir_day + (p.get(ix.delta, u) + p.get(ix.delta_c, u)) / 365.0;
            let mut infected = y[2] / (7.0 * rho * exit_day);
            for k in 0..2 {
                if self.estimated_init_units[k] == Some(u) && y[2] == 0.0 {
                    infected = p.get(ix.i00[k], u);
                }
            }
            let i = infected.round();
            let a = (i * (1.0 - f) / f).round();
            let total_y: f64 = y.iter().sum();
            let mut r = ((total_y / (rho * f) - (i + a)) / 3.0).round();
            if r < 0.0 {
                log::warn!("model3: negative initial recovered count in `{}` clamped to 0", self.geo.names[u]);
                r = 0.0;
            }
            let pop = self.geo.population[u].round();
            let s = pop - i - a - 3.0 * r;
            if s < 0.0 {
                return Err(Error::input(format!(
                    "initial infections exceed the population of `{}`",
                    self.geo.names[u]
                )));
            }
            let b = u * w;
            x[b] = s;
            x[b + self.slot(Slot::I)] = i;
            x[b + self.slot(Slot::A)] = a;
            for k in 0..3 {
                x[b + self.slot(Slot::R(k))] = r;
            }
            let factor = rainfall_factor(p.get(ix.j_med, u), p.get(ix.a, u), p.get(ix.r, u));
            x[b + self.slot(Slot::W)] = factor * self.geo.density[u] * (i + p.get(ix.eps_w, u) * a);
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
        rng: &mut StreamRng,
    ) -> Result<f64> {
        let n = self.geo.len();
        let w = self.width();
        let nz = self.cohorts();
        let ix = self.idx;
        let (si, sa, sw) = (self.slot(Slot::I), self.slot(Slot::A), self.slot(Slot::W));
        let (sc, sinf) = (self.slot(Slot::Cases), self.slot(Slot::Infections));
        let r0 = self.slot(Slot::R(0));
        // Campaign `k` in unit `u` fills cohorts `2k + 1` (one dose) and `2k + 2`.
        if let Some(c) = covs.campaigns().iter().find(|c| c.unit >= n) {
            return Err(Error::input(format!("campaign for unknown unit {}", c.unit)));
        }
        let camps: Vec<Vec<&Campaign>> = (0..n).map(|u| unit_campaigns(covs, u).map(|(_, c)| c).collect()).collect();
        if let Some(u) = camps.iter().position(|c| c.len() > self.campaigns) {
            return Err(Error::input(format!(
                "`{}` has {} campaigns but the model holds {}",
                self.geo.names[u],
                camps[u].len(),
                self.campaigns
            )));
        }
        let (steps, h) = euler_substeps(t_start, t_end, max_step);
        let mut lambda = vec![0.0; n];
        let mut rates = Vec::with_capacity(nz + 2);
        let mut out = vec![0.0; nz + 2];
        let mut flows = vec![0.0; nz * (nz + 2)];
        for k in 0..steps {
            let t = t_start + k as f64 * h;
            self.force_of_infection(x, t, p, &mut lambda);
            for u in 0..n {
                let b = u * w;
                let f = p.get(ix.f, u);
                let mu_ir = p.get(ix.mu_ir, u);
                let rs3 = 3.0 * p.get(ix.mu_rs, u);
                let delta = p.get(ix.delta, u);
                let delta_c = p.get(ix.delta_c, u);
                let s2 = sigma_week_to_year(p.get(ix.sigma, u)).powi(2);
                let noise = gamma_noise(h, s2, rng) / h;
                let lam = lambda[u] * noise;
                let s0 = x[b];
                let (i_start, a_start) = (x[b + si], x[b + sa]);

                // Susceptible cohorts: infection (I, A), death into S_0, and
                // from S_0 vaccination into each active cohort.
                let mut fi = 0;
                for z in 0..nz {
                    let theta = if z == 0 {
                        0.0
                    } else {
                        camps[u]
                            .get((z - 1) / 2)
                            .map_or(0.0, |c| self.correction * self.efficacy.at(t - c.start, z % 2 == 0))
                    };
                    rates.clear();
                    rates.push(f * lam * (1.0 - theta));
                    rates.push((1.0 - f) * lam * (1.0 - theta));
                    if z == 0 {
                        for zz in 1..nz {
                            let eta = camps[u].get((zz - 1) / 2).map_or(0.0, |c| {
                                if s0 > 0.0 {
                                    c.dose_rate(t, zz % 2 == 0) / s0
                                } else {
                                    0.0
                                }
                            });
                            rates.push(eta);
                        }
                    } else {
                        rates.push(delta);
                    }
                    let o = &mut out[..rates.len()];
                    draw_exits(x[b + z], &rates, h, rng, o);
                    flows[fi..fi + o.len()].copy_from_slice(o);
                    fi += o.len();
                }
                let mut ex = [0.0; 2];
                draw_exits(x[b + si], &[mu_ir, delta + delta_c], h, rng, &mut ex);
                let mut ea = [0.0; 2];
                draw_exits(x[b + sa], &[mu_ir, delta], h, rng, &mut ea);
                let mut er = [[0.0; 2]; 3];
                for (kk, e) in er.iter_mut().enumerate() {
                    if kk < 2 {
                        draw_exits(x[b + r0 + kk], &[rs3, delta], h, rng, e);
                    } else {
                        draw_exits(x[b + r0 + kk], &[delta + rs3], h, rng, &mut e[..1]);
                    }
                }

                let mut fi = 0;
                for z in 0..nz {
                    let (to_i, to_a) = (flows[fi], flows[fi + 1]);
                    x[b + z] -= to_i + to_a;
                    x[b + si] += to_i;
                    x[b + sa] += to_a;
                    x[b + sc] += to_i;
                    x[b + sinf] += to_i + to_a;
                    fi += 2;
                    if z == 0 {
                        for zz in 1..nz {
                            x[b] -= flows[fi];
                            x[b + zz] += flows[fi];
                            fi += 1;
                        }
                    } else {
                        x[b + z] -= flows[fi];
                        x[b] += flows[fi];
                        fi += 1;
                    }
                }
                x[b + si] -= ex[0] + ex[1];
                x[b + r0] += ex[0];
                x[b] += ex[1];
                x[b + sa] -= ea[0] + ea[1];
                x[b + r0] += ea[0];
                x[b] += ea[1];
                x[b + r0] -= er[0][0] + er[0][1];
                x[b + r0 + 1] += er[0][0];
                x[b + r0 + 1] -= er[1][0] + er[1][1];
                x[b + r0 + 2] += er[1][0];
                x[b + r0 + 2] -= er[2][0];
                x[b] += er[0][1] + er[1][1] + er[2][0];

                // Reservoir: exact exponential update with shedding held at
                // its start-of-step value; stays nonnegative for any step.
                let j = covs.rainfall_at(u, t).map_err(|_| Error::MissingRainfall {
                    unit: self.geo.names[u].clone(),
                    time: t,
                })?;
                let shed = rainfall_factor(j, p.get(ix.a, u), p.get(ix.r, u))
                    * self.geo.density[u]
                    * p.get(ix.mu_w, u)
                    * (i_start + p.get(ix.eps_w, u) * a_start);
                let dw = p.get(ix.delta_w, u);
                let decay = (-dw * h).exp();
                let wu = x[b + sw];
                x[b + sw] = if dw > 0.0 {
                    wu * decay + shed * (1.0 - decay) / dw
                } else {
                    wu + shed * h
                };
            }
        }
        Ok(0.0)
    }

    fn dmeasure(&self, y: f64, x: &[f64], unit: usize, _t: f64, p: ParamView) -> f64 {
        let m = p.get(self.idx.rho, unit) * x[unit * self.width() + self.slot(Slot::Cases)];
        nb_logpmf(y, m, p.get(self.idx.psi, unit))
    }

    fn rmeasure(&self, x: &[f64], unit: usize, _t: f64, p: ParamView, rng: &mut StreamRng) -> f64 {
        let m = p.get(self.idx.rho, unit) * x[unit * self.width() + self.slot(Slot::Cases)];
        nb_sample(m, p.get(self.idx.psi, unit), rng)
    }

    fn measure_mean(&self, x: &[f64], unit: usize, _t: f64, p: ParamView) -> f64 {
        p.get(self.idx.rho, unit) * x[unit * self.width() + self.slot(Slot::Cases)]
    }

    fn unit_infections(&self, x: &[f64], unit: usize) -> f64 {
        x[unit * self.width() + self.slot(Slot::Infections)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomp::{simulate, unit_populations, Rainfall, TimeGrid};
    use crate::units::WEEK;
    use crate::Parallelism;

    fn model() -> Model3 {
        // Grand'Anse and Nippes start without cases.
        let mut init = vec![[3.0, 5.0, 7.0, 9.0]; 10];
        init[2] = [0.0; 4];
        init[3] = [0.0; 4];
        Model3::new(GeographyData::haiti_synthetic(), init, 1).unwrap()
    }

    fn values(m: &Model3) -> Vec<f64> {
        m.default_params().bind(m.param_defs()).unwrap()
    }

    #[test]
    fn rainfall_amplification() {
        assert_eq!(rainfall_factor(0.0, 1.0, 0.78), 1.0);
        assert_eq!(rainfall_factor(1.0, 1.0, 0.78), 2.0);
    }

    #[test]
    fn erlang_waning_component() {
        let m = model();
        let v = values(&m);
        assert!((3.0 * v[m.idx.mu_rs] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn hurricane_half_life_and_jump() {
        let m = model();
        let v = values(&m);
        let p = ParamView::uniform(&v);
        let ga = m.geo.index_of("Grand'Anse").unwrap();
        let t_hm = v[m.idx.t_hm];
        let mut x = vec![0.0; m.state_dim()];
        let w = m.width();
        x[ga * w + m.slot(Slot::W)] = 1.0;
        let mut before = vec![0.0; 10];
        let mut at = vec![0.0; 10];
        let mut half = vec![0.0; 10];
        m.force_of_infection(&x, t_hm - 1e-9, p, &mut before);
        m.force_of_infection(&x, t_hm, p, &mut at);
        m.force_of_infection(&x, t_hm + 2f64.ln() / 98.98, p, &mut half);
        let base = v[m.idx.beta_w + ga] * 0.5;
        assert!((before[ga] - base).abs() < 1e-12);
        assert!((at[ga] - before[ga] - 36.88 * 0.5).abs() < 1e-12);
        assert!((half[ga] - base - 18.44 * 0.5).abs() < 1e-9);
        // No hurricane term elsewhere.
        let ouest = m.geo.index_of("Ouest").unwrap();
        assert_eq!(at[ouest], before[ouest]);
    }

    #[test]
    fn coupling_excludes_own_unit() {
        let m = model();
        let v = values(&m);
        let p = ParamView::uniform(&v);
        let w = m.width();
        let mut x = vec![0.0; m.state_dim()];
        x[m.slot(Slot::I)] = 100.0;
        let mut lam = vec![0.0; 10];
        m.force_of_infection(&x, 0.0, p, &mut lam);
        assert_eq!(lam[0], 0.0);
        assert!((lam[1] - v[m.idx.beta + 1] * 100.0).abs() < 1e-18);
        assert_eq!(x.len(), 10 * w);
    }

    #[test]
    fn initialization_oracle() {
        let m = model();
        let v = values(&m);
        let mut x = vec![0.0; m.state_dim()];
        m.rinit(&mut x, ParamView::uniform(&v), &mut crate::rng::stream(0, crate::rng::Domain::Init, 0, 0))
            .unwrap();
        let w = m.width();
        // y*_{-1} = 7, ρ = 0.98, μ_IR = 1/5 day⁻¹, δ = 0.0159, δ_C = 1.46 yr⁻¹.
        let i: f64 = (7.0_f64 / (7.0 * 0.98 * (0.2 + (0.0159 + 1.46) / 365.0))).round();
        assert_eq!(x[m.slot(Slot::I)], i);
        assert_eq!(x[m.slot(Slot::A)], 3.0 * i);
        let r: f64 = ((24.0_f64 / (0.98 * 0.25) - 4.0 * i) / 3.0).round();
        assert_eq!(x[m.slot(Slot::R(2))], r);
        for (u, pop) in unit_populations(&m, &x).iter().enumerate() {
            assert_eq!(*pop, m.geo.population[u].round());
        }
        // Zero-case unit with no estimated start: nothing infected.
        let nippes = m.geo.index_of("Nippes").unwrap();
        let ouest = m.geo.index_of("Ouest").unwrap();
        assert_eq!(x[nippes * w + m.slot(Slot::I)], 6.0);
        assert!(x[ouest * w + m.slot(Slot::I)] > 0.0);
        let ga = m.geo.index_of("Grand'Anse").unwrap();
        assert_eq!(x[ga * w + m.slot(Slot::I)], 21.0);
    }

    #[test]
    fn zero_start_without_estimate_is_empty() {
        let mut init = vec![[1.0, 1.0, 1.0, 1.0]; 10];
        init[0] = [0.0; 4];
        let m = Model3::new(GeographyData::haiti_synthetic(), init, 0).unwrap();
        let v = values(&m);
        let mut x = vec![0.0; m.state_dim()];
        m.rinit(&mut x, ParamView::uniform(&v), &mut crate::rng::stream(0, crate::rng::Domain::Init, 0, 0))
            .unwrap();
        for s in [Slot::I, Slot::A, Slot::W] {
            assert_eq!(x[m.slot(s)], 0.0);
        }
    }

    #[test]
    fn missing_rainfall_names_unit_and_time() {
        let m = model();
        let grid = TimeGrid::weekly(0.0, 3, 1.0 / 365.25).unwrap();
        let err = simulate(&m, &m.default_params(), &grid, &CovariateTable::default(), 1, 0, Parallelism::Sequential)
            .unwrap_err();
        assert!(err.to_string().contains("Artibonite"), "{err}");
    }

    #[test]
    fn populations_are_conserved_exactly() {
        let m = model();
        let weeks = 60;
        let rain = Rainfall {
            start: 0.0,
            step: WEEK,
            values: (0..10).map(|u| (0..=weeks).map(|k| ((k + u) % 5) as f64 / 4.0).collect()).collect(),
            unit_names: m.geo.names.clone(),
        };
        let campaigns = vec![crate::pomp::Campaign {
            unit: 4,
            start: 5.0 * WEEK,
            end: 20.0 * WEEK,
            doses_one: 10_000.0,
            doses_two: 30_000.0,
        }];
        let covs = CovariateTable::default().with_rainfall(rain).with_campaigns(campaigns);
        let grid = TimeGrid::weekly(0.0, weeks, 1.0 / 365.25).unwrap();
        let sims = simulate(&m, &m.default_params(), &grid, &covs, 2, 11, Parallelism::Sequential).unwrap();
        for s in &sims {
            for n in 0..=grid.len() {
                for (u, pop) in unit_populations(&m, s.state(n)).iter().enumerate() {
                    assert_eq!(*pop, m.geo.population[u].round());
                }
            }
        }
        let w = m.width();
        let last = sims[0].state(grid.len());
        assert!(last[4 * w + 2] > 0.0, "two-dose cohort is populated");
    }
}
