//! Stochastic and deterministic stepping of compartmental flows.
//!
//! Stochastic steps use the Euler-multinomial scheme: each individual in a
//! source compartment leaves during a step of length `delta` with probability
//! `1 - exp(-Σμ δ)`, split between destinations in proportion to their rates.
//! Draws are sequential conditional binomials over destinations in the order
//! the edges were declared. Counts are whole numbers stored as `f64`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

/// Gamma white-noise increment with mean `delta` and variance `sigma2 * delta`.
pub fn gamma_increment<R: Rng + ?Sized>(delta: f64, sigma2: f64, rng: &mut R) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::param("sigma2", format!("must be nonnegative, got {sigma2}")));
    }
    Ok(gamma_noise(delta, sigma2, rng))
}

/// Unchecked form of [`gamma_increment`] for inner loops.
#[inline]
pub fn gamma_noise<R: Rng + ?Sized>(delta: f64, sigma2: f64, rng: &mut R) -> f64 {
    if sigma2 == 0.0 {
        return delta;
    }
    match Gamma::new(delta / sigma2, sigma2) {
        Ok(g) => g.sample(rng),
        Err(_) => delta,
    }
}

#[inline]
pub fn binomial<R: Rng + ?Sized>(n: f64, p: f64, rng: &mut R) -> f64 {
    if n <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, p).map_or(0.0, |b| b.sample(rng) as f64)
}

#[inline]
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map_or(0.0, |d| d.sample(rng))
}

/// Poisson arrivals with mean `rate * delta`.
pub fn poisson_inflow<R: Rng + ?Sized>(rate: f64, delta: f64, rng: &mut R) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::param("rate", format!("must be nonnegative, got {rate}")));
    }
    Ok(poisson(rate * delta, rng))
}

/// Exit probabilities `p_j = (1 - exp(-Σμ δ)) μ_j / Σμ`.
pub fn exit_probabilities(rates: &[f64], delta: f64, out: &mut [f64]) {
    let total: f64 = rates.iter().sum();
    if total <= 0.0 {
        out.iter_mut().for_each(|p| *p = 0.0);
        return;
    }
    let leave = -(-total * delta).exp_m1();
    for (p, &r) in out.iter_mut().zip(rates) {
        *p = leave * r / total;
    }
}

/// Draw the numbers leaving a compartment of size `n` for each destination.
///
/// `rates` are per-capita and already include any noise factor.
#[inline]
pub fn draw_exits<R: Rng + ?Sized>(n: f64, rates: &[f64], delta: f64, rng: &mut R, out: &mut [f64]) {
    let total: f64 = rates.iter().sum();
    if n <= 0.0 || total <= 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let leave = -(-total * delta).exp_m1();
    let mut remaining = n;
    let mut p_left = 1.0;
    for (o, &r) in out.iter_mut().zip(rates) {
        let p = leave * r / total;
        let cond = if p_left > 0.0 { (p / p_left).min(1.0) } else { 0.0 };
        let k = binomial(remaining, cond, rng);
        *o = k;
        remaining -= k;
        p_left -= p;
    }
}

/// Destination of a flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dest {
    To(usize),
    Sink,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: Dest,
    pub rate: f64,
    pub sigma2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inflow {
    pub to: usize,
    pub rate: f64,
}

/// Per-capita rates between compartments plus absolute inflows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateMatrix {
    n: usize,
    edges: Vec<Edge>,
    inflows: Vec<Inflow>,
}

impl RateMatrix {
    pub fn new(n_compartments: usize) -> Self {
        Self {
            n: n_compartments,
            ..Self::default()
        }
    }

    pub fn compartments(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn inflows(&self) -> &[Inflow] {
        &self.inflows
    }

    pub fn edge(mut self, from: usize, to: Dest, rate: f64, sigma2: f64) -> Result<Self> {
        if from >= self.n || matches!(to, Dest::To(j) if j >= self.n || j == from) {
            return Err(Error::input(format!("bad edge {from} -> {to:?}")));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::param(format!("rate {from}->{to:?}"), format!("{rate} is not a finite nonnegative rate")));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::param(format!("sigma2 {from}->{to:?}"), format!("{sigma2} is negative")));
        }
        self.edges.push(Edge { from, to, rate, sigma2 });
        Ok(self)
    }

    pub fn inflow(mut self, to: usize, rate: f64) -> Result<Self> {
        if to >= self.n {
            return Err(Error::input(format!("bad inflow destination {to}")));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::param(format!("inflow {to}"), format!("{rate} is not a finite nonnegative rate")));
        }
        self.inflows.push(Inflow { to, rate });
        Ok(self)
    }
}

/// Realized flows of one step: one count per edge, then one per inflow.
#[derive(Clone, Debug, PartialEq)]
pub struct Flows {
    pub edges: Vec<f64>,
    pub inflows: Vec<f64>,
}

/// One Euler-multinomial step; updates `counts` in place and returns the flows.
#[allow(clippy::needless_range_loop)]
pub fn euler_multinomial_step<R: Rng + ?Sized>(
    counts: &mut [f64],
    rates: &RateMatrix,
    delta: f64,
    rng: &mut R,
) -> Result<Flows> {
    if counts.len() != rates.n {
        return Err(Error::Dimension(format!(
            "{} counts for {} compartments",
            counts.len(),
            rates.n
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    if let Some(i) = counts.iter().position(|c| !(*c >= 0.0 && c.fract() == 0.0)) {
        return Err(Error::input(format!("count {} in compartment {i} is not a nonnegative integer", counts[i])));
    }
    let mut flows = vec![0.0; rates.edges.len()];
    let mut eff = Vec::new();
    let mut idx = Vec::new();
    let mut out = Vec::new();
    for src in 0..rates.n {
        eff.clear();
        idx.clear();
        for (k, e) in rates.edges.iter().enumerate().filter(|(_, e)| e.from == src) {
            let noise = gamma_noise(delta, e.sigma2, rng) / delta;
            eff.push(e.rate * noise);
            idx.push(k);
        }
        if idx.is_empty() {
            continue;
        }
        out.resize(idx.len(), 0.0);
        draw_exits(counts[src], &eff, delta, rng, &mut out);
        for (&k, &f) in idx.iter().zip(&out) {
            flows[k] = f;
        }
    }
    let inflows: Vec<f64> = rates.inflows.iter().map(|f| poisson(f.rate * delta, rng)).collect();
    for (e, &f) in rates.edges.iter().zip(&flows) {
        counts[e.from] -= f;
        if let Dest::To(j) = e.to {
            counts[j] += f;
        }
    }
    for (f, &k) in rates.inflows.iter().zip(&inflows) {
        counts[f.to] += k;
    }
    Ok(Flows { edges: flows, inflows })
}

/// Deaths from every compartment at `death_rates[i]`, each immediately
/// replaced by a birth into `birth_slot`. Returns deaths per compartment.
pub fn balanced_demography_step<R: Rng + ?Sized>(
    counts: &mut [f64],
    death_rates: &[f64],
    birth_slot: usize,
    delta: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if death_rates.len() != counts.len() || birth_slot >= counts.len() {
        return Err(Error::Dimension("death rates do not match compartments".into()));
    }
    let mut rm = RateMatrix::new(counts.len());
    for (i, &d) in death_rates.iter().enumerate() {
        if i != birth_slot {
            rm = rm.edge(i, Dest::To(birth_slot), d, 0.0)?;
        } else if !(d >= 0.0) {
            return Err(Error::param(format!("death rate {i}"), format!("{d} is negative")));
        }
    }
    let flows = euler_multinomial_step(counts, &rm, delta, rng)?;
    let mut deaths = vec![0.0; counts.len()];
    for (e, f) in rm.edges().iter().zip(flows.edges) {
        deaths[e.from] = f;
    }
    // Deaths in the birth compartment are replaced in place.
    deaths[birth_slot] = binomial(counts[birth_slot], -(-death_rates[birth_slot] * delta).exp_m1(), rng);
    Ok(deaths)
}

/// Flow-ODE derivative implied by a rate matrix: inflows minus outflows.
pub fn rate_derivative(rates: &RateMatrix, x: &[f64], dx: &mut [f64]) {
    dx.iter_mut().for_each(|d| *d = 0.0);
    for e in &rates.edges {
        let f = e.rate * x[e.from];
        dx[e.from] -= f;
        if let Dest::To(j) = e.to {
            dx[j] += f;
        }
    }
    for f in &rates.inflows {
        dx[f.to] += f.rate;
    }
}

/// Reusable buffers for [`rk4_step`].
#[derive(Clone, Debug, Default)]
pub struct Rk4Work {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

/// Classical fourth-order Runge–Kutta step. Slots listed in `clamp` that go
/// negative are reset to zero; the total clamped mass is returned.
///
/// `deriv(t, x, dx)` must fill `dx`. `names` labels slots in errors.
pub fn rk4_step<F>(
    x: &mut [f64],
    t: f64,
    h: f64,
    work: &mut Rk4Work,
    clamp: &[usize],
    names: &dyn Fn(usize) -> String,
    mut deriv: F,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    if work.tmp.len() != n {
        *work = Rk4Work::new(n);
    }
    let [k1, k2, k3, k4] = &mut work.k;
    let tmp = &mut work.tmp;
    deriv(t, x, k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    deriv(t + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    deriv(t + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    deriv(t + h, tmp, k4);
    for i in 0..n {
        let d = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        if !d.is_finite() {
            return Err(Error::NonFiniteDerivative(names(i)));
        }
        x[i] += h * d;
    }
    let mut clamped = 0.0;
    for &i in clamp {
        if x[i] < 0.0 {
            clamped -= x[i];
            x[i] = 0.0;
        }
    }
    Ok(clamped)
}

/// RK4 advance driven by a state-dependent rate matrix.
pub fn ode_step<F>(x: &mut [f64], t: f64, h: f64, rates: F) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> RateMatrix,
{
    let n = x.len();
    let mut work = Rk4Work::new(n);
    let clamp: Vec<usize> = (0..n).collect();
    rk4_step(x, t, h, &mut work, &clamp, &|i| format!("x[{i}]"), |t, s, dx| {
        rate_derivative(&rates(t, s), s, dx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use proptest::prelude::*;

    fn rng(k: u64) -> crate::rng::StreamRng {
        stream(99, Domain::Misc, k, 0)
    }

    #[test]
    fn zero_noise_is_exact() {
        assert_eq!(gamma_increment(0.02, 0.0, &mut rng(0)).unwrap(), 0.02);
        assert!(gamma_increment(0.0, 0.1, &mut rng(0)).is_err());
        assert!(gamma_increment(0.1, -0.1, &mut rng(0)).is_err());
    }

    #[test]
    fn closed_form_probabilities() {
        let mut p = [0.0];
        exit_probabilities(&[1.0], 0.1, &mut p);
        assert!((p[0] - 0.095163).abs() < 5e-7);
        let mut p = [0.0; 2];
        exit_probabilities(&[1.0, 3.0], 0.5, &mut p);
        assert!((p[0] - 0.21617).abs() < 5e-6);
        assert!((p[1] - 0.64850).abs() < 5e-6);
    }

    #[test]
    fn no_rates_no_flows() {
        let mut c = vec![10.0, 5.0];
        let rm = RateMatrix::new(2).edge(0, Dest::To(1), 0.0, 0.0).unwrap();
        let f = euler_multinomial_step(&mut c, &rm, 0.1, &mut rng(1)).unwrap();
        assert_eq!(f.edges, vec![0.0]);
        assert_eq!(c, vec![10.0, 5.0]);
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(RateMatrix::new(2).edge(0, Dest::Sink, -1.0, 0.0).is_err());
        assert!(RateMatrix::new(2).inflow(0, -1.0).is_err());
        assert!(poisson_inflow(-1.0, 1.0, &mut rng(0)).is_err());
        assert_eq!(poisson_inflow(0.0, 3.0, &mut rng(0)).unwrap(), 0.0);
    }

    #[test]
    fn poisson_mean() {
        let mut r = rng(2);
        let n = 100_000;
        let mean = (0..n).map(|_| poisson_inflow(100.0, 0.01, &mut r).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
        let zeros = (0..n).filter(|_| poisson_inflow(5.0, 1.0, &mut r).unwrap() == 0.0).count() as f64 / n as f64;
        let p = (-5.0f64).exp();
        assert!((zeros - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn balanced_demography_conserves() {
        let mut c = vec![600.0, 100.0, 300.0];
        let mut r = rng(3);
        let s0 = c[0];
        let mut deaths_elsewhere = 0.0;
        for _ in 0..365 {
            let d = balanced_demography_step(&mut c, &[0.0159; 3], 0, 1.0 / 365.0, &mut r).unwrap();
            deaths_elsewhere += d[1] + d[2];
            assert_eq!(c.iter().sum::<f64>(), 1000.0);
        }
        assert_eq!(c[0], s0 + deaths_elsewhere);

        let mut c = vec![0.0, 1000.0];
        balanced_demography_step(&mut c, &[0.0, 1e6], 0, 1.0, &mut r).unwrap();
        assert_eq!(c, vec![1000.0, 0.0]);
    }

    #[test]
    fn rk4_decay_accuracy() {
        let mut x = vec![1.0];
        let rm = RateMatrix::new(1).edge(0, Dest::Sink, 1.0, 0.0).unwrap();
        ode_step(&mut x, 0.0, 0.1, |_, _| rm.clone()).unwrap();
        assert!((x[0] - 0.9048374).abs() < 1e-7);

        let mut y = vec![3.0, 4.0];
        ode_step(&mut y, 0.0, 0.1, |_, _| RateMatrix::new(2)).unwrap();
        assert_eq!(y, vec![3.0, 4.0]);
    }

    #[test]
    fn rk4_reports_non_finite() {
        let mut x = vec![1.0, 1.0];
        let mut w = Rk4Work::new(2);
        let err = rk4_step(&mut x, 0.0, 0.1, &mut w, &[], &|i| ["S", "I"][i].to_string(), |_, _, dx| {
            dx[0] = 0.0;
            dx[1] = f64::NAN;
        })
        .unwrap_err();
        assert_eq!(err.to_string(), "non-finite derivative in compartment `I`");
    }

    #[test]
    fn rk4_clamps_undershoot() {
        let mut x = vec![0.01];
        let mut w = Rk4Work::new(1);
        let c = rk4_step(&mut x, 0.0, 1.0, &mut w, &[0], &|_| "x".into(), |_, _, dx| dx[0] = -1.0).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((c - 0.99).abs() < 1e-12);
    }

    #[test]
    fn subcritical_sir_infected_decreases() {
        // beta = 0.5, gamma = 1 per unit time, N = 1.
        let mut x = vec![0.99, 0.01, 0.0];
        let mut prev = x[1];
        for k in 0..100 {
            let t = k as f64 * 0.1;
            ode_step(&mut x, t, 0.1, |_, s| {
                RateMatrix::new(3)
                    .edge(0, Dest::To(1), 0.5 * s[1], 0.0)
                    .and_then(|m| m.edge(1, Dest::To(2), 1.0, 0.0))
                    .unwrap()
            })
            .unwrap();
            assert!(x[1] < prev);
            prev = x[1];
        }
    }

    #[test]
    fn overdispersion_increases_variance() {
        let n = 20_000;
        let var = |sigma2: f64, seed: u64| {
            let mut r = rng(seed);
            let rm = RateMatrix::new(2).edge(0, Dest::To(1), 2.0, sigma2).unwrap();
            let draws: Vec<f64> = (0..n)
                .map(|_| {
                    let mut c = vec![1000.0, 0.0];
                    euler_multinomial_step(&mut c, &rm, 0.1, &mut r).unwrap().edges[0]
                })
                .collect();
            let m = draws.iter().sum::<f64>() / n as f64;
            draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        let v0 = var(0.0, 10);
        let p = -(-0.2f64).exp_m1();
        let binom = 1000.0 * p * (1.0 - p);
        // Sample variance SE for near-normal draws is v*sqrt(2/(n-1)).
        assert!((v0 - binom).abs() < 3.0 * binom * (2.0 / (n - 1) as f64).sqrt());
        let v1 = var(0.5, 11);
        assert!(v1 - v0 > 3.0 * v0 * (4.0 / (n - 1) as f64).sqrt());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn flows_conserve_mass(
            counts in proptest::collection::vec(0u32..500, 3),
            rates in proptest::collection::vec(0.0f64..20.0, 4),
            sigma2 in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let mut c: Vec<f64> = counts.iter().map(|&v| v as f64).collect();
            let before = c.clone();
            let rm = RateMatrix::new(3)
                .edge(0, Dest::To(1), rates[0], sigma2).unwrap()
                .edge(0, Dest::Sink, rates[1], 0.0).unwrap()
                .edge(1, Dest::To(2), rates[2], 0.0).unwrap()
                .edge(2, Dest::To(0), rates[3], 0.0).unwrap()
                .inflow(0, 5.0).unwrap();
            let mut r = stream(seed, Domain::Misc, 0, 0);
            let f = euler_multinomial_step(&mut c, &rm, 0.05, &mut r).unwrap();
            let out0 = f.edges[0] + f.edges[1];
            prop_assert!(out0 <= before[0]);
            prop_assert_eq!(c[0], before[0] - out0 + f.edges[3] + f.inflows[0]);
            prop_assert_eq!(c[1], before[1] + f.edges[0] - f.edges[2]);
            prop_assert_eq!(c[2], before[2] + f.edges[2] - f.edges[3]);
            prop_assert!(c.iter().all(|v| *v >= 0.0));
        }
    }
}
