//! Autoregressive negative binomial benchmark and AIC.

use rand::Rng;

use crate::error::{Error, Result};
use crate::inference::{nelder_mead, NelderMeadSettings};
use crate::models::measure::{nb_logpmf, nb_sample};
use crate::pomp::ObservationSeries;

/// Intercept floor used when a series carries no information.
pub const ALPHA_FLOOR: f64 = 1e-6;
/// Free parameters per fitted series.
pub const PARAMS_PER_SERIES: usize = 3;

/// `y_n ~ NB(mean = alpha + b y_{n-1}, size = phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArNb {
    pub alpha: f64,
    pub b: f64,
    pub phi: f64,
}

impl ArNb {
    /// Conditional log likelihood given the first observation. Terms with a
    /// missing value or missing predecessor are omitted.
    pub fn loglik(&self, y: &[Option<f64>]) -> f64 {
        y.windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                (Some(prev), Some(cur)) => Some(nb_logpmf(cur, self.alpha + self.b * prev, self.phi)),
                _ => None,
            })
            .sum()
    }

    /// Simulate `n` values starting from `y0`.
    pub fn simulate<R: Rng + ?Sized>(&self, y0: f64, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut prev = y0;
        for _ in 0..n {
            prev = nb_sample(self.alpha + self.b * prev, self.phi, rng);
            out.push(prev);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct UnitFit {
    pub unit: String,
    pub params: ArNb,
    pub loglik: f64,
}

#[derive(Clone, Debug)]
pub struct BenchmarkFit {
    pub units: Vec<UnitFit>,
    /// Sum of unit log likelihoods in unit order.
    pub loglik: f64,
    pub n_params: usize,
    pub aic: f64,
}

/// `2k - 2 loglik`.
pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

/// Fit the benchmark to each unit independently, or to the national totals
/// when `per_unit` is false.
pub fn fit_benchmark(data: &ObservationSeries, per_unit: bool) -> Result<BenchmarkFit> {
    let series: Vec<(String, Vec<Option<f64>>)> = if per_unit {
        (0..data.n_units())
            .map(|u| (data.unit_names()[u].clone(), data.unit_series(u)))
            .collect()
    } else {
        let totals = (0..data.len())
            .map(|n| {
                let row = data.row(n);
                row.iter().all(Option::is_some).then(|| row.iter().flatten().sum())
            })
            .collect();
        vec![("national".to_string(), totals)]
    };
    let units = series
        .into_iter()
        .map(|(unit, y)| {
            let (params, loglik) = fit_series(&y).map_err(|e| Error::Data(format!("unit `{unit}`: {e}")))?;
            Ok(UnitFit { unit, params, loglik })
        })
        .collect::<Result<Vec<_>>>()?;
    let loglik = units.iter().map(|u| u.loglik).sum();
    let n_params = PARAMS_PER_SERIES * units.len();
    Ok(BenchmarkFit {
        units,
        loglik,
        n_params,
        aic: aic(loglik, n_params),
    })
}

/// Maximum likelihood fit of one series.
pub fn fit_series(y: &[Option<f64>]) -> Result<(ArNb, f64)> {
    let pairs: Vec<(f64, f64)> = y
        .windows(2)
        .filter_map(|w| Some((w[0]?, w[1]?)))
        .collect();
    if y.len() < 3 || pairs.is_empty() {
        return Err(Error::input("the benchmark needs at least 3 observations with one consecutive pair"));
    }
    if pairs.iter().all(|&(a, b)| a == 0.0 && b == 0.0) {
        log::warn!("benchmark series is all zero; intercept pinned at {ALPHA_FLOOR}");
        let p = ArNb {
            alpha: ALPHA_FLOOR,
            b: 0.0,
            phi: 1.0,
        };
        return Ok((p, p.loglik(y)));
    }
    let n = pairs.len() as f64;
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let var = pairs.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / n;
    let phi0 = if var > mean { (mean * mean / (var - mean)).clamp(0.1, 1e3) } else { 1e3 };
    let settings = NelderMeadSettings {
        step: 0.5,
        xtol: 1e-7,
        ftol: 1e-10,
        ..NelderMeadSettings::default()
    };

    // b = 0 restriction, then the full model started from it.
    let restricted = nelder_mead(
        |x| -ArNb { alpha: x[0].exp(), b: 0.0, phi: x[1].exp() }.loglik(y),
        &[mean.max(ALPHA_FLOOR).ln(), phi0.ln()],
        &settings,
    );
    let base = ArNb {
        alpha: restricted.x[0].exp(),
        b: 0.0,
        phi: restricted.x[1].exp(),
    };
    let base_ll = -restricted.value;
    let (sxy, sxx, mx) = {
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - mean)).sum();
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy, sxx, mx)
    };
    let b0 = if sxx > 0.0 { (sxy / sxx).clamp(0.01, 0.95) } else { 0.01 };
    let a0 = (mean - b0 * mx).max(0.1 * mean).max(ALPHA_FLOOR);
    let full = nelder_mead(
        |x| -ArNb { alpha: x[0].exp(), b: x[1].exp(), phi: x[2].exp() }.loglik(y),
        &[a0.ln(), b0.ln(), phi0.ln()],
        &settings,
    );
    let fitted = ArNb {
        alpha: full.x[0].exp(),
        b: full.x[1].exp(),
        phi: full.x[2].exp(),
    };
    if -full.value >= base_ll {
        Ok((fitted, -full.value))
    } else {
        Ok((base, base_ll))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn series(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn aic_examples() {
        assert!((aic(-2728.1, 15) - 5486.3).abs() <= 0.2);
        assert!((aic(-21957.3, 6) - 43926.5).abs() <= 0.2);
        assert!((aic(-17332.9, 34) - 34733.9).abs() <= 0.2);
        assert_eq!(aic(0.0, 0), 0.0);
        assert_eq!(aic(-10.5, 4) - aic(-10.5, 3), 2.0);
    }

    #[test]
    fn missing_terms_are_omitted() {
        let p = ArNb { alpha: 2.0, b: 0.5, phi: 3.0 };
        let y = vec![Some(1.0), None, Some(4.0), Some(2.0)];
        assert_eq!(p.loglik(&y), nb_logpmf(2.0, 4.0, 3.0));
    }

    #[test]
    fn all_zero_series_is_pinned() {
        let (p, ll) = fit_series(&series(&[0.0; 20])).unwrap();
        assert_eq!(p.alpha, ALPHA_FLOOR);
        assert!(ll <= 0.0 && ll > -1e-3);
        assert!(fit_series(&series(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn iid_data_gives_small_b() {
        let truth = ArNb { alpha: 20.0, b: 0.0, phi: 50.0 };
        let y = truth.simulate(20.0, 1000, &mut stream(3, Domain::Misc, 0, 0));
        let (p, _) = fit_series(&series(&y)).unwrap();
        assert!(p.b < 0.05, "{p:?}");
    }

    #[test]
    fn national_totals_fit() {
        let truth = ArNb { alpha: 5.0, b: 0.6, phi: 10.0 };
        let mut rng = stream(4, Domain::Misc, 0, 0);
        let a = truth.simulate(10.0, 200, &mut rng);
        let b = truth.simulate(10.0, 200, &mut rng);
        let times: Vec<f64> = (0..200).map(f64::from).collect();
        let data =
            ObservationSeries::new(vec!["a".into(), "b".into()], times, vec![series(&a), series(&b)]).unwrap();
        let per = fit_benchmark(&data, true).unwrap();
        assert_eq!(per.units.len(), 2);
        assert_eq!(per.loglik, per.units[0].loglik + per.units[1].loglik);
        assert_eq!(per.n_params, 6);
        let nat = fit_benchmark(&data, false).unwrap();
        assert_eq!(nat.units.len(), 1);
        assert_eq!(nat.aic, aic(nat.loglik, 3));
    }
}
