//! Periodic cubic B-spline seasonality with a log-linear trend.

use crate::units::WEEK;

/// Number of basis functions used by the national model.
pub const N_BASIS: usize = 6;

/// Centred cardinal cubic B-spline (support `[-2, 2]`).
#[inline]
fn cardinal_cubic(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Evaluate `out.len()` uniform-knot periodic cubic B-splines at `t`.
///
/// Basis `j` is centred at `t = j * period / n`. Requires `n >= 4`.
pub fn periodic_bspline(t: f64, period: f64, out: &mut [f64]) {
    let n = out.len();
    assert!(n >= 4, "periodic cubic basis needs at least 4 functions");
    let x = (t / period).rem_euclid(1.0) * n as f64;
    let half = n as f64 / 2.0;
    for (j, o) in out.iter_mut().enumerate() {
        let mut d = x - j as f64;
        if d >= half {
            d -= n as f64;
        } else if d < -half {
            d += n as f64;
        }
        *o = cardinal_cubic(d);
    }
}

/// Rescale `t` onto `[-1, 1]` across `[t0, tn]`.
#[inline]
pub fn trend_time(t: f64, t0: f64, tn: f64) -> f64 {
    (t - 0.5 * (tn + t0)) / (0.5 * (tn - t0))
}

/// Seasonal transmission rate in yr⁻¹:
/// `(1 wk⁻¹) * exp(Σ β_j s_j(t) + ζ t̄)`.
pub fn seasonal_beta(t: f64, coeffs: &[f64], zeta: f64, t0: f64, tn: f64) -> f64 {
    let mut s = [0.0; 16];
    let s = &mut s[..coeffs.len()];
    periodic_bspline(t, 1.0, s);
    let log: f64 = coeffs.iter().zip(s.iter()).map(|(b, s)| b * s).sum::<f64>() + zeta * trend_time(t, t0, tn);
    log.exp() / WEEK
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Cox–de Boor recursion on an explicit knot vector.
    fn de_boor(i: usize, k: usize, knots: &[f64], x: f64) -> f64 {
        if k == 0 {
            return if knots[i] <= x && x < knots[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + k] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * de_boor(i, k - 1, knots, x);
        }
        let d2 = knots[i + k + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + k + 1] - x) / d2 * de_boor(i + 1, k - 1, knots, x);
        }
        v
    }

    /// Periodic basis `j` as the sum of all shifted copies of a degree-3
    /// B-spline whose support starts two knots before `j / n`.
    fn reference_basis(j: usize, n: usize, t: f64) -> f64 {
        let x = t.rem_euclid(1.0);
        let knots: Vec<f64> = (-3 * n as i64..=3 * n as i64).map(|k| k as f64 / n as f64).collect();
        let offset = 3 * n;
        let mut total = 0.0;
        for shift in -1i64..=1 {
            let start = offset as i64 + j as i64 - 2 + shift * n as i64;
            if start >= 0 && (start as usize) + 4 < knots.len() {
                total += de_boor(start as usize, 3, &knots, x);
            }
        }
        total
    }

    #[test]
    fn matches_de_boor() {
        let mut s = [0.0; N_BASIS];
        for k in 0..500 {
            let t = k as f64 / 500.0 + 0.0013;
            periodic_bspline(t, 1.0, &mut s);
            for (j, v) in s.iter().enumerate() {
                let r = reference_basis(j, N_BASIS, t);
                assert!((v - r).abs() < 1e-12, "t={t} j={j}: {v} vs {r}");
            }
        }
    }

    #[test]
    fn flat_coefficients_give_one_per_week() {
        let b = seasonal_beta(2013.37, &[0.0; 6], 0.0, 2010.0, 2019.0);
        assert!((b * WEEK - 1.0).abs() < 1e-14);
        let b = seasonal_beta(2013.37, &[0.7; 6], 0.0, 2010.0, 2019.0);
        assert!((b * WEEK - 0.7f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn trend_ratio() {
        let (t0, tn) = (2010.8, 2019.0);
        let r = seasonal_beta(tn, &[0.0; 6], -0.0378, t0, tn) / seasonal_beta(t0, &[0.0; 6], -0.0378, t0, tn);
        assert!((r - (-0.0756f64).exp()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn partition_of_unity(t in -5.0f64..5.0) {
            let mut s = [0.0; N_BASIS];
            periodic_bspline(t, 1.0, &mut s);
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(s.iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn periodic_without_trend(t in 2010.0f64..2018.0, c in proptest::collection::vec(-2.0f64..2.0, 6)) {
            let a = seasonal_beta(t, &c, 0.0, 2010.0, 2019.0);
            let b = seasonal_beta(t + 1.0, &c, 0.0, 2010.0, 2019.0);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }
}
