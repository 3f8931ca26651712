//! Monte Carlo adjusted profile confidence intervals.
//!
//! A loess-style local quadratic smooth locates the maximum. A weighted
//! quadratic fit around it estimates the Monte Carlo variance of the
//! maximizer, which inflates the usual chi-square cutoff.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct McapSettings {
    pub level: f64,
    /// Fraction of points in each local neighborhood.
    pub span: f64,
    /// Evaluation points for the smoothed curve.
    pub resolution: usize,
}

impl Default for McapSettings {
    fn default() -> Self {
        Self {
            level: 0.95,
            span: 0.75,
            resolution: 1000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct McapResult {
    pub points: Vec<(f64, f64)>,
    pub grid: Vec<f64>,
    pub smoothed: Vec<f64>,
    /// Maximizer of the smoothed curve.
    pub mle: f64,
    /// Maximizer of the local quadratic fit.
    pub quadratic_max: f64,
    pub ci: (f64, f64),
    /// The interval reaches the edge of the profiled range.
    pub open_lower: bool,
    pub open_upper: bool,
    /// Drop from the smoothed maximum defining the interval.
    pub cutoff: f64,
    pub se_mc: f64,
    pub se_stat: f64,
    pub settings: McapSettings,
}

impl McapResult {
    /// Range of grid points within `cutoff` of the smoothed maximum.
    pub fn level_set(&self, cutoff: f64) -> (f64, f64) {
        let max = self.smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inside = self.grid.iter().zip(&self.smoothed).filter(|(_, s)| max - **s < cutoff);
        inside.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| (lo.min(*x), hi.max(*x)))
    }
}

/// Tricube kernel on `[0, 1)`.
fn tricube(r: f64) -> f64 {
    if r < 1.0 {
        (1.0 - r.powi(3)).powi(3)
    } else {
        0.0
    }
}

/// Local quadratic regression at `x0` using the `ceil(span * n)` nearest
/// points (at least 5) with tricube weights.
pub fn loess(xs: &[f64], ys: &[f64], span: f64, x0: f64) -> Result<f64> {
    let n = xs.len();
    let q = ((span * n as f64).floor() as usize).max(5).min(n);
    let mut d: Vec<f64> = xs.iter().map(|x| (x - x0).abs()).collect();
    d.sort_by(f64::total_cmp);
    let mut h = d[q - 1];
    if span > 1.0 {
        h *= span;
    }
    if h <= 0.0 {
        return Err(Error::input("loess neighborhood has zero width"));
    }
    // Neighborhood edge is inclusive; widen so the q-th point keeps weight.
    let h = h * (1.0 + 1e-9);
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for (x, y) in xs.iter().zip(ys) {
        let w = tricube((x - x0).abs() / h);
        if w == 0.0 {
            continue;
        }
        let z = (x - x0) / h;
        let row = [1.0, z, z * z];
        for i in 0..3 {
            xty[i] += w * row[i] * y;
            for j in 0..3 {
                xtx[i][j] += w * row[i] * row[j];
            }
        }
    }
    let c = solve(&xtx, &xty).ok_or_else(|| Error::input("loess neighborhood is degenerate"))?;
    Ok(c[0])
}

/// Solve a 3×3 system by Gaussian elimination with partial pivoting.
fn solve(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                let pivot = m[col];
                for (dst, src) in m[r][col..].iter_mut().zip(&pivot[col..]) {
                    *dst -= f * src;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn inverse(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let col = solve(a, &e)?;
        for i in 0..3 {
            inv[i][k] = col[i];
        }
    }
    Some(inv)
}

/// MCAP confidence interval from `(parameter, loglik)` evaluations.
/// Non-finite log likelihoods are dropped.
pub fn mcap_ci(points: &[(f64, f64)], settings: &McapSettings) -> Result<McapResult> {
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(Error::input(format!("confidence level {} outside (0, 1)", settings.level)));
    }
    if !(settings.span > 0.0) || settings.resolution < 2 {
        return Err(Error::input("span must be positive and resolution at least 2"));
    }
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 5 {
        return Err(Error::input(format!(
            "profile needs at least 5 distinct points with finite log likelihood, got {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let k = settings.resolution;
    let grid: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
    let smoothed = grid
        .iter()
        .map(|&g| loess(&xs, &ys, settings.span, g))
        .collect::<Result<Vec<_>>>()?;
    let imax = (0..k).max_by(|&a, &b| smoothed[a].total_cmp(&smoothed[b])).expect("nonempty grid");
    let mle = grid[imax];

    let (quadratic_max, a, se_mc2) = quadratic_fit(&xs, &ys, mle, settings.span);
    let chi = ChiSquared::new(1.0).expect("one degree of freedom").inverse_cdf(settings.level);
    let (cutoff, se_mc, se_stat) = if a > 0.0 && se_mc2.is_finite() {
        (chi * (a * se_mc2 + 0.5), se_mc2.sqrt(), (1.0 / (2.0 * a)).sqrt())
    } else {
        log::warn!("profile is not locally concave; using the uncorrected cutoff");
        (chi / 2.0, f64::NAN, f64::NAN)
    };
    let mut out = McapResult {
        points: pts,
        grid,
        smoothed,
        mle,
        quadratic_max,
        ci: (f64::NAN, f64::NAN),
        open_lower: false,
        open_upper: false,
        cutoff,
        se_mc,
        se_stat,
        settings: *settings,
    };
    out.ci = out.level_set(cutoff);
    out.open_lower = out.ci.0 <= lo;
    out.open_upper = out.ci.1 >= hi;
    Ok(out)
}

/// Weighted fit of `y = c + b x - a x²` around `center`; returns the
/// quadratic's maximizer, `a`, and the delta-method variance of the maximizer.
fn quadratic_fit(xs: &[f64], ys: &[f64], center: f64, span: f64) -> (f64, f64, f64) {
    let n = xs.len();
    let dist: Vec<f64> = xs.iter().map(|x| (x - center).abs()).collect();
    let mut sorted = dist.clone();
    sorted.sort_by(f64::total_cmp);
    let kth = sorted[((span * n as f64) as usize).clamp(1, n) - 1];
    let included: Vec<bool> = dist.iter().map(|&d| d < kth).collect();
    let maxdist = dist
        .iter()
        .zip(&included)
        .filter(|(_, &inc)| inc)
        .map(|(d, _)| *d)
        .fold(0.0, f64::max);
    let w: Vec<f64> = dist
        .iter()
        .zip(&included)
        .map(|(&d, &inc)| if inc && maxdist > 0.0 { tricube(d / maxdist) } else { 0.0 })
        .collect();
    let xbar = center;
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        let z = xs[i] - xbar;
        let row = [1.0, z, -z * z];
        for r in 0..3 {
            xty[r] += w[i] * row[r] * ys[i];
            for c in 0..3 {
                xtx[r][c] += w[i] * row[r] * row[c];
            }
        }
    }
    let (Some(coef), Some(inv)) = (solve(&xtx, &xty), inverse(&xtx)) else {
        return (f64::NAN, f64::NAN, f64::NAN);
    };
    let positive = w.iter().filter(|&&v| v > 0.0).count();
    let rss: f64 = (0..n)
        .map(|i| {
            let z = xs[i] - xbar;
            w[i] * (ys[i] - coef[0] - coef[1] * z + coef[2] * z * z).powi(2)
        })
        .sum();
    let sigma2 = if positive > 3 { rss / (positive - 3) as f64 } else { f64::NAN };
    let (b, a) = (coef[1], coef[2]);
    let (var_b, var_a, cov_ab) = (sigma2 * inv[1][1], sigma2 * inv[2][2], sigma2 * inv[1][2]);
    let se_mc2 = (var_b - 2.0 * b / a * cov_ab + b * b / (a * a) * var_a) / (4.0 * a * a);
    (xbar + b / (2.0 * a), a, se_mc2)
}
