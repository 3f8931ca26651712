//! Derivative-free minimization: Nelder–Mead with restarts.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadSettings {
    /// Initial simplex edge along each coordinate.
    pub step: f64,
    /// Convergence when the simplex spans less than this in every coordinate.
    pub xtol: f64,
    /// ... and the objective spread is below this.
    pub ftol: f64,
    pub max_evals: usize,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        Self {
            step: 0.1,
            xtol: 1e-9,
            ftol: 1e-12,
            max_evals: 20_000,
            restarts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`. Non-finite values are treated as `+inf`.
///
/// After each convergence the search restarts from a fresh simplex around the
/// best point; it stops once a restart fails to improve by more than `ftol`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], s: &NelderMeadSettings) -> Optimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best = x0.to_vec();
    let mut best_f = eval(&best, &mut evals);
    if x0.is_empty() {
        return Optimum {
            x: best,
            value: best_f,
            evals,
            converged: true,
        };
    }
    let mut converged = false;
    for _ in 0..=s.restarts {
        let (x, fx, conv) = simplex_search(&mut eval, &best, best_f, s, &mut evals);
        let improved = best_f - fx > s.ftol * (1.0 + fx.abs());
        if fx < best_f {
            best = x;
            best_f = fx;
        }
        converged = conv;
        if !improved || evals >= s.max_evals {
            break;
        }
    }
    Optimum {
        x: best,
        value: best_f,
        evals,
        converged,
    }
}

fn simplex_search<E>(eval: &mut E, x0: &[f64], f0: f64, s: &NelderMeadSettings, evals: &mut usize) -> (Vec<f64>, f64, bool)
where
    E: FnMut(&[f64], &mut usize) -> f64,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut fs = vec![f0];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += s.step;
        fs.push(eval(&p, evals));
        pts.push(p);
    }
    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        let (lo, hi) = (order[0], order[n]);
        let spread = (0..n)
            .map(|k| pts.iter().map(|p| (p[k] - pts[lo][k]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let fspread = fs[hi] - fs[lo];
        if spread <= s.xtol && (fspread <= s.ftol * (1.0 + fs[lo].abs()) || !fspread.is_finite()) {
            return (pts[lo].clone(), fs[lo], true);
        }
        if *evals >= s.max_evals {
            return (pts[lo].clone(), fs[lo], false);
        }
        let second = order[n - 1];
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[hi]).map(|(c, h)| c + t * (h - c)).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr, evals);
        if fr < fs[lo] {
            let xe = along(-2.0);
            let fe = eval(&xe, evals);
            if fe < fr {
                pts[hi] = xe;
                fs[hi] = fe;
            } else {
                pts[hi] = xr;
                fs[hi] = fr;
            }
            continue;
        }
        if fr < fs[second] {
            pts[hi] = xr;
            fs[hi] = fr;
            continue;
        }
        let (xc, fc) = if fr < fs[hi] {
            let x = along(-0.5);
            let v = eval(&x, evals);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, evals);
            (x, v)
        };
        if fc < fs[hi].min(fr) {
            pts[hi] = xc;
            fs[hi] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = pts[lo].clone();
        for &i in &order[1..] {
            for (p, b) in pts[i].iter_mut().zip(&best) {
                *p = b + 0.5 * (*p - b);
            }
            fs[i] = eval(&pts[i], evals);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &NelderMeadSettings::default());
        assert!((r.x[0] - 3.0).abs() < 1e-6, "{r:?}");
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &NelderMeadSettings::default());
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) + x[1] * x[1] };
        let r = nelder_mead(f, &[2.0, 1.0], &NelderMeadSettings::default());
        assert!((r.x[0] - 0.5).abs() < 1e-6 && r.x[1].abs() < 1e-6);
    }

    #[test]
    fn empty_problem_is_a_single_evaluation() {
        let r = nelder_mead(|_| 4.0, &[], &NelderMeadSettings::default());
        assert_eq!((r.value, r.evals), (4.0, 1));
    }
}
