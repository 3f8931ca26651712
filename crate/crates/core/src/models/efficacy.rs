use crate::error::{Error, Result};
use crate::units::WEEK;

/// Correction for reduced efficacy in the under-five share of the population.
pub fn under_five_correction() -> f64 {
    1.0 - (1.0 - 0.4688) * 0.11
}

/// Adult vaccine efficacy as a step function of weeks since vaccination.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficacyCurve {
    /// `(weeks_since, one_dose, two_dose)`, sorted by `weeks_since`.
    steps: Vec<(f64, f64, f64)>,
}

impl Default for EfficacyCurve {
    /// Both regimens at 0.519 for a year; one dose then lapses, two doses
    /// hold to week 260.
    fn default() -> Self {
        Self {
            steps: vec![(0.0, 0.519, 0.519), (52.0, 0.0, 0.519), (260.0, 0.0, 0.0)],
        }
    }
}

impl EfficacyCurve {
    pub fn new(mut steps: Vec<(f64, f64, f64)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Data("efficacy curve has no breakpoints".into()));
        }
        steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in steps.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Data(format!("duplicate efficacy breakpoint at week {}", w[0].0)));
            }
            if w[1].1 > w[0].1 || w[1].2 > w[0].2 {
                return Err(Error::Data(format!("efficacy increases at week {}", w[1].0)));
            }
        }
        for &(_, a, b) in &steps {
            if !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) {
                return Err(Error::Data("efficacy values must lie in [0, 1)".into()));
            }
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[(f64, f64, f64)] {
        &self.steps
    }

    /// Efficacy `elapsed` years after vaccination; zero before vaccination.
    pub fn at(&self, elapsed: f64, two_dose: bool) -> f64 {
        if elapsed < 0.0 {
            return 0.0;
        }
        let weeks = elapsed / WEEK + 1e-9;
        let mut v = 0.0;
        for &(w, a, b) in &self.steps {
            if w <= weeks {
                v = if two_dose { b } else { a };
            } else {
                break;
            }
        }
        v
    }
}
