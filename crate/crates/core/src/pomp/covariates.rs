use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant per-unit rainfall on a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Rainfall {
    pub start: f64,
    pub step: f64,
    /// `values[u][k]` holds on `[start + k*step, start + (k+1)*step)`.
    pub values: Vec<Vec<f64>>,
    pub unit_names: Vec<String>,
}

impl Rainfall {
    pub fn end(&self) -> f64 {
        let n = self.values.first().map_or(0, Vec::len);
        self.start + n as f64 * self.step
    }

    pub fn at(&self, unit: usize, t: f64) -> Result<f64> {
        let k = ((t - self.start) / self.step + 1e-9).floor();
        let series = &self.values[unit];
        if k < 0.0 || k as usize >= series.len() {
            return Err(Error::MissingRainfall {
                unit: self.unit_names[unit].clone(),
                time: t,
            });
        }
        Ok(series[k as usize])
    }
}

/// Divide each unit's series by its own maximum.
pub fn standardize_rainfall(raw: &[Vec<f64>], unit_names: &[String]) -> Result<Vec<Vec<f64>>> {
    raw.iter()
        .zip(unit_names)
        .map(|(series, name)| {
            if series.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Data(format!(
                    "rainfall for `{name}` contains negative or non-finite values"
                )));
            }
            let max = series.iter().cloned().fold(0.0, f64::max);
            if max <= 0.0 {
                return Err(Error::Data(format!(
                    "rainfall for `{name}` is all zero; cannot standardize"
                )));
            }
            Ok(series.iter().map(|v| v / max).collect())
        })
        .collect()
}

/// A vaccination campaign in one unit: doses delivered uniformly over
/// `[start, end)` (years).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub unit: usize,
    pub start: f64,
    pub end: f64,
    pub doses_one: f64,
    pub doses_two: f64,
}

impl Campaign {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    /// Persons per year receiving one dose (`two == false`) or two doses at `t`.
    pub fn dose_rate(&self, t: f64, two: bool) -> f64 {
        if !self.is_active(t) {
            return 0.0;
        }
        let doses = if two { self.doses_two } else { self.doses_one };
        doses / (self.end - self.start)
    }
}

/// Time-indexed external inputs to a model.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariateTable {
    span: (f64, f64),
    rainfall: Option<Rainfall>,
    campaigns: Vec<Campaign>,
}

impl Default for CovariateTable {
    fn default() -> Self {
        Self::unbounded()
    }
}

impl CovariateTable {
    /// No covariates; covers every time.
    pub fn unbounded() -> Self {
        Self {
            span: (f64::NEG_INFINITY, f64::INFINITY),
            rainfall: None,
            campaigns: Vec::new(),
        }
    }

    pub fn with_rainfall(mut self, rain: Rainfall) -> Self {
        let (a, b) = (rain.start, rain.end());
        self.span = (self.span.0.max(a), self.span.1.min(b));
        self.rainfall = Some(rain);
        self
    }

    pub fn with_campaigns(mut self, campaigns: Vec<Campaign>) -> Self {
        self.campaigns = campaigns;
        self
    }

    /// Restrict the declared coverage (e.g. to the span of a loaded file).
    pub fn with_span(mut self, start: f64, end: f64) -> Self {
        self.span = (self.span.0.max(start), self.span.1.min(end));
        self
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn rainfall(&self) -> Option<&Rainfall> {
        self.rainfall.as_ref()
    }

    pub fn campaigns(&self) -> &[Campaign] {
        &self.campaigns
    }

    pub fn check_coverage(&self, start: f64, end: f64) -> Result<()> {
        let tol = 1e-9;
        if start < self.span.0 - tol || end > self.span.1 + tol {
            return Err(Error::CovariateGap {
                start,
                end,
                avail_start: self.span.0,
                avail_end: self.span.1,
            });
        }
        Ok(())
    }

    pub fn rainfall_at(&self, unit: usize, t: f64) -> Result<f64> {
        match &self.rainfall {
            Some(r) => r.at(unit, t),
            None => Err(Error::MissingRainfall {
                unit: format!("#{unit}"),
                time: t,
            }),
        }
    }
}
