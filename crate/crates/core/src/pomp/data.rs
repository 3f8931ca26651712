use crate::error::{Error, Result};

use super::grid::TimeGrid;

/// Reported case counts, stored time-major (`values[n * U + u]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    unit_names: Vec<String>,
    times: Vec<f64>,
    values: Vec<Option<f64>>,
}

impl ObservationSeries {
    /// `by_unit[u][n]` is the count for unit `u` at `times[n]`.
    pub fn new(unit_names: Vec<String>, times: Vec<f64>, by_unit: Vec<Vec<Option<f64>>>) -> Result<Self> {
        Self::build(unit_names, times, by_unit, true)
    }

    /// Like [`ObservationSeries::new`] but admits any finite real values.
    pub fn real(unit_names: Vec<String>, times: Vec<f64>, by_unit: Vec<Vec<Option<f64>>>) -> Result<Self> {
        Self::build(unit_names, times, by_unit, false)
    }

    fn build(
        unit_names: Vec<String>,
        times: Vec<f64>,
        by_unit: Vec<Vec<Option<f64>>>,
        counts: bool,
    ) -> Result<Self> {
        let n_units = unit_names.len();
        if by_unit.len() != n_units {
            return Err(Error::Dimension(format!(
                "{} unit names but {} unit series",
                n_units,
                by_unit.len()
            )));
        }
        let n = times.len();
        let mut values = vec![None; n * n_units];
        for (u, series) in by_unit.iter().enumerate() {
            if series.len() != n {
                return Err(Error::Dimension(format!(
                    "unit `{}` has {} values for {} times",
                    unit_names[u],
                    series.len(),
                    n
                )));
            }
            for (i, v) in series.iter().enumerate() {
                if let Some(y) = v {
                    let ok = if counts {
                        y.is_finite() && *y >= 0.0 && y.fract() == 0.0
                    } else {
                        y.is_finite()
                    };
                    if !ok {
                        return Err(Error::Data(format!(
                            "unit `{}` time index {i}: value {y} is not a valid observation",
                            unit_names[u]
                        )));
                    }
                }
                values[i * n_units + u] = *v;
            }
        }
        Ok(Self {
            unit_names,
            times,
            values,
        })
    }

    /// Single-unit series from plain values.
    pub fn single(name: &str, times: Vec<f64>, values: Vec<Option<f64>>) -> Result<Self> {
        Self::new(vec![name.to_string()], times, vec![values])
    }

    pub fn unit_names(&self) -> &[String] {
        &self.unit_names
    }

    pub fn n_units(&self) -> usize {
        self.unit_names.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, unit: usize, n: usize) -> Option<f64> {
        self.values[n * self.unit_names.len() + unit]
    }

    /// All units at time index `n`.
    pub fn row(&self, n: usize) -> &[Option<f64>] {
        let u = self.unit_names.len();
        &self.values[n * u..(n + 1) * u]
    }

    pub fn unit_series(&self, unit: usize) -> Vec<Option<f64>> {
        (0..self.len()).map(|n| self.get(unit, n)).collect()
    }

    /// Restrict to the listed units, in the given order.
    pub fn select_units(&self, units: &[usize]) -> Result<Self> {
        let names = units.iter().map(|&u| self.unit_names[u].clone()).collect();
        let series = units.iter().map(|&u| self.unit_series(u)).collect();
        Self::real(names, self.times.clone(), series)
    }

    /// Check that the series lines up with `grid` and a model with `n_units` units.
    pub fn check_against(&self, grid: &TimeGrid, n_units: usize) -> Result<()> {
        if self.n_units() != n_units {
            return Err(Error::Dimension(format!(
                "data has {} units, model has {n_units}",
                self.n_units()
            )));
        }
        if self.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "data has {} times, grid has {}",
                self.len(),
                grid.len()
            )));
        }
        for (n, (a, b)) in self.times.iter().zip(grid.obs_times()).enumerate() {
            if (a - b).abs() > 1e-9 {
                return Err(Error::Dimension(format!(
                    "data time {a} differs from grid time {b} at index {n}"
                )));
            }
        }
        Ok(())
    }

    /// Sum over units per time, treating missing as zero.
    pub fn national_totals(&self) -> Vec<f64> {
        (0..self.len())
            .map(|n| self.row(n).iter().map(|v| v.unwrap_or(0.0)).sum())
            .collect()
    }
}
