use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomp::Campaign;
use crate::units::WEEK;

use super::geography::GeographyData;

/// One department's planned campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartmentCampaign {
    pub department: String,
    /// Start time (decimal years).
    pub start: f64,
    pub duration_weeks: f64,
    pub doses_one: f64,
    pub doses_two: f64,
}

/// A vaccination scenario: per-department schedules and a horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub campaigns: Vec<DepartmentCampaign>,
    pub horizon_weeks: usize,
}

/// Default share of a department receiving two doses, and one dose.
pub const TWO_DOSE_COVERAGE: f64 = 0.7;
pub const ONE_DOSE_COVERAGE: f64 = 0.1;
pub const DEFAULT_HORIZON_WEEKS: usize = 520;

impl ScenarioSpec {
    /// Built-in scenarios `V0`..`V4` starting at `start`. Departments are
    /// vaccinated one after another in canonical order, each for an equal
    /// share of the programme duration.
    pub fn builtin(id: &str, geo: &GeographyData, start: f64) -> Result<Self> {
        let (departments, weeks): (Vec<&str>, f64) = match id {
            "V0" => (vec![], 0.0),
            "V1" => (vec!["Artibonite", "Centre"], 104.0),
            "V2" => (vec!["Artibonite", "Centre", "Ouest"], 104.0),
            "V3" => (geo.names.iter().map(String::as_str).collect(), 260.0),
            "V4" => (geo.names.iter().map(String::as_str).collect(), 104.0),
            other => return Err(Error::input(format!("unknown scenario `{other}`"))),
        };
        let k = departments.len().max(1) as f64;
        let each = weeks / k;
        let mut campaigns = Vec::with_capacity(departments.len());
        for (i, name) in departments.iter().enumerate() {
            let u = geo.index_of(name)?;
            let pop = geo.population[u];
            campaigns.push(DepartmentCampaign {
                department: name.to_string(),
                start: start + i as f64 * each * WEEK,
                duration_weeks: each,
                doses_one: (ONE_DOSE_COVERAGE * pop).round(),
                doses_two: (TWO_DOSE_COVERAGE * pop).round(),
            });
        }
        Ok(Self {
            id: id.to_string(),
            campaigns,
            horizon_weeks: DEFAULT_HORIZON_WEEKS,
        })
    }

    pub fn with_horizon(mut self, weeks: usize) -> Self {
        self.horizon_weeks = weeks;
        self
    }

    pub fn validate(&self, geo: &GeographyData) -> Result<()> {
        if self.horizon_weeks < 52 {
            return Err(Error::input(format!(
                "scenario horizon {} weeks is shorter than 52",
                self.horizon_weeks
            )));
        }
        for c in &self.campaigns {
            geo.index_of(&c.department)?;
            if !(c.doses_one >= 0.0 && c.doses_two >= 0.0) {
                return Err(Error::input(format!("negative doses for `{}`", c.department)));
            }
            if !(c.duration_weeks > 0.0) {
                return Err(Error::input(format!("campaign in `{}` has no duration", c.department)));
            }
        }
        Ok(())
    }

    /// Department-level campaigns for the spatial models.
    pub fn department_campaigns(&self, geo: &GeographyData) -> Result<Vec<Campaign>> {
        self.validate(geo)?;
        self.campaigns
            .iter()
            .map(|c| {
                Ok(Campaign {
                    unit: geo.index_of(&c.department)?,
                    start: c.start,
                    end: c.start + c.duration_weeks * WEEK,
                    doses_one: c.doses_one,
                    doses_two: c.doses_two,
                })
            })
            .collect()
    }

    /// National one-week pulses of equal doses for the single-unit model.
    pub fn national_campaigns(&self, geo: &GeographyData) -> Result<Vec<Campaign>> {
        self.validate(geo)?;
        Ok(self
            .campaigns
            .iter()
            .map(|c| Campaign {
                unit: 0,
                start: c.start,
                end: c.start + WEEK,
                doses_one: c.doses_one,
                doses_two: c.doses_two,
            })
            .collect())
    }

    pub fn departments(&self) -> Vec<&str> {
        self.campaigns.iter().map(|c| c.department.as_str()).collect()
    }
}
