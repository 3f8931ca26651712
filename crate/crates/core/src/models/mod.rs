//! Cholera transmission models and small reference models with exact
//! likelihood oracles.

pub mod efficacy;
pub mod geography;
pub mod measure;
pub mod model1;
pub mod model2;
pub mod model3;
pub mod scenario;
pub mod spline;
pub mod toys;

pub use efficacy::{under_five_correction, EfficacyCurve};
pub use geography::{GeographyData, DEPARTMENTS, HAITI_POPULATION};
pub use model1::Model1;
pub use model2::Model2;
pub use model3::Model3;
pub use scenario::{DepartmentCampaign, ScenarioSpec};
pub use toys::{DeathToy, HmmToy, LinearGaussianToy, SirToy};

use crate::pomp::{Campaign, CovariateTable};

/// Campaigns targeting `unit`, numbered in table order.
pub(crate) fn unit_campaigns(covs: &CovariateTable, unit: usize) -> impl Iterator<Item = (usize, &Campaign)> {
    covs.campaigns().iter().filter(move |c| c.unit == unit).enumerate()
}
