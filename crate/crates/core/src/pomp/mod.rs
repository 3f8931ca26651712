//! Model abstraction, time grid, parameters, data and covariates.

pub mod covariates;
pub mod data;
pub mod grid;
pub mod model;
pub mod params;
pub mod simulate;

pub use covariates::{standardize_rainfall, Campaign, CovariateTable, Rainfall};
pub use data::ObservationSeries;
pub use grid::{euler_substeps, TimeGrid};
pub use model::{advance, bind_params, embed_state, param_index, reset_accumulators, unit_populations, PompModel};
pub use params::{ParamDef, ParamEntry, ParamView, ParameterSet, Scope, Transform};
pub use simulate::{simulate, Trajectory};
