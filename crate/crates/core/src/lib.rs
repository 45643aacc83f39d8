//! Second-order mean-field simulation of a Raman-assisted four-level
//! superradiant laser: steady states, linewidths, filter-cavity spectra,
//! pulling coefficients and reduced three-level comparisons.

pub mod basis;
pub mod commands;
pub mod config;
pub mod eigen;
pub mod error;
pub mod integrate;
pub mod linewidth;
pub mod model;
pub mod observables;
pub mod output;
pub mod params;
pub mod regression;
pub mod spectrum;
pub mod state;
pub mod steady;

pub use error::{Result, SimError};
pub use model::{LasingModel, ModelRegistry};
pub use params::{hz, to_hz, PhysicalParams};
pub use state::MeanFieldState;
pub use steady::{SteadyState, Tolerances};
