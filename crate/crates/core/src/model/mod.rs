//! Lasing models and the registry that selects them by name.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::params::PhysicalParams;
use crate::state::MeanFieldState;

pub mod four_level;
pub mod three_level;

pub use four_level::{derivative, FourLevel};
pub use three_level::{tlm_reduce, ThreeLevel, TlmParams, TlmVariant};

/// A closed set of mean-field equations plus the linear regression block
/// that governs ⟨a†(t)a(0)⟩. States are flat real vectors of length `dim`;
/// index 0 is always ⟨a†a⟩.
pub trait LasingModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// The four-level parameters this model was built from.
    fn physical(&self) -> &PhysicalParams;
    fn rebuild(&self, params: PhysicalParams) -> Result<Box<dyn LasingModel>>;

    fn rhs(&self, y: &[f64], dy: &mut [f64]);
    /// Per-component magnitudes below which residuals are measured absolutely.
    fn scale_floors(&self) -> Vec<f64>;
    fn check_state(&self, y: &[f64], tol: f64) -> Result<()>;

    fn regression_matrix(&self, y: &[f64]) -> DMatrix<Complex64>;
    fn regression_seed(&self, y: &[f64]) -> DVector<Complex64>;
    fn analytic_linewidth(&self, y: &[f64]) -> Result<f64>;
    fn coherence_cbd(&self, y: &[f64]) -> Result<f64>;
    fn four_level_state(&self, y: &[f64]) -> Option<MeanFieldState>;
    /// Four-level parameters and state with the same equations of motion,
    /// used by readouts defined only on the four-level scheme.
    fn filter_frame(&self, y: &[f64]) -> (PhysicalParams, MeanFieldState);

    fn kappa(&self) -> f64 {
        self.physical().kappa
    }

    fn photon_number(&self, y: &[f64]) -> f64 {
        y[0]
    }

    fn vacuum(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

pub type ModelFactory = fn(&PhysicalParams) -> Result<Box<dyn LasingModel>>;

pub struct ModelRegistry {
    factories: BTreeMap<&'static str, ModelFactory>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("four-level", |p| Ok(Box::new(FourLevel::new(*p)?)));
        r.register("dark-tlm", |p| {
            Ok(Box::new(ThreeLevel::new(*p, TlmVariant::Dark)?))
        });
        r.register("bright-tlm", |p| {
            Ok(Box::new(ThreeLevel::new(*p, TlmVariant::Bright)?))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, factory: ModelFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &PhysicalParams) -> Result<Box<dyn LasingModel>> {
        match self.factories.get(name) {
            Some(f) => f(params),
            None => Err(SimError::UnknownStrategy {
                kind: "model",
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}
