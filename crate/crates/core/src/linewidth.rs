//! Interchangeable linewidth estimators, selected by name.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::model::LasingModel;
use crate::regression::linewidth_regression;
use crate::spectrum::{scan_spectrum, FilterPlan};
use crate::steady::{SteadyState, SweepRow, Tolerances, N_THRESHOLD};

pub trait LinewidthMethod: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether the method only makes sense above threshold.
    fn lasing_only(&self) -> bool {
        false
    }
    /// Full width at half maximum, rad/s.
    fn linewidth(&self, model: &dyn LasingModel, steady: &SteadyState, tol: &Tolerances) -> Result<f64>;
}

pub struct Regression;

impl LinewidthMethod for Regression {
    fn name(&self) -> &'static str {
        "regression"
    }
    fn linewidth(&self, model: &dyn LasingModel, steady: &SteadyState, tol: &Tolerances) -> Result<f64> {
        Ok(linewidth_regression(model, steady, tol)?.linewidth)
    }
}

pub struct Analytic;

impl LinewidthMethod for Analytic {
    fn name(&self) -> &'static str {
        "analytic"
    }
    fn linewidth(&self, model: &dyn LasingModel, steady: &SteadyState, _tol: &Tolerances) -> Result<f64> {
        steady.require_converged()?;
        if !model.physical().is_resonant() {
            return Err(SimError::InvalidParameter {
                name: "detuning",
                reason: "the closed-form linewidth holds at zero detunings only".into(),
            });
        }
        model.analytic_linewidth(&steady.y)
    }
}

pub struct Filter {
    pub plan: FilterPlan,
}

impl LinewidthMethod for Filter {
    fn name(&self) -> &'static str {
        "filter"
    }
    fn lasing_only(&self) -> bool {
        true
    }
    fn linewidth(&self, model: &dyn LasingModel, steady: &SteadyState, _tol: &Tolerances) -> Result<f64> {
        Ok(scan_spectrum(model, steady, &self.plan)?.fwhm)
    }
}

pub struct LinewidthRegistry {
    methods: BTreeMap<&'static str, Box<dyn LinewidthMethod>>,
}

impl Default for LinewidthRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl LinewidthRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Regression));
        r.register(Box::new(Analytic));
        r.register(Box::new(Filter {
            plan: FilterPlan::Auto,
        }));
        r
    }

    pub fn register(&mut self, method: Box<dyn LinewidthMethod>) {
        self.methods.insert(method.name(), method);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn LinewidthMethod> {
        self.methods
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| SimError::UnknownStrategy {
                kind: "linewidth method",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

/// Fills linewidth and coherence columns of converged sweep rows in
/// parallel. Methods that fail at a point leave the column empty there.
pub fn annotate_rows(
    model: &dyn LasingModel,
    rows: &mut [SweepRow],
    methods: &[&dyn LinewidthMethod],
    tol: &Tolerances,
) {
    rows.par_iter_mut().for_each(|row| {
        let Some(steady) = row.steady.as_ref().filter(|s| s.converged) else {
            return;
        };
        let Ok(m) = model.rebuild(model.physical().with_eta(row.eta)) else {
            return;
        };
        let lasing = row.n_photon_s >= N_THRESHOLD;
        for method in methods {
            if method.lasing_only() && !lasing {
                continue;
            }
            let v = method.linewidth(m.as_ref(), steady, tol).ok();
            match method.name() {
                "regression" => row.linewidth = v,
                "analytic" => row.linewidth_analytic = v,
                "filter" => row.linewidth_filter = v,
                _ => {}
            }
        }
        row.c_bd = m.coherence_cbd(&steady.y).ok();
    });
}
