//! Dark/bright rotation of the {|x⟩, |P⟩} block.
//!
//! |D⟩ = (Ωβ|x⟩ − Ωα|P⟩)/Ω̃, |B⟩ = (Ωα|x⟩ + Ωβ|P⟩)/Ω̃.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::params::PhysicalParams;
use crate::state::MeanFieldState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkBrightObservables {
    pub pop_dark: f64,
    pub pop_bright: f64,
    pub coh_bd: Complex64,
    pub c_bd: f64,
}

pub fn dark_bright_transform(
    state: &MeanFieldState,
    params: &PhysicalParams,
) -> Result<DarkBrightObservables> {
    let (a, b) = (params.omega_alpha, params.omega_beta);
    let om2 = a * a + b * b;
    if om2 == 0.0 {
        return Err(SimError::UndefinedBasis);
    }
    let (pxx, ppp, cxp) = (state.p_xx, state.p_pp, state.c_xp);
    let pop_dark = (b * b * pxx - a * b * 2.0 * cxp.re + a * a * ppp) / om2;
    let pop_bright = (a * a * pxx + a * b * 2.0 * cxp.re + b * b * ppp) / om2;
    let coh_bd = (Complex64::new(a * b * (pxx - ppp), 0.0) - a * a * cxp + b * b * cxp.conj()) / om2;
    let total = pop_dark + pop_bright;
    let c_bd = if total != 0.0 {
        coh_bd.norm() / total
    } else {
        0.0
    };
    Ok(DarkBrightObservables {
        pop_dark,
        pop_bright,
        coh_bd,
        c_bd,
    })
}

/// Rescaled dark/bright coherence |⟨σBD⟩| / (⟨σDD⟩ + ⟨σBB⟩).
pub fn coherence_cbd(state: &MeanFieldState, params: &PhysicalParams) -> Result<f64> {
    let obs = dark_bright_transform(state, params)?;
    let total = obs.pop_dark + obs.pop_bright;
    if total < 1e-15 {
        return Err(SimError::UndefinedMeasure(total));
    }
    Ok(obs.c_bd)
}
