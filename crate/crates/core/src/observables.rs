//! Output power, pulling coefficients, dark/bright coherence and the
//! reduced three-level comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linewidth::{annotate_rows, Analytic, LinewidthMethod, Regression};
use crate::model::{LasingModel, ThreeLevel};
use crate::params::{PhysicalParams, HBAR};
use crate::regression::{linewidth_at_resonance, linewidth_tracked};
use crate::steady::{find_steady, sweep_eta, Direction, SteadyState, SweepRow, Tolerances};

pub use crate::basis::coherence_cbd;

pub fn power_from_photons(n_photon: f64, params: &PhysicalParams) -> f64 {
    HBAR * params.optical_angular_frequency() * params.kappa * n_photon
}

/// P = ħ ωc κ ⟨a†a⟩, watts.
pub fn power_watts(steady: &SteadyState, params: &PhysicalParams) -> Result<f64> {
    steady.require_converged()?;
    Ok(power_from_photons(steady.n_photon(), params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PullingChannel {
    Cavity,
    OnePhoton,
    TwoPhoton,
}

impl PullingChannel {
    pub const ALL: [PullingChannel; 3] = [
        PullingChannel::Cavity,
        PullingChannel::OnePhoton,
        PullingChannel::TwoPhoton,
    ];

    /// Resonant parameters shifted by `h` along this channel.
    pub fn detune(self, p: &PhysicalParams, h: f64) -> PhysicalParams {
        match self {
            PullingChannel::Cavity => p.with_detunings(h, 0.0, 0.0),
            PullingChannel::OnePhoton => p.with_detunings(0.0, h / 2.0, h / 2.0),
            PullingChannel::TwoPhoton => p.with_detunings(0.0, h / 2.0, -h / 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullingEntry {
    pub channel: PullingChannel,
    /// |∂δ*/∂δ|, Richardson-extrapolated.
    pub value: f64,
    pub richardson_error: f64,
    pub step_used: f64,
    /// One-sided slopes from +h and −h.
    pub forward: f64,
    pub backward: f64,
    /// Richardson error stayed above 5% even at the reduced step.
    pub nonlinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullingReport {
    pub c_p_cavity: f64,
    pub c_p_one_photon: f64,
    pub c_p_two_photon: f64,
    pub step_used: f64,
    pub richardson_error: f64,
    pub lasing_offset_at_resonance: f64,
    pub entries: Vec<PullingEntry>,
}

pub const DEFAULT_PULLING_STEP: f64 = 2.0 * std::f64::consts::PI * 10.0;

struct Resonant<'a> {
    model: &'a dyn LasingModel,
    steady: &'a SteadyState,
    tol: &'a Tolerances,
}

impl Resonant<'_> {
    fn offset(&self, channel: PullingChannel, h: f64) -> Result<f64> {
        let p = channel.detune(&self.model.physical().at_resonance(), h);
        let m = self.model.rebuild(p)?;
        let s = find_steady(m.as_ref(), &self.steady.y, self.tol)?;
        s.require_converged()?;
        Ok(linewidth_tracked(m.as_ref(), &s, self.model, self.steady)?.lasing_offset)
    }

    fn entry(&self, channel: PullingChannel, h: f64, d0: f64) -> Result<PullingEntry> {
        let (p1, m1) = (self.offset(channel, h)?, self.offset(channel, -h)?);
        let (p2, m2) = (self.offset(channel, h / 2.0)?, self.offset(channel, -h / 2.0)?);
        let coarse = (p1 - m1) / (2.0 * h);
        let fine = (p2 - m2) / h;
        let value = (4.0 * fine - coarse) / 3.0;
        Ok(PullingEntry {
            channel,
            value: value.abs(),
            richardson_error: (fine - coarse).abs() / 3.0,
            step_used: h,
            forward: (p1 - d0) / h,
            backward: (d0 - m1) / h,
            nonlinear: false,
        })
    }
}

fn acceptable(e: &PullingEntry) -> bool {
    e.richardson_error < 0.05 * e.value || e.value < 1e-3
}

/// One pulling coefficient by central differences with step halving.
pub fn pulling_coefficient(
    channel: PullingChannel,
    model: &dyn LasingModel,
    steady: &SteadyState,
    step: f64,
    tol: &Tolerances,
) -> Result<PullingEntry> {
    steady.require_converged()?;
    if !model.physical().is_resonant() {
        return Err(SimError::InvalidParameter {
            name: "detuning",
            reason: "pulling coefficients are taken about the resonant point".into(),
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::InvalidParameter {
            name: "step",
            reason: format!("must be > 0, got {step}"),
        });
    }
    let r = Resonant { model, steady, tol };
    let d0 = linewidth_at_resonance(model, steady)?.lasing_offset;
    let first = r.entry(channel, step, d0)?;
    if acceptable(&first) {
        return Ok(first);
    }
    let mut retry = r.entry(channel, step / 4.0, d0)?;
    retry.nonlinear = !acceptable(&retry);
    Ok(retry)
}

pub fn pulling_report(
    model: &dyn LasingModel,
    steady: &SteadyState,
    step: f64,
    tol: &Tolerances,
) -> Result<PullingReport> {
    let entries = PullingChannel::ALL
        .iter()
        .map(|&c| pulling_coefficient(c, model, steady, step, tol))
        .collect::<Result<Vec<_>>>()?;
    let d0 = linewidth_at_resonance(model, steady)?.lasing_offset;
    Ok(PullingReport {
        c_p_cavity: entries[0].value,
        c_p_one_photon: entries[1].value,
        c_p_two_photon: entries[2].value,
        step_used: entries.iter().map(|e| e.step_used).fold(f64::INFINITY, f64::min),
        richardson_error: entries.iter().map(|e| e.richardson_error).fold(0.0, f64::max),
        lasing_offset_at_resonance: d0,
        entries,
    })
}

/// Up-sweep of a three-level model with power and linewidths.
pub fn tlm_simulate(model: &ThreeLevel, eta_grid: &[f64], tol: &Tolerances) -> Result<Vec<SweepRow>> {
    let mut rows = sweep_eta(model, eta_grid, Direction::Up, tol)?;
    let methods: [&dyn LinewidthMethod; 2] = [&Regression, &Analytic];
    annotate_rows(model, &mut rows, &methods, tol);
    Ok(rows)
}
