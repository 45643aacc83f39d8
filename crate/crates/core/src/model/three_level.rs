//! Reduced three-level laser (ground g, lasing level e, pumped level S).
//!
//! Flat layout (13 reals): n, ⟨σeg a⟩ (re, im), ⟨σSg a⟩ (re, im),
//! ⟨σeg σge⟩, ⟨σeg σgS⟩ (re, im), ⟨σSg σgS⟩, ⟨σee⟩, ⟨σSS⟩, ⟨σeS⟩ (re, im).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{four_level, LasingModel};
use crate::error::{Result, SimError};
use crate::params::PhysicalParams;
use crate::state::MeanFieldState;

pub const TLM_DIM: usize = 13;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TlmVariant {
    Dark,
    Bright,
}

impl TlmVariant {
    pub fn model_name(self) -> &'static str {
        match self {
            TlmVariant::Dark => "dark-tlm",
            TlmVariant::Bright => "bright-tlm",
        }
    }
}

impl std::str::FromStr for TlmVariant {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dark" | "dark-tlm" => Ok(TlmVariant::Dark),
            "bright" | "bright-tlm" => Ok(TlmVariant::Bright),
            _ => Err(SimError::UnknownStrategy {
                kind: "tlm variant",
                name: s.to_string(),
                available: "dark, bright".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlmParams {
    pub n_atoms: u64,
    pub kappa: f64,
    pub eta: f64,
    pub decay_se: f64,
    pub decay_eg: f64,
    pub cavity_coupling: f64,
    pub coherent_coupling: f64,
    pub delta_c: f64,
    /// Rotating-frame energy of |S⟩.
    pub delta_s: f64,
}

impl TlmParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("kappa", self.kappa),
            ("eta", self.eta),
            ("decay_se", self.decay_se),
            ("decay_eg", self.decay_eg),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("rate must be finite and >= 0, got {v}"),
                });
            }
        }
        if self.n_atoms == 0 {
            return Err(SimError::InvalidParameter {
                name: "n_atoms",
                reason: "need at least one atom".into(),
            });
        }
        Ok(())
    }

    /// Four-level parameters whose P-free sector reproduces this model.
    pub fn embedded(&self, wavelength: f64) -> PhysicalParams {
        PhysicalParams {
            n_atoms: self.n_atoms,
            kappa: self.kappa,
            gamma0: self.decay_eg,
            gamma_x: self.decay_se,
            gamma_p: 0.0,
            eta: self.eta,
            omega_c_rabi: self.cavity_coupling,
            omega_alpha: self.coherent_coupling,
            omega_beta: 0.0,
            delta_c: self.delta_c,
            delta_alpha: self.delta_s,
            delta_beta: self.delta_s,
            lasing_wavelength: wavelength,
        }
    }
}

/// Projects the four-level scheme onto the dark or bright lasing state.
pub fn tlm_reduce(params: &PhysicalParams, variant: TlmVariant) -> Result<TlmParams> {
    let (oa, ob) = (params.omega_alpha, params.omega_beta);
    let om2 = oa * oa + ob * ob;
    if om2 == 0.0 {
        return Err(SimError::UndefinedBasis);
    }
    let om = om2.sqrt();
    let (gx, gp, g0, oc) = (params.gamma_x, params.gamma_p, params.gamma0, params.omega_c_rabi);
    let (decay_se, decay_eg, cavity_coupling, coherent_coupling) = match variant {
        TlmVariant::Dark => (
            (oa * oa * gp + ob * ob * gx) / om2,
            ob * ob * g0 / om2,
            ob * oc / om,
            0.0,
        ),
        TlmVariant::Bright => (
            (ob * ob * gp + oa * oa * gx) / om2,
            oa * oa * g0 / om2,
            oa * oc / om,
            om,
        ),
    };
    Ok(TlmParams {
        n_atoms: params.n_atoms,
        kappa: params.kappa,
        eta: params.eta,
        decay_se,
        decay_eg,
        cavity_coupling,
        coherent_coupling,
        delta_c: params.delta_c,
        delta_s: params.delta_alpha,
    })
}

pub fn tlm_rhs(t: &TlmParams, y: &[f64], dy: &mut [f64]) {
    let c = |i: usize| Complex64::new(y[i], y[i + 1]);
    let n = y[0];
    let (ae, as_) = (c(1), c(3));
    let (s_ee, s_es, s_ss) = (y[5], c(6), y[8]);
    let (p_ee, p_ss, c_es) = (y[9], y[10], c(11));

    let n_at = t.n_atoms as f64;
    let (k, eta, gse, geg) = (t.kappa, t.eta, t.decay_se, t.decay_eg);
    let (dc, ds) = (t.delta_c, t.delta_s);
    let big_g = gse + eta;
    let hc = I * (t.cavity_coupling / 2.0);
    let ho = I * (t.coherent_coupling / 2.0);
    let p_gg = 1.0 - p_ee - p_ss;
    let inv = p_ee - p_gg;

    let d_n = -k * n - n_at * t.cavity_coupling * ae.im;
    let d_ae = -(I * dc + (geg + eta + k) / 2.0) * ae + ho * as_
        - hc * (p_ee + n * inv + (n_at - 1.0) * s_ee);
    let d_as = (I * (ds - dc) - (big_g + k) / 2.0) * as_ + ho * ae
        - hc * ((n + 1.0) * c_es.conj() + (n_at - 1.0) * s_es.conj());
    let d_see = -(geg + eta) * s_ee + 2.0 * (ho * s_es.conj()).re + 2.0 * (hc * ae).re * inv;
    let d_ses = (-I * ds - (geg + big_g + eta) / 2.0) * s_es + ho * (s_ss - s_ee)
        - hc * as_.conj() * inv
        + hc * c_es * ae;
    let d_sss = -big_g * s_ss + 2.0 * (ho * s_es + hc * as_ * c_es).re;
    let d_pee = -geg * p_ee + gse * p_ss + 2.0 * (-ho * c_es + hc * ae.conj()).re;
    let d_pss = -gse * p_ss + eta * p_gg + 2.0 * (ho * c_es).re;
    let d_ces = (-I * ds - (geg + gse) / 2.0) * c_es + ho * (p_ss - p_ee) + hc * as_.conj();

    let out = [
        d_n, d_ae.re, d_ae.im, d_as.re, d_as.im, d_see, d_ses.re, d_ses.im, d_sss, d_pee, d_pss,
        d_ces.re, d_ces.im,
    ];
    dy[..TLM_DIM].copy_from_slice(&out);
}

/// Embeds a three-level state as a four-level state with |P⟩ empty.
pub fn embed_state(y: &[f64]) -> MeanFieldState {
    let c = |i: usize| Complex64::new(y[i], y[i + 1]);
    MeanFieldState {
        n_photon: y[0],
        c_xg_a: c(1),
        c_sg_a: c(3),
        s_xx: y[5],
        s_xs: c(6),
        s_ss: y[8],
        p_xx: y[9],
        p_ss: y[10],
        c_xs: c(11),
        ..Default::default()
    }
}

#[derive(Debug, Clone)]
pub struct ThreeLevel {
    variant: TlmVariant,
    source: PhysicalParams,
    tlm: TlmParams,
}

impl ThreeLevel {
    pub fn new(source: PhysicalParams, variant: TlmVariant) -> Result<Self> {
        source.validate()?;
        let tlm = tlm_reduce(&source, variant)?;
        Ok(Self {
            variant,
            source,
            tlm,
        })
    }

    pub fn tlm(&self) -> &TlmParams {
        &self.tlm
    }
}

impl LasingModel for ThreeLevel {
    fn name(&self) -> &'static str {
        self.variant.model_name()
    }

    fn dim(&self) -> usize {
        TLM_DIM
    }

    fn physical(&self) -> &PhysicalParams {
        &self.source
    }

    fn rebuild(&self, params: PhysicalParams) -> Result<Box<dyn LasingModel>> {
        Ok(Box::new(ThreeLevel::new(params, self.variant)?))
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        tlm_rhs(&self.tlm, y, dy);
    }

    fn scale_floors(&self) -> Vec<f64> {
        let mut f = vec![1e-6; TLM_DIM];
        f[0] = 1.0;
        f[1..5].fill(1e-3);
        f[9..11].fill(1e-4);
        f
    }

    fn check_state(&self, y: &[f64], tol: f64) -> Result<()> {
        let s = embed_state(y);
        s.check_finite()?;
        s.check_closure(tol)
    }

    fn regression_matrix(&self, y: &[f64]) -> DMatrix<Complex64> {
        let t = &self.tlm;
        let z = Complex64::new(0.0, 0.0);
        let (g, om) = (t.cavity_coupling, t.coherent_coupling);
        let p_ee = y[9];
        let inv = p_ee - (1.0 - p_ee - y[10]);
        let c_es = Complex64::new(y[11], y[12]);
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                -2.0 * I * t.delta_c + t.kappa,
                -I * t.n_atoms as f64 * g,
                z,
                I * g * inv,
                Complex64::new(t.decay_eg + t.eta, 0.0),
                -I * om,
                I * g * c_es.conj(),
                -I * om,
                -2.0 * I * t.delta_s + t.decay_se + t.eta,
            ],
        );
        m * Complex64::new(-0.5, 0.0)
    }

    fn regression_seed(&self, y: &[f64]) -> DVector<Complex64> {
        DVector::from_vec(vec![
            Complex64::new(y[0], 0.0),
            Complex64::new(y[1], y[2]),
            Complex64::new(y[3], y[4]),
        ])
    }

    fn analytic_linewidth(&self, y: &[f64]) -> Result<f64> {
        let p = self.tlm.embedded(self.source.lasing_wavelength);
        four_level::analytic_linewidth(&p, &embed_state(y))
    }

    fn coherence_cbd(&self, _y: &[f64]) -> Result<f64> {
        Err(SimError::UndefinedBasis)
    }

    fn four_level_state(&self, _y: &[f64]) -> Option<MeanFieldState> {
        None
    }

    fn filter_frame(&self, y: &[f64]) -> (PhysicalParams, MeanFieldState) {
        (self.tlm.embedded(self.source.lasing_wavelength), embed_state(y))
    }
}
