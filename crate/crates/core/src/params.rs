//! Physical parameters of the four-level Raman-assisted lasing scheme.
//!
//! All rates, couplings and detunings are stored as angular frequencies
//! (rad/s, ħ = 1). User-facing configuration is in linear Hz; use
//! [`hz`] to convert.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Linear frequency in Hz to angular frequency in rad/s.
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Angular frequency in rad/s to linear Hz.
pub fn to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Wavelength of the ⁸⁸Sr ¹S₀–³P₁ line, used for photon-to-watt conversion.
pub const DEFAULT_WAVELENGTH: f64 = 689.449e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n_atoms: u64,
    pub kappa: f64,
    pub gamma0: f64,
    pub gamma_x: f64,
    pub gamma_p: f64,
    pub eta: f64,
    /// Atom-cavity Rabi frequency Ωc.
    pub omega_c_rabi: f64,
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub delta_c: f64,
    pub delta_alpha: f64,
    pub delta_beta: f64,
    pub lasing_wavelength: f64,
}

impl Default for PhysicalParams {
    /// ⁸⁸Sr ensemble: N = 10⁵, κ = 2π×150 kHz, γx = 2π×2.6 MHz,
    /// γP = 2π×1.8 MHz, γ0 = 2π×7.5 kHz, Ωc = 2π×20 kHz,
    /// Ω̃ = 2π×√10 MHz with Ωα/Ωβ = √10, η = 2π×3 kHz, all detunings zero.
    fn default() -> Self {
        let (omega_alpha, omega_beta) = raman_pair(hz(10f64.sqrt() * 1e6), 10f64.sqrt());
        Self {
            n_atoms: 100_000,
            kappa: hz(150e3),
            gamma0: hz(7.5e3),
            gamma_x: hz(2.6e6),
            gamma_p: hz(1.8e6),
            eta: hz(3e3),
            omega_c_rabi: hz(20e3),
            omega_alpha,
            omega_beta,
            delta_c: 0.0,
            delta_alpha: 0.0,
            delta_beta: 0.0,
            lasing_wavelength: DEFAULT_WAVELENGTH,
        }
    }
}

/// Splits a Raman strength Ω̃ and ratio Ωα/Ωβ into (Ωα, Ωβ).
pub fn raman_pair(strength: f64, ratio: f64) -> (f64, f64) {
    let beta = strength / (1.0 + ratio * ratio).sqrt();
    (ratio * beta, beta)
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("kappa", self.kappa),
            ("gamma0", self.gamma0),
            ("gamma_x", self.gamma_x),
            ("gamma_p", self.gamma_p),
            ("eta", self.eta),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("rate must be finite and >= 0, got {v}"),
                });
            }
        }
        let others = [
            ("omega_c_rabi", self.omega_c_rabi),
            ("omega_alpha", self.omega_alpha),
            ("omega_beta", self.omega_beta),
            ("delta_c", self.delta_c),
            ("delta_alpha", self.delta_alpha),
            ("delta_beta", self.delta_beta),
        ];
        for (name, v) in others {
            if !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.n_atoms == 0 {
            return Err(SimError::InvalidParameter {
                name: "n_atoms",
                reason: "need at least one atom".into(),
            });
        }
        if !(self.lasing_wavelength > 0.0 && self.lasing_wavelength.is_finite()) {
            return Err(SimError::InvalidParameter {
                name: "lasing_wavelength",
                reason: format!("must be > 0, got {}", self.lasing_wavelength),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.n_atoms as f64
    }

    /// Raman strength Ω̃ = √(Ωα² + Ωβ²).
    pub fn raman_strength(&self) -> f64 {
        self.omega_alpha.hypot(self.omega_beta)
    }

    /// Γ = γx + γP + η, the total decay of |S⟩-ground coherences.
    pub fn big_gamma(&self) -> f64 {
        self.gamma_x + self.gamma_p + self.eta
    }

    /// F = ηΩα² + (γ0 + η)(ηΓ + Ωβ²).
    pub fn f_factor(&self) -> f64 {
        let eta = self.eta;
        eta * self.omega_alpha.powi(2)
            + (self.gamma0 + eta) * (eta * self.big_gamma() + self.omega_beta.powi(2))
    }

    /// One-photon detuning δ₁ = δα + δβ.
    pub fn delta_one(&self) -> f64 {
        self.delta_alpha + self.delta_beta
    }

    /// Two-photon detuning δ₂ = δα − δβ; also the rotating-frame energy of |P⟩.
    pub fn delta_two(&self) -> f64 {
        self.delta_alpha - self.delta_beta
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_raman(mut self, strength: f64, ratio: f64) -> Self {
        let (a, b) = raman_pair(strength, ratio);
        self.omega_alpha = a;
        self.omega_beta = b;
        self
    }

    pub fn with_detunings(mut self, delta_c: f64, delta_alpha: f64, delta_beta: f64) -> Self {
        self.delta_c = delta_c;
        self.delta_alpha = delta_alpha;
        self.delta_beta = delta_beta;
        self
    }

    pub fn at_resonance(self) -> Self {
        self.with_detunings(0.0, 0.0, 0.0)
    }

    pub fn is_resonant(&self) -> bool {
        self.delta_c == 0.0 && self.delta_alpha == 0.0 && self.delta_beta == 0.0
    }

    /// Lasing angular frequency ωc = 2πc/λ.
    pub fn optical_angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lasing_wavelength
    }
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
