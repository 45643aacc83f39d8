//! Laser spectrum read out through a weakly coupled, low-loss filter mode.
//!
//! Filter unknowns (9 reals): ⟨b†b⟩, ⟨b†a⟩ (re, im), ⟨σxg b⟩, ⟨σPg b⟩,
//! ⟨σSg b⟩ (re, im each). Their equations are linear in these unknowns with
//! coefficients and sources taken from the laser steady state; the filter's
//! back-action on the laser is second order in ζ and dropped.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::LasingModel;
use crate::params::PhysicalParams;
use crate::regression::linewidth_at_resonance;
use crate::state::MeanFieldState;
use crate::steady::SteadyState;

pub const FILTER_DIM: usize = 9;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub zeta: f64,
    pub kappa_f: f64,
    pub omega_b_grid: Vec<f64>,
}

impl FilterConfig {
    pub fn validate(&self, kappa: f64) -> Result<()> {
        let bad = |name, reason: String| Err(SimError::InvalidParameter { name, reason });
        if !(self.zeta > 0.0 && self.kappa_f > 0.0) {
            return bad("zeta", "zeta and kappa_f must be > 0".into());
        }
        if self.zeta > self.kappa_f / 10.0 * (1.0 + 1e-12) {
            return bad("zeta", format!("need zeta <= kappa_f/10, got {} vs {}", self.zeta, self.kappa_f));
        }
        if self.kappa_f > kappa / 100.0 * (1.0 + 1e-12) {
            return bad(
                "kappa_f",
                format!("need kappa_f <= kappa/100, got {} vs {}", self.kappa_f, kappa),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub points: Vec<(f64, f64)>,
    pub peak_omega: f64,
    pub fwhm: f64,
    pub fit_quality: f64,
    pub zeta: f64,
    pub kappa_f: f64,
}

/// Time derivative of the filter unknowns `z` given the laser state.
pub fn filter_rhs(
    p: &PhysicalParams,
    s: &MeanFieldState,
    zeta: f64,
    kappa_f: f64,
    delta_b: f64,
    z: &[f64],
    dz: &mut [f64],
) {
    let c = |i: usize| Complex64::new(z[i], z[i + 1]);
    let nb = z[0];
    let (x, bx, bp, bs) = (c(1), c(3), c(5), c(7));
    let hc = I * (p.omega_c_rabi / 2.0);
    let ha = I * (p.omega_alpha / 2.0);
    let hb = I * (p.omega_beta / 2.0);
    let inv = s.inversion();

    let d_nb = -kappa_f * nb + 2.0 * zeta * x.im;
    let d_x = (I * (delta_b - p.delta_c) - (p.kappa + kappa_f) / 2.0) * x
        + I * zeta * (s.n_photon - nb)
        - hc * p.n() * bx.conj();
    let d_bx = -(I * delta_b + (p.gamma0 + p.eta + kappa_f) / 2.0) * bx + ha * bs
        - hc * inv * x.conj()
        - I * zeta * s.c_xg_a;
    let d_bp = (I * (p.delta_two() - delta_b) - (p.eta + kappa_f) / 2.0) * bp + hb * bs
        - hc * s.c_xp.conj() * x.conj()
        - I * zeta * s.c_pg_a;
    let d_bs = (I * (p.delta_alpha - delta_b) - (p.big_gamma() + kappa_f) / 2.0) * bs
        + ha * bx
        + hb * bp
        - hc * s.c_xs.conj() * x.conj()
        - I * zeta * s.c_sg_a;
    let out = [
        d_nb, d_x.re, d_x.im, d_bx.re, d_bx.im, d_bp.re, d_bp.im, d_bs.re, d_bs.im,
    ];
    dz[..FILTER_DIM].copy_from_slice(&out);
}

/// Steady filter unknowns at filter offset `delta_b`.
pub fn filter_steady(
    p: &PhysicalParams,
    s: &MeanFieldState,
    zeta: f64,
    kappa_f: f64,
    delta_b: f64,
) -> Result<[f64; FILTER_DIM]> {
    let zero = [0.0; FILTER_DIM];
    let mut f0 = [0.0; FILTER_DIM];
    filter_rhs(p, s, zeta, kappa_f, delta_b, &zero, &mut f0);
    let mut m = DMatrix::<f64>::zeros(FILTER_DIM, FILTER_DIM);
    let mut e = [0.0; FILTER_DIM];
    let mut fe = [0.0; FILTER_DIM];
    for j in 0..FILTER_DIM {
        e[j] = 1.0;
        filter_rhs(p, s, zeta, kappa_f, delta_b, &e, &mut fe);
        e[j] = 0.0;
        for i in 0..FILTER_DIM {
            m[(i, j)] = fe[i] - f0[i];
        }
    }
    let sol = m
        .lu()
        .solve(&(-DVector::from_column_slice(&f0)))
        .ok_or_else(|| SimError::Filter(format!("singular filter system at offset {delta_b}")))?;
    let mut out = [0.0; FILTER_DIM];
    out.copy_from_slice(sol.as_slice());
    if out.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Filter(format!("non-finite filter state at offset {delta_b}")));
    }
    Ok(out)
}

/// Steady ⟨b†b⟩ with the filter at offset `omega_b` from ω0.
pub fn extend_and_solve(
    params: &PhysicalParams,
    steady: &SteadyState,
    zeta: f64,
    kappa_f: f64,
    omega_b: f64,
) -> Result<f64> {
    steady.require_converged()?;
    let s = steady
        .state()
        .ok_or_else(|| SimError::Filter("filter readout needs a four-level state".into()))?;
    filter_occupation(params, &s, zeta, kappa_f, omega_b)
}

fn filter_occupation(
    params: &PhysicalParams,
    s: &MeanFieldState,
    zeta: f64,
    kappa_f: f64,
    omega_b: f64,
) -> Result<f64> {
    let nb = filter_steady(params, s, zeta, kappa_f, omega_b)?[0];
    if nb < -1e-12 * s.n_photon.max(1.0) {
        return Err(SimError::Filter(format!(
            "negative filter occupation {nb:.3e} at offset {omega_b}"
        )));
    }
    Ok(nb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub height: f64,
    pub center: f64,
    pub fwhm: f64,
}

impl Lorentzian {
    pub fn eval(&self, x: f64) -> f64 {
        let u = 2.0 * (x - self.center) / self.fwhm;
        self.height / (1.0 + u * u)
    }
}

/// Least-squares Lorentzian over the points above 10% of the peak.
/// Returns the fit and its normalized residual ‖r‖/‖y‖.
pub fn fit_lorentzian(points: &[(f64, f64)]) -> Result<(Lorentzian, f64)> {
    let (imax, &(x_pk, y_pk)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or_else(|| SimError::Fit("no points".into()))?;
    if !(y_pk > 0.0) {
        return Err(SimError::Fit("spectrum has no positive peak".into()));
    }
    let data: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 >= 0.1 * y_pk).collect();
    if data.len() < 4 {
        return Err(SimError::Fit(format!("only {} points above 10% of peak", data.len())));
    }
    // half-maximum crossings for the starting width
    let half = 0.5 * y_pk;
    let left = points[..imax].iter().rev().find(|p| p.1 < half).map(|p| p.0);
    let right = points[imax..].iter().find(|p| p.1 < half).map(|p| p.0);
    let span = data.last().unwrap().0 - data[0].0;
    let w0 = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x_pk - l),
        (None, Some(r)) => 2.0 * (r - x_pk),
        (None, None) => span,
    }
    .max(1e-300);

    let mut q = [y_pk, x_pk, w0];
    let cost = |q: &[f64; 3]| -> f64 {
        let l = Lorentzian {
            height: q[0],
            center: q[1],
            fwhm: q[2],
        };
        data.iter().map(|&(x, y)| (l.eval(x) - y).powi(2)).sum()
    };
    let mut c = cost(&q);
    let mut mu = 1e-3;
    for _ in 0..200 {
        let mut jtj = nalgebra::Matrix3::<f64>::zeros();
        let mut jtr = nalgebra::Vector3::<f64>::zeros();
        for &(x, y) in &data {
            let u = 2.0 * (x - q[1]) / q[2];
            let den = 1.0 + u * u;
            let val = q[0] / den;
            let g = nalgebra::Vector3::new(
                1.0 / den,
                q[0] * 2.0 * u / (den * den) * 2.0 / q[2],
                q[0] * 2.0 * u * u / (den * den) / q[2],
            );
            jtj += g * g.transpose();
            jtr += g * (val - y);
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] *= 1.0 + mu;
            }
            let Some(step) = a.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = [q[0] - step[0], q[1] - step[1], q[2] - step[2]];
            let ct = if trial[2] > 0.0 { cost(&trial) } else { f64::INFINITY };
            if ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                q = trial;
                c = ct;
                mu = (mu * 0.3).max(1e-12);
                accepted = true;
                if rel < 1e-14 {
                    mu = -1.0;
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted || mu < 0.0 {
            break;
        }
    }
    let norm: f64 = data.iter().map(|p| p.1 * p.1).sum();
    let fit = Lorentzian {
        height: q[0],
        center: q[1],
        fwhm: q[2].abs(),
    };
    if !(fit.fwhm.is_finite() && fit.center.is_finite()) {
        return Err(SimError::Fit("fit diverged".into()));
    }
    Ok((fit, (c / norm).sqrt()))
}

/// Offsets of strict interior local maxima above `frac` of the global peak.
pub fn local_maxima(points: &[(f64, f64)], frac: f64) -> Vec<f64> {
    let top = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    points
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1 && w[1].1 >= frac * top)
        .map(|w| w[1].0)
        .collect()
}

fn linspace(center: f64, half_width: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| center - half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
        .collect()
}

fn scan_grid(
    frame: &(PhysicalParams, MeanFieldState),
    zeta: f64,
    kappa_f: f64,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    grid.par_iter()
        .map(|&w| Ok((w, filter_occupation(&frame.0, &frame.1, zeta, kappa_f, w)?)))
        .collect()
}

fn fit_points(points: Vec<(f64, f64)>, zeta: f64, kappa_f: f64) -> Result<SpectrumResult> {
    let maxima = local_maxima(&points, 0.01);
    if maxima.len() > 1 {
        return Err(SimError::MultiPeak { maxima });
    }
    if maxima.is_empty() {
        return Err(SimError::Fit("peak not inside the scanned grid".into()));
    }
    let (fit, quality) = fit_lorentzian(&points)?;
    Ok(SpectrumResult {
        points,
        peak_omega: fit.center,
        fwhm: fit.fwhm,
        fit_quality: quality,
        zeta,
        kappa_f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FilterPlan {
    /// κf = estimate/50, ζ = κf/10, 61 points over ±10 estimates, then
    /// 81 points over ±3 FWHM around the peak.
    Auto,
    Explicit(FilterConfig),
}

pub const PASS1_POINTS: usize = 61;
pub const PASS2_POINTS: usize = 81;

pub fn scan_spectrum(
    model: &dyn LasingModel,
    steady: &SteadyState,
    plan: &FilterPlan,
) -> Result<SpectrumResult> {
    steady.require_converged()?;
    let frame = model.filter_frame(&steady.y);
    let params = &frame.0;
    match plan {
        FilterPlan::Explicit(cfg) => {
            cfg.validate(params.kappa)?;
            let pts = scan_grid(&frame, cfg.zeta, cfg.kappa_f, &cfg.omega_b_grid)?;
            fit_points(pts, cfg.zeta, cfg.kappa_f)
        }
        FilterPlan::Auto => {
            let reg = linewidth_at_resonance(model, steady).ok();
            let est = model
                .analytic_linewidth(&steady.y)
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .or_else(|| reg.as_ref().map(|r| r.linewidth))
                .ok_or_else(|| SimError::Filter("no linewidth estimate for the scan".into()))?;
            let center = reg.map(|r| r.lasing_offset).unwrap_or(0.0);
            let kappa_f = est / 50.0;
            let zeta = kappa_f / 10.0;
            FilterConfig {
                zeta,
                kappa_f,
                omega_b_grid: Vec::new(),
            }
            .validate(params.kappa)?;
            let grid1 = linspace(center, 10.0 * est, PASS1_POINTS);
            let pass1 = scan_grid(&frame, zeta, kappa_f, &grid1)?;
            let rough = fit_points(pass1.clone(), zeta, kappa_f)?;
            let grid2 = linspace(rough.peak_omega, 3.0 * rough.fwhm, PASS2_POINTS);
            let pass2 = scan_grid(&frame, zeta, kappa_f, &grid2)?;
            let mut result = fit_points(pass2, zeta, kappa_f)?;
            let mut all = pass1;
            all.extend(result.points.iter().copied());
            all.sort_by(|a, b| a.0.total_cmp(&b.0));
            result.points = all;
            Ok(result)
        }
    }
}
