use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::LasingModel;
use crate::basis;
use crate::error::{Result, SimError};
use crate::params::PhysicalParams;
use crate::state::{MeanFieldState, STATE_DIM};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// d/dt of every stored correlator.
pub fn derivative(state: &MeanFieldState, params: &PhysicalParams) -> Result<MeanFieldState> {
    state.check_finite()?;
    Ok(rhs_state(state, params))
}

pub(crate) fn rhs_state(s: &MeanFieldState, p: &PhysicalParams) -> MeanFieldState {
    let n_at = p.n();
    let (k, g0, gx, gp, eta) = (p.kappa, p.gamma0, p.gamma_x, p.gamma_p, p.eta);
    let (oc, oa, ob) = (p.omega_c_rabi, p.omega_alpha, p.omega_beta);
    let (dc, da, d2) = (p.delta_c, p.delta_alpha, p.delta_two());
    let big_g = p.big_gamma();
    let hc = I * (oc / 2.0);
    let ha = I * (oa / 2.0);
    let hb = I * (ob / 2.0);

    let n = s.n_photon;
    let (ax, ap, as_) = (s.c_xg_a, s.c_pg_a, s.c_sg_a);
    let (sxp, sxs, sps) = (s.s_xp, s.s_xs, s.s_ps);
    let (cxp, cxs, cps) = (s.c_xp, s.c_xs, s.c_ps);
    let pgg = s.p_gg();
    let inv = s.p_xx - pgg;

    let d_n = -k * n - n_at * oc * ax.im;
    let d_ax = -(I * dc + (g0 + eta + k) / 2.0) * ax + ha * as_
        - hc * (s.p_xx + n * inv + (n_at - 1.0) * s.s_xx);
    let d_ap = (I * (d2 - dc) - (eta + k) / 2.0) * ap + hb * as_
        - hc * ((n + 1.0) * cxp.conj() + (n_at - 1.0) * sxp.conj());
    let d_as = (I * (da - dc) - (big_g + k) / 2.0) * as_ + ha * ax + hb * ap
        - hc * ((n + 1.0) * cxs.conj() + (n_at - 1.0) * sxs.conj());

    let d_sxx = -(g0 + eta) * s.s_xx + 2.0 * (ha * sxs.conj()).re + 2.0 * (hc * ax).re * inv;
    let d_sxp = (-I * d2 - (g0 + 2.0 * eta) / 2.0) * sxp + ha * sps.conj() - hb * sxs
        + hc * (ax * cxp - ap.conj() * inv);
    let d_sxs = (-I * da - (g0 + big_g + eta) / 2.0) * sxs + ha * (s.s_ss - s.s_xx) - hb * sxp
        - hc * as_.conj() * inv
        + hc * cxs * ax;
    let d_spp = -eta * s.s_pp + 2.0 * (hc * ap * cxp - hb * sps).re;
    let d_sps = (I * (d2 - da) - (big_g + eta) / 2.0) * sps - ha * sxp.conj()
        + hb * (s.s_ss - s.s_pp)
        + hc * (ap * cxs - cxp.conj() * as_.conj());
    let d_sss = -big_g * s.s_ss + 2.0 * (ha * sxs + hb * sps + hc * as_ * cxs).re;

    let d_pxx = -g0 * s.p_xx + gx * s.p_ss + 2.0 * (-ha * cxs + hc * ax.conj()).re;
    let d_ppp = gp * s.p_ss - 2.0 * (hb * cps).re;
    let d_pss = -(gx + gp) * s.p_ss + eta * pgg + 2.0 * (ha * cxs + hb * cps).re;

    let d_cxp = (-I * d2 - g0 / 2.0) * cxp + ha * cps.conj() - hb * cxs + hc * ap.conj();
    let d_cxs =
        (-I * da - (g0 + gx + gp) / 2.0) * cxs + ha * (s.p_ss - s.p_xx) - hb * cxp + hc * as_.conj();
    let d_cps = (I * (d2 - da) - (gx + gp) / 2.0) * cps - ha * cxp.conj() + hb * (s.p_ss - s.p_pp);

    MeanFieldState {
        n_photon: d_n,
        c_xg_a: d_ax,
        c_pg_a: d_ap,
        c_sg_a: d_as,
        s_xx: d_sxx,
        s_xp: d_sxp,
        s_xs: d_sxs,
        s_ps: d_sps,
        s_pp: d_spp,
        s_ss: d_sss,
        p_xx: d_pxx,
        p_pp: d_ppp,
        p_ss: d_pss,
        c_xp: d_cxp,
        c_xs: d_cxs,
        c_ps: d_cps,
    }
}

/// The 4×4 matrix governing [⟨a†(t)a⟩, ⟨σxg(t)a⟩, ⟨σPg(t)a⟩, ⟨σSg(t)a⟩].
pub fn regression_matrix(p: &PhysicalParams, s: &MeanFieldState) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let r = |v: f64| Complex64::new(v, 0.0);
    let (oc, oa, ob) = (p.omega_c_rabi, p.omega_alpha, p.omega_beta);
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            -2.0 * I * p.delta_c + p.kappa,
            -I * p.n() * oc,
            z,
            z,
            I * oc * s.inversion(),
            r(p.gamma0 + p.eta),
            z,
            -I * oa,
            I * oc * s.c_xp.conj(),
            z,
            -2.0 * I * p.delta_two() + p.eta,
            -I * ob,
            I * oc * s.c_xs.conj(),
            -I * oa,
            -I * ob,
            -2.0 * I * p.delta_alpha + p.big_gamma(),
        ],
    );
    m * Complex64::new(-0.5, 0.0)
}

pub fn regression_seed(s: &MeanFieldState) -> DVector<Complex64> {
    DVector::from_vec(vec![
        Complex64::new(s.n_photon, 0.0),
        s.c_xg_a,
        s.c_pg_a,
        s.c_sg_a,
    ])
}

/// Closed-form linewidth estimate in terms of steady single-atom values.
pub fn analytic_linewidth(p: &PhysicalParams, s: &MeanFieldState) -> Result<f64> {
    let (oa, ob, eta, g0) = (p.omega_alpha, p.omega_beta, p.eta, p.gamma0);
    let big_g = p.big_gamma();
    let f = p.f_factor();
    if f == 0.0 {
        return Err(SimError::SingularFormula { denominator: 0.0 });
    }
    let inv = s.inversion();
    // ⟨σSx⟩ = conj(⟨σxS⟩), ⟨σPx⟩ = conj(⟨σxP⟩)
    let im_sx = -s.c_xs.im;
    let re_px = s.c_xp.re;
    let coll = p.n() * p.omega_c_rabi.powi(2) / f;
    let num = p.kappa + coll * (eta * oa * im_sx + oa * ob * re_px - (eta * big_g + ob * ob) * inv);
    let den = 1.0
        + p.kappa / f * (eta * big_g + (g0 + eta) * (big_g + eta) + oa * oa + ob * ob)
        + coll * (oa * im_sx - (big_g + eta) * inv);
    if den.abs() < 1e-12 {
        return Err(SimError::SingularFormula { denominator: den });
    }
    Ok((num / den).abs())
}

#[derive(Debug, Clone)]
pub struct FourLevel {
    params: PhysicalParams,
}

impl FourLevel {
    pub fn new(params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl LasingModel for FourLevel {
    fn name(&self) -> &'static str {
        "four-level"
    }

    fn dim(&self) -> usize {
        STATE_DIM
    }

    fn physical(&self) -> &PhysicalParams {
        &self.params
    }

    fn rebuild(&self, params: PhysicalParams) -> Result<Box<dyn LasingModel>> {
        Ok(Box::new(FourLevel::new(params)?))
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let d = rhs_state(&MeanFieldState::from_slice(y), &self.params);
        dy.copy_from_slice(&d.to_array());
    }

    fn scale_floors(&self) -> Vec<f64> {
        let mut f = vec![1e-6; STATE_DIM];
        f[0] = 1.0;
        f[1..7].fill(1e-3);
        // populations carry rounding from the implied ground-state population
        f[16..19].fill(1e-4);
        f
    }

    fn check_state(&self, y: &[f64], tol: f64) -> Result<()> {
        let s = MeanFieldState::from_slice(y);
        s.check_finite()?;
        s.check_closure(tol)
    }

    fn regression_matrix(&self, y: &[f64]) -> DMatrix<Complex64> {
        regression_matrix(&self.params, &MeanFieldState::from_slice(y))
    }

    fn regression_seed(&self, y: &[f64]) -> DVector<Complex64> {
        regression_seed(&MeanFieldState::from_slice(y))
    }

    fn analytic_linewidth(&self, y: &[f64]) -> Result<f64> {
        analytic_linewidth(&self.params, &MeanFieldState::from_slice(y))
    }

    fn coherence_cbd(&self, y: &[f64]) -> Result<f64> {
        basis::coherence_cbd(&MeanFieldState::from_slice(y), &self.params)
    }

    fn four_level_state(&self, y: &[f64]) -> Option<MeanFieldState> {
        Some(MeanFieldState::from_slice(y))
    }

    fn filter_frame(&self, y: &[f64]) -> (PhysicalParams, MeanFieldState) {
        (self.params, MeanFieldState::from_slice(y))
    }
}
