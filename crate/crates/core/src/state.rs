//! The sixteen second-order correlators of the symmetric ensemble.
//!
//! Flat layout used by the integrator and Newton solver (25 real scalars):
//!
//! | index  | field      | correlator        |
//! |--------|------------|-------------------|
//! | 0      | n_photon   | ⟨a†a⟩             |
//! | 1, 2   | c_xg_a     | ⟨σxg a⟩           |
//! | 3, 4   | c_pg_a     | ⟨σPg a⟩           |
//! | 5, 6   | c_sg_a     | ⟨σSg a⟩           |
//! | 7      | s_xx       | ⟨σxg σgx⟩         |
//! | 8, 9   | s_xp       | ⟨σxg σgP⟩         |
//! | 10, 11 | s_xs       | ⟨σxg σgS⟩         |
//! | 12, 13 | s_ps       | ⟨σPg σgS⟩         |
//! | 14     | s_pp       | ⟨σPg σgP⟩         |
//! | 15     | s_ss       | ⟨σSg σgS⟩         |
//! | 16     | p_xx       | ⟨σxx⟩             |
//! | 17     | p_pp       | ⟨σPP⟩             |
//! | 18     | p_ss       | ⟨σSS⟩             |
//! | 19, 20 | c_xp       | ⟨σxP⟩             |
//! | 21, 22 | c_xs       | ⟨σxS⟩             |
//! | 23, 24 | c_ps       | ⟨σPS⟩             |
//!
//! Complex entries are stored as (re, im). Two-atom correlators refer to
//! distinct atoms. ⟨σgg⟩ is never stored; it follows from closure.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const STATE_DIM: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub n_photon: f64,
    pub c_xg_a: Complex64,
    pub c_pg_a: Complex64,
    pub c_sg_a: Complex64,
    pub s_xx: f64,
    pub s_xp: Complex64,
    pub s_xs: Complex64,
    pub s_ps: Complex64,
    pub s_pp: f64,
    pub s_ss: f64,
    pub p_xx: f64,
    pub p_pp: f64,
    pub p_ss: f64,
    pub c_xp: Complex64,
    pub c_xs: Complex64,
    pub c_ps: Complex64,
}

const FIELD_NAMES: [&str; STATE_DIM] = [
    "n_photon", "c_xg_a", "c_xg_a", "c_pg_a", "c_pg_a", "c_sg_a", "c_sg_a", "s_xx", "s_xp", "s_xp",
    "s_xs", "s_xs", "s_ps", "s_ps", "s_pp", "s_ss", "p_xx", "p_pp", "p_ss", "c_xp", "c_xp", "c_xs",
    "c_xs", "c_ps", "c_ps",
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl MeanFieldState {
    /// All atoms in |g⟩, cavity in vacuum.
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn p_gg(&self) -> f64 {
        1.0 - self.p_xx - self.p_pp - self.p_ss
    }

    /// Lasing-transition inversion ⟨σxx − σgg⟩.
    pub fn inversion(&self) -> f64 {
        self.p_xx - self.p_gg()
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        let s = self;
        [
            s.n_photon,
            s.c_xg_a.re,
            s.c_xg_a.im,
            s.c_pg_a.re,
            s.c_pg_a.im,
            s.c_sg_a.re,
            s.c_sg_a.im,
            s.s_xx,
            s.s_xp.re,
            s.s_xp.im,
            s.s_xs.re,
            s.s_xs.im,
            s.s_ps.re,
            s.s_ps.im,
            s.s_pp,
            s.s_ss,
            s.p_xx,
            s.p_pp,
            s.p_ss,
            s.c_xp.re,
            s.c_xp.im,
            s.c_xs.re,
            s.c_xs.im,
            s.c_ps.re,
            s.c_ps.im,
        ]
    }

    /// Panics if `y` is shorter than [`STATE_DIM`].
    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            n_photon: y[0],
            c_xg_a: c(y[1], y[2]),
            c_pg_a: c(y[3], y[4]),
            c_sg_a: c(y[5], y[6]),
            s_xx: y[7],
            s_xp: c(y[8], y[9]),
            s_xs: c(y[10], y[11]),
            s_ps: c(y[12], y[13]),
            s_pp: y[14],
            s_ss: y[15],
            p_xx: y[16],
            p_pp: y[17],
            p_ss: y[18],
            c_xp: c(y[19], y[20]),
            c_xs: c(y[21], y[22]),
            c_ps: c(y[23], y[24]),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.to_array().iter().position(|v| !v.is_finite()) {
            Some(i) => Err(SimError::NonFiniteState {
                field: FIELD_NAMES[i],
            }),
            None => Ok(()),
        }
    }

    /// Populations (including ⟨σgg⟩ by closure) within [−tol, 1+tol] and
    /// ⟨a†a⟩ ≥ −tol.
    pub fn check_closure(&self, tol: f64) -> Result<()> {
        let pops = [
            ("p_xx", self.p_xx),
            ("p_pp", self.p_pp),
            ("p_ss", self.p_ss),
            ("p_gg", self.p_gg()),
        ];
        for (name, p) in pops {
            if !(p >= -tol && p <= 1.0 + tol) {
                return Err(SimError::Unphysical(format!("{name} = {p}")));
            }
        }
        if !(self.n_photon >= -tol) {
            return Err(SimError::Unphysical(format!(
                "n_photon = {}",
                self.n_photon
            )));
        }
        Ok(())
    }

    /// Relative distance, component-wise max of |a−b| / max(|a|, |b|, floor).
    pub fn max_rel_diff(&self, other: &Self, floor: f64) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }
}
