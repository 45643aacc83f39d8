//! Dense complex eigen-decomposition with biorthonormal left/right vectors.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Result, SimError};

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Sorted by ascending |Re λ|.
    pub lambdas: Vec<Complex64>,
    /// Column i is the right eigenvector |i⟩ (unit norm).
    pub right_vecs: DMatrix<Complex64>,
    /// Row i is the left eigenvector ⟨ĩ|, scaled so ⟨ĩ|j⟩ = δij.
    pub left_vecs: DMatrix<Complex64>,
    /// w_i = (|i⟩)₀ · ⟨ĩ|A(0)⟩; empty until [`EigenSystem::set_seed`].
    pub weights: Vec<Complex64>,
    pub near_degenerate: bool,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Right eigenvectors of an upper-triangular matrix by back substitution.
fn triangular_eigvecs(t: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let norm = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = norm * f64::EPSILON;
    let mut x = DMatrix::from_element(n, n, zero());
    for k in 0..n {
        let lam = t[(k, k)];
        x[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = zero();
            for l in j + 1..=k {
                acc += t[(j, l)] * x[(l, k)];
            }
            let mut den = t[(j, j)] - lam;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            x[(j, k)] = -acc / den;
        }
    }
    x
}

pub fn eig_lr(m: &DMatrix<Complex64>) -> Result<EigenSystem> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(SimError::Eigen("matrix must be square and non-empty".into()));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SimError::Eigen("non-finite matrix entry".into()));
    }
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), 1e-15, 100_000)
        .ok_or_else(|| SimError::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut v = &q * triangular_eigvecs(&t);
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        col /= Complex64::new(nrm, 0.0);
    }
    let raw: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        raw[a]
            .re
            .abs()
            .total_cmp(&raw[b].re.abs())
            .then(raw[a].im.total_cmp(&raw[b].im))
    });
    let lambdas: Vec<Complex64> = order.iter().map(|&i| raw[i]).collect();
    let right_vecs = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    let left_vecs = right_vecs
        .clone()
        .try_inverse()
        .ok_or_else(|| SimError::Eigen("eigenvectors are linearly dependent".into()))?;
    let scale = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut near_degenerate = false;
    for i in 0..n {
        for j in i + 1..n {
            if (lambdas[i] - lambdas[j]).norm() < 1e-8 * scale {
                near_degenerate = true;
            }
        }
    }
    Ok(EigenSystem {
        lambdas,
        right_vecs,
        left_vecs,
        weights: Vec::new(),
        near_degenerate,
    })
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn set_seed(&mut self, a0: &DVector<Complex64>) {
        let proj = &self.left_vecs * a0;
        self.weights = (0..self.dim())
            .map(|i| self.right_vecs[(0, i)] * proj[i])
            .collect();
    }

    /// Σ λi |i⟩⟨ĩ|.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, zero());
        for i in 0..n {
            let outer = self.right_vecs.column(i) * self.left_vecs.row(i);
            m += outer * self.lambdas[i];
        }
        m
    }
}
