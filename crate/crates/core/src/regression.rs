//! Linewidth and lasing frequency from the linear equations obeyed by
//! ⟨a†(t)a(0)⟩ and its partner correlators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{eig_lr, EigenSystem};
use crate::error::{Result, SimError};
use crate::model::LasingModel;
use crate::steady::{find_steady, SteadyState, Tolerances};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionResult {
    pub lambda_min: Complex64,
    /// 2|Re λ_min|, rad/s.
    pub linewidth: f64,
    /// Im λ_min, rad/s.
    pub lasing_offset: f64,
    /// Closed-form estimate, evaluated at zero detunings only.
    pub analytic_linewidth: Option<f64>,
    #[serde(skip)]
    pub eigen: Option<EigenSystem>,
    #[serde(skip)]
    pub index: usize,
}

pub fn build_b(model: &dyn LasingModel, steady: &SteadyState) -> Result<DMatrix<Complex64>> {
    steady.require_converged()?;
    Ok(model.regression_matrix(&steady.y))
}

/// Index of the resonant λ_min: among eigenvalues whose imaginary part is
/// zero within tolerance, the one with the smallest |Re|; otherwise the one
/// with the smallest |Im|. Modes carrying no spectral weight (|w_i| below
/// 1e-9 of the largest) are skipped when `weights` is given.
pub fn select_resonant(lambdas: &[Complex64], weights: &[Complex64], kappa: f64) -> usize {
    let real_like = |l: &Complex64| l.im.abs() <= 1e-6 * l.re.abs() + 1e-9 * kappa;
    let by_re = |a: &&(usize, &Complex64), b: &&(usize, &Complex64)| {
        a.1.re.abs().total_cmp(&b.1.re.abs())
    };
    let w_max = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let visible = |i: usize| weights.len() != lambdas.len() || w_max == 0.0 || weights[i].norm() > 1e-9 * w_max;
    let indexed: Vec<(usize, &Complex64)> = lambdas.iter().enumerate().filter(|(i, _)| visible(*i)).collect();
    if let Some((i, _)) = indexed.iter().filter(|(_, l)| real_like(l)).min_by(by_re) {
        return *i;
    }
    indexed
        .iter()
        .min_by(|a, b| {
            a.1.im
                .abs()
                .total_cmp(&b.1.im.abs())
                .then(a.1.re.abs().total_cmp(&b.1.re.abs()))
        })
        .map(|(i, _)| *i)
        .unwrap_or(0)
}

const HOMOTOPY_STEPS: usize = 16;
const MIN_OVERLAP: f64 = 0.7;

fn overlap(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).norm() / (a.norm() * b.norm())
}

/// Follows eigenvalue `start` of `b0` along (1−s)·b0 + s·b1 by eigenvector
/// overlap; returns the decomposition of `b1` and the tracked index.
pub fn track_eigenvalue(
    b0: &DMatrix<Complex64>,
    b1: &DMatrix<Complex64>,
    start: usize,
) -> Result<(EigenSystem, usize)> {
    let mut es = eig_lr(b0)?;
    let mut idx = start;
    let mut v: DVector<Complex64> = es.right_vecs.column(idx).into_owned();
    for k in 1..=HOMOTOPY_STEPS {
        let s = k as f64 / HOMOTOPY_STEPS as f64;
        let m = b0 * Complex64::new(1.0 - s, 0.0) + b1 * Complex64::new(s, 0.0);
        es = eig_lr(&m)?;
        let (best, ov) = (0..es.dim())
            .map(|j| (j, overlap(&v, &es.right_vecs.column(j).into_owned())))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty spectrum");
        if ov < MIN_OVERLAP {
            return Err(SimError::AmbiguousTracking { overlap: ov });
        }
        idx = best;
        v = es.right_vecs.column(idx).into_owned();
    }
    Ok((es, idx))
}

fn result_from(es: EigenSystem, idx: usize, analytic: Option<f64>) -> RegressionResult {
    let l = es.lambdas[idx];
    RegressionResult {
        lambda_min: l,
        linewidth: 2.0 * l.re.abs(),
        lasing_offset: l.im,
        analytic_linewidth: analytic,
        eigen: Some(es),
        index: idx,
    }
}

/// λ_min, Δν = 2|Re λ_min| and δ* = Im λ_min. Off resonance the
/// zero-detuning steady state is computed from `steady` and λ_min is
/// tracked from there.
pub fn linewidth_regression(
    model: &dyn LasingModel,
    steady: &SteadyState,
    tol: &Tolerances,
) -> Result<RegressionResult> {
    steady.require_converged()?;
    if model.physical().is_resonant() {
        return linewidth_at_resonance(model, steady);
    }
    let res_model = model.rebuild(model.physical().at_resonance())?;
    let res_steady = find_steady(res_model.as_ref(), &steady.y, tol)?;
    linewidth_tracked(model, steady, res_model.as_ref(), &res_steady)
}

pub fn linewidth_at_resonance(
    model: &dyn LasingModel,
    steady: &SteadyState,
) -> Result<RegressionResult> {
    let b = build_b(model, steady)?;
    let mut es = eig_lr(&b)?;
    es.set_seed(&model.regression_seed(&steady.y));
    let idx = select_resonant(&es.lambdas, &es.weights, model.kappa());
    split_line_check(&es, idx)?;
    let analytic = model.analytic_linewidth(&steady.y).ok();
    Ok(result_from(es, idx, analytic))
}

/// Rejects a resonant pick that is a faint background under narrower,
/// detuned modes: the line has split and no single width describes it.
fn split_line_check(es: &EigenSystem, idx: usize) -> Result<()> {
    let w_max = es.weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
    if w_max == 0.0 || es.weights[idx].norm() >= 1e-2 * w_max {
        return Ok(());
    }
    let picked = es.lambdas[idx].re.abs();
    let maxima: Vec<f64> = es
        .lambdas
        .iter()
        .zip(&es.weights)
        .filter(|(l, w)| w.norm() >= 1e-2 * w_max && l.re.abs() < picked)
        .map(|(l, _)| l.im)
        .collect();
    if maxima.is_empty() {
        return Ok(());
    }
    Err(SimError::MultiPeak { maxima })
}

/// Detuned λ_min, connected to the resonant one of `res_model`/`res_steady`.
pub fn linewidth_tracked(
    model: &dyn LasingModel,
    steady: &SteadyState,
    res_model: &dyn LasingModel,
    res_steady: &SteadyState,
) -> Result<RegressionResult> {
    let b0 = build_b(res_model, res_steady)?;
    let b1 = build_b(model, steady)?;
    let mut es0 = eig_lr(&b0)?;
    es0.set_seed(&res_model.regression_seed(&res_steady.y));
    let start = select_resonant(&es0.lambdas, &es0.weights, res_model.kappa());
    let (mut es, idx) = track_eigenvalue(&b0, &b1, start)?;
    es.set_seed(&model.regression_seed(&steady.y));
    Ok(result_from(es, idx, None))
}

/// S(Δ) = 2 Re Σ w_i / (iΔ − λ_i) on offsets Δ = ω − ω0.
pub fn lorentzian_spectrum(eigs: &EigenSystem, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if eigs.weights.len() != eigs.dim() {
        return Err(SimError::Eigen("spectrum needs a seeded eigensystem".into()));
    }
    let scale = eigs.lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    if let Some(l) = eigs.lambdas.iter().find(|l| l.re > 1e-12 * scale) {
        return Err(SimError::Unstable { re: l.re });
    }
    Ok(grid
        .iter()
        .map(|&d| {
            let s: Complex64 = eigs
                .lambdas
                .iter()
                .zip(&eigs.weights)
                .map(|(l, w)| w / (Complex64::new(0.0, d) - l))
                .sum();
            (d, 2.0 * s.re)
        })
        .collect())
}

/// Same spectrum from the Laplace-domain solution (iΔ − B)x = A(0), used
/// when the eigenvalues are too close for a stable modal expansion.
pub fn resolvent_spectrum(
    b: &DMatrix<Complex64>,
    a0: &DVector<Complex64>,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let n = b.nrows();
    grid.iter()
        .map(|&d| {
            let m = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, d) - b;
            let x = m
                .lu()
                .solve(a0)
                .ok_or_else(|| SimError::Eigen(format!("singular resolvent at offset {d}")))?;
            Ok((d, 2.0 * x[0].re))
        })
        .collect()
}

/// Spectrum of a steady state, using the modal sum unless the eigenvalues
/// are nearly degenerate.
pub fn steady_spectrum(
    model: &dyn LasingModel,
    steady: &SteadyState,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let b = build_b(model, steady)?;
    let a0 = model.regression_seed(&steady.y);
    let mut es = eig_lr(&b)?;
    if es.near_degenerate {
        return resolvent_spectrum(&b, &a0, grid);
    }
    es.set_seed(&a0);
    lorentzian_spectrum(&es, grid)
}
