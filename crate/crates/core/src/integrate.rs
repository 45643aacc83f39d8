//! Linearly implicit Rosenbrock (2,3) pair with an L-stable main step.

use nalgebra::{DMatrix, DVector};

/// Central-difference Jacobian; exact up to rounding for right-hand sides
/// that are at most quadratic in the state.
pub fn jacobian<F>(f: &F, y: &[f64], scale: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = scale[j].max(y[j].abs());
        yp[j] = y[j] + h;
        f(&yp, &mut fp);
        yp[j] = y[j] - h;
        f(&yp, &mut fm);
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            h_init: 1e-9,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rosenbrock23 {
    pub control: StepControl,
    pub h: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Rosenbrock23 {
    pub fn new(control: StepControl) -> Self {
        Self {
            h: control.h_init,
            control,
            steps: 0,
            rejected: 0,
        }
    }

    /// Advances `y` from `t` by one accepted step (retrying with smaller
    /// steps on rejection). Returns the new time, or `None` if the step size
    /// underflows or the state turns non-finite.
    pub fn step<F>(&mut self, f: &F, t: f64, y: &mut [f64], scale: &[f64], t_end: f64) -> Option<f64>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let n = y.len();
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;
        let jac = jacobian(f, y, scale);
        let mut f0 = vec![0.0; n];
        f(y, &mut f0);
        let f0v = DVector::from_column_slice(&f0);
        let ident = DMatrix::<f64>::identity(n, n);
        let mut ytmp = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; n];
        loop {
            let h = self.h.min(t_end - t).min(self.control.h_max);
            if !(h > 0.0) || h < 1e-30 {
                return None;
            }
            let w = &ident - &jac * (h * d);
            let lu = w.lu();
            let k1 = lu.solve(&f0v)?;
            for i in 0..n {
                ytmp[i] = y[i] + 0.5 * h * k1[i];
            }
            f(&ytmp, &mut f1);
            let f1v = DVector::from_column_slice(&f1);
            let k2 = lu.solve(&(&f1v - &k1))? + &k1;
            for i in 0..n {
                ytmp[i] = y[i] + h * k2[i];
            }
            f(&ytmp, &mut f2);
            let f2v = DVector::from_column_slice(&f2);
            let rhs3 = &f2v - (&k2 - &f1v) * e32 - (&k1 - &f0v) * 2.0;
            let k3 = lu.solve(&rhs3)?;
            let mut err = 0.0;
            for i in 0..n {
                let e = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
                let sc = self.control.atol + self.control.rtol * y[i].abs().max(ytmp[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                self.h *= 0.1;
                self.rejected += 1;
                continue;
            }
            let fac = (0.9 * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0);
            if err <= 1.0 {
                if ytmp.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                y.copy_from_slice(&ytmp);
                self.steps += 1;
                self.h = h * fac;
                return Some(t + h);
            }
            self.rejected += 1;
            self.h = h * fac.min(0.9);
        }
    }
}
