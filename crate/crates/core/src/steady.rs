//! Steady states: adaptive march, Newton polish, continuation sweeps,
//! thresholds and hysteresis.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::integrate::{jacobian, Rosenbrock23, StepControl};
use crate::model::LasingModel;
use crate::state::{MeanFieldState, STATE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Steady when the weighted residual times 1/κ drops below this.
    pub tol_ss: f64,
    /// Longest model time to march, in units of 1/κ.
    pub max_time_kappa: f64,
    pub newton: bool,
    /// March residual at which Newton polishing is first attempted.
    pub newton_switch: f64,
    pub closure_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            tol_ss: 1e-9,
            max_time_kappa: 1e7,
            newton: true,
            newton_switch: 1e-3,
            closure_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    March,
    MarchNewton,
    /// Newton from the average of a self-sustained oscillation.
    CycleNewton,
    /// Newton continuation in η from a neighbouring fixed point.
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub y: Vec<f64>,
    pub residual_norm: f64,
    pub elapsed_model_time: f64,
    pub method: SolveMethod,
    pub converged: bool,
    /// Linearly stable fixed point. Unstable ones are still exact solutions
    /// of the steady-state equations but are not reached by time evolution.
    pub stable: bool,
}

impl SteadyState {
    pub fn n_photon(&self) -> f64 {
        self.y[0]
    }

    /// The four-level correlators, when this is a four-level state.
    pub fn state(&self) -> Option<MeanFieldState> {
        (self.y.len() == STATE_DIM).then(|| MeanFieldState::from_slice(&self.y))
    }

    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(SimError::NotConverged {
                residual: self.residual_norm,
                elapsed: self.elapsed_model_time,
            })
        }
    }
}

/// ‖f_i / (κ·max(|y_i|, floor_i))‖₂.
pub fn weighted_residual(model: &dyn LasingModel, y: &[f64]) -> f64 {
    let mut dy = vec![0.0; y.len()];
    model.rhs(y, &mut dy);
    residual_of(model, y, &dy)
}

fn residual_of(model: &dyn LasingModel, y: &[f64], dy: &[f64]) -> f64 {
    let k = model.kappa();
    let floors = model.scale_floors();
    dy.iter()
        .zip(y)
        .zip(&floors)
        .map(|((d, v), fl)| (d / (k * v.abs().max(*fl))).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn max_population_shift(a: &[f64], b: &[f64]) -> f64 {
    // everything except the photon number is bounded by one
    a.iter()
        .zip(b)
        .skip(1)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// No Jacobian eigenvalue with Re > 1e-10·max|λ|.
pub fn is_linearly_stable(model: &dyn LasingModel, y: &[f64]) -> bool {
    let f = |y: &[f64], dy: &mut [f64]| model.rhs(y, dy);
    let eig = jacobian(&f, y, &vec![1.0; y.len()]).complex_eigenvalues();
    let scale = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
    eig.iter().all(|l| l.re <= 1e-10 * scale)
}

struct NewtonGuard {
    max_shift: f64,
    require_stable: bool,
}

/// Damped Newton on f(y) = 0, accepted only if the result is physical and
/// within `guard.max_shift` of the start. Returns (state, residual, stable).
fn newton_polish(
    model: &dyn LasingModel,
    y0: &[f64],
    tol: &Tolerances,
    guard: NewtonGuard,
) -> Option<(Vec<f64>, f64, bool)> {
    let f = |y: &[f64], dy: &mut [f64]| model.rhs(y, dy);
    let n = y0.len();
    let ones = vec![1.0; n];
    let mut y = y0.to_vec();
    let mut r = weighted_residual(model, &y);
    let mut dy = vec![0.0; n];
    let mut trial = vec![0.0; n];
    for _ in 0..60 {
        if r < tol.tol_ss * 1e-3 {
            break;
        }
        let jac = jacobian(&f, &y, &ones);
        model.rhs(&y, &mut dy);
        let step = jac.lu().solve(&DVector::from_column_slice(&dy))?;
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-4 {
            for i in 0..n {
                trial[i] = y[i] - lambda * step[i];
            }
            let rt = weighted_residual(model, &trial);
            if rt.is_finite() && rt < (1.0 - 1e-4 * lambda) * r {
                y.copy_from_slice(&trial);
                r = rt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !(r < tol.tol_ss) {
        return None;
    }
    model.check_state(&y, tol.closure_tol).ok()?;
    if max_population_shift(&y, y0) > guard.max_shift {
        return None;
    }
    let stable = is_linearly_stable(model, &y);
    if guard.require_stable && !stable {
        return None;
    }
    Some((y, r, stable))
}

/// Initial length of the stall-detection window, in units of 1/κ.
const STALL_WINDOW_KAPPA: f64 = 100.0;
/// Consecutive windows without progress tolerated before the march is abandoned.
const MAX_STALLED_WINDOWS: usize = 20;

/// Marches toward a fixed point and polishes it with Newton.
///
/// When the march settles onto a limit cycle instead (the residual stops
/// improving over two windows and the window average is stationary), Newton
/// is started from that average. A fixed point found that way is returned as
/// converged; `stable` tells whether time evolution could reach it. After
/// [`MAX_STALLED_WINDOWS`] consecutive windows without progress on a
/// stationary average the march gives up and returns an unconverged result.
pub fn find_steady(model: &dyn LasingModel, init: &[f64], tol: &Tolerances) -> Result<SteadyState> {
    if init.len() != model.dim() {
        return Err(SimError::InvalidParameter {
            name: "init",
            reason: format!("expected {} components, got {}", model.dim(), init.len()),
        });
    }
    model.check_state(init, tol.closure_tol)?;
    let f = |y: &[f64], dy: &mut [f64]| model.rhs(y, dy);
    let k = model.kappa();
    let t_end = tol.max_time_kappa / k;
    let mut window = STALL_WINDOW_KAPPA / k;
    let jac_scale = vec![1.0; init.len()];
    let mut y = init.to_vec();
    let mut t = 0.0;
    let mut r = weighted_residual(model, &y);
    let mut next_newton = tol.newton_switch;
    let mut stepper = Rosenbrock23::new(StepControl {
        rtol: tol.rtol,
        atol: tol.atol,
        h_init: 1e-3 / k,
        max_steps: 1_000_000,
        ..Default::default()
    });
    let mut window_end = window;
    let mut window_avg = vec![0.0; init.len()];
    let mut window_best = f64::INFINITY;
    let mut best_history: Vec<f64> = Vec::new();
    let mut prev_avg: Option<Vec<f64>> = None;
    let mut stalled_windows = 0;
    let done = |y: Vec<f64>, r: f64, t: f64, method, converged, stable| SteadyState {
        y,
        residual_norm: r,
        elapsed_model_time: t,
        method,
        converged,
        stable,
    };
    loop {
        if tol.newton && r < next_newton && r >= tol.tol_ss * 1e-3 {
            let guard = NewtonGuard { max_shift: 0.05, require_stable: true };
            if let Some((yn, rn, _)) = newton_polish(model, &y, tol, guard) {
                return Ok(done(yn, rn, t, SolveMethod::MarchNewton, true, true));
            }
            next_newton = r * 1e-2;
        }
        if r < tol.tol_ss {
            let converged = model.check_state(&y, tol.closure_tol).is_ok();
            let stable = is_linearly_stable(model, &y);
            return Ok(done(y, r, t, SolveMethod::March, converged, stable));
        }
        if t >= t_end || stepper.steps >= stepper.control.max_steps {
            break;
        }
        let before = y.clone();
        match stepper.step(&f, t, &mut y, &jac_scale, t_end) {
            Some(tn) => {
                let dt = tn - t;
                for (a, (p, q)) in window_avg.iter_mut().zip(before.iter().zip(&y)) {
                    *a += 0.5 * (p + q) * dt;
                }
                t = tn;
            }
            None => {
                y = before;
                break;
            }
        }
        r = weighted_residual(model, &y);
        window_best = window_best.min(r);
        if t >= window_end {
            let span = t - (window_end - window);
            let avg: Vec<f64> = window_avg.iter().map(|a| a / span).collect();
            best_history.push(window_best);
            let stalled = best_history.len() >= 3 && {
                let h = &best_history[best_history.len() - 3..];
                h[2] > 0.1 * h[0]
            };
            // a limit cycle has a stationary average; a slow transient does not
            let recurrent = prev_avg.as_ref().is_some_and(|p| {
                max_population_shift(p, &avg) < 1e-3
                    && (p[0] - avg[0]).abs() <= 1e-2 * avg[0].abs().max(1.0)
            });
            if stalled && recurrent && tol.newton {
                let guard = NewtonGuard { max_shift: 0.2, require_stable: false };
                if let Some((yn, rn, stable)) = newton_polish(model, &avg, tol, guard) {
                    return Ok(done(yn, rn, t, SolveMethod::CycleNewton, true, stable));
                }
            }
            // A march that barely improves while its average still drifts is
            // relaxing on a slower scale than the window: widen the window.
            // Only a stationary, idle march counts toward giving up.
            let idle = best_history.len() >= 2 && window_best > 0.9 * best_history[best_history.len() - 2];
            if stalled && idle && !recurrent && prev_avg.is_some() {
                window *= 2.0;
            }
            stalled_windows = if stalled && idle && recurrent { stalled_windows + 1 } else { 0 };
            if stalled_windows >= MAX_STALLED_WINDOWS {
                break;
            }
            prev_avg = Some(avg);
            window_avg.fill(0.0);
            window_best = f64::INFINITY;
            window_end = t + window;
        }
    }
    let r = weighted_residual(model, &y);
    Ok(done(y, r, t, SolveMethod::March, false, false))
}

/// Follows the fixed-point branch through `from_y` (a steady state at
/// `from_eta`) to `to_eta` by Newton steps in η, halving the step on
/// failure. Works regardless of the branch's stability.
pub fn continue_fixed_point(
    model: &dyn LasingModel,
    from_eta: f64,
    from_y: &[f64],
    to_eta: f64,
    tol: &Tolerances,
) -> Result<SteadyState> {
    let mut eta = from_eta;
    let mut y = from_y.to_vec();
    let mut frac = 1.0;
    let mut last = None;
    while eta != to_eta {
        if frac < 1.0 / 1024.0 {
            let target = model.rebuild(model.physical().with_eta(to_eta))?;
            let r = weighted_residual(target.as_ref(), &y);
            return Err(SimError::NotConverged { residual: r, elapsed: 0.0 });
        }
        let next = if frac == 1.0 { to_eta } else { eta + frac * (to_eta - eta) };
        let m = model.rebuild(model.physical().with_eta(next))?;
        let guard = NewtonGuard { max_shift: 0.05, require_stable: false };
        match newton_polish(m.as_ref(), &y, tol, guard) {
            Some((yn, rn, stable)) => {
                y = yn;
                eta = next;
                last = Some((rn, stable));
                frac = (2.0 * frac).min(1.0);
            }
            None => frac *= 0.5,
        }
    }
    let m = model.rebuild(model.physical().with_eta(to_eta))?;
    let (residual_norm, stable) = match last {
        Some(v) => v,
        None => (weighted_residual(m.as_ref(), &y), is_linearly_stable(m.as_ref(), &y)),
    };
    Ok(SteadyState {
        y,
        residual_norm,
        elapsed_model_time: 0.0,
        method: SolveMethod::Continuation,
        converged: residual_norm < tol.tol_ss,
        stable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            _ => Err(SimError::InvalidParameter {
                name: "direction",
                reason: format!("expected up or down, got `{s}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub n_photon_s: f64,
    pub power_w: f64,
    pub linewidth: Option<f64>,
    pub linewidth_analytic: Option<f64>,
    pub linewidth_filter: Option<f64>,
    pub c_bd: Option<f64>,
    pub direction: Direction,
    pub converged: bool,
    #[serde(skip)]
    pub steady: Option<SteadyState>,
}

impl SweepRow {
    fn from_steady(eta: f64, direction: Direction, power_w: f64, s: SteadyState) -> Self {
        Self {
            eta,
            n_photon_s: s.n_photon(),
            power_w,
            linewidth: None,
            linewidth_analytic: None,
            linewidth_filter: None,
            c_bd: None,
            direction,
            converged: s.converged,
            steady: Some(s),
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(SimError::InvalidParameter {
            name: "eta_grid",
            reason: "empty grid".into(),
        });
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|v| !(*v >= 0.0)) {
        return Err(SimError::InvalidParameter {
            name: "eta_grid",
            reason: "must be non-negative and strictly ascending".into(),
        });
    }
    Ok(())
}

/// Continuation sweep in the chosen direction; rows are returned in
/// ascending η either way.
pub fn sweep_eta(
    model: &dyn LasingModel,
    eta_grid: &[f64],
    direction: Direction,
    tol: &Tolerances,
) -> Result<Vec<SweepRow>> {
    check_grid(eta_grid)?;
    let order: Vec<usize> = match direction {
        Direction::Up => (0..eta_grid.len()).collect(),
        Direction::Down => (0..eta_grid.len()).rev().collect(),
    };
    let mut rows: Vec<Option<SweepRow>> = vec![None; eta_grid.len()];
    let mut seed = model.vacuum();
    let mut seed_eta: Option<f64> = None;
    let mut seed_stable = true;
    for i in order {
        let eta = eta_grid[i];
        let m = model.rebuild(model.physical().with_eta(eta))?;
        let branch = |seed: &[f64], from: Option<f64>| {
            from.and_then(|f| continue_fixed_point(model, f, seed, eta, tol).ok())
                .filter(|c| c.converged)
        };
        // on an unstable branch a march cannot settle, so follow it directly
        let mut s = match branch(&seed, seed_eta.filter(|_| !seed_stable)) {
            Some(c) if !c.stable => c,
            _ => match find_steady(m.as_ref(), &seed, tol) {
                Ok(s) => s,
                // an unphysical continuation seed falls back to a cold start
                Err(SimError::Unphysical(_)) => find_steady(m.as_ref(), &m.vacuum(), tol)?,
                Err(e) => return Err(e),
            },
        };
        // no attractor nearby: follow the branch from the last fixed point
        if !s.converged {
            if let Some(c) = branch(&seed, seed_eta) {
                s = c;
            }
        }
        if s.converged {
            seed = s.y.clone();
            seed_eta = Some(eta);
            seed_stable = s.stable;
        }
        let power = crate::observables::power_from_photons(s.n_photon(), m.physical());
        rows[i] = Some(SweepRow::from_steady(eta, direction, power, s));
    }
    Ok(rows.into_iter().map(|r| r.expect("every grid point visited")).collect())
}

/// Independent cold starts from the vacuum, solved in parallel.
pub fn sweep_eta_cold(
    model: &dyn LasingModel,
    eta_grid: &[f64],
    tol: &Tolerances,
) -> Result<Vec<SweepRow>> {
    check_grid(eta_grid)?;
    eta_grid
        .par_iter()
        .map(|&eta| {
            let m = model.rebuild(model.physical().with_eta(eta))?;
            let s = find_steady(m.as_ref(), &m.vacuum(), tol)?;
            let power = crate::observables::power_from_photons(s.n_photon(), m.physical());
            Ok(SweepRow::from_steady(eta, Direction::Up, power, s))
        })
        .collect()
}

pub const N_THRESHOLD: f64 = 10.0;

/// η values where ⟨a†a⟩ crosses `level` along an up-sweep, refined by
/// bisection to a relative η width of 1e-3.
pub fn threshold(
    model: &dyn LasingModel,
    eta_grid: &[f64],
    level: f64,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let rows = sweep_eta(model, eta_grid, Direction::Up, tol)?;
    threshold_from_rows(model, &rows, level, tol)
}

pub fn threshold_from_rows(
    model: &dyn LasingModel,
    rows: &[SweepRow],
    level: f64,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut prev: Option<&SweepRow> = None;
    for row in rows.iter().filter(|r| r.converged) {
        if let Some(p) = prev {
            let below_then = p.n_photon_s < level;
            let below_now = row.n_photon_s < level;
            if below_then != below_now {
                out.push(bisect_crossing(model, p, row, level, tol)?);
            }
        }
        prev = Some(row);
    }
    Ok(out)
}

fn bisect_crossing(
    model: &dyn LasingModel,
    lo: &SweepRow,
    hi: &SweepRow,
    level: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let lo_below = lo.n_photon_s < level;
    let (mut a, mut b) = (lo.eta, hi.eta);
    let mut seed = lo.steady.as_ref().map(|s| s.y.clone()).unwrap_or_else(|| model.vacuum());
    while (b - a) > 1e-3 * b {
        let mid = if a > 0.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
        let m = model.rebuild(model.physical().with_eta(mid))?;
        let s = find_steady(m.as_ref(), &seed, tol)?;
        if !s.converged {
            break;
        }
        if (s.n_photon() < level) == lo_below {
            a = mid;
            seed = s.y;
        } else {
            b = mid;
        }
    }
    Ok(if a > 0.0 { (a * b).sqrt() } else { 0.5 * (a + b) })
}

/// Grid intervals where the up and down branches differ by more than a
/// factor of 10 in (⟨a†a⟩ + 1).
pub fn hysteresis_intervals(up: &[SweepRow], down: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for (u, d) in up.iter().zip(down) {
        let split = u.converged && d.converged && {
            let (a, b) = (u.n_photon_s.max(0.0) + 1.0, d.n_photon_s.max(0.0) + 1.0);
            a.max(b) > 10.0 * a.min(b)
        };
        open = match (open, split) {
            (None, true) => Some((u.eta, u.eta)),
            (Some((s, _)), true) => Some((s, u.eta)),
            (Some(iv), false) => {
                out.push(iv);
                None
            }
            (None, false) => None,
        };
    }
    out.extend(open);
    out
}

/// Logarithmic grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points_per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * points_per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}
