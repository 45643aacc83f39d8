//! Seeded property checks shared by the individual suites and by the
//! acceptance gate. Each returns a description of the first violation.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superlase_core::commands::{run_command, Command, EXIT_OK};
use superlase_core::config::{emit_config, parse_config, OutputFormat, RunConfig, SweepDirections};
use superlase_core::eigen::eig_lr;
use superlase_core::integrate::{Rosenbrock23, StepControl};
use superlase_core::model::three_level::{tlm_rhs, TlmParams, TLM_DIM};
use superlase_core::model::{derivative, FourLevel, LasingModel, ThreeLevel, TlmVariant};
use superlase_core::regression::linewidth_at_resonance;
use superlase_core::spectrum::{filter_rhs, scan_spectrum, FilterConfig, FilterPlan, SpectrumResult, FILTER_DIM};
use superlase_core::state::{MeanFieldState, STATE_DIM};
use superlase_core::steady::find_steady;
use superlase_core::{hz, PhysicalParams, SteadyState, Tolerances};

use super::shadow::{self, Shadow, REAL_SLOTS};
use super::symbolic::*;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

pub fn vacuum_fixed_point() -> Check {
    let p = PhysicalParams::default().with_eta(0.0);
    let models: Vec<Box<dyn LasingModel>> = vec![
        Box::new(FourLevel::new(p).map_err(|e| e.to_string())?),
        Box::new(ThreeLevel::new(p, TlmVariant::Dark).map_err(|e| e.to_string())?),
        Box::new(ThreeLevel::new(p, TlmVariant::Bright).map_err(|e| e.to_string())?),
    ];
    for m in &models {
        let mut dy = vec![1.0; m.dim()];
        m.rhs(&m.vacuum(), &mut dy);
        ensure!(dy.iter().all(|v| *v == 0.0), "{}: vacuum drifts: {dy:?}", m.name());
    }
    Ok(())
}

/// Integrates the complex shadow from `y` and checks that fields the
/// library stores as reals never leave the real axis.
pub fn realness_case(p: &PhysicalParams, y: &[f64]) -> Check {
    let sys = four_level_system(&shadow::input(p));
    let eqs: Vec<Vec<Mono>> = four_level_targets().iter().map(|(_, op)| sys.heisenberg(op)).collect();
    let mut s = Shadow::from_flat(y);
    let lib = derivative(&MeanFieldState::from_slice(y), p).map_err(|e| e.to_string())?;
    let start = Shadow::from_flat(&lib.to_array());
    for (a, b) in shadow::shadow_rhs(&sys, &eqs, &s).iter().zip(start.0.iter()) {
        ensure!((a - b).norm() <= 1e-9 * b.norm().max(1.0), "shadow rhs {a} vs library {b}");
    }
    let h = 2e-10;
    for _ in 0..2000 {
        let k1 = shadow::shadow_rhs(&sys, &eqs, &s);
        let k2 = shadow::shadow_rhs(&sys, &eqs, &shadow::axpy(&s, &k1, h / 2.0));
        let k3 = shadow::shadow_rhs(&sys, &eqs, &shadow::axpy(&s, &k2, h / 2.0));
        let k4 = shadow::shadow_rhs(&sys, &eqs, &shadow::axpy(&s, &k3, h));
        for i in 0..16 {
            s.0[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }
    for &slot in &REAL_SLOTS {
        let v = s.0[slot];
        ensure!(v.re.is_finite(), "slot {slot} diverged");
        ensure!(v.im.abs() <= 1e-10 * v.norm().max(1e-300), "slot {slot} = {v}");
    }
    Ok(())
}

/// A random start near the physical region: populations inside the
/// simplex, small coherences, up to 50 photons. Pair correlations are kept
/// at the 1/√N scale; larger ones drive a superradiant burst that outruns
/// any fixed step.
pub fn random_start(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y: Vec<f64> = (0..STATE_DIM).map(|_| rng.random_range(-0.05..0.05)).collect();
    for v in &mut y[7..16] {
        *v *= 1e-2;
    }
    y[0] = rng.random_range(0.0..50.0);
    for k in [16, 17, 18] {
        y[k] = 0.1 + y[k].abs();
    }
    for k in [7, 14, 15] {
        y[k] = y[k].abs();
    }
    y
}

pub fn realness(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let mut p = PhysicalParams::default().with_eta(hz(rng.random_range(1e3..1e6)));
        if case % 2 == 1 {
            p = p.with_detunings(hz(3e3), hz(-2e4), hz(5e4));
        }
        let y = random_start(&mut rng);
        realness_case(&p, &y).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

/// [p_xx, p_pp, p_ss, 1] evolves under a constant 4×4 generator when all
/// coherent couplings vanish.
fn rate_generator(p: &PhysicalParams) -> Matrix4<f64> {
    let (gx, gp, g0, eta) = (p.gamma_x, p.gamma_p, p.gamma0, p.eta);
    Matrix4::new(
        -g0, 0.0, gx, 0.0, //
        0.0, 0.0, gp, 0.0, //
        -eta, -eta, -eta - gx - gp, eta, //
        0.0, 0.0, 0.0, 0.0,
    )
}

pub fn rate_equation_limit() -> Check {
    let mut p = PhysicalParams::default().with_eta(hz(20e3));
    p.omega_c_rabi = 0.0;
    p.omega_alpha = 0.0;
    p.omega_beta = 0.0;
    let m = FourLevel::new(p).map_err(|e| e.to_string())?;
    let f = |y: &[f64], dy: &mut [f64]| m.rhs(y, dy);
    let mut y = m.vacuum();
    let scale = m.scale_floors();
    let mut r = Rosenbrock23::new(StepControl {
        max_steps: usize::MAX,
        ..Default::default()
    });
    let gen = rate_generator(&p);
    let mut t = 0.0;
    let mut advance = |t: &mut f64, y: &mut Vec<f64>, t_end: f64| -> Check {
        while *t < t_end {
            *t = r.step(&f, *t, y, &scale, t_end).ok_or("integrator failed")?;
        }
        Ok(())
    };
    for t_end in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
        advance(&mut t, &mut y, t_end)?;
        let want = (gen * t).exp() * Vector4::new(0.0, 0.0, 0.0, 1.0);
        for (k, idx) in [16, 17, 18].into_iter().enumerate() {
            ensure!((y[idx] - want[k]).abs() < 1e-7, "t = {t}, component {idx}: {} vs {}", y[idx], want[k]);
        }
        let s = MeanFieldState::from_slice(&y);
        ensure!(s.n_photon == 0.0, "photons appeared without coupling");
        ensure!(
            s.c_xg_a.norm() + s.c_xp.norm() + s.c_xs.norm() + s.c_ps.norm() == 0.0,
            "coherences appeared without coupling"
        );
    }
    // |P⟩ has no way out
    advance(&mut t, &mut y, 1.0)?;
    ensure!((y[17] - 1.0).abs() < 1e-6, "p_pp(∞) = {}", y[17]);
    Ok(())
}

const ORACLE_REL: f64 = 1e-12;

fn random_params(rng: &mut ChaCha8Rng) -> PhysicalParams {
    let mut f = |lo: f64, hi: f64| hz(10f64.powf(rng.random_range(lo..hi)));
    let mut p = PhysicalParams {
        n_atoms: 0,
        kappa: f(4.0, 6.0),
        gamma0: f(3.0, 4.5),
        gamma_x: f(5.0, 7.0),
        gamma_p: f(5.0, 7.0),
        eta: f(2.0, 7.0),
        omega_c_rabi: f(3.0, 5.0),
        omega_alpha: f(5.0, 8.0),
        omega_beta: f(5.0, 8.0),
        delta_c: f(2.0, 5.0),
        delta_alpha: -f(2.0, 5.0),
        delta_beta: f(2.0, 5.0),
        lasing_wavelength: 689e-9,
    };
    p.n_atoms = rng.random_range(2..1_000_000);
    p
}

fn random_flat(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.3..0.3)).collect();
    y[0] = 10f64.powf(rng.random_range(-2.0..5.0));
    y
}

fn oracle_input(p: &PhysicalParams, filter: Option<(f64, f64, f64)>) -> FourLevelInput {
    FourLevelInput {
        filter,
        ..shadow::input(p)
    }
}

fn compare(names: &[&str], got: &[f64], want: &[f64], scale: &[f64], case: usize) -> Check {
    for i in 0..want.len() {
        let err = (got[i] - want[i]).abs();
        ensure!(
            err <= ORACLE_REL * scale[i].max(f64::MIN_POSITIVE),
            "case {case}, component {i} ({}): got {}, derived {}, scale {}",
            names[i],
            got[i],
            want[i],
            scale[i]
        );
    }
    Ok(())
}

fn flat_names(targets: &[(&'static str, Mono)]) -> Vec<&'static str> {
    let mut v = Vec::new();
    for (name, _) in targets {
        v.push(*name);
        if !is_real_target(name) {
            v.push(*name);
        }
    }
    v
}

pub fn oracle_four_level(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = four_level_targets();
    let names = flat_names(&targets);
    for case in 0..cases {
        let p = random_params(&mut rng);
        let y = random_flat(&mut rng, STATE_DIM);
        let sys = four_level_system(&oracle_input(&p, None));
        let vals = FourLevelValues::from_flat(&y);
        let (want, scale) = flatten(&sys, &targets, &|f| vals.lookup(f));
        let got = derivative(&MeanFieldState::from_slice(&y), &p).map_err(|e| e.to_string())?.to_array();
        compare(&names, &got, &want, &scale, case)?;
    }
    Ok(())
}

pub fn oracle_filter(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = filter_targets();
    let names = flat_names(&targets);
    for case in 0..cases {
        let p = random_params(&mut rng);
        let y = random_flat(&mut rng, STATE_DIM);
        let z = random_flat(&mut rng, FILTER_DIM);
        let zeta = hz(rng.random_range(1.0..100.0));
        let kappa_f = hz(rng.random_range(10.0..1000.0));
        let delta_b = hz(rng.random_range(-1e4..1e4));
        let sys = four_level_system(&oracle_input(&p, Some((zeta, kappa_f, delta_b))));
        let vals = FourLevelValues::from_flat(&y).with_filter(&z);
        let (want, scale) = flatten(&sys, &targets, &|f| vals.lookup(f));
        let mut got = [0.0; FILTER_DIM];
        filter_rhs(&p, &MeanFieldState::from_slice(&y), zeta, kappa_f, delta_b, &z, &mut got);
        compare(&names, &got, &want, &scale, case)?;
    }
    Ok(())
}

pub fn oracle_three_level(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = three_level_targets();
    let names = flat_names(&targets);
    for case in 0..cases {
        let p = random_params(&mut rng);
        let t = TlmParams {
            n_atoms: p.n_atoms,
            kappa: p.kappa,
            eta: p.eta,
            decay_se: p.gamma_x,
            decay_eg: p.gamma0,
            cavity_coupling: p.omega_c_rabi,
            coherent_coupling: p.omega_alpha,
            delta_c: p.delta_c,
            delta_s: p.delta_alpha,
        };
        let y = random_flat(&mut rng, TLM_DIM);
        let sys = three_level_system(&ThreeLevelInput {
            n_atoms: p.n(),
            kappa: t.kappa,
            eta: t.eta,
            decay_se: t.decay_se,
            decay_eg: t.decay_eg,
            cavity: t.cavity_coupling,
            coherent: t.coherent_coupling,
            delta_c: t.delta_c,
            delta_s: t.delta_s,
        });
        let vals = ThreeLevelValues::from_flat(&y);
        let (want, scale) = flatten(&sys, &targets, &|f| vals.lookup(f));
        let mut got = [0.0; TLM_DIM];
        tlm_rhs(&t, &y, &mut got);
        compare(&names, &got, &want, &scale, case)?;
    }
    Ok(())
}

/// Biorthonormality, trace, reconstruction, ordering and seeded weights of
/// one decomposition. Nearly degenerate matrices pass trivially.
pub fn eigen_case(m: &DMatrix<C>) -> Check {
    let es = eig_lr(m).map_err(|e| e.to_string())?;
    if es.near_degenerate {
        return Ok(());
    }
    let n = m.nrows();
    let id = &es.left_vecs * &es.right_vecs;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            ensure!((id[(i, j)] - C::new(want, 0.0)).norm() < 1e-10, "⟨{i}|{j}⟩ = {}", id[(i, j)]);
        }
    }
    let tr: C = es.lambdas.iter().sum();
    ensure!((tr - m.trace()).norm() < 1e-10, "trace {tr} vs {}", m.trace());
    for (a, b) in es.reconstruct().iter().zip(m.iter()) {
        ensure!((a - b).norm() < 1e-9, "reconstruction {a} vs {b}");
    }
    ensure!(
        es.lambdas.windows(2).all(|w| w[0].re.abs() <= w[1].re.abs()),
        "eigenvalues out of order"
    );
    let a0 = DVector::from_fn(n, |i, _| m[(i, 0)]);
    let mut seeded = es.clone();
    seeded.set_seed(&a0);
    let total: C = seeded.weights.iter().sum();
    ensure!((total - a0[0]).norm() < 1e-9, "weights sum to {total}, want {}", a0[0]);
    Ok(())
}

pub fn eigen_identities(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = if case % 2 == 0 { 4 } else { 3 };
        let m = DMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        eigen_case(&m).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

fn explicit_scan(m: &FourLevel, s: &SteadyState, zeta_scale: f64) -> Result<SpectrumResult, String> {
    let est = linewidth_at_resonance(m, s).map_err(|e| e.to_string())?.linewidth;
    let kappa_f = est / 50.0;
    let grid = (0..81).map(|i| est * (-3.0 + 6.0 * i as f64 / 80.0)).collect();
    let plan = FilterPlan::Explicit(FilterConfig {
        zeta: kappa_f / 20.0 * zeta_scale,
        kappa_f,
        omega_b_grid: grid,
    });
    scan_spectrum(m, s, &plan).map_err(|e| e.to_string())
}

/// Halving or doubling the filter coupling leaves the line untouched and
/// scales the filter occupation by the square of the factor.
pub fn zeta_independence() -> Check {
    let m = FourLevel::new(PhysicalParams::default().with_eta(hz(3e3))).map_err(|e| e.to_string())?;
    let s = find_steady(&m, &m.vacuum(), &Tolerances::default()).map_err(|e| e.to_string())?;
    ensure!(s.converged, "steady state did not converge");
    let base = explicit_scan(&m, &s, 1.0)?;
    let peak = |r: &SpectrumResult| r.points.iter().map(|p| p.1).fold(0.0, f64::max);
    for factor in [0.5, 2.0] {
        let other = explicit_scan(&m, &s, factor)?;
        let want = factor * factor;
        ensure!(
            (peak(&other) / peak(&base) / want - 1.0).abs() < 0.01,
            "ζ×{factor}: peak ratio {}",
            peak(&other) / peak(&base)
        );
        ensure!(
            (other.fwhm / base.fwhm - 1.0).abs() < 0.01,
            "ζ×{factor}: fwhm {} vs {}",
            other.fwhm,
            base.fwhm
        );
        ensure!(
            (other.peak_omega - base.peak_omega).abs() < 0.01 * base.fwhm,
            "ζ×{factor}: peak moved from {} to {}",
            base.peak_omega,
            other.peak_omega
        );
    }
    Ok(())
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

fn rate(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.2) {
        0.0
    } else {
        10f64.powf(rng.random_range(-3.0..9.0))
    }
}

fn subset<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> Vec<T> {
    loop {
        let v: Vec<T> = xs.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !v.is_empty() {
            return v;
        }
    }
}

pub fn random_config(rng: &mut ChaCha8Rng) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.atoms.n = rng.random_range(1..10_000_000);
    cfg.atoms.gamma0_hz = rate(rng);
    cfg.atoms.gamma_x_hz = rate(rng);
    cfg.atoms.gamma_p_hz = rate(rng);
    cfg.atoms.wavelength_nm = rng.random_range(100.0..2000.0);
    cfg.cavity.kappa_hz = 10f64.powf(rng.random_range(0.0..8.0));
    cfg.cavity.coupling_hz = rate(rng);
    cfg.cavity.delta_c_hz = rng.random_range(-1e6..1e6);
    cfg.raman.strength_hz = rate(rng);
    cfg.raman.ratio = 10f64.powf(rng.random_range(-3.0..3.0));
    cfg.raman.delta_alpha_hz = rng.random_range(-1e6..1e6);
    cfg.raman.delta_beta_hz = rng.random_range(-1e6..1e6);
    cfg.eta_hz = rate(rng);
    cfg.model = pick(rng, &["four-level", "dark-tlm", "bright-tlm"]).into();
    cfg.sweep.eta_min_hz = 10f64.powf(rng.random_range(0.0..4.0));
    cfg.sweep.eta_max_hz = cfg.sweep.eta_min_hz * 10f64.powf(rng.random_range(0.1..5.0));
    cfg.sweep.points_per_decade = rng.random_range(1..40);
    cfg.sweep.direction = pick(rng, &[SweepDirections::Up, SweepDirections::Down, SweepDirections::Both]);
    cfg.spectrum.auto = rng.random_bool(0.5);
    cfg.spectrum.zeta_hz = rng.random_range(1e-3..1.0);
    cfg.spectrum.kappa_f_hz = rng.random_range(1.0..10.0);
    cfg.spectrum.span_hz = rng.random_range(1.0..100.0);
    cfg.spectrum.points = rng.random_range(3..200);
    cfg.pulling_step_hz = rng.random_range(1e-3..1e3);
    cfg.tlm_variant = pick(rng, &["dark", "bright"]).into();
    cfg.linewidth_methods = subset(rng, &["analytic", "filter", "regression"])
        .into_iter()
        .map(String::from)
        .collect();
    cfg.output.formats = subset(rng, &[OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg]);
    let len = rng.random_range(1..12);
    cfg.output.path = (0..len).map(|_| pick(rng, &['a', 'z', '0', '_', '/', 'q'])).collect();
    cfg
}

pub fn config_round_trip_case(cfg: &RunConfig) -> Check {
    let text = emit_config(cfg);
    let back = parse_config(&text).map_err(|e| format!("{e}\n{text}"))?;
    ensure!(&back == cfg, "round trip changed the config:\n{text}");
    ensure!(emit_config(&back) == text, "second emission differs");
    Ok(())
}

pub fn config_round_trip(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        config_round_trip_case(&random_config(&mut rng)).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

pub fn small_sweep_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.sweep.eta_min_hz = 1e3;
    cfg.sweep.eta_max_hz = 1e5;
    cfg.sweep.points_per_decade = 2;
    cfg.linewidth_methods = vec!["regression".into(), "analytic".into(), "filter".into()];
    cfg.output.formats = vec![OutputFormat::Csv];
    cfg
}

/// Runs the same sweep twice into fresh directories; returns the CSV text.
pub fn csv_determinism() -> Result<String, String> {
    let cfg = small_sweep_config();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let outcome = run_command(Command::Sweep, &cfg, dir.path()).map_err(|e| e.to_string())?;
        ensure!(outcome.exit_code == EXIT_OK, "sweep exited with {}", outcome.exit_code);
        runs.push(std::fs::read_to_string(dir.path().join("sweep.csv")).map_err(|e| e.to_string())?);
    }
    ensure!(runs[0] == runs[1], "two identical runs wrote different CSV");
    Ok(runs.swap_remove(0))
}
