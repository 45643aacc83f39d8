//! Batch commands behind the command-line front end. Each writes its
//! artifacts into an output directory and reports an exit code:
//! 0 on success, 1 on usage or configuration errors, 2 when the numerics
//! did not converge.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{Result, SimError};
use crate::linewidth::{annotate_rows, Filter, LinewidthMethod, LinewidthRegistry};
use crate::model::{tlm_reduce, LasingModel, ModelRegistry, TlmVariant};
use crate::observables::{power_from_photons, pulling_report};
use crate::output::{
    fmt_num, json_document, rows_to_csv, svg_heatmap, svg_plot, write_file, Plot, RowRecord, Series,
};
use crate::params::{hz, to_hz, PhysicalParams};
use crate::regression::linewidth_regression;
use crate::spectrum::scan_spectrum;
use crate::steady::{find_steady, hysteresis_intervals, sweep_eta, Direction, SteadyState, SweepRow, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Sweep,
    Spectrum,
    Linewidth,
    Pulling,
    Tlm,
    Figures,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Steady,
        Command::Sweep,
        Command::Spectrum,
        Command::Linewidth,
        Command::Pulling,
        Command::Tlm,
        Command::Figures,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Sweep => "sweep",
            Command::Spectrum => "spectrum",
            Command::Linewidth => "linewidth",
            Command::Pulling => "pulling",
            Command::Tlm => "tlm",
            Command::Figures => "figures",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SimError::UnknownStrategy {
                kind: "command",
                name: s.to_string(),
                available: Command::ALL.map(|c| c.as_str()).join(", "),
            })
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub message: String,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Usage and configuration problems map to 1, numerical failures to 2.
pub fn exit_code_for(e: &SimError) -> i32 {
    match e {
        SimError::Config { .. }
        | SimError::InvalidParameter { .. }
        | SimError::UnknownStrategy { .. }
        | SimError::Io(_) => EXIT_USAGE,
        _ => EXIT_NOT_CONVERGED,
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    dir: &'a Path,
    tol: Tolerances,
    models: ModelRegistry,
    methods: LinewidthRegistry,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn emit(&mut self, format: OutputFormat, name: &str, contents: impl FnOnce() -> String) -> Result<()> {
        if self.cfg.wants(format) {
            self.files.push(write_file(self.dir, name, &contents())?);
        }
        Ok(())
    }

    /// Figures always get their CSV and SVG.
    fn emit_always(&mut self, name: &str, contents: &str) -> Result<()> {
        self.files.push(write_file(self.dir, name, contents)?);
        Ok(())
    }

    fn model(&self, name: &str, p: &PhysicalParams) -> Result<Box<dyn LasingModel>> {
        self.models.build(name, p)
    }

    fn method_list(&self) -> Result<Vec<&dyn LinewidthMethod>> {
        self.cfg.linewidth_methods.iter().map(|m| self.methods.get(m)).collect()
    }

    fn steady(&self, model: &dyn LasingModel) -> Result<SteadyState> {
        find_steady(model, &model.vacuum(), &self.tol)
    }

    fn sweep(&self, model: &dyn LasingModel, grid: &[f64], direction: Direction) -> Result<Vec<SweepRow>> {
        let mut rows = sweep_eta(model, grid, direction, &self.tol)?;
        annotate_rows(model, &mut rows, &self.method_list()?, &self.tol);
        Ok(rows)
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let mut methods = LinewidthRegistry::with_builtins();
    methods.register(Box::new(Filter {
        plan: cfg.filter_plan(),
    }));
    let mut ctx = Ctx {
        cfg,
        dir: out_dir,
        tol: Tolerances::default(),
        models: ModelRegistry::with_builtins(),
        methods,
        files: Vec::new(),
    };
    ctx.method_list()?;
    let (exit_code, message) = match cmd {
        Command::Steady => steady_cmd(&mut ctx)?,
        Command::Sweep => sweep_cmd(&mut ctx, &cfg.model.clone(), "sweep", Value::Null)?,
        Command::Spectrum => spectrum_cmd(&mut ctx)?,
        Command::Linewidth => linewidth_cmd(&mut ctx)?,
        Command::Pulling => pulling_cmd(&mut ctx)?,
        Command::Tlm => {
            let variant: TlmVariant = cfg.tlm_variant.parse()?;
            let reduced = tlm_reduce(&cfg.physical(), variant)?;
            let extra = json!({ "variant": cfg.tlm_variant, "reduced_hz": {
                "eta": to_hz(reduced.eta),
                "decay_se": to_hz(reduced.decay_se),
                "decay_eg": to_hz(reduced.decay_eg),
                "cavity_coupling": to_hz(reduced.cavity_coupling),
                "coherent_coupling": to_hz(reduced.coherent_coupling),
            }});
            sweep_cmd(&mut ctx, variant.model_name(), "tlm", extra)?
        }
        Command::Figures => figures_cmd(&mut ctx)?,
    };
    Ok(Outcome {
        exit_code,
        files: ctx.files,
        message,
    })
}

fn steady_json(model: &dyn LasingModel, s: &SteadyState) -> Value {
    json!({
        "model": model.name(),
        "eta_hz": to_hz(model.physical().eta),
        "converged": s.converged,
        "stable": s.stable,
        "method": s.method,
        "residual_norm": s.residual_norm,
        "elapsed_model_time_s": s.elapsed_model_time,
        "n_photon": s.n_photon(),
        "power_w": power_from_photons(s.n_photon(), model.physical()),
        "state": model.four_level_state(&s.y),
    })
}

fn steady_cmd(ctx: &mut Ctx) -> Result<(i32, String)> {
    let model = ctx.model(&ctx.cfg.model, &ctx.cfg.physical())?;
    let s = ctx.steady(model.as_ref())?;
    let body = steady_json(model.as_ref(), &s);
    ctx.emit(OutputFormat::Json, "steady.json", || json_document("steady", body))?;
    let code = if s.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
    Ok((code, format!("n_photon = {:.6e}, converged = {}", s.n_photon(), s.converged)))
}

fn rows_plot(title: &str, y_label: &str, series: Vec<Series>) -> Plot {
    Plot {
        title: title.into(),
        x_label: "pump rate η/2π (Hz)".into(),
        y_label: y_label.into(),
        log_x: true,
        log_y: true,
        series,
    }
}

fn power_points(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    rows.iter().filter(|r| r.converged).map(|r| (to_hz(r.eta), r.power_w)).collect()
}

fn linewidth_points(rows: &[SweepRow], pick: fn(&SweepRow) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.converged)
        .filter_map(|r| pick(r).map(|v| (to_hz(r.eta), to_hz(v))))
        .collect()
}

fn sweep_cmd(ctx: &mut Ctx, model_name: &str, stem: &str, extra: Value) -> Result<(i32, String)> {
    let model = ctx.model(model_name, &ctx.cfg.physical())?;
    let grid = ctx.cfg.eta_grid();
    let mut all: Vec<SweepRow> = Vec::new();
    let mut by_dir: Vec<(Direction, Vec<SweepRow>)> = Vec::new();
    for d in ctx.cfg.sweep.direction.list() {
        let rows = ctx.sweep(model.as_ref(), &grid, d)?;
        all.extend(rows.iter().cloned());
        by_dir.push((d, rows));
    }
    let hysteresis: Vec<[f64; 2]> = match by_dir.as_slice() {
        [(_, up), (_, down)] => hysteresis_intervals(up, down)
            .into_iter()
            .map(|(a, b)| [to_hz(a), to_hz(b)])
            .collect(),
        _ => Vec::new(),
    };
    let converged = all.iter().filter(|r| r.converged).count();
    ctx.emit(OutputFormat::Csv, &format!("{stem}.csv"), || rows_to_csv(&all))?;
    let records: Vec<RowRecord> = all.iter().map(RowRecord::from).collect();
    let mut body = json!({
        "model": model_name,
        "rows": records,
        "hysteresis_intervals_hz": hysteresis,
    });
    if let (Some(b), Value::Object(e)) = (body.as_object_mut(), extra) {
        b.extend(e);
    }
    ctx.emit(OutputFormat::Json, &format!("{stem}.json"), || json_document(stem, body))?;
    let power: Vec<Series> = by_dir
        .iter()
        .map(|(d, rows)| Series::new(format!("{model_name} {}", d.as_str()), power_points(rows)))
        .collect();
    let mut widths: Vec<Series> = Vec::new();
    for (d, rows) in &by_dir {
        for (label, pick) in [
            ("regression", (|r: &SweepRow| r.linewidth) as fn(&SweepRow) -> Option<f64>),
            ("analytic", |r: &SweepRow| r.linewidth_analytic),
            ("filter", |r: &SweepRow| r.linewidth_filter),
        ] {
            let pts = linewidth_points(rows, pick);
            if !pts.is_empty() {
                let s = Series::new(format!("{label} {}", d.as_str()), pts);
                widths.push(if label == "regression" { s } else { s.dashed() });
            }
        }
    }
    ctx.emit(OutputFormat::Svg, &format!("{stem}_power.svg"), || {
        svg_plot(&rows_plot("Output power", "P (W)", power))
    })?;
    ctx.emit(OutputFormat::Svg, &format!("{stem}_linewidth.svg"), || {
        svg_plot(&rows_plot("Linewidth", "Δν/2π (Hz)", widths))
    })?;
    let code = if converged == 0 { EXIT_NOT_CONVERGED } else { EXIT_OK };
    Ok((code, format!("{converged}/{} sweep points converged", all.len())))
}

fn lasing_steady(ctx: &Ctx, p: &PhysicalParams) -> Result<(Box<dyn LasingModel>, SteadyState)> {
    let model = ctx.model(&ctx.cfg.model, p)?;
    let s = ctx.steady(model.as_ref())?;
    s.require_converged()?;
    Ok((model, s))
}

fn spectrum_cmd(ctx: &mut Ctx) -> Result<(i32, String)> {
    let (model, s) = match lasing_steady(ctx, &ctx.cfg.physical()) {
        Ok(v) => v,
        Err(e @ SimError::NotConverged { .. }) => return Ok((EXIT_NOT_CONVERGED, e.to_string())),
        Err(e) => return Err(e),
    };
    let spec = scan_spectrum(model.as_ref(), &s, &ctx.cfg.filter_plan())?;
    let reg = linewidth_regression(model.as_ref(), &s, &ctx.tol).ok();
    ctx.emit(OutputFormat::Csv, "spectrum.csv", || {
        let mut out = String::from("offset_hz,n_filter\n");
        for (w, n) in &spec.points {
            out.push_str(&format!("{},{}\n", fmt_num(to_hz(*w)), fmt_num(*n)));
        }
        out
    })?;
    let body = json!({
        "model": model.name(),
        "eta_hz": to_hz(model.physical().eta),
        "peak_offset_hz": to_hz(spec.peak_omega),
        "fwhm_hz": to_hz(spec.fwhm),
        "fit_quality": spec.fit_quality,
        "zeta_hz": to_hz(spec.zeta),
        "kappa_f_hz": to_hz(spec.kappa_f),
        "regression_linewidth_hz": reg.as_ref().map(|r| to_hz(r.linewidth)),
        "points": spec.points.len(),
    });
    ctx.emit(OutputFormat::Json, "spectrum.json", || json_document("spectrum", body))?;
    let pts: Vec<(f64, f64)> = spec.points.iter().map(|(w, n)| (to_hz(*w), *n)).collect();
    ctx.emit(OutputFormat::Svg, "spectrum.svg", || {
        svg_plot(&Plot {
            title: "Filter-cavity spectrum".into(),
            x_label: "(ωb − ω0)/2π (Hz)".into(),
            y_label: "⟨b†b⟩".into(),
            log_x: false,
            log_y: false,
            series: vec![Series::new("⟨b†b⟩", pts)],
        })
    })?;
    Ok((EXIT_OK, format!("FWHM = {:.6e} Hz", to_hz(spec.fwhm))))
}

fn value_or_error(r: Result<f64>) -> Value {
    match r {
        Ok(v) => json!({ "hz": to_hz(v) }),
        Err(e) => json!({ "hz": null, "error": e.to_string() }),
    }
}

fn linewidth_cmd(ctx: &mut Ctx) -> Result<(i32, String)> {
    let (model, s) = match lasing_steady(ctx, &ctx.cfg.physical()) {
        Ok(v) => v,
        Err(e @ SimError::NotConverged { .. }) => return Ok((EXIT_NOT_CONVERGED, e.to_string())),
        Err(e) => return Err(e),
    };
    let reg = linewidth_regression(model.as_ref(), &s, &ctx.tol);
    let mut methods = serde_json::Map::new();
    for name in ctx.methods.names() {
        let m = ctx.methods.get(name)?;
        methods.insert(name.into(), value_or_error(m.linewidth(model.as_ref(), &s, &ctx.tol)));
    }
    let mut body = steady_json(model.as_ref(), &s);
    let b = body.as_object_mut().expect("object");
    b.remove("state");
    b.insert("linewidth".into(), Value::Object(methods));
    if let Ok(r) = &reg {
        b.insert("lasing_offset_hz".into(), json!(to_hz(r.lasing_offset)));
        b.insert("lambda_min_hz".into(), json!([to_hz(r.lambda_min.re), to_hz(r.lambda_min.im)]));
    }
    b.insert("c_bd".into(), json!(model.coherence_cbd(&s.y).ok()));
    ctx.emit(OutputFormat::Json, "linewidth.json", || json_document("linewidth", body))?;
    let msg = match reg {
        Ok(r) => format!("regression linewidth = {:.6e} Hz", to_hz(r.linewidth)),
        Err(e) => e.to_string(),
    };
    Ok((EXIT_OK, msg))
}

fn pulling_cmd(ctx: &mut Ctx) -> Result<(i32, String)> {
    let (model, s) = match lasing_steady(ctx, &ctx.cfg.physical().at_resonance()) {
        Ok(v) => v,
        Err(e @ SimError::NotConverged { .. }) => return Ok((EXIT_NOT_CONVERGED, e.to_string())),
        Err(e) => return Err(e),
    };
    let r = pulling_report(model.as_ref(), &s, hz(ctx.cfg.pulling_step_hz), &ctx.tol)?;
    let body = json!({
        "model": model.name(),
        "eta_hz": to_hz(model.physical().eta),
        "c_p_cavity": r.c_p_cavity,
        "c_p_one_photon": r.c_p_one_photon,
        "c_p_two_photon": r.c_p_two_photon,
        "step_hz": to_hz(r.step_used),
        "richardson_error": r.richardson_error,
        "lasing_offset_at_resonance_hz": to_hz(r.lasing_offset_at_resonance),
        "entries": r.entries,
    });
    ctx.emit(OutputFormat::Json, "pulling.json", || json_document("pulling", body))?;
    Ok((
        EXIT_OK,
        format!(
            "c_p cavity = {:.3e}, one-photon = {:.3e}, two-photon = {:.4}",
            r.c_p_cavity, r.c_p_one_photon, r.c_p_two_photon
        ),
    ))
}

// ---- figures ----

const SQRT10: f64 = 3.162_277_660_168_379_3;

struct Curve {
    label: String,
    rows: Vec<SweepRow>,
}

fn curves_csv(curves: &[Curve], cols: &[(&str, fn(&SweepRow) -> Option<f64>)]) -> String {
    let mut s = String::from("curve,eta_hz");
    for (name, _) in cols {
        s.push(',');
        s.push_str(name);
    }
    s.push_str(",converged\n");
    for c in curves {
        for r in &c.rows {
            s.push_str(&c.label);
            s.push(',');
            s.push_str(&fmt_num(to_hz(r.eta)));
            for (_, pick) in cols {
                s.push(',');
                s.push_str(&pick(r).map(fmt_num).unwrap_or_default());
            }
            s.push_str(&format!(",{}\n", r.converged));
        }
    }
    s
}

fn power_col(r: &SweepRow) -> Option<f64> {
    Some(r.power_w)
}
fn width_col(r: &SweepRow) -> Option<f64> {
    r.linewidth.map(to_hz)
}
fn cbd_col(r: &SweepRow) -> Option<f64> {
    r.c_bd
}

/// Meets P ≥ 1e-10 W, Δν ≤ 2π×1 Hz and η ≤ 2π×10 kHz at once.
pub fn in_target_region(r: &SweepRow) -> bool {
    r.converged
        && r.power_w >= 1e-10
        && r.linewidth.is_some_and(|w| w <= hz(1.0))
        && r.eta <= hz(10e3) * (1.0 + 1e-12)
}

fn run_curves(ctx: &Ctx, specs: Vec<(String, &str, PhysicalParams)>, grid: &[f64]) -> Result<Vec<Curve>> {
    specs
        .into_par_iter()
        .map(|(label, model, p)| {
            let m = ctx.model(model, &p)?;
            Ok(Curve {
                label,
                rows: ctx.sweep(m.as_ref(), grid, Direction::Up)?,
            })
        })
        .collect()
}

fn figure_pair(
    ctx: &mut Ctx,
    stem: &str,
    curves: &[Curve],
    title: &str,
    y_label: &str,
    col: (&str, fn(&SweepRow) -> Option<f64>),
) -> Result<()> {
    ctx.emit_always(&format!("{stem}.csv"), &curves_csv(curves, &[col]))?;
    let series = curves
        .iter()
        .map(|c| {
            let pts = c
                .rows
                .iter()
                .filter(|r| r.converged)
                .filter_map(|r| col.1(r).map(|v| (to_hz(r.eta), v)))
                .collect();
            Series::new(c.label.clone(), pts)
        })
        .collect();
    ctx.emit_always(&format!("{stem}.svg"), &svg_plot(&rows_plot(title, y_label, series)))
}

fn figures_cmd(ctx: &mut Ctx) -> Result<(i32, String)> {
    let base = ctx.cfg.physical();
    let grid = ctx.cfg.eta_grid();
    let strengths = [("3.16 MHz", hz(SQRT10 * 1e6)), ("10 MHz", hz(10e6))];
    let model = ctx.cfg.model.clone();
    let mut total = 0usize;
    let mut converged = 0usize;
    let mut tally = |curves: &[Curve]| {
        for c in curves {
            total += c.rows.len();
            converged += c.rows.iter().filter(|r| r.converged).count();
        }
    };

    // power and linewidth against pump for three Raman ratios
    for (panel, ratio) in [("a", 1.0), ("b", SQRT10), ("c", 10.0)] {
        let specs = strengths
            .iter()
            .map(|(name, s)| (format!("strength {name}"), model.as_str(), base.with_raman(*s, ratio)))
            .collect();
        let curves = run_curves(ctx, specs, &grid)?;
        tally(&curves);
        let width_panel = (b'a' + (panel.as_bytes()[0] - b'a') + 3) as char;
        figure_pair(ctx, &format!("fig2{panel}"), &curves, &format!("Power, ratio {ratio:.3}"), "P (W)", ("power_w", power_col))?;
        figure_pair(
            ctx,
            &format!("fig2{width_panel}"),
            &curves,
            &format!("Linewidth, ratio {ratio:.3}"),
            "Δν/2π (Hz)",
            ("linewidth_hz", width_col),
        )?;
    }

    // pump × ratio maps
    let ratios: Vec<f64> = (0..=8).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    let specs = ratios
        .iter()
        .map(|r| (format!("ratio {r:.4}"), model.as_str(), base.with_raman(hz(SQRT10 * 1e6), *r)))
        .collect();
    let maps = run_curves(ctx, specs, &grid)?;
    tally(&maps);
    let mut csv = String::from("ratio,eta_hz,power_w,linewidth_hz,target_region,converged\n");
    for (r, c) in ratios.iter().zip(&maps) {
        for row in &c.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_num(*r),
                fmt_num(to_hz(row.eta)),
                fmt_num(row.power_w),
                width_col(row).map(fmt_num).unwrap_or_default(),
                in_target_region(row),
                row.converged
            ));
        }
    }
    let eta_hz: Vec<f64> = grid.iter().map(|e| to_hz(*e)).collect();
    let cell = |i: usize, j: usize| &maps[j].rows[i];
    let mark = |i: usize, j: usize| in_target_region(cell(i, j));
    ctx.emit_always("fig4a.csv", &csv)?;
    ctx.emit_always(
        "fig4a.svg",
        &svg_heatmap("Power (W)", "η/2π (Hz)", "Ωα/Ωβ", &eta_hz, &ratios, &|i, j| {
            Some(cell(i, j)).filter(|r| r.converged).map(|r| r.power_w)
        }, &mark),
    )?;
    ctx.emit_always("fig4b.csv", &csv)?;
    ctx.emit_always(
        "fig4b.svg",
        &svg_heatmap("Linewidth Δν/2π (Hz), lasing only", "η/2π (Hz)", "Ωα/Ωβ", &eta_hz, &ratios, &|i, j| {
            Some(cell(i, j))
                .filter(|r| r.converged && r.n_photon_s >= crate::steady::N_THRESHOLD)
                .and_then(width_col)
        }, &mark),
    )?;

    // pulling coefficients against ratio and against pump
    let step = hz(ctx.cfg.pulling_step_hz);
    let pull = |p: PhysicalParams| -> Option<[f64; 3]> {
        let (m, s) = lasing_steady(ctx, &p.at_resonance()).ok()?;
        let r = pulling_report(m.as_ref(), &s, step, &ctx.tol).ok()?;
        Some([r.c_p_cavity, r.c_p_one_photon, r.c_p_two_photon])
    };
    let pull_ratios = [1.0, SQRT10, 10.0, 10f64.powf(1.5), 100.0];
    let by_ratio: Vec<Option<[f64; 3]>> = pull_ratios
        .par_iter()
        .map(|r| pull(base.with_raman(hz(SQRT10 * 1e6), *r).with_eta(hz(5e3))))
        .collect();
    let pull_etas = [1e3, 2e3, 5e3, 1e4, 2e4];
    let by_eta: Vec<Option<[f64; 3]>> = pull_etas
        .par_iter()
        .map(|e| pull(base.with_raman(hz(SQRT10 * 1e6), 10.0).with_eta(hz(*e))))
        .collect();
    let names = ["c_p_cavity", "c_p_one_photon", "c_p_two_photon"];
    for (k, name) in names.iter().enumerate() {
        for (panel, xs, vals, x_name, log_x) in [
            ((b'a' + k as u8) as char, &pull_ratios[..], &by_ratio, "ratio", true),
            ((b'd' + k as u8) as char, &pull_etas[..], &by_eta, "eta_hz", true),
        ] {
            let mut csv = format!("{x_name},{name}\n");
            let mut pts = Vec::new();
            for (x, v) in xs.iter().zip(vals) {
                let y = v.map(|c| c[k]);
                csv.push_str(&format!("{},{}\n", fmt_num(*x), y.map(fmt_num).unwrap_or_default()));
                if let Some(y) = y {
                    pts.push((*x, y));
                }
            }
            ctx.emit_always(&format!("fig5{panel}.csv"), &csv)?;
            let plot = Plot {
                title: (*name).into(),
                x_label: if x_name == "ratio" { "Ωα/Ωβ".into() } else { "η/2π (Hz)".into() },
                y_label: (*name).into(),
                log_x,
                log_y: false,
                series: vec![Series::new(*name, pts)],
            };
            ctx.emit_always(&format!("fig5{panel}.svg"), &svg_plot(&plot))?;
        }
    }

    // four-level model against the reduced three-level models
    let p7 = base.with_raman(hz(SQRT10 * 1e6), SQRT10);
    let specs = vec![
        ("four-level".to_string(), model.as_str(), p7),
        ("dark-tlm".to_string(), "dark-tlm", p7),
        ("bright-tlm".to_string(), "bright-tlm", p7),
    ];
    let curves7 = run_curves(ctx, specs, &grid)?;
    tally(&curves7);
    figure_pair(ctx, "fig7a", &curves7, "Power", "P (W)", ("power_w", power_col))?;
    figure_pair(ctx, "fig7b", &curves7, "Linewidth", "Δν/2π (Hz)", ("linewidth_hz", width_col))?;

    // linewidth and dark/bright coherence for increasing Raman strength
    let mut specs: Vec<(String, &str, PhysicalParams)> = [("3.16 MHz", SQRT10 * 1e6), ("10 MHz", 10e6), ("100 MHz", 100e6)]
        .iter()
        .map(|(name, s)| (format!("strength {name}"), model.as_str(), base.with_raman(hz(*s), SQRT10)))
        .collect();
    specs.push(("dark-tlm 100 MHz".into(), "dark-tlm", base.with_raman(hz(100e6), SQRT10)));
    let curves8 = run_curves(ctx, specs, &grid)?;
    tally(&curves8);
    figure_pair(ctx, "fig8a", &curves8, "Linewidth", "Δν/2π (Hz)", ("linewidth_hz", width_col))?;
    let four_only: Vec<Curve> = curves8
        .into_iter()
        .filter(|c| c.label.starts_with("strength"))
        .collect();
    figure_pair(ctx, "fig8b", &four_only, "Dark/bright coherence", "C_BD", ("c_bd", cbd_col))?;

    let code = if converged == 0 { EXIT_NOT_CONVERGED } else { EXIT_OK };
    Ok((code, format!("{converged}/{total} sweep points converged across all panels")))
}
