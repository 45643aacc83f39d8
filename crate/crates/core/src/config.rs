//! Run configuration: a sectioned `key = value` text format.
//!
//! Frequencies are written in linear Hz and accept a `k` or `M` suffix;
//! they are converted to angular units only when parameters are built.
//! `#` starts a comment. Every key is optional except `[atoms] n`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::params::{hz, raman_pair, PhysicalParams, DEFAULT_WAVELENGTH};
use crate::spectrum::{FilterConfig, FilterPlan};
use crate::steady::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirections {
    Up,
    Down,
    Both,
}

impl SweepDirections {
    pub fn list(self) -> Vec<Direction> {
        match self {
            SweepDirections::Up => vec![Direction::Up],
            SweepDirections::Down => vec![Direction::Down],
            SweepDirections::Both => vec![Direction::Up, Direction::Down],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            SweepDirections::Up => "up",
            SweepDirections::Down => "down",
            SweepDirections::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomsBlock {
    pub n: u64,
    pub gamma0_hz: f64,
    pub gamma_x_hz: f64,
    pub gamma_p_hz: f64,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityBlock {
    pub kappa_hz: f64,
    /// Single-atom cavity Rabi frequency Ωc.
    pub coupling_hz: f64,
    pub delta_c_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamanBlock {
    /// Ω̃ = √(Ωα² + Ωβ²).
    pub strength_hz: f64,
    /// Ωα/Ωβ.
    pub ratio: f64,
    pub delta_alpha_hz: f64,
    pub delta_beta_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub eta_min_hz: f64,
    pub eta_max_hz: f64,
    pub points_per_decade: usize,
    pub direction: SweepDirections,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBlock {
    /// Adaptive two-pass scan when true; otherwise the explicit grid below.
    pub auto: bool,
    pub zeta_hz: f64,
    pub kappa_f_hz: f64,
    /// Half-width of the explicit grid.
    pub span_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBlock {
    pub formats: Vec<OutputFormat>,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub atoms: AtomsBlock,
    pub cavity: CavityBlock,
    pub raman: RamanBlock,
    pub eta_hz: f64,
    /// Registered level scheme used by every command except `tlm`.
    pub model: String,
    pub sweep: SweepBlock,
    pub spectrum: SpectrumBlock,
    pub pulling_step_hz: f64,
    /// Three-level variant for the `tlm` command: dark or bright.
    pub tlm_variant: String,
    /// Linewidth methods evaluated on sweeps, by registered name.
    pub linewidth_methods: Vec<String>,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            atoms: AtomsBlock {
                n: 100_000,
                gamma0_hz: 7.5e3,
                gamma_x_hz: 2.6e6,
                gamma_p_hz: 1.8e6,
                wavelength_nm: DEFAULT_WAVELENGTH * 1e9,
            },
            cavity: CavityBlock {
                kappa_hz: 150e3,
                coupling_hz: 20e3,
                delta_c_hz: 0.0,
            },
            raman: RamanBlock {
                strength_hz: 10f64.sqrt() * 1e6,
                ratio: 10f64.sqrt(),
                delta_alpha_hz: 0.0,
                delta_beta_hz: 0.0,
            },
            eta_hz: 3e3,
            model: "four-level".into(),
            sweep: SweepBlock {
                eta_min_hz: 300.0,
                eta_max_hz: 1e8,
                points_per_decade: 15,
                direction: SweepDirections::Up,
            },
            spectrum: SpectrumBlock {
                auto: true,
                zeta_hz: 0.01,
                kappa_f_hz: 0.1,
                span_hz: 5.0,
                points: 81,
            },
            pulling_step_hz: 10.0,
            tlm_variant: "dark".into(),
            linewidth_methods: vec!["regression".into(), "analytic".into()],
            output: OutputBlock {
                formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
                path: "out".into(),
            },
        }
    }
}

impl RunConfig {
    pub fn physical(&self) -> PhysicalParams {
        let (omega_alpha, omega_beta) = raman_pair(hz(self.raman.strength_hz), self.raman.ratio);
        PhysicalParams {
            n_atoms: self.atoms.n,
            kappa: hz(self.cavity.kappa_hz),
            gamma0: hz(self.atoms.gamma0_hz),
            gamma_x: hz(self.atoms.gamma_x_hz),
            gamma_p: hz(self.atoms.gamma_p_hz),
            eta: hz(self.eta_hz),
            omega_c_rabi: hz(self.cavity.coupling_hz),
            omega_alpha,
            omega_beta,
            delta_c: hz(self.cavity.delta_c_hz),
            delta_alpha: hz(self.raman.delta_alpha_hz),
            delta_beta: hz(self.raman.delta_beta_hz),
            lasing_wavelength: self.atoms.wavelength_nm * 1e-9,
        }
    }

    /// Pump grid in rad/s.
    pub fn eta_grid(&self) -> Vec<f64> {
        crate::steady::log_grid(self.sweep.eta_min_hz, self.sweep.eta_max_hz, self.sweep.points_per_decade)
            .into_iter()
            .map(hz)
            .collect()
    }

    pub fn filter_plan(&self) -> FilterPlan {
        if self.spectrum.auto {
            return FilterPlan::Auto;
        }
        let n = self.spectrum.points;
        let span = hz(self.spectrum.span_hz);
        let grid = (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect();
        FilterPlan::Explicit(FilterConfig {
            zeta: hz(self.spectrum.zeta_hz),
            kappa_f: hz(self.spectrum.kappa_f_hz),
            omega_b_grid: grid,
        })
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.output.formats.contains(&f)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        let bad = |message: String| Err(SimError::Config { line: 0, message });
        if !(s.eta_min_hz > 0.0 && s.eta_min_hz < s.eta_max_hz) {
            return bad(format!(
                "sweep needs 0 < eta_min < eta_max, got {} and {}",
                s.eta_min_hz, s.eta_max_hz
            ));
        }
        if s.points_per_decade < 1 {
            return bad("points_per_decade must be at least 1".into());
        }
        if !self.spectrum.auto && self.spectrum.points < 3 {
            return bad("an explicit spectrum grid needs at least 3 points".into());
        }
        if !matches!(self.tlm_variant.as_str(), "dark" | "bright") {
            return bad(format!("tlm variant must be dark or bright, got `{}`", self.tlm_variant));
        }
        if self.linewidth_methods.is_empty() {
            return bad("at least one linewidth method is required".into());
        }
        if self.output.formats.is_empty() {
            return bad("at least one output format is required".into());
        }
        self.physical().validate()
    }
}

fn err(line: usize, message: impl Into<String>) -> SimError {
    SimError::Config {
        line,
        message: message.into(),
    }
}

fn parse_plain(v: &str, line: usize) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| err(line, format!("malformed number `{v}`")))?;
    if !x.is_finite() {
        return Err(err(line, format!("non-finite number `{v}`")));
    }
    Ok(x)
}

/// A frequency in Hz with an optional `k` (10³) or `M` (10⁶) suffix.
fn parse_hz(v: &str, line: usize) -> Result<f64> {
    let (num, mult) = match v.char_indices().last() {
        Some((i, 'k')) => (&v[..i], 1e3),
        Some((i, 'M')) => (&v[..i], 1e6),
        Some((_, c)) if c.is_ascii_alphabetic() => {
            return Err(err(line, format!("unknown unit suffix `{c}` (allowed: k, M)")))
        }
        _ => (v, 1.0),
    };
    Ok(parse_plain(num.trim_end(), line)? * mult)
}

fn parse_count(v: &str, line: usize) -> Result<u64> {
    let x = parse_plain(v, line)?;
    if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(err(line, format!("expected a non-negative integer, got `{v}`")));
    }
    Ok(x as u64)
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

const SECTIONS: [&str; 10] = [
    "atoms", "cavity", "raman", "pump", "sweep", "spectrum", "pulling", "tlm", "linewidth", "output",
];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section: Option<&str> = None;
    let mut seen: Vec<(String, String)> = Vec::new();
    let mut have_n = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .copied()
                    .find(|s| *s == name)
                    .ok_or_else(|| err(line, format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{body}`")))?;
        let sec = section.ok_or_else(|| err(line, "key outside of any section"))?;
        if value.is_empty() {
            return Err(err(line, format!("empty value for `{key}`")));
        }
        if seen.iter().any(|(s, k)| s == sec && k == key) {
            return Err(err(line, format!("duplicate key `{key}` in [{sec}]")));
        }
        seen.push((sec.to_string(), key.to_string()));
        let hzv = || parse_hz(value, line);
        match (sec, key) {
            ("atoms", "n") => {
                cfg.atoms.n = parse_count(value, line)?;
                have_n = true;
            }
            ("atoms", "gamma0") => cfg.atoms.gamma0_hz = hzv()?,
            ("atoms", "gamma_x") => cfg.atoms.gamma_x_hz = hzv()?,
            ("atoms", "gamma_p") => cfg.atoms.gamma_p_hz = hzv()?,
            ("atoms", "model") => cfg.model = value.to_string(),
            ("atoms", "wavelength_nm") => cfg.atoms.wavelength_nm = parse_plain(value, line)?,
            ("cavity", "kappa") => cfg.cavity.kappa_hz = hzv()?,
            ("cavity", "omega_c") => cfg.cavity.coupling_hz = hzv()?,
            ("cavity", "delta_c") => cfg.cavity.delta_c_hz = hzv()?,
            ("raman", "strength") => cfg.raman.strength_hz = hzv()?,
            ("raman", "ratio") => cfg.raman.ratio = parse_plain(value, line)?,
            ("raman", "delta_alpha") => cfg.raman.delta_alpha_hz = hzv()?,
            ("raman", "delta_beta") => cfg.raman.delta_beta_hz = hzv()?,
            ("pump", "eta") => cfg.eta_hz = hzv()?,
            ("sweep", "eta_min") => cfg.sweep.eta_min_hz = hzv()?,
            ("sweep", "eta_max") => cfg.sweep.eta_max_hz = hzv()?,
            ("sweep", "points_per_decade") => cfg.sweep.points_per_decade = parse_count(value, line)? as usize,
            ("sweep", "direction") => {
                cfg.sweep.direction = match value {
                    "up" => SweepDirections::Up,
                    "down" => SweepDirections::Down,
                    "both" => SweepDirections::Both,
                    _ => return Err(err(line, format!("direction must be up, down or both, got `{value}`"))),
                }
            }
            ("spectrum", "mode") => {
                cfg.spectrum.auto = match value {
                    "auto" => true,
                    "explicit" => false,
                    _ => return Err(err(line, format!("mode must be auto or explicit, got `{value}`"))),
                }
            }
            ("spectrum", "zeta") => cfg.spectrum.zeta_hz = hzv()?,
            ("spectrum", "kappa_f") => cfg.spectrum.kappa_f_hz = hzv()?,
            ("spectrum", "span") => cfg.spectrum.span_hz = hzv()?,
            ("spectrum", "points") => cfg.spectrum.points = parse_count(value, line)? as usize,
            ("pulling", "step") => cfg.pulling_step_hz = hzv()?,
            ("tlm", "variant") => cfg.tlm_variant = value.to_string(),
            ("linewidth", "methods") => cfg.linewidth_methods = parse_list(value),
            ("output", "format") => {
                cfg.output.formats = parse_list(value)
                    .iter()
                    .map(|f| match f.as_str() {
                        "csv" => Ok(OutputFormat::Csv),
                        "json" => Ok(OutputFormat::Json),
                        "svg" => Ok(OutputFormat::Svg),
                        _ => Err(err(line, format!("unknown output format `{f}`"))),
                    })
                    .collect::<Result<_>>()?
            }
            ("output", "path") => cfg.output.path = value.to_string(),
            _ => return Err(err(line, format!("unknown key `{key}` in [{sec}]"))),
        }
    }
    if !have_n {
        return Err(err(0, "missing required key `n` in [atoms]"));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every field explicitly; `parse_config` reads it back unchanged.
pub fn emit_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut sec = |name: &str, kv: &[(&str, String)]| {
        let _ = writeln!(s, "[{name}]");
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push('\n');
    };
    let f = |x: f64| format!("{x:?}");
    sec(
        "atoms",
        &[
            ("n", cfg.atoms.n.to_string()),
            ("model", cfg.model.clone()),
            ("gamma0", f(cfg.atoms.gamma0_hz)),
            ("gamma_x", f(cfg.atoms.gamma_x_hz)),
            ("gamma_p", f(cfg.atoms.gamma_p_hz)),
            ("wavelength_nm", f(cfg.atoms.wavelength_nm)),
        ],
    );
    sec(
        "cavity",
        &[
            ("kappa", f(cfg.cavity.kappa_hz)),
            ("omega_c", f(cfg.cavity.coupling_hz)),
            ("delta_c", f(cfg.cavity.delta_c_hz)),
        ],
    );
    sec(
        "raman",
        &[
            ("strength", f(cfg.raman.strength_hz)),
            ("ratio", f(cfg.raman.ratio)),
            ("delta_alpha", f(cfg.raman.delta_alpha_hz)),
            ("delta_beta", f(cfg.raman.delta_beta_hz)),
        ],
    );
    sec("pump", &[("eta", f(cfg.eta_hz))]);
    sec(
        "sweep",
        &[
            ("eta_min", f(cfg.sweep.eta_min_hz)),
            ("eta_max", f(cfg.sweep.eta_max_hz)),
            ("points_per_decade", cfg.sweep.points_per_decade.to_string()),
            ("direction", cfg.sweep.direction.as_str().into()),
        ],
    );
    sec(
        "spectrum",
        &[
            ("mode", if cfg.spectrum.auto { "auto" } else { "explicit" }.into()),
            ("zeta", f(cfg.spectrum.zeta_hz)),
            ("kappa_f", f(cfg.spectrum.kappa_f_hz)),
            ("span", f(cfg.spectrum.span_hz)),
            ("points", cfg.spectrum.points.to_string()),
        ],
    );
    sec("pulling", &[("step", f(cfg.pulling_step_hz))]);
    sec("tlm", &[("variant", cfg.tlm_variant.clone())]);
    sec("linewidth", &[("methods", cfg.linewidth_methods.join(", "))]);
    let formats: Vec<&str> = cfg.output.formats.iter().map(|x| x.as_str()).collect();
    sec(
        "output",
        &[("format", formats.join(", ")), ("path", cfg.output.path.clone())],
    );
    s
}
