//! Scenario configuration files.
//!
//! A config is a TOML document with top-level `mode`, `seed` and `output` keys
//! and the flat sections `[model]`, `[grid]`, `[window]` and `[tolerances]`.
//! Times are in units of `1/g`, frequencies and rates in units of `g`.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use qsl_core::jc_dispersive::{JcDispersiveParams, DEFAULT_THETA};

use crate::error::ConfigError;
use crate::verify::CHECK_NAMES;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_OUTPUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    UnitaryHeatmap,
    UnitaryTolerance,
    OpenSpeeds,
    OpenQslTable,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::UnitaryHeatmap => "unitary-heatmap",
            Mode::UnitaryTolerance => "unitary-tolerance",
            Mode::OpenSpeeds => "open-speeds",
            Mode::OpenQslTable => "open-qsl-table",
            Mode::Verify => "verify",
        }
    }
}

/// Heatmap grid in dimensionless units `gτ` and `Δ/g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapGrid {
    pub g_tau_min: f64,
    pub g_tau_max: f64,
    pub n_tau: usize,
    pub delta_over_g_min: f64,
    pub delta_over_g_max: f64,
    pub n_delta: usize,
}

/// Uniform time grid in units of `1/g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
}

/// Dispersive model parameters. Frequencies, rates and `eta` are in units of
/// `g`; `b_field` is in its own units and `theta` in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersiveModel {
    pub g: f64,
    pub omega_c: f64,
    pub omega_a: f64,
    pub eta: f64,
    pub b_field: f64,
    pub kappa: f64,
    pub gamma_1: f64,
    pub gamma_phi: f64,
    pub sigma_z_mean: f64,
    pub min_detuning_ratio: f64,
    pub theta: f64,
}

impl DispersiveModel {
    /// Physical parameters with the `g`-relative entries scaled by `g`.
    pub fn params(&self) -> JcDispersiveParams {
        let g = self.g;
        JcDispersiveParams {
            g,
            omega_c: self.omega_c * g,
            omega_a: self.omega_a * g,
            eta: self.eta * g,
            b_field: self.b_field,
            kappa: self.kappa * g,
            gamma_1: self.gamma_1 * g,
            gamma_phi: self.gamma_phi * g,
            sigma_z_mean: self.sigma_z_mean,
            min_detuning_ratio: self.min_detuning_ratio,
        }
    }
}

/// Calibration window `[B₀ − w, B₀ + w]` around the configured field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSpec {
    pub half_width: f64,
    pub n_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Scenario {
    UnitaryHeatmap {
        g: f64,
        grid: HeatmapGrid,
    },
    UnitaryTolerance {
        g: f64,
        retention: Vec<f64>,
    },
    OpenSpeeds {
        model: DispersiveModel,
        times: TimeGrid,
    },
    OpenQslTable {
        model: DispersiveModel,
        taus: Vec<f64>,
        window: WindowSpec,
    },
    Verify {
        tolerances: BTreeMap<String, f64>,
    },
}

impl Scenario {
    pub fn mode(&self) -> Mode {
        match self {
            Scenario::UnitaryHeatmap { .. } => Mode::UnitaryHeatmap,
            Scenario::UnitaryTolerance { .. } => Mode::UnitaryTolerance,
            Scenario::OpenSpeeds { .. } => Mode::OpenSpeeds,
            Scenario::OpenQslTable { .. } => Mode::OpenQslTable,
            Scenario::Verify { .. } => Mode::Verify,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(skip)]
    pub output: PathBuf,
    #[serde(flatten)]
    pub scenario: Scenario,
}

impl ScenarioConfig {
    pub fn mode(&self) -> Mode {
        self.scenario.mode()
    }
}

type Sp<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Sp<Mode>,
    seed: Option<u64>,
    output: Option<String>,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    window: RawWindow,
    #[serde(default)]
    tolerances: BTreeMap<String, Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    g: Sp<f64>,
    omega_c: Sp<f64>,
    omega_a: Sp<f64>,
    eta: Sp<f64>,
    b_field: Sp<f64>,
    kappa: Sp<f64>,
    gamma_1: Sp<f64>,
    gamma_phi: Sp<f64>,
    sigma_z_mean: Sp<f64>,
    min_detuning_ratio: Sp<f64>,
    theta: Sp<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    g_tau_min: Sp<f64>,
    g_tau_max: Sp<f64>,
    n_tau: Sp<usize>,
    delta_over_g_min: Sp<f64>,
    delta_over_g_max: Sp<f64>,
    n_delta: Sp<usize>,
    retention: Sp<Vec<f64>>,
    t_min: Sp<f64>,
    t_max: Sp<f64>,
    n_t: Sp<usize>,
    taus: Sp<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    half_width: Sp<f64>,
    relative_half_width: Sp<f64>,
    n_grid: Sp<usize>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn invalid<T>(&self, field: &str, span: Option<Range<usize>>, reason: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError::InvalidValue {
            field: field.to_owned(),
            line: span.map(|s| self.line(s)),
            reason: reason.into(),
        })
    }

    fn required(&self, field: &str, value: &Sp<f64>) -> Result<f64, ConfigError> {
        match value {
            None => Err(ConfigError::MissingKey(field.to_owned())),
            Some(v) => self.finite(field, v),
        }
    }

    fn finite(&self, field: &str, v: &Spanned<f64>) -> Result<f64, ConfigError> {
        if v.get_ref().is_finite() {
            Ok(*v.get_ref())
        } else {
            self.invalid(field, Some(v.span()), "must be finite")
        }
    }

    fn real(&self, field: &str, value: &Sp<f64>, default: f64) -> Result<f64, ConfigError> {
        value.as_ref().map_or(Ok(default), |v| self.finite(field, v))
    }

    fn checked(
        &self,
        field: &str,
        value: &Sp<f64>,
        default: f64,
        ok: impl Fn(f64) -> bool,
        reason: &str,
    ) -> Result<f64, ConfigError> {
        let x = self.real(field, value, default)?;
        if ok(x) {
            Ok(x)
        } else {
            self.invalid(field, value.as_ref().map(Spanned::span), format!("{reason}, got {x}"))
        }
    }

    fn count(&self, field: &str, value: &Sp<usize>, default: usize, min: usize) -> Result<usize, ConfigError> {
        let n = value.as_ref().map_or(default, |v| *v.get_ref());
        if n < min {
            return self.invalid(
                field,
                value.as_ref().map(Spanned::span),
                format!("must be at least {min}, got {n}"),
            );
        }
        Ok(n)
    }

    fn list(
        &self,
        field: &str,
        value: &Sp<Vec<f64>>,
        default: &[f64],
        ok: impl Fn(f64) -> bool,
        reason: &str,
    ) -> Result<Vec<f64>, ConfigError> {
        let Some(v) = value else { return Ok(default.to_vec()) };
        let items = v.get_ref();
        if items.is_empty() {
            return self.invalid(field, Some(v.span()), "must not be empty");
        }
        if let Some(bad) = items.iter().find(|x| !(x.is_finite() && ok(**x))) {
            return self.invalid(field, Some(v.span()), format!("{reason}, got {bad}"));
        }
        Ok(items.clone())
    }

    fn interval(
        &self,
        lo_name: &str,
        lo: &Sp<f64>,
        lo_default: f64,
        hi_name: &str,
        hi: &Sp<f64>,
        hi_default: f64,
    ) -> Result<(f64, f64), ConfigError> {
        let a = self.real(lo_name, lo, lo_default)?;
        let b = self.real(hi_name, hi, hi_default)?;
        if a >= b {
            return self.invalid(
                hi_name,
                hi.as_ref().map(Spanned::span),
                format!("must exceed {lo_name} = {a}, got {b}"),
            );
        }
        Ok((a, b))
    }

    fn g(&self, model: &RawModel) -> Result<f64, ConfigError> {
        let g = self.required("g", &model.g)?;
        if g <= 0.0 {
            return self.invalid(
                "g",
                model.g.as_ref().map(Spanned::span),
                format!("must be positive, got {g}"),
            );
        }
        Ok(g)
    }

    fn dispersive(&self, m: &RawModel) -> Result<DispersiveModel, ConfigError> {
        let d = JcDispersiveParams::default();
        let non_negative = |x: f64| x >= 0.0;
        Ok(DispersiveModel {
            g: self.g(m)?,
            omega_c: self.real("omega_c", &m.omega_c, d.omega_c)?,
            omega_a: self.real("omega_a", &m.omega_a, d.omega_a)?,
            eta: self.real("eta", &m.eta, d.eta)?,
            b_field: self.real("b_field", &m.b_field, d.b_field)?,
            kappa: self.checked("kappa", &m.kappa, d.kappa, non_negative, "must be non-negative")?,
            gamma_1: self.checked("gamma_1", &m.gamma_1, d.gamma_1, non_negative, "must be non-negative")?,
            gamma_phi: self.checked(
                "gamma_phi",
                &m.gamma_phi,
                d.gamma_phi,
                non_negative,
                "must be non-negative",
            )?,
            sigma_z_mean: self.checked(
                "sigma_z_mean",
                &m.sigma_z_mean,
                d.sigma_z_mean,
                |x| x.abs() <= 1.0,
                "must lie in [-1, 1]",
            )?,
            min_detuning_ratio: self.checked(
                "min_detuning_ratio",
                &m.min_detuning_ratio,
                d.min_detuning_ratio,
                non_negative,
                "must be non-negative",
            )?,
            theta: self.real("theta", &m.theta, DEFAULT_THETA)?,
        })
    }
}

/// Parses a scenario config.
///
/// `mode` overrides the document's `mode` key; a document naming a different
/// mode is rejected. Unknown keys are parse errors.
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::ParseError {
            line,
            message: e.message().to_owned(),
        }
    })?;
    let cx = Ctx { text };
    let mode = match (mode, &raw.mode) {
        (Some(m), Some(doc)) if *doc.get_ref() != m => {
            return cx.invalid(
                "mode",
                Some(doc.span()),
                format!(
                    "document selects {}, command line selects {}",
                    doc.get_ref().name(),
                    m.name()
                ),
            );
        }
        (Some(m), _) => m,
        (None, Some(doc)) => *doc.get_ref(),
        (None, None) => return Err(ConfigError::MissingKey("mode".to_owned())),
    };
    let grid = &raw.grid;
    let scenario = match mode {
        Mode::UnitaryHeatmap => {
            let g = cx.g(&raw.model)?;
            let (g_tau_min, g_tau_max) =
                cx.interval("g_tau_min", &grid.g_tau_min, 0.01, "g_tau_max", &grid.g_tau_max, 5.0)?;
            if g_tau_min < 0.0 {
                return cx.invalid(
                    "g_tau_min",
                    grid.g_tau_min.as_ref().map(Spanned::span),
                    "must be non-negative",
                );
            }
            let (delta_over_g_min, delta_over_g_max) = cx.interval(
                "delta_over_g_min",
                &grid.delta_over_g_min,
                -3.0,
                "delta_over_g_max",
                &grid.delta_over_g_max,
                3.0,
            )?;
            Scenario::UnitaryHeatmap {
                g,
                grid: HeatmapGrid {
                    g_tau_min,
                    g_tau_max,
                    n_tau: cx.count("n_tau", &grid.n_tau, 200, 2)?,
                    delta_over_g_min,
                    delta_over_g_max,
                    n_delta: cx.count("n_delta", &grid.n_delta, 200, 2)?,
                },
            }
        }
        Mode::UnitaryTolerance => Scenario::UnitaryTolerance {
            g: cx.g(&raw.model)?,
            retention: cx.list(
                "retention",
                &grid.retention,
                &[0.99, 0.95, 0.90],
                |r| r > 0.0 && r <= 1.0,
                "entries must lie in (0, 1]",
            )?,
        },
        Mode::OpenSpeeds => {
            let model = cx.dispersive(&raw.model)?;
            let (t_min, t_max) = cx.interval("t_min", &grid.t_min, 0.01, "t_max", &grid.t_max, 5.0)?;
            if t_min <= 0.0 {
                return cx.invalid(
                    "t_min",
                    grid.t_min.as_ref().map(Spanned::span),
                    format!("must be positive, got {t_min}"),
                );
            }
            Scenario::OpenSpeeds {
                model,
                times: TimeGrid {
                    t_min,
                    t_max,
                    n_t: cx.count("n_t", &grid.n_t, 500, 2)?,
                },
            }
        }
        Mode::OpenQslTable => {
            let model = cx.dispersive(&raw.model)?;
            let taus = cx.list(
                "taus",
                &grid.taus,
                &[0.5, 1.0, 2.0, 3.0, 5.0],
                |t| t > 0.0,
                "entries must be positive",
            )?;
            let w = &raw.window;
            let half_width = match (&w.half_width, &w.relative_half_width) {
                (Some(_), Some(r)) => {
                    return cx.invalid("relative_half_width", Some(r.span()), "conflicts with half_width")
                }
                (Some(_), None) => {
                    cx.checked("half_width", &w.half_width, 0.0, |x| x >= 0.0, "must be non-negative")?
                }
                (None, _) => {
                    let r = cx.checked(
                        "relative_half_width",
                        &w.relative_half_width,
                        0.05,
                        |x| x >= 0.0,
                        "must be non-negative",
                    )?;
                    r * model.b_field.abs()
                }
            };
            let window = WindowSpec {
                half_width,
                n_grid: cx.count("n_grid", &w.n_grid, 201, 2)?,
            };
            Scenario::OpenQslTable { model, taus, window }
        }
        Mode::Verify => {
            let mut tolerances = BTreeMap::new();
            for (name, v) in &raw.tolerances {
                if !CHECK_NAMES.contains(&name.as_str()) {
                    return cx.invalid(name, Some(v.span()), "not a verification check");
                }
                let tol = cx.finite(name, v)?;
                if tol < 0.0 {
                    return cx.invalid(
                        name,
                        Some(v.span()),
                        format!("tolerance must be non-negative, got {tol}"),
                    );
                }
                tolerances.insert(name.clone(), tol);
            }
            Scenario::Verify { tolerances }
        }
    };
    Ok(ScenarioConfig {
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        output: PathBuf::from(raw.output.as_deref().unwrap_or(DEFAULT_OUTPUT)),
        scenario,
    })
}
