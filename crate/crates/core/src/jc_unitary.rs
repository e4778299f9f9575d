//! Closed Jaynes-Cummings sensor in the single-excitation manifold.
//!
//! Basis `{|e,0⟩, |g,1⟩}`, effective Hamiltonian `H′ = g τ_x + (Δ/2) τ_z` with
//! detuning `Δ = ω_q + γB − ω_c` and Rabi frequency `Ω = √(Δ² + 4g²)`. The
//! probe starts in `|+z⟩ = |e,0⟩`.
//!
//! The field generator is `G_B(t) = (γ/2)(A_x τ_x + A_y τ_y + A_z τ_z)` with
//! `A_i(t) = ∫₀ᵗ v_i(s) ds` and `U†(s) τ_z U(s) = v·τ`. All QFIM entries follow
//! in closed form:
//!
//! ```text
//! F_tt = 4g²,  F_tB = 2γg A_x,  F_BB = γ²(A_x² + A_y²),
//! F_eff = 4g² A_y² / (A_x² + A_y²).
//! ```
//!
//! Calibration windows in this module are intervals of detuning `Δ`. Profiling
//! over `Δ` or over `B` gives the same `F_eff` (the Schur complement is
//! invariant under the rescaling `dΔ = γ dB`).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bures::{angle_from_fidelity, ProjectedSpeedSample, QfimBlocks};
use crate::error::{Error, Result};
use crate::linalg::{c, pauli, CMatrix, CVector, RMatrix};
use crate::lindblad::LindbladModel;
use crate::window::{averaged_speed, sup_over_window, CalibrationWindow, QslCheck};

/// Relative tolerance of the trapezoid rule behind `v̄_quo`.
pub const AVERAGE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcUnitaryParams {
    /// Coupling `g` (rad/time).
    pub g: f64,
    /// Detuning `Δ = ω_q + γB − ω_c` (rad/time).
    pub delta: f64,
    /// Zeeman coefficient `γ` (rad/time per field unit).
    pub gamma_b: f64,
}

impl JcUnitaryParams {
    pub fn new(g: f64, delta: f64, gamma_b: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::DomainError(format!("coupling g must be positive, got {g}")));
        }
        if !delta.is_finite() || !gamma_b.is_finite() {
            return Err(Error::DomainError(
                "detuning and Zeeman coefficient must be finite".into(),
            ));
        }
        Ok(Self { g, delta, gamma_b })
    }

    pub fn omega(&self) -> f64 {
        (self.delta * self.delta + 4.0 * self.g * self.g).sqrt()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    /// `H′ = g τ_x + (Δ/2) τ_z`.
    pub fn hamiltonian(&self) -> CMatrix {
        pauli::x().scale(self.g) + pauli::z().scale(0.5 * self.delta)
    }
}

/// Coefficients of `∫₀ᵗ U†(s) τ_z U(s) ds` on `(τ_x, τ_y, τ_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorCoeffs {
    pub a_x: f64,
    pub a_y: f64,
    pub a_z: f64,
}

/// `x − sin x` without cancellation near zero.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x - x.sin()
    }
}

/// `1 − cos x` as `2 sin²(x/2)`.
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// Generator coefficients at time `t ≥ 0`.
///
/// `A_y = +(2g/Ω²)(1 − cos Ωt)`: the Heisenberg picture rotates `τ_z` by `−Ωs`
/// about `n`. Only `A_y²` enters the QFIM.
pub fn generator_coeffs(p: &JcUnitaryParams, t: f64) -> GeneratorCoeffs {
    let om = p.omega();
    let g = p.g;
    let d = p.delta;
    let phase = om * t;
    GeneratorCoeffs {
        a_x: 2.0 * g * d / (om * om * om) * x_minus_sin(phase),
        a_y: 2.0 * g / (om * om) * one_minus_cos(phase),
        a_z: d * d / (om * om) * t + 4.0 * g * g / (om * om * om) * phase.sin(),
    }
}

/// `(t, B)` QFIM blocks.
pub fn qfim_closed(p: &JcUnitaryParams, t: f64) -> QfimBlocks {
    let a = generator_coeffs(p, t);
    let gm = p.gamma_b;
    QfimBlocks::pair(
        4.0 * p.g * p.g,
        2.0 * gm * p.g * a.a_x,
        gm * gm * (a.a_x * a.a_x + a.a_y * a.a_y),
    )
}

/// `(t, Δ)` QFIM blocks, i.e. [`qfim_closed`] with `γ = 1`.
pub fn qfim_closed_detuning(p: &JcUnitaryParams, t: f64) -> QfimBlocks {
    qfim_closed(&JcUnitaryParams { gamma_b: 1.0, ..*p }, t)
}

/// Fraction `A_y²/(A_x² + A_y²)`, equal to 1 where both coefficients vanish.
fn information_ratio(p: &JcUnitaryParams, t: f64) -> f64 {
    let a = generator_coeffs(p, t);
    if a.a_y == 0.0 {
        return if a.a_x == 0.0 { 1.0 } else { 0.0 };
    }
    let r = a.a_x / a.a_y;
    1.0 / (1.0 + r * r)
}

/// `F_eff(t) = 4g² A_y²/(A_x² + A_y²)`.
pub fn f_eff_closed(p: &JcUnitaryParams, t: f64) -> f64 {
    4.0 * p.g * p.g * information_ratio(p, t)
}

pub fn projected_speed(p: &JcUnitaryParams, t: f64) -> ProjectedSpeedSample {
    let f_eff = f_eff_closed(p, t);
    ProjectedSpeedSample {
        t,
        f_eff,
        v_quo: 0.5 * f_eff.sqrt(),
        v_phys: p.g,
    }
}

/// Short-time approximation `1/(1 + (Δt/3)²)` of `F_eff/F_tt`.
pub fn short_time_ratio(delta: f64, t: f64) -> f64 {
    let x = delta * t / 3.0;
    1.0 / (1.0 + x * x)
}

/// Largest `|Δ|t` keeping `F_eff/F_tt ≥ retention` in the short-time law: `3√(1/R − 1)`.
pub fn tolerance_bound(retention: f64) -> Result<f64> {
    if !(retention > 0.0 && retention <= 1.0) {
        return Err(Error::DomainError(format!(
            "retention must lie in (0, 1], got {retention}"
        )));
    }
    Ok(3.0 * (1.0 / retention - 1.0).sqrt())
}

/// Survival fidelity `|⟨+z|U(t)|+z⟩|² = 1 − (4g²/Ω²) sin²(Ωt/2)`.
pub fn fidelity_unitary(p: &JcUnitaryParams, t: f64) -> f64 {
    let om = p.omega();
    let s = (0.5 * om * t).sin();
    1.0 - 4.0 * p.g * p.g / (om * om) * s * s
}

pub fn bures_angle_unitary(p: &JcUnitaryParams, t: f64) -> f64 {
    angle_from_fidelity(fidelity_unitary(p, t))
}

/// `U(t) = cos(Ωt/2) I − i sin(Ωt/2) n·τ`, `n = (2g, 0, Δ)/Ω`.
pub fn propagator(p: &JcUnitaryParams, t: f64) -> CMatrix {
    let om = p.omega();
    let (s, co) = (0.5 * om * t).sin_cos();
    let n_tau = pauli::x().scale(2.0 * p.g / om) + pauli::z().scale(p.delta / om);
    pauli::identity().scale(co) + n_tau * c(0.0, -s)
}

/// `|+z⟩ = |e,0⟩`.
pub fn initial_state() -> CVector {
    CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])
}

/// `arccos sup_{Δ ∈ window} √F(τ, Δ)`, with the window in detuning units.
pub fn quotient_angle_unitary(p_base: &JcUnitaryParams, window: &CalibrationWindow, tau: f64) -> f64 {
    let best = sup_over_window(window, |d| fidelity_unitary(&p_base.with_delta(d), tau).max(0.0).sqrt());
    best.value.min(1.0).acos()
}

/// `(1/τ) ∫₀^τ ½√F_eff dt` at the realized detuning.
pub fn averaged_projected_speed(p: &JcUnitaryParams, tau: f64) -> Result<f64> {
    averaged_speed(|t| 0.5 * f_eff_closed(p, t).sqrt(), tau, AVERAGE_REL_TOL)
}

/// Projected speed-limit check `τ ≥ Θ_quo / v̄_quo` at the realized detuning `p.delta`.
pub fn qsl_check_unitary(p: &JcUnitaryParams, window: &CalibrationWindow, tau: f64) -> Result<QslCheck> {
    let theta = quotient_angle_unitary(p, window, tau);
    let v_bar = averaged_projected_speed(p, tau)?;
    Ok(QslCheck::evaluate(tau, theta, v_bar))
}

/// Speed retention `v_quo/v_phys = √(F_eff/F_tt)` on a `(Δ, τ)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionHeatmap {
    pub g: f64,
    pub tau: Vec<f64>,
    pub delta: Vec<f64>,
    /// Rows follow `delta`, columns follow `tau`.
    pub retention: RMatrix,
}

pub fn heatmap_retention(g: f64, tau_grid: &[f64], delta_grid: &[f64]) -> Result<RetentionHeatmap> {
    if tau_grid.iter().chain(delta_grid).any(|v| !v.is_finite()) {
        return Err(Error::DomainError("heatmap grids must be finite".into()));
    }
    if tau_grid.iter().any(|&t| t < 0.0) {
        return Err(Error::DomainError("interrogation times must be non-negative".into()));
    }
    let base = JcUnitaryParams::new(g, 0.0, 1.0)?;
    let rows: Vec<Vec<f64>> = delta_grid
        .par_iter()
        .map(|&d| {
            let p = base.with_delta(d);
            tau_grid.iter().map(|&t| information_ratio(&p, t).sqrt()).collect()
        })
        .collect();
    let retention = DMatrix::from_fn(delta_grid.len(), tau_grid.len(), |i, j| rows[i][j]);
    Ok(RetentionHeatmap {
        g,
        tau: tau_grid.to_vec(),
        delta: delta_grid.to_vec(),
        retention,
    })
}

/// Point where a retention contour crosses one heatmap column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub tau: f64,
    pub delta: f64,
}

impl RetentionHeatmap {
    /// For every column, walks outward from the detuning row closest to
    /// resonance on both sides and records the first crossing of `level`,
    /// linearly interpolated between rows. Columns without a crossing are skipped.
    pub fn contour(&self, level: f64) -> Vec<ContourPoint> {
        let Some(center) = (0..self.delta.len()).min_by(|&a, &b| self.delta[a].abs().total_cmp(&self.delta[b].abs()))
        else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (j, &tau) in self.tau.iter().enumerate() {
            let value = |i: usize| self.retention[(i, j)];
            let mut walk = |indices: &mut dyn Iterator<Item = usize>| {
                let mut prev = center;
                for i in indices {
                    if value(prev) >= level && value(i) < level {
                        let w = (value(prev) - level) / (value(prev) - value(i));
                        out.push(ContourPoint {
                            tau,
                            delta: self.delta[prev] + w * (self.delta[i] - self.delta[prev]),
                        });
                        return;
                    }
                    prev = i;
                }
            };
            walk(&mut (center + 1..self.delta.len()));
            walk(&mut (0..center).rev());
        }
        out
    }
}

/// The unitary sensor as a dissipation-free [`LindbladModel`] with one nuisance,
/// the field offset `δB` from the realized point: `Δ(δB) = Δ + γ δB`.
#[derive(Debug, Clone, Copy)]
pub struct UnitaryJcModel {
    pub params: JcUnitaryParams,
}

impl LindbladModel for UnitaryJcModel {
    fn dim(&self) -> usize {
        2
    }
    fn n_nuisance(&self) -> usize {
        1
    }
    fn hamiltonian(&self, lambda: &[f64]) -> CMatrix {
        self.params
            .with_delta(self.params.delta + self.params.gamma_b * lambda[0])
            .hamiltonian()
    }
    fn jumps(&self, _lambda: &[f64]) -> Vec<CMatrix> {
        Vec::new()
    }
    fn d_hamiltonian(&self, _lambda: &[f64], _alpha: usize) -> CMatrix {
        pauli::z().scale(0.5 * self.params.gamma_b)
    }
    fn d_jumps(&self, _lambda: &[f64], _alpha: usize) -> Vec<CMatrix> {
        Vec::new()
    }
}

/// Field generator `G_B(t) = (γ/2) A·τ` as a matrix.
pub fn field_generator(p: &JcUnitaryParams, t: f64) -> CMatrix {
    let a = generator_coeffs(p, t);
    (pauli::x().scale(a.a_x) + pauli::y().scale(a.a_y) + pauli::z().scale(a.a_z)).scale(0.5 * p.gamma_b)
}
