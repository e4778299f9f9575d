//! Dispersive, lossy Jaynes-Cummings sensor reduced to a cavity qubit.
//!
//! With `Δ(B) = ω_c − (ω_a + ηB)` (note the sign, opposite to [`crate::jc_unitary`])
//! and `χ = g²/Δ`, tracing out a fast-relaxing atom of inversion `⟨σ_z⟩` leaves
//!
//! ```text
//! ρ̇ = −i[ω_eff |1⟩⟨1|, ρ] + κ_eff 𝒟[a] ρ,   a = |0⟩⟨1|,
//! ω_eff = ω_c + χ⟨σ_z⟩,   κ_eff = κ + γ₁ (g/Δ)².
//! ```
//!
//! The cavity starts in `cos θ |0⟩ + sin θ |1⟩`. Bloch components use
//! `S_x = 2 Re ρ₀₁`, `S_y = −2 Im ρ₀₁`, `S_z = ρ₁₁ − ρ₀₀`. The interference
//! term and the first-order corrections to the κ and γ_φ channels are dropped,
//! which needs `κλ² ≪ γ₁` and `γ_φλ² ≪ γ₁` with `λ = g/Δ`; see
//! [`hierarchy_warnings`].

use rayon::prelude::*;

use crate::bures::{angle_from_fidelity, ProjectedSpeedSample, QfimBlocks};
use crate::error::{Error, Result};
use crate::linalg::{c, pauli, CMatrix, CVector};
use crate::lindblad::LindbladModel;
use crate::window::{averaged_speed, sup_over_window, CalibrationWindow, QslCheck};

pub const DEFAULT_THETA: f64 = std::f64::consts::FRAC_PI_4;

/// Relative tolerance of the trapezoid rule behind `v̄_quo`.
pub const AVERAGE_REL_TOL: f64 = 1e-6;

/// Below this `1 − |S|²` the state is treated as pure.
pub const PURE_GAP: f64 = 1e-12;
/// Largest `S·∂S` on the pure surface still handled by continuity.
pub const BOUNDARY_TOL: f64 = 1e-6;

const HIERARCHY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcDispersiveParams {
    pub g: f64,
    pub omega_c: f64,
    pub omega_a: f64,
    /// Zeeman coefficient `η` of `ω_a′(B) = ω_a + ηB`.
    pub eta: f64,
    pub b_field: f64,
    pub kappa: f64,
    pub gamma_1: f64,
    pub gamma_phi: f64,
    /// Atomic inversion `⟨σ_z⟩ = p_e − p_g`.
    pub sigma_z_mean: f64,
    /// Dispersive validity requires `|Δ| > min_detuning_ratio · g`.
    pub min_detuning_ratio: f64,
}

impl Default for JcDispersiveParams {
    /// `g = 1`, `Δ = 8g`, `κ = 0.05g`, `γ₁ = 2g`, atom in the ground state.
    fn default() -> Self {
        Self {
            g: 1.0,
            omega_c: 10.0,
            omega_a: 1.0,
            eta: 1.0,
            b_field: 1.0,
            kappa: 0.05,
            gamma_1: 2.0,
            gamma_phi: 0.0,
            sigma_z_mean: -1.0,
            min_detuning_ratio: 5.0,
        }
    }
}

impl JcDispersiveParams {
    /// Checks finiteness, signs and ranges; does not check dispersive validity.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("eta", self.eta),
            ("b_field", self.b_field),
            ("kappa", self.kappa),
            ("gamma_1", self.gamma_1),
            ("gamma_phi", self.gamma_phi),
            ("sigma_z_mean", self.sigma_z_mean),
            ("min_detuning_ratio", self.min_detuning_ratio),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::DomainError(format!("{name} must be finite")));
        }
        if self.g <= 0.0 {
            return Err(Error::DomainError(format!("g must be positive, got {}", self.g)));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma_1", self.gamma_1),
            ("gamma_phi", self.gamma_phi),
        ] {
            if v < 0.0 {
                return Err(Error::DomainError(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.sigma_z_mean.abs() > 1.0 {
            return Err(Error::DomainError(format!(
                "sigma_z_mean must lie in [-1, 1], got {}",
                self.sigma_z_mean
            )));
        }
        Ok(())
    }

    pub fn with_field(&self, b_field: f64) -> Self {
        Self { b_field, ..*self }
    }

    /// `Δ(B) = ω_c − (ω_a + ηB)`.
    pub fn detuning(&self) -> f64 {
        self.detuning_at(self.b_field)
    }

    pub fn detuning_at(&self, b: f64) -> f64 {
        self.omega_c - (self.omega_a + self.eta * b)
    }

    fn check_dispersive(&self, detuning: f64) -> Result<()> {
        let threshold = self.min_detuning_ratio * self.g;
        if detuning.is_nan() || detuning.abs() <= threshold {
            return Err(Error::DispersiveViolation { detuning, threshold });
        }
        Ok(())
    }
}

/// Field-dependent GKSL data of the reduced cavity model and its `B`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCavityParams {
    pub detuning: f64,
    pub chi: f64,
    pub omega_eff: f64,
    pub kappa_eff: f64,
    /// `Ω′(B) = −⟨σ_z⟩ g² Δ′/Δ²` with `Δ′ = −η`.
    pub d_omega: f64,
    /// `Γ′(B) = −2γ₁ g² Δ′/Δ³`.
    pub d_kappa: f64,
}

fn effective_unchecked(p: &JcDispersiveParams, b: f64) -> EffectiveCavityParams {
    let d = p.detuning_at(b);
    let d_prime = -p.eta;
    let g2 = p.g * p.g;
    let chi = g2 / d;
    EffectiveCavityParams {
        detuning: d,
        chi,
        omega_eff: p.omega_c + chi * p.sigma_z_mean,
        kappa_eff: p.kappa + p.gamma_1 * g2 / (d * d),
        d_omega: -p.sigma_z_mean * g2 * d_prime / (d * d),
        d_kappa: -2.0 * p.gamma_1 * g2 * d_prime / (d * d * d),
    }
}

pub fn effective_params(p: &JcDispersiveParams) -> Result<EffectiveCavityParams> {
    p.validate()?;
    p.check_dispersive(p.detuning())?;
    Ok(effective_unchecked(p, p.b_field))
}

/// Human-readable notes for each violated reduction assumption
/// (`κλ²/γ₁ < 0.1`, `γ_φλ²/γ₁ < 0.1`).
pub fn hierarchy_warnings(p: &JcDispersiveParams) -> Vec<String> {
    let lambda2 = (p.g / p.detuning()).powi(2);
    let mut out = Vec::new();
    for (name, rate) in [("kappa", p.kappa), ("gamma_phi", p.gamma_phi)] {
        let ratio = rate * lambda2 / p.gamma_1;
        if rate > 0.0 && (ratio.is_nan() || ratio >= HIERARCHY_LIMIT) {
            out.push(format!(
                "{name}*(g/Delta)^2/gamma_1 = {ratio:.3e} is not small; the reduced cavity model may be inaccurate"
            ));
        }
    }
    out
}

/// Bloch vector and its derivatives in `t` and `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub s: [f64; 3],
    pub ds_dt: [f64; 3],
    pub ds_db: [f64; 3],
}

fn check_time_and_angle(theta: f64, t: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::DomainError(format!("theta must lie in [0, pi/2], got {theta}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::DomainError(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

fn bloch_from_effective(e: &EffectiveCavityParams, theta: f64, t: f64) -> BlochState {
    let om = e.omega_eff;
    let gam = e.kappa_eff;
    let s2 = (2.0 * theta).sin();
    let sin_sq = theta.sin().powi(2);
    let (sn, cs) = (om * t).sin_cos();
    let half = (-0.5 * gam * t).exp();
    let full = (-gam * t).exp();
    BlochState {
        s: [s2 * cs * half, -s2 * sn * half, 2.0 * sin_sq * full - 1.0],
        ds_dt: [
            -s2 * half * (om * sn + 0.5 * gam * cs),
            -s2 * half * (om * cs - 0.5 * gam * sn),
            -2.0 * gam * sin_sq * full,
        ],
        ds_db: [
            -s2 * half * (t * e.d_omega * sn + 0.5 * t * e.d_kappa * cs),
            -s2 * half * (t * e.d_omega * cs - 0.5 * t * e.d_kappa * sn),
            -2.0 * sin_sq * t * e.d_kappa * full,
        ],
    }
}

pub fn bloch_state(p: &JcDispersiveParams, theta: f64, t: f64) -> Result<BlochState> {
    check_time_and_angle(theta, t)?;
    Ok(bloch_from_effective(&effective_params(p)?, theta, t))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Bloch-form QFIM `u·v + (S·u)(S·v)/(1 − |S|²)` for `(t, B)`.
pub fn qfim_from_bloch(state: &BlochState) -> Result<QfimBlocks> {
    let s = &state.s;
    let (u, v) = (&state.ds_dt, &state.ds_db);
    let gap = 1.0 - dot(s, s);
    let su = dot(s, u);
    let sv = dot(s, v);
    let (f_tt, f_tb, f_bb) = if gap < PURE_GAP {
        // on the pure surface only tangential or inward motion has a continuous limit
        if let Some(&bad) = [su, sv].iter().find(|&&x| x >= BOUNDARY_TOL) {
            return Err(Error::BlochBoundary(bad));
        }
        (dot(u, u), dot(u, v), dot(v, v))
    } else {
        (
            dot(u, u) + su * su / gap,
            dot(u, v) + su * sv / gap,
            dot(v, v) + sv * sv / gap,
        )
    };
    Ok(QfimBlocks::pair(f_tt, f_tb, f_bb))
}

pub fn qfim_bloch(p: &JcDispersiveParams, theta: f64, t: f64) -> Result<QfimBlocks> {
    qfim_from_bloch(&bloch_state(p, theta, t)?)
}

pub fn speeds_open(p: &JcDispersiveParams, theta: f64, t: f64) -> Result<ProjectedSpeedSample> {
    ProjectedSpeedSample::from_blocks(t, &qfim_bloch(p, theta, t)?)
}

/// Speeds on a time grid, evaluated in parallel and returned in grid order.
pub fn speed_curve(p: &JcDispersiveParams, theta: f64, t_grid: &[f64]) -> Result<Vec<ProjectedSpeedSample>> {
    t_grid.par_iter().map(|&t| speeds_open(p, theta, t)).collect()
}

fn fidelity_from_effective(e: &EffectiveCavityParams, theta: f64, t: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    let s2 = theta.sin().powi(2);
    let full = (-e.kappa_eff * t).exp();
    let half = (-0.5 * e.kappa_eff * t).exp();
    let f = c2 + s2 * s2 * full - c2 * s2 * full + 2.0 * c2 * s2 * half * (e.omega_eff * t).cos();
    f.clamp(0.0, 1.0)
}

/// `⟨ψ₀|ρ_cav(t)|ψ₀⟩`.
pub fn fidelity_open(p: &JcDispersiveParams, theta: f64, t: f64) -> Result<f64> {
    check_time_and_angle(theta, t)?;
    Ok(fidelity_from_effective(&effective_params(p)?, theta, t))
}

pub fn bures_angle_open(p: &JcDispersiveParams, theta: f64, t: f64) -> Result<f64> {
    Ok(angle_from_fidelity(fidelity_open(p, theta, t)?))
}

/// `cos θ |0⟩ + sin θ |1⟩`.
pub fn initial_cavity_state(theta: f64) -> CVector {
    CVector::from_vec(vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)])
}

/// Explicit solution `ρ_cav(t)` in the basis `{|0⟩, |1⟩}`.
pub fn cavity_state(p: &JcDispersiveParams, theta: f64, t: f64) -> Result<CMatrix> {
    check_time_and_angle(theta, t)?;
    let e = effective_params(p)?;
    let (s, co) = theta.sin_cos();
    let full = (-e.kappa_eff * t).exp();
    let coherence = num_complex::Complex64::from_polar(co * s * (-0.5 * e.kappa_eff * t).exp(), e.omega_eff * t);
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[
            c(1.0 - s * s * full, 0.0),
            coherence,
            coherence.conj(),
            c(s * s * full, 0.0),
        ],
    ))
}

/// `(S_x, S_y, S_z)` of a 2×2 operator in this module's convention.
pub fn bloch_components(m: &CMatrix) -> [f64; 3] {
    let r01 = m[(0, 1)];
    [2.0 * r01.re, -2.0 * r01.im, (m[(1, 1)] - m[(0, 0)]).re]
}

fn check_window(p: &JcDispersiveParams, window: &CalibrationWindow) -> Result<()> {
    let threshold = p.min_detuning_ratio * p.g;
    let (lo, hi) = (p.detuning_at(window.lo), p.detuning_at(window.hi));
    // Δ is affine in B, so the endpoints decide
    p.check_dispersive(lo)?;
    p.check_dispersive(hi)?;
    if lo.signum() != hi.signum() {
        return Err(Error::DispersiveViolation {
            detuning: 0.0,
            threshold,
        });
    }
    Ok(())
}

/// `arccos sup_{B ∈ window} √F(B; τ)`, with the window in field units.
pub fn quotient_angle_open(
    p_base: &JcDispersiveParams,
    window: &CalibrationWindow,
    theta: f64,
    tau: f64,
) -> Result<f64> {
    p_base.validate()?;
    check_time_and_angle(theta, tau)?;
    check_window(p_base, window)?;
    let best = sup_over_window(window, |b| {
        fidelity_from_effective(&effective_unchecked(p_base, b), theta, tau).sqrt()
    });
    Ok(best.value.min(1.0).acos())
}

/// `(1/τ) ∫₀^τ v_quo dt` at the realized field.
pub fn averaged_projected_speed(p: &JcDispersiveParams, theta: f64, tau: f64) -> Result<f64> {
    check_time_and_angle(theta, tau)?;
    let e = effective_params(p)?;
    let failure = std::cell::OnceCell::new();
    let v = averaged_speed(
        |t| match qfim_from_bloch(&bloch_from_effective(&e, theta, t)).and_then(|b| b.effective()) {
            Ok(f) => 0.5 * f.sqrt(),
            Err(err) => {
                let _ = failure.set(err);
                0.0
            }
        },
        tau,
        AVERAGE_REL_TOL,
    )?;
    match failure.into_inner() {
        Some(err) => Err(err),
        None => Ok(v),
    }
}

/// Projected speed-limit check at the realized field `p.b_field`.
pub fn qsl_check_open(p: &JcDispersiveParams, window: &CalibrationWindow, theta: f64, tau: f64) -> Result<QslCheck> {
    let theta_quo = quotient_angle_open(p, window, theta, tau)?;
    let v_bar = averaged_projected_speed(p, theta, tau)?;
    Ok(QslCheck::evaluate(tau, theta_quo, v_bar))
}

/// [`qsl_check_open`] over several interrogation times, in input order.
pub fn qsl_table(
    p: &JcDispersiveParams,
    window: &CalibrationWindow,
    theta: f64,
    taus: &[f64],
) -> Result<Vec<QslCheck>> {
    taus.par_iter()
        .map(|&tau| qsl_check_open(p, window, theta, tau))
        .collect()
}

/// The reduced cavity master equation as a [`LindbladModel`] with `λ = (B)`.
#[derive(Debug, Clone, Copy)]
pub struct CavityModel {
    pub params: JcDispersiveParams,
}

impl CavityModel {
    pub fn new(params: JcDispersiveParams) -> Result<Self> {
        effective_params(&params)?;
        Ok(Self { params })
    }
}

impl LindbladModel for CavityModel {
    fn dim(&self) -> usize {
        2
    }
    fn n_nuisance(&self) -> usize {
        1
    }
    fn hamiltonian(&self, lambda: &[f64]) -> CMatrix {
        pauli::number().scale(effective_unchecked(&self.params, lambda[0]).omega_eff)
    }
    fn jumps(&self, lambda: &[f64]) -> Vec<CMatrix> {
        vec![pauli::lowering().scale(effective_unchecked(&self.params, lambda[0]).kappa_eff.sqrt())]
    }
    fn d_hamiltonian(&self, lambda: &[f64], _alpha: usize) -> CMatrix {
        pauli::number().scale(effective_unchecked(&self.params, lambda[0]).d_omega)
    }
    fn d_jumps(&self, lambda: &[f64], _alpha: usize) -> Vec<CMatrix> {
        let e = effective_unchecked(&self.params, lambda[0]);
        let coeff = if e.kappa_eff > 0.0 {
            e.d_kappa / (2.0 * e.kappa_eff.sqrt())
        } else {
            0.0
        };
        vec![pauli::lowering().scale(coeff)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bures::{uhlmann_fidelity, DensityMatrix};
    use crate::lindblad::{derivative_mismatch, lindblad_apply};
    use std::f64::consts::FRAC_PI_4;

    fn fig2() -> JcDispersiveParams {
        JcDispersiveParams::default()
    }

    #[test]
    fn default_point_is_eight_g_detuned() {
        let e = effective_params(&fig2()).unwrap();
        assert_eq!(e.detuning, 8.0);
        assert!((e.kappa_eff - 0.08125).abs() < 1e-15);
        assert!(hierarchy_warnings(&fig2()).is_empty());
    }

    #[test]
    fn trivial_limits_of_effective_params() {
        let e = effective_params(&JcDispersiveParams { gamma_1: 0.0, ..fig2() }).unwrap();
        assert_eq!((e.kappa_eff, e.d_kappa), (0.05, 0.0));
        let e = effective_params(&JcDispersiveParams { eta: 0.0, ..fig2() }).unwrap();
        assert_eq!((e.d_omega, e.d_kappa), (0.0, 0.0));
    }

    #[test]
    fn dispersive_violation_is_reported() {
        let p = fig2().with_field(5.0);
        assert!(matches!(effective_params(&p), Err(Error::DispersiveViolation { .. })));
        let w = CalibrationWindow::new(0.0, 20.0, 11).unwrap();
        assert!(matches!(
            quotient_angle_open(&fig2(), &w, FRAC_PI_4, 1.0),
            Err(Error::DispersiveViolation { .. })
        ));
        assert!(JcDispersiveParams { kappa: -0.1, ..fig2() }.validate().is_err());
    }

    #[test]
    fn effective_derivatives_match_finite_differences() {
        let p = JcDispersiveParams {
            sigma_z_mean: 0.3,
            ..fig2()
        };
        let e = effective_params(&p).unwrap();
        let h = 1e-4;
        let plus = effective_unchecked(&p, p.b_field + h);
        let minus = effective_unchecked(&p, p.b_field - h);
        let fd_w = (plus.omega_eff - minus.omega_eff) / (2.0 * h);
        let fd_k = (plus.kappa_eff - minus.kappa_eff) / (2.0 * h);
        assert!((fd_w - e.d_omega).abs() < 1e-7 * e.d_omega.abs());
        assert!((fd_k - e.d_kappa).abs() < 1e-7 * e.d_kappa.abs());
    }

    #[test]
    fn hierarchy_warning_fires() {
        let p = JcDispersiveParams {
            kappa: 50.0,
            gamma_1: 0.5,
            ..fig2()
        };
        assert_eq!(hierarchy_warnings(&p).len(), 1);
    }

    #[test]
    fn bloch_initial_and_vacuum() {
        let b = bloch_state(&fig2(), 0.3, 0.0).unwrap();
        let n: f64 = dot(&b.s, &b.s);
        assert!((n - 1.0).abs() < 1e-15);
        assert_eq!(b.ds_db, [0.0, 0.0, 0.0]);
        let v = bloch_state(&fig2(), 0.0, 2.0).unwrap();
        assert_eq!(v.s, [0.0, 0.0, -1.0]);
        assert!(v.ds_dt.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bloch_time_derivative_is_consistent() {
        let p = fig2();
        let h = 1e-6;
        for t in [0.3, 1.0, 4.0] {
            let b = bloch_state(&p, FRAC_PI_4, t).unwrap();
            let plus = bloch_state(&p, FRAC_PI_4, t + h).unwrap().s;
            let minus = bloch_state(&p, FRAC_PI_4, t - h).unwrap().s;
            for i in 0..3 {
                assert!(((plus[i] - minus[i]) / (2.0 * h) - b.ds_dt[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn bloch_field_derivative_is_consistent() {
        let p = fig2();
        let h = 1e-6 * p.b_field;
        for t in [0.5, 2.0, 5.0] {
            let b = bloch_state(&p, FRAC_PI_4, t).unwrap();
            let plus = bloch_state(&p.with_field(p.b_field + h), FRAC_PI_4, t).unwrap().s;
            let minus = bloch_state(&p.with_field(p.b_field - h), FRAC_PI_4, t).unwrap().s;
            let scale = b.ds_db.iter().map(|x| x.abs()).fold(0.0, f64::max);
            for i in 0..3 {
                assert!(((plus[i] - minus[i]) / (2.0 * h) - b.ds_db[i]).abs() < 1e-5 * scale);
            }
        }
    }

    #[test]
    fn generator_matches_bloch_velocity() {
        let p = fig2();
        let model = CavityModel::new(p).unwrap();
        let t = 0.8;
        let rho = DensityMatrix::new(cavity_state(&p, FRAC_PI_4, t).unwrap()).unwrap();
        let l = lindblad_apply(&model, &[p.b_field], &rho).unwrap();
        let expect = bloch_state(&p, FRAC_PI_4, t).unwrap().ds_dt;
        let got = bloch_components(l.as_matrix());
        for i in 0..3 {
            assert!((got[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cavity_state_matches_bloch_vector() {
        let p = fig2();
        for t in [0.0, 0.7, 3.0] {
            let m = cavity_state(&p, 0.4, t).unwrap();
            let s = bloch_state(&p, 0.4, t).unwrap().s;
            let got = bloch_components(&m);
            for i in 0..3 {
                assert!((got[i] - s[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn model_derivatives_are_analytic() {
        let model = CavityModel::new(JcDispersiveParams {
            sigma_z_mean: 0.4,
            ..fig2()
        })
        .unwrap();
        assert!(derivative_mismatch(&model, &[1.0], 1e-4) < 1e-7);
    }

    #[test]
    fn qfim_at_start_and_without_field_coupling() {
        let q = qfim_bloch(&fig2(), FRAC_PI_4, 0.0).unwrap();
        assert_eq!((q.f_tl[0], q.f_ll[(0, 0)]), (0.0, 0.0));
        assert_eq!(q.effective().unwrap(), q.f_tt);
        let flat = JcDispersiveParams { eta: 0.0, ..fig2() };
        for t in [0.5, 2.0] {
            let q = qfim_bloch(&flat, FRAC_PI_4, t).unwrap();
            assert_eq!((q.f_tl[0], q.f_ll[(0, 0)]), (0.0, 0.0));
            let s = speeds_open(&flat, FRAC_PI_4, t).unwrap();
            assert_eq!(s.v_quo, s.v_phys);
        }
    }

    #[test]
    fn boundary_rule() {
        let outward = BlochState {
            s: [0.0, 0.0, 1.0],
            ds_dt: [0.0, 0.0, 1.0],
            ds_db: [0.0; 3],
        };
        assert!(matches!(qfim_from_bloch(&outward), Err(Error::BlochBoundary(_))));
        let tangential = BlochState {
            s: [0.0, 0.0, 1.0],
            ds_dt: [1.0, 0.0, 0.0],
            ds_db: [0.0; 3],
        };
        assert_eq!(qfim_from_bloch(&tangential).unwrap().f_tt, 1.0);
    }

    #[test]
    fn speeds_obey_ordering() {
        let p = fig2();
        let grid: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
        let curve = speed_curve(&p, FRAC_PI_4, &grid).unwrap();
        assert_eq!(curve[0].v_quo, curve[0].v_phys);
        assert!(curve.iter().all(|s| s.v_quo <= s.v_phys));
        let late = curve.last().unwrap();
        assert!(late.v_quo < 0.5 * late.v_phys, "{late:?}");
    }

    #[test]
    fn fidelity_closed_form() {
        let p = fig2();
        assert_eq!(fidelity_open(&p, FRAC_PI_4, 0.0).unwrap(), 1.0);
        let late = fidelity_open(&p, 0.5, 1e4).unwrap();
        assert!((late - 0.5f64.cos().powi(2)).abs() < 1e-12);
        let psi = initial_cavity_state(FRAC_PI_4);
        for t in [0.3, 1.0, 2.5] {
            let rho = cavity_state(&p, FRAC_PI_4, t).unwrap();
            let overlap = (psi.adjoint() * &rho * &psi)[(0, 0)].re;
            let f = fidelity_open(&p, FRAC_PI_4, t).unwrap();
            assert!((overlap - f).abs() < 1e-14);
            let pure = DensityMatrix::from_pure(&psi).unwrap();
            let u = uhlmann_fidelity(&pure, &DensityMatrix::new(rho).unwrap()).unwrap();
            assert!((u - f).abs() < 1e-10);
        }
    }

    #[test]
    fn quotient_angle_properties() {
        let p = fig2();
        let tau = 1.0;
        let fixed = bures_angle_open(&p, FRAC_PI_4, tau).unwrap();
        let point = CalibrationWindow::point(p.b_field);
        assert_eq!(quotient_angle_open(&p, &point, FRAC_PI_4, tau).unwrap(), fixed);
        let w = CalibrationWindow::around(p.b_field, 0.02 * p.b_field, 201).unwrap();
        let theta = quotient_angle_open(&p, &w, FRAC_PI_4, tau).unwrap();
        assert!(theta <= fixed);
        let dense = (0..10_000)
            .map(|k| {
                let b = w.lo + (w.hi - w.lo) * k as f64 / 9_999.0;
                fidelity_open(&p.with_field(b), FRAC_PI_4, tau).unwrap().sqrt()
            })
            .fold(f64::MIN, f64::max);
        assert!(theta <= dense.min(1.0).acos() + 1e-12);
        let mut last = fixed;
        for frac in [0.005, 0.01, 0.02, 0.05, 0.1] {
            let w = CalibrationWindow::around(p.b_field, frac, 201).unwrap();
            let th = quotient_angle_open(&p, &w, FRAC_PI_4, tau).unwrap();
            assert!(th <= last + 1e-12);
            last = th;
        }
    }

    #[test]
    fn field_insensitive_check_is_standard_qsl() {
        let p = JcDispersiveParams { eta: 0.0, ..fig2() };
        let q = qsl_check_open(&p, &CalibrationWindow::point(p.b_field), FRAC_PI_4, 2.0).unwrap();
        let angle = bures_angle_open(&p, FRAC_PI_4, 2.0).unwrap();
        assert!((q.theta_quo - angle).abs() < 1e-15);
        assert!(q.satisfied);
    }

    /// With `v̄_quo` taken at the realized field the projected bound is not
    /// guaranteed; at very short times it overshoots `τ` slightly for these
    /// parameters. The check reports the violation instead of hiding it.
    #[test]
    fn short_interrogation_overshoots_fixed_field_bound() {
        let p = fig2();
        let q = qsl_check_open(&p, &CalibrationWindow::point(p.b_field), FRAC_PI_4, 0.2).unwrap();
        assert!(!q.satisfied);
        assert!(q.bound / q.tau > 1.0 && q.bound / q.tau < 1.1, "{q:?}");
    }
}
