//! Calibration windows, window suprema, and the time averages that enter the
//! projected speed limit `τ ≥ Θ_quo / v̄_quo`.

use crate::error::{Error, Result};

/// Closed interval of admissible nuisance values, scanned on `n_grid` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationWindow {
    pub lo: f64,
    pub hi: f64,
    pub n_grid: usize,
}

impl CalibrationWindow {
    pub const DEFAULT_GRID: usize = 201;

    pub fn new(lo: f64, hi: f64, n_grid: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::DomainError(format!("window [{lo}, {hi}] is not an interval")));
        }
        if n_grid < 2 {
            return Err(Error::DomainError(format!(
                "window grid needs at least 2 points, got {n_grid}"
            )));
        }
        Ok(Self { lo, hi, n_grid })
    }

    /// Symmetric window `center ± half_width`.
    pub fn around(center: f64, half_width: f64, n_grid: usize) -> Result<Self> {
        Self::new(center - half_width.abs(), center + half_width.abs(), n_grid)
    }

    /// The single point `value`.
    pub fn point(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            n_grid: 2,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_grid;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Location and value of a window supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSup {
    pub argmax: f64,
    pub value: f64,
}

const GOLDEN_TOL: f64 = 1e-10;

/// `sup_{x ∈ window} f(x)` by a grid scan followed by golden-section refinement on
/// the two grid cells around the best point.
pub fn sup_over_window(window: &CalibrationWindow, f: impl Fn(f64) -> f64) -> WindowSup {
    if window.is_degenerate() {
        return WindowSup {
            argmax: window.lo,
            value: f(window.lo),
        };
    }
    let grid = window.grid();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (k, &v)| if v > values[b] { k } else { b });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_max(&f, lo, hi, GOLDEN_TOL);
    if refined.value > values[best] {
        refined
    } else {
        WindowSup {
            argmax: grid[best],
            value: values[best],
        }
    }
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> WindowSup {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > tol * (1.0 + a.abs().max(b.abs())) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(x1, f1), (x2, f2), (mid, fm)]
        .into_iter()
        .fold(WindowSup { argmax: mid, value: fm }, |best, (x, v)| {
            if v > best.value {
                WindowSup { argmax: x, value: v }
            } else {
                best
            }
        })
}

/// Composite trapezoid on `[a, b]`, doubling the panel count until two successive
/// estimates agree to `rel_tol` (absolute floor 1e-15).
pub fn adaptive_trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_LEVEL: u32 = 22;
    let h0 = b - a;
    let mut panels: usize = 16;
    let mut estimate = {
        let h = h0 / panels as f64;
        let interior: f64 = (1..panels).map(|k| f(a + k as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + interior)
    };
    for _ in 0..MAX_LEVEL {
        let h = h0 / (2 * panels) as f64;
        let midpoints: f64 = (0..panels).map(|k| f(a + (2 * k + 1) as f64 * h)).sum();
        let next = 0.5 * estimate + h * midpoints;
        panels *= 2;
        let converged = (next - estimate).abs() <= rel_tol * next.abs() || (next - estimate).abs() < 1e-15;
        estimate = next;
        if converged && panels >= 64 {
            return Ok(estimate);
        }
    }
    Err(Error::DomainError(format!(
        "trapezoid rule did not converge on [{a}, {b}]"
    )))
}

/// Outcome of a projected speed-limit evaluation at one interrogation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QslCheck {
    pub tau: f64,
    pub theta_quo: f64,
    pub v_bar_quo: f64,
    /// `Θ_quo / v̄_quo`, or `+∞` when the averaged speed vanishes with a nonzero angle.
    pub bound: f64,
    pub satisfied: bool,
}

impl QslCheck {
    pub const SLACK: f64 = 1e-9;

    pub fn evaluate(tau: f64, theta_quo: f64, v_bar_quo: f64) -> Self {
        let bound = if v_bar_quo < 1e-14 {
            if theta_quo > 1e-9 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            theta_quo / v_bar_quo
        };
        // an infinite bound means the speed limit carries no information; reported as satisfied
        let satisfied = bound.is_infinite() || tau >= bound - Self::SLACK;
        Self {
            tau,
            theta_quo,
            v_bar_quo,
            bound,
            satisfied,
        }
    }

    /// `τ − bound`; negative values are violations.
    pub fn slack(&self) -> f64 {
        self.tau - self.bound
    }
}

/// Time-averaged speed `(1/τ) ∫₀^τ v(t) dt`.
///
/// Integrated in `u = √t` (`dt = 2u du`), which keeps the trapezoid rule fast
/// when `v ~ t^{-1/2}` near the start, as for decay out of a pure state.
pub fn averaged_speed(v: impl Fn(f64) -> f64, tau: f64, rel_tol: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::DomainError(format!(
            "interrogation time must be positive, got {tau}"
        )));
    }
    let integral = adaptive_trapezoid(
        |u| if u == 0.0 { 0.0 } else { 2.0 * u * v(u * u) },
        0.0,
        tau.sqrt(),
        rel_tol,
    )?;
    Ok(integral / tau)
}
