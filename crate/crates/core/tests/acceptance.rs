//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::FRAC_PI_4;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsl_core::bures::{schur_effective, DensityMatrix, QfimBlocks};
use qsl_core::jc_dispersive::{
    bloch_components, bloch_state, bures_angle_open, qfim_bloch, qsl_check_open, quotient_angle_open, CavityModel,
    JcDispersiveParams,
};
use qsl_core::jc_unitary::{
    bures_angle_unitary, f_eff_closed, heatmap_retention, initial_state, qfim_closed, qsl_check_unitary,
    quotient_angle_unitary, short_time_ratio, tolerance_bound, JcUnitaryParams, UnitaryJcModel,
};
use qsl_core::linalg::DEFAULT_RANK_TOL;
use qsl_core::lindblad::{
    propagate_with_sensitivity, qfim_along_trajectory, LindbladModel, SensitivityTrajectory, StepControl,
};
use qsl_core::report::write_heatmap;
use qsl_core::window::CalibrationWindow;
use qsl_core::{CMatrix, RMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn ac1() -> Outcome {
    let table = [(0.99, 0.30), (0.95, 0.69), (0.90, 1.00)];
    let mut pass = true;
    let mut got = Vec::new();
    for (r, expect) in table {
        let b = tolerance_bound(r).unwrap();
        let rounded = (b * 100.0).round() / 100.0;
        pass &= (rounded - expect).abs() < 1e-12;
        got.push(format!("R={r}: {b:.4}"));
    }
    outcome(pass, got.join(", "))
}

fn ac2() -> Outcome {
    let g = 1.0;
    let p = JcUnitaryParams::new(g, 0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for t in linspace(0.05, 10.0, 100) {
        let closed = f_eff_closed(&p, t);
        let schur = schur_effective(&qfim_closed(&p, t), DEFAULT_RANK_TOL).unwrap();
        worst = worst.max((closed - 4.0 * g * g).abs()).max((schur - 4.0 * g * g).abs());
    }
    outcome(worst < 1e-12 * 4.0 * g * g, format!("max |F_eff - 4g^2| = {worst:.2e}"))
}

fn unitary_trajectory(p: JcUnitaryParams, times: &[f64]) -> (UnitaryJcModel, SensitivityTrajectory) {
    let model = UnitaryJcModel { params: p };
    let rho0 = DensityMatrix::from_pure(&initial_state()).unwrap();
    let traj = propagate_with_sensitivity(&model, &[0.0], &rho0, times, &StepControl::default()).unwrap();
    (model, traj)
}

fn ac3() -> Outcome {
    let times = linspace(0.1, 3.0, 10);
    let mut worst = 0.0f64;
    for d in linspace(0.1, 2.0, 10) {
        let p = JcUnitaryParams::new(1.0, d, 1.0).unwrap();
        let (model, traj) = unitary_trajectory(p, &times);
        let blocks = qfim_along_trajectory(&model, &[0.0], &traj).unwrap();
        for (&t, b) in times.iter().zip(&blocks) {
            let numeric = schur_effective(b, DEFAULT_RANK_TOL).unwrap();
            let closed = f_eff_closed(&p, t);
            worst = worst.max((numeric - closed).abs() / closed);
        }
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e} on 10x10 grid"))
}

fn ac4() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for d in [-3.0, -1.0, 0.5, 1.0, 2.0, 3.0] {
        let p = JcUnitaryParams::new(1.0, d, 1.0).unwrap();
        for s in linspace(0.01, 0.499, 50) {
            let t = s / p.omega();
            let exact = f_eff_closed(&p, t) / 4.0;
            worst = worst.max((exact - short_time_ratio(d, t)).abs());
            count += 1;
        }
    }
    outcome(
        worst < 0.02,
        format!("max deviation {worst:.2e} over {count} points with |Omega t| < 0.5"),
    )
}

fn fd_sensitivity_error(model: &dyn LindbladModel, lambda0: f64, rho0: &DensityMatrix, times: &[f64]) -> f64 {
    let traj = propagate_with_sensitivity(model, &[lambda0], rho0, times, &StepControl::default()).unwrap();
    let h = 1e-5;
    let fixed = StepControl::fixed(1e-3);
    let plus = propagate_with_sensitivity(model, &[lambda0 + h], rho0, times, &fixed).unwrap();
    let minus = propagate_with_sensitivity(model, &[lambda0 - h], rho0, times, &fixed).unwrap();
    let mut worst = 0.0f64;
    for k in 0..times.len() {
        let fd: CMatrix = (plus.states[k].as_matrix() - minus.states[k].as_matrix()).scale(0.5 / h);
        worst = worst.max((traj.sensitivities[k][0].as_matrix() - fd).norm());
    }
    worst
}

fn ac5() -> Outcome {
    let times = linspace(0.25, 5.0, 20);
    let unitary = UnitaryJcModel {
        params: JcUnitaryParams::new(1.0, 0.7, 1.0).unwrap(),
    };
    let rho_u = DensityMatrix::from_pure(&initial_state()).unwrap();
    let err_u = fd_sensitivity_error(&unitary, 0.0, &rho_u, &times);

    let p = JcDispersiveParams::default();
    let cavity = CavityModel::new(p).unwrap();
    let rho_c = DensityMatrix::from_pure(&qsl_core::jc_dispersive::initial_cavity_state(FRAC_PI_4)).unwrap();
    let err_c = fd_sensitivity_error(&cavity, p.b_field, &rho_c, &times);
    outcome(
        err_u < 1e-5 && err_c < 1e-5,
        format!("Frobenius error unitary {err_u:.2e}, dispersive {err_c:.2e}"),
    )
}

fn relative(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

fn ac6() -> Outcome {
    let p = JcDispersiveParams::default();
    let model = CavityModel::new(p).unwrap();
    let times = linspace(0.1, 5.0, 50);
    let rho0 = DensityMatrix::from_pure(&qsl_core::jc_dispersive::initial_cavity_state(FRAC_PI_4)).unwrap();
    let traj = propagate_with_sensitivity(&model, &[p.b_field], &rho0, &times, &StepControl::default()).unwrap();
    let blocks = qfim_along_trajectory(&model, &[p.b_field], &traj).unwrap();
    let mut state_err = 0.0f64;
    let mut qfim_err = 0.0f64;
    for (k, &t) in times.iter().enumerate() {
        let s = bloch_state(&p, FRAC_PI_4, t).unwrap().s;
        let got = bloch_components(traj.states[k].as_matrix());
        for i in 0..3 {
            state_err = state_err.max((got[i] - s[i]).abs());
        }
        let closed = qfim_bloch(&p, FRAC_PI_4, t).unwrap();
        let num = &blocks[k];
        let (tt, bb) = (closed.f_tt, closed.f_ll[(0, 0)]);
        qfim_err = qfim_err
            .max(relative(num.f_tt, tt, tt))
            .max(relative(num.f_ll[(0, 0)], bb, bb))
            .max(relative(num.f_tl[0], closed.f_tl[0], (tt * bb).sqrt()));
    }
    outcome(
        state_err < 1e-7 && qfim_err < 1e-5,
        format!("Bloch max error {state_err:.2e}, QFIM max relative error {qfim_err:.2e}"),
    )
}

fn random_psd(rng: &mut ChaCha8Rng, m: usize) -> RMatrix {
    let rank = rng.random_range(1..=m + 1);
    let a = DMatrix::from_fn(m, rank, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose()
}

fn random_invertible(rng: &mut ChaCha8Rng, k: usize) -> RMatrix {
    loop {
        let j = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(k, k);
        let sv = j.clone().singular_values();
        if sv.min() > 0.2 * sv.max() {
            return j;
        }
    }
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut range_fail, mut reparam_err, mut profiled_err) = (0usize, 0.0f64, 0.0f64);
    let mut invertible = 0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=5);
        let full = random_psd(&mut rng, m);
        let blocks = QfimBlocks::from_full(&full).unwrap();
        let f_eff = schur_effective(&blocks, DEFAULT_RANK_TOL).unwrap();
        if !(0.0..=blocks.f_tt).contains(&f_eff) {
            range_fail += 1;
        }
        let scale = blocks.f_tt.max(1e-300);
        let j = random_invertible(&mut rng, m - 1);
        let moved = schur_effective(&blocks.reparametrize(&j), DEFAULT_RANK_TOL).unwrap();
        reparam_err = reparam_err.max((moved - f_eff).abs() / scale);
        let eig = full.clone().symmetric_eigen();
        if eig.eigenvalues.min() > 1e-6 * eig.eigenvalues.max() {
            invertible += 1;
            let inv = full.clone().try_inverse().unwrap();
            profiled_err = profiled_err.max((1.0 / inv[(0, 0)] - f_eff).abs() / scale);
        }
    }
    outcome(
        range_fail == 0 && reparam_err < 1e-9 && profiled_err < 1e-9,
        format!(
            "range violations {range_fail}, reparametrization {reparam_err:.2e}, 1/(F^-1)_tt {profiled_err:.2e} ({invertible} invertible)"
        ),
    )
}

const TAUS: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 5.0];

fn ac8() -> Outcome {
    let p = JcUnitaryParams::new(1.0, 1.0, 1.0).unwrap();
    let mut worst_slack = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut failures = 0;
    for tau in TAUS {
        for half in [0.0, 0.1, 0.25, 0.5, 1.0] {
            let w = CalibrationWindow::around(p.delta, half, CalibrationWindow::DEFAULT_GRID).unwrap();
            let q = qsl_check_unitary(&p, &w, tau).unwrap();
            worst_slack = worst_slack.min(q.slack());
            worst_ratio = worst_ratio.max(q.bound / tau);
            failures += usize::from(q.slack() < -1e-9);
        }
    }
    let d = JcDispersiveParams::default();
    let mut worst_slack_open = f64::INFINITY;
    let mut worst_ratio_open = 0.0f64;
    for tau in TAUS {
        for frac in [0.005, 0.01, 0.02, 0.05, 0.1] {
            let w = CalibrationWindow::around(d.b_field, frac * d.b_field, CalibrationWindow::DEFAULT_GRID).unwrap();
            let q = qsl_check_open(&d, &w, FRAC_PI_4, tau).unwrap();
            worst_slack_open = worst_slack_open.min(q.slack());
            worst_ratio_open = worst_ratio_open.max(q.bound / tau);
            failures += usize::from(q.slack() < -1e-9);
        }
    }
    outcome(
        failures == 0,
        format!(
            "unitary min slack {worst_slack:.3e} (max bound/tau {worst_ratio:.3}), dispersive min slack {worst_slack_open:.3e} (max bound/tau {worst_ratio_open:.3})"
        ),
    )
}

fn ac9() -> Outcome {
    let mut violations = 0;
    let mut checks = 0;
    let p = JcUnitaryParams::new(1.0, 1.0, 1.0).unwrap();
    for tau in TAUS {
        let fixed = bures_angle_unitary(&p, tau);
        let mut last = fixed;
        for half in [0.0, 0.1, 0.25, 0.5, 1.0, 2.0] {
            let w = CalibrationWindow::around(p.delta, half, CalibrationWindow::DEFAULT_GRID).unwrap();
            let th = quotient_angle_unitary(&p, &w, tau);
            violations += usize::from(th > fixed + 1e-12) + usize::from(th > last + 1e-12);
            checks += 2;
            last = th;
        }
    }
    let d = JcDispersiveParams::default();
    for tau in TAUS {
        let fixed = bures_angle_open(&d, FRAC_PI_4, tau).unwrap();
        let mut last = fixed;
        for frac in [0.0, 0.005, 0.01, 0.02, 0.05, 0.1] {
            let w = CalibrationWindow::around(d.b_field, frac * d.b_field, CalibrationWindow::DEFAULT_GRID).unwrap();
            let th = quotient_angle_open(&d, &w, FRAC_PI_4, tau).unwrap();
            violations += usize::from(th > fixed + 1e-12) + usize::from(th > last + 1e-12);
            checks += 2;
            last = th;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations in {checks} comparisons"),
    )
}

fn ac10() -> Outcome {
    let g = 1.0;
    let started = Instant::now();
    let taus = linspace(0.01, 5.0, 200);
    let deltas = linspace(-3.0, 3.0, 200);
    let h = heatmap_retention(g, &taus, &deltas).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heatmap.csv");
    write_heatmap(std::fs::File::create(&path).unwrap(), &h).unwrap();
    let emitted = started.elapsed();
    let rows = std::fs::read_to_string(&path).unwrap().lines().count();

    let span = |level: f64| {
        let pts: Vec<f64> = h
            .contour(level)
            .iter()
            .filter(|p| g * p.tau <= 0.5)
            .map(|p| (p.delta * p.tau).abs())
            .collect();
        let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (pts.len(), lo, hi)
    };
    // R = 0.99 is an information ratio; the heatmap stores the speed ratio √(F_eff/F_tt)
    let (n, lo, hi) = span(0.99f64.sqrt());
    let (_, slo, shi) = span(0.99);
    outcome(
        rows == 1 + 200 * 200 && emitted < Duration::from_secs(60) && n > 0 && lo >= 0.25 && hi <= 0.35,
        format!(
            "{} rows in {:.2}s; R=0.99 contour |Delta|tau in [{lo:.3}, {hi:.3}] over {n} columns (speed-level 0.99 contour: [{slo:.3}, {shi:.3}])",
            rows,
            emitted.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 tolerance table", ac1, None),
        ("AC2 resonance identity", ac2, None),
        ("AC3 unitary closed form vs engine", ac3, Some(10)),
        ("AC4 short-time law", ac4, None),
        ("AC5 sensitivity ODE vs finite differences", ac5, Some(10)),
        ("AC6 dispersive closed form vs engine", ac6, Some(10)),
        ("AC7 Schur complement properties", ac7, Some(5)),
        ("AC8 projected QSL inequality", ac8, Some(30)),
        ("AC9 quotient-angle contraction", ac9, Some(10)),
        ("AC10 retention heatmap", ac10, Some(60)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let started = Instant::now();
        let result = std::panic::catch_unwind(run);
        let elapsed = started.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(_) => (false, "panicked".to_owned()),
        };
        let in_time = limit.is_none_or(|s| elapsed <= Duration::from_secs(s));
        let ok = pass && in_time;
        failed += usize::from(!ok);
        let budget = limit.map(|s| format!(" / {s}s")).unwrap_or_default();
        println!(
            "{} {name}: {detail} [{:.2}s{budget}]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
