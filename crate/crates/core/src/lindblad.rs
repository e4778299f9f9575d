//! Parameterized GKSL generators and their nuisance sensitivities.
//!
//! A model supplies `H(λ)`, jump operators `F_k(λ)` and their analytic
//! λ-derivatives. The engine propagates the state together with the
//! sensitivities `ρ′_α = ∂_{λ^α} ρ`, which obey
//!
//! ```text
//! ∂_t ρ′_α = (∂_α 𝓛)[ρ] + 𝓛[ρ′_α],   ρ′_α(0) = 0 by default,
//! ```
//!
//! with a fixed-step RK4 on the joint system. The step is halved until two
//! successive resolutions agree.

use num_complex::Complex64;

use crate::bures::{qfim_from_tangents, DensityMatrix, QfimBlocks, TangentMatrix, DEFAULT_SUPPORT_CUTOFF};
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_part, max_asymmetry, CMatrix};

/// A GKSL generator `𝓛_λ` depending smoothly on nuisance parameters `λ`.
///
/// Implementations must be reentrant; distinct trajectories may be propagated
/// from several threads at once.
pub trait LindbladModel: Sync {
    fn dim(&self) -> usize;
    fn n_nuisance(&self) -> usize;
    fn hamiltonian(&self, lambda: &[f64]) -> CMatrix;
    fn jumps(&self, lambda: &[f64]) -> Vec<CMatrix>;
    /// `∂H/∂λ^α`.
    fn d_hamiltonian(&self, lambda: &[f64], alpha: usize) -> CMatrix;
    /// `∂F_k/∂λ^α`, one entry per jump operator.
    fn d_jumps(&self, lambda: &[f64], alpha: usize) -> Vec<CMatrix>;
}

type MatrixFn = Box<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;
type MatrixListFn = Box<dyn Fn(&[f64]) -> Vec<CMatrix> + Send + Sync>;
type DerivFn = Box<dyn Fn(&[f64], usize) -> CMatrix + Send + Sync>;
type DerivListFn = Box<dyn Fn(&[f64], usize) -> Vec<CMatrix> + Send + Sync>;

/// A [`LindbladModel`] assembled from closures.
pub struct ClosureModel {
    pub dim: usize,
    pub n_nuisance: usize,
    pub hamiltonian: MatrixFn,
    pub jumps: MatrixListFn,
    pub d_hamiltonian: DerivFn,
    pub d_jumps: DerivListFn,
}

impl LindbladModel for ClosureModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn n_nuisance(&self) -> usize {
        self.n_nuisance
    }
    fn hamiltonian(&self, lambda: &[f64]) -> CMatrix {
        (self.hamiltonian)(lambda)
    }
    fn jumps(&self, lambda: &[f64]) -> Vec<CMatrix> {
        (self.jumps)(lambda)
    }
    fn d_hamiltonian(&self, lambda: &[f64], alpha: usize) -> CMatrix {
        (self.d_hamiltonian)(lambda, alpha)
    }
    fn d_jumps(&self, lambda: &[f64], alpha: usize) -> Vec<CMatrix> {
        (self.d_jumps)(lambda, alpha)
    }
}

struct Jump {
    op: CMatrix,
    op_dag: CMatrix,
    op_dag_op: CMatrix,
}

struct JumpDerivative {
    d_op: CMatrix,
    d_op_dag: CMatrix,
    // ∂(F†F) = ∂F† F + F† ∂F
    d_op_dag_op: CMatrix,
}

/// The generator and its λ-derivatives frozen at one parameter point.
pub struct FrozenGenerator {
    dim: usize,
    hamiltonian: CMatrix,
    jumps: Vec<Jump>,
    d_hamiltonian: Vec<CMatrix>,
    d_jumps: Vec<Vec<JumpDerivative>>,
}

impl FrozenGenerator {
    pub fn new(model: &dyn LindbladModel, lambda: &[f64]) -> Result<Self> {
        let dim = model.dim();
        let m = model.n_nuisance();
        if lambda.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: lambda.len(),
            });
        }
        let hamiltonian = model.hamiltonian(lambda);
        linalg::ensure_dim(&hamiltonian, dim)?;
        let asym = max_asymmetry(&hamiltonian);
        if asym > linalg::HERMITIAN_REJECT_TOL * hamiltonian.norm().max(1.0) {
            return Err(Error::NonHermitianInput(asym));
        }
        let raw_jumps = model.jumps(lambda);
        let mut jumps = Vec::with_capacity(raw_jumps.len());
        for op in raw_jumps {
            linalg::ensure_dim(&op, dim)?;
            let op_dag = op.adjoint();
            let op_dag_op = &op_dag * &op;
            jumps.push(Jump { op, op_dag, op_dag_op });
        }
        let mut d_hamiltonian = Vec::with_capacity(m);
        let mut d_jumps = Vec::with_capacity(m);
        for alpha in 0..m {
            let dh = model.d_hamiltonian(lambda, alpha);
            linalg::ensure_dim(&dh, dim)?;
            d_hamiltonian.push(dh);
            let dj = model.d_jumps(lambda, alpha);
            if dj.len() != jumps.len() {
                return Err(Error::DimensionMismatch {
                    expected: jumps.len(),
                    actual: dj.len(),
                });
            }
            let mut per_alpha = Vec::with_capacity(dj.len());
            for (d_op, jump) in dj.into_iter().zip(&jumps) {
                linalg::ensure_dim(&d_op, dim)?;
                let d_op_dag = d_op.adjoint();
                let d_op_dag_op = &d_op_dag * &jump.op + &jump.op_dag * &d_op;
                per_alpha.push(JumpDerivative {
                    d_op,
                    d_op_dag,
                    d_op_dag_op,
                });
            }
            d_jumps.push(per_alpha);
        }
        Ok(Self {
            dim,
            hamiltonian,
            jumps,
            d_hamiltonian,
            d_jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nuisance(&self) -> usize {
        self.d_hamiltonian.len()
    }

    /// `𝓛[ρ] = −i[H, ρ] + Σ_k (F ρ F† − ½{F†F, ρ})`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let i = Complex64::i();
        let mut out = (&self.hamiltonian * rho - rho * &self.hamiltonian) * (-i);
        for j in &self.jumps {
            out += &j.op * rho * &j.op_dag - (&j.op_dag_op * rho + rho * &j.op_dag_op).scale(0.5);
        }
        out
    }

    /// `(∂_α 𝓛)[ρ]`, with the product rule applied inside each dissipator.
    pub fn apply_derivative(&self, alpha: usize, rho: &CMatrix) -> CMatrix {
        let i = Complex64::i();
        let dh = &self.d_hamiltonian[alpha];
        let mut out = (dh * rho - rho * dh) * (-i);
        for (j, d) in self.jumps.iter().zip(&self.d_jumps[alpha]) {
            out += &d.d_op * rho * &j.op_dag + &j.op * rho * &d.d_op_dag
                - (&d.d_op_dag_op * rho + rho * &d.d_op_dag_op).scale(0.5);
        }
        out
    }

    /// Right-hand side of the joint system `y = (ρ, ρ′_1, …, ρ′_m)`.
    fn joint_rhs(&self, y: &[CMatrix]) -> Vec<CMatrix> {
        let rho = &y[0];
        let mut out = Vec::with_capacity(y.len());
        out.push(self.apply(rho));
        for (alpha, sens) in y[1..].iter().enumerate() {
            out.push(self.apply_derivative(alpha, rho) + self.apply(sens));
        }
        out
    }
}

/// `𝓛_λ[ρ]`.
pub fn lindblad_apply(model: &dyn LindbladModel, lambda: &[f64], rho: &DensityMatrix) -> Result<TangentMatrix> {
    let gen = FrozenGenerator::new(model, lambda)?;
    linalg::ensure_dim(rho.as_matrix(), gen.dim())?;
    TangentMatrix::new(gen.apply(rho.as_matrix()))
}

/// `(∂_α𝓛)[ρ] + 𝓛[ρ′_α]`.
pub fn sensitivity_rhs(
    model: &dyn LindbladModel,
    lambda: &[f64],
    alpha: usize,
    rho: &DensityMatrix,
    rho_prime: &TangentMatrix,
) -> Result<TangentMatrix> {
    let gen = FrozenGenerator::new(model, lambda)?;
    if alpha >= gen.n_nuisance() {
        return Err(Error::DimensionMismatch {
            expected: gen.n_nuisance(),
            actual: alpha,
        });
    }
    linalg::ensure_dim(rho.as_matrix(), gen.dim())?;
    linalg::ensure_dim(rho_prime.as_matrix(), gen.dim())?;
    TangentMatrix::new(gen.apply_derivative(alpha, rho.as_matrix()) + gen.apply(rho_prime.as_matrix()))
}

/// Largest relative mismatch between the model's analytic λ-derivatives and
/// central finite differences with step `h`.
pub fn derivative_mismatch(model: &dyn LindbladModel, lambda: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    for alpha in 0..model.n_nuisance() {
        let mut plus = lambda.to_vec();
        let mut minus = lambda.to_vec();
        plus[alpha] += h;
        minus[alpha] -= h;
        let rel = |analytic: &CMatrix, fd: &CMatrix| {
            let scale = analytic.norm().max(fd.norm());
            if scale < 1e-12 {
                0.0
            } else {
                (analytic - fd).norm() / scale
            }
        };
        let fd_h = (model.hamiltonian(&plus) - model.hamiltonian(&minus)).scale(0.5 / h);
        worst = worst.max(rel(&model.d_hamiltonian(lambda, alpha), &fd_h));
        let jp = model.jumps(&plus);
        let jm = model.jumps(&minus);
        for ((a, p), m) in model.d_jumps(lambda, alpha).iter().zip(&jp).zip(&jm) {
            worst = worst.max(rel(a, &(p - m).scale(0.5 / h)));
        }
    }
    worst
}

/// Step selection for [`propagate_with_sensitivity`].
#[derive(Debug, Clone)]
pub struct StepControl {
    /// Largest internal RK4 step; each output interval is split into equal substeps.
    pub max_step: f64,
    /// Convergence target: Frobenius change of every output under one step halving.
    pub tolerance: f64,
    pub max_halvings: u32,
    /// When false, integrate once with `max_step` and skip the halving test.
    pub adaptive: bool,
    /// Initial sensitivities `ρ′_α(0)`; zero when `None`.
    pub initial_sensitivities: Option<Vec<TangentMatrix>>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            max_step: 1e-2,
            tolerance: 1e-10,
            max_halvings: 12,
            adaptive: true,
            initial_sensitivities: None,
        }
    }
}

impl StepControl {
    pub fn fixed(step: f64) -> Self {
        Self {
            max_step: step,
            adaptive: false,
            ..Self::default()
        }
    }
}

/// States and sensitivities on an output time grid.
#[derive(Debug, Clone)]
pub struct SensitivityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `sensitivities[k][α] = ρ′_α(times[k])`.
    pub sensitivities: Vec<Vec<TangentMatrix>>,
    /// Internal RK4 step of the accepted resolution.
    pub step: f64,
}

const DRIFT_LIMIT: f64 = 1e-6;

fn rk4_run(gen: &FrozenGenerator, y0: &[CMatrix], times: &[f64], max_step: f64) -> Vec<Vec<CMatrix>> {
    let mut y: Vec<CMatrix> = y0.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / max_step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = gen.joint_rhs(&y);
                let y2: Vec<CMatrix> = y.iter().zip(&k1).map(|(a, k)| a + k.scale(0.5 * h)).collect();
                let k2 = gen.joint_rhs(&y2);
                let y3: Vec<CMatrix> = y.iter().zip(&k2).map(|(a, k)| a + k.scale(0.5 * h)).collect();
                let k3 = gen.joint_rhs(&y3);
                let y4: Vec<CMatrix> = y.iter().zip(&k3).map(|(a, k)| a + k.scale(h)).collect();
                let k4 = gen.joint_rhs(&y4);
                for (idx, yi) in y.iter_mut().enumerate() {
                    *yi += (&k1[idx] + (&k2[idx] + &k3[idx]).scale(2.0) + &k4[idx]).scale(h / 6.0);
                }
            }
            t = target;
        }
        out.push(y.clone());
    }
    out
}

fn max_difference(a: &[Vec<CMatrix>], b: &[Vec<CMatrix>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ya, yb)| ya.iter().zip(yb).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

fn check_drift(run: &[Vec<CMatrix>]) -> Result<()> {
    for y in run {
        let tr = linalg::trace(&y[0]);
        if (tr.re - 1.0).abs() > DRIFT_LIMIT || tr.im.abs() > DRIFT_LIMIT {
            return Err(Error::StepTooLarge(format!("trace drifted to {tr}")));
        }
        for m in y {
            let asym = max_asymmetry(m);
            if !asym.is_finite() || asym > DRIFT_LIMIT {
                return Err(Error::StepTooLarge(format!("Hermiticity drifted by {asym:e}")));
            }
        }
        for s in &y[1..] {
            let tr = linalg::trace(s).norm();
            if tr > DRIFT_LIMIT {
                return Err(Error::StepTooLarge(format!("sensitivity trace drifted to {tr:e}")));
            }
        }
    }
    Ok(())
}

/// Joint RK4 propagation of `(ρ, ρ′_1, …, ρ′_m)` from `t = 0` through `t_grid`.
pub fn propagate_with_sensitivity(
    model: &dyn LindbladModel,
    lambda: &[f64],
    rho0: &DensityMatrix,
    t_grid: &[f64],
    control: &StepControl,
) -> Result<SensitivityTrajectory> {
    let gen = FrozenGenerator::new(model, lambda)?;
    linalg::ensure_dim(rho0.as_matrix(), gen.dim())?;
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::DomainError(
            "time grid must be finite and start at t >= 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::DomainError("time grid must be ascending".into()));
    }
    if control.max_step.is_nan() || control.max_step <= 0.0 {
        return Err(Error::DomainError(format!(
            "step must be positive, got {}",
            control.max_step
        )));
    }
    let m = gen.n_nuisance();
    let mut y0 = vec![rho0.as_matrix().clone()];
    match &control.initial_sensitivities {
        Some(init) => {
            if init.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: init.len(),
                });
            }
            for s in init {
                linalg::ensure_dim(s.as_matrix(), gen.dim())?;
                y0.push(s.as_matrix().clone());
            }
        }
        None => y0.extend((0..m).map(|_| CMatrix::zeros(gen.dim(), gen.dim()))),
    }

    let mut step = control.max_step;
    let mut run = rk4_run(&gen, &y0, t_grid, step);
    if control.adaptive {
        let mut converged = false;
        for _ in 0..control.max_halvings {
            let finer = rk4_run(&gen, &y0, t_grid, step / 2.0);
            let diff = max_difference(&run, &finer);
            step /= 2.0;
            run = finer;
            if diff < control.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::StepTooLarge(format!(
                "no convergence to {:e} after {} halvings",
                control.tolerance, control.max_halvings
            )));
        }
    }
    check_drift(&run)?;

    let mut states = Vec::with_capacity(run.len());
    let mut sensitivities = Vec::with_capacity(run.len());
    for y in run {
        let mut it = y.into_iter();
        let rho = it.next().expect("joint state always holds rho");
        states.push(DensityMatrix::with_tolerance(hermitian_part(&rho), 1e-8)?);
        sensitivities.push(it.map(TangentMatrix::new).collect::<Result<Vec<_>>>()?);
    }
    Ok(SensitivityTrajectory {
        times: t_grid.to_vec(),
        states,
        sensitivities,
        step,
    })
}

/// QFIM blocks at every trajectory point, with tangents `(𝓛[ρ(t)], ρ′_1(t), …)`.
pub fn qfim_along_trajectory(
    model: &dyn LindbladModel,
    lambda: &[f64],
    traj: &SensitivityTrajectory,
) -> Result<Vec<QfimBlocks>> {
    let gen = FrozenGenerator::new(model, lambda)?;
    traj.states
        .iter()
        .zip(&traj.sensitivities)
        .map(|(rho, sens)| {
            let mut tangents = Vec::with_capacity(sens.len() + 1);
            tangents.push(TangentMatrix::new(gen.apply(rho.as_matrix()))?);
            tangents.extend(sens.iter().cloned());
            qfim_from_tangents(rho, &tangents, DEFAULT_SUPPORT_CUTOFF)
        })
        .collect()
}
