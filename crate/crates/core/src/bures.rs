//! Bures/SLD information geometry.
//!
//! The QFIM convention is `F_μν = Re Tr[∂_μρ L_ν] = ½ Tr[ρ {L_μ, L_ν}]`, with
//! `L_ν` the symmetric logarithmic derivative solving `∂_νρ = ½(ρ L_ν + L_ν ρ)`.
//! With this normalization the Bures line element is `dL² = ¼ F_μν dx^μ dx^ν`
//! and a pure state under `H` has `F_tt = 4 Var(H)`.
//!
//! Parameter ordering is always `(t, λ¹, …, λ^{m-1})`: the first tangent is the
//! time direction, the rest are nuisance directions.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eig_hermitian, hermitian_part, max_asymmetry, pinv_psd, CMatrix, CVector, EigenDecomposition, RMatrix,
};

/// Default relative support cutoff: pairs with `p_i + p_j <= cutoff * max(p)` are dropped.
pub const DEFAULT_SUPPORT_CUTOFF: f64 = 1e-10;

const STATE_TOL: f64 = 1e-8;
const SUPPORT_WEIGHT_TOL: f64 = 1e-6;
const NEGATIVE_EFF_REJECT: f64 = 1e-6;
const EIGEN_FLOOR: f64 = 1e-14;

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, STATE_TOL)
    }

    /// Validates Hermiticity, trace and positivity against `tol`, then stores the
    /// Hermitian part.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        linalg::ensure_square(&m)?;
        let asym = max_asymmetry(&m);
        if asym > tol {
            return Err(Error::InvalidState(format!("asymmetry {asym:e}")));
        }
        let m = hermitian_part(&m);
        let tr = linalg::trace(&m);
        if (tr.re - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {}", tr.re)));
        }
        let eig = eig_hermitian(&m)?;
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::InvalidState(format!("min eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(psi * psi.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// A Hermitian traceless matrix: a tangent vector `δρ` to the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentMatrix(CMatrix);

impl TangentMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        linalg::ensure_square(&m)?;
        let scale = m.norm().max(1.0);
        let asym = max_asymmetry(&m);
        if asym > 1e-9 * scale {
            return Err(Error::InvalidTangent(format!("asymmetry {asym:e}")));
        }
        let tr = linalg::trace(&m);
        if tr.norm() > 1e-8 * scale {
            return Err(Error::InvalidTangent(format!("trace {:e}", tr.norm())));
        }
        Ok(Self(hermitian_part(&m)))
    }

    pub fn zero(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl AsRef<CMatrix> for TangentMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// QFIM in block form `[[f_tt, fᵀ], [f, F_λλ]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QfimBlocks {
    pub f_tt: f64,
    pub f_tl: DVector<f64>,
    pub f_ll: RMatrix,
}

impl QfimBlocks {
    /// Splits a full symmetric `m x m` matrix with the time index first.
    pub fn from_full(full: &RMatrix) -> Result<Self> {
        let m = linalg::ensure_square(full)?;
        if m == 0 {
            return Err(Error::DomainError("empty QFIM".into()));
        }
        let k = m - 1;
        Ok(Self {
            f_tt: full[(0, 0)],
            f_tl: DVector::from_iterator(k, (1..m).map(|i| 0.5 * (full[(i, 0)] + full[(0, i)]))),
            f_ll: RMatrix::from_fn(k, k, |i, j| 0.5 * (full[(i + 1, j + 1)] + full[(j + 1, i + 1)])),
        })
    }

    /// Two-parameter `(t, λ)` blocks.
    pub fn pair(f_tt: f64, f_tl: f64, f_ll: f64) -> Self {
        Self {
            f_tt,
            f_tl: DVector::from_element(1, f_tl),
            f_ll: RMatrix::from_element(1, 1, f_ll),
        }
    }

    pub fn n_nuisance(&self) -> usize {
        self.f_tl.len()
    }

    pub fn full(&self) -> RMatrix {
        let k = self.n_nuisance();
        RMatrix::from_fn(k + 1, k + 1, |i, j| match (i, j) {
            (0, 0) => self.f_tt,
            (0, j) => self.f_tl[j - 1],
            (i, 0) => self.f_tl[i - 1],
            (i, j) => self.f_ll[(i - 1, j - 1)],
        })
    }

    /// Applies a nuisance reparametrization `λ = J μ`: `f → Jᵀf`, `F_λλ → Jᵀ F_λλ J`.
    pub fn reparametrize(&self, jacobian: &RMatrix) -> Self {
        Self {
            f_tt: self.f_tt,
            f_tl: jacobian.transpose() * &self.f_tl,
            f_ll: jacobian.transpose() * &self.f_ll * jacobian,
        }
    }

    pub fn effective(&self) -> Result<f64> {
        schur_effective(self, linalg::DEFAULT_RANK_TOL)
    }
}

/// Physical and projected speeds at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedSpeedSample {
    pub t: f64,
    pub f_eff: f64,
    pub v_quo: f64,
    pub v_phys: f64,
}

impl ProjectedSpeedSample {
    pub fn from_blocks(t: f64, blocks: &QfimBlocks) -> Result<Self> {
        let f_eff = blocks.effective()?;
        Ok(Self {
            t,
            f_eff,
            v_quo: 0.5 * f_eff.sqrt(),
            v_phys: 0.5 * blocks.f_tt.max(0.0).sqrt(),
        })
    }
}

/// Eigenbasis of ρ with the support threshold resolved, shared by several SLD solves.
struct SupportFrame {
    eig: EigenDecomposition,
    p: Vec<f64>,
    cutoff: f64,
}

impl SupportFrame {
    fn new(rho: &DensityMatrix, support_cutoff: f64) -> Result<Self> {
        let eig = eig_hermitian(rho.as_matrix())?;
        let p: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        let pmax = p.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            eig,
            p,
            cutoff: support_cutoff * pmax,
        })
    }

    fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        let u = &self.eig.eigenvectors;
        u.adjoint() * m * u
    }

    /// SLD in the eigenbasis of ρ.
    fn sld_eigenbasis(&self, d: &CMatrix) -> Result<CMatrix> {
        let n = self.p.len();
        let mut l = CMatrix::zeros(n, n);
        let mut outside = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s = self.p[i] + self.p[j];
                if s > self.cutoff && s > 0.0 {
                    l[(i, j)] = d[(i, j)] * (2.0 / s);
                } else {
                    outside = outside.max(d[(i, j)].norm());
                }
            }
        }
        if outside > SUPPORT_WEIGHT_TOL {
            return Err(Error::SupportMismatch(outside));
        }
        Ok(l)
    }
}

fn check_dims(rho: &DensityMatrix, other: &CMatrix) -> Result<()> {
    linalg::ensure_dim(other, rho.dim())
}

/// Symmetric logarithmic derivative `L` with `δρ = ½(ρL + Lρ)` on `supp(ρ)`.
///
/// Matrix elements with `p_i + p_j` below `support_cutoff * max(p)` are set to zero;
/// if the tangent carries weight above 1e-6 there, the call fails with
/// [`Error::SupportMismatch`].
pub fn solve_sld(rho: &DensityMatrix, drho: &TangentMatrix, support_cutoff: f64) -> Result<CMatrix> {
    check_dims(rho, drho.as_matrix())?;
    let frame = SupportFrame::new(rho, support_cutoff)?;
    let l = frame.sld_eigenbasis(&frame.to_eigenbasis(drho.as_matrix()))?;
    let u = &frame.eig.eigenvectors;
    Ok(hermitian_part(&(u * l * u.adjoint())))
}

/// QFIM from explicit tangents `∂_μρ`, ordered `(t, λ¹, …)`.
pub fn qfim_from_tangents(rho: &DensityMatrix, tangents: &[TangentMatrix], support_cutoff: f64) -> Result<QfimBlocks> {
    if tangents.is_empty() {
        return Err(Error::DomainError("at least the time tangent is required".into()));
    }
    for t in tangents {
        check_dims(rho, t.as_matrix())?;
    }
    let frame = SupportFrame::new(rho, support_cutoff)?;
    let rotated: Vec<CMatrix> = tangents.iter().map(|t| frame.to_eigenbasis(t.as_matrix())).collect();
    let slds = rotated
        .iter()
        .map(|d| frame.sld_eigenbasis(d))
        .collect::<Result<Vec<_>>>()?;
    let m = tangents.len();
    let mut full = RMatrix::zeros(m, m);
    for mu in 0..m {
        for nu in 0..m {
            // Re Tr[A B] = Re Σ_ij A_ji B_ij
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in rotated[mu].transpose().iter().zip(slds[nu].iter()) {
                acc += a * b;
            }
            full[(mu, nu)] = acc.re;
        }
    }
    let sym = (&full + full.transpose()).scale(0.5);
    QfimBlocks::from_full(&sym)
}

/// Pure-state QFIM `F_μν = 4 Re(⟨G_μG_ν⟩ − ⟨G_μ⟩⟨G_ν⟩)` from local generators.
pub fn qfim_pure_generators(psi0: &CVector, generators: &[CMatrix]) -> Result<QfimBlocks> {
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    if generators.is_empty() {
        return Err(Error::DomainError("at least the time generator is required".into()));
    }
    let applied: Vec<CVector> = generators
        .iter()
        .map(|g| {
            linalg::ensure_dim(g, psi0.len())?;
            let asym = max_asymmetry(g);
            if asym > linalg::HERMITIAN_REJECT_TOL * g.norm().max(1.0) {
                return Err(Error::NonHermitianInput(asym));
            }
            Ok(g * psi0)
        })
        .collect::<Result<_>>()?;
    let means: Vec<Complex64> = applied.iter().map(|gpsi| psi0.dotc(gpsi)).collect();
    let m = generators.len();
    let full = RMatrix::from_fn(m, m, |mu, nu| {
        let second = applied[mu].dotc(&applied[nu]);
        4.0 * (second - means[mu].conj() * means[nu]).re
    });
    let sym = (&full + full.transpose()).scale(0.5);
    QfimBlocks::from_full(&sym)
}

/// Schur complement `F_eff = F_tt − fᵀ F_λλ⁺ f`, clamped into `[0, F_tt]`.
pub fn schur_effective(blocks: &QfimBlocks, rank_tol: f64) -> Result<f64> {
    if blocks.n_nuisance() == 0 {
        return Ok(blocks.f_tt.max(0.0));
    }
    let pinv = pinv_psd(&blocks.f_ll, rank_tol)?;
    let f = &blocks.f_tl;
    let penalty = (f.transpose() * pinv * f)[(0, 0)];
    let value = blocks.f_tt - penalty;
    let scale = blocks.f_tt.abs().max(penalty.abs()).max(1.0);
    if value < -NEGATIVE_EFF_REJECT * scale {
        return Err(Error::NegativeEffective(value));
    }
    Ok(value.clamp(0.0, blocks.f_tt.max(0.0)))
}

/// Squared Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped into `[0, 1]`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma.as_matrix())?;
    // eigenvalues at the rounding floor would otherwise contribute √ε ≈ 1e-8
    let floor = |values: &DVector<f64>| EIGEN_FLOOR * values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floored_sqrt = move |v: f64, f: f64| if v > f { v.sqrt() } else { 0.0 };
    let eig_rho = eig_hermitian(rho.as_matrix())?;
    let f_rho = floor(&eig_rho.eigenvalues);
    let sqrt_rho = hermitian_part(&eig_rho.map_eigenvalues(|v| floored_sqrt(v, f_rho)));
    let inner = hermitian_part(&(&sqrt_rho * sigma.as_matrix() * &sqrt_rho));
    let eig = eig_hermitian(&inner)?;
    let f_inner = floor(&eig.eigenvalues);
    let root_trace: f64 = eig.eigenvalues.iter().map(|&v| floored_sqrt(v, f_inner)).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// `arccos √F`, the Bures angle for a given fidelity.
pub fn angle_from_fidelity(fidelity: f64) -> f64 {
    fidelity.clamp(0.0, 1.0).sqrt().acos()
}

pub fn bures_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(angle_from_fidelity(uhlmann_fidelity(rho, sigma)?))
}
