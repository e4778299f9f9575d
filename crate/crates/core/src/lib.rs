//! Nuisance-profiled quantum speed limits.
//!
//! The crate computes the multiparameter SLD quantum Fisher information (QFIM)
//! along quantum trajectories, profiles calibration parameters out of it with a
//! Schur complement, and evaluates the resulting projected speed
//! `v_quo = ½√F_eff` together with endpoint quotient Bures angles.
//!
//! Module map:
//!
//! - [`linalg`]: dense Hermitian eigendecomposition, PSD pseudoinverse and square root.
//! - [`bures`]: SLD solve, QFIM assembly, Uhlmann fidelity, Schur-complement profiling.
//! - [`lindblad`]: parameterized GKSL generators and joint state/sensitivity propagation.
//! - [`jc_unitary`]: closed-form unitary Jaynes-Cummings sensor.
//! - [`jc_dispersive`]: dispersive open Jaynes-Cummings sensor with Purcell loss.
//! - [`window`]: calibration windows, window suprema and the quadrature used for averaged speeds.
//! - [`report`]: CSV writers for heatmap, tolerance, speed and QSL tables.

pub mod bures;
pub mod error;
pub mod jc_dispersive;
pub mod jc_unitary;
pub mod linalg;
pub mod lindblad;
pub mod report;
pub mod window;

pub use bures::{
    bures_angle, qfim_from_tangents, qfim_pure_generators, schur_effective, solve_sld, uhlmann_fidelity, DensityMatrix,
    ProjectedSpeedSample, QfimBlocks, TangentMatrix,
};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, RMatrix};
pub use window::{CalibrationWindow, QslCheck};
