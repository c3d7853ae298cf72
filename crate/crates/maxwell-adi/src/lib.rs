//! Linear-cost time integration for Maxwell's equations on tensor-product
//! B-spline spaces.
//!
//! The solver advances the coupled electric/magnetic system with a two-substep
//! alternating-direction implicit scheme: every implicit solve factors into a
//! sequence of small banded one-dimensional solves, so a full time step costs
//! O(N) in the number of unknowns. Material data (air/tissue/bone style voxel
//! maps) enters through per-test-function coefficients that keep the
//! one-dimensional structure intact.
//!
//! Module map:
//!
//! - [`splines`]: open knot vectors, basis evaluation, Greville abscissae,
//!   Gauss quadrature.
//! - [`linalg1d`]: 1D Galerkin matrices (mass/stiffness/advection), banded LU.
//! - [`kron`]: rank-3 coefficient tensors, Kronecker applies, directional
//!   sweep solves.
//! - [`maxwell`]: operator assembly and the two-substep time stepper.
//! - [`materials`]: voxel ingestion, classification, coefficient sampling.
//! - [`verify`]: manufactured solutions, error norms, dense reference step,
//!   convergence and scaling studies.
//! - [`config`], [`output`], [`cli`]: run configuration, snapshot/CSV writers,
//!   and the command-line entry points.
//!
//! The `examples/` directory is the guided tour; each example exercises one
//! capability end to end (`cargo run --example manufactured_run`, ...).

pub mod cli;
pub mod config;
pub mod kron;
pub mod linalg1d;
pub mod materials;
pub mod maxwell;
pub mod output;
pub mod splines;
pub mod verify;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {x} outside domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular system ({context}): pivot below threshold at row {row}")]
    Singular { context: String, row: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("problem too large for dense reference solve: {0}")]
    TooLargeForDense(String),
}

pub type Result<T> = std::result::Result<T, Error>;
