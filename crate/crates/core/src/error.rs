// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the compiler, simulator and program I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symplectic: max |MᵀJM - J| = {violation:.3e} at entry ({row}, {col})")]
    NotSymplectic { violation: f64, row: usize, col: usize },

    #[error("singular parameter choice: {0}")]
    SingularParameter(String),

    #[error("degenerate teleportation measurement: |cos(theta_minus)| = {0:.3e}")]
    DegenerateMeasurement(f64),

    #[error("degenerate conditioning: measured quadrature variance {0:.3e}")]
    DegenerateConditioning(f64),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("incompatible format version {found} (this build reads version {expected})")]
    Version { found: u64, expected: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
