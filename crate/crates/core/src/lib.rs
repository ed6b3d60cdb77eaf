// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Compiler from multimode Gaussian unitaries to continuous-variable
//! cluster-state measurement programs, with a finite-squeezing Gaussian
//! simulator to check them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod heisenberg;
pub mod multimode;
pub mod program;
mod search;
pub mod sim;
pub mod single_mode;
pub mod symplectic;
pub mod teleport;

pub use error::{Error, Result};
pub use symplectic::SymplecticMap;
