// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Finite-squeezing Gaussian simulation of measurement programs.

mod exec;
mod hp;
pub mod state;

pub use exec::{
    db_to_r, derive_feedforward_gains, extract_effective_map, gains_to_rules, mean_scatter_covariance,
    probe_feedforward_gains, run_program, EffectiveMap, OutcomeRecord, RunOutput, VERIFY_SQUEEZING,
};
pub use state::{
    apply_map, build_cluster, homodyne_measure, squeezed_vacuum, GaussianState, HomodyneResult,
    MeasurementOutcomePolicy, OutcomeSource,
};
