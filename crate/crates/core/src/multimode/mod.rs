// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Multimode synthesis: Bloch-Messiah reduction, Reck networks and the
//! connection gates that lower beam splitters onto the cluster.

pub mod bloch_messiah;
pub mod compile;
pub mod connection;
pub mod reck;

pub use bloch_messiah::{bloch_messiah, is_passive, BlochMessiahFactors};
pub use compile::{compile, CompileOptions, CompiledProgram, CouplingKind};
pub use connection::{beam_splitter_program, connection_gate, ConnectionGateParams};
pub use reck::{reck_decompose, ReckElement, ReckNetwork};
