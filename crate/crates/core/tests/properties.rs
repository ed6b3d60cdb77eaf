// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, Schur};
use proptest::prelude::*;

use cvmbqc::multimode::{bloch_messiah, compile, reck_decompose, CompileOptions, CouplingKind};
use cvmbqc::program::{ClusterGraph, MeasurementProgram, NodeRole};
use cvmbqc::sim::{apply_map, build_cluster, homodyne_measure, GaussianState, MeasurementOutcomePolicy, OutcomeSource};
use cvmbqc::single_mode::decompose_four_step;
use cvmbqc::symplectic::{random_symplectic, symplectic_form, SymplecticMap};
use cvmbqc::teleport::{decompose_telep_plus_two, TelepAngles};

/// Symplectic spectrum from the eigenvalues of `iJΣ`, which come in `±ν`.
fn spectrum(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let m = symplectic_form(n) * cov;
    let mut nu: Vec<f64> = Schur::new(m).complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
    nu.sort_by(f64::total_cmp);
    nu.into_iter().step_by(2).collect()
}

fn thermal(n: usize, seed: u64) -> GaussianState {
    let s = random_symplectic(n, seed).unwrap();
    let diag = DMatrix::from_fn(2 * n, 2 * n, |r, c| if r == c { 0.25 * (1.0 + (r % n) as f64 * 0.3) } else { 0.0 });
    let cov = s.matrix() * diag * s.matrix().transpose();
    GaussianState::new(nalgebra::DVector::zeros(2 * n), cov).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn four_step_reconstructs(seed in any::<u64>(), kappa1 in -5.0f64..5.0) {
        let target = random_symplectic(1, seed).unwrap();
        let auto = decompose_four_step(&target, None).unwrap();
        prop_assert!(auto.reconstruct().max_abs_diff(&target) < 1e-9);
        if let Ok(fixed) = decompose_four_step(&target, Some(kappa1)) {
            prop_assert_eq!(fixed.kappas[0], kappa1);
            let scale = target.matrix().amax().max(1.0);
            prop_assert!(fixed.reconstruct().max_abs_diff(&target) < 1e-9 * scale);
            prop_assert!(auto.noise_proxy <= fixed.noise_proxy + 1e-9);
        }
    }

    #[test]
    fn teleport_two_step_reconstructs(seed in any::<u64>()) {
        let target = random_symplectic(1, seed).unwrap();
        let p = decompose_telep_plus_two(&target, None).unwrap();
        prop_assert!(p.angles.is_canonical());
        prop_assert!(p.reconstruct().unwrap().max_abs_diff(&target) < 1e-9);
    }

    #[test]
    fn telep_transfer_is_symplectic(t0 in -1.5f64..1.5, t1 in -1.5f64..1.5) {
        let angles = TelepAngles::new(t0, t1);
        prop_assume!(angles.theta_minus().cos().abs() > 1e-3);
        let m = angles.transfer().unwrap();
        prop_assert!(m.violation() < 1e-9 * m.matrix().amax().powi(2).max(1.0));
    }

    #[test]
    fn apply_map_preserves_the_symplectic_spectrum(n in 1usize..4, seed in any::<u64>()) {
        let state = thermal(n, seed);
        let map = random_symplectic(n, seed.wrapping_add(1)).unwrap();
        let modes: Vec<usize> = (0..n).collect();
        let out = apply_map(&state, &map, &modes).unwrap();
        let (before, after) = (spectrum(state.cov()), spectrum(out.cov()));
        let reported = out.symplectic_eigenvalues().unwrap();
        for ((b, a), r) in before.iter().zip(&after).zip(&reported) {
            prop_assert!((a - b).abs() < 1e-6 * b.max(1.0));
            prop_assert!((r - a).abs() < 1e-6 * a.max(1.0));
        }
    }

    #[test]
    fn homodyne_covariance_ignores_the_outcome(theta in -1.5f64..1.5, r in 0.0f64..2.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let mut graph = ClusterGraph::default();
        for _ in 0..3 {
            graph.add_node(NodeRole::Ancilla, None);
        }
        graph.add_edge(0, 1);
        graph.add_edge(1, 2);
        let state = build_cluster(&graph, r).unwrap();
        let mut first = OutcomeSource::new(MeasurementOutcomePolicy::PinnedZero);
        let x = homodyne_measure(&state, 1, theta, &mut first).unwrap();
        let shifted = GaussianState::new(state.mean().add_scalar(a), state.cov().clone()).unwrap();
        let mut second = OutcomeSource::new(MeasurementOutcomePolicy::Sampled { seed: b.to_bits() });
        let y = homodyne_measure(&shifted, 1, theta, &mut second).unwrap();
        prop_assert_eq!(x.conditional.cov(), y.conditional.cov());
        prop_assert!(y.conditional.is_physical(1e-9));
    }

    #[test]
    fn measurement_sequences_stay_physical(r in 0.1f64..3.0, angles in proptest::collection::vec(-1.5f64..1.5, 5)) {
        let mut graph = ClusterGraph::default();
        for _ in 0..6 {
            graph.add_node(NodeRole::Ancilla, None);
        }
        for i in 0..5 {
            graph.add_edge(i, i + 1);
        }
        let mut state = build_cluster(&graph, r).unwrap();
        let mut source = OutcomeSource::new(MeasurementOutcomePolicy::Sampled { seed: 3 });
        for theta in angles {
            prop_assert!(state.is_physical(1e-9));
            state = homodyne_measure(&state, 0, theta, &mut source).unwrap().conditional;
        }
        prop_assert!(state.is_physical(1e-9));
    }

    #[test]
    fn bloch_messiah_and_reck_reconstruct(n in 2usize..5, seed in any::<u64>()) {
        let target = random_symplectic(n, seed).unwrap();
        let f = bloch_messiah(&target).unwrap();
        prop_assert!(f.squeezing.iter().all(|&s| s >= 0.0));
        prop_assert!(f.reconstruct().max_abs_diff(&target) < 1e-8 * target.matrix().amax().max(1.0));
        for passive in [&f.u, &f.v] {
            let network = reck_decompose(passive).unwrap();
            prop_assert!(network.compose().unwrap().max_abs_diff(passive) < 1e-9);
        }
    }

    #[test]
    fn compiled_programs_replay_and_round_trip(n in 1usize..4, seed in any::<u64>(), teleport in any::<bool>()) {
        let target = random_symplectic(n, seed).unwrap();
        let coupling = if teleport { CouplingKind::Teleport } else { CouplingKind::Qnd };
        let compiled = compile(&target, &CompileOptions { coupling, ..Default::default() }).unwrap();
        prop_assert!(compiled.report.replay_residual < 1e-9);
        let text = compiled.program.to_json().unwrap();
        prop_assert_eq!(MeasurementProgram::from_json(&text).unwrap(), compiled.program);
    }

    #[test]
    fn symplectic_validation_matches_the_definition(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0) {
        let m = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        let det = a * d - b * c;
        let accepted = SymplecticMap::from_matrix(m).is_ok();
        prop_assert_eq!(accepted, (det - 1.0).abs() <= 1e-8);
    }
}
