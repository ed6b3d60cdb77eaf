// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Gaussian states in `(x₁..xₙ, p₁..pₙ)` ordering with vacuum variance 1/4.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::program::ClusterGraph;
use crate::symplectic::{qnd_gate, symplectic_form, SymplecticMap, VACUUM_VARIANCE};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Domain(format!("state dimension {dim} is not a positive even number")));
        }
        if cov.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: cov.nrows() });
        }
        let asym = (&cov - cov.transpose()).amax();
        if !(asym <= SYMMETRY_TOL * cov.amax().max(1.0)) {
            return Err(Error::Domain(format!("covariance is not symmetric (max asymmetry {asym:.3e})")));
        }
        Ok(Self { mean, cov })
    }

    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn vacuum(n: usize) -> Self {
        Self::coherent(DVector::zeros(2 * n))
    }

    /// Vacuum covariance displaced to `mean`.
    pub fn coherent(mean: DVector<f64>) -> Self {
        let dim = mean.len();
        Self { mean, cov: DMatrix::identity(dim, dim) * VACUUM_VARIANCE }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Williamson invariants, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.modes();
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let l = chol.l();
        let k = l.transpose() * symplectic_form(n) * &l;
        let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        Ok(sv.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
    }

    /// Whether every symplectic eigenvalue is at least `1/4 − tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues().map(|nu| nu.iter().all(|&v| v >= VACUUM_VARIANCE - tol)).unwrap_or(false)
    }

    /// Tensor product, `self` occupying the first modes.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.modes(), other.modes());
        let n = a + b;
        let map = |m: usize, own: usize, offset: usize| if m < own { m + offset } else { n + offset + m - own };
        let mut mean = DVector::zeros(2 * n);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for (state, own, offset) in [(self, a, 0), (other, b, a)] {
            for r in 0..2 * own {
                mean[map(r, own, offset)] = state.mean[r];
                for c in 0..2 * own {
                    cov[(map(r, own, offset), map(c, own, offset))] = state.cov[(r, c)];
                }
            }
        }
        GaussianState { mean, cov }
    }

    /// Variance of `p_j − Σ_{k∈N(j)} x_k`.
    pub fn nullifier_variance(&self, node: usize, neighbours: &[usize]) -> f64 {
        let n = self.modes();
        let mut v = DVector::zeros(2 * n);
        v[n + node] = 1.0;
        for &k in neighbours {
            v[k] -= 1.0;
        }
        (v.transpose() * &self.cov * &v)[(0, 0)]
    }
}

/// `diag(e^{2r}, e^{−2r})/4`: `r > 0` squeezes `p`.
pub fn squeezed_vacuum(r: f64) -> GaussianState {
    GaussianState {
        mean: DVector::zeros(2),
        cov: DMatrix::from_diagonal(&DVector::from_vec(vec![
            (2.0 * r).exp() * VACUUM_VARIANCE,
            (-2.0 * r).exp() * VACUUM_VARIANCE,
        ])),
    }
}

/// `mean → M·mean + d`, `cov → M·cov·Mᵀ` on the selected modes.
pub fn apply_map(state: &GaussianState, map: &SymplecticMap, modes: &[usize]) -> Result<GaussianState> {
    let full = map.embed(state.modes(), modes)?;
    let m = full.matrix();
    Ok(GaussianState { mean: m * &state.mean + full.displacement(), cov: m * &state.cov * m.transpose() })
}

/// p-squeezed vacua on every node (in `graph.nodes` order) coupled by a
/// QND gate per edge.
pub fn build_cluster(graph: &ClusterGraph, r: f64) -> Result<GaussianState> {
    let n = graph.nodes.len();
    if n == 0 {
        return Err(Error::InvalidProgram("graph has no nodes".into()));
    }
    let index: std::collections::HashMap<usize, usize> =
        graph.nodes.iter().enumerate().map(|(i, node)| (node.id, i)).collect();
    let mut state = (1..n).fold(squeezed_vacuum(r), |s, _| s.tensor(&squeezed_vacuum(r)));
    for &(a, b) in &graph.edges {
        if a == b {
            return Err(Error::InvalidProgram(format!("self-loop on node {a}")));
        }
        let (ia, ib) = match (index.get(&a), index.get(&b)) {
            (Some(&ia), Some(&ib)) => (ia, ib),
            _ => return Err(Error::InvalidProgram(format!("edge ({a}, {b}) references an unknown node"))),
        };
        let q = qnd_gate(n, ia, ib)?;
        state = GaussianState { mean: q.matrix() * &state.mean, cov: q.matrix() * &state.cov * q.matrix().transpose() };
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum MeasurementOutcomePolicy {
    PinnedZero,
    Sampled { seed: u64 },
}

/// Draws homodyne outcomes according to a policy.
#[derive(Clone, Debug)]
pub struct OutcomeSource {
    rng: Option<ChaCha8Rng>,
}

impl OutcomeSource {
    pub fn new(policy: MeasurementOutcomePolicy) -> Self {
        let rng = match policy {
            MeasurementOutcomePolicy::PinnedZero => None,
            MeasurementOutcomePolicy::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Self { rng }
    }

    pub fn draw(&mut self, mean: f64, variance: f64) -> f64 {
        match &mut self.rng {
            None => 0.0,
            Some(rng) => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomodyneResult {
    pub outcome: f64,
    /// Prior variance of the measured quadrature.
    pub variance: f64,
    pub conditional: GaussianState,
}

/// Measures `x sin θ + p cos θ` of `mode`, conditions the rest and removes
/// the mode.
pub fn homodyne_measure(
    state: &GaussianState,
    mode: usize,
    theta: f64,
    source: &mut OutcomeSource,
) -> Result<HomodyneResult> {
    let n = state.modes();
    if mode >= n {
        return Err(Error::Domain(format!("mode {mode} out of range for {n} modes")));
    }
    let (s, c) = theta.sin_cos();
    let cw = state.cov.column(mode) * s + state.cov.column(n + mode) * c;
    let variance = s * cw[mode] + c * cw[n + mode];
    if !(variance > 0.0) {
        return Err(Error::DegenerateConditioning(variance));
    }
    let prior = s * state.mean[mode] + c * state.mean[n + mode];
    let outcome = source.draw(prior, variance);
    let mean = &state.mean + &cw * ((outcome - prior) / variance);
    let cov = &state.cov - &cw * cw.transpose() / variance;
    let keep: Vec<usize> = (0..2 * n).filter(|&i| i != mode && i != n + mode).collect();
    Ok(HomodyneResult {
        outcome,
        variance,
        conditional: GaussianState { mean: mean.select_rows(&keep), cov: cov.select_rows(&keep).select_columns(&keep) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::NodeRole;
    use crate::symplectic::{random_symplectic, squeeze};
    use approx::assert_abs_diff_eq;

    #[test]
    fn squeezed_vacuum_examples() {
        assert_eq!(squeezed_vacuum(0.0), GaussianState::vacuum(1));
        let s = squeezed_vacuum(4.0);
        assert!(s.cov()[(1, 1)] < 1e-4);
        for r in [-1.0, 0.3, 2.5] {
            let c = squeezed_vacuum(r).cov().clone();
            assert_abs_diff_eq!(c[(0, 0)] * c[(1, 1)], 1.0 / 16.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn apply_map_examples() {
        let v = GaussianState::vacuum(2);
        assert_eq!(apply_map(&v, &SymplecticMap::identity(2), &[0, 1]).unwrap(), v);
        // S(r) stretches x by eʳ, giving the p-squeezed vacuum of the same r.
        let s = apply_map(&GaussianState::vacuum(1), &squeeze(0.4), &[0]).unwrap();
        assert!((s.cov() - squeezed_vacuum(0.4).cov()).amax() < 1e-15);
        let thermal =
            GaussianState::new(DVector::zeros(4), DMatrix::from_diagonal(&DVector::from_vec(vec![0.4, 0.3, 0.5, 0.9])))
                .unwrap();
        let before = thermal.symplectic_eigenvalues().unwrap();
        let after =
            apply_map(&thermal, &random_symplectic(2, 4).unwrap(), &[0, 1]).unwrap().symplectic_eigenvalues().unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(before[0], (0.4f64 * 0.5).sqrt(), epsilon = 1e-12);
    }

    fn chain(len: usize) -> ClusterGraph {
        let mut g = ClusterGraph::default();
        for _ in 0..len {
            g.add_node(NodeRole::Ancilla, Some(0));
        }
        for i in 1..len {
            g.add_edge(i - 1, i);
        }
        g
    }

    #[test]
    fn cluster_nullifiers() {
        let single = build_cluster(&chain(1), 0.7).unwrap();
        assert_eq!(single, squeezed_vacuum(0.7));
        for r in [1.0, 2.0, 3.0] {
            let s = build_cluster(&chain(2), r).unwrap();
            let expected = (-2.0 * r).exp() / 4.0;
            assert_abs_diff_eq!(s.nullifier_variance(0, &[1]), expected, epsilon = 1e-12);
            assert_abs_diff_eq!(s.nullifier_variance(1, &[0]), expected, epsilon = 1e-12);
        }
        let mut g = chain(2);
        g.add_edge(1, 1);
        assert!(build_cluster(&g, 1.0).is_err());
    }

    #[test]
    fn homodyne_examples() {
        let vv = GaussianState::vacuum(2);
        for theta in [0.0, 0.4, 1.3] {
            let mut src = OutcomeSource::new(MeasurementOutcomePolicy::PinnedZero);
            let h = homodyne_measure(&vv, 0, theta, &mut src).unwrap();
            assert_eq!(h.outcome, 0.0);
            assert_abs_diff_eq!(h.variance, 0.25, epsilon = 1e-15);
            assert!((h.conditional.cov() - GaussianState::vacuum(1).cov()).amax() < 1e-15);
        }

        // Measuring p of node 0 reveals x of node 1.
        let r: f64 = 1.0;
        let s = build_cluster(&chain(2), r).unwrap();
        let mut src = OutcomeSource::new(MeasurementOutcomePolicy::PinnedZero);
        let h = homodyne_measure(&s, 0, 0.0, &mut src).unwrap();
        let (big, small) = ((2.0 * r).exp() / 4.0, (-2.0 * r).exp() / 4.0);
        // p₀' = p₀ + x₁ has variance small + big and covariance big with x₁.
        let expected = big - big * big / (big + small);
        assert_abs_diff_eq!(h.conditional.cov()[(0, 0)], expected, epsilon = 1e-12);
        assert!(h.conditional.cov()[(0, 0)] < 0.25);
    }

    #[test]
    fn conditional_covariance_ignores_outcome() {
        let s = build_cluster(&chain(3), 1.5).unwrap();
        let shifted = GaussianState::new(DVector::from_element(6, 0.3), s.cov().clone()).unwrap();
        let mut src = OutcomeSource::new(MeasurementOutcomePolicy::PinnedZero);
        let a = homodyne_measure(&s, 1, 0.7, &mut src).unwrap();
        let b = homodyne_measure(&shifted, 1, 0.7, &mut src).unwrap();
        assert_eq!(a.conditional.cov(), b.conditional.cov());
        assert_ne!(a.conditional.mean(), b.conditional.mean());
    }

    #[test]
    fn sampled_policy_is_reproducible() {
        let draw = |seed| {
            let mut src = OutcomeSource::new(MeasurementOutcomePolicy::Sampled { seed });
            (0..5).map(|_| src.draw(0.0, 1.0)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }
}
