// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Passive · squeezers · passive factorization of a symplectic matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::symplectic::{max_abs_diff, symplectic_form, SymplecticMap, COMPOSED_SYMPLECTIC_TOL};

/// Eigenvalues of `√(S Sᵀ)` within this of 1 count as unsqueezed.
const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct BlochMessiahFactors {
    pub u: SymplecticMap,
    /// Squeezing `rᵢ ≥ 0` of `S(rᵢ)` on mode `i`.
    pub squeezing: Vec<f64>,
    pub v: SymplecticMap,
}

impl BlochMessiahFactors {
    pub fn squeezer(&self) -> SymplecticMap {
        let n = self.squeezing.len();
        let mut d = DVector::zeros(2 * n);
        for (i, r) in self.squeezing.iter().enumerate() {
            d[i] = r.exp();
            d[n + i] = (-r).exp();
        }
        SymplecticMap::from_parts(DMatrix::from_diagonal(&d))
    }

    /// `U · S · V`.
    pub fn reconstruct(&self) -> SymplecticMap {
        self.u.compose(&self.squeezer()).and_then(|m| m.compose(&self.v)).expect("factors share the mode count")
    }
}

/// Whether `m` is orthogonal and symplectic within `tol`.
pub fn is_passive(m: &SymplecticMap, tol: f64) -> bool {
    let n = m.matrix().nrows();
    let gram = m.matrix().transpose() * m.matrix();
    max_abs_diff(&gram, &DMatrix::identity(n, n)) <= tol && m.is_symplectic(tol)
}

/// Polar decomposition `S = P·O`; the positive symplectic factor `P` is
/// diagonalized by an orthogonal symplectic basis built from its
/// eigenvectors `v` and their partners `Jᵀv`.
pub fn bloch_messiah(target: &SymplecticMap) -> Result<BlochMessiahFactors> {
    let n = target.modes();
    let s = target.matrix();
    let eig = SymmetricEigen::new(s * s.transpose());
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Numerical("target matrix is singular".into()));
    }
    let q = &eig.eigenvectors;
    let p_inv =
        q * DMatrix::from_diagonal(&DVector::from_iterator(2 * n, lambdas.iter().map(|l| 1.0 / l))) * q.transpose();
    let orth = &p_inv * s;

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let jt = symplectic_form(n).transpose();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut span: Vec<DVector<f64>> = Vec::with_capacity(2 * n);
    let orthogonalize = |v: &DVector<f64>, span: &[DVector<f64>]| {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in span {
                w -= b * b.dot(&w);
            }
        }
        w
    };

    // Squeezed directions are taken in order of decreasing eigenvalue.
    let mut unit_basis: Vec<DVector<f64>> = Vec::new();
    for &i in &order {
        let v = q.column(i).into_owned();
        if lambdas[i] > 1.0 + UNIT_TOL {
            if chosen.len() < n {
                let w = orthogonalize(&v, &span).normalize();
                span.push(w.clone());
                span.push(&jt * &w);
                chosen.push(w);
            }
        } else if (lambdas[i] - 1.0).abs() <= UNIT_TOL {
            unit_basis.push(v);
        }
    }
    // The unit eigenspace is invariant under J. It is paired greedily from
    // projected coordinate axes so that passive targets keep U = I.
    let candidates: Vec<DVector<f64>> = (0..2 * n)
        .map(|axis| {
            let mut e = DVector::zeros(2 * n);
            for b in &unit_basis {
                e += b * b[axis];
            }
            e
        })
        .collect();
    while chosen.len() < n {
        let best = candidates
            .iter()
            .map(|v| orthogonalize(v, &span))
            .reduce(|best, v| if v.norm() > best.norm() + 1e-12 { v } else { best })
            .filter(|v| v.norm() > 0.5)
            .ok_or_else(|| Error::Numerical("eigenvector pairing failed".into()))?;
        let w = best.normalize();
        span.push(w.clone());
        span.push(&jt * &w);
        chosen.push(w);
    }

    let mut o1 = DMatrix::zeros(2 * n, 2 * n);
    for (i, v) in chosen.iter().enumerate() {
        o1.set_column(i, v);
        o1.set_column(n + i, &(&jt * v));
    }
    let squeezing: Vec<f64> = chosen
        .iter()
        .map(|v| {
            let pv = s * (s.transpose() * v);
            (0.5 * v.dot(&pv).ln()).max(0.0)
        })
        .collect();
    let v = o1.transpose() * orth;
    let factors = BlochMessiahFactors { u: SymplecticMap::from_parts(o1), squeezing, v: SymplecticMap::from_parts(v) };
    let residual = factors.reconstruct().max_abs_diff(target);
    if !(residual <= 1e-9 * s.amax().max(1.0)) {
        return Err(Error::Numerical(format!("Bloch-Messiah reconstruction residual {residual:.3e}")));
    }
    debug_assert!(is_passive(&factors.u, COMPOSED_SYMPLECTIC_TOL));
    Ok(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{random_symplectic, squeeze};

    #[test]
    fn identity_has_no_squeezing() {
        let f = bloch_messiah(&SymplecticMap::identity(3)).unwrap();
        assert_eq!(f.squeezing, vec![0.0; 3]);
        assert!(is_passive(&f.u, 1e-12) && is_passive(&f.v, 1e-12));
        assert!(f.reconstruct().max_abs_diff(&SymplecticMap::identity(3)) < 1e-12);
    }

    #[test]
    fn embedded_squeezer() {
        let target = squeeze(0.6).embed(3, &[1]).unwrap();
        let f = bloch_messiah(&target).unwrap();
        let mut r = f.squeezing.clone();
        r.sort_by(f64::total_cmp);
        assert!((r[2] - 0.6).abs() < 1e-12);
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
        assert!(f.reconstruct().max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn random_targets_reconstruct() {
        for n in 1..=4 {
            for seed in 0..25 {
                let t = random_symplectic(n, seed).unwrap();
                let f = bloch_messiah(&t).unwrap();
                assert!(is_passive(&f.u, 1e-10), "n={n} seed={seed}");
                assert!(is_passive(&f.v, 1e-10), "n={n} seed={seed}");
                assert!(f.squeezing.iter().all(|&r| r >= 0.0));
                assert!(f.reconstruct().max_abs_diff(&t) < 1e-9);
            }
        }
    }

    #[test]
    fn passive_target_keeps_identity_output_factor() {
        let target = crate::symplectic::beam_splitter_matrix(0.3).unwrap();
        let f = bloch_messiah(&target).unwrap();
        assert!(f.u.max_abs_diff(&SymplecticMap::identity(2)) < 1e-12);
        assert!(f.v.max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn degenerate_squeezing_is_paired() {
        // Equal squeezing on two modes followed by mixing.
        let sq = squeeze(0.4).embed(2, &[0]).unwrap().compose(&squeeze(0.4).embed(2, &[1]).unwrap()).unwrap();
        let t = random_symplectic(2, 5).unwrap();
        let passive = bloch_messiah(&t).unwrap().u;
        let target = passive.compose(&sq).unwrap();
        let f = bloch_messiah(&target).unwrap();
        assert!(f.reconstruct().max_abs_diff(&target) < 1e-10);
    }
}
