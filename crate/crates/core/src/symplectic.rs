// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact algebra of the real symplectic group in `(x₁..xₙ, p₁..pₙ)` block
//! ordering.
//!
//! Every map is an affine Heisenberg-picture action `r ↦ M r + d` on the
//! quadrature vector `r = (x, p)`. Composition follows operator order:
//! `a.compose(&b)` applies `b` first.

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance for freshly constructed maps.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Tolerance after long products or for user-supplied matrices.
pub const COMPOSED_SYMPLECTIC_TOL: f64 = 1e-8;

/// Phase-space conventions used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convention {
    pub hbar: f64,
    pub vacuum_quadrature_variance: f64,
    pub block_ordering: BlockOrdering,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockOrdering {
    XThenP,
}

impl Convention {
    /// `ħ = 1/2`, so `[x, p] = i/2` and the vacuum variance is `1/4`.
    pub const STANDARD: Convention =
        Convention { hbar: 0.5, vacuum_quadrature_variance: 0.25, block_ordering: BlockOrdering::XThenP };
}

pub const HBAR: f64 = Convention::STANDARD.hbar;
pub const VACUUM_VARIANCE: f64 = Convention::STANDARD.vacuum_quadrature_variance;

/// The symplectic form `J = (0 I; -I 0)`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Largest entry of `|MᵀJM − J|` and its location.
pub fn symplectic_violation(m: &DMatrix<f64>) -> (f64, usize, usize) {
    let n = m.nrows() / 2;
    let j = symplectic_form(n);
    let residual = m.transpose() * &j * m - j;
    let mut worst = (0.0, 0, 0);
    for c in 0..residual.ncols() {
        for r in 0..residual.nrows() {
            let v = residual[(r, c)].abs();
            if v > worst.0 || v.is_nan() {
                worst = (v, r, c);
            }
        }
    }
    worst
}

/// Real `2n × 2n` symplectic matrix with a `2n` displacement vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticMap {
    /// Validates the matrix against [`COMPOSED_SYMPLECTIC_TOL`].
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        Self::with_tolerance(matrix, displacement, COMPOSED_SYMPLECTIC_TOL)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        Self::new(matrix, DVector::zeros(dim))
    }

    pub fn with_tolerance(matrix: DMatrix<f64>, displacement: DVector<f64>, tol: f64) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim {
            return Err(Error::Domain(format!(
                "expected a square matrix of even dimension, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if displacement.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: displacement.len() });
        }
        if matrix.iter().chain(displacement.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite entry".into()));
        }
        let (violation, row, col) = symplectic_violation(&matrix);
        if !(violation <= tol) {
            return Err(Error::NotSymplectic { violation, row, col });
        }
        Ok(Self { matrix, displacement })
    }

    /// For internal constructors whose output is symplectic by construction.
    pub(crate) fn from_parts(matrix: DMatrix<f64>) -> Self {
        let dim = matrix.nrows();
        Self { matrix, displacement: DVector::zeros(dim) }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(DMatrix::identity(2 * n, 2 * n))
    }

    pub fn from_2x2(m: Matrix2<f64>) -> Self {
        Self::from_parts(DMatrix::from_fn(2, 2, |r, c| m[(r, c)]))
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn with_displacement(mut self, displacement: DVector<f64>) -> Result<Self> {
        if displacement.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: self.matrix.nrows(), found: displacement.len() });
        }
        self.displacement = displacement;
        Ok(self)
    }

    /// One-mode entries `(a, b, c, d)` of `((a, b), (c, d))`.
    pub fn entries_2x2(&self) -> Result<(f64, f64, f64, f64)> {
        if self.modes() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.modes() });
        }
        let m = &self.matrix;
        Ok((m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
    }

    pub fn as_2x2(&self) -> Result<Matrix2<f64>> {
        let (a, b, c, d) = self.entries_2x2()?;
        Ok(Matrix2::new(a, b, c, d))
    }

    pub fn violation(&self) -> f64 {
        symplectic_violation(&self.matrix).0
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.violation() <= tol
    }

    /// `self ∘ other`: matrix `self.M · other.M`, displacement
    /// `self.M · other.d + self.d`.
    pub fn compose(&self, other: &SymplecticMap) -> Result<SymplecticMap> {
        if self.modes() != other.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), found: other.modes() });
        }
        Ok(SymplecticMap {
            matrix: &self.matrix * &other.matrix,
            displacement: &self.matrix * &other.displacement + &self.displacement,
        })
    }

    /// Exact inverse `-J Mᵀ J`, with the displacement undone.
    pub fn inverse(&self) -> SymplecticMap {
        let j = symplectic_form(self.modes());
        let inv = -(&j * self.matrix.transpose() * &j);
        let displacement = -(&inv * &self.displacement);
        SymplecticMap { matrix: inv, displacement }
    }

    /// Acts as `self` on `modes` (in order) and as identity elsewhere.
    pub fn embed(&self, n: usize, modes: &[usize]) -> Result<SymplecticMap> {
        let k = self.modes();
        if modes.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: modes.len() });
        }
        for (i, &m) in modes.iter().enumerate() {
            if m >= n {
                return Err(Error::Domain(format!("mode index {m} out of range for {n} modes")));
            }
            if modes[..i].contains(&m) {
                return Err(Error::Domain(format!("duplicate mode index {m}")));
            }
        }
        let global = |local: usize| {
            if local < k {
                modes[local]
            } else {
                n + modes[local - k]
            }
        };
        let mut matrix = DMatrix::identity(2 * n, 2 * n);
        let mut displacement = DVector::zeros(2 * n);
        for r in 0..2 * k {
            let gr = global(r);
            for c in 0..2 * k {
                matrix[(gr, global(c))] = self.matrix[(r, c)];
            }
            displacement[gr] = self.displacement[r];
        }
        Ok(SymplecticMap { matrix, displacement })
    }

    /// Largest absolute entry difference of the matrices.
    pub fn max_abs_diff(&self, other: &SymplecticMap) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Phase-space rotation `R(θ) = ((cos θ, −sin θ), (sin θ, cos θ))`.
pub fn rotation(theta: f64) -> SymplecticMap {
    let (s, c) = theta.sin_cos();
    SymplecticMap::from_2x2(Matrix2::new(c, -s, s, c))
}

/// Fourier transform `F = R(π/2)`, built exactly.
pub fn fourier() -> SymplecticMap {
    SymplecticMap::from_2x2(Matrix2::new(0.0, -1.0, 1.0, 0.0))
}

/// Quadratic phase gate `exp(iκx²)`: the shear `((1, 0), (κ, 1))`.
pub fn quad_phase(kappa: f64) -> SymplecticMap {
    SymplecticMap::from_2x2(Matrix2::new(1.0, 0.0, kappa, 1.0))
}

/// One teleportation step `M(κ) = F·O(κ) = ((−κ, −1), (1, 0))`.
pub fn elementary_step(kappa: f64) -> SymplecticMap {
    SymplecticMap::from_2x2(elementary_step_2x2(kappa))
}

pub(crate) fn elementary_step_2x2(kappa: f64) -> Matrix2<f64> {
    Matrix2::new(-kappa, -1.0, 1.0, 0.0)
}

/// Squeezer `S(r) = diag(eʳ, e⁻ʳ)`; `r > 0` squeezes `p`.
pub fn squeeze(r: f64) -> SymplecticMap {
    SymplecticMap::from_2x2(Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp()))
}

/// The real reflection `M_R = ((√R, √(1−R)), (√(1−R), −√R))`.
pub fn beam_splitter_block(reflectivity: f64) -> Result<Matrix2<f64>> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::Domain(format!("reflectivity {reflectivity} outside [0, 1]")));
    }
    let s = reflectivity.sqrt();
    let t = (1.0 - reflectivity).sqrt();
    Ok(Matrix2::new(s, t, t, -s))
}

/// Phase-free beam splitter `M_R ⊕ M_R` on two modes.
pub fn beam_splitter_matrix(reflectivity: f64) -> Result<SymplecticMap> {
    let b = beam_splitter_block(reflectivity)?;
    let mut m = DMatrix::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = b[(r, c)];
            m[(r + 2, c + 2)] = b[(r, c)];
        }
    }
    Ok(SymplecticMap::from_parts(m))
}

/// QND coupling `exp(2i x̂_j x̂_k)` on `n` modes:
/// `p_j → p_j + x_k`, `p_k → p_k + x_j`.
pub fn qnd_gate(n: usize, j: usize, k: usize) -> Result<SymplecticMap> {
    if j == k {
        return Err(Error::Domain(format!("QND gate needs two distinct modes, got {j} twice")));
    }
    if j >= n || k >= n {
        return Err(Error::Domain(format!("QND modes ({j}, {k}) out of range for {n} modes")));
    }
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(n + j, k)] = 1.0;
    m[(n + k, j)] = 1.0;
    Ok(SymplecticMap::from_parts(m))
}

/// Seeded test-input generator: alternating layers of per-mode
/// `R·S·R` and beam splitters with phases on neighbouring modes.
pub fn random_symplectic(n: usize, seed: u64) -> Result<SymplecticMap> {
    if n == 0 {
        return Err(Error::Domain("random_symplectic needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let local_layer = |rng: &mut ChaCha8Rng, acc: &SymplecticMap| -> Result<SymplecticMap> {
        let mut acc = acc.clone();
        for mode in 0..n {
            let gate = rotation(rng.random::<f64>() * tau)
                .compose(&squeeze(rng.random_range(-0.8..0.8)))?
                .compose(&rotation(rng.random::<f64>() * tau))?;
            acc = gate.embed(n, &[mode])?.compose(&acc)?;
        }
        Ok(acc)
    };
    let mut acc = local_layer(&mut rng, &SymplecticMap::identity(n))?;
    for _ in 1..n {
        for mode in 0..n - 1 {
            let bs = beam_splitter_matrix(rng.random::<f64>())?;
            let phase = rotation(rng.random::<f64>() * tau).embed(n, &[mode])?;
            acc = bs.embed(n, &[mode, mode + 1])?.compose(&phase)?.compose(&acc)?;
        }
        acc = local_layer(&mut rng, &acc)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
    }

    #[test]
    fn rotation_special_angles() {
        assert_eq!(rotation(0.0), SymplecticMap::identity(1));
        assert!(rotation(FRAC_PI_2).max_abs_diff(&fourier()) < 1e-16);
        assert!(rotation(PI).max_abs_diff(&SymplecticMap::from_2x2(-Matrix2::identity())) < 1e-15);
    }

    #[test]
    fn quad_phase_values_and_composition() {
        assert_eq!(quad_phase(0.0), SymplecticMap::identity(1));
        assert_eq!(quad_phase(2.0).matrix(), &mat(&[&[1.0, 0.0], &[2.0, 1.0]]));
        let c = quad_phase(0.3).compose(&quad_phase(-1.7)).unwrap();
        assert!(c.max_abs_diff(&quad_phase(-1.4)) < 1e-15);
    }

    #[test]
    fn elementary_step_values() {
        assert_eq!(elementary_step(0.0), fourier());
        assert_eq!(elementary_step(1.0).matrix(), &mat(&[&[-1.0, -1.0], &[1.0, 0.0]]));
        let (k1, k2) = (0.7, -2.3);
        let two = elementary_step(k2).compose(&elementary_step(k1)).unwrap();
        let expected = mat(&[&[k2 * k1 - 1.0, k2], &[-k1, -1.0]]);
        assert!(max_abs_diff(two.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn elementary_step_is_fourier_after_shear() {
        for &k in &[0.0, 1.0, -3.5, 12.25] {
            let via = fourier().compose(&quad_phase(k)).unwrap();
            assert_eq!(via, elementary_step(k));
        }
    }

    #[test]
    fn squeeze_values() {
        assert_eq!(squeeze(0.0), SymplecticMap::identity(1));
        let s = squeeze(2f64.ln());
        assert!(max_abs_diff(s.matrix(), &mat(&[&[2.0, 0.0], &[0.0, 0.5]])) < 1e-15);
        let back = squeeze(0.9).compose(&squeeze(-0.9)).unwrap();
        assert!(back.max_abs_diff(&SymplecticMap::identity(1)) < 1e-15);
    }

    #[test]
    fn beam_splitter_values() {
        let b1 = beam_splitter_block(1.0).unwrap();
        assert_eq!(b1, Matrix2::new(1.0, 0.0, 0.0, -1.0));
        let half = beam_splitter_block(0.5).unwrap();
        let expected = Matrix2::new(1.0, 1.0, 1.0, -1.0) * FRAC_1_SQRT_2;
        assert!((half - expected).abs().max() < 1e-16);
        for &r in &[0.0, 0.13, 0.5, 0.99, 1.0] {
            let b = beam_splitter_block(r).unwrap();
            assert!((b * b - Matrix2::identity()).abs().max() < 1e-15);
            assert!(beam_splitter_matrix(r).unwrap().is_symplectic(1e-15));
        }
        assert!(matches!(beam_splitter_matrix(1.5), Err(Error::Domain(_))));
        assert!(matches!(beam_splitter_matrix(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn qnd_gate_heisenberg_action() {
        let q = qnd_gate(2, 0, 1).unwrap();
        let expected =
            mat(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]]);
        assert_eq!(q.matrix(), &expected);
        assert_eq!(qnd_gate(3, 0, 2).unwrap(), qnd_gate(3, 2, 0).unwrap());
        let twice = q.compose(&q).unwrap();
        assert_eq!(twice.matrix()[(2, 1)], 2.0);
        assert_eq!(twice.matrix()[(3, 0)], 2.0);
        assert!(q.is_symplectic(0.0));
        assert!(matches!(qnd_gate(2, 1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn qnd_commutes_with_shear_on_either_mode() {
        let q = qnd_gate(3, 0, 2).unwrap();
        for mode in [0, 2] {
            let o = quad_phase(1.7).embed(3, &[mode]).unwrap();
            let a = q.compose(&o).unwrap();
            let b = o.compose(&q).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-15);
        }
    }

    #[test]
    fn compose_examples() {
        let x = random_symplectic(2, 4).unwrap();
        assert_eq!(SymplecticMap::identity(2).compose(&x).unwrap(), x);
        let ff = fourier().compose(&fourier()).unwrap();
        assert!(ff.max_abs_diff(&rotation(PI)) < 1e-15);
        let y = random_symplectic(2, 5).unwrap();
        assert!(x.compose(&y).unwrap().is_symplectic(1e-10));
        assert!(matches!(x.compose(&fourier()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_carries_displacement() {
        let a = rotation(0.4).with_displacement(DVector::from_vec(vec![1.0, -2.0])).unwrap();
        let b = squeeze(0.3).with_displacement(DVector::from_vec(vec![0.5, 0.25])).unwrap();
        let c = a.compose(&b).unwrap();
        let expected = a.matrix() * b.displacement() + a.displacement();
        assert_abs_diff_eq!(c.displacement()[0], expected[0], epsilon = 1e-15);
        assert_abs_diff_eq!(c.displacement()[1], expected[1], epsilon = 1e-15);
        let round = c.compose(&c.inverse()).unwrap();
        assert!(round.max_abs_diff(&SymplecticMap::identity(1)) < 1e-14);
        assert!(round.displacement().amax() < 1e-14);
    }

    #[test]
    fn embed_examples() {
        assert_eq!(SymplecticMap::identity(1).embed(3, &[1]).unwrap(), SymplecticMap::identity(3));
        let e = fourier().embed(2, &[1]).unwrap();
        let m = e.matrix();
        // mode 0 rows/columns untouched: indices 0 (x0) and 2 (p0)
        for &i in &[0usize, 2] {
            for k in 0..4 {
                let id = if i == k { 1.0 } else { 0.0 };
                assert_eq!(m[(i, k)], id);
                assert_eq!(m[(k, i)], id);
            }
        }
        assert_eq!(m[(1, 3)], -1.0);
        assert_eq!(m[(3, 1)], 1.0);
        let bs = beam_splitter_matrix(0.3).unwrap().embed(4, &[3, 1]).unwrap();
        assert!(bs.is_symplectic(1e-15));
        assert!(matches!(fourier().embed(2, &[2]), Err(Error::Domain(_))));
        assert!(matches!(beam_splitter_matrix(0.3).unwrap().embed(3, &[1, 1]), Err(Error::Domain(_))));
    }

    #[test]
    fn random_symplectic_properties() {
        for n in 1..=4 {
            let a = random_symplectic(n, 99).unwrap();
            let b = random_symplectic(n, 99).unwrap();
            assert_eq!(a, b);
            assert!(a.violation() < 1e-10, "n={n}: {}", a.violation());
        }
        for seed in 0..20 {
            let m = random_symplectic(1, seed).unwrap();
            assert!((m.matrix().determinant() - 1.0).abs() < 1e-12);
        }
        assert_ne!(random_symplectic(2, 1).unwrap(), random_symplectic(2, 2).unwrap());
    }

    #[test]
    fn new_rejects_non_symplectic() {
        let err = SymplecticMap::from_matrix(mat(&[&[2.0, 0.0], &[0.0, 1.0]])).unwrap_err();
        match err {
            Error::NotSymplectic { violation, .. } => assert!((violation - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SymplecticMap::from_matrix(DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn convention_constants() {
        assert_eq!(HBAR, 0.5);
        assert_eq!(VACUUM_VARIANCE, HBAR / 2.0);
    }
}
