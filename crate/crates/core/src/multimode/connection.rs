// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! The two-input connection gate: two cluster wires joined through a
//! shared controller ancilla.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::symplectic::{beam_splitter_block, SymplecticMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConnectionGateParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub eta3: f64,
    pub mode_pair: (usize, usize),
}

impl ConnectionGateParams {
    /// Homodyne angles `(wire i, wire j, controller)` in `(−π/2, π/2]`.
    pub fn homodyne_angles(&self) -> (f64, f64, f64) {
        let controller = if self.eta3 == 0.0 { std::f64::consts::FRAC_PI_2 } else { (1.0 / self.eta3).atan() };
        (self.kappa1.atan(), self.kappa2.atan(), controller)
    }
}

/// `F₂·((I, 0), (K, I))` on `(x_i, x_j, p_i, p_j)` with
/// `K = ((κ₁−η₃, −η₃), (−η₃, κ₂−η₃))`, i.e. `((−K, −I), (I, 0))`.
pub fn connection_gate(params: &ConnectionGateParams) -> SymplecticMap {
    let ConnectionGateParams { kappa1, kappa2, eta3, .. } = *params;
    let k = [[kappa1 - eta3, -eta3], [-eta3, kappa2 - eta3]];
    let mut m = DMatrix::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = -k[r][c];
        }
        m[(r, r + 2)] = -1.0;
        m[(r + 2, r)] = 1.0;
    }
    SymplecticMap::from_parts(m)
}

/// Three identical connection gates whose product is `M_R ⊕ M_R`.
pub fn beam_splitter_program(reflectivity: f64, mode_pair: (usize, usize)) -> Result<[ConnectionGateParams; 3]> {
    beam_splitter_block(reflectivity)?;
    let s = reflectivity.sqrt();
    let t = (1.0 - reflectivity).sqrt();
    let params = ConnectionGateParams { kappa1: s - t, kappa2: -s - t, eta3: -t, mode_pair };
    Ok([params; 3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::beam_splitter_matrix;
    use approx::assert_abs_diff_eq;

    fn params(kappa1: f64, kappa2: f64, eta3: f64) -> ConnectionGateParams {
        ConnectionGateParams { kappa1, kappa2, eta3, mode_pair: (0, 1) }
    }

    fn cube(p: &[ConnectionGateParams; 3]) -> SymplecticMap {
        p.iter().fold(SymplecticMap::identity(2), |acc, g| connection_gate(g).compose(&acc).unwrap())
    }

    #[test]
    fn zero_parameters_give_two_mode_fourier() {
        let g = connection_gate(&params(0.0, 0.0, 0.0));
        #[rustfmt::skip]
        let f2 = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, -1.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        assert_eq!(g.matrix(), &f2);
    }

    #[test]
    fn controller_couples_the_wires() {
        let g = connection_gate(&params(0.0, 0.0, 0.7));
        // Output x_i = −p_i − K x, so x_j enters with coefficient η₃.
        assert_abs_diff_eq!(g.matrix()[(0, 1)], 0.7);
        assert_abs_diff_eq!(g.matrix()[(1, 0)], 0.7);
        assert_eq!(connection_gate(&params(0.4, -1.0, 0.0)).matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn symplectic_for_random_parameters() {
        for i in 0..100 {
            let x = i as f64;
            let g = connection_gate(&params((0.37 * x).sin() * 5.0, (1.3 * x).cos() * 3.0, (0.11 * x).tan()));
            assert!(g.is_symplectic(1e-12));
        }
    }

    #[test]
    fn beam_splitter_examples() {
        let p = beam_splitter_program(1.0, (0, 1)).unwrap();
        assert_eq!((p[0].kappa1, p[0].kappa2, p[0].eta3), (1.0, -1.0, 0.0));
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]));
        assert!(crate::symplectic::max_abs_diff(cube(&p).matrix(), &diag) < 1e-12);

        let p = beam_splitter_program(0.5, (0, 1)).unwrap();
        assert_abs_diff_eq!(p[0].kappa1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0].kappa2, -2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p[0].eta3, -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(cube(&p).max_abs_diff(&beam_splitter_matrix(0.5).unwrap()) < 1e-12);

        let p = beam_splitter_program(0.0, (0, 1)).unwrap();
        #[rustfmt::skip]
        let swap = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        assert!(crate::symplectic::max_abs_diff(cube(&p).matrix(), &swap) < 1e-12);

        assert!(beam_splitter_program(1.5, (0, 1)).is_err());
    }

    #[test]
    fn homodyne_angles_follow_parameters() {
        let (a, b, c) = params(1.0, 0.0, 0.0).homodyne_angles();
        assert_abs_diff_eq!(a, std::f64::consts::FRAC_PI_4);
        assert_eq!(b, 0.0);
        assert_eq!(c, std::f64::consts::FRAC_PI_2);
        let (_, _, c) = params(0.0, 0.0, -1.0).homodyne_angles();
        assert_abs_diff_eq!(c, -std::f64::consts::FRAC_PI_4);
    }
}
