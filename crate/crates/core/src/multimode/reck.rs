// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Triangular decomposition of a passive map into phase-free beam
//! splitters on neighbouring modes and phase shifters.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multimode::bloch_messiah::is_passive;
use crate::symplectic::{beam_splitter_matrix, rotation, SymplecticMap};

const PASSIVE_TOL: f64 = 1e-9;
const SKIP_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum ReckElement {
    BeamSplitter { reflectivity: f64, modes: (usize, usize) },
    PhaseShifter { theta: f64, mode: usize },
}

impl ReckElement {
    pub fn to_map(&self, n: usize) -> Result<SymplecticMap> {
        match *self {
            ReckElement::BeamSplitter { reflectivity, modes } => {
                beam_splitter_matrix(reflectivity)?.embed(n, &[modes.0, modes.1])
            }
            ReckElement::PhaseShifter { theta, mode } => rotation(theta).embed(n, &[mode]),
        }
    }
}

/// Elements in application order (first element acts first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReckNetwork {
    pub n: usize,
    pub elements: Vec<ReckElement>,
}

impl ReckNetwork {
    pub fn beam_splitter_count(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e, ReckElement::BeamSplitter { .. })).count()
    }

    pub fn phase_shifter_count(&self) -> usize {
        self.elements.len() - self.beam_splitter_count()
    }

    pub fn compose(&self) -> Result<SymplecticMap> {
        self.elements.iter().try_fold(SymplecticMap::identity(self.n), |acc, e| e.to_map(self.n)?.compose(&acc))
    }
}

/// Passive `((X, −Y), (Y, X))` as the unitary `X + iY`.
fn to_unitary(m: &DMatrix<f64>, n: usize) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(n, n, |r, c| Complex::new(m[(r, c)], m[(n + r, c)]))
}

pub fn reck_decompose(passive: &SymplecticMap) -> Result<ReckNetwork> {
    if !is_passive(passive, PASSIVE_TOL) {
        return Err(Error::Domain("reck_decompose needs an orthogonal symplectic map".into()));
    }
    let n = passive.modes();
    let mut w = to_unitary(passive.matrix(), n);
    // Each nulling step applies a phase then a beam splitter on rows (r−1, r).
    let mut steps: Vec<(usize, f64, f64)> = Vec::new();
    for c in 0..n {
        for r in (c + 1..n).rev() {
            let (u, v) = (w[(r - 1, c)], w[(r, c)]);
            if v.norm() == 0.0 {
                continue;
            }
            let phi = if u.norm() == 0.0 { -v.arg() } else { u.arg() - v.arg() };
            let rot = Complex::from_polar(1.0, phi);
            w.row_mut(r).iter_mut().for_each(|z| *z *= rot);
            let norm = u.norm().hypot(v.norm());
            let (s, t) = (u.norm() / norm, v.norm() / norm);
            for k in 0..n {
                let (a, b) = (w[(r - 1, k)], w[(r, k)]);
                w[(r - 1, k)] = a * s + b * t;
                w[(r, k)] = a * t - b * s;
            }
            w[(r, c)] = Complex::new(0.0, 0.0);
            steps.push((r, phi, s * s));
        }
    }

    let mut elements = Vec::new();
    for i in 0..n {
        let theta = w[(i, i)].arg();
        if theta.abs() > SKIP_TOL {
            elements.push(ReckElement::PhaseShifter { theta, mode: i });
        }
    }
    for &(r, phi, reflectivity) in steps.iter().rev() {
        elements.push(ReckElement::BeamSplitter { reflectivity: reflectivity.clamp(0.0, 1.0), modes: (r - 1, r) });
        if phi.abs() > SKIP_TOL {
            elements.push(ReckElement::PhaseShifter { theta: -phi, mode: r });
        }
    }
    let net = ReckNetwork { n, elements };
    let residual = net.compose()?.max_abs_diff(passive);
    if !(residual <= 1e-9) {
        return Err(Error::Numerical(format!("Reck reconstruction residual {residual:.3e}")));
    }
    Ok(net)
}
