// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear Heisenberg-picture model of a measurement program.
//!
//! All node quadratures `ζ = (x, p)` are coupled by the QND edges and Bell
//! splitters into `z = C ζ`. Homodyne outcomes are `s = W z` and the
//! corrected outputs `O z + G s`. Ancillas start with `p = 0` in the ideal
//! limit; their unbounded `x` quadratures must cancel from the outputs,
//! which fixes the feedforward gains `G = −O C_b (W C_b)⁻¹`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::program::{FeedforwardRule, MeasurementProgram, NodeRole};

/// Gains smaller than this are not emitted as feedforward rules.
const GAIN_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct LinearModel {
    nodes: usize,
    /// `L = O C + G W C`, outputs as a function of `ζ`.
    transfer: DMatrix<f64>,
    gains: DMatrix<f64>,
    input_cols: Vec<usize>,
    ancilla_p_cols: Vec<usize>,
    measured: Vec<usize>,
    outputs: Vec<usize>,
}

impl LinearModel {
    pub fn new(program: &MeasurementProgram) -> Result<Self> {
        let graph = &program.graph;
        let big_n = graph.nodes.len();
        let index: HashMap<usize, usize> = graph.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let idx =
            |id: usize| index.get(&id).copied().ok_or_else(|| Error::InvalidProgram(format!("unknown node {id}")));

        let mut c = DMatrix::<f64>::identity(2 * big_n, 2 * big_n);
        for &(a, b) in &graph.edges {
            let (a, b) = (idx(a)?, idx(b)?);
            let (xa, xb) = (c.row(a).into_owned(), c.row(b).into_owned());
            let mut pa = c.row_mut(big_n + a);
            pa += &xb;
            let mut pb = c.row_mut(big_n + b);
            pb += &xa;
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (input, partner) in graph.bell_pairs() {
            let (i, e) = (idx(input)?, idx(partner)?);
            let x0 = c.row(i).into_owned();
            let x1 = c.row(e).into_owned();
            let p0 = c.row(big_n + i).into_owned();
            let p1 = c.row(big_n + e).into_owned();
            c.set_row(i, &((&x0 - &p1) * h));
            c.set_row(e, &((&x1 - &p0) * h));
            c.set_row(big_n + i, &((&p0 + &x1) * h));
            c.set_row(big_n + e, &((&p1 + &x0) * h));
        }

        let m = program.schedule.len();
        let mut wc = DMatrix::zeros(m, 2 * big_n);
        let mut measured = Vec::with_capacity(m);
        for (row, entry) in program.schedule.iter().enumerate() {
            let k = idx(entry.node_id)?;
            let (s, co) = entry.angle.sin_cos();
            wc.set_row(row, &(c.row(k) * s + c.row(big_n + k) * co));
            measured.push(entry.node_id);
        }
        let outputs: Vec<usize> = graph.outputs().iter().map(|n| n.id).collect();
        let n = outputs.len();
        let mut oc = DMatrix::zeros(2 * n, 2 * big_n);
        for (w, &id) in outputs.iter().enumerate() {
            let k = idx(id)?;
            oc.set_row(w, &c.row(k));
            oc.set_row(n + w, &c.row(big_n + k));
        }

        let inputs: Vec<usize> = graph.inputs().iter().map(|n| idx(n.id)).collect::<Result<_>>()?;
        let ancillas: Vec<usize> =
            graph.nodes.iter().enumerate().filter(|(_, n)| n.role != NodeRole::InputPort).map(|(i, _)| i).collect();
        if ancillas.len() != m {
            return Err(Error::InvalidProgram(format!(
                "{m} measurements cannot remove {} ancilla positions",
                ancillas.len()
            )));
        }
        let a_b = wc.select_columns(&ancillas);
        let oc_b = oc.select_columns(&ancillas);
        // G A_b = −O C_b, solved as A_bᵀ Gᵀ = −(O C_b)ᵀ.
        let lu = a_b.transpose().lu();
        let gt = lu
            .solve(&(-oc_b.transpose()))
            .ok_or_else(|| Error::InvalidProgram("measurement pattern cannot cancel ancilla noise".into()))?;
        let gains = gt.transpose();
        let transfer = &oc + &gains * &wc;

        let input_cols = inputs.iter().copied().chain(inputs.iter().map(|i| big_n + i)).collect();
        let ancilla_p_cols = ancillas.iter().map(|i| big_n + i).collect();
        Ok(Self { nodes: big_n, transfer, gains, input_cols, ancilla_p_cols, measured, outputs })
    }

    /// `G`: rows `(x₀..xₙ₋₁, p₀..pₙ₋₁)` of the outputs, one column per
    /// scheduled measurement.
    pub fn gains(&self) -> &DMatrix<f64> {
        &self.gains
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// The map realized in the infinite-squeezing limit.
    pub fn ideal_map(&self) -> DMatrix<f64> {
        self.transfer.select_columns(&self.input_cols)
    }

    /// Largest coefficient of an ancilla `x` quadrature left in the outputs.
    pub fn residual_antisqueezed_coupling(&self) -> f64 {
        (0..self.nodes)
            .filter(|i| !self.input_cols.contains(i))
            .map(|i| self.transfer.column(i).amax())
            .fold(0.0, f64::max)
    }

    /// Unconditional output covariance over all outcomes with the gains
    /// installed: `L_in Σ_in L_inᵀ + (e^{−2r}/4) L_p L_pᵀ`.
    pub fn output_covariance(&self, input_cov: &DMatrix<f64>, r: f64) -> DMatrix<f64> {
        let l_in = self.transfer.select_columns(&self.input_cols);
        let l_p = self.transfer.select_columns(&self.ancilla_p_cols);
        &l_in * input_cov * l_in.transpose() + (&l_p * l_p.transpose()) * ((-2.0 * r).exp() / 4.0)
    }

    pub fn feedforward_rules(&self) -> Vec<FeedforwardRule> {
        let n = self.outputs.len();
        let mut rules = Vec::new();
        for (col, &source) in self.measured.iter().enumerate() {
            for (w, &target) in self.outputs.iter().enumerate() {
                let (gx, gp) = (self.gains[(w, col)], self.gains[(n + w, col)]);
                if gx.abs() > GAIN_CUTOFF || gp.abs() > GAIN_CUTOFF {
                    rules.push(FeedforwardRule {
                        source_node_id: source,
                        target_node_id: target,
                        gain_x: gx,
                        gain_p: gp,
                    });
                }
            }
        }
        rules
    }
}
