// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Double-double Gaussian workspace for conditioning at strong squeezing.
//!
//! Quadratures are interleaved per slot as `(x, p)`. Several mean columns
//! share one covariance so that linear probes run in a single pass.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct Workspace {
    nodes: Vec<usize>,
    cov: Vec<TwoFloat>,
    means: Vec<Vec<TwoFloat>>,
}

fn tf(v: f64) -> TwoFloat {
    TwoFloat::from(v)
}

// Newton-refined reciprocal and square root.
fn dd_recip(b: TwoFloat) -> TwoFloat {
    let one = tf(1.0);
    let mut q = tf(1.0 / b.hi());
    for _ in 0..2 {
        q += (one - q * b).hi() / b.hi();
    }
    q
}

fn dd_sqrt(a: TwoFloat) -> TwoFloat {
    let mut y = tf(a.hi().sqrt());
    for _ in 0..2 {
        y += (a - y * y).hi() / (2.0 * y.hi());
    }
    y
}

impl Workspace {
    pub fn new(columns: usize) -> Self {
        Self { nodes: Vec::new(), cov: Vec::new(), means: vec![Vec::new(); columns] }
    }

    fn dim(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn slot(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    fn slot_of(&self, node: usize) -> Result<usize> {
        self.slot(node).ok_or_else(|| Error::InvalidProgram(format!("node {node} is not active")))
    }

    /// Appends modes whose joint state is given in `(x.., p..)` ordering;
    /// `means` has one column per workspace column.
    pub fn push_block(&mut self, nodes: &[usize], cov: &DMatrix<f64>, means: &DMatrix<f64>) {
        let k = nodes.len();
        let old = self.dim();
        let dim = old + 2 * k;
        let mut grown = vec![tf(0.0); dim * dim];
        for r in 0..old {
            grown[r * dim..r * dim + old].copy_from_slice(&self.cov[r * old..(r + 1) * old]);
        }
        // Local (x.., p..) index → interleaved workspace index.
        let at = |i: usize| if i < k { old + 2 * i } else { old + 2 * (i - k) + 1 };
        for r in 0..2 * k {
            for c in 0..2 * k {
                grown[at(r) * dim + at(c)] = tf(cov[(r, c)]);
            }
        }
        self.cov = grown;
        for (col, mean) in self.means.iter_mut().enumerate() {
            mean.resize(dim, tf(0.0));
            for r in 0..2 * k {
                mean[at(r)] = tf(means[(r, col)]);
            }
        }
        self.nodes.extend_from_slice(nodes);
    }

    /// Applies `L` to the quadratures `idx` (interleaved indices obtained
    /// from the slot table).
    fn apply(&mut self, idx: &[usize], l: &[Vec<TwoFloat>]) {
        let dim = self.dim();
        let k = idx.len();
        // Rows.
        let old: Vec<Vec<TwoFloat>> = idx.iter().map(|&i| self.cov[i * dim..(i + 1) * dim].to_vec()).collect();
        for (a, &i) in idx.iter().enumerate() {
            for c in 0..dim {
                let mut acc = tf(0.0);
                for b in 0..k {
                    acc += l[a][b] * old[b][c];
                }
                self.cov[i * dim + c] = acc;
            }
        }
        // Columns.
        for row in 0..dim {
            let old: Vec<TwoFloat> = idx.iter().map(|&j| self.cov[row * dim + j]).collect();
            for (a, &j) in idx.iter().enumerate() {
                let mut acc = tf(0.0);
                for b in 0..k {
                    acc += l[a][b] * old[b];
                }
                self.cov[row * dim + j] = acc;
            }
        }
        for mean in &mut self.means {
            let old: Vec<TwoFloat> = idx.iter().map(|&i| mean[i]).collect();
            for (a, &i) in idx.iter().enumerate() {
                let mut acc = tf(0.0);
                for b in 0..k {
                    acc += l[a][b] * old[b];
                }
                mean[i] = acc;
            }
        }
    }

    /// `p_a += x_b`, `p_b += x_a`.
    pub fn qnd(&mut self, a: usize, b: usize) -> Result<()> {
        let (sa, sb) = (self.slot_of(a)?, self.slot_of(b)?);
        let idx = [2 * sa, 2 * sa + 1, 2 * sb, 2 * sb + 1];
        let (o, i) = (tf(0.0), tf(1.0));
        let l = vec![vec![i, o, o, o], vec![o, i, i, o], vec![o, o, i, o], vec![i, o, o, i]];
        self.apply(&idx, &l);
        Ok(())
    }

    /// Balanced Bell splitter: `x₀' = (x₀ − p₁)/√2`, `x₁' = (x₁ − p₀)/√2`,
    /// `p₀' = (p₀ + x₁)/√2`, `p₁' = (p₁ + x₀)/√2`.
    pub fn bell(&mut self, m0: usize, m1: usize) -> Result<()> {
        let (s0, s1) = (self.slot_of(m0)?, self.slot_of(m1)?);
        let idx = [2 * s0, 2 * s1, 2 * s0 + 1, 2 * s1 + 1];
        let h = dd_sqrt(tf(0.5));
        let o = tf(0.0);
        let l = vec![vec![h, o, o, -h], vec![o, h, -h, o], vec![o, h, h, o], vec![h, o, o, h]];
        self.apply(&idx, &l);
        Ok(())
    }

    /// Conditions on `x sin θ + p cos θ` of `node` and removes it. The
    /// outcome of each column is chosen by `outcome(column, predicted
    /// mean, variance)`.
    pub fn measure(
        &mut self,
        node: usize,
        theta: f64,
        mut outcome: impl FnMut(usize, f64, f64) -> f64,
    ) -> Result<Vec<f64>> {
        let slot = self.slot_of(node)?;
        let dim = self.dim();
        let (s, c) = theta.sin_cos();
        let (s, c) = (tf(s), tf(c));
        let (ix, ip) = (2 * slot, 2 * slot + 1);
        let cw: Vec<TwoFloat> = (0..dim).map(|i| s * self.cov[i * dim + ix] + c * self.cov[i * dim + ip]).collect();
        let variance = s * cw[ix] + c * cw[ip];
        if !(variance.hi() > 0.0) {
            return Err(Error::DegenerateConditioning(variance.hi()));
        }
        let inv = dd_recip(variance);
        let mut outcomes = Vec::with_capacity(self.means.len());
        for (col, mean) in self.means.iter_mut().enumerate() {
            let predicted = s * mean[ix] + c * mean[ip];
            let value = outcome(col, predicted.hi(), variance.hi());
            let shift = (tf(value) - predicted) * inv;
            for (m, w) in mean.iter_mut().zip(&cw) {
                *m += *w * shift;
            }
            outcomes.push(value);
        }
        let scaled: Vec<TwoFloat> = cw.iter().map(|w| *w * inv).collect();
        for r in 0..dim {
            for col in 0..dim {
                self.cov[r * dim + col] -= scaled[r] * cw[col];
            }
        }
        self.remove(slot);
        Ok(outcomes)
    }

    fn remove(&mut self, slot: usize) {
        let dim = self.dim();
        let keep: Vec<usize> = (0..dim).filter(|&i| i / 2 != slot).collect();
        let nd = keep.len();
        let mut cov = Vec::with_capacity(nd * nd);
        for &r in &keep {
            for &c in &keep {
                cov.push(self.cov[r * dim + c]);
            }
        }
        self.cov = cov;
        for mean in &mut self.means {
            *mean = keep.iter().map(|&i| mean[i]).collect();
        }
        self.nodes.remove(slot);
    }

    /// Demotes the listed nodes to an f64 state in `(x.., p..)` ordering:
    /// one mean column per workspace column, and the covariance.
    pub fn extract(&self, nodes: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let slots: Vec<usize> = nodes.iter().map(|&n| self.slot_of(n)).collect::<Result<_>>()?;
        let k = slots.len();
        let dim = self.dim();
        let at = |i: usize| if i < k { 2 * slots[i] } else { 2 * slots[i - k] + 1 };
        let cov = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
            self.cov[at(r) * dim + at(c)].hi() + self.cov[at(r) * dim + at(c)].lo()
        });
        let means = DMatrix::from_fn(2 * k, self.means.len(), |r, col| {
            let v = self.means[col][at(r)];
            v.hi() + v.lo()
        });
        Ok((means, cov))
    }

    pub fn active_nodes(&self) -> &[usize] {
        &self.nodes
    }
}

/// Symmetrizes a demoted covariance.
pub(crate) fn symmetrize(cov: &DMatrix<f64>) -> DMatrix<f64> {
    (cov + cov.transpose()) * 0.5
}
