// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Execution of measurement programs at finite squeezing.
//!
//! Ancillas enter the workspace lazily: right before a node is measured,
//! its missing neighbours are prepared as squeezed vacua and every QND
//! edge touching it is applied. Bell splitters wait until all edges of the
//! partner node are in place. Since the operations on disjoint modes
//! commute, the final state does not depend on the schedule order.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::LinearModel;
use crate::program::{FeedforwardRule, MeasurementProgram};
use crate::sim::hp::{symmetrize, Workspace};
use crate::sim::state::{GaussianState, MeasurementOutcomePolicy, OutcomeSource};
use crate::symplectic::{max_abs_diff, VACUUM_VARIANCE};

/// Default verification squeezing (≈ 130 dB).
pub const VERIFY_SQUEEZING: f64 = 15.0;

/// Converts a squeezing level in dB (variance ratio `e^{−2r}`) to `r`.
pub fn db_to_r(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Pending,
    Active,
    Measured,
}

struct Executor<'a> {
    program: &'a MeasurementProgram,
    ws: Workspace,
    status: HashMap<usize, Status>,
    incident: HashMap<usize, Vec<usize>>,
    edge_done: Vec<bool>,
    bell_of: HashMap<usize, (usize, usize)>,
    bell_done: HashMap<usize, bool>,
    columns: usize,
    r: f64,
}

impl<'a> Executor<'a> {
    /// Loads the input state (one mean column per entry of `means`).
    fn new(program: &'a MeasurementProgram, input_cov: &DMatrix<f64>, means: &DMatrix<f64>, r: f64) -> Result<Self> {
        program.validate()?;
        if !r.is_finite() {
            return Err(Error::Domain(format!("squeezing r = {r} is not finite")));
        }
        let graph = &program.graph;
        let inputs: Vec<usize> = graph.inputs().iter().map(|n| n.id).collect();
        if input_cov.nrows() != 2 * inputs.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), found: input_cov.nrows() / 2 });
        }
        let mut ws = Workspace::new(means.ncols());
        ws.push_block(&inputs, input_cov, means);
        let mut status: HashMap<usize, Status> = graph.nodes.iter().map(|n| (n.id, Status::Pending)).collect();
        for id in &inputs {
            status.insert(*id, Status::Active);
        }
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for (e, &(a, b)) in graph.edges.iter().enumerate() {
            incident.entry(a).or_default().push(e);
            incident.entry(b).or_default().push(e);
        }
        let mut bell_of = HashMap::new();
        let mut bell_done = HashMap::new();
        for (input, partner) in graph.bell_pairs() {
            bell_of.insert(input, (input, partner));
            bell_of.insert(partner, (input, partner));
            bell_done.insert(input, false);
        }
        Ok(Self {
            program,
            ws,
            status,
            incident,
            edge_done: vec![false; graph.edges.len()],
            bell_of,
            bell_done,
            columns: means.ncols(),
            r,
        })
    }

    fn activate(&mut self, node: usize) -> Result<()> {
        match self.status.get(&node) {
            Some(Status::Active) => Ok(()),
            Some(Status::Pending) => {
                let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
                    (2.0 * self.r).exp() * VACUUM_VARIANCE,
                    (-2.0 * self.r).exp() * VACUUM_VARIANCE,
                ]));
                self.ws.push_block(&[node], &cov, &DMatrix::zeros(2, self.columns));
                self.status.insert(node, Status::Active);
                Ok(())
            }
            Some(Status::Measured) => Err(Error::InvalidProgram(format!("node {node} was already measured"))),
            None => Err(Error::InvalidProgram(format!("unknown node {node}"))),
        }
    }

    fn apply_edges(&mut self, node: usize) -> Result<()> {
        self.activate(node)?;
        let edges = self.incident.get(&node).cloned().unwrap_or_default();
        for e in edges {
            if self.edge_done[e] {
                continue;
            }
            let (a, b) = self.program.graph.edges[e];
            self.activate(a)?;
            self.activate(b)?;
            self.ws.qnd(a, b)?;
            self.edge_done[e] = true;
        }
        Ok(())
    }

    fn prepare(&mut self, node: usize) -> Result<()> {
        self.apply_edges(node)?;
        if let Some(&(input, partner)) = self.bell_of.get(&node) {
            if !self.bell_done[&input] {
                self.apply_edges(partner)?;
                self.activate(input)?;
                self.ws.bell(input, partner)?;
                self.bell_done.insert(input, true);
            }
        }
        Ok(())
    }

    fn measure(&mut self, node: usize, theta: f64, outcome: impl FnMut(usize, f64, f64) -> f64) -> Result<Vec<f64>> {
        if self.status.get(&node) == Some(&Status::Measured) {
            return Err(Error::InvalidProgram(format!("node {node} is measured twice")));
        }
        self.prepare(node)?;
        let values = self.ws.measure(node, theta, outcome)?;
        self.status.insert(node, Status::Measured);
        Ok(values)
    }

    /// Applies what is left and returns the output ports' means and
    /// covariance.
    fn finish(mut self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let pending: Vec<usize> =
            self.program.graph.nodes.iter().filter(|n| self.status[&n.id] != Status::Measured).map(|n| n.id).collect();
        for id in pending {
            self.prepare(id)?;
        }
        let outputs: Vec<usize> = self.program.graph.outputs().iter().map(|n| n.id).collect();
        if self.ws.active_nodes().len() != outputs.len() {
            return Err(Error::InvalidProgram("unmeasured nodes remain besides the output ports".into()));
        }
        let (means, cov) = self.ws.extract(&outputs)?;
        Ok((means, symmetrize(&cov)))
    }
}

/// Measured outcome of one scheduled node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutcomeRecord {
    pub node_id: usize,
    pub outcome: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub state: GaussianState,
    pub outcomes: Vec<OutcomeRecord>,
}

/// Runs the schedule on `input` with every ancilla squeezed by `r`, then
/// applies the feedforward rules and the target displacement.
pub fn run_program(
    program: &MeasurementProgram,
    input: &GaussianState,
    r: f64,
    policy: MeasurementOutcomePolicy,
) -> Result<RunOutput> {
    if input.modes() != program.modes() {
        return Err(Error::DimensionMismatch { expected: program.modes(), found: input.modes() });
    }
    let means = DMatrix::from_column_slice(input.mean().len(), 1, input.mean().as_slice());
    let mut exec = Executor::new(program, input.cov(), &means, r)?;
    let mut source = OutcomeSource::new(policy);
    let mut outcomes = Vec::with_capacity(program.schedule.len());
    for entry in &program.schedule {
        let values = exec.measure(entry.node_id, entry.angle, |_, mean, var| source.draw(mean, var))?;
        outcomes.push(OutcomeRecord { node_id: entry.node_id, outcome: values[0] });
    }
    let (means, cov) = exec.finish()?;
    let mut mean = means.column(0).into_owned();
    apply_feedforward(program, &outcomes, &mut mean);
    mean += program.target()?.displacement();
    Ok(RunOutput { state: GaussianState::from_parts(mean, cov), outcomes })
}

fn output_index(program: &MeasurementProgram) -> HashMap<usize, usize> {
    program.graph.outputs().iter().enumerate().map(|(w, n)| (n.id, w)).collect()
}

fn apply_feedforward(program: &MeasurementProgram, outcomes: &[OutcomeRecord], mean: &mut DVector<f64>) {
    let n = program.modes();
    let slot = output_index(program);
    let by_node: HashMap<usize, f64> = outcomes.iter().map(|o| (o.node_id, o.outcome)).collect();
    for rule in &program.feedforward {
        let (Some(&w), Some(&s)) = (slot.get(&rule.target_node_id), by_node.get(&rule.source_node_id)) else {
            continue;
        };
        mean[w] += rule.gain_x * s;
        mean[n + w] += rule.gain_p * s;
    }
}

/// Linear part of the finite-squeezing channel realized under pinned-zero
/// outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveMap {
    /// Column `k` is the output mean for the unit-displaced vacuum `e_k`.
    pub m_hat: DMatrix<f64>,
    /// Output covariance for a vacuum input.
    pub output_cov: DMatrix<f64>,
    /// `output_cov − M̂ (I/4) M̂ᵀ`.
    pub excess_cov: DMatrix<f64>,
}

impl EffectiveMap {
    pub fn excess_trace(&self) -> f64 {
        self.excess_cov.trace()
    }

    /// `max |M̂ − target|` and the entry where it occurs.
    pub fn worst_entry(&self, target: &DMatrix<f64>) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for r in 0..target.nrows() {
            for c in 0..target.ncols() {
                let d = (self.m_hat[(r, c)] - target[(r, c)]).abs();
                if !(d <= worst.0) {
                    worst = (d, r, c);
                }
            }
        }
        worst
    }

    pub fn error(&self, target: &DMatrix<f64>) -> f64 {
        max_abs_diff(&self.m_hat, target)
    }
}

/// Probes the program with the `2n` unit displacements of a coherent input
/// in one pass.
pub fn extract_effective_map(program: &MeasurementProgram, r: f64) -> Result<EffectiveMap> {
    let dim = 2 * program.modes();
    let vacuum = DMatrix::identity(dim, dim) * VACUUM_VARIANCE;
    let mut exec = Executor::new(program, &vacuum, &DMatrix::identity(dim, dim), r)?;
    for entry in &program.schedule {
        exec.measure(entry.node_id, entry.angle, |_, _, _| 0.0)?;
    }
    let (m_hat, output_cov) = exec.finish()?;
    let excess_cov = symmetrize(&(&output_cov - &m_hat * m_hat.transpose() * VACUUM_VARIANCE));
    Ok(EffectiveMap { m_hat, output_cov, excess_cov })
}

/// Feedforward gains `G` (outputs `(x.., p..)` by scheduled node), in the
/// infinite-squeezing limit where they cancel the anti-squeezed ancilla
/// quadratures exactly. They do not depend on the squeezing level.
pub fn derive_feedforward_gains(program: &MeasurementProgram) -> Result<DMatrix<f64>> {
    program.validate()?;
    Ok(LinearModel::new(program)?.gains().clone())
}

/// Gains obtained by running the program at squeezing `r` with a single
/// outcome set to 1 and negating the output-mean shift. They converge to
/// [`derive_feedforward_gains`] as `r` grows.
pub fn probe_feedforward_gains(program: &MeasurementProgram, r: f64) -> Result<DMatrix<f64>> {
    let dim = 2 * program.modes();
    let m = program.schedule.len();
    let vacuum = DMatrix::identity(dim, dim) * VACUUM_VARIANCE;
    let mut exec = Executor::new(program, &vacuum, &DMatrix::zeros(dim, m), r)?;
    for (step, entry) in program.schedule.iter().enumerate() {
        exec.measure(entry.node_id, entry.angle, |col, _, _| if col == step { 1.0 } else { 0.0 })?;
    }
    let (shift, _) = exec.finish()?;
    Ok(-shift)
}

/// Feedforward rules for a gain table laid out as in
/// [`derive_feedforward_gains`]. Exact zeros are dropped.
pub fn gains_to_rules(program: &MeasurementProgram, gains: &DMatrix<f64>) -> Result<Vec<FeedforwardRule>> {
    let outputs = program.graph.outputs();
    let n = outputs.len();
    if gains.nrows() != 2 * n || gains.ncols() != program.schedule.len() {
        return Err(Error::DimensionMismatch { expected: program.schedule.len(), found: gains.ncols() });
    }
    let mut rules = Vec::new();
    for (col, entry) in program.schedule.iter().enumerate() {
        for (w, target) in outputs.iter().enumerate() {
            let (gain_x, gain_p) = (gains[(w, col)], gains[(n + w, col)]);
            if gain_x != 0.0 || gain_p != 0.0 {
                rules.push(FeedforwardRule {
                    source_node_id: entry.node_id,
                    target_node_id: target.id,
                    gain_x,
                    gain_p,
                });
            }
        }
    }
    Ok(rules)
}

/// Covariance across shots of the feedforward-corrected conditional mean,
/// for the given input covariance: the unconditional output covariance
/// minus the conditional one.
pub fn mean_scatter_covariance(program: &MeasurementProgram, input_cov: &DMatrix<f64>, r: f64) -> Result<DMatrix<f64>> {
    let model = LinearModel::new(program)?;
    let dim = 2 * program.modes();
    let mut exec = Executor::new(program, input_cov, &DMatrix::zeros(dim, 1), r)?;
    for entry in &program.schedule {
        exec.measure(entry.node_id, entry.angle, |_, _, _| 0.0)?;
    }
    let (_, conditional) = exec.finish()?;
    Ok(symmetrize(&(model.output_covariance(input_cov, r) - conditional)))
}
