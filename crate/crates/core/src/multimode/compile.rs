// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Lowering of a symplectic target onto a step-aligned cluster.
//!
//! The target is factored as `U·S·V`; both passive factors become Reck
//! networks. One-mode elements are merged per wire into local layers
//! (one four-step gate per wire) and beam splitters into mixing layers
//! (three connection gates per pair, idle wires padded with three `κ = 1`
//! steps).

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::LinearModel;
use crate::multimode::{beam_splitter_program, bloch_messiah, reck_decompose, ConnectionGateParams, ReckElement};
use crate::program::{
    ClusterGraph, Coupling, GateCensus, GateRecord, MeasurementProgram, NodeRole, ScheduleEntry, SynthesisReport,
    TargetMap, FORMAT_VERSION,
};
use crate::single_mode::{decompose_four_step, normalize_half_angle, FourStepParams};
use crate::symplectic::{max_abs_diff, rotation, squeeze, SymplecticMap};
use crate::teleport::decompose_telep_plus_two;

const IDENTITY_TOL: f64 = 1e-14;
/// Replay budget relative to `max(1, ‖target‖_max)`.
const REPLAY_TOL: f64 = 1e-9;
const PADDING_KAPPAS: [f64; 3] = [1.0; 3];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    #[default]
    Qnd,
    Teleport,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompileOptions {
    /// κ₁ (or θ₀ with teleport coupling) for every non-identity one-mode
    /// gate; chosen by noise-proxy search when absent.
    pub free_param: Option<f64>,
    pub coupling: CouplingKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledProgram {
    pub program: MeasurementProgram,
    pub report: SynthesisReport,
}

enum Op {
    Local { wire: usize, gate: Matrix2<f64> },
    Mix { reflectivity: f64, modes: (usize, usize) },
}

#[derive(Default)]
struct Stage {
    local: Vec<Option<Matrix2<f64>>>,
    mixing: Vec<(f64, (usize, usize))>,
}

struct Builder {
    graph: ClusterGraph,
    schedule: Vec<ScheduleEntry>,
    current: Vec<usize>,
    records: Vec<GateRecord>,
    census: GateCensus,
    noise_proxy: f64,
    options: CompileOptions,
}

impl Builder {
    fn new(n: usize, options: CompileOptions) -> Self {
        let mut graph = ClusterGraph::default();
        let current = (0..n)
            .map(|w| {
                let id = graph.add_node(NodeRole::InputPort, Some(w));
                graph.nodes[id].coupling = Some(Coupling::Qnd);
                id
            })
            .collect();
        Self {
            graph,
            schedule: Vec::new(),
            current,
            records: Vec::new(),
            census: GateCensus::default(),
            noise_proxy: 0.0,
            options,
        }
    }

    fn measure(&mut self, node_id: usize, angle: f64) {
        self.schedule.push(ScheduleEntry { node_id, angle: normalize_half_angle(angle) });
    }

    /// Teleports the wire one node along a fresh chain link.
    fn step(&mut self, wire: usize, angle: f64) {
        let cur = self.current[wire];
        let next = self.graph.add_node(NodeRole::Ancilla, Some(wire));
        self.graph.add_edge(cur, next);
        self.measure(cur, angle);
        self.current[wire] = next;
    }

    fn one_mode_gate(&mut self, wire: usize, layer: usize, gate: Matrix2<f64>, identity: bool) -> Result<()> {
        let target = SymplecticMap::from_2x2(gate);
        let free = if identity { None } else { self.options.free_param };
        if layer == 0 && self.options.coupling == CouplingKind::Teleport {
            let params = decompose_telep_plus_two(&target, free)?;
            let input = self.current[wire];
            let partner = self.graph.add_node(NodeRole::Ancilla, Some(wire));
            self.graph.nodes[input].coupling = Some(Coupling::Teleport { partner_node_id: partner });
            // Homodyne x cos θ + p sin θ of the Bell detectors.
            use std::f64::consts::FRAC_PI_2;
            self.measure(input, FRAC_PI_2 - params.angles.theta0);
            self.current[wire] = partner;
            self.step(wire, FRAC_PI_2 - params.angles.theta1);
            self.step(wire, params.kappa3.atan());
            self.step(wire, params.kappa4.atan());
            self.noise_proxy += params.noise_proxy;
            self.census.teleport += 1;
            self.records.push(GateRecord::TelepPlusTwo { wire, layer, params });
            return Ok(());
        }
        let params: FourStepParams = decompose_four_step(&target, free)?;
        for k in params.kappas {
            self.step(wire, k.atan());
        }
        self.noise_proxy += params.noise_proxy;
        if identity {
            self.census.identity_chains += 1;
        } else {
            self.census.four_step += 1;
        }
        self.records.push(GateRecord::FourStep { wire, layer, params });
        Ok(())
    }

    fn connection_step(&mut self, g: &ConnectionGateParams) {
        let (i, j) = g.mode_pair;
        let (ci, cj) = (self.current[i], self.current[j]);
        let a = self.graph.add_node(NodeRole::Ancilla, Some(i));
        let b = self.graph.add_node(NodeRole::Ancilla, Some(j));
        let c = self.graph.add_node(NodeRole::Ancilla, None);
        for (u, v) in [(ci, a), (cj, b), (ci, c), (cj, c)] {
            self.graph.add_edge(u, v);
        }
        let (ti, tj, tc) = g.homodyne_angles();
        self.measure(ci, ti);
        self.measure(cj, tj);
        self.measure(c, tc);
        self.current[i] = a;
        self.current[j] = b;
        self.noise_proxy += 3.0 + g.kappa1 * g.kappa1 + g.kappa2 * g.kappa2 + g.eta3 * g.eta3;
    }

    fn mixing_layer(&mut self, layer: usize, splitters: &[(f64, (usize, usize))]) -> Result<()> {
        let n = self.current.len();
        let mut busy = vec![false; n];
        let mut stages = Vec::new();
        for &(reflectivity, modes) in splitters {
            busy[modes.0] = true;
            busy[modes.1] = true;
            stages.push((reflectivity, beam_splitter_program(reflectivity, modes)?));
        }
        for k in 0..3 {
            for (_, program) in &stages {
                self.connection_step(&program[k]);
            }
            for wire in (0..n).filter(|&w| !busy[w]) {
                self.step(wire, PADDING_KAPPAS[k].atan());
            }
        }
        for (reflectivity, program) in stages {
            self.census.beam_splitters += 1;
            self.records.push(GateRecord::BeamSplitter { layer, reflectivity, stages: program });
        }
        for wire in (0..n).filter(|&w| !busy[w]) {
            self.noise_proxy += PADDING_KAPPAS.iter().map(|k| 1.0 + k * k).sum::<f64>();
            self.census.padding += 1;
            self.records.push(GateRecord::Padding { wire, layer, kappas: PADDING_KAPPAS });
        }
        Ok(())
    }

    fn finish(mut self, target: &SymplecticMap) -> Result<CompiledProgram> {
        for &id in &self.current {
            self.graph.nodes[id].role = NodeRole::OutputPort;
        }
        let mut program = MeasurementProgram {
            version: FORMAT_VERSION,
            graph: self.graph,
            schedule: self.schedule,
            feedforward: Vec::new(),
            target_map: TargetMap::from(target),
        };
        let model = LinearModel::new(&program)?;
        program.feedforward = model.feedforward_rules();
        program.validate()?;

        let n = target.modes();
        let mut report = SynthesisReport {
            modes: n,
            ancilla_count: program.graph.ancilla_count(),
            census: self.census,
            step_params: self.records,
            noise_proxy: self.noise_proxy,
            replay_residual: 0.0,
            effective_map_error: None,
            excess_trace: None,
        };
        let scale = target.matrix().amax().max(1.0);
        let replay = report.replay()?.max_abs_diff(target);
        let graph_replay = max_abs_diff(&model.ideal_map(), target.matrix());
        report.replay_residual = replay.max(graph_replay);
        if !(report.replay_residual <= REPLAY_TOL * scale) {
            return Err(Error::Numerical(format!(
                "compiled program misses the target: step replay {replay:.3e}, graph replay {graph_replay:.3e}"
            )));
        }
        Ok(CompiledProgram { program, report })
    }
}

fn is_identity(m: &Matrix2<f64>) -> bool {
    (m - Matrix2::identity()).amax() <= IDENTITY_TOL
}

/// Groups the element sequence into stages as early as each wire allows.
fn layer_ops(n: usize, ops: &[Op]) -> Vec<Stage> {
    #[derive(Clone, Copy)]
    enum Last {
        None,
        Local(usize),
        Mix(usize),
    }
    let earliest = |l: Last| match l {
        Last::None => 0,
        Last::Local(s) => s,
        Last::Mix(s) => s + 1,
    };
    let mut last = vec![Last::None; n];
    let mut stages: Vec<Stage> = Vec::new();
    let stage_at = |stages: &mut Vec<Stage>, s: usize| {
        while stages.len() <= s {
            stages.push(Stage { local: vec![None; n], mixing: Vec::new() });
        }
    };
    for op in ops {
        match *op {
            Op::Local { wire, gate } => {
                let s = earliest(last[wire]);
                stage_at(&mut stages, s);
                let slot = &mut stages[s].local[wire];
                *slot = Some(gate * slot.unwrap_or_else(Matrix2::identity));
                last[wire] = Last::Local(s);
            }
            Op::Mix { reflectivity, modes } => {
                let s = earliest(last[modes.0]).max(earliest(last[modes.1]));
                stage_at(&mut stages, s);
                stages[s].mixing.push((reflectivity, modes));
                last[modes.0] = Last::Mix(s);
                last[modes.1] = Last::Mix(s);
            }
        }
    }
    stages
}

/// Compiles a symplectic target into a measurement program and report.
pub fn compile(target: &SymplecticMap, options: &CompileOptions) -> Result<CompiledProgram> {
    let n = target.modes();
    let mut builder = Builder::new(n, *options);
    if n == 1 {
        builder.one_mode_gate(0, 0, target.as_2x2()?, false)?;
        return builder.finish(target);
    }

    let linear = SymplecticMap::from_matrix(target.matrix().clone())?;
    let factors = bloch_messiah(&linear)?;
    let (reck_v, reck_u) = (reck_decompose(&factors.v)?, reck_decompose(&factors.u)?);
    let mut ops = Vec::new();
    let push_network = |ops: &mut Vec<Op>, census: &mut GateCensus, elements: &[ReckElement]| {
        for e in elements {
            ops.push(match *e {
                ReckElement::PhaseShifter { theta, mode } => {
                    census.phase_shifters += 1;
                    Op::Local { wire: mode, gate: rotation(theta).as_2x2().expect("one-mode") }
                }
                ReckElement::BeamSplitter { reflectivity, modes } => Op::Mix { reflectivity, modes },
            });
        }
    };
    push_network(&mut ops, &mut builder.census, &reck_v.elements);
    for (wire, &r) in factors.squeezing.iter().enumerate() {
        if r != 0.0 {
            builder.census.squeezers += 1;
            ops.push(Op::Local { wire, gate: squeeze(r).as_2x2()? });
        }
    }
    push_network(&mut ops, &mut builder.census, &reck_u.elements);

    let mut stages = layer_ops(n, &ops);
    if stages.is_empty() {
        stages.push(Stage { local: vec![None; n], mixing: Vec::new() });
    }
    for (layer, stage) in stages.iter().enumerate() {
        let gates: Vec<Matrix2<f64>> = stage.local.iter().map(|g| g.unwrap_or_else(Matrix2::identity)).collect();
        let trivial = gates.iter().all(is_identity);
        let forced = layer == 0 && (options.coupling == CouplingKind::Teleport || stage.mixing.is_empty());
        if !trivial || forced {
            for (wire, gate) in gates.iter().enumerate() {
                builder.one_mode_gate(wire, layer, *gate, is_identity(gate))?;
            }
        }
        if !stage.mixing.is_empty() {
            builder.mixing_layer(layer, &stage.mixing)?;
        }
    }
    builder.finish(target)
}
