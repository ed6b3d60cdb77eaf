// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Serialized measurement-program IR: cluster graph, homodyne schedule,
//! feedforward gains and the embedded compile target.
//!
//! Programs are JSON documents with a top-level `"version": 1`. Homodyne
//! angles are written with 17 significant digits so they round-trip
//! exactly.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::multimode::ConnectionGateParams;
use crate::single_mode::FourStepParams;
use crate::symplectic::SymplecticMap;
use crate::teleport::TelepPlusTwoParams;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    Ancilla,
    InputPort,
    OutputPort,
}

/// How an input port joins the cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum Coupling {
    /// The input mode is itself the first node of its chain.
    Qnd,
    /// Bell measurement of the input with `partnerNodeId`, the end node of
    /// a cluster chain.
    #[serde(rename_all = "camelCase")]
    Teleport { partner_node_id: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Node {
    pub id: usize,
    pub role: NodeRole,
    /// Logical mode the node carries; `None` for connection-gate controllers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wire: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClusterGraph {
    pub nodes: Vec<Node>,
    /// Unit-weight QND couplings.
    pub edges: Vec<(usize, usize)>,
}

impl ClusterGraph {
    pub fn add_node(&mut self, role: NodeRole, wire: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { id, role, wire, coupling: None });
        id
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.edges.push((a, b));
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id).filter(|n| n.id == id).or_else(|| self.nodes.iter().find(|n| n.id == id))
    }

    pub fn neighbours(&self) -> HashMap<usize, Vec<usize>> {
        let mut adj: HashMap<usize, Vec<usize>> = self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for &(a, b) in &self.edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        adj
    }

    /// Input ports ordered by wire.
    pub fn inputs(&self) -> Vec<&Node> {
        self.ports(NodeRole::InputPort)
    }

    /// Output ports ordered by wire.
    pub fn outputs(&self) -> Vec<&Node> {
        self.ports(NodeRole::OutputPort)
    }

    fn ports(&self, role: NodeRole) -> Vec<&Node> {
        let mut ports: Vec<&Node> = self.nodes.iter().filter(|n| n.role == role).collect();
        ports.sort_by_key(|n| n.wire);
        ports
    }

    /// `(input id, partner id)` for every teleport-coupled input.
    pub fn bell_pairs(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .filter_map(|n| match n.coupling {
                Some(Coupling::Teleport { partner_node_id }) => Some((n.id, partner_node_id)),
                _ => None,
            })
            .collect()
    }

    pub fn ancilla_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role != NodeRole::InputPort).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidProgram("graph has no nodes".into()));
        }
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(Error::InvalidProgram(format!("duplicate node id {}", n.id)));
            }
        }
        let mut seen = HashSet::new();
        for &(a, b) in &self.edges {
            if a == b {
                return Err(Error::InvalidProgram(format!("self-loop on node {a}")));
            }
            for id in [a, b] {
                if !ids.contains(&id) {
                    return Err(Error::InvalidProgram(format!("edge references unknown node {id}")));
                }
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidProgram(format!("duplicate edge ({a}, {b})")));
            }
        }
        let mut partners = HashSet::new();
        for n in &self.nodes {
            match (n.role, n.coupling) {
                (NodeRole::InputPort, None) => {
                    return Err(Error::InvalidProgram(format!("input port {} has no coupling", n.id)))
                }
                (NodeRole::InputPort, Some(Coupling::Teleport { partner_node_id })) => {
                    let partner = self.node(partner_node_id).ok_or_else(|| {
                        Error::InvalidProgram(format!("input {} teleports to unknown node {partner_node_id}", n.id))
                    })?;
                    if partner.role != NodeRole::Ancilla || !partners.insert(partner_node_id) {
                        return Err(Error::InvalidProgram(format!(
                            "teleport partner {partner_node_id} must be a distinct ancilla"
                        )));
                    }
                    if self.edges.iter().any(|&(a, b)| a == n.id || b == n.id) {
                        return Err(Error::InvalidProgram(format!(
                            "teleport-coupled input {} cannot carry QND edges",
                            n.id
                        )));
                    }
                }
                (NodeRole::InputPort, Some(Coupling::Qnd)) => {}
                (_, Some(_)) => {
                    return Err(Error::InvalidProgram(format!("only input ports carry a coupling (node {})", n.id)))
                }
                _ => {}
            }
        }
        let (inputs, outputs) = (self.inputs(), self.outputs());
        if inputs.len() != outputs.len() {
            return Err(Error::InvalidProgram(format!(
                "{} input ports but {} output ports",
                inputs.len(),
                outputs.len()
            )));
        }
        for ports in [&inputs, &outputs] {
            for (w, n) in ports.iter().enumerate() {
                if n.wire != Some(w) {
                    return Err(Error::InvalidProgram(format!("port {} should sit on wire {w}", n.id)));
                }
            }
        }
        Ok(())
    }
}

fn serialize_angle<S: Serializer>(angle: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::Error as _;
    let raw = RawValue::from_string(format!("{angle:.16e}")).map_err(S::Error::custom)?;
    raw.serialize(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScheduleEntry {
    pub node_id: usize,
    /// Measures `x sin θ + p cos θ`.
    #[serde(serialize_with = "serialize_angle")]
    pub angle: f64,
}

/// Adds `gainX·s` to `x` and `gainP·s` to `p` of the target, where `s` is
/// the source outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FeedforwardRule {
    pub source_node_id: usize,
    pub target_node_id: usize,
    pub gain_x: f64,
    pub gain_p: f64,
}

/// Row-major serialized form of a [`SymplecticMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetMap {
    pub n: usize,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub displacement: Vec<f64>,
}

impl From<&SymplecticMap> for TargetMap {
    fn from(map: &SymplecticMap) -> Self {
        let m = map.matrix();
        TargetMap {
            n: map.modes(),
            matrix: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            displacement: map.displacement().iter().copied().collect(),
        }
    }
}

impl TargetMap {
    /// Parses a target file; `displacement` may be omitted.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema { path: ".".into(), message: e.to_string() })?;
        from_value_with_path(value)
    }

    /// Validates shape and the symplectic condition at `1e-8`.
    pub fn to_map(&self) -> Result<SymplecticMap> {
        let dim = 2 * self.n;
        if self.n == 0 {
            return Err(Error::Domain("target must have at least one mode".into()));
        }
        if self.matrix.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.matrix.len() });
        }
        if let Some(row) = self.matrix.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
        }
        let matrix = DMatrix::from_fn(dim, dim, |r, c| self.matrix[r][c]);
        let displacement = if self.displacement.is_empty() {
            DVector::zeros(dim)
        } else {
            DVector::from_vec(self.displacement.clone())
        };
        SymplecticMap::new(matrix, displacement)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MeasurementProgram {
    pub version: u64,
    pub graph: ClusterGraph,
    pub schedule: Vec<ScheduleEntry>,
    pub feedforward: Vec<FeedforwardRule>,
    pub target_map: TargetMap,
}

impl MeasurementProgram {
    pub fn modes(&self) -> usize {
        self.target_map.n
    }

    pub fn target(&self) -> Result<SymplecticMap> {
        self.target_map.to_map()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Version { found: self.version, expected: FORMAT_VERSION });
        }
        self.graph.validate()?;
        let n = self.graph.inputs().len();
        if n != self.target_map.n {
            return Err(Error::InvalidProgram(format!(
                "graph has {n} ports but the target acts on {} modes",
                self.target_map.n
            )));
        }
        let mut scheduled = HashSet::new();
        for e in &self.schedule {
            let node = self
                .graph
                .node(e.node_id)
                .ok_or_else(|| Error::InvalidProgram(format!("schedule references unknown node {}", e.node_id)))?;
            if node.role == NodeRole::OutputPort {
                return Err(Error::InvalidProgram(format!("output port {} is scheduled", e.node_id)));
            }
            if !e.angle.is_finite() {
                return Err(Error::InvalidProgram(format!("node {} has a non-finite angle", e.node_id)));
            }
            if !scheduled.insert(e.node_id) {
                return Err(Error::InvalidProgram(format!("node {} is scheduled twice", e.node_id)));
            }
        }
        if let Some(n) = self.graph.nodes.iter().find(|n| n.role != NodeRole::OutputPort && !scheduled.contains(&n.id))
        {
            return Err(Error::InvalidProgram(format!("node {} is never measured", n.id)));
        }
        for f in &self.feedforward {
            if !scheduled.contains(&f.source_node_id) {
                return Err(Error::InvalidProgram(format!(
                    "feedforward source {} is not a measured node",
                    f.source_node_id
                )));
            }
            if self.graph.node(f.target_node_id).map(|n| n.role) != Some(NodeRole::OutputPort) {
                return Err(Error::InvalidProgram(format!(
                    "feedforward target {} is not a surviving node",
                    f.target_node_id
                )));
            }
            if !(f.gain_x.is_finite() && f.gain_p.is_finite()) {
                return Err(Error::InvalidProgram("non-finite feedforward gain".into()));
            }
        }
        self.target()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("serialization failed: {e}")))
    }

    /// Parses and validates a program, reporting schema violations by
    /// field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema { path: ".".into(), message: e.to_string() })?;
        check_version(&value)?;
        let program: MeasurementProgram = from_value_with_path(value)?;
        program.validate()?;
        Ok(program)
    }
}

fn check_version(value: &serde_json::Value) -> Result<()> {
    match value.get("version") {
        None => Err(Error::Schema { path: "version".into(), message: "missing field `version`".into() }),
        Some(v) => match v.as_u64() {
            Some(FORMAT_VERSION) => Ok(()),
            Some(found) => Err(Error::Version { found, expected: FORMAT_VERSION }),
            None => Err(Error::Schema {
                path: "version".into(),
                message: format!("expected an unsigned integer, found {v}"),
            }),
        },
    }
}

pub(crate) fn from_value_with_path<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| Error::Schema { path: e.path().to_string(), message: e.inner().to_string() })
}

/// One lowered gate, in application order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "gate")]
pub enum GateRecord {
    #[serde(rename_all = "camelCase")]
    FourStep { wire: usize, layer: usize, params: FourStepParams },
    #[serde(rename_all = "camelCase")]
    TelepPlusTwo { wire: usize, layer: usize, params: TelepPlusTwoParams },
    /// A beam splitter lowered to three connection gates.
    #[serde(rename_all = "camelCase")]
    BeamSplitter { layer: usize, reflectivity: f64, stages: [ConnectionGateParams; 3] },
    /// Three `κ = 1` steps, whose product is the identity.
    #[serde(rename_all = "camelCase")]
    Padding { wire: usize, layer: usize, kappas: [f64; 3] },
}

impl GateRecord {
    /// The gate's action on all `n` modes.
    pub fn step_map(&self, n: usize) -> Result<SymplecticMap> {
        use crate::multimode::connection_gate;
        use crate::single_mode::step_product;
        match self {
            GateRecord::FourStep { wire, params, .. } => params.reconstruct().embed(n, &[*wire]),
            GateRecord::TelepPlusTwo { wire, params, .. } => params.reconstruct()?.embed(n, &[*wire]),
            GateRecord::BeamSplitter { stages, .. } => {
                let (i, j) = stages[0].mode_pair;
                stages
                    .iter()
                    .try_fold(SymplecticMap::identity(2), |acc, g| connection_gate(g).compose(&acc))?
                    .embed(n, &[i, j])
            }
            GateRecord::Padding { wire, kappas, .. } => {
                SymplecticMap::from_2x2(step_product(kappas)).embed(n, &[*wire])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GateCensus {
    pub four_step: usize,
    pub identity_chains: usize,
    pub teleport: usize,
    pub beam_splitters: usize,
    pub padding: usize,
    pub phase_shifters: usize,
    pub squeezers: usize,
}

impl GateCensus {
    /// Ancillas implied by the lowering rules: 4 per one-mode gate, 9 per
    /// beam splitter, 3 per padding segment.
    pub fn implied_ancillas(&self) -> usize {
        4 * (self.four_step + self.identity_chains + self.teleport) + 9 * self.beam_splitters + 3 * self.padding
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SynthesisReport {
    pub modes: usize,
    pub ancilla_count: usize,
    pub census: GateCensus,
    pub step_params: Vec<GateRecord>,
    pub noise_proxy: f64,
    pub replay_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_map_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_trace: Option<f64>,
}

impl SynthesisReport {
    /// Product of every recorded gate in application order.
    pub fn replay(&self) -> Result<SymplecticMap> {
        self.step_params
            .iter()
            .try_fold(SymplecticMap::identity(self.modes), |acc, g| g.step_map(self.modes)?.compose(&acc))
    }
}
