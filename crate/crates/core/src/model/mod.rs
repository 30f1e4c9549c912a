// SPDX-License-Identifier: Apache-2.0

//! Problem specification: application graph, architecture graph and the
//! mapping edges connecting them.
//!
//! The document types in this module are what gets parsed from and written
//! to JSON. [`ProblemSpec`] wraps a validated document together with a
//! resolved, index-based view ([`Platform`], [`AppIndex`]) used by the
//! analysis.

mod io;
mod paths;
mod platform;
mod units;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitration::ArbitrationPolicy;
use crate::time::Nanos;

pub use io::{emit_spec, parse_spec};
pub use paths::{end_to_end_paths, PathError, PathNode};
pub use platform::{Bus, Core, CoreIdx, Platform, Tile, TileIdx};

/// Periodic task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    /// Activation period; also the implicit deadline.
    #[serde(rename = "period_us", with = "units::micros")]
    pub period: Nanos,
    /// WCET keyed by core type, or by core id for a per-core override.
    #[serde(rename = "wcet_us", with = "units::micros_map")]
    pub wcet: BTreeMap<String, Nanos>,
    /// Single-word memory accesses per activation.
    pub mem_demand: u64,
}

/// Message produced by one task and consumed by one or more tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub src: String,
    #[serde(with = "units::one_or_many")]
    pub dst: Vec<String>,
    #[serde(rename = "period_us", with = "units::micros")]
    pub period: Nanos,
    pub payload_bytes: u64,
    /// Single-word accesses needed to read or write the message buffer.
    pub mem_demand: u64,
}

/// Dependency edge between a task and a message (either direction).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplicationGraph {
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub messages: Vec<Message>,
    /// Redundant with `src`/`dst`; checked for consistency on parse.
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl ApplicationGraph {
    /// Edges implied by the messages' producer and consumer fields.
    pub fn derived_edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for m in &self.messages {
            edges.push(Edge { from: m.src.clone(), to: m.id.clone() });
            for d in &m.dst {
                edges.push(Edge { from: m.id.clone(), to: d.clone() });
            }
        }
        edges
    }
}

/// Arbitration parameters of a network-adapter unit. The slot length is not
/// configured: it equals the period of the unit on the memory bus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaPolicy {
    pub arb_delay: Nanos,
    pub capacity: u32,
    pub work_conserving: bool,
}

impl NaPolicy {
    /// Full policy once the slot length is known.
    pub fn with_slot(&self, slot_len: Nanos) -> ArbitrationPolicy {
        ArbitrationPolicy {
            slot_len,
            arb_delay: self.arb_delay,
            capacity: self.capacity,
            work_conserving: self.work_conserving,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaPolicies {
    pub tx: NaPolicy,
    pub rx: NaPolicy,
}

/// Bus weights of the masters on every memory bus of a tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusWeights {
    pub core: u32,
    pub tx: u32,
    pub rx: u32,
}

impl Default for BusWeights {
    fn default() -> Self {
        Self { core: 1, tx: 1, rx: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryDecl {
    #[serde(rename = "service_time_ns")]
    pub service_time: Nanos,
    /// Overrides the tile type's bus policy for this memory's bus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bus_policy: Option<ArbitrationPolicy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileType {
    pub id: String,
    pub core_type: String,
    pub cores: u32,
    pub core_policy: ArbitrationPolicy,
    pub memories: Vec<MemoryDecl>,
    pub bus_policy: ArbitrationPolicy,
    #[serde(default)]
    pub bus_weights: BusWeights,
    pub na: NaPolicies,
    /// Energy per microsecond of execution on one of this type's cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_power: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileDecl {
    pub id: String,
    #[serde(rename = "type")]
    pub tile_type: String,
    pub pos: [u32; 2],
}

/// How the route length `|rho|` is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopConvention {
    /// Routers traversed from source to destination NA: `|dx| + |dy| + 1`.
    #[default]
    Routers,
    /// Router-to-router links only: `|dx| + |dy|`.
    Links,
}

fn default_flit_payload() -> u32 {
    16
}

fn default_header_flits() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NocConfig {
    /// NoC clock cycle; also the link slot length.
    pub tau_ns: Nanos,
    pub router_delay_cycles: u32,
    pub link_policy: ArbitrationPolicy,
    #[serde(default = "default_flit_payload")]
    pub flit_payload_bytes: u32,
    #[serde(default = "default_header_flits")]
    pub header_flits: u32,
    #[serde(default)]
    pub hop_count: HopConvention,
}

impl NocConfig {
    /// `ceil(payload / flit_payload) + header_flits`.
    pub fn flits(&self, payload_bytes: u64) -> u64 {
        payload_bytes.div_ceil(u64::from(self.flit_payload_bytes)) + u64::from(self.header_flits)
    }
}

/// Coefficients of the affine energy model. All are required to evaluate
/// energy; they are optional in the document so that pure timing studies
/// can omit them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyCoefficients {
    /// Per flit and hop on a link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_link: Option<f64>,
    /// Per flit and hop in a router.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_router: Option<f64>,
    /// Per word accessed on the producer's bus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_bus_src: Option<f64>,
    /// Per word accessed on the consumer's bus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_bus_dst: Option<f64>,
    /// Static power per microsecond a task occupies its core (WCRT).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_per_core: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureGraph {
    /// `[width, height]` of the tile mesh.
    pub mesh: [u32; 2],
    pub tile_types: Vec<TileType>,
    pub tiles: Vec<TileDecl>,
    pub noc: NocConfig,
    #[serde(default)]
    pub energy: EnergyCoefficients,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MappingEdge {
    pub task: String,
    pub core: String,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("validation error: {0}")]
    Validation(String),
}

impl SpecError {
    fn invalid(msg: impl Into<String>) -> Self {
        SpecError::Validation(msg.into())
    }
}

/// One mapping option of a task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub core: CoreIdx,
    pub wcet: Nanos,
}

/// Index-resolved view of the application.
#[derive(Clone, Debug)]
pub struct AppIndex {
    /// Producer task of each message.
    pub producer: Vec<usize>,
    /// Consumer tasks of each message.
    pub consumers: Vec<Vec<usize>>,
    /// Mapping options per task, in document order.
    pub candidates: Vec<Vec<Candidate>>,
    /// Tasks in topological order.
    pub topo_order: Vec<usize>,
    /// `(message, consumer)` pairs leaving each task.
    pub successors: Vec<Vec<(usize, usize)>>,
}

/// A validated problem specification.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub app: ApplicationGraph,
    pub arch: ArchitectureGraph,
    pub mapping_edges: Vec<MappingEdge>,
    platform: Platform,
    index: AppIndex,
}

impl PartialEq for ProblemSpec {
    fn eq(&self, other: &Self) -> bool {
        self.app == other.app && self.arch == other.arch && self.mapping_edges == other.mapping_edges
    }
}

impl ProblemSpec {
    /// Validates the three parts and builds the resolved view. Edges of the
    /// application graph are replaced by the canonical derived list.
    pub fn new(
        mut app: ApplicationGraph,
        arch: ArchitectureGraph,
        mapping_edges: Vec<MappingEdge>,
    ) -> Result<Self, SpecError> {
        validate_app(&mut app)?;
        let platform = Platform::build(&arch)?;
        let (producer, consumers) = resolve_messages(&app);
        let topo_order =
            paths::topological_tasks(&app).map_err(|e| SpecError::invalid(e.to_string()))?;
        let successors = paths::successors(&app).map_err(|e| SpecError::invalid(e.to_string()))?;
        let candidates = resolve_candidates(&app, &platform, &mapping_edges)?;
        Ok(Self {
            index: AppIndex { producer, consumers, candidates, topo_order, successors },
            app,
            arch,
            mapping_edges,
            platform,
        })
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn index(&self) -> &AppIndex {
        &self.index
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.app.tasks.iter().position(|t| t.id == id)
    }

    pub fn message_index(&self, id: &str) -> Option<usize> {
        self.app.messages.iter().position(|m| m.id == id)
    }
}

fn validate_app(app: &mut ApplicationGraph) -> Result<(), SpecError> {
    let mut seen = std::collections::HashSet::new();
    for t in &app.tasks {
        if !seen.insert(t.id.as_str()) {
            return Err(SpecError::invalid(format!("duplicate id {}", t.id)));
        }
        if t.period.is_zero() {
            return Err(SpecError::invalid(format!("task {} has zero period", t.id)));
        }
    }
    for m in &app.messages {
        if !seen.insert(m.id.as_str()) {
            return Err(SpecError::invalid(format!("duplicate id {}", m.id)));
        }
    }
    let is_task = |id: &str| app.tasks.iter().any(|t| t.id == id);
    for m in &app.messages {
        if m.period.is_zero() {
            return Err(SpecError::invalid(format!("message {} has zero period", m.id)));
        }
        if m.payload_bytes == 0 {
            return Err(SpecError::invalid(format!("message {} has empty payload", m.id)));
        }
        if !is_task(&m.src) {
            return Err(SpecError::invalid(format!("task {} not found (source of {})", m.src, m.id)));
        }
        if m.dst.is_empty() {
            return Err(SpecError::invalid(format!("message {} has no consumer", m.id)));
        }
        for (i, d) in m.dst.iter().enumerate() {
            if !is_task(d) {
                return Err(SpecError::invalid(format!("task {d} not found (consumer of {})", m.id)));
            }
            if *d == m.src {
                return Err(SpecError::invalid(format!("message {} is consumed by its producer", m.id)));
            }
            if m.dst[..i].contains(d) {
                return Err(SpecError::invalid(format!("message {} lists consumer {d} twice", m.id)));
            }
        }
    }
    let derived = app.derived_edges();
    if !app.edges.is_empty() {
        let mut given = app.edges.clone();
        let mut expected = derived.clone();
        given.sort();
        expected.sort();
        if given != expected {
            let stray = given
                .iter()
                .find(|e| !expected.contains(e))
                .or_else(|| expected.iter().find(|e| !given.contains(e)));
            let what = stray
                .map(|e| format!("{} -> {}", e.from, e.to))
                .unwrap_or_else(|| "duplicate edge".to_string());
            return Err(SpecError::invalid(format!(
                "edge list disagrees with message endpoints at {what}"
            )));
        }
    }
    app.edges = derived;
    Ok(())
}

fn resolve_messages(app: &ApplicationGraph) -> (Vec<usize>, Vec<Vec<usize>>) {
    let idx = |id: &str| app.tasks.iter().position(|t| t.id == id).expect("validated");
    let producer = app.messages.iter().map(|m| idx(&m.src)).collect();
    let consumers = app
        .messages
        .iter()
        .map(|m| m.dst.iter().map(|d| idx(d)).collect())
        .collect();
    (producer, consumers)
}

fn resolve_candidates(
    app: &ApplicationGraph,
    platform: &Platform,
    edges: &[MappingEdge],
) -> Result<Vec<Vec<Candidate>>, SpecError> {
    let mut candidates = vec![Vec::new(); app.tasks.len()];
    for e in edges {
        let t = app
            .tasks
            .iter()
            .position(|t| t.id == e.task)
            .ok_or_else(|| SpecError::invalid(format!("task {} not found", e.task)))?;
        let c = platform
            .core_index(&e.core)
            .ok_or_else(|| SpecError::invalid(format!("core {} not found", e.core)))?;
        let task = &app.tasks[t];
        let core = platform.core(c);
        let wcet = task
            .wcet
            .get(&core.id)
            .or_else(|| task.wcet.get(&core.core_type))
            .copied()
            .ok_or_else(|| {
                SpecError::invalid(format!(
                    "task {} has no WCET for core {} (type {})",
                    task.id, core.id, core.core_type
                ))
            })?;
        if candidates[t].iter().any(|cand: &Candidate| cand.core == c) {
            return Err(SpecError::invalid(format!(
                "duplicate mapping edge {} -> {}",
                e.task, e.core
            )));
        }
        candidates[t].push(Candidate { core: c, wcet });
    }
    for (t, cands) in candidates.iter().enumerate() {
        if cands.is_empty() {
            return Err(SpecError::invalid(format!(
                "task {} has no mapping edge",
                app.tasks[t].id
            )));
        }
    }
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::fig3a_json;

    #[test]
    fn fig3a_parses() {
        let spec = parse_spec(fig3a_json()).unwrap();
        assert_eq!(spec.app.tasks.len(), 3);
        assert_eq!(spec.app.messages.len(), 2);
        assert_eq!(spec.platform().tiles.len(), 2);
        assert!(spec.platform().tiles.iter().all(|t| t.cores.len() == 3));
        assert_eq!(end_to_end_paths(&spec.app).unwrap().len(), 2);
    }

    #[test]
    fn unknown_core_is_named() {
        let text = fig3a_json().replacen("\"core\": \"c5\"", "\"core\": \"c9\"", 1);
        let err = parse_spec(&text).unwrap_err();
        assert_eq!(err.to_string(), "validation error: core c9 not found");
    }

    #[test]
    fn missing_wcet_is_named() {
        let mut doc: serde_json::Value = serde_json::from_str(fig3a_json()).unwrap();
        doc["application"]["tasks"][1]["wcet_us"] = serde_json::json!({"other": 10.0});
        let err = parse_spec(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("task t1 has no WCET for core"), "{err}");
    }

    #[test]
    fn dangling_message_endpoint() {
        let mut doc: serde_json::Value = serde_json::from_str(fig3a_json()).unwrap();
        doc["application"]["messages"][0]["dst"] = serde_json::json!("t7");
        doc["application"]["edges"] = serde_json::json!([]);
        let err = parse_spec(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("task t7 not found"), "{err}");
    }

    #[test]
    fn cyclic_graph_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(fig3a_json()).unwrap();
        doc["application"]["messages"]
            .as_array_mut()
            .unwrap()
            .push(serde_json::json!({
                "id": "m9", "src": "t2", "dst": "t0", "period_us": 1000.0,
                "payload_bytes": 8, "mem_demand": 2
            }));
        doc["application"]["edges"] = serde_json::json!([]);
        let err = parse_spec(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn inconsistent_edges_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(fig3a_json()).unwrap();
        doc["application"]["edges"][0] = serde_json::json!({"from": "t1", "to": "m0"});
        let err = parse_spec(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("edge list disagrees"), "{err}");
    }

    #[test]
    fn malformed_document_is_syntax_error() {
        assert!(matches!(parse_spec("{\"application\": ["), Err(SpecError::Syntax(_))));
        assert!(matches!(parse_spec("{}"), Err(SpecError::Syntax(_))));
    }

    #[test]
    fn per_core_wcet_override() {
        let mut doc: serde_json::Value = serde_json::from_str(fig3a_json()).unwrap();
        doc["application"]["tasks"][0]["wcet_us"]["c1"] = serde_json::json!(7.0);
        let spec = parse_spec(&doc.to_string()).unwrap();
        let cands = &spec.index().candidates[0];
        let c1 = spec.platform().core_index("c1").unwrap();
        let c0 = spec.platform().core_index("c0").unwrap();
        let wcet_of = |c| cands.iter().find(|k| k.core == c).unwrap().wcet;
        assert_eq!(wcet_of(c1), Nanos(7000));
        assert_ne!(wcet_of(c0), Nanos(7000));
    }
}
