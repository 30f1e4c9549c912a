// SPDX-License-Identifier: Apache-2.0

//! Genotype decoding and mapping evaluation.
//!
//! A genotype picks one mapping edge per task and carries a shared/reserved
//! bit for every core and tile. Decoding derives the effective isolation of
//! each task, routes inter-tile transfers, runs the scheduling step and, if
//! the budgets fit, the timing analysis and the objectives.

mod objectives;
mod routing;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{CoreIdx, ProblemSpec, TileIdx};
use crate::scheduling::{self, Placement, Schedule};
use crate::time::Nanos;
use crate::timing::{self, MessageTiming, TaskTiming, TimingReport};

pub use objectives::{resource_usage, EnergyModel, Objectives};
pub use routing::{route_hops, xy_route, Link, Transfer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("energy coefficient {0} is missing")]
    MissingCoefficient(String),
    #[error("task {0} not found")]
    UnknownTask(String),
    #[error("task {0} has no binding")]
    MissingBinding(String),
    #[error("core {0} not found")]
    UnknownCore(String),
    #[error("tile {0} not found")]
    UnknownTile(String),
    #[error("task {task} cannot be mapped to core {core}")]
    NotMappable { task: String, core: String },
}

/// Allocation of a task's core.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IsolationScheme {
    #[serde(rename = "CS")]
    CoreSharing,
    #[serde(rename = "CR")]
    CoreReservation,
    #[serde(rename = "TR")]
    TileReservation,
}

impl fmt::Display for IsolationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IsolationScheme::CoreSharing => "CS",
            IsolationScheme::CoreReservation => "CR",
            IsolationScheme::TileReservation => "TR",
        })
    }
}

/// Scheme of a task from the flags of its core and tile.
pub fn isolation_scheme(core_reserved: bool, tile_reserved: bool) -> IsolationScheme {
    match (core_reserved, tile_reserved) {
        (_, true) => IsolationScheme::TileReservation,
        (true, false) => IsolationScheme::CoreReservation,
        (false, false) => IsolationScheme::CoreSharing,
    }
}

/// Search-space encoding of a mapping.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genotype {
    /// Per task, an index into its mapping-edge list. Out-of-range values
    /// are wrapped.
    pub binding: Vec<u32>,
    pub reserved_cores: Vec<bool>,
    pub reserved_tiles: Vec<bool>,
}

impl Genotype {
    pub fn len(&self) -> usize {
        self.binding.len() + self.reserved_cores.len() + self.reserved_tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Short stable digest used for tie-breaking and in output files.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for g in &self.binding {
            h.update(g.to_le_bytes());
        }
        h.update([0xff]);
        h.update(self.reserved_cores.iter().map(|&b| b as u8).collect::<Vec<_>>());
        h.update([0xff]);
        h.update(self.reserved_tiles.iter().map(|&b| b as u8).collect::<Vec<_>>());
        let out = h.finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Maps out-of-range genes back onto valid mapping edges.
    pub fn repaired(&self, spec: &ProblemSpec) -> Genotype {
        let cands = &spec.index().candidates;
        let mut g = self.clone();
        for (t, gene) in g.binding.iter_mut().enumerate() {
            *gene %= cands[t].len() as u32;
        }
        g
    }
}

/// Binding and requested isolation flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decisions {
    pub bindings: Vec<CoreIdx>,
    pub reserved_cores: Vec<bool>,
    pub reserved_tiles: Vec<bool>,
}

impl Decisions {
    pub fn from_genotype(spec: &ProblemSpec, g: &Genotype) -> Self {
        let cands = &spec.index().candidates;
        let bindings = g
            .binding
            .iter()
            .enumerate()
            .map(|(t, &gene)| cands[t][gene as usize % cands[t].len()].core)
            .collect();
        Self { bindings, reserved_cores: g.reserved_cores.clone(), reserved_tiles: g.reserved_tiles.clone() }
    }

    /// Flags with unused cores/tiles and core flags inside reserved tiles
    /// cleared.
    pub fn effective_flags(&self, spec: &ProblemSpec) -> (Vec<bool>, Vec<bool>) {
        let p = spec.platform();
        let used_cores: BTreeSet<CoreIdx> = self.bindings.iter().copied().collect();
        let used_tiles: BTreeSet<TileIdx> = used_cores.iter().map(|&c| p.tile_of(c)).collect();
        let tiles: Vec<bool> = (0..p.tiles.len())
            .map(|t| self.reserved_tiles[t] && used_tiles.contains(&TileIdx(t)))
            .collect();
        let cores = (0..p.cores.len())
            .map(|c| {
                self.reserved_cores[c]
                    && used_cores.contains(&CoreIdx(c))
                    && !tiles[p.tile_of(CoreIdx(c)).0]
            })
            .collect();
        (cores, tiles)
    }
}

/// Mapping description as stored on disk: task-to-core bindings plus the
/// cores and tiles to reserve. `isolation` applies one scheme to every used
/// core or tile on top of the explicit lists.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingFile {
    pub bindings: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reserved_cores: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reserved_tiles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolation: Option<IsolationScheme>,
}

impl MappingFile {
    pub fn to_decisions(&self, spec: &ProblemSpec) -> Result<Decisions, MappingError> {
        let p = spec.platform();
        for task in self.bindings.keys() {
            if spec.task_index(task).is_none() {
                return Err(MappingError::UnknownTask(task.clone()));
            }
        }
        let mut bindings = Vec::with_capacity(spec.app.tasks.len());
        for (t, task) in spec.app.tasks.iter().enumerate() {
            let core_id = self
                .bindings
                .get(&task.id)
                .ok_or_else(|| MappingError::MissingBinding(task.id.clone()))?;
            let core = p.core_index(core_id).ok_or_else(|| MappingError::UnknownCore(core_id.clone()))?;
            if !spec.index().candidates[t].iter().any(|k| k.core == core) {
                return Err(MappingError::NotMappable { task: task.id.clone(), core: core_id.clone() });
            }
            bindings.push(core);
        }
        let mut reserved_cores = vec![false; p.cores.len()];
        let mut reserved_tiles = vec![false; p.tiles.len()];
        for c in &self.reserved_cores {
            let idx = p.core_index(c).ok_or_else(|| MappingError::UnknownCore(c.clone()))?;
            reserved_cores[idx.0] = true;
        }
        for u in &self.reserved_tiles {
            let idx = p
                .tiles
                .iter()
                .position(|t| &t.id == u)
                .ok_or_else(|| MappingError::UnknownTile(u.clone()))?;
            reserved_tiles[idx] = true;
        }
        match self.isolation {
            Some(IsolationScheme::CoreReservation) => reserved_cores.fill(true),
            Some(IsolationScheme::TileReservation) => reserved_tiles.fill(true),
            _ => {}
        }
        Ok(Decisions { bindings, reserved_cores, reserved_tiles })
    }
}

/// A decoded and evaluated mapping.
#[derive(Clone, Debug)]
pub struct Mapping {
    pub bindings: Vec<CoreIdx>,
    /// Effective flags.
    pub reserved_cores: Vec<bool>,
    pub reserved_tiles: Vec<bool>,
    pub schemes: Vec<IsolationScheme>,
    pub transfers: Vec<Transfer>,
    pub schedule: Schedule,
    /// Present iff feasible.
    pub timing: Option<TimingReport>,
    pub objectives: Option<Objectives>,
}

impl Mapping {
    pub fn is_feasible(&self) -> bool {
        self.schedule.budgets.feasibility.is_feasible()
    }

    /// The mapping as a file that reproduces it.
    pub fn to_file(&self, spec: &ProblemSpec) -> MappingFile {
        let p = spec.platform();
        MappingFile {
            bindings: spec
                .app
                .tasks
                .iter()
                .zip(&self.bindings)
                .map(|(t, &c)| (t.id.clone(), p.core(c).id.clone()))
                .collect(),
            reserved_cores: (0..p.cores.len())
                .filter(|&c| self.reserved_cores[c])
                .map(|c| p.cores[c].id.clone())
                .collect(),
            reserved_tiles: (0..p.tiles.len())
                .filter(|&t| self.reserved_tiles[t])
                .map(|t| p.tiles[t].id.clone())
                .collect(),
            isolation: None,
        }
    }

    /// JSON view with bindings, flags, routes, weights, tuples, timing and
    /// objectives.
    pub fn to_json(&self, spec: &ProblemSpec) -> serde_json::Value {
        let file = self.to_file(spec);
        let tuples = self.schedule.tuples.as_ref().map(|ts| {
            serde_json::json!({
                "tasks": ts.tasks.iter().zip(&spec.app.tasks).map(|(i, t)| serde_json::json!({
                    "task": t.id,
                    "core": i.core_tuple,
                    "bus": i.accesses.iter().map(|a| a.tuple).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "transfers": ts.transfers.iter().zip(&self.transfers).map(|(i, tr)| serde_json::json!({
                    "message": spec.app.messages[tr.message].id,
                    "consumer": spec.app.tasks[tr.consumer].id,
                    "tx": i.tx.unit_tuple,
                    "route": i.route_tuple,
                    "rx": i.rx.unit_tuple,
                })).collect::<Vec<_>>(),
                "bus": ts.bus,
            })
        });
        serde_json::json!({
            "bindings": file.bindings,
            "reserved_cores": file.reserved_cores,
            "reserved_tiles": file.reserved_tiles,
            "schemes": spec.app.tasks.iter().zip(&self.schemes)
                .map(|(t, s)| (t.id.clone(), s.to_string())).collect::<BTreeMap<_, _>>(),
            "routes": self.transfers.iter().map(|tr| serde_json::json!({
                "message": spec.app.messages[tr.message].id,
                "consumer": spec.app.tasks[tr.consumer].id,
                "links": tr.route.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "hops": tr.hops,
                "flits": tr.flits,
            })).collect::<Vec<_>>(),
            "budgets": self.schedule.budgets,
            "tuples": tuples,
            "timing": self.timing,
            "objectives": self.objectives,
        })
    }
}

/// Inter-tile transfer instances implied by a binding.
pub fn transfers_for(spec: &ProblemSpec, bindings: &[CoreIdx]) -> Vec<Transfer> {
    let p = spec.platform();
    let idx = spec.index();
    let mut out = Vec::new();
    for (m, msg) in spec.app.messages.iter().enumerate() {
        let pc = bindings[idx.producer[m]];
        for &d in &idx.consumers[m] {
            let dc = bindings[d];
            let (st, dt) = (p.tile_of(pc), p.tile_of(dc));
            if st == dt {
                continue;
            }
            let route = xy_route(p.tile(st).pos, p.tile(dt).pos, p.mesh);
            out.push(Transfer {
                message: m,
                consumer: d,
                src_tile: st,
                dst_tile: dt,
                src_bus: p.core(pc).home_memory,
                dst_bus: p.core(dc).home_memory,
                hops: route_hops(route.len(), p.noc.hop_count),
                route,
                flits: p.noc.flits(msg.payload_bytes),
            });
        }
    }
    out
}

/// Decodes and evaluates mappings of one specification.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    spec: &'a ProblemSpec,
    energy: Option<EnergyModel>,
}

impl<'a> Evaluator<'a> {
    /// Evaluator computing all three objectives; fails if an energy
    /// coefficient is missing.
    pub fn new(spec: &'a ProblemSpec) -> Result<Self, MappingError> {
        Ok(Self { spec, energy: Some(EnergyModel::from_spec(spec)?) })
    }

    /// Evaluator that leaves the energy objective empty.
    pub fn timing_only(spec: &'a ProblemSpec) -> Self {
        Self { spec, energy: None }
    }

    pub fn spec(&self) -> &'a ProblemSpec {
        self.spec
    }

    pub fn decode(&self, g: &Genotype) -> Mapping {
        self.evaluate(&Decisions::from_genotype(self.spec, g))
    }

    pub fn evaluate(&self, d: &Decisions) -> Mapping {
        let spec = self.spec;
        let p = spec.platform();
        let (reserved_cores, reserved_tiles) = d.effective_flags(spec);
        let schemes = d
            .bindings
            .iter()
            .map(|&c| isolation_scheme(reserved_cores[c.0], reserved_tiles[p.tile_of(c).0]))
            .collect();
        let transfers = transfers_for(spec, &d.bindings);
        let placement = Placement {
            bindings: &d.bindings,
            reserved_cores: &reserved_cores,
            reserved_tiles: &reserved_tiles,
            transfers: &transfers,
        };
        let schedule = scheduling::schedule(spec, &placement);
        let mut mapping = Mapping {
            bindings: d.bindings.clone(),
            reserved_cores,
            reserved_tiles,
            schemes,
            transfers,
            schedule,
            timing: None,
            objectives: None,
        };
        if let Some(report) = self.timing_report(&mapping) {
            let usage = resource_usage(
                spec,
                &mapping.bindings,
                &mapping.reserved_cores,
                &mapping.reserved_tiles,
                &mapping.schedule.budgets.task_weights,
            );
            let energy = self.energy.as_ref().map(|e| e.energy(spec, &mapping, &report));
            mapping.objectives = Some(Objectives { latency: report.makespan, resource_usage: usage, energy });
            mapping.timing = Some(report);
        }
        mapping
    }

    fn timing_report(&self, m: &Mapping) -> Option<TimingReport> {
        let spec = self.spec;
        let p = spec.platform();
        let tuples = m.schedule.tuples.as_ref()?;
        let budgets = &m.schedule.budgets;
        let task_b: Vec<_> = tuples.tasks.iter().map(timing::wcrt).collect();
        let wcrt: Vec<Nanos> = task_b.iter().map(|b| b.wcrt).collect();
        let mut wctt = BTreeMap::new();
        let mut messages = Vec::new();
        for ((tr, inp), &w) in m.transfers.iter().zip(&tuples.transfers).zip(&budgets.transfer_weights) {
            let b = timing::wctt(inp);
            wctt.insert((tr.message, tr.consumer), b.wctt);
            let msg = &spec.app.messages[tr.message];
            messages.push(MessageTiming {
                message: msg.id.clone(),
                consumer: spec.app.tasks[tr.consumer].id.clone(),
                route: tr.route.iter().map(|l| l.to_string()).collect(),
                weight: w,
                period: msg.period,
                breakdown: b,
            });
        }
        let idx = spec.index();
        let makespan = timing::makespan_dag(&idx.topo_order, &idx.successors, &wcrt, &wctt);
        let worst = wcrt.iter().chain(wctt.values()).copied().max().unwrap_or(Nanos::ZERO);
        let tasks = spec
            .app
            .tasks
            .iter()
            .enumerate()
            .map(|(t, task)| TaskTiming {
                task: task.id.clone(),
                core: p.core(m.bindings[t]).id.clone(),
                scheme: m.schemes[t].to_string(),
                weight: budgets.task_weights[t],
                period: task.period,
                breakdown: task_b[t],
            })
            .collect();
        Some(TimingReport { tasks, messages, makespan, throughput: timing::throughput_per_second(worst) })
    }
}
