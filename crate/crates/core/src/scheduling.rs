// SPDX-License-Identifier: Apache-2.0

//! Budget computation and arbitration-tuple refinement.
//!
//! Weights are searched at the unreduced capacity of every resource. Once
//! they are fixed and fit, capacities of work-conserving resources are
//! reduced according to the isolation decisions and every tuple is rebuilt.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::arbitration::{make_tuple, ArbitrationTuple};
use crate::mapping::{Link, Transfer};
use crate::model::{CoreIdx, ProblemSpec, TileIdx};
use crate::timing::{self, BusAccess, MessageTimingInputs, NaStage, TaskTimingInputs};

/// Binding, isolation and routing decisions the budgets depend on. Flags are
/// the effective ones: unused cores and tiles are shared, and core flags of
/// reserved tiles are shared.
#[derive(Clone, Copy, Debug)]
pub struct Placement<'a> {
    pub bindings: &'a [CoreIdx],
    pub reserved_cores: &'a [bool],
    pub reserved_tiles: &'a [bool],
    pub transfers: &'a [Transfer],
}

impl Placement<'_> {
    fn core_exclusive(&self, spec: &ProblemSpec, c: CoreIdx) -> bool {
        self.reserved_cores[c.0] || self.reserved_tiles[spec.platform().tile_of(c).0]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Infeasible(String),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BudgetAssignment {
    /// Core weight of each task on its bound core.
    pub task_weights: Vec<u32>,
    /// Weight of each transfer, used alike on TX, RX and every route link.
    pub transfer_weights: Vec<u32>,
    pub feasibility: Feasibility,
}

/// Effective capacity of every arbitrated resource.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Capacities {
    pub core: Vec<u32>,
    /// Per tile, per bus.
    pub bus: Vec<Vec<u32>>,
    pub tx: Vec<u32>,
    pub rx: Vec<u32>,
    pub link: u32,
}

impl Capacities {
    /// Capacities as declared by the platform.
    pub fn full(spec: &ProblemSpec) -> Self {
        let p = spec.platform();
        Self {
            core: p.cores.iter().map(|c| p.tile(c.tile).core_policy.capacity).collect(),
            bus: p
                .tiles
                .iter()
                .map(|t| t.buses.iter().map(|b| b.policy.capacity).collect())
                .collect(),
            tx: p.tiles.iter().map(|t| t.tx.capacity).collect(),
            rx: p.tiles.iter().map(|t| t.rx.capacity).collect(),
            link: p.noc.link_policy.capacity,
        }
    }

    /// Capacities after excluding slots that the isolation decisions leave
    /// allocated but unused. Only work-conserving resources are reduced; NoC
    /// links never are.
    pub fn refined(spec: &ProblemSpec, placement: &Placement, budgets: &BudgetAssignment) -> Self {
        let p = spec.platform();
        let mut caps = Self::full(spec);
        let mut core_load = vec![0u32; p.cores.len()];
        let mut hosts = vec![false; p.cores.len()];
        for (t, &c) in placement.bindings.iter().enumerate() {
            core_load[c.0] += budgets.task_weights[t];
            hosts[c.0] = true;
        }
        for (ci, core) in p.cores.iter().enumerate() {
            let policy = &p.tile(core.tile).core_policy;
            if hosts[ci] && placement.core_exclusive(spec, CoreIdx(ci)) && policy.work_conserving {
                caps.core[ci] = core_load[ci];
            }
        }
        let mut out_load = vec![0u32; p.tiles.len()];
        let mut in_load = vec![0u32; p.tiles.len()];
        for (x, tr) in placement.transfers.iter().enumerate() {
            out_load[tr.src_tile.0] += budgets.transfer_weights[x];
            in_load[tr.dst_tile.0] += budgets.transfer_weights[x];
        }
        for (ti, tile) in p.tiles.iter().enumerate() {
            if !placement.reserved_tiles[ti] {
                continue;
            }
            let idle = tile.cores.iter().filter(|c| !hosts[c.0]).count() as u32;
            for (bi, bus) in tile.buses.iter().enumerate() {
                if bus.policy.work_conserving {
                    caps.bus[ti][bi] -= idle * tile.bus_weights.core;
                }
            }
            if tile.tx.work_conserving && out_load[ti] > 0 {
                caps.tx[ti] = out_load[ti];
            }
            if tile.rx.work_conserving && in_load[ti] > 0 {
                caps.rx[ti] = in_load[ti];
            }
        }
        caps
    }
}

/// Memory accesses of a task per bus of its tile, sorted by bus. Private
/// data lives in the core's home memory. An intra-tile message is written by
/// its producer to the producer's home memory and read from there by every
/// consumer on the same tile.
pub fn memory_accesses(spec: &ProblemSpec, bindings: &[CoreIdx], task: usize) -> Vec<(usize, u64)> {
    let p = spec.platform();
    let idx = spec.index();
    let core = bindings[task];
    let tile = p.tile_of(core);
    let mut per_bus: BTreeMap<usize, u64> = BTreeMap::new();
    *per_bus.entry(p.core(core).home_memory).or_default() += spec.app.tasks[task].mem_demand;
    for (m, msg) in spec.app.messages.iter().enumerate() {
        let prod_core = bindings[idx.producer[m]];
        if p.tile_of(prod_core) != tile {
            continue;
        }
        let local_consumers = idx.consumers[m]
            .iter()
            .filter(|&&d| p.tile_of(bindings[d]) == tile)
            .count();
        if local_consumers == 0 {
            continue;
        }
        let home = p.core(prod_core).home_memory;
        if idx.producer[m] == task {
            *per_bus.entry(home).or_default() += msg.mem_demand;
        }
        if idx.consumers[m].contains(&task) {
            *per_bus.entry(home).or_default() += msg.mem_demand;
        }
    }
    per_bus.into_iter().collect()
}

/// Analysis inputs of a task at the given weight and capacities.
pub fn task_inputs(
    spec: &ProblemSpec,
    bindings: &[CoreIdx],
    caps: &Capacities,
    task: usize,
    weight: u32,
) -> TaskTimingInputs {
    let p = spec.platform();
    let core = bindings[task];
    let tile = p.tile(p.tile_of(core));
    let ti = p.tile_of(core).0;
    let wcet = spec.index().candidates[task]
        .iter()
        .find(|k| k.core == core)
        .expect("binding follows a mapping edge")
        .wcet;
    let core_tuple =
        make_tuple(&tile.core_policy, weight, caps.core[core.0]).expect("weight within capacity");
    let accesses = memory_accesses(spec, bindings, task)
        .into_iter()
        .map(|(b, md)| {
            let bus = &tile.buses[b];
            BusAccess {
                mem_demand: md,
                service_time: bus.service_time,
                tuple: make_tuple(&bus.policy, tile.bus_weights.core, caps.bus[ti][b])
                    .expect("bus weights validated"),
            }
        })
        .collect();
    TaskTimingInputs { wcet, accesses, core_tuple }
}

/// TX (or RX) unit tuple on a bus and the message's tuple on the unit.
fn na_stage(
    spec: &ProblemSpec,
    caps: &Capacities,
    tile: TileIdx,
    bus: usize,
    rx: bool,
    mem_demand: u64,
    weight: u32,
) -> NaStage {
    let t = spec.platform().tile(tile);
    let b = &t.buses[bus];
    let (bus_weight, unit, unit_cap) = if rx {
        (t.bus_weights.rx, t.rx, caps.rx[tile.0])
    } else {
        (t.bus_weights.tx, t.tx, caps.tx[tile.0])
    };
    let bus_tuple = make_tuple(&b.policy, bus_weight, caps.bus[tile.0][bus]).expect("bus weights validated");
    let unit_tuple =
        make_tuple(&unit.with_slot(bus_tuple.period), weight, unit_cap).expect("weight within capacity");
    NaStage { mem_demand, service_time: b.service_time, bus_tuple, unit_tuple }
}

/// Analysis inputs of a transfer at the given weight and capacities.
pub fn transfer_inputs(spec: &ProblemSpec, caps: &Capacities, tr: &Transfer, weight: u32) -> MessageTimingInputs {
    let noc = &spec.platform().noc;
    let md = spec.app.messages[tr.message].mem_demand;
    MessageTimingInputs {
        flits: tr.flits,
        route_hops: tr.hops,
        route_tuple: make_tuple(&noc.link_policy, weight, caps.link).expect("weight within capacity"),
        tx: na_stage(spec, caps, tr.src_tile, tr.src_bus, false, md, weight),
        rx: na_stage(spec, caps, tr.dst_tile, tr.dst_bus, true, md, weight),
        noc_cycle: noc.tau_ns,
        router_delay: u64::from(noc.router_delay_cycles),
    }
}

/// Least weight in `1..=max_weight` accepted by `fits`, scanning upwards.
pub fn min_weight(max_weight: u32, mut fits: impl FnMut(u32) -> bool) -> Option<u32> {
    (1..=max_weight).find(|&w| fits(w))
}

/// Least core weight meeting the task's period at unreduced capacities.
pub fn min_task_weight(spec: &ProblemSpec, bindings: &[CoreIdx], task: usize) -> Option<u32> {
    let caps = Capacities::full(spec);
    let period = spec.app.tasks[task].period;
    min_weight(caps.core[bindings[task].0], |w| {
        timing::wcrt(&task_inputs(spec, bindings, &caps, task, w)).wcrt <= period
    })
}

/// Least common weight on TX, RX and route meeting the message's period.
pub fn min_message_weight(spec: &ProblemSpec, tr: &Transfer) -> Option<u32> {
    let caps = Capacities::full(spec);
    let period = spec.app.messages[tr.message].period;
    let max_w = caps.link.min(caps.tx[tr.src_tile.0]).min(caps.rx[tr.dst_tile.0]);
    min_weight(max_w, |w| timing::wctt(&transfer_inputs(spec, &caps, tr, w)).wctt <= period)
}

struct Overload<'a> {
    what: &'a dyn fmt::Display,
    load: u32,
    capacity: u32,
}

fn first_overload<'a>(items: impl IntoIterator<Item = Overload<'a>>) -> Option<String> {
    items
        .into_iter()
        .find(|o| o.load > o.capacity)
        .map(|o| format!("{} overloaded: {} > {}", o.what, o.load, o.capacity))
}

/// Capacity check of all task and transfer weights against declared
/// capacities, reporting the first violated resource.
pub fn check_feasibility(spec: &ProblemSpec, placement: &Placement, task_weights: &[u32], transfer_weights: &[u32]) -> Feasibility {
    let p = spec.platform();
    let caps = Capacities::full(spec);
    let mut core_load = vec![0u32; p.cores.len()];
    for (t, &c) in placement.bindings.iter().enumerate() {
        core_load[c.0] += task_weights[t];
    }
    let core_names: Vec<String> = p.cores.iter().map(|c| format!("core {}", c.id)).collect();
    if let Some(r) = first_overload((0..p.cores.len()).map(|c| Overload {
        what: &core_names[c],
        load: core_load[c],
        capacity: caps.core[c],
    })) {
        return Feasibility::Infeasible(r);
    }
    let mut link_load: BTreeMap<Link, u32> = BTreeMap::new();
    let mut out_load = vec![0u32; p.tiles.len()];
    let mut in_load = vec![0u32; p.tiles.len()];
    for (x, tr) in placement.transfers.iter().enumerate() {
        for l in &tr.route {
            *link_load.entry(*l).or_default() += transfer_weights[x];
        }
        out_load[tr.src_tile.0] += transfer_weights[x];
        in_load[tr.dst_tile.0] += transfer_weights[x];
    }
    let link_names: Vec<(String, u32)> =
        link_load.iter().map(|(l, &w)| (format!("link {l}"), w)).collect();
    if let Some(r) = first_overload(link_names.iter().map(|(n, w)| Overload {
        what: n,
        load: *w,
        capacity: caps.link,
    })) {
        return Feasibility::Infeasible(r);
    }
    let tx_names: Vec<String> = p.tiles.iter().map(|t| format!("tx of tile {}", t.id)).collect();
    let rx_names: Vec<String> = p.tiles.iter().map(|t| format!("rx of tile {}", t.id)).collect();
    let na = (0..p.tiles.len())
        .map(|t| Overload { what: &tx_names[t], load: out_load[t], capacity: caps.tx[t] })
        .chain((0..p.tiles.len()).map(|t| Overload { what: &rx_names[t], load: in_load[t], capacity: caps.rx[t] }));
    match first_overload(na) {
        Some(r) => Feasibility::Infeasible(r),
        None => Feasibility::Feasible,
    }
}

/// Bus tuple of one bus master.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BusTuple {
    /// Core id, or `tx`/`rx` of a tile.
    pub requestor: String,
    pub tile: String,
    pub bus: usize,
    pub tuple: ArbitrationTuple,
}

/// Every tuple the analysis uses, after refinement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleSet {
    pub capacities: Capacities,
    pub tasks: Vec<TaskTimingInputs>,
    pub transfers: Vec<MessageTimingInputs>,
    pub bus: Vec<BusTuple>,
}

/// Refined tuples for a feasible budget assignment.
pub fn refine_tuples(spec: &ProblemSpec, placement: &Placement, budgets: &BudgetAssignment) -> TupleSet {
    let p = spec.platform();
    let caps = Capacities::refined(spec, placement, budgets);
    let tasks = (0..placement.bindings.len())
        .map(|t| task_inputs(spec, placement.bindings, &caps, t, budgets.task_weights[t]))
        .collect();
    let transfers = placement
        .transfers
        .iter()
        .zip(&budgets.transfer_weights)
        .map(|(tr, &w)| transfer_inputs(spec, &caps, tr, w))
        .collect();
    let mut bus = Vec::new();
    let mut used: Vec<CoreIdx> = placement.bindings.to_vec();
    used.sort();
    used.dedup();
    for (ti, tile) in p.tiles.iter().enumerate() {
        let sends = placement.transfers.iter().any(|tr| tr.src_tile.0 == ti);
        let receives = placement.transfers.iter().any(|tr| tr.dst_tile.0 == ti);
        for (bi, b) in tile.buses.iter().enumerate() {
            let mk = |w| make_tuple(&b.policy, w, caps.bus[ti][bi]).expect("bus weights validated");
            for c in used.iter().filter(|c| p.tile_of(**c).0 == ti) {
                bus.push(BusTuple {
                    requestor: p.core(*c).id.clone(),
                    tile: tile.id.clone(),
                    bus: bi,
                    tuple: mk(tile.bus_weights.core),
                });
            }
            if sends {
                bus.push(BusTuple { requestor: "tx".into(), tile: tile.id.clone(), bus: bi, tuple: mk(tile.bus_weights.tx) });
            }
            if receives {
                bus.push(BusTuple { requestor: "rx".into(), tile: tile.id.clone(), bus: bi, tuple: mk(tile.bus_weights.rx) });
            }
        }
    }
    TupleSet { capacities: caps, tasks, transfers, bus }
}

/// Outcome of the scheduling step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub budgets: BudgetAssignment,
    /// Present iff the budgets are feasible.
    pub tuples: Option<TupleSet>,
}

/// Weights first, then feasibility, then refinement.
pub fn schedule(spec: &ProblemSpec, placement: &Placement) -> Schedule {
    let p = spec.platform();
    let full = Capacities::full(spec);
    let mut miss: Option<String> = None;
    let task_weights: Vec<u32> = (0..placement.bindings.len())
        .map(|t| {
            min_task_weight(spec, placement.bindings, t).unwrap_or_else(|| {
                let c = placement.bindings[t];
                miss.get_or_insert_with(|| {
                    format!(
                        "task {} misses its period on core {} even at full weight",
                        spec.app.tasks[t].id,
                        p.core(c).id
                    )
                });
                full.core[c.0]
            })
        })
        .collect();
    let transfer_weights: Vec<u32> = placement
        .transfers
        .iter()
        .map(|tr| {
            min_message_weight(spec, tr).unwrap_or_else(|| {
                miss.get_or_insert_with(|| {
                    format!(
                        "message {} to {} misses its period even at full weight",
                        spec.app.messages[tr.message].id,
                        spec.app.tasks[tr.consumer].id
                    )
                });
                full.link.min(full.tx[tr.src_tile.0]).min(full.rx[tr.dst_tile.0])
            })
        })
        .collect();
    let feasibility = match miss {
        Some(reason) => Feasibility::Infeasible(reason),
        None => check_feasibility(spec, placement, &task_weights, &transfer_weights),
    };
    let budgets = BudgetAssignment { task_weights, transfer_weights, feasibility };
    let tuples = budgets
        .feasibility
        .is_feasible()
        .then(|| refine_tuples(spec, placement, &budgets));
    Schedule { budgets, tuples }
}
