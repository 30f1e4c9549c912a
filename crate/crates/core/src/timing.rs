// SPDX-License-Identifier: Apache-2.0

//! Compositional worst-case timing analysis.
//!
//! Task response times combine the isolated execution time, the memory
//! service time, bus interference and core preemption. Message traversal
//! times combine the TX stage, the NoC route and the RX stage. Makespan and
//! throughput are derived from both.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitration::ArbitrationTuple;
use crate::model::PathNode;
use crate::time::Nanos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimingError {
    #[error("application has no tasks")]
    EmptyGraph,
}

/// Accesses of a task to one memory over its bus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BusAccess {
    pub mem_demand: u64,
    pub service_time: Nanos,
    /// Tuple of the task's core on this bus.
    pub tuple: ArbitrationTuple,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskTimingInputs {
    pub wcet: Nanos,
    /// One entry per accessed bus.
    pub accesses: Vec<BusAccess>,
    pub core_tuple: ArbitrationTuple,
}

impl TaskTimingInputs {
    /// A task accessing a single memory.
    pub fn single(
        wcet: Nanos,
        mem_demand: u64,
        service_time: Nanos,
        core_tuple: ArbitrationTuple,
        bus_tuple: ArbitrationTuple,
    ) -> Self {
        Self {
            wcet,
            accesses: vec![BusAccess { mem_demand, service_time, tuple: bus_tuple }],
            core_tuple,
        }
    }

    /// `WCET + sum(MD_i * ST_i)`: processor time without any interference.
    pub fn active_time(&self) -> Nanos {
        self.wcet + self.mem_service()
    }

    pub fn mem_service(&self) -> Nanos {
        self.accesses.iter().map(|a| a.service_time * a.mem_demand).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WcrtBreakdown {
    pub wcet: Nanos,
    pub mem_service: Nanos,
    pub i_bus: Nanos,
    pub i_core: Nanos,
    pub wcrt: Nanos,
}

/// Dedicated bus slots a task may need: `min(MD, ceil((WCET + MD*ST) / S_b))`.
pub fn bus_slots_needed(wcet: Nanos, mem_demand: u64, service_time: Nanos, bus_slot: Nanos) -> u64 {
    if mem_demand == 0 {
        return 0;
    }
    let active = wcet + service_time * mem_demand;
    mem_demand.min(active.div_ceil(bus_slot))
}

/// `N * (P_b - W_b * S_b)`.
pub fn bus_interference(n_slots: u64, bus_tuple: &ArbitrationTuple) -> Nanos {
    bus_tuple.wait_time() * n_slots
}

/// Preemption delay for a task needing `demand` processor time on a core
/// with the given tuple: `ceil(demand / (W*S)) * (P - W*S)`.
pub fn core_preemption_for(demand: Nanos, core_tuple: &ArbitrationTuple) -> Nanos {
    core_tuple.wait_time() * demand.div_ceil(core_tuple.budget())
}

/// `ceil((WCET + MD*ST + I_bus) / (W_c*S_c)) * (P_c - W_c*S_c)`.
pub fn core_preemption(
    wcet: Nanos,
    mem_demand: u64,
    service_time: Nanos,
    i_bus: Nanos,
    core_tuple: &ArbitrationTuple,
) -> Nanos {
    core_preemption_for(wcet + service_time * mem_demand + i_bus, core_tuple)
}

/// Worst-case response time with its four summands. With several buses the
/// slot count of each bus is bounded by the task's active time plus the
/// worst waiting on the other buses, since both let slots of this bus pass.
pub fn wcrt(input: &TaskTimingInputs) -> WcrtBreakdown {
    let active = input.active_time();
    let per_access: Vec<Nanos> =
        input.accesses.iter().map(|a| bus_interference(a.mem_demand, &a.tuple)).collect();
    let all_waits: Nanos = per_access.iter().copied().sum();
    let mut i_bus = Nanos::ZERO;
    for (a, &own) in input.accesses.iter().zip(&per_access) {
        if a.mem_demand == 0 {
            continue;
        }
        debug_assert!(a.tuple.slot_len >= a.service_time);
        let window = active + (all_waits - own);
        let n = a.mem_demand.min(window.div_ceil(a.tuple.slot_len));
        i_bus += bus_interference(n, &a.tuple);
    }
    let i_core = core_preemption_for(active + i_bus, &input.core_tuple);
    let mem_service = input.mem_service();
    WcrtBreakdown {
        wcet: input.wcet,
        mem_service,
        i_bus,
        i_core,
        wcrt: input.wcet + mem_service + i_bus + i_core,
    }
}

/// One network-adapter stage of a transfer: memory demand on a bus plus the
/// message's tuple on the TX or RX unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NaStage {
    pub mem_demand: u64,
    pub service_time: Nanos,
    /// Tuple of the TX/RX unit on the memory bus.
    pub bus_tuple: ArbitrationTuple,
    /// Tuple of the message on the unit; its slot length is one bus period.
    pub unit_tuple: ArbitrationTuple,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MessageTimingInputs {
    pub flits: u64,
    pub route_hops: u64,
    pub route_tuple: ArbitrationTuple,
    pub tx: NaStage,
    pub rx: NaStage,
    pub noc_cycle: Nanos,
    pub router_delay: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WcttBreakdown {
    pub d_tx: Nanos,
    pub d_noc: Nanos,
    pub d_rx: Nanos,
    pub wctt: Nanos,
}

/// Bus slots needed by a TX/RX unit: `ceil(MD / ceil(S_b / ST))`.
pub fn tx_bus_slots(mem_demand: u64, bus_slot: Nanos, service_time: Nanos) -> u64 {
    let per_slot = bus_slot.div_ceil(service_time);
    mem_demand.div_ceil(per_slot)
}

/// Latency of one NA stage.
pub fn na_latency(stage: &NaStage) -> Nanos {
    debug_assert_eq!(stage.unit_tuple.slot_len, stage.bus_tuple.period);
    let n = tx_bus_slots(stage.mem_demand, stage.bus_tuple.slot_len, stage.service_time);
    let bus_periods = n.div_ceil(u64::from(stage.bus_tuple.weight));
    let unit_periods = bus_periods.div_ceil(u64::from(stage.unit_tuple.weight));
    stage.service_time * stage.mem_demand
        + stage.bus_tuple.wait_time() * bus_periods
        + stage.unit_tuple.wait_time() * unit_periods
}

pub fn tx_latency(input: &MessageTimingInputs, side: Side) -> Nanos {
    match side {
        Side::Tx => na_latency(&input.tx),
        Side::Rx => na_latency(&input.rx),
    }
}

/// `(f - 1 + |rho| * D_router) * tau + (ceil(f / W) - 1 + |rho|) * (P - W*tau)`.
pub fn noc_latency(input: &MessageTimingInputs) -> Nanos {
    debug_assert!(input.flits >= 1 && input.route_hops >= 1);
    debug_assert_eq!(input.route_tuple.slot_len, input.noc_cycle);
    let pipeline = input.noc_cycle * (input.flits - 1 + input.route_hops * input.router_delay);
    let periods = input.flits.div_ceil(u64::from(input.route_tuple.weight)) - 1 + input.route_hops;
    pipeline + input.route_tuple.wait_time() * periods
}

pub fn wctt(input: &MessageTimingInputs) -> WcttBreakdown {
    let d_tx = tx_latency(input, Side::Tx);
    let d_noc = noc_latency(input);
    let d_rx = tx_latency(input, Side::Rx);
    WcttBreakdown { d_tx, d_noc, d_rx, wctt: d_tx + d_noc + d_rx }
}

/// Response time of one task in a mapping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskTiming {
    pub task: String,
    pub core: String,
    pub scheme: String,
    pub weight: u32,
    pub period: Nanos,
    #[serde(flatten)]
    pub breakdown: WcrtBreakdown,
}

/// Traversal time of one inter-tile transfer in a mapping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MessageTiming {
    pub message: String,
    pub consumer: String,
    pub route: Vec<String>,
    pub weight: u32,
    pub period: Nanos,
    #[serde(flatten)]
    pub breakdown: WcttBreakdown,
}

/// Analysis result of a feasible mapping. Times are in nanoseconds and the
/// throughput is in activations per second.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingReport {
    pub tasks: Vec<TaskTiming>,
    pub messages: Vec<MessageTiming>,
    pub makespan: Nanos,
    pub throughput: f64,
}

/// Throughput in activations per second for a largest component latency.
pub fn throughput_per_second(max_latency: Nanos) -> f64 {
    1e9 / max_latency.get() as f64
}

/// Makespan and throughput from per-task response times and per-transfer
/// traversal times. Transfers are keyed by `(message, consumer task)`;
/// absent keys are intra-tile and contribute zero.
pub fn makespan_and_throughput(
    wcrt: &[Nanos],
    wctt: &BTreeMap<(usize, usize), Nanos>,
    paths: &[Vec<PathNode>],
) -> Result<(Nanos, f64), TimingError> {
    if wcrt.is_empty() {
        return Err(TimingError::EmptyGraph);
    }
    let makespan = paths
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, node)| match *node {
                    PathNode::Task(t) => wcrt[t],
                    PathNode::Message(m) => {
                        let PathNode::Task(next) = p[i + 1] else {
                            unreachable!("message followed by task")
                        };
                        wctt.get(&(m, next)).copied().unwrap_or(Nanos::ZERO)
                    }
                })
                .sum::<Nanos>()
        })
        .max()
        .unwrap_or(Nanos::ZERO);
    let worst = wcrt.iter().chain(wctt.values()).copied().max().unwrap_or(Nanos::ZERO);
    Ok((makespan, throughput_per_second(worst)))
}

/// Longest path through the task DAG without enumerating paths.
pub fn makespan_dag(
    topo_order: &[usize],
    successors: &[Vec<(usize, usize)>],
    wcrt: &[Nanos],
    wctt: &BTreeMap<(usize, usize), Nanos>,
) -> Nanos {
    let mut finish = vec![Nanos::ZERO; wcrt.len()];
    let mut start = vec![Nanos::ZERO; wcrt.len()];
    for &t in topo_order {
        finish[t] = start[t] + wcrt[t];
        for &(m, d) in &successors[t] {
            let arrive = finish[t] + wctt.get(&(m, d)).copied().unwrap_or(Nanos::ZERO);
            if arrive > start[d] {
                start[d] = arrive;
            }
        }
    }
    finish.into_iter().max().unwrap_or(Nanos::ZERO)
}
