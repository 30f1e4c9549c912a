// SPDX-License-Identifier: Apache-2.0

//! Slot-level simulation of a mapping against adversarial interference.
//!
//! Every arbitrated resource is replaced by a slot timeline in which the
//! requestor holds exactly its reserved slots and phantom competitors hold
//! the rest. A task first executes with its core to itself while its
//! memory accesses contend on the buses; the resulting busy time is then
//! served by the core arbiter. A transfer passes the TX unit, the routers
//! of its route and the RX unit in sequence. Observed latencies are
//! compared against the analytical bounds of the mapping.

mod timeline;

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::{Mapping, Transfer};
use crate::model::{HopConvention, ProblemSpec};
use crate::scheduling::memory_accesses;
use crate::time::Nanos;
use crate::timing::{MessageTimingInputs, NaStage, TaskTimingInputs};

use timeline::{Layout, Resource, Timeline};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// Competitors never request.
    None,
    /// Every competitor busy and the requestor's slots last in the round,
    /// with the release at a round boundary.
    Aligned,
    /// Random slot layout, phase and competitor load.
    #[default]
    Random,
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adversary::None => "none",
            Adversary::Aligned => "aligned",
            Adversary::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimScenario {
    pub adversary: Adversary,
    pub seed: u64,
    /// Activations per task, released one period apart.
    pub activations: u32,
    /// Defaults to one period more than the last release.
    pub horizon: Option<Nanos>,
}

impl SimScenario {
    pub fn new(adversary: Adversary, seed: u64) -> Self {
        Self { adversary, seed, activations: 2, horizon: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimEvent {
    pub time: i64,
    pub resource: String,
    pub requestor: String,
    pub event: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimTrace {
    pub seed: u64,
    pub adversary: Adversary,
    /// Observed response time per task and activation.
    pub tasks: Vec<Vec<Nanos>>,
    /// Observed traversal time per transfer and activation.
    pub transfers: Vec<Vec<Nanos>>,
    pub events: Vec<SimEvent>,
}

/// An observation above its analytical bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub requestor: String,
    pub observed: Nanos,
    pub bound: Nanos,
    pub seed: u64,
    pub adversary: Adversary,
    pub events: Vec<SimEvent>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("mapping is infeasible: {0}")]
    Infeasible(String),
    #[error("{requestor} did not complete within the horizon of {horizon}")]
    HorizonExceeded { requestor: String, horizon: Nanos },
    #[error(
        "bound violation: {} observed {} against a bound of {} (replay seed {}, {} adversary)",
        .0.requestor, .0.observed, .0.bound, .0.seed, .0.adversary
    )]
    BoundViolation(Box<Violation>),
    #[error("at least one trial is required")]
    NoTrials,
}

/// Everything the simulator needs about one transfer.
struct TransferSim<'a> {
    name: String,
    inputs: &'a MessageTimingInputs,
    stages: Vec<String>,
    tx: (Nanos, bool, String),
    rx: (Nanos, bool, String),
    tx_bus: (Nanos, bool, String),
    rx_bus: (Nanos, bool, String),
    link: (Nanos, bool),
    period: Nanos,
}

struct TaskSim<'a> {
    name: String,
    inputs: &'a TaskTimingInputs,
    /// Per access: bus delay, work conservation and name.
    buses: Vec<(Nanos, bool, String)>,
    core: (Nanos, bool, String),
    period: Nanos,
}

fn router_names(spec: &ProblemSpec, tr: &Transfer) -> Vec<String> {
    let p = spec.platform();
    let mut names: Vec<String> = match p.noc.hop_count {
        HopConvention::Links => tr.route.iter().map(|l| format!("link {l}")).collect(),
        HopConvention::Routers => {
            let mut v = vec![tr.route[0].from];
            v.extend(tr.route.iter().map(|l| l.to));
            v.into_iter().map(|(x, y)| format!("router ({x},{y})")).collect()
        }
    };
    let hops = tr.hops as usize;
    if names.len() != hops {
        names = (0..hops).map(|i| format!("hop {i}")).collect();
    }
    names
}

struct Prepared<'a> {
    tasks: Vec<TaskSim<'a>>,
    transfers: Vec<TransferSim<'a>>,
    task_bounds: Vec<Nanos>,
    transfer_bounds: Vec<Nanos>,
}

fn prepare<'a>(spec: &'a ProblemSpec, m: &'a Mapping) -> Result<Prepared<'a>, SimError> {
    let infeasible = || {
        let why = match &m.schedule.budgets.feasibility {
            crate::scheduling::Feasibility::Infeasible(r) => r.clone(),
            crate::scheduling::Feasibility::Feasible => "no timing report".into(),
        };
        SimError::Infeasible(why)
    };
    let tuples = m.schedule.tuples.as_ref().ok_or_else(infeasible)?;
    let report = m.timing.as_ref().ok_or_else(infeasible)?;
    let p = spec.platform();
    let tasks = tuples
        .tasks
        .iter()
        .enumerate()
        .map(|(t, inputs)| {
            let core = m.bindings[t];
            let tile = p.tile(p.tile_of(core));
            let buses = memory_accesses(spec, &m.bindings, t)
                .into_iter()
                .map(|(b, _)| {
                    let pol = &tile.buses[b].policy;
                    (pol.arb_delay, pol.work_conserving, format!("bus {}.m{b}", tile.id))
                })
                .collect();
            TaskSim {
                name: spec.app.tasks[t].id.clone(),
                inputs,
                buses,
                core: (tile.core_policy.arb_delay, tile.core_policy.work_conserving, format!("core {}", p.core(core).id)),
                period: spec.app.tasks[t].period,
            }
        })
        .collect();
    let transfers = m
        .transfers
        .iter()
        .zip(&tuples.transfers)
        .map(|(tr, inputs)| {
            let src = p.tile(tr.src_tile);
            let dst = p.tile(tr.dst_tile);
            let sb = &src.buses[tr.src_bus].policy;
            let db = &dst.buses[tr.dst_bus].policy;
            TransferSim {
                name: format!("{}->{}", spec.app.messages[tr.message].id, spec.app.tasks[tr.consumer].id),
                inputs,
                stages: router_names(spec, tr),
                tx: (src.tx.arb_delay, src.tx.work_conserving, format!("tx {}", src.id)),
                rx: (dst.rx.arb_delay, dst.rx.work_conserving, format!("rx {}", dst.id)),
                tx_bus: (sb.arb_delay, sb.work_conserving, format!("bus {}.m{}", src.id, tr.src_bus)),
                rx_bus: (db.arb_delay, db.work_conserving, format!("bus {}.m{}", dst.id, tr.dst_bus)),
                link: (p.noc.link_policy.arb_delay, p.noc.link_policy.work_conserving),
                period: spec.app.messages[tr.message].period,
            }
        })
        .collect();
    Ok(Prepared {
        tasks,
        transfers,
        task_bounds: report.tasks.iter().map(|t| t.breakdown.wcrt).collect(),
        transfer_bounds: report.messages.iter().map(|t| t.breakdown.wctt).collect(),
    })
}

struct Sim {
    adversary: Adversary,
    rng: ChaCha8Rng,
    log: Option<Vec<SimEvent>>,
}

impl Sim {
    fn layout(&mut self, r: &Resource) -> Layout {
        match self.adversary {
            Adversary::None => Layout::idle(r),
            Adversary::Aligned => Layout::aligned(r),
            Adversary::Random => Layout::random(r, &mut self.rng),
        }
    }

    fn origin(&mut self, r: &Resource, release: i64) -> i64 {
        match self.adversary {
            Adversary::Random => release - self.rng.gen_range(0..r.period()),
            _ => release,
        }
    }

    fn timeline(&mut self, r: &Resource, release: i64) -> Timeline {
        let layout = self.layout(r);
        let origin = self.origin(r, release);
        Timeline::new(r, layout, origin, ChaCha8Rng::seed_from_u64(self.rng.gen()))
    }

    fn event(&mut self, time: i64, resource: &str, requestor: &str, event: impl Into<String>) {
        if let Some(log) = self.log.as_mut() {
            log.push(SimEvent { time, resource: resource.into(), requestor: requestor.into(), event: event.into() });
        }
    }

    fn logging(&self) -> bool {
        self.log.is_some()
    }

    /// Completion time of one task activation released at `release`.
    fn task(&mut self, t: &TaskSim, release: i64) -> i64 {
        let inp = t.inputs;
        let mut buses: Vec<Timeline> = inp
            .accesses
            .iter()
            .zip(&t.buses)
            .map(|(a, (d, wc, _))| {
                let r = Resource::new(&a.tuple, *d, *wc);
                self.timeline(&r, release)
            })
            .collect();
        let mut order: Vec<usize> =
            inp.accesses.iter().enumerate().flat_map(|(i, a)| std::iter::repeat_n(i, a.mem_demand as usize)).collect();
        let wcet = inp.wcet.get() as i64;
        let gaps = self.compute_split(wcet, order.len());
        if self.adversary == Adversary::Random {
            order.shuffle(&mut self.rng);
        }
        let mut now = release;
        for (k, &b) in order.iter().enumerate() {
            now += gaps[k];
            let st = inp.accesses[b].service_time.get() as i64;
            let start = buses[b].access_start(now);
            if self.logging() {
                let name = t.buses[b].2.clone();
                self.event(start, &name, &t.name, "access");
            }
            now = start + st;
        }
        now += gaps[order.len()];
        let busy = now - release;

        let (d, wc, name) = &t.core;
        let r = Resource::new(&inp.core_tuple, *d, *wc);
        let mut core = self.timeline(&r, release);
        let mut slots = Vec::new();
        let end = core.serve(release, busy, |s, e| slots.push((s, e)));
        if self.logging() {
            for (s, e) in slots {
                self.event(s, name, &t.name, format!("run until {e}"));
            }
        }
        end
    }

    /// Split of `total` computation around `n` accesses.
    fn compute_split(&mut self, total: i64, n: usize) -> Vec<i64> {
        let mut gaps = vec![0i64; n + 1];
        match self.adversary {
            Adversary::Aligned => gaps[n] = total,
            Adversary::None => {
                for (i, g) in gaps.iter_mut().enumerate() {
                    *g = total * (i as i64 + 1) / (n as i64 + 1) - total * i as i64 / (n as i64 + 1);
                }
            }
            Adversary::Random => {
                let mut cuts: Vec<i64> = (0..n).map(|_| self.rng.gen_range(0..=total)).collect();
                if self.rng.gen_bool(0.3) {
                    cuts.iter_mut().for_each(|c| *c = 0);
                }
                cuts.sort_unstable();
                let mut prev = 0;
                for (i, c) in cuts.into_iter().enumerate() {
                    gaps[i] = c - prev;
                    prev = c;
                }
                gaps[n] = total - prev;
            }
        }
        gaps
    }

    /// One network-adapter stage. The accesses run back to back through
    /// whole bus rounds of the unit; the unit arbiter serves that busy time
    /// in the message's unit slots, each one bus round long.
    fn na(&mut self, who: &str, st: &NaStage, unit: &(Nanos, bool, String), bus: &(Nanos, bool, String), t0: i64) -> i64 {
        if st.mem_demand == 0 {
            return t0;
        }
        let br = Resource::new(&st.bus_tuple, bus.0, bus.1);
        let layout = self.layout(&br);
        let mut bus_tl = Timeline::new(&br, layout, 0, ChaCha8Rng::seed_from_u64(self.rng.gen()));
        let service = st.service_time.get() as i64;
        let mut busy = 0;
        for _ in 0..st.mem_demand {
            let s = bus_tl.access_start(busy);
            if self.logging() {
                self.event(t0 + s, &bus.2, who, format!("access at round offset {s}"));
            }
            busy = s + service;
        }
        let ur = Resource::new(&st.unit_tuple, unit.0, unit.1);
        let mut unit_tl = self.timeline(&ur, t0);
        let mut slots = Vec::new();
        let end = unit_tl.serve(t0, busy, |s, e| slots.push((s, e)));
        if self.logging() {
            for (s, e) in slots {
                self.event(s, &unit.2, who, format!("unit slot until {e}"));
            }
        }
        end
    }

    /// Head-of-line flit pipeline over the routers of the route.
    fn noc(&mut self, t: &TransferSim, t0: i64) -> i64 {
        let inp = t.inputs;
        let r = Resource::new(&inp.route_tuple, t.link.0, t.link.1);
        let hop = inp.noc_cycle.get() as i64 * inp.router_delay as i64;
        let mut arrivals = vec![t0; inp.flits as usize];
        for stage in &t.stages {
            let mut tl = self.timeline(&r, t0);
            let mut next_slot = 0usize;
            for (f, a) in arrivals.iter_mut().enumerate() {
                let idx = tl.first_after(*a).max(next_slot);
                let grant = tl.window(idx).0.max(*a);
                next_slot = idx + 1;
                if self.logging() {
                    self.event(grant, stage, &t.name, format!("flit {f}"));
                }
                *a = grant + hop;
            }
        }
        arrivals.last().copied().unwrap_or(t0)
    }

    fn transfer(&mut self, t: &TransferSim, release: i64) -> i64 {
        let tx_end = self.na(&t.name, &t.inputs.tx, &t.tx, &t.tx_bus, release);
        let noc_end = self.noc(t, tx_end);
        self.na(&t.name, &t.inputs.rx, &t.rx, &t.rx_bus, noc_end)
    }
}

fn run(prep: &Prepared, scenario: &SimScenario, log: bool) -> Result<SimTrace, SimError> {
    let mut sim = Sim { adversary: scenario.adversary, rng: ChaCha8Rng::seed_from_u64(scenario.seed), log: log.then(Vec::new) };
    let n = i64::from(scenario.activations.max(1));
    let max_period = prep
        .tasks
        .iter()
        .map(|t| t.period)
        .chain(prep.transfers.iter().map(|t| t.period))
        .max()
        .unwrap_or(Nanos::ZERO);
    let horizon = scenario.horizon.unwrap_or(max_period * (n as u64 + 1)).get() as i64;
    let check = |who: &str, end: i64| {
        if end > horizon {
            Err(SimError::HorizonExceeded { requestor: who.to_string(), horizon: Nanos(horizon as u64) })
        } else {
            Ok(())
        }
    };
    let mut tasks = Vec::new();
    for t in &prep.tasks {
        let mut obs = Vec::new();
        for k in 0..n {
            let release = k * t.period.get() as i64;
            let end = sim.task(t, release);
            check(&t.name, end)?;
            obs.push(Nanos((end - release) as u64));
        }
        tasks.push(obs);
    }
    let mut transfers = Vec::new();
    for t in &prep.transfers {
        let mut obs = Vec::new();
        for k in 0..n {
            let release = k * t.period.get() as i64;
            let end = sim.transfer(t, release);
            check(&t.name, end)?;
            obs.push(Nanos((end - release) as u64));
        }
        transfers.push(obs);
    }
    Ok(SimTrace {
        seed: scenario.seed,
        adversary: scenario.adversary,
        tasks,
        transfers,
        events: sim.log.unwrap_or_default(),
    })
}

/// Simulates one scenario on a feasible mapping, with a full event log.
pub fn simulate(spec: &ProblemSpec, mapping: &Mapping, scenario: &SimScenario) -> Result<SimTrace, SimError> {
    let prep = prepare(spec, mapping)?;
    run(&prep, scenario, true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub trials: u32,
    pub seed: u64,
    pub activations: u32,
    /// Subtracted from every bound before comparison; only useful to
    /// exercise the violation path.
    pub bound_offset: Nanos,
}

impl SweepOptions {
    pub fn new(trials: u32, seed: u64) -> Self {
        Self { trials, seed, activations: 2, bound_offset: Nanos::ZERO }
    }
}

/// Worst observation of one task or transfer over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: &'static str,
    pub name: String,
    pub bound: Nanos,
    pub worst_observed: Nanos,
    pub margin: Nanos,
    /// Latency with idle competitors.
    pub zero_adversary_observed: Nanos,
    pub aligned_observed: Nanos,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub trials: u32,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn min_margin(&self) -> Option<Nanos> {
        self.rows.iter().map(|r| r.margin).min()
    }
}

/// Adversary of trial `i`: the first trial has idle competitors, the second
/// aligned ones and the rest are random.
pub fn trial_adversary(i: u32) -> Adversary {
    match i {
        0 => Adversary::None,
        1 => Adversary::Aligned,
        _ => Adversary::Random,
    }
}

/// Runs `trials` scenarios and checks every observation against its bound.
pub fn adversarial_sweep(spec: &ProblemSpec, mapping: &Mapping, trials: u32, seed: u64) -> Result<SweepReport, SimError> {
    adversarial_sweep_with(spec, mapping, &SweepOptions::new(trials, seed))
}

pub fn adversarial_sweep_with(spec: &ProblemSpec, mapping: &Mapping, opts: &SweepOptions) -> Result<SweepReport, SimError> {
    if opts.trials == 0 {
        return Err(SimError::NoTrials);
    }
    let prep = prepare(spec, mapping)?;
    let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
    let scenarios: Vec<SimScenario> = (0..opts.trials)
        .map(|i| SimScenario {
            adversary: trial_adversary(i),
            seed: seeder.gen(),
            activations: opts.activations,
            horizon: None,
        })
        .collect();
    let traces: Vec<SimTrace> = scenarios.par_iter().map(|s| run(&prep, s, false)).collect::<Result<_, _>>()?;

    let bounds: Vec<(&'static str, &str, Nanos)> = prep
        .tasks
        .iter()
        .zip(&prep.task_bounds)
        .map(|(t, &b)| ("task", t.name.as_str(), b))
        .chain(prep.transfers.iter().zip(&prep.transfer_bounds).map(|(t, &b)| ("transfer", t.name.as_str(), b)))
        .collect();
    let observed = |tr: &SimTrace, i: usize| -> Nanos {
        let v = if i < prep.tasks.len() { &tr.tasks[i] } else { &tr.transfers[i - prep.tasks.len()] };
        v.iter().copied().max().unwrap_or(Nanos::ZERO)
    };
    // First violation in trial order, replayed with its event log.
    for (s, tr) in scenarios.iter().zip(&traces) {
        for (i, &(_, name, bound)) in bounds.iter().enumerate() {
            let limit = bound.saturating_sub(opts.bound_offset);
            let obs = observed(tr, i);
            if obs > limit {
                let replay = run(&prep, s, true)?;
                return Err(SimError::BoundViolation(Box::new(Violation {
                    requestor: name.to_string(),
                    observed: obs,
                    bound: limit,
                    seed: s.seed,
                    adversary: s.adversary,
                    events: replay.events,
                })));
            }
        }
    }
    let of = |adv: Adversary, i: usize| {
        scenarios
            .iter()
            .zip(&traces)
            .filter(|(s, _)| s.adversary == adv)
            .map(|(_, tr)| observed(tr, i))
            .max()
            .unwrap_or(Nanos::ZERO)
    };
    let rows = bounds
        .iter()
        .enumerate()
        .map(|(i, &(kind, name, bound))| {
            let worst = traces.iter().map(|tr| observed(tr, i)).max().unwrap_or(Nanos::ZERO);
            SweepRow {
                kind,
                name: name.to_string(),
                bound,
                worst_observed: worst,
                margin: bound - worst,
                zero_adversary_observed: of(Adversary::None, i),
                aligned_observed: of(Adversary::Aligned, i),
            }
        })
        .collect();
    Ok(SweepReport { trials: opts.trials, seed: opts.seed, rows })
}

#[cfg(test)]
mod tests;
