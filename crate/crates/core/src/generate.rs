// SPDX-License-Identifier: Apache-2.0

//! Synthetic benchmark specifications.
//!
//! The architecture follows the evaluation platform: a mesh of tiles of
//! three types, each tile with its own core type, one shared memory and a
//! network adapter, all arbitrated by WRR. Applications are random task
//! DAGs of a requested size.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitration::ArbitrationPolicy;
use crate::model::{
    ApplicationGraph, ArchitectureGraph, BusWeights, EnergyCoefficients, HopConvention, MappingEdge, MemoryDecl,
    Message, NaPolicies, NaPolicy, NocConfig, Platform, ProblemSpec, SpecError, Task, TileDecl, TileType,
};
use crate::time::Nanos;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Size and seed of a generated benchmark.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub tasks: usize,
    pub messages: usize,
    pub mesh: (u32, u32),
    pub cores_per_tile: u32,
    pub seed: u64,
}

/// Application sizes of the evaluation benchmarks.
pub const NAMED_PROFILES: [(&str, usize, usize); 4] =
    [("networking", 7, 9), ("consumer", 11, 12), ("telecom", 14, 20), ("automotive", 18, 21)];

impl Profile {
    pub fn named(name: &str, mesh: (u32, u32), seed: u64) -> Option<Self> {
        NAMED_PROFILES
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|&(_, tasks, messages)| Self { tasks, messages, mesh, cores_per_tile: 4, seed })
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: String| Err(GenerateError::InvalidProfile(m));
        if self.tasks < 1 {
            return bad("at least one task is required".into());
        }
        if self.mesh.0 < 1 || self.mesh.1 < 1 {
            return bad("mesh dimensions must be positive".into());
        }
        if self.cores_per_tile < 1 {
            return bad("tiles need at least one core".into());
        }
        let cap = self.tasks * (self.tasks - 1);
        if self.messages > cap {
            return bad(format!("{} messages exceed the capacity of {cap} for {} tasks", self.messages, self.tasks));
        }
        Ok(())
    }
}

const TILE_TYPES: [(&str, f64); 3] = [("A", 0.05), ("B", 0.08), ("C", 0.03)];

/// Evaluation platform: WRR cores (K=10, S=50 us, D=10 us), one memory per
/// tile with a 70 ns service time and bus slot, one bus weight per master,
/// TX/RX units with K=10 and links with K=10 and a 10 ns cycle.
pub fn reference_architecture(mesh: (u32, u32), cores_per_tile: u32) -> ArchitectureGraph {
    let core_policy = ArbitrationPolicy::wrr(Nanos::from_micros(50), Nanos::from_micros(10), 10);
    let bus_policy = ArbitrationPolicy::wrr(Nanos(70), Nanos::ZERO, cores_per_tile + 2);
    let unit = NaPolicy { arb_delay: Nanos::ZERO, capacity: 10, work_conserving: true };
    let tile_types = TILE_TYPES
        .iter()
        .map(|&(id, power)| TileType {
            id: id.to_string(),
            core_type: id.to_string(),
            cores: cores_per_tile,
            core_policy,
            memories: vec![MemoryDecl { service_time: Nanos(70), bus_policy: None }],
            bus_policy,
            bus_weights: BusWeights { core: 1, tx: 1, rx: 1 },
            na: NaPolicies { tx: unit, rx: unit },
            dynamic_power: Some(power),
        })
        .collect();
    let mut tiles = Vec::new();
    for y in 0..mesh.1 {
        for x in 0..mesh.0 {
            let i = tiles.len();
            tiles.push(TileDecl { id: format!("u{i}"), tile_type: TILE_TYPES[i % 3].0.to_string(), pos: [x, y] });
        }
    }
    ArchitectureGraph {
        mesh: [mesh.0, mesh.1],
        tile_types,
        tiles,
        noc: NocConfig {
            tau_ns: Nanos(10),
            router_delay_cycles: 2,
            link_policy: ArbitrationPolicy::wrr(Nanos(10), Nanos::ZERO, 10),
            flit_payload_bytes: 16,
            header_flits: 1,
            hop_count: HopConvention::Routers,
        },
        energy: EnergyCoefficients {
            e_link: Some(0.5),
            e_router: Some(1.0),
            e_bus_src: Some(0.01),
            e_bus_dst: Some(0.01),
            static_per_core: Some(0.001),
        },
    }
}

/// Common period of the generated applications.
pub const APP_PERIOD_US: u64 = 5000;

/// Random application of the profile's size on the evaluation platform.
/// Tasks are mappable to every core; their WCET differs per core type.
pub fn generate(profile: &Profile) -> Result<ProblemSpec, GenerateError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let arch = reference_architecture(profile.mesh, profile.cores_per_tile);
    let period = Nanos::from_micros(APP_PERIOD_US);

    let tasks: Vec<Task> = (0..profile.tasks)
        .map(|i| {
            let base = rng.gen_range(50.0..400.0);
            let wcet: BTreeMap<String, Nanos> = TILE_TYPES
                .iter()
                .map(|&(ty, _)| {
                    let us: f64 = base * rng.gen_range(0.6..1.6);
                    (ty.to_string(), Nanos::from_micros_f64(us.round()))
                })
                .collect();
            Task { id: format!("t{i}"), period, wcet, mem_demand: rng.gen_range(10..200) }
        })
        .collect();

    // A spanning tree first so that the graph is connected, then extra
    // forward edges with at most two messages per task pair.
    let n = profile.tasks;
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|j| (rng.gen_range(0..j), j)).take(profile.messages).collect();
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &p in &pairs {
        *count.entry(p).or_default() += 1;
    }
    while pairs.len() < profile.messages {
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        let c = count.entry((i, j)).or_default();
        if *c < 2 {
            *c += 1;
            pairs.push((i, j));
        }
    }
    let messages: Vec<Message> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let payload = rng.gen_range(16..=1024u64);
            Message {
                id: format!("m{k}"),
                src: format!("t{i}"),
                dst: vec![format!("t{j}")],
                period,
                payload_bytes: payload,
                mem_demand: payload.div_ceil(8),
            }
        })
        .collect();
    let mut app = ApplicationGraph { tasks, messages, edges: Vec::new() };
    app.edges = app.derived_edges();

    let platform = Platform::build(&arch)?;
    let mapping_edges = app
        .tasks
        .iter()
        .flat_map(|t| platform.cores.iter().map(move |c| MappingEdge { task: t.id.clone(), core: c.id.clone() }))
        .collect();
    Ok(ProblemSpec::new(app, arch, mapping_edges)?)
}
