// SPDX-License-Identifier: Apache-2.0

//! Resolved, index-based view of the architecture graph.
//!
//! Cores get global ids `c0, c1, ...` in tile declaration order. Arbitration
//! delays are already extended for late memory accesses: every bus delay by
//! its memory's service time and every core's context-switch delay by the
//! largest service time on its tile.

use std::collections::HashSet;

use crate::arbitration::ArbitrationPolicy;
use crate::time::Nanos;

use super::{ArchitectureGraph, BusWeights, EnergyCoefficients, NaPolicy, NocConfig, SpecError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoreIdx(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TileIdx(pub usize);

/// A memory together with the bus in front of it.
#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub service_time: Nanos,
    /// Bus policy with the delay already extended by `service_time`.
    pub policy: ArbitrationPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Core {
    pub id: String,
    pub tile: TileIdx,
    pub core_type: String,
    /// Memory (bus index within the tile) holding this core's private data.
    pub home_memory: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    pub id: String,
    pub pos: (u32, u32),
    pub core_type: String,
    pub cores: Vec<CoreIdx>,
    pub buses: Vec<Bus>,
    /// Core policy with the context-switch delay already extended.
    pub core_policy: ArbitrationPolicy,
    pub bus_weights: BusWeights,
    pub tx: NaPolicy,
    pub rx: NaPolicy,
    pub dynamic_power: Option<f64>,
}

impl Tile {
    pub fn max_service_time(&self) -> Nanos {
        self.buses.iter().map(|b| b.service_time).max().unwrap_or(Nanos::ZERO)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Platform {
    pub mesh: (u32, u32),
    pub tiles: Vec<Tile>,
    pub cores: Vec<Core>,
    pub noc: NocConfig,
    pub energy: EnergyCoefficients,
}

fn check_policy(what: &str, p: &ArbitrationPolicy) -> Result<(), SpecError> {
    if p.slot_len.is_zero() {
        return Err(SpecError::invalid(format!("{what}: slot_len must be positive")));
    }
    if p.capacity == 0 {
        return Err(SpecError::invalid(format!("{what}: capacity must be at least 1")));
    }
    Ok(())
}

impl Platform {
    pub fn build(arch: &ArchitectureGraph) -> Result<Self, SpecError> {
        let [w, h] = arch.mesh;
        if w == 0 || h == 0 {
            return Err(SpecError::invalid("mesh dimensions must be positive"));
        }
        let noc = &arch.noc;
        if noc.tau_ns.is_zero() {
            return Err(SpecError::invalid("noc: tau_ns must be positive"));
        }
        check_policy("noc link_policy", &noc.link_policy)?;
        if noc.link_policy.slot_len != noc.tau_ns {
            return Err(SpecError::invalid(format!(
                "noc link_policy: slot_len {} differs from tau_ns {}",
                noc.link_policy.slot_len.get(),
                noc.tau_ns.get()
            )));
        }
        if noc.flit_payload_bytes == 0 {
            return Err(SpecError::invalid("noc: flit_payload_bytes must be positive"));
        }

        let mut type_ids = HashSet::new();
        for tt in &arch.tile_types {
            if !type_ids.insert(tt.id.as_str()) {
                return Err(SpecError::invalid(format!("duplicate tile type {}", tt.id)));
            }
            let name = format!("tile type {}", tt.id);
            if tt.cores == 0 {
                return Err(SpecError::invalid(format!("{name}: needs at least one core")));
            }
            if tt.memories.is_empty() {
                return Err(SpecError::invalid(format!("{name}: needs at least one memory")));
            }
            check_policy(&format!("{name} core_policy"), &tt.core_policy)?;
            check_policy(&format!("{name} bus_policy"), &tt.bus_policy)?;
            let bw = tt.bus_weights;
            if bw.core == 0 || bw.tx == 0 || bw.rx == 0 {
                return Err(SpecError::invalid(format!("{name}: bus weights must be at least 1")));
            }
            let masters = tt.cores * bw.core + bw.tx + bw.rx;
            for (i, mem) in tt.memories.iter().enumerate() {
                if mem.service_time.is_zero() {
                    return Err(SpecError::invalid(format!("{name} memory {i}: service time must be positive")));
                }
                let bp = mem.bus_policy.as_ref().unwrap_or(&tt.bus_policy);
                check_policy(&format!("{name} memory {i} bus_policy"), bp)?;
                if bp.slot_len < mem.service_time {
                    return Err(SpecError::invalid(format!(
                        "{name} memory {i}: bus slot shorter than service time"
                    )));
                }
                if bp.capacity < masters {
                    return Err(SpecError::invalid(format!(
                        "{name} memory {i}: bus capacity {} below master weights {masters}",
                        bp.capacity
                    )));
                }
            }
            if tt.na.tx.capacity == 0 || tt.na.rx.capacity == 0 {
                return Err(SpecError::invalid(format!("{name}: NA capacity must be at least 1")));
            }
        }

        if arch.tiles.len() != (w as usize) * (h as usize) {
            return Err(SpecError::invalid(format!(
                "mesh {w}x{h} needs {} tiles, found {}",
                w * h,
                arch.tiles.len()
            )));
        }
        let mut tile_ids = HashSet::new();
        let mut positions = HashSet::new();
        let mut tiles = Vec::with_capacity(arch.tiles.len());
        let mut cores = Vec::new();
        for (ti, decl) in arch.tiles.iter().enumerate() {
            if !tile_ids.insert(decl.id.as_str()) {
                return Err(SpecError::invalid(format!("duplicate tile {}", decl.id)));
            }
            let [x, y] = decl.pos;
            if x >= w || y >= h {
                return Err(SpecError::invalid(format!("tile {} lies outside the mesh", decl.id)));
            }
            if !positions.insert((x, y)) {
                return Err(SpecError::invalid(format!("tile {} reuses position ({x},{y})", decl.id)));
            }
            let tt = arch
                .tile_types
                .iter()
                .find(|t| t.id == decl.tile_type)
                .ok_or_else(|| SpecError::invalid(format!("tile type {} not found", decl.tile_type)))?;
            let buses: Vec<Bus> = tt
                .memories
                .iter()
                .map(|m| Bus {
                    service_time: m.service_time,
                    policy: m
                        .bus_policy
                        .unwrap_or(tt.bus_policy)
                        .with_extra_delay(m.service_time),
                })
                .collect();
            let max_st = buses.iter().map(|b| b.service_time).max().unwrap_or(Nanos::ZERO);
            let mut tile_cores = Vec::new();
            for local in 0..tt.cores as usize {
                let idx = CoreIdx(cores.len());
                cores.push(Core {
                    id: format!("c{}", idx.0),
                    tile: TileIdx(ti),
                    core_type: tt.core_type.clone(),
                    home_memory: local % buses.len(),
                });
                tile_cores.push(idx);
            }
            tiles.push(Tile {
                id: decl.id.clone(),
                pos: (x, y),
                core_type: tt.core_type.clone(),
                cores: tile_cores,
                buses,
                core_policy: tt.core_policy.with_extra_delay(max_st),
                bus_weights: tt.bus_weights,
                tx: tt.na.tx,
                rx: tt.na.rx,
                dynamic_power: tt.dynamic_power,
            });
        }
        Ok(Self {
            mesh: (w, h),
            tiles,
            cores,
            noc: arch.noc.clone(),
            energy: arch.energy.clone(),
        })
    }

    pub fn core_index(&self, id: &str) -> Option<CoreIdx> {
        let n: usize = id.strip_prefix('c')?.parse().ok()?;
        // reject forms like "c01"
        (n < self.cores.len() && self.cores[n].id == id).then_some(CoreIdx(n))
    }

    pub fn core(&self, c: CoreIdx) -> &Core {
        &self.cores[c.0]
    }

    pub fn tile(&self, t: TileIdx) -> &Tile {
        &self.tiles[t.0]
    }

    pub fn tile_of(&self, c: CoreIdx) -> TileIdx {
        self.cores[c.0].tile
    }

    pub fn tile_at(&self, pos: (u32, u32)) -> Option<TileIdx> {
        self.tiles.iter().position(|t| t.pos == pos).map(TileIdx)
    }
}
