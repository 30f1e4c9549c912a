// SPDX-License-Identifier: Apache-2.0

//! Resource usage and energy objectives.

use serde::Serialize;

use crate::model::{CoreIdx, ProblemSpec};
use crate::time::Nanos;
use crate::timing::TimingReport;

use super::{Mapping, MappingError};

/// Objective values of a feasible mapping; all are minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Objectives {
    /// Makespan in nanoseconds.
    pub latency: Nanos,
    /// Allocated cores (fractional for shared cores).
    pub resource_usage: f64,
    pub energy: Option<f64>,
}

impl Objectives {
    /// `[latency in us, resource usage, energy]`.
    pub fn vector(&self) -> [f64; 3] {
        [
            self.latency.as_micros_f64(),
            self.resource_usage,
            self.energy.expect("energy objective evaluated"),
        ]
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Cores allocated by a mapping: weight over capacity for a shared core, one
/// for a reserved core and the whole tile for a reserved tile. The shared
/// part is summed over a common denominator so that the result does not
/// depend on summation order.
pub fn resource_usage(
    spec: &ProblemSpec,
    bindings: &[CoreIdx],
    reserved_cores: &[bool],
    reserved_tiles: &[bool],
    task_weights: &[u32],
) -> f64 {
    let p = spec.platform();
    let mut whole = 0u64;
    for (t, tile) in p.tiles.iter().enumerate() {
        if reserved_tiles[t] {
            whole += tile.cores.len() as u64;
        }
    }
    whole += reserved_cores.iter().filter(|&&r| r).count() as u64;
    let mut load = vec![0u64; p.cores.len()];
    for (t, &c) in bindings.iter().enumerate() {
        load[c.0] += u64::from(task_weights[t]);
    }
    let shared: Vec<(u64, u64)> = (0..p.cores.len())
        .filter(|&c| load[c] > 0 && !reserved_cores[c] && !reserved_tiles[p.cores[c].tile.0])
        .map(|c| (load[c], u64::from(p.tile(p.cores[c].tile).core_policy.capacity)))
        .collect();
    let denom = shared.iter().fold(1u64, |acc, &(_, k)| acc / gcd(acc, k) * k);
    let numer: u64 = shared.iter().map(|&(w, k)| w * (denom / k)).sum();
    whole as f64 + numer as f64 / denom as f64
}

/// Affine energy model.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyModel {
    pub e_link: f64,
    pub e_router: f64,
    pub e_bus_src: f64,
    pub e_bus_dst: f64,
    pub static_per_core: f64,
    /// Per tile.
    pub dynamic_power: Vec<f64>,
}

impl EnergyModel {
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self, MappingError> {
        let e = &spec.arch.energy;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| MappingError::MissingCoefficient(name.to_string()));
        let p = spec.platform();
        let dynamic_power = p
            .tiles
            .iter()
            .map(|t| need(t.dynamic_power, &format!("dynamic_power of core type {}", t.core_type)))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            e_link: need(e.e_link, "e_link")?,
            e_router: need(e.e_router, "e_router")?,
            e_bus_src: need(e.e_bus_src, "e_bus_src")?,
            e_bus_dst: need(e.e_bus_dst, "e_bus_dst")?,
            static_per_core: need(e.static_per_core, "static_per_core")?,
            dynamic_power,
        })
    }

    /// Energy per application period: dynamic execution energy, static
    /// energy while tasks occupy their cores, and transfer energy for every
    /// producer/consumer pair.
    pub fn energy(&self, spec: &ProblemSpec, m: &Mapping, report: &TimingReport) -> f64 {
        let p = spec.platform();
        let mut total = 0.0;
        for (t, tt) in report.tasks.iter().enumerate() {
            let tile = p.tile_of(m.bindings[t]).0;
            total += self.dynamic_power[tile] * tt.breakdown.wcet.as_micros_f64();
            total += self.static_per_core * tt.breakdown.wcrt.as_micros_f64();
        }
        let idx = spec.index();
        for (mi, msg) in spec.app.messages.iter().enumerate() {
            for &d in &idx.consumers[mi] {
                let noc = m
                    .transfers
                    .iter()
                    .find(|tr| tr.message == mi && tr.consumer == d)
                    .map(|tr| (tr.flits * tr.hops) as f64 * (self.e_link + self.e_router))
                    .unwrap_or(0.0);
                total += noc + msg.mem_demand as f64 * (self.e_bus_src + self.e_bus_dst);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{Evaluator, Genotype};
    use crate::model::parse_spec;
    use crate::testutil::fig3a_json;

    fn spec_with(energy: serde_json::Value) -> ProblemSpec {
        let mut doc: serde_json::Value = serde_json::from_str(fig3a_json()).unwrap();
        doc["architecture"]["energy"] = energy;
        parse_spec(&doc.to_string()).unwrap()
    }

    fn genotype() -> Genotype {
        Genotype { binding: vec![0, 3, 1], reserved_cores: vec![false; 6], reserved_tiles: vec![false; 2] }
    }

    #[test]
    fn zero_coefficients_leave_processor_term() {
        let spec = spec_with(serde_json::json!({
            "e_link": 0.0, "e_router": 0.0, "e_bus_src": 0.0, "e_bus_dst": 0.0, "static_per_core": 0.0
        }));
        let m = Evaluator::new(&spec).unwrap().decode(&genotype());
        let e = m.objectives.unwrap().energy.unwrap();
        // 0.05 per us of WCET: 100 + 40 + 80 us
        assert!((e - 0.05 * 220.0).abs() < 1e-9, "{e}");
    }

    #[test]
    fn noc_term() {
        let spec = spec_with(serde_json::json!({
            "e_link": 1.0, "e_router": 1.0, "e_bus_src": 0.0, "e_bus_dst": 0.0, "static_per_core": 0.0
        }));
        let m = Evaluator::new(&spec).unwrap().decode(&genotype());
        let tr = &m.transfers[0];
        // 64 bytes in 16-byte flits plus a header, across two routers
        assert_eq!((tr.flits, tr.hops), (5, 2));
        let e = m.objectives.unwrap().energy.unwrap();
        assert!((e - (0.05 * 220.0 + 20.0)).abs() < 1e-9, "{e}");
    }

    #[test]
    fn usage_examples() {
        let spec = parse_spec(fig3a_json()).unwrap();
        let b = [CoreIdx(0)];
        let none = [false; 6];
        let tiles = [false; 2];
        assert_eq!(resource_usage(&spec, &b, &none, &tiles, &[3]), 0.6);
        let mut rc = none;
        rc[0] = true;
        assert_eq!(resource_usage(&spec, &b, &rc, &tiles, &[3]), 1.0);
        assert_eq!(resource_usage(&spec, &b, &none, &[true, false], &[3]), 3.0);
    }
}
