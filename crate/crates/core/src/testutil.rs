// SPDX-License-Identifier: Apache-2.0

pub fn fig3a_json() -> &'static str {
    include_str!("../../../data/fig3a.json")
}

pub fn minimal_json() -> &'static str {
    r#"{
  "application": {
    "tasks": [
      { "id": "a", "period_us": 500.0, "wcet_us": { "P": 20.0 }, "mem_demand": 4 },
      { "id": "b", "period_us": 500.0, "wcet_us": { "P": 30.0 }, "mem_demand": 2 }
    ],
    "messages": [
      { "id": "ab", "src": "a", "dst": "b", "period_us": 500.0, "payload_bytes": 32, "mem_demand": 8 }
    ]
  },
  "architecture": {
    "mesh": [2, 1],
    "tile_types": [
      {
        "id": "T", "core_type": "P", "cores": 1,
        "core_policy": { "slot_len": 10000, "arb_delay": 1000, "capacity": 4, "work_conserving": true },
        "memories": [ { "service_time_ns": 50 } ],
        "bus_policy": { "slot_len": 50, "arb_delay": 0, "capacity": 3, "work_conserving": true },
        "na": {
          "tx": { "arb_delay": 0, "capacity": 4, "work_conserving": true },
          "rx": { "arb_delay": 0, "capacity": 4, "work_conserving": true }
        }
      }
    ],
    "tiles": [
      { "id": "u0", "type": "T", "pos": [0, 0] },
      { "id": "u1", "type": "T", "pos": [1, 0] }
    ],
    "noc": {
      "tau_ns": 10, "router_delay_cycles": 1,
      "link_policy": { "slot_len": 10, "arb_delay": 0, "capacity": 4, "work_conserving": true }
    }
  },
  "mapping_edges": [
    { "task": "a", "core": "c0" }, { "task": "a", "core": "c1" },
    { "task": "b", "core": "c0" }, { "task": "b", "core": "c1" }
  ]
}"#
}
