// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::arbitration::ArbitrationTuple;
use crate::mapping::{Evaluator, Genotype};
use crate::model::parse_spec;
use crate::testutil::fig3a_json;
use crate::timing::{self, BusAccess};

fn tup(s: u64, w: u32, k: u32, d: u64) -> ArbitrationTuple {
    ArbitrationTuple::new(Nanos(s), w, Nanos(u64::from(k) * (s + d)))
}

fn sim(adv: Adversary, seed: u64) -> Sim {
    Sim { adversary: adv, rng: ChaCha8Rng::seed_from_u64(seed), log: None }
}

fn task_sim<'a>(inputs: &'a TaskTimingInputs, bus_d: u64, core_d: u64, wc: bool) -> TaskSim<'a> {
    TaskSim {
        name: "t".into(),
        inputs,
        buses: inputs.accesses.iter().map(|_| (Nanos(bus_d), wc, "bus".into())).collect(),
        core: (Nanos(core_d), wc, "core".into()),
        period: Nanos(1_000_000_000),
    }
}

fn worst_task(t: &TaskSim, seeds: u64) -> i64 {
    let mut worst = 0;
    for seed in 0..seeds {
        for adv in [Adversary::None, Adversary::Aligned, Adversary::Random] {
            worst = worst.max(sim(adv, seed).task(t, 0));
        }
    }
    worst
}

#[test]
fn isolated_task_sees_no_interference() {
    let inp = TaskTimingInputs::single(Nanos(1000), 7, Nanos(20), tup(100, 1, 4, 20), tup(20, 1, 3, 20));
    let t = task_sim(&inp, 20, 20, true);
    assert_eq!(sim(Adversary::None, 0).task(&t, 0), 1000 + 7 * 20);
}

#[test]
fn fig4_task_under_adversary() {
    // (1.0, 3, 6.0) in microseconds, the two competing slots occupied.
    let inp = TaskTimingInputs::single(Nanos(2500), 0, Nanos(1), tup(1000, 3, 6, 0), tup(1, 1, 1, 0));
    let bound = timing::wcrt(&inp).wcrt.get() as i64;
    let t = task_sim(&inp, 0, 0, true);
    let worst = worst_task(&t, 50);
    assert!(worst <= bound, "{worst} > {bound}");
    assert_eq!(sim(Adversary::Aligned, 0).task(&t, 0), 3000 + 2500);
    assert_eq!(bound, 5500);
}

fn message(flits: u64, hops: u64, w: u32, k: u32) -> MessageTimingInputs {
    let na = NaStage {
        mem_demand: 4,
        service_time: Nanos(70),
        bus_tuple: tup(70, 1, 6, 70),
        unit_tuple: tup(840, w, k, 0),
    };
    MessageTimingInputs {
        flits,
        route_hops: hops,
        route_tuple: tup(10, w, k, 0),
        tx: na,
        rx: na,
        noc_cycle: Nanos(10),
        router_delay: 2,
    }
}

fn transfer_sim(inputs: &MessageTimingInputs, wc: bool) -> TransferSim<'_> {
    let d = (Nanos(0), wc, "unit".to_string());
    let b = (Nanos(70), wc, "bus".to_string());
    TransferSim {
        name: "m".into(),
        inputs,
        stages: (0..inputs.route_hops).map(|i| format!("hop {i}")).collect(),
        tx: d.clone(),
        rx: d,
        tx_bus: b.clone(),
        rx_bus: b,
        link: (Nanos(0), wc),
        period: Nanos(1_000_000_000),
    }
}

#[test]
fn contended_link_message() {
    let inp = message(5, 3, 2, 10);
    let bound = timing::wctt(&inp).wctt.get() as i64;
    let t = transfer_sim(&inp, true);
    for seed in 0..100 {
        for adv in [Adversary::Aligned, Adversary::Random] {
            let obs = sim(adv, seed).transfer(&t, 0);
            assert!(obs <= bound, "{adv} seed {seed}: {obs} > {bound}");
        }
    }
    let quiet = sim(Adversary::None, 0).transfer(&t, 0);
    assert_eq!(quiet, 2 * 4 * 70 + (5 - 1 + 3 * 2) * 10);
}

fn fig3a_mapping(spec: &ProblemSpec, g: &Genotype) -> Mapping {
    Evaluator::new(spec).unwrap().decode(g)
}

#[test]
fn zero_adversary_margin_is_interference() {
    let spec = parse_spec(fig3a_json()).unwrap();
    let g = Genotype { binding: vec![0, 3, 1], reserved_cores: vec![false; 6], reserved_tiles: vec![false; 2] };
    let m = fig3a_mapping(&spec, &g);
    let trace = simulate(&spec, &m, &SimScenario::new(Adversary::None, 7)).unwrap();
    let report = m.timing.as_ref().unwrap();
    for (obs, tt) in trace.tasks.iter().zip(&report.tasks) {
        let b = tt.breakdown;
        for &o in obs {
            assert_eq!(b.wcrt - o, b.i_bus + b.i_core);
        }
    }
    assert!(!trace.events.is_empty());
}

#[test]
fn sweep_is_sound_and_replayable() {
    let spec = parse_spec(fig3a_json()).unwrap();
    let eval = Evaluator::new(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 10 {
        let g = Genotype {
            binding: (0..3).map(|_| rng.gen_range(0..6)).collect(),
            reserved_cores: (0..6).map(|_| rng.gen_bool(0.3)).collect(),
            reserved_tiles: (0..2).map(|_| rng.gen_bool(0.3)).collect(),
        };
        let m = eval.decode(&g);
        if !m.is_feasible() {
            continue;
        }
        let r = adversarial_sweep(&spec, &m, 60, checked).unwrap();
        assert!(r.rows.iter().all(|row| row.worst_observed <= row.bound));
        checked += 1;
    }
    let g = Genotype { binding: vec![0, 3, 1], reserved_cores: vec![false; 6], reserved_tiles: vec![false; 2] };
    let m = eval.decode(&g);
    let s = SimScenario::new(Adversary::Random, 11);
    assert_eq!(simulate(&spec, &m, &s).unwrap(), simulate(&spec, &m, &s).unwrap());
}

#[test]
fn violation_carries_replay() {
    let spec = parse_spec(fig3a_json()).unwrap();
    let g = Genotype { binding: vec![0, 3, 1], reserved_cores: vec![false; 6], reserved_tiles: vec![false; 2] };
    let m = fig3a_mapping(&spec, &g);
    let opts = SweepOptions { bound_offset: Nanos(1_000_000_000), ..SweepOptions::new(5, 1) };
    match adversarial_sweep_with(&spec, &m, &opts) {
        Err(SimError::BoundViolation(v)) => {
            assert!(!v.events.is_empty());
            let again = simulate(&spec, &m, &SimScenario::new(v.adversary, v.seed)).unwrap();
            assert_eq!(again.events, v.events);
        }
        other => panic!("expected a violation, got {other:?}"),
    }
    assert!(matches!(adversarial_sweep(&spec, &m, 0, 0), Err(SimError::NoTrials)));
}

#[test]
fn aligned_no_better_than_idle() {
    let spec = parse_spec(fig3a_json()).unwrap();
    let g = Genotype { binding: vec![0, 1, 3], reserved_cores: vec![false; 6], reserved_tiles: vec![false; 2] };
    let m = fig3a_mapping(&spec, &g);
    let r = adversarial_sweep(&spec, &m, 20, 5).unwrap();
    for row in &r.rows {
        assert!(row.aligned_observed >= row.zero_adversary_observed, "{row:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn task_bound_is_sound(
        wcet in 1u64..5000,
        mds in prop::collection::vec(0u64..12, 1..3),
        st in 1u64..30,
        extra_slot in 0u64..40,
        bus_w in 1u32..4, bus_k in 0u32..4, bus_d in 0u64..20,
        core_s in 50u64..800, core_w in 1u32..4, core_k in 0u32..5, core_d in 0u64..60,
        wc in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let bus_s = st + extra_slot;
        let accesses = mds.iter().map(|&md| BusAccess {
            mem_demand: md,
            service_time: Nanos(st),
            tuple: tup(bus_s, bus_w, bus_w + bus_k, bus_d + st),
        }).collect();
        let inp = TaskTimingInputs { wcet: Nanos(wcet), accesses, core_tuple: tup(core_s, core_w, core_w + core_k, core_d + st) };
        let bound = timing::wcrt(&inp).wcrt.get() as i64;
        let t = task_sim(&inp, bus_d + st, core_d + st, wc);
        for adv in [Adversary::None, Adversary::Aligned, Adversary::Random] {
            for k in 0..4 {
                let obs = sim(adv, seed.wrapping_add(k)).task(&t, 0);
                prop_assert!(obs <= bound, "{adv}: {obs} > {bound}");
            }
        }
    }

    #[test]
    fn message_bound_is_sound(
        flits in 1u64..12, hops in 1u64..6, w in 1u32..4, k in 0u32..8,
        md in 0u64..20, st in 1u64..50, extra in 0u64..60, bus_w in 1u32..3, bus_k in 0u32..4,
        unit_w in 1u32..3, unit_k in 0u32..4, unit_d in 0u64..30, link_d in 0u64..5, router in 0u64..4,
        wc in any::<bool>(), seed in any::<u64>(),
    ) {
        let bus_s = st + extra;
        let bus_tuple = tup(bus_s, bus_w, bus_w + bus_k, st);
        let unit_tuple = tup(bus_tuple.period.get(), unit_w, unit_w + unit_k, unit_d);
        let na = NaStage { mem_demand: md, service_time: Nanos(st), bus_tuple, unit_tuple };
        let inp = MessageTimingInputs {
            flits, route_hops: hops, route_tuple: tup(10, w, w + k, link_d), tx: na, rx: na,
            noc_cycle: Nanos(10), router_delay: router,
        };
        let bound = timing::wctt(&inp).wctt.get() as i64;
        let d = (Nanos(unit_d), wc, "unit".to_string());
        let b = (Nanos(st), wc, "bus".to_string());
        let t = TransferSim {
            name: "m".into(), inputs: &inp,
            stages: (0..hops).map(|i| format!("hop {i}")).collect(),
            tx: d.clone(), rx: d, tx_bus: b.clone(), rx_bus: b, link: (Nanos(link_d), wc),
            period: Nanos(1_000_000_000),
        };
        for adv in [Adversary::None, Adversary::Aligned, Adversary::Random] {
            for s in 0..4 {
                let obs = sim(adv, seed.wrapping_add(s)).transfer(&t, 0);
                prop_assert!(obs <= bound, "{adv}: {obs} > {bound}");
            }
        }
    }
}
