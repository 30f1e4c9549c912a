// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Every test prints one `PASS` or `FAIL` line for its
//! criterion; run with `--nocapture` to see them.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use isoexplore::arbitration::{make_tuple, reduce_capacity, ArbitrationPolicy, ArbitrationTuple};
use isoexplore::dse::{self, epsilon_dominance, DseConfig, Mode, Objective};
use isoexplore::generate::{generate, Profile};
use isoexplore::mapping::{transfers_for, Evaluator, Genotype, IsolationScheme, Mapping, MappingFile};
use isoexplore::model::{emit_spec, parse_spec, CoreIdx, ProblemSpec};
use isoexplore::scheduling::{min_message_weight, min_task_weight, task_inputs, transfer_inputs, Capacities};
use isoexplore::simoracle::adversarial_sweep;
use isoexplore::timing::{self, MessageTimingInputs, NaStage, TaskTimingInputs};
use isoexplore::Nanos;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> ProblemSpec {
    parse_spec(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

fn verdict(n: u32, title: &str, start: Instant, result: Result<String, String>) {
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => println!("criterion {n} PASS {title}: {detail} ({secs:.1} s)"),
        Err(detail) => {
            println!("criterion {n} FAIL {title}: {detail} ({secs:.1} s)");
            panic!("criterion {n} failed: {detail}");
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Independent oracles, written with loops instead of the closed forms.

fn ceil_by_count(num: u64, den: u64) -> u64 {
    let mut k = 0;
    while k * den < num {
        k += 1;
    }
    k
}

fn oracle_wcrt(wcet: u64, md: u64, st: u64, bus: (u64, u64, u64), core: (u64, u64, u64)) -> (u64, u64, u64) {
    let (sb, wb, pb) = bus;
    let (sc, wc, pc) = core;
    let active = wcet + md * st;
    let n = if md == 0 { 0 } else { md.min(ceil_by_count(active, sb)) };
    let mut i_bus = 0;
    for _ in 0..n {
        i_bus += pb - wb * sb;
    }
    let periods = ceil_by_count(active + i_bus, wc * sc);
    let i_core = periods * (pc - wc * sc);
    (i_bus, i_core, active + i_bus + i_core)
}

fn oracle_na(md: u64, st: u64, bus: (u64, u64, u64), unit: (u64, u64, u64)) -> u64 {
    let (sb, wb, pb) = bus;
    let (su, wu, pu) = unit;
    assert_eq!(su, pb);
    let per_slot = ceil_by_count(sb, st);
    let n = ceil_by_count(md, per_slot);
    let bus_periods = ceil_by_count(n, wb);
    let unit_periods = ceil_by_count(bus_periods, wu);
    md * st + bus_periods * (pb - wb * sb) + unit_periods * (pu - wu * su)
}

fn oracle_noc(flits: u64, hops: u64, tau: u64, d_router: u64, w: u64, p: u64) -> u64 {
    (flits - 1 + hops * d_router) * tau + (ceil_by_count(flits, w) - 1 + hops) * (p - w * tau)
}

fn triple(t: &ArbitrationTuple) -> (u64, u64, u64) {
    (t.slot_len.get(), u64::from(t.weight), t.period.get())
}

fn random_tuple(rng: &mut ChaCha8Rng, slot: u64) -> ArbitrationTuple {
    let k = rng.gen_range(1..=10);
    let policy = ArbitrationPolicy::wrr(Nanos::new(slot), Nanos::new(rng.gen_range(0..=slot / 2)), k);
    let w = rng.gen_range(1..=k);
    let eff = rng.gen_range(w..=k);
    make_tuple(&policy, w, eff).unwrap()
}

#[test]
fn criterion_1_tuple_golden_values() {
    let start = Instant::now();
    let res = (|| {
        let policy = ArbitrationPolicy::wrr(Nanos::from_micros(1), Nanos::new(200), 5);
        let shared = make_tuple(&policy, 3, 5).map_err(|e| e.to_string())?;
        let reduced = make_tuple(&policy, 3, reduce_capacity(&policy, 3)).map_err(|e| e.to_string())?;
        let want = (ArbitrationTuple::new(Nanos::new(1000), 3, Nanos::new(6000)), ArbitrationTuple::new(Nanos::new(1000), 3, Nanos::new(3600)));
        check((shared, reduced) == want, || format!("got {shared:?} and {reduced:?}"))?;
        Ok("(1.0 us, 3, 6.0 us) and reduced (1.0 us, 3, 3.6 us)".to_string())
    })();
    verdict(1, "arbitration golden values", start, res);
}

#[test]
fn criterion_2_formula_oracles() {
    let start = Instant::now();
    let res = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        const SETS: usize = 200;
        for i in 0..SETS {
            // Task side: N, I_bus, I_core and the WCRT sum.
            let st = rng.gen_range(1..=100);
            let sb = st * rng.gen_range(1..=8);
            let bus = random_tuple(&mut rng, sb);
            let core_slot = rng.gen_range(1_000..=60_000);
            let core = random_tuple(&mut rng, core_slot);
            let wcet = rng.gen_range(0..=500_000);
            let md = rng.gen_range(0..=2_000);
            let got = timing::wcrt(&TaskTimingInputs::single(Nanos::new(wcet), md, Nanos::new(st), core, bus));
            let (i_bus, i_core, total) = oracle_wcrt(wcet, md, st, triple(&bus), triple(&core));
            check(
                (got.i_bus.get(), got.i_core.get(), got.wcrt.get()) == (i_bus, i_core, total),
                || format!("WCRT set {i}: {got:?} vs oracle ({i_bus}, {i_core}, {total})"),
            )?;
            let n = timing::bus_slots_needed(Nanos::new(wcet), md, Nanos::new(st), Nanos::new(sb));
            check(n * (bus.period.get() - bus.weight as u64 * sb) == i_bus, || format!("N set {i}"))?;

            // Message side: TX/RX latency, NoC latency and the WCTT sum.
            let na = |rng: &mut ChaCha8Rng| {
                let st = rng.gen_range(1..=100);
                let bus_slot = st * rng.gen_range(1..=8);
                let bus_tuple = random_tuple(rng, bus_slot);
                let k = rng.gen_range(1..=10);
                let unit_policy = ArbitrationPolicy::wrr(bus_tuple.period, Nanos::new(rng.gen_range(0..=50)), k);
                let w = rng.gen_range(1..=k);
                let unit_tuple = make_tuple(&unit_policy, w, rng.gen_range(w..=k)).unwrap();
                NaStage { mem_demand: rng.gen_range(1..=500), service_time: Nanos::new(st), bus_tuple, unit_tuple }
            };
            let tx = na(&mut rng);
            let rx = na(&mut rng);
            let tau = rng.gen_range(1..=20);
            let route_tuple = random_tuple(&mut rng, tau);
            let input = MessageTimingInputs {
                flits: rng.gen_range(1..=100),
                route_hops: rng.gen_range(1..=8),
                route_tuple,
                tx,
                rx,
                noc_cycle: Nanos::new(tau),
                router_delay: rng.gen_range(0..=4),
            };
            let got = timing::wctt(&input);
            let o_tx = oracle_na(tx.mem_demand, tx.service_time.get(), triple(&tx.bus_tuple), triple(&tx.unit_tuple));
            let o_rx = oracle_na(rx.mem_demand, rx.service_time.get(), triple(&rx.bus_tuple), triple(&rx.unit_tuple));
            let o_noc = oracle_noc(
                input.flits,
                input.route_hops,
                tau,
                input.router_delay,
                u64::from(route_tuple.weight),
                route_tuple.period.get(),
            );
            check(
                (got.d_tx.get(), got.d_noc.get(), got.d_rx.get(), got.wctt.get()) == (o_tx, o_noc, o_rx, o_tx + o_noc + o_rx),
                || format!("WCTT set {i}: {got:?} vs oracle ({o_tx}, {o_noc}, {o_rx})"),
            )?;
        }
        Ok(format!("{SETS} task sets and {SETS} message sets match exactly"))
    })();
    verdict(2, "formula oracle suite", start, res);
}

fn small_mesh_spec(seed: u64) -> ProblemSpec {
    let profile = Profile { tasks: 5, messages: 6, mesh: (2, 2), cores_per_tile: 2, seed };
    generate(&profile).unwrap()
}

fn random_genotype(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> Genotype {
    let p = spec.platform();
    Genotype {
        binding: spec.index().candidates.iter().map(|c| rng.gen_range(0..c.len() as u32)).collect(),
        reserved_cores: (0..p.cores.len()).map(|_| rng.gen_bool(0.3)).collect(),
        reserved_tiles: (0..p.tiles.len()).map(|_| rng.gen_bool(0.15)).collect(),
    }
}

#[test]
fn criterion_3_soundness_sweep() {
    let start = Instant::now();
    let res = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut mappings = 0;
        let mut worst_margin = u64::MAX;
        let mut attempts = 0;
        while mappings < 20 {
            attempts += 1;
            check(attempts < 2_000, || "too few feasible mappings".into())?;
            let spec = small_mesh_spec(rng.gen());
            let eval = Evaluator::new(&spec).unwrap();
            let m = eval.decode(&random_genotype(&spec, &mut rng));
            if !m.is_feasible() {
                continue;
            }
            let report = adversarial_sweep(&spec, &m, 100, rng.gen()).map_err(|e| e.to_string())?;
            worst_margin = worst_margin.min(report.min_margin().map_or(u64::MAX, Nanos::get));
            mappings += 1;
        }
        Ok(format!("{mappings} mappings x 100 trials on a 2x2 mesh, no violation, smallest margin {worst_margin} ns"))
    })();
    verdict(3, "soundness property", start, res);
}

#[test]
fn criterion_4_weight_minimality() {
    let start = Instant::now();
    let res = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut tasks, mut messages, mut above_one) = (0, 0, 0);
        while tasks < 100 || messages < 100 {
            // Tighter periods make weights above one common.
            let spec = small_mesh_spec(rng.gen());
            let mut doc: serde_json::Value = serde_json::from_str(&emit_spec(&spec)).unwrap();
            for key in ["tasks", "messages"] {
                for item in doc["application"][key].as_array_mut().unwrap() {
                    item["period_us"] = serde_json::json!(rng.gen_range(200..3000) as f64);
                }
            }
            let spec = parse_spec(&doc.to_string()).unwrap();
            let bindings: Vec<CoreIdx> = spec
                .index()
                .candidates
                .iter()
                .map(|c| c[rng.gen_range(0..c.len())].core)
                .collect();
            let caps = Capacities::full(&spec);
            for t in 0..spec.app.tasks.len() {
                let period = spec.app.tasks[t].period;
                let fits = |w| timing::wcrt(&task_inputs(&spec, &bindings, &caps, t, w)).wcrt <= period;
                let Some(w) = min_task_weight(&spec, &bindings, t) else {
                    check(!fits(caps.core[bindings[t].0]), || format!("task {t}: full capacity fits"))?;
                    continue;
                };
                check(fits(w) && (w == 1 || !fits(w - 1)), || format!("task {t}: weight {w} not minimal"))?;
                tasks += 1;
                above_one += usize::from(w > 1);
            }
            for tr in transfers_for(&spec, &bindings) {
                let period = spec.app.messages[tr.message].period;
                let fits = |w| timing::wctt(&transfer_inputs(&spec, &caps, &tr, w)).wctt <= period;
                let Some(w) = min_message_weight(&spec, &tr) else { continue };
                check(fits(w) && (w == 1 || !fits(w - 1)), || format!("message {}: weight {w} not minimal", tr.message))?;
                messages += 1;
                above_one += usize::from(w > 1);
            }
        }
        Ok(format!("{tasks} task and {messages} message instances, {above_one} with weight above one"))
    })();
    verdict(4, "budget minimality", start, res);
}

fn front(objs: impl IntoIterator<Item = Objective>) -> BTreeSet<[u64; 3]> {
    objs.into_iter().map(|o| o.map(f64::to_bits)).collect()
}

#[test]
fn criterion_5_exhaustive_front() {
    let start = Instant::now();
    let res = (|| {
        let spec = load("tiny.json");
        let exact = front(dse::exhaustive(&spec, Mode::IsolationAware).map_err(|e| e.to_string())?.objectives());
        let mut runs = Vec::new();
        for seed in 0..3 {
            let cfg = DseConfig { seed, ..DseConfig::default() };
            let x = dse::explore(&spec, &cfg).map_err(|e| e.to_string())?;
            let found = front(x.archive.objectives());
            check(found == exact, || {
                format!("seed {seed}: explore found {} points, exhaustive front has {}", found.len(), exact.len())
            })?;
            runs.push(found.len());
        }
        Ok(format!(
            "front of {} points from {} genotypes matched by 3 seeded runs",
            exact.len(),
            dse::search_space_size(&spec, Mode::IsolationAware)
        ))
    })();
    verdict(5, "exhaustive-front equivalence", start, res);
}

#[test]
fn criterion_6_isolation_aware_beats_fixed_modes() {
    let start = Instant::now();
    let res = (|| {
        let mut lines = Vec::new();
        for name in ["networking", "consumer", "telecom", "automotive"] {
            let spec = generate(&Profile::named(name, (4, 4), 6).unwrap()).unwrap();
            let cfg = DseConfig { iterations: 200, ..DseConfig::default() };
            let cmp = dse::compare_approaches(&spec, &cfg, 5).map_err(|e| e.to_string())?;
            let mean = |m: Mode| cmp.rows.iter().find(|r| r.mode == m).and_then(|r| r.mean_epsilon);
            let ia = mean(Mode::IsolationAware).ok_or(format!("{name}: no isolation-aware front"))?;
            let fixed: Vec<f64> =
                [Mode::FixedCs, Mode::FixedCr, Mode::FixedTr].into_iter().map(|m| mean(m).unwrap_or(f64::INFINITY)).collect();
            let worst = fixed.iter().copied().fold(f64::MIN, f64::max);
            check(fixed.iter().all(|&f| ia <= f) && ia < worst, || format!("{name}: IA {ia:.3} vs fixed {fixed:.3?}"))?;
            lines.push(format!("{name} IA {ia:.2} CS {:.2} CR {:.2} TR {:.2}", fixed[0], fixed[1], fixed[2]));
        }
        Ok(lines.join("; "))
    })();
    verdict(6, "isolation-aware front quality", start, res);
}

#[test]
fn criterion_7_epsilon_values() {
    let start = Instant::now();
    let res = (|| {
        let f = [[1.0, 4.0], [4.0, 1.0], [2.0, 2.0]];
        let e = |a: &[[f64; 2]], b: &[[f64; 2]]| epsilon_dominance(a, b).unwrap();
        check(e(&f, &f) == 0.0, || "eps(F, F) != 0".into())?;
        check(e(&[[2.0, 2.0]], &[[1.0, 1.0]]) == 0.5, || "eps({(2,2)}, {(1,1)}) != 0.5".into())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pt = |rng: &mut ChaCha8Rng| [rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)];
        for i in 0..500 {
            let fa: Vec<[f64; 3]> = (0..rng.gen_range(1..8)).map(|_| pt(&mut rng)).collect();
            let s: Vec<[f64; 3]> = (0..rng.gen_range(1..8)).map(|_| pt(&mut rng)).collect();
            let mut more = fa.clone();
            more.push(pt(&mut rng));
            let mut bigger_ref = s.clone();
            bigger_ref.push(pt(&mut rng));
            let base = epsilon_dominance(&fa, &s).unwrap();
            check(epsilon_dominance(&more, &s).unwrap() <= base, || format!("set {i}: adding to F raised eps"))?;
            check(epsilon_dominance(&fa, &bigger_ref).unwrap() >= base, || format!("set {i}: adding to S lowered eps"))?;
            check(base >= 0.0, || format!("set {i}: negative eps"))?;
        }
        Ok("eps(F,F)=0, eps({(2,2)},{(1,1)})=0.5, monotone on 500 random front pairs".into())
    })();
    verdict(7, "epsilon-dominance values", start, res);
}

fn analyze(spec: &ProblemSpec, iso: IsolationScheme) -> Mapping {
    let file = MappingFile {
        bindings: [("t0", "c0"), ("t1", "c1"), ("t2", "c3")].map(|(t, c)| (t.to_string(), c.to_string())).into(),
        isolation: Some(iso),
        ..MappingFile::default()
    };
    Evaluator::new(spec).unwrap().evaluate(&file.to_decisions(spec).unwrap())
}

#[test]
fn criterion_8_isolation_ordering() {
    let start = Instant::now();
    let res = (|| {
        let spec = load("fig3a.json");
        let [cs, cr, tr] = [IsolationScheme::CoreSharing, IsolationScheme::CoreReservation, IsolationScheme::TileReservation]
            .map(|iso| analyze(&spec, iso).objectives.expect("feasible"));
        check(tr.latency <= cr.latency && cr.latency <= cs.latency, || {
            format!("makespans TR {} CR {} CS {}", tr.latency, cr.latency, cs.latency)
        })?;
        check(tr.resource_usage >= cr.resource_usage && cr.resource_usage >= cs.resource_usage, || {
            format!("usage TR {} CR {} CS {}", tr.resource_usage, cr.resource_usage, cs.resource_usage)
        })?;
        Ok(format!(
            "makespan TR {} <= CR {} <= CS {}, usage TR {} >= CR {} >= CS {}",
            tr.latency, cr.latency, cs.latency, tr.resource_usage, cr.resource_usage, cs.resource_usage
        ))
    })();
    verdict(8, "isolation ordering", start, res);
}

#[test]
fn criterion_9_deterministic_explore() {
    let start = Instant::now();
    let res = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let run = |out: &str, format: &str| -> Result<Vec<u8>, String> {
            let out_dir = dir.path().join(out);
            let status = Command::new(env!("CARGO_BIN_EXE_isoexplore"))
                .args(["explore", "--seed", "11", "--format", format, "--spec"])
                .arg(data("fig3a.json"))
                .arg("--out-dir")
                .arg(&out_dir)
                .status()
                .map_err(|e| e.to_string())?;
            check(status.success(), || format!("explore exited with {status}"))?;
            std::fs::read(out_dir.join(format!("archive.{format}"))).map_err(|e| e.to_string())
        };
        for format in ["csv", "json"] {
            let (a, b) = (run(&format!("a_{format}"), format)?, run(&format!("b_{format}"), format)?);
            check(!a.is_empty() && a == b, || format!("{format} archives differ"))?;
        }
        Ok("two seeded runs wrote byte-identical CSV and JSON archives".into())
    })();
    verdict(9, "deterministic exploration", start, res);
}
