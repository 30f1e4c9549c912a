// SPDX-License-Identifier: Apache-2.0

//! `isoexplore` command-line tool.

mod error;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isoexplore::dse::{self, DseConfig, Mode};
use isoexplore::generate::{generate, Profile, NAMED_PROFILES};
use isoexplore::mapping::{Evaluator, Mapping, MappingFile};
use isoexplore::model::{emit_spec, ProblemSpec};
use isoexplore::scheduling::Feasibility;
use isoexplore::simoracle::{adversarial_sweep_with, SimError, SweepOptions};
use isoexplore::timing::TimingReport;
use isoexplore::Nanos;

use error::CliError;
use output::{csv_bytes, load_config, load_json, load_spec, ArchiveRow, Manifest, OutDir};

#[derive(Parser)]
#[command(name = "isoexplore", version, about = "Isolation-aware mapping exploration for tiled many-core platforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute timing bounds and objectives of one mapping.
    Analyze {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        /// Directory for report.json and manifest.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Search for Pareto-optimal mappings.
    Explore {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Explore with every isolation mode and rate the fronts by epsilon-dominance.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        reps: u32,
    },
    /// Check the analytical bounds of a mapping against adversarial simulation.
    Validate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Tightens every bound by this many nanoseconds.
        #[arg(long, hide = true, default_value_t = 0)]
        bound_offset_ns: u64,
    },
    /// Generate a random benchmark specification.
    Generate {
        /// One of networking, consumer, telecom, automotive.
        #[arg(long, conflicts_with_all = ["tasks", "messages"])]
        profile: Option<String>,
        #[arg(long, required_unless_present = "profile", requires = "messages")]
        tasks: Option<usize>,
        #[arg(long, required_unless_present = "profile", requires = "tasks")]
        messages: Option<usize>,
        #[arg(long, default_value = "4x4", value_parser = parse_mesh)]
        mesh: (u32, u32),
        #[arg(long, default_value_t = 4)]
        cores_per_tile: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Exploration config (JSON); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_mesh(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let dim = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("bad mesh dimension {v:?}: {e}"));
    Ok((dim(w)?, dim(h)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Sim(SimError::BoundViolation(v)) = &e {
                eprintln!("replay with seed {} ({} adversary)", v.seed, v.adversary);
            }
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze { spec, mapping, out_dir } => analyze(&spec, &mapping, out_dir.as_deref()),
        Command::Explore { run, mode } => explore(&run, mode),
        Command::Compare { run, reps } => compare(&run, reps),
        Command::Validate { spec, mapping, trials, seed, out_dir, bound_offset_ns } => {
            let mut opts = SweepOptions::new(trials, seed);
            opts.bound_offset = Nanos::new(bound_offset_ns);
            validate(&spec, &mapping, &opts, out_dir.as_deref())
        }
        Command::Generate { profile, tasks, messages, mesh, cores_per_tile, seed, out } => {
            let profile = match profile {
                Some(name) => {
                    let mut p = Profile::named(&name, mesh, seed).ok_or_else(|| {
                        let known: Vec<&str> = NAMED_PROFILES.iter().map(|p| p.0).collect();
                        CliError::Usage(format!("unknown profile {name:?}; expected one of {}", known.join(", ")))
                    })?;
                    p.cores_per_tile = cores_per_tile;
                    p
                }
                None => Profile {
                    tasks: tasks.unwrap_or_default(),
                    messages: messages.unwrap_or_default(),
                    mesh,
                    cores_per_tile,
                    seed,
                },
            };
            let mut text = emit_spec(&generate(&profile)?);
            text.push('\n');
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Write { path, source }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

/// Loads a spec and mapping file and evaluates the mapping; infeasible
/// mappings are an error.
fn evaluate(spec_path: &Path, mapping_path: &Path) -> Result<(ProblemSpec, Mapping), CliError> {
    let spec = load_spec(spec_path)?;
    let file: MappingFile = load_json(mapping_path)?;
    let decisions =
        file.to_decisions(&spec).map_err(|source| CliError::MappingFile { path: mapping_path.to_path_buf(), source })?;
    let mapping = {
        let eval = Evaluator::new(&spec).unwrap_or_else(|_| Evaluator::timing_only(&spec));
        eval.evaluate(&decisions)
    };
    if let Feasibility::Infeasible(reason) = &mapping.schedule.budgets.feasibility {
        return Err(CliError::Infeasible(reason.clone()));
    }
    Ok((spec, mapping))
}

fn analyze(spec_path: &Path, mapping_path: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let mut manifest = Manifest::start("analyze");
    let (spec, mapping) = evaluate(spec_path, mapping_path)?;
    let report = mapping.to_json(&spec);
    match out_dir {
        Some(dir) => {
            manifest.inputs.add(spec_path)?;
            manifest.inputs.add(mapping_path)?;
            let mut out = OutDir::create(dir)?;
            out.write_json("report.json", &report)?;
            out.finish(manifest)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    let timing = mapping.timing.as_ref().expect("feasible mapping has timing");
    eprint!("{}", breakdown_table(timing, &mapping));
    Ok(())
}

fn us(n: Nanos) -> String {
    format!("{:.3}", n.as_micros_f64())
}

fn breakdown_table(t: &TimingReport, m: &Mapping) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<6} {:<3} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "task", "core", "iso", "W", "wcet", "mem", "i_bus", "i_core", "wcrt"
    );
    for tt in &t.tasks {
        let b = &tt.breakdown;
        let _ = writeln!(
            s,
            "{:<12} {:<6} {:<3} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10}",
            tt.task,
            tt.core,
            tt.scheme,
            tt.weight,
            us(b.wcet),
            us(b.mem_service),
            us(b.i_bus),
            us(b.i_core),
            us(b.wcrt)
        );
    }
    if !t.messages.is_empty() {
        let _ = writeln!(
            s,
            "\n{:<12} {:<12} {:>3} {:>5} {:>10} {:>10} {:>10} {:>10}",
            "message", "consumer", "W", "hops", "d_tx", "d_noc", "d_rx", "wctt"
        );
        for (mt, tr) in t.messages.iter().zip(&m.transfers) {
            let b = &mt.breakdown;
            let _ = writeln!(
                s,
                "{:<12} {:<12} {:>3} {:>5} {:>10} {:>10} {:>10} {:>10}",
                mt.message,
                mt.consumer,
                mt.weight,
                tr.hops,
                us(b.d_tx),
                us(b.d_noc),
                us(b.d_rx),
                us(b.wctt)
            );
        }
    }
    let _ = writeln!(s, "\nmakespan {} us, throughput {:.3}/s (times in us)", us(t.makespan), t.throughput);
    if let Some(o) = &m.objectives {
        let energy = o.energy.map_or_else(|| "n/a".to_string(), |e| format!("{e}"));
        let _ = writeln!(s, "resource usage {}, energy {}", o.resource_usage, energy);
    }
    s
}

fn run_config(run: &RunArgs, mode: Option<Mode>, manifest: &mut Manifest) -> Result<DseConfig, CliError> {
    let mut cfg = load_config(run.config.as_deref())?;
    if let Some(p) = &run.config {
        manifest.inputs.add(p)?;
    }
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    manifest.seed = Some(cfg.seed);
    manifest.config = Some(serde_json::to_value(&cfg).expect("config serializes"));
    Ok(cfg)
}

fn explore(run: &RunArgs, mode: Option<Mode>) -> Result<(), CliError> {
    let mut manifest = Manifest::start("explore");
    let spec = load_spec(&run.spec)?;
    manifest.inputs.add(&run.spec)?;
    let cfg = run_config(run, mode, &mut manifest)?;
    let x = dse::explore(&spec, &cfg)?;
    let eval = Evaluator::new(&spec).map_err(dse::DseError::from)?;
    let rows: Vec<ArchiveRow> = x.archive.sorted().into_iter().map(|e| ArchiveRow::new(&eval, e)).collect();

    let mut out = OutDir::create(&run.out_dir)?;
    match run.format {
        Format::Csv => {
            out.write("archive.csv", &csv_bytes(&ArchiveRow::CSV_HEADER, rows.iter().map(ArchiveRow::csv_record))?)?
        }
        Format::Json => out.write_json("archive.json", &rows)?,
    }
    let trace = x.trace.iter().map(|p| {
        [
            p.iteration.to_string(),
            format!("{:.3}", p.elapsed_ms),
            p.evaluations.to_string(),
            p.archive_size.to_string(),
            p.epsilon.to_string(),
        ]
    });
    out.write("trace.csv", &csv_bytes(&["iteration", "elapsed_ms", "evaluations", "archive_size", "epsilon"], trace)?)?;
    out.finish(manifest)?;
    eprintln!("{} mappings in the archive after {} evaluations", rows.len(), x.evaluations);
    Ok(())
}

fn compare(run: &RunArgs, reps: u32) -> Result<(), CliError> {
    let mut manifest = Manifest::start("compare");
    let spec = load_spec(&run.spec)?;
    manifest.inputs.add(&run.spec)?;
    let cfg = run_config(run, None, &mut manifest)?;
    let cmp = dse::with_thread_cap(|| dse::compare_approaches(&spec, &cfg, reps))?;
    let eval = Evaluator::new(&spec).map_err(dse::DseError::from)?;

    let mut out = OutDir::create(&run.out_dir)?;
    match run.format {
        Format::Csv => {
            let mut header = vec!["mode".to_string(), "mean_epsilon".to_string()];
            header.extend((1..=reps).map(|r| format!("run_{r}")));
            let cell = |v: Option<f64>| v.map_or_else(|| "absent".to_string(), |e| e.to_string());
            let rows = cmp.rows.iter().map(|row| {
                let mut r = vec![row.mode.to_string(), cell(row.mean_epsilon)];
                r.extend(row.per_run.iter().map(|&v| cell(v)));
                r
            });
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.write("epsilon.csv", &csv_bytes(&header, rows)?)?;
        }
        Format::Json => out.write_json("epsilon.json", &cmp.rows)?,
    }
    for (m, mode) in Mode::ALL.iter().enumerate() {
        let mut rows = Vec::new();
        for (rep, runs) in cmp.archives.iter().enumerate() {
            if let Some(a) = &runs[m] {
                for e in a.sorted() {
                    let row = ArchiveRow::new(&eval, e);
                    let mut r = vec![rep.to_string()];
                    r.extend(row.csv_record());
                    rows.push(r);
                }
            }
        }
        let mut header = vec!["rep"];
        header.extend(ArchiveRow::CSV_HEADER);
        out.write(&format!("scatter_{}.csv", mode.slug()), &csv_bytes(&header, rows)?)?;
    }
    out.finish(manifest)?;
    for row in &cmp.rows {
        match row.mean_epsilon {
            Some(e) => println!("{:<16} {e:.4}", row.mode.to_string()),
            None => println!("{:<16} absent", row.mode.to_string()),
        }
    }
    Ok(())
}

fn validate(spec_path: &Path, mapping_path: &Path, opts: &SweepOptions, out_dir: Option<&Path>) -> Result<(), CliError> {
    let mut manifest = Manifest::start("validate");
    manifest.seed = Some(opts.seed);
    let (spec, mapping) = evaluate(spec_path, mapping_path)?;
    let report = dse::with_thread_cap(|| adversarial_sweep_with(&spec, &mapping, opts))?;
    println!(
        "{:<8} {:<24} {:>12} {:>12} {:>12} {:>12}",
        "kind", "name", "bound_us", "worst_us", "aligned_us", "margin_us"
    );
    for r in &report.rows {
        println!(
            "{:<8} {:<24} {:>12} {:>12} {:>12} {:>12}",
            r.kind,
            r.name,
            us(r.bound),
            us(r.worst_observed),
            us(r.aligned_observed),
            us(r.margin)
        );
    }
    if let Some(dir) = out_dir {
        manifest.inputs.add(spec_path)?;
        manifest.inputs.add(mapping_path)?;
        let mut out = OutDir::create(dir)?;
        out.write_json("margins.json", &report)?;
        out.finish(manifest)?;
    }
    Ok(())
}
