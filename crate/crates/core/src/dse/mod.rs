// SPDX-License-Identifier: Apache-2.0

//! Design space exploration over genotypes.
//!
//! An NSGA-II style loop evolves a population of genotypes and collects
//! every feasible non-dominated mapping it meets in a [`ParetoArchive`].
//! The fixed modes pin all isolation flags to one scheme and search only
//! the bindings.

mod nsga;
mod pareto;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::{Evaluator, Genotype, MappingError};
use crate::model::ProblemSpec;

pub use pareto::{dominates, epsilon_dominance, nondominated, ArchiveEntry, DomainError, Objective, ParetoArchive};

/// Environment variable capping the number of evaluation threads.
pub const THREADS_ENV: &str = "ISOEXPLORE_THREADS";

#[derive(Debug, Error)]
pub enum DseError {
    #[error("no feasible mapping found")]
    NoFeasibleMapping,
    #[error("invalid exploration config: {0}")]
    InvalidConfig(String),
    #[error("search space of {0} genotypes is too large to enumerate")]
    TooLarge(u128),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "isolation_aware", alias = "IsolationAware")]
    IsolationAware,
    #[serde(rename = "fixed_cs", alias = "FixedCS")]
    FixedCs,
    #[serde(rename = "fixed_cr", alias = "FixedCR")]
    FixedCr,
    #[serde(rename = "fixed_tr", alias = "FixedTR")]
    FixedTr,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::IsolationAware, Mode::FixedCs, Mode::FixedCr, Mode::FixedTr];

    /// Forced `(core flag, tile flag)` of a fixed mode.
    pub fn forced_flags(self) -> Option<(bool, bool)> {
        match self {
            Mode::IsolationAware => None,
            Mode::FixedCs => Some((false, false)),
            Mode::FixedCr => Some((true, false)),
            Mode::FixedTr => Some((false, true)),
        }
    }

    fn apply(self, g: &mut Genotype) {
        if let Some((c, t)) = self.forced_flags() {
            g.reserved_cores.iter_mut().for_each(|f| *f = c);
            g.reserved_tiles.iter_mut().for_each(|f| *f = t);
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Mode::IsolationAware => "isolation_aware",
            Mode::FixedCs => "fixed_cs",
            Mode::FixedCr => "fixed_cr",
            Mode::FixedTr => "fixed_tr",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::IsolationAware => "IsolationAware",
            Mode::FixedCs => "FixedCS",
            Mode::FixedCr => "FixedCR",
            Mode::FixedTr => "FixedTR",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        match norm.as_str() {
            "isolationaware" | "ia" => Ok(Mode::IsolationAware),
            "fixedcs" | "cs" => Ok(Mode::FixedCs),
            "fixedcr" | "cr" => Ok(Mode::FixedCr),
            "fixedtr" | "tr" => Ok(Mode::FixedTr),
            _ => Err(format!("unknown mode {s}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DseConfig {
    pub iterations: u32,
    pub offspring_per_iteration: u32,
    pub population_size: u32,
    pub seed: u64,
    pub mode: Mode,
    pub crossover_rate: f64,
    /// Per-gene probability; `None` means one over the genotype length.
    pub mutation_rate: Option<f64>,
    /// Start part of the population from uniformly flagged genotypes.
    pub seed_uniform_flags: bool,
}

impl Default for DseConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            offspring_per_iteration: 25,
            population_size: 100,
            seed: 0,
            mode: Mode::IsolationAware,
            crossover_rate: 0.9,
            mutation_rate: None,
            seed_uniform_flags: true,
        }
    }
}

impl DseConfig {
    pub fn validate(&self) -> Result<(), DseError> {
        let bad = |m: &str| Err(DseError::InvalidConfig(m.to_string()));
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.offspring_per_iteration < 1 {
            return bad("offspring_per_iteration must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return bad("mutation_rate must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Quality of the archive after one iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: u32,
    pub elapsed_ms: f64,
    pub evaluations: usize,
    pub archive_size: usize,
    /// Against the final archive of the same run.
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub archive: ParetoArchive,
    pub trace: Vec<TracePoint>,
    pub evaluations: usize,
}

/// Runs `f` on a pool capped by [`THREADS_ENV`] when that is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

struct Search<'a> {
    eval: Evaluator<'a>,
    cache: HashMap<Genotype, Option<Objective>>,
    evaluations: usize,
}

impl Search<'_> {
    /// Evaluates in parallel, returning results in input order.
    fn evaluate(&mut self, gs: &[Genotype]) -> Vec<Option<Objective>> {
        let mut fresh: Vec<&Genotype> = Vec::new();
        for g in gs {
            if !self.cache.contains_key(g) && !fresh.contains(&g) {
                fresh.push(g);
            }
        }
        let eval = &self.eval;
        let results: Vec<Option<Objective>> = fresh
            .par_iter()
            .map(|g| eval.decode(g).objectives.map(|o| o.vector()))
            .collect();
        self.evaluations += fresh.len();
        for (g, r) in fresh.into_iter().zip(results) {
            self.cache.insert(g.clone(), r);
        }
        gs.iter().map(|g| self.cache[g]).collect()
    }
}

fn random_genotype(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> Genotype {
    let cands = &spec.index().candidates;
    let p = spec.platform();
    Genotype {
        binding: cands.iter().map(|c| rng.gen_range(0..c.len() as u32)).collect(),
        reserved_cores: (0..p.cores.len()).map(|_| rng.gen_bool(0.5)).collect(),
        reserved_tiles: (0..p.tiles.len()).map(|_| rng.gen_bool(0.5)).collect(),
    }
}

fn crossover(a: &Genotype, b: &Genotype, rng: &mut ChaCha8Rng) -> Genotype {
    let mut pick = |x: &[u32], y: &[u32]| -> Vec<u32> {
        x.iter().zip(y).map(|(&p, &q)| if rng.gen_bool(0.5) { p } else { q }).collect()
    };
    let binding = pick(&a.binding, &b.binding);
    let mut flags = |x: &[bool], y: &[bool]| -> Vec<bool> {
        x.iter().zip(y).map(|(&p, &q)| if rng.gen_bool(0.5) { p } else { q }).collect()
    };
    let reserved_cores = flags(&a.reserved_cores, &b.reserved_cores);
    let reserved_tiles = flags(&a.reserved_tiles, &b.reserved_tiles);
    Genotype { binding, reserved_cores, reserved_tiles }
}

fn mutate(spec: &ProblemSpec, g: &mut Genotype, rate: f64, rng: &mut ChaCha8Rng) {
    let cands = &spec.index().candidates;
    for (t, gene) in g.binding.iter_mut().enumerate() {
        if rng.gen_bool(rate) {
            *gene = rng.gen_range(0..cands[t].len() as u32);
        }
    }
    for f in g.reserved_cores.iter_mut().chain(g.reserved_tiles.iter_mut()) {
        if rng.gen_bool(rate) {
            *f = !*f;
        }
    }
}

/// Evolves mappings of `spec` and returns the archive of non-dominated
/// feasible ones. Reproducible from `config.seed`.
pub fn explore(spec: &ProblemSpec, config: &DseConfig) -> Result<Exploration, DseError> {
    config.validate()?;
    let eval = Evaluator::new(spec)?;
    with_thread_cap(|| run(spec, config, eval))
}

fn run(spec: &ProblemSpec, config: &DseConfig, eval: Evaluator<'_>) -> Result<Exploration, DseError> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mode = config.mode;
    let pop_size = config.population_size as usize;

    let mut population: Vec<Genotype> = (0..pop_size)
        .map(|i| {
            let mut g = random_genotype(spec, &mut rng);
            if config.seed_uniform_flags && mode == Mode::IsolationAware && i % 4 != 0 {
                let (c, t) = Mode::ALL[i % 4].forced_flags().unwrap();
                g.reserved_cores.iter_mut().for_each(|f| *f = c);
                g.reserved_tiles.iter_mut().for_each(|f| *f = t);
            }
            mode.apply(&mut g);
            g
        })
        .collect();
    let rate = config.mutation_rate.unwrap_or(1.0 / population[0].len().max(1) as f64);

    let mut search = Search { eval, cache: HashMap::new(), evaluations: 0 };
    let mut archive = ParetoArchive::new();
    let mut objectives = search.evaluate(&population);
    for (g, o) in population.iter().zip(&objectives) {
        if let Some(o) = o {
            archive.insert(*o, g.clone());
        }
    }
    let mut snapshots = vec![(start.elapsed(), search.evaluations, archive.objectives())];

    for _ in 0..config.iterations {
        let digests: Vec<String> = population.iter().map(Genotype::digest).collect();
        let rank = nsga::ranks(&objectives);
        let crowd = nsga::crowding(&objectives, &rank);
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..population.len());
            let b = rng.gen_range(0..population.len());
            if nsga::better(&rank, &crowd, &digests, a, b).is_le() {
                a
            } else {
                b
            }
        };
        let offspring: Vec<Genotype> = (0..config.offspring_per_iteration)
            .map(|_| {
                let a = tournament(&mut rng);
                let b = tournament(&mut rng);
                let mut child = if rng.gen_bool(config.crossover_rate) {
                    crossover(&population[a], &population[b], &mut rng)
                } else {
                    population[a].clone()
                };
                mutate(spec, &mut child, rate, &mut rng);
                mode.apply(&mut child);
                child
            })
            .collect();
        let child_obj = search.evaluate(&offspring);
        for (g, o) in offspring.iter().zip(&child_obj) {
            if let Some(o) = o {
                archive.insert(*o, g.clone());
            }
        }
        population.extend(offspring);
        objectives.extend(child_obj);
        let digests: Vec<String> = population.iter().map(Genotype::digest).collect();
        let keep = nsga::select(&objectives, &digests, pop_size);
        population = keep.iter().map(|&i| population[i].clone()).collect();
        objectives = keep.iter().map(|&i| objectives[i]).collect();
        snapshots.push((start.elapsed(), search.evaluations, archive.objectives()));
    }

    if archive.is_empty() {
        return Err(DseError::NoFeasibleMapping);
    }
    let reference = archive.objectives();
    let trace = snapshots
        .into_iter()
        .enumerate()
        .map(|(i, (t, evals, front))| TracePoint {
            iteration: i as u32,
            elapsed_ms: t.as_secs_f64() * 1e3,
            evaluations: evals,
            archive_size: front.len(),
            epsilon: if front.is_empty() { 1.0 } else { epsilon_dominance(&front, &reference).unwrap_or(1.0) },
        })
        .collect();
    Ok(Exploration { archive, trace, evaluations: search.evaluations })
}

/// Number of genotypes [`exhaustive`] enumerates in `mode`.
pub fn search_space_size(spec: &ProblemSpec, mode: Mode) -> u128 {
    let p = spec.platform();
    let bindings: u128 = spec.index().candidates.iter().map(|c| c.len() as u128).product();
    match mode {
        Mode::IsolationAware => bindings
            .saturating_mul(1u128.checked_shl((p.cores.len() + p.tiles.len()) as u32).unwrap_or(u128::MAX)),
        _ => bindings,
    }
}

/// Limit on genotypes enumerated by [`exhaustive`].
pub const EXHAUSTIVE_LIMIT: u128 = 1 << 22;

/// Evaluates every genotype of `mode` and returns the exact Pareto front.
pub fn exhaustive(spec: &ProblemSpec, mode: Mode) -> Result<ParetoArchive, DseError> {
    let size = search_space_size(spec, mode);
    if size > EXHAUSTIVE_LIMIT {
        return Err(DseError::TooLarge(size));
    }
    let eval = Evaluator::new(spec)?;
    let cands = &spec.index().candidates;
    let p = spec.platform();
    let (nc, nt) = (p.cores.len(), p.tiles.len());
    let flag_bits = if mode == Mode::IsolationAware { nc + nt } else { 0 };
    let genotype = |mut k: u128| {
        let mut g = Genotype {
            binding: Vec::with_capacity(cands.len()),
            reserved_cores: vec![false; nc],
            reserved_tiles: vec![false; nt],
        };
        for c in cands {
            g.binding.push((k % c.len() as u128) as u32);
            k /= c.len() as u128;
        }
        if flag_bits > 0 {
            for i in 0..nc {
                g.reserved_cores[i] = (k >> i) & 1 == 1;
            }
            for i in 0..nt {
                g.reserved_tiles[i] = (k >> (nc + i)) & 1 == 1;
            }
        }
        mode.apply(&mut g);
        g
    };
    let results: Vec<(Genotype, Option<Objective>)> = with_thread_cap(|| {
        (0..size as u64)
            .into_par_iter()
            .map(|k| {
                let g = genotype(k as u128);
                let o = eval.decode(&g).objectives.map(|o| o.vector());
                (g, o)
            })
            .collect()
    });
    let mut archive = ParetoArchive::new();
    for (g, o) in results {
        if let Some(o) = o {
            archive.insert(o, g);
        }
    }
    if archive.is_empty() {
        return Err(DseError::NoFeasibleMapping);
    }
    Ok(archive)
}

/// Epsilon per mode over repeated runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mode: Mode,
    /// Mean over runs that found a feasible mapping.
    pub mean_epsilon: Option<f64>,
    pub per_run: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// `archives[rep][mode]`, `None` where the mode found nothing.
    pub archives: Vec<Vec<Option<ParetoArchive>>>,
}

/// Runs all four modes `repetitions` times with seeds `config.seed + rep`
/// and rates each archive against the non-dominated union of that
/// repetition.
pub fn compare_approaches(spec: &ProblemSpec, config: &DseConfig, repetitions: u32) -> Result<Comparison, DseError> {
    if repetitions < 1 {
        return Err(DseError::InvalidConfig("repetitions must be at least 1".into()));
    }
    config.validate()?;
    let mut per_run: Vec<Vec<Option<f64>>> = vec![Vec::new(); Mode::ALL.len()];
    let mut archives = Vec::new();
    for rep in 0..repetitions {
        let mut runs = Vec::new();
        for mode in Mode::ALL {
            let cfg = DseConfig { mode, seed: config.seed.wrapping_add(u64::from(rep)), ..config.clone() };
            match explore(spec, &cfg) {
                Ok(x) => runs.push(Some(x.archive)),
                Err(DseError::NoFeasibleMapping) => runs.push(None),
                Err(e) => return Err(e),
            }
        }
        let union: Vec<Objective> = runs.iter().flatten().flat_map(|a| a.objectives()).collect();
        let reference: Vec<Objective> = nondominated(&union).into_iter().map(|i| union[i]).collect();
        for (m, run) in runs.iter().enumerate() {
            let eps = match run {
                Some(a) => Some(epsilon_dominance(&a.objectives(), &reference)?),
                None => None,
            };
            per_run[m].push(eps);
        }
        archives.push(runs);
    }
    let rows = Mode::ALL
        .iter()
        .zip(per_run)
        .map(|(&mode, runs)| {
            let ok: Vec<f64> = runs.iter().flatten().copied().collect();
            let mean_epsilon = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            ComparisonRow { mode, mean_epsilon, per_run: runs }
        })
        .collect();
    Ok(Comparison { rows, archives })
}
