// SPDX-License-Identifier: Apache-2.0

//! Input loading and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use isoexplore::dse::{ArchiveEntry, DseConfig};
use isoexplore::mapping::{Evaluator, MappingFile};
use isoexplore::model::{parse_spec, ProblemSpec};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn load_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    parse_spec(&read(path)?).map_err(|source| CliError::Spec { path: path.to_path_buf(), source })
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn load_config(path: Option<&Path>) -> Result<DseConfig, CliError> {
    match path {
        Some(p) => load_json(p),
        None => Ok(DseConfig::default()),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files a command writes and records them in `manifest.json`.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self, manifest: Manifest) -> Result<(), CliError> {
        let manifest = ManifestFile {
            command: manifest.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: manifest.seed,
            config_digest: manifest.inputs.digest(manifest.config.as_ref()),
            inputs: manifest.inputs.files,
            config: manifest.config,
            started_unix_s: manifest.started_unix_s,
            wallclock_s: manifest.started.elapsed().as_secs_f64(),
            outputs: std::mem::take(&mut self.written),
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Default)]
pub struct Inputs {
    files: Vec<InputFile>,
}

#[derive(Serialize)]
struct InputFile {
    path: String,
    sha256: String,
}

impl Inputs {
    pub fn add(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        self.files.push(InputFile { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    /// Digest over the input contents in order and the effective config,
    /// independent of file paths.
    fn digest(&self, config: Option<&serde_json::Value>) -> String {
        let mut joined: Vec<String> = self.files.iter().map(|f| f.sha256.clone()).collect();
        if let Some(c) = config {
            joined.push(c.to_string());
        }
        sha256_hex(joined.join("\n").as_bytes())
    }
}

pub struct Manifest {
    pub command: String,
    pub seed: Option<u64>,
    pub inputs: Inputs,
    pub config: Option<serde_json::Value>,
    pub started: Instant,
    pub started_unix_s: u64,
}

impl Manifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            seed: None,
            inputs: Inputs::default(),
            config: None,
            started: Instant::now(),
            started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

#[derive(Serialize)]
struct ManifestFile {
    command: String,
    version: &'static str,
    seed: Option<u64>,
    config_digest: String,
    inputs: Vec<InputFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    started_unix_s: u64,
    wallclock_s: f64,
    outputs: Vec<String>,
}

/// One archived mapping in output form.
#[derive(Serialize)]
pub struct ArchiveRow {
    pub latency_us: f64,
    pub resource_usage: f64,
    pub energy: f64,
    pub digest: String,
    pub mapping: MappingFile,
}

impl ArchiveRow {
    pub fn new(eval: &Evaluator<'_>, entry: &ArchiveEntry) -> Self {
        let [latency_us, resource_usage, energy] = entry.objectives;
        let mapping = eval.decode(&entry.genotype).to_file(eval.spec());
        Self { latency_us, resource_usage, energy, digest: entry.genotype.digest(), mapping }
    }

    pub const CSV_HEADER: [&'static str; 7] =
        ["latency_us", "resource_usage", "energy", "digest", "bindings", "reserved_cores", "reserved_tiles"];

    pub fn csv_record(&self) -> [String; 7] {
        let bindings: Vec<String> = self.mapping.bindings.iter().map(|(t, c)| format!("{t}={c}")).collect();
        [
            self.latency_us.to_string(),
            self.resource_usage.to_string(),
            self.energy.to_string(),
            self.digest.clone(),
            bindings.join(" "),
            self.mapping.reserved_cores.join(" "),
            self.mapping.reserved_tiles.join(" "),
        ]
    }
}

pub fn csv_bytes<R, I>(header: &[&str], rows: R) -> Result<Vec<u8>, CliError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner().expect("in-memory writer flushes"))
}
