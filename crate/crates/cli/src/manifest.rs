//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// A frozen CSV column order. Bump `version` whenever `columns` changes.
#[derive(Clone, Copy, Debug)]
pub struct CsvSchema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static str,
}

impl CsvSchema {
    pub fn id(&self) -> String {
        format!("{}/v{}", self.name, self.version)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64, schema: None })
}

/// Writes files into the output directory and remembers their digests.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileDigest>,
    schemas: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), schemas: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(FileDigest { path: name.into(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64, schema: None });
        Ok(())
    }

    /// Header plus rows, newline-terminated.
    pub fn write_csv<I: IntoIterator<Item = String>>(&mut self, name: &str, schema: CsvSchema, rows: I) -> Result<(), CliError> {
        let mut text = String::from(schema.columns);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.write(name, text.as_bytes())?;
        self.files.last_mut().expect("just written").schema = Some(schema.id());
        self.schemas.insert(schema.id(), schema.columns.into());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn files(&self) -> &[FileDigest] {
        &self.files
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    /// Error estimates reported by the library, keyed by quantity.
    pub errors: BTreeMap<String, f64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Column order of each CSV schema in use.
    pub csv_schemas: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: ExperimentConfig) -> Self {
        Self {
            tool: "rbm-lyapunov",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            seeds: Vec::new(),
            workers: rayon::current_num_threads(),
            wall_clock_seconds: 0.0,
            errors: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            csv_schemas: BTreeMap::new(),
        }
    }

    /// Record the output files and write `manifest.json` next to them.
    pub fn finish(mut self, mut out: OutputDir, wall_clock_seconds: f64) -> Result<Self, CliError> {
        self.wall_clock_seconds = wall_clock_seconds;
        self.outputs = std::mem::take(&mut out.files);
        self.csv_schemas = std::mem::take(&mut out.schemas);
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Io(format!("manifest: {e}")))?;
        text.push('\n');
        let path = out.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(self)
    }
}
