use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest_{command}.json")
    }

    pub fn read(dir: &Path, command: &str) -> CliResult<Manifest> {
        let path = dir.join(Self::file_name(command));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Output directory that records every file it writes.
pub struct Output {
    dir: PathBuf,
    command: String,
    config_sha256: String,
    files: Vec<ManifestEntry>,
}

impl Output {
    pub fn create(dir: &Path, command: &str, config_bytes: &[u8]) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_sha256: sha256_hex(config_bytes),
            files: Vec::new(),
        })
    }

    pub fn write(
        &mut self,
        name: &str,
        kind: &str,
        bytes: &[u8],
        seed: Option<u64>,
        t_ms: Option<f64>,
    ) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            kind: kind.to_string(),
            seed,
            t_ms,
        });
        Ok(())
    }

    pub fn finish(self) -> CliResult<PathBuf> {
        let manifest = Manifest {
            command: self.command.clone(),
            config_sha256: self.config_sha256,
            files: self.files,
        };
        let path = self.dir.join(Manifest::file_name(&self.command));
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Minimal CSV builder; values are written with their shortest round-trip
/// representation.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
