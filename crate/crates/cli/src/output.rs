use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

/// Collects output files and writes them, with a manifest, into `dir`.
pub struct Outputs {
    dir: PathBuf,
    command: &'static str,
    config: Value,
    pub config_hash: String,
    inputs: Vec<(String, String)>,
    files: Vec<String>,
    notes: Vec<String>,
}

impl Outputs {
    pub fn new(cfg: &RunConfig, command: &'static str) -> Result<Self, CliError> {
        let config = serde_json::to_value(cfg).map_err(|e| CliError::usage(format!("config: {e}")))?;
        let config_hash = sha256_hex(config.to_string().as_bytes());
        fs::create_dir_all(&cfg.out)
            .map_err(|e| CliError::usage(format!("cannot create {}: {e}", cfg.out.display())))?;
        Ok(Outputs {
            dir: cfg.out.clone(),
            command,
            config,
            config_hash,
            inputs: Vec::new(),
            files: Vec::new(),
            notes: Vec::new(),
        })
    }

    /// Reads an input file and records its content hash.
    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = read_bytes(path)?;
        self.inputs.push((path.display().to_string(), sha256_hex(&bytes)));
        Ok(bytes)
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::info!("{msg}");
        self.notes.push(msg);
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// JSON object output; `config_hash` is added as a top-level field.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::usage(format!("{name}: {e}")))?;
        if let Value::Object(map) = &mut v {
            map.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        }
        let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::usage(format!("{name}: {e}")))?;
        self.write_text(name, &(text + "\n"))
    }

    /// CSV output, preceded by a `# config_hash=...` comment line.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::usage(format!("{name}: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let body =
            String::from_utf8(w.into_inner().map_err(|e| CliError::usage(e.to_string()))?).expect("csv is utf-8");
        self.write_text(name, &format!("# config_hash={}\n{body}", self.config_hash))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "causalcast",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_hash": self.config_hash,
            "config": self.config,
            "inputs": self.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
            "outputs": self.files,
            "notes": self.notes,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        self.files.clear();
        Ok(())
    }
}
