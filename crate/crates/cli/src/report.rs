//! Deterministic output: JSON with 17-significant-digit floats, file digests
//! and the run manifest.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Pretty JSON whose floats are written as `{:.16e}`.
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

struct CompactSci;

impl Formatter for CompactSci {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    v.serialize(&mut ser).expect("JSON serialization of in-memory values");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn to_json_line<T: Serialize>(v: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CompactSci);
    v.serialize(&mut ser).expect("JSON serialization of in-memory values");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Clone, Serialize)]
struct OutputEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

/// Collects the artifacts of one invocation. The run id is the digest of the
/// resolved configuration, so JSON artifacts can embed it before they are
/// written and the manifest can list every file afterwards.
pub struct Manifest {
    command: String,
    config: Value,
    seed: Option<u64>,
    run_id: String,
    started_at: f64,
    outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        let identity = json!({
            "tool": "gmhd",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "seed": seed,
        });
        Self {
            command: command.to_string(),
            run_id: sha256_hex(to_json_line(&identity).as_bytes()),
            config,
            seed,
            started_at: unix_seconds(),
            outputs: Vec::new(),
        }
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    /// Writes `bytes` to `path`, creating parent directories, and records it.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        }
        std::fs::write(path, bytes).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        self.record(path, bytes);
        Ok(())
    }

    /// Records a file written by someone else.
    pub fn record_file(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        self.record(path, &bytes);
        Ok(())
    }

    fn record(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(OutputEntry {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }

    pub fn finish(self, dir: &Path) -> Result<PathBuf, CliError> {
        let body = json!({
            "tool": "gmhd",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "run_id": self.run_id,
            "seed": self.seed,
            "config": self.config,
            "started_at": self.started_at,
            "finished_at": unix_seconds(),
            "outputs": self.outputs,
        });
        let path = dir.join(MANIFEST_FILE);
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        std::fs::write(&path, to_json_pretty(&body))
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let line = to_json_line(&json!({"a": 0.1, "b": 3, "c": f64::NAN}));
        assert_eq!(line, r#"{"a":1.0000000000000001e-1,"b":3,"c":null}"#);
        let back: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn run_id_ignores_wall_time() {
        let a = Manifest::new("x", json!({"k": 1.5}), Some(3));
        let b = Manifest::new("x", json!({"k": 1.5}), Some(3));
        assert_eq!(a.run_id(), b.run_id());
        assert_ne!(a.run_id(), Manifest::new("x", json!({"k": 1.5}), Some(4)).run_id());
    }
}
