use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, arguments or input files.
    Config(String),
    /// A numerical routine failed; message carries the module diagnostic.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Config(_) => ExitCode::from(1),
            Failure::Numerical(_) => ExitCode::from(2),
        }
    }

    pub fn numerical(module: &str, e: impl fmt::Display) -> Self {
        Failure::Numerical(format!("{module}: {e}"))
    }

    pub fn config(e: impl fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "{m}"),
            Failure::Numerical(m) => write!(f, "numerical failure in {m}"),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

/// Output directory plus the bookkeeping needed for the manifest.
pub struct Run {
    command: &'static str,
    dir: PathBuf,
    start: Instant,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    pub fn new(command: &'static str, dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            command,
            dir: dir.to_path_buf(),
            start: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    /// Read an input file and record its hash.
    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = read_input(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn input_text(&mut self, path: &Path) -> Result<String, Failure> {
        String::from_utf8(self.input(path)?)
            .map_err(|_| Failure::Config(format!("{} is not valid UTF-8", path.display())))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write `resolved.json` and `manifest.json`.
    pub fn finish(mut self, resolved: Value) -> Result<(), Failure> {
        self.write_json("resolved.json", &json!({ "command": self.command, "resolved": resolved }))?;
        let hashes: BTreeMap<&String, &String> = self.inputs.iter().chain(self.outputs.iter()).collect();
        let manifest = json!({
            "command": self.command,
            "inputs": self.inputs.keys().collect::<Vec<_>>(),
            "outputs": self.outputs.keys().collect::<Vec<_>>(),
            "hashes": hashes,
            "wall_time": self.start.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
    }
}
