//! Loading of every file-or-shorthand argument, with content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use qnz_core::noise::{load_calibration, parse_noise_shorthand, NoiseModel};
use qnz_core::qnn::{parse_dataset, parse_model, Dataset, Model};
use qnz_core::sim::{parse_amplitudes, StateVector, STATE_WIDTH_CAP};
use qnz_core::topology::{builtin_topology, parse_topology, CouplingGraph};

/// One input as recorded in the run report.
#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    /// File path, or the literal shorthand for built-in values.
    pub source: String,
    /// SHA-256 of the file contents, or of the shorthand text.
    pub sha256: String,
}

#[derive(Debug, Default)]
pub struct Inputs {
    pub records: Vec<InputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Inputs {
    fn note(&mut self, role: &str, source: &str, bytes: &[u8]) {
        self.records.push(InputRecord {
            role: role.to_string(),
            source: source.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn read(&mut self, role: &str, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {role} file {}", path.display()))?;
        self.note(role, &path.display().to_string(), text.as_bytes());
        Ok(text)
    }

    /// `chain:<n>`, `falcon27` or a topology file.
    pub fn topology(&mut self, spec: &str) -> Result<CouplingGraph> {
        if let Some(graph) = builtin_topology(spec)? {
            self.note("topology", spec, spec.as_bytes());
            return Ok(graph);
        }
        let text = self.read("topology", Path::new(spec))?;
        parse_topology(&text).with_context(|| format!("in topology file {spec}"))
    }

    /// A calibration JSON file if `spec` names an existing file, otherwise
    /// the `flip:..,phase:..` shorthand.
    pub fn noise(&mut self, spec: &str) -> Result<NoiseModel> {
        let path = Path::new(spec);
        if path.is_file() {
            let text = self.read("noise", path)?;
            return load_calibration(&text).with_context(|| format!("in noise file {spec}"));
        }
        self.note("noise", spec, spec.as_bytes());
        parse_noise_shorthand(spec)
            .with_context(|| format!("`{spec}` is neither a file nor a noise shorthand"))
    }

    pub fn dataset(&mut self, path: &Path) -> Result<Dataset> {
        let text = self.read("dataset", path)?;
        parse_dataset(&text).with_context(|| format!("in dataset file {}", path.display()))
    }

    pub fn model(&mut self, role: &str, path: &Path) -> Result<Model> {
        let text = self.read(role, path)?;
        parse_model(&text).with_context(|| format!("in model file {}", path.display()))
    }

    /// `basis:<i>` or `amplitudes:<file>` over `width` qubits.
    pub fn init(&mut self, spec: &str, width: usize) -> Result<StateVector> {
        let state = if let Some(i) = spec.strip_prefix("basis:") {
            let index: usize = i
                .parse()
                .with_context(|| format!("bad basis index `{i}`"))?;
            if width > STATE_WIDTH_CAP {
                bail!("{width} qubits exceed the simulator cap of {STATE_WIDTH_CAP}");
            }
            if index >> width != 0 {
                bail!("basis index {index} does not fit in {width} qubits");
            }
            self.note("init", spec, spec.as_bytes());
            StateVector::basis(width, index)
        } else if let Some(file) = spec.strip_prefix("amplitudes:") {
            let text = self.read("init", Path::new(file))?;
            parse_amplitudes(&text).with_context(|| format!("in amplitude file {file}"))?
        } else {
            bail!("initial state must be `basis:<i>` or `amplitudes:<file>`, got `{spec}`");
        };
        if state.num_qubits() != width {
            bail!(
                "initial state has {} qubits, the circuit has {width}",
                state.num_qubits()
            );
        }
        Ok(state)
    }
}

/// Resolves `path` against the directory of the file that mentioned it.
pub fn relative_to(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    base.parent().unwrap_or(Path::new(".")).join(path)
}
