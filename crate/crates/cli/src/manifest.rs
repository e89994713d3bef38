//! Run manifests: model, command, certificate parameters and output paths.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// A complex matrix as rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub model: ModelBlock,
    pub command: CommandBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<ParameterBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelBlock {
    /// Dissipative transverse-field Ising chain on a centered chain.
    Ising { h: f64, j: f64, n: usize },
    /// Qubits on sites `1..=n`, each coupled to its own thermal bath.
    Heatbath {
        n: usize,
        h: f64,
        gamma: f64,
        j: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperatures: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kms_s: Option<f64>,
    },
    /// One generator per site from explicit matrices, nearest-neighbour
    /// Hamiltonian coupling, on a centered chain.
    Explicit {
        n: usize,
        q: usize,
        hamiltonian: MatrixSpec,
        #[serde(default)]
        kraus: Vec<MatrixSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bond_hamiltonian: Option<MatrixSpec>,
    },
}

impl ModelBlock {
    /// The model with its chain length removed, for structural comparison.
    pub fn without_size(&self) -> ModelBlock {
        let mut m = self.clone();
        match &mut m {
            ModelBlock::Ising { n, .. } | ModelBlock::Heatbath { n, .. } | ModelBlock::Explicit { n, .. } => *n = 0,
        }
        m
    }
}

/// One factor of a product observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub site: i64,
    /// `x`, `y`, `z`, `plus`, `minus`, `up`, `down` or `id`.
    pub op: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandBlock {
    Validate,
    Gap,
    Evolve {
        observable: Vec<Factor>,
        times: Vec<f64>,
    },
    Stationary {
        observable: Vec<Factor>,
    },
    Expand {
        observable: Vec<Factor>,
        n_max: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight_floor: Option<f64>,
    },
    Correlations {
        /// Single-site operator placed at the origin and at each distance.
        op: String,
        distances: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
    },
    Bounds {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_size: Option<usize>,
        #[serde(default)]
        times: Vec<f64>,
        #[serde(default)]
        distances: Vec<f64>,
    },
    Transport {
        t_left: f64,
        t_right: f64,
    },
    Scaling {
        t_left: f64,
        t_right: f64,
        sizes: Vec<usize>,
    },
}

impl CommandBlock {
    pub fn name(&self) -> &'static str {
        match self {
            CommandBlock::Validate => "validate",
            CommandBlock::Gap => "gap",
            CommandBlock::Evolve { .. } => "evolve",
            CommandBlock::Stationary { .. } => "stationary",
            CommandBlock::Expand { .. } => "expand",
            CommandBlock::Correlations { .. } => "correlations",
            CommandBlock::Bounds { .. } => "bounds",
            CommandBlock::Transport { .. } => "transport",
            CommandBlock::Scaling { .. } => "scaling",
        }
    }

    /// The observable a scalar estimate refers to, if any.
    pub fn observable(&self) -> Option<&[Factor]> {
        match self {
            CommandBlock::Evolve { observable, .. }
            | CommandBlock::Stationary { observable }
            | CommandBlock::Expand { observable, .. } => Some(observable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    Theorem,
    General,
    FiniteRange,
}

/// Certificate inputs; unset rates and amplitudes default to the model's.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBlock {
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// `1/l`, an alternative to `l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inv_l: Option<f64>,
    /// Target decay length in finite-range mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub g_prime: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Relative paths resolve against the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// A parsed manifest with its source location and content hash.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub path: PathBuf,
    pub sha256: String,
}

impl LoadedManifest {
    /// Output directory: `override_dir`, else the manifest's `output.dir`,
    /// else `out` next to the manifest.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        let base = self.path.parent().unwrap_or_else(|| Path::new("."));
        match self.manifest.output.as_ref().and_then(|o| o.dir.as_ref()) {
            Some(d) if d.is_absolute() => d.clone(),
            Some(d) => base.join(d),
            None => base.join("out"),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses TOML, or JSON when the file name ends in `.json`.
pub fn parse_manifest(text: &str, json: bool) -> Result<Manifest, CliError> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))
    }
}

pub fn load_manifest(path: &Path) -> Result<LoadedManifest, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Manifest(e.to_string()))?;
    let json = path.extension().is_some_and(|e| e == "json");
    let manifest = parse_manifest(&text, json)?;
    Ok(LoadedManifest { manifest, path: path.to_path_buf(), sha256: sha256_hex(&bytes) })
}

impl Manifest {
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Manifest(e.to_string()))
    }
}
