//! Run configuration: JSON config file merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use wignerlab::groups::{
    CayleyTable, FiniteGroup, GroupDescriptor, GroupElement, RepMap, UnitaryRep,
};
use wignerlab::matrix::ComplexMatrix;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_DIM: usize = 64;

/// Configuration or usage problem; maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Values settable from both the config file and flags.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub dim: Option<usize>,
    pub group: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ConfigFile {
    schema_version: u32,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    tol: Option<f64>,
    dim: Option<usize>,
    group: Option<String>,
    #[serde(flatten)]
    options: Map<String, Value>,
}

/// Fully resolved configuration, embedded verbatim in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Command-specific keys from the config file.
    pub options: Map<String, Value>,
}

impl RunConfig {
    pub fn resolve(
        command: &str,
        config: Option<&Path>,
        flags: Overrides,
        default_format: Format,
    ) -> Result<Self, ConfigError> {
        let file = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
                let file: ConfigFile = serde_json::from_str(&text)
                    .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
                if file.schema_version != SCHEMA_VERSION {
                    return Err(config_err(format!(
                        "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                        file.schema_version
                    )));
                }
                Some(file)
            }
            None => None,
        };
        let (base, options) = match file {
            Some(f) => (
                Overrides {
                    seed: f.seed,
                    out: f.out,
                    format: f.format,
                    tol: f.tol,
                    dim: f.dim,
                    group: f.group,
                },
                f.options,
            ),
            None => (Overrides::default(), Map::new()),
        };
        let tol = flags.tol.or(base.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(config_err(format!("tol must be a positive number, got {tol}")));
        }
        let dim = flags.dim.or(base.dim);
        if dim == Some(0) {
            return Err(config_err("dim must be at least 1"));
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed: flags.seed.or(base.seed).unwrap_or(0),
            tol,
            dim,
            group: flags.group.or(base.group),
            format: flags.format.or(base.format).unwrap_or(default_format),
            out: flags.out.or(base.out),
            options,
        })
    }

    /// Command-specific options, rejecting unknown keys.
    pub fn options<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        serde_json::from_value(Value::Object(self.options.clone()))
            .map_err(|e| config_err(format!("invalid {} options: {e}", self.command)))
    }

    /// Fibre dimension, bounded by [`MAX_DIM`].
    pub fn fibre_dim(&self, default: usize) -> Result<usize, ConfigError> {
        let d = self.dim.unwrap_or(default);
        if d > MAX_DIM {
            return Err(config_err(format!("dim {d} exceeds the cap {MAX_DIM}")));
        }
        Ok(d)
    }
}

/// A parsed `--group` value.
#[derive(Clone, Debug)]
pub enum GroupSpec {
    Su2,
    Su3,
    U1,
    Cyclic(usize),
    Quaternion,
    Trivial,
    /// Cayley table, with optional representation matrices.
    File(FiniteGroup, Option<Vec<ComplexMatrix>>),
}

#[derive(Deserialize)]
struct GroupFile {
    #[serde(flatten)]
    table: CayleyTable,
    #[serde(default)]
    matrices: Option<Vec<ComplexMatrix>>,
}

impl GroupSpec {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "su2" => return Ok(Self::Su2),
            "su3" => return Ok(Self::Su3),
            "u1" => return Ok(Self::U1),
            "q8" => return Ok(Self::Quaternion),
            "trivial" => return Ok(Self::Trivial),
            _ => {}
        }
        if let Some(path) = s.strip_prefix("file:") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read group file {path}: {e}")))?;
            let file: GroupFile = serde_json::from_str(&text)
                .map_err(|e| config_err(format!("invalid group file {path}: {e}")))?;
            let group = FiniteGroup::try_from(file.table)
                .map_err(|e| config_err(format!("invalid Cayley table in {path}: {e}")))?;
            return Ok(Self::File(group, file.matrices));
        }
        if let Some(n) = lower.strip_prefix('z') {
            if let Ok(n) = n.parse::<usize>() {
                if n == 0 {
                    return Err(config_err("cyclic group order must be positive"));
                }
                return Ok(Self::Cyclic(n));
            }
        }
        Err(config_err(format!(
            "unknown group {s:?}; expected su2, su3, u1, z<N>, q8, trivial or file:PATH"
        )))
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        match self {
            Self::Su2 => GroupDescriptor::SU2,
            Self::Su3 => GroupDescriptor::SU3,
            Self::U1 => GroupDescriptor::U1,
            Self::Cyclic(n) => GroupDescriptor::Finite(FiniteGroup::cyclic(*n)),
            Self::Quaternion => GroupDescriptor::Finite(FiniteGroup::quaternion()),
            Self::Trivial => GroupDescriptor::Finite(FiniteGroup::trivial()),
            Self::File(g, _) => GroupDescriptor::Finite(g.clone()),
        }
    }

    pub fn default_dim(&self) -> usize {
        match self {
            Self::Su3 => 3,
            Self::File(_, Some(m)) => m.first().map_or(1, ComplexMatrix::dim),
            _ => 2,
        }
    }

    /// Built-in representation on `C^d`, or the given map.
    pub fn rep(&self, d: usize, map: Option<RepMap>) -> Result<UnitaryRep, ConfigError> {
        let built = match (map, self) {
            (Some(map), _) => UnitaryRep::new(self.descriptor(), map),
            (None, Self::Su2) => UnitaryRep::su2_spin(d),
            (None, Self::Su3) => UnitaryRep::su3_padded(d),
            (None, Self::U1) => UnitaryRep::u1_default(d),
            (None, Self::Cyclic(n)) => UnitaryRep::cyclic(*n, d),
            (None, Self::Quaternion) => UnitaryRep::quaternion(d),
            (None, Self::Trivial) => UnitaryRep::trivial(self.descriptor(), d),
            (None, Self::File(g, Some(m))) => UnitaryRep::finite(g.clone(), m.clone()),
            (None, Self::File(_, None)) => UnitaryRep::trivial(self.descriptor(), d),
        };
        let rep = built.map_err(|e| config_err(format!("invalid representation: {e}")))?;
        if rep.dim() > MAX_DIM {
            return Err(config_err(format!("dimension {} exceeds the cap {MAX_DIM}", rep.dim())));
        }
        Ok(rep)
    }
}

/// Group elements in config files: the tagged JSON form, or a label string
/// for finite groups.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ElementRef {
    Label(String),
    Element(GroupElement),
}

impl ElementRef {
    pub fn resolve(&self, group: &GroupDescriptor) -> Result<GroupElement, ConfigError> {
        let g = match self {
            Self::Element(g) => g.clone(),
            Self::Label(label) => {
                let table = group
                    .finite()
                    .ok_or_else(|| config_err(format!("label {label:?} needs a finite group")))?;
                GroupElement::Finite(
                    table
                        .index_of(label)
                        .ok_or_else(|| config_err(format!("no element labelled {label:?}")))?,
                )
            }
        };
        group
            .validate(&g)
            .map_err(|e| config_err(format!("invalid element: {e}")))?;
        Ok(g)
    }
}

pub fn resolve_elements(
    refs: &[ElementRef],
    group: &GroupDescriptor,
) -> Result<Vec<GroupElement>, ConfigError> {
    refs.iter().map(|r| r.resolve(group)).collect()
}
