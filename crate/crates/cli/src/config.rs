//! Run configuration: JSON config file, command-line overrides, validation.

use kinetic_spectral::galerkin::SolveMethod;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Initial-data specification, parsed from `kind:field:field` strings so the
/// same syntax works on the command line and in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitSpec {
    SingleMode { mode: usize, amplitude: f64 },
    RandomDecay { norm: f64, decay_exponent: f64 },
    File { path: PathBuf },
}

impl TryFrom<String> for InitSpec {
    type Error = String;
    fn try_from(value: String) -> Result<Self, String> {
        value.parse()
    }
}

impl From<InitSpec> for String {
    fn from(spec: InitSpec) -> String {
        spec.to_string()
    }
}

impl std::str::FromStr for InitSpec {
    type Err = String;

    fn from_str(raw: &str) -> Result<Self, String> {
        let mut parts = raw.splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        let usage = "expected single_mode:<n>:<a>, random_decay:<norm>:<exponent> or file:<path>";
        match kind {
            "single_mode" => {
                let mode = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| usage.to_string())?;
                let amplitude = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| usage.to_string())?;
                Ok(InitSpec::SingleMode { mode, amplitude })
            }
            "random_decay" => {
                let norm = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| usage.to_string())?;
                let decay_exponent = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| usage.to_string())?;
                Ok(InitSpec::RandomDecay {
                    norm,
                    decay_exponent,
                })
            }
            "file" => {
                let path = parts.next().ok_or_else(|| usage.to_string())?;
                Ok(InitSpec::File { path: path.into() })
            }
            other => Err(format!("unknown initial-data kind `{other}`; {usage}")),
        }
    }
}

impl std::fmt::Display for InitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitSpec::SingleMode { mode, amplitude } => {
                write!(f, "single_mode:{mode}:{amplitude}")
            }
            InitSpec::RandomDecay {
                norm,
                decay_exponent,
            } => write!(f, "random_decay:{norm}:{decay_exponent}"),
            InitSpec::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}

/// One reproducible run; every field can come from a JSON config file and be
/// overridden on the command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub s: f64,
    pub n_modes: usize,
    pub tol: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub method: SolveMethod,
    pub seed: u64,
    pub init: InitSpec,
    pub output_dir: PathBuf,
    pub allow_large_data: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            n_modes: 64,
            tol: 1e-10,
            t_max: 5.0,
            t_steps: 201,
            method: SolveMethod::ExpSum,
            seed: 0,
            init: InitSpec::RandomDecay {
                norm: 0.05,
                decay_exponent: 2.0,
            },
            output_dir: PathBuf::from("out"),
            allow_large_data: false,
        }
    }
}

impl RunConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // negation rejects NaN values
    pub fn validate(&self) -> Result<(), String> {
        if !(self.s > 0.0 && self.s <= 2.0) {
            return Err(format!("s = {} outside (0, 2]", self.s));
        }
        if self.n_modes < 2 {
            return Err(format!("n_modes = {} must be ≥ 2", self.n_modes));
        }
        if !(self.tol > 0.0) {
            return Err(format!("tol = {} must be positive", self.tol));
        }
        if !(self.t_max > 0.0) {
            return Err(format!("t_max = {} must be positive", self.t_max));
        }
        if self.t_steps < 2 {
            return Err(format!("t_steps = {} must be ≥ 2", self.t_steps));
        }
        if let InitSpec::SingleMode { mode, .. } = self.init {
            if mode < 2 || mode > self.n_modes {
                return Err(format!(
                    "single-mode index {mode} outside admissible range [2, {}]",
                    self.n_modes
                ));
            }
        }
        Ok(())
    }

    /// Cache directory: `KINETIC_SPECTRAL_CACHE` when set, else
    /// `<output_dir>/cache`.
    pub fn cache_dir(&self) -> PathBuf {
        match std::env::var_os("KINETIC_SPECTRAL_CACHE") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.join("cache"),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}
