//! File emission: data files are deterministic, run metadata goes to a
//! `<name>.meta.json` sidecar next to each profile or curve.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flameball::{NonlinearitySpec, RadialProfile};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

/// Everything `validate` needs to re-check a profile CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub command: String,
    pub version: String,
    pub theta: f64,
    pub eps: f64,
    pub beta: f64,
    pub nonlinearity: NonlinearitySpec,
    /// Slack on the pointwise bounds (iterative solvers carry an iteration error).
    pub bounds_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl ProfileMeta {
    pub fn new(command: &str, theta: f64, eps: f64, beta: f64, nonlinearity: NonlinearitySpec) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            theta,
            eps,
            beta,
            nonlinearity,
            bounds_tol: 1e-12,
            config: None,
            elapsed_seconds: None,
        }
    }
}

/// `dir/name.csv` -> `dir/name.meta.json`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("meta.json")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(flameball::Error::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_profile(path: &Path, profile: &RadialProfile, meta: &ProfileMeta) -> Result<(), CliError> {
    profile.write_csv(create(path)?)?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_meta(path: &Path) -> Result<ProfileMeta, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::config("meta", format!("{}: {e}", path.display())))
}
