//! Run manifests and atomic artifact writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::args::{Command, GlobalOpts};
use crate::error::{CliError, CliResult};
use crate::json::to_json_bytes;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to reproduce a run. Output paths are deliberately
/// absent so a replay into another location yields an identical manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Command,
    pub seed: u64,
    pub substream: u64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub artifact_version: String,
    /// SHA-256 of input files, keyed by role.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of output files, keyed by role.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(global: &GlobalOpts, command: &Command) -> Self {
        Self {
            command: command.name().to_string(),
            parameters: command.clone(),
            seed: global.seed,
            substream: global.substream,
            tol_abs: global.tol_abs,
            tol_rel: global.tol_rel,
            artifact_version: ARTIFACT_VERSION.to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn global_opts(&self, out: Option<PathBuf>) -> GlobalOpts {
        GlobalOpts {
            seed: self.seed,
            substream: self.substream,
            tol_abs: self.tol_abs,
            tol_rel: self.tol_rel,
            out,
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| {
            CliError::Usage(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Usage(format!("malformed manifest {}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// One file produced by a command.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub role: &'static str,
    /// Appended to the stem of `--out` for secondary files; `None` for the main artifact.
    pub suffix: Option<&'static str>,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn primary(bytes: Vec<u8>) -> Self {
        Self {
            role: "primary",
            suffix: None,
            bytes,
        }
    }
}

/// Path of a secondary artifact: `out` with its extension replaced by `suffix`.
pub fn secondary_path(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn staged(path: &Path, bytes: &[u8]) -> CliResult<NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::Failure(format!("cannot stage output in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    Ok(tmp)
}

/// Writes all artifacts and the manifest sidecar, or nothing at all if
/// staging fails. Returns the manifest with output digests filled in.
pub fn write_artifacts(
    out: &Path,
    artifacts: &[Artifact],
    mut manifest: RunManifest,
) -> CliResult<RunManifest> {
    let mut pending = Vec::new();
    for a in artifacts {
        let path = match a.suffix {
            None => out.to_path_buf(),
            Some(s) => secondary_path(out, s),
        };
        manifest
            .outputs
            .insert(a.role.to_string(), sha256_hex(&a.bytes));
        pending.push((staged(&path, &a.bytes)?, path));
    }
    let manifest_bytes = to_json_bytes(&manifest)
        .map_err(|e| CliError::Failure(format!("cannot encode manifest: {e}")))?;
    let sidecar = manifest_path(out);
    pending.push((staged(&sidecar, &manifest_bytes)?, sidecar));
    for (tmp, path) in pending {
        tmp.persist(&path).map_err(|e| {
            CliError::Failure(format!("cannot write {}: {}", path.display(), e.error))
        })?;
    }
    Ok(manifest)
}
