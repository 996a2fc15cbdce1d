//! Artifact files: profile CSVs, JSON reports, and a manifest of SHA-256
//! hashes. Only the manifest carries a timestamp, so repeated runs produce
//! byte-identical CSV and JSON files.

use crate::grid::RadialProfile;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("profile has {u} values but {extra} flux values")]
    LengthMismatch { u: usize, extra: usize },
    #[error("hash mismatch for {path}")]
    HashMismatch { path: String },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

/// Full-precision scientific notation (17 significant digits).
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with header `r,u,du,flux`.
pub fn profile_csv(profile: &RadialProfile, flux: &[f64]) -> Result<Vec<u8>, IoError> {
    if flux.len() != profile.u.len() {
        return Err(IoError::LengthMismatch {
            u: profile.u.len(),
            extra: flux.len(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "u", "du", "flux"])?;
    for (((r, u), du), f) in profile
        .nodes()
        .iter()
        .zip(&profile.u)
        .zip(&profile.du)
        .zip(flux)
    {
        w.write_record([
            format_real(*r),
            format_real(*u),
            format_real(*du),
            format_real(*f),
        ])?;
    }
    w.into_inner()
        .map_err(|e| IoError::Csv(e.into_error().into()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, IoError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, IoError> {
        let path = dir.join(MANIFEST_NAME);
        let bytes = fs::read(&path).map_err(fs_err(&path))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Re-hashes every listed file.
    pub fn verify(&self, dir: &Path) -> Result<(), IoError> {
        for entry in &self.files {
            let path = dir.join(&entry.path);
            let bytes = fs::read(&path).map_err(fs_err(&path))?;
            if sha256_hex(&bytes) != entry.sha256 || bytes.len() as u64 != entry.bytes {
                return Err(IoError::HashMismatch {
                    path: entry.path.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Writes files into one directory and records each in the manifest.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, IoError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(fs_err(&dir))?;
        Ok(ArtifactWriter {
            dir,
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, IoError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(fs_err(&path))?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, IoError> {
        self.write(name, &json_bytes(value)?)
    }

    pub fn write_profile(
        &mut self,
        name: &str,
        profile: &RadialProfile,
        flux: &[f64],
    ) -> Result<PathBuf, IoError> {
        self.write(name, &profile_csv(profile, flux)?)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self) -> Result<Manifest, IoError> {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let manifest = Manifest {
            created_unix,
            files: self.entries,
        };
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, json_bytes(&manifest)?).map_err(fs_err(&path))?;
        Ok(manifest)
    }
}

/// File name of the profile CSV for ball radius `k`.
pub fn profile_file_name(k: f64) -> String {
    format!("profile_k{k}.csv")
}
