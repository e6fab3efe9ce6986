//! JSON tensor and decomposition files.
//!
//! Tensor: `{"shape": [n1, ...], "data": [...row-major...], "nonneg": bool}`.
//! Decomposition: `{"shape": [...], "mode": "real" | "nonnegative",
//! "terms": [{"factors": [[...], ...]}, ...]}`.

use std::fs;
use std::path::{Path, PathBuf};

use nnrank_core::{Decomposition, Tensor};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("cannot serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| IoError::Parse { path: path.into(), source })
}

pub fn read_tensor(path: &Path) -> Result<Tensor, IoError> {
    read_json(path)
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition, IoError> {
    read_json(path)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    fs::write(path, to_json(value)?).map_err(|source| IoError::Write { path: path.into(), source })
}
