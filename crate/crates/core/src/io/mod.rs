//! File formats.
//!
//! JSON Lines files may start with a header record carrying a `"type"`
//! field; record readers skip such lines.

mod camera;
mod depth;
mod images;
mod landmarks;
mod manifest;
mod matches;
mod model;
mod scene;
mod tracks;

pub use camera::{read_camera, write_camera, CameraFile};
pub use depth::{read_depth, read_pfm, read_png16_depth, write_pfm, write_png16_depth, DepthSidecar};
pub use images::{read_image, write_image_png, write_mask_png};
pub use landmarks::{read_landmarks, write_landmarks, LANDMARK_HEADER};
pub use manifest::{
    read_eval_manifest, read_pair_manifest, write_pair_manifest, EvalManifestRecord, GroundTruth,
    PairGtKind, PairManifestRecord, PoseGt,
};
pub use matches::{read_matches, read_xmf, write_matches_jsonl, write_xmf, MatchHeader, XMF_MAGIC};
pub use model::{read_model, write_model, ModelFile, ModelPayload, PoseJson};
pub use scene::{read_scene_dir, write_scene_view};
pub use tracks::{read_tracks, write_tracks};

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, msg: impl std::fmt::Display) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        }
    }

    /// True when the underlying cause is a missing or unreadable file.
    pub fn is_io(&self) -> bool {
        matches!(self, IoError::Io { .. })
    }
}

/// Run metadata embedded in every generated file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| IoError::io(path, e))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|e| IoError::io(path, e))
}

pub(crate) fn write_line<T: Serialize>(w: &mut impl Write, path: &Path, value: &T) -> Result<(), IoError> {
    serde_json::to_writer(&mut *w, value).map_err(|e| IoError::format(path, e))?;
    w.write_all(b"\n").map_err(|e| IoError::io(path, e))
}

pub(crate) fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), IoError> {
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Parsed lines of a JSON Lines file, header records (objects with a
/// `"type"` key) returned separately.
pub(crate) fn read_jsonl_values(path: &Path) -> Result<(Vec<serde_json::Value>, Vec<serde_json::Value>), IoError> {
    let mut headers = Vec::new();
    let mut records = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| IoError::format(path, format!("line {}: {e}", n + 1)))?;
        if v.get("type").is_some() {
            headers.push(v);
        } else {
            records.push(v);
        }
    }
    Ok((headers, records))
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let (_, records) = read_jsonl_values(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, v)| serde_json::from_value(v).map_err(|e| IoError::format(path, format!("record {}: {e}", i + 1))))
        .collect()
}

/// Writes an optional header followed by one JSON record per line.
pub fn write_jsonl<T: Serialize>(path: &Path, header: Option<&serde_json::Value>, records: &[T]) -> Result<(), IoError> {
    let mut w = create(path)?;
    if let Some(h) = header {
        write_line(&mut w, path, h)?;
    }
    for r in records {
        write_line(&mut w, path, r)?;
    }
    finish(w, path)
}
