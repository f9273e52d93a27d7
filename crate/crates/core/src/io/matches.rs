use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create, finish, open, read_jsonl_values, write_line, IoError, Provenance};
use crate::geometry::{Correspondence, PixelPoint};

pub const XMF_MAGIC: &[u8; 4] = b"XMF1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchHeader {
    #[serde(rename = "type")]
    pub kind: String,
    pub left: String,
    pub right: String,
    pub width0: u32,
    pub height0: u32,
    pub width1: u32,
    pub height1: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl MatchHeader {
    pub fn new(left: impl Into<String>, right: impl Into<String>, size0: (u32, u32), size1: (u32, u32)) -> Self {
        Self {
            kind: "pair_header".into(),
            left: left.into(),
            right: right.into(),
            width0: size0.0,
            height0: size0.1,
            width1: size1.0,
            height1: size1.1,
            provenance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct MatchRecord {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    conf: f64,
}

pub fn write_matches_jsonl(path: &Path, header: &MatchHeader, matches: &[Correspondence]) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_line(&mut w, path, header)?;
    for m in matches {
        let r = MatchRecord {
            x0: m.left.x,
            y0: m.left.y,
            x1: m.right.x,
            y1: m.right.y,
            conf: m.confidence,
        };
        write_line(&mut w, path, &r)?;
    }
    finish(w, path)
}

/// Reads either match format, detected from the leading bytes.
pub fn read_matches(path: &Path) -> Result<(Option<MatchHeader>, Vec<Correspondence>), IoError> {
    let mut magic = [0u8; 4];
    let n = open(path)?.read(&mut magic).map_err(|e| IoError::io(path, e))?;
    if n == 4 && &magic == XMF_MAGIC {
        return Ok((None, read_xmf(path)?));
    }
    let (headers, records) = read_jsonl_values(path)?;
    let header = headers
        .into_iter()
        .find(|h| h.get("type").and_then(|t| t.as_str()) == Some("pair_header"))
        .map(|h| serde_json::from_value(h).map_err(|e| IoError::format(path, e)))
        .transpose()?;
    let matches = records
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let r: MatchRecord = serde_json::from_value(v).map_err(|e| IoError::format(path, format!("match {}: {e}", i + 1)))?;
            to_corr(r).map_err(|e| IoError::format(path, format!("match {}: {e}", i + 1)))
        })
        .collect::<Result<_, _>>()?;
    Ok((header, matches))
}

fn to_corr(r: MatchRecord) -> Result<Correspondence, String> {
    let (l, rt) = (PixelPoint::new(r.x0, r.y0), PixelPoint::new(r.x1, r.y1));
    if !l.is_finite() || !rt.is_finite() {
        return Err("non-finite coordinate".into());
    }
    Correspondence::new(l, rt, r.conf).map_err(|e| e.to_string())
}

pub fn write_xmf(path: &Path, matches: &[Correspondence]) -> Result<(), IoError> {
    let mut w = create(path)?;
    let count = u32::try_from(matches.len()).map_err(|_| IoError::format(path, "too many matches"))?;
    let mut buf = Vec::with_capacity(8 + matches.len() * 20);
    buf.extend_from_slice(XMF_MAGIC);
    buf.extend_from_slice(&count.to_le_bytes());
    for m in matches {
        for v in [m.left.x, m.left.y, m.right.x, m.right.y, m.confidence] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(|e| IoError::io(path, e))?;
    finish(w, path)
}

pub fn read_xmf(path: &Path) -> Result<Vec<Correspondence>, IoError> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| IoError::io(path, e))?;
    if bytes.len() < 8 || &bytes[..4] != XMF_MAGIC {
        return Err(IoError::format(path, "missing XMF1 magic"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = &bytes[8..];
    if body.len() != count * 20 {
        return Err(IoError::format(path, format!("expected {count} records, found {} bytes", body.len())));
    }
    body.chunks_exact(20)
        .enumerate()
        .map(|(i, rec)| {
            let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64;
            let r = MatchRecord { x0: f(0), y0: f(1), x1: f(2), y1: f(3), conf: f(4) };
            to_corr(r).map_err(|e| IoError::format(path, format!("match {}: {e}", i + 1)))
        })
        .collect()
}
