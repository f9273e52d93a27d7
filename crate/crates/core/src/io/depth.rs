use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::{create, finish, open, IoError};
use crate::geometry::DepthMap;

/// Sidecar next to a 16-bit PNG depth map: `depth = raw * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub scale: f64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Loads a depth map by extension: `.pfm` or `.png` (with sidecar).
pub fn read_depth(path: &Path) -> Result<DepthMap, IoError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("pfm") => read_pfm(path),
        Some("png") => read_png16_depth(path),
        _ => Err(IoError::format(path, "unsupported depth format (expected .pfm or .png)")),
    }
}

fn header_token(r: &mut impl BufRead, path: &Path) -> Result<String, IoError> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line).map_err(|e| IoError::io(path, e))? == 0 {
            return Err(IoError::format(path, "truncated PFM header"));
        }
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            return Ok(t.to_string());
        }
    }
}

/// Single-channel PFM. A negative scale marks little-endian data; rows are
/// stored bottom to top.
pub fn read_pfm(path: &Path) -> Result<DepthMap, IoError> {
    let mut r = open(path)?;
    let magic = header_token(&mut r, path)?;
    if magic != "Pf" {
        return Err(IoError::format(path, format!("expected single-channel PFM magic \"Pf\", got {magic:?}")));
    }
    let dims = header_token(&mut r, path)?;
    let mut it = dims.split_whitespace().map(str::parse::<u32>);
    let (Some(Ok(w)), Some(Ok(h)), None) = (it.next(), it.next(), it.next()) else {
        return Err(IoError::format(path, format!("bad PFM dimensions {dims:?}")));
    };
    let scale: f64 = header_token(&mut r, path)?
        .parse()
        .map_err(|e| IoError::format(path, format!("bad PFM scale: {e}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(IoError::format(path, "PFM scale must be non-zero"));
    }
    let little = scale < 0.0;
    let n = w as usize * h as usize;
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf).map_err(|e| IoError::io(path, e))?;
    let mut values = vec![0.0; n];
    for (i, chunk) in buf.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, col) = (i / w as usize, i % w as usize);
        let flipped = (h as usize - 1 - row) * w as usize + col;
        // Non-finite depths (common for sky) are treated as invalid.
        values[flipped] = if v.is_finite() { v as f64 } else { 0.0 };
    }
    DepthMap::new(w, h, values).map_err(|e| IoError::format(path, e))
}

pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<(), IoError> {
    let mut out = create(path)?;
    let (w, h) = (depth.width(), depth.height());
    write!(out, "Pf\n{w} {h}\n-1.0\n").map_err(|e| IoError::io(path, e))?;
    let values = depth.values();
    for row in (0..h as usize).rev() {
        for v in &values[row * w as usize..(row + 1) * w as usize] {
            out.write_all(&(*v as f32).to_le_bytes()).map_err(|e| IoError::io(path, e))?;
        }
    }
    finish(out, path)
}

/// 16-bit grayscale PNG; raw value 0 is invalid.
pub fn read_png16_depth(path: &Path) -> Result<DepthMap, IoError> {
    let side = sidecar_path(path);
    let sidecar: DepthSidecar = serde_json::from_reader(open(&side)?).map_err(|e| IoError::format(&side, e))?;
    if !(sidecar.scale > 0.0 && sidecar.scale.is_finite()) {
        return Err(IoError::format(&side, "scale must be positive"));
    }
    let img = image::open(path).map_err(|e| IoError::format(path, e))?.into_luma16();
    let (w, h) = img.dimensions();
    let values = img.pixels().map(|p| p.0[0] as f64 * sidecar.scale).collect();
    DepthMap::new(w, h, values).map_err(|e| IoError::format(path, e))
}

/// Quantizes `depth / scale` to 16 bits and writes the sidecar.
pub fn write_png16_depth(path: &Path, depth: &DepthMap, scale: f64) -> Result<(), IoError> {
    if !(scale > 0.0) {
        return Err(IoError::format(path, "scale must be positive"));
    }
    let raw: Vec<u16> = depth
        .values()
        .iter()
        .map(|&v| if v > 0.0 { (v / scale).round().clamp(1.0, u16::MAX as f64) as u16 } else { 0 })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width(), depth.height(), raw).expect("buffer matches dimensions");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    buf.save(path).map_err(|e| IoError::format(path, e))?;
    let side = sidecar_path(path);
    let mut w = create(&side)?;
    serde_json::to_writer(&mut w, &DepthSidecar { scale }).map_err(|e| IoError::format(&side, e))?;
    finish(w, &side)
}
