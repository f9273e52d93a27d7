use std::io::{BufRead, Write};
use std::path::Path;

use super::{create, finish, open, IoError};
use crate::geometry::PixelPoint;

pub const LANDMARK_HEADER: &str = "x_src,y_src,x_dst,y_dst";

/// Landmark pairs `(source, target)` from a CSV with a header row.
pub fn read_landmarks(path: &Path) -> Result<Vec<(PixelPoint, PixelPoint)>, IoError> {
    let mut lines = open(path)?.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| IoError::io(path, e))?
        .ok_or_else(|| IoError::format(path, "empty landmark file"))?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols != LANDMARK_HEADER.split(',').collect::<Vec<_>>() {
        return Err(IoError::format(path, format!("expected header {LANDMARK_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::format(path, format!("line {}: {e}", n + 2)))?;
        if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
            return Err(IoError::format(path, format!("line {}: expected 4 finite numbers", n + 2)));
        }
        out.push((PixelPoint::new(v[0], v[1]), PixelPoint::new(v[2], v[3])));
    }
    Ok(out)
}

pub fn write_landmarks(path: &Path, pairs: &[(PixelPoint, PixelPoint)]) -> Result<(), IoError> {
    let mut w = create(path)?;
    writeln!(w, "{LANDMARK_HEADER}").map_err(|e| IoError::io(path, e))?;
    for (s, d) in pairs {
        writeln!(w, "{},{},{},{}", s.x, s.y, d.x, d.y).map_err(|e| IoError::io(path, e))?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lm.csv");
        let pairs = vec![(PixelPoint::new(1.5, 2.0), PixelPoint::new(3.0, -4.25))];
        write_landmarks(&p, &pairs).unwrap();
        assert_eq!(read_landmarks(&p).unwrap(), pairs);
        std::fs::write(&p, "a,b,c,d\n1,2,3,4\n").unwrap();
        assert!(read_landmarks(&p).is_err());
    }
}
