use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl, IoError, Provenance};
use crate::tracks::{Track, TrackPoint};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrackRecord {
    track_id: usize,
    obs: Vec<TrackPoint>,
}

/// Track JSON Lines, optionally preceded by a `track_header` record.
pub fn write_tracks(path: &Path, tracks: &[Track], provenance: Option<&Provenance>) -> Result<(), IoError> {
    let header = provenance.map(|p| serde_json::json!({ "type": "track_header", "provenance": p }));
    let records: Vec<TrackRecord> = tracks
        .iter()
        .map(|t| TrackRecord {
            track_id: t.id,
            obs: t.observations.clone(),
        })
        .collect();
    write_jsonl(path, header.as_ref(), &records)
}

/// Reads tracks and checks that frames are strictly increasing.
pub fn read_tracks(path: &Path) -> Result<Vec<Track>, IoError> {
    let records: Vec<TrackRecord> = read_jsonl(path)?;
    records
        .into_iter()
        .map(|r| {
            if !r.obs.windows(2).all(|w| w[0].frame < w[1].frame) {
                return Err(IoError::format(path, format!("track {} frames not strictly increasing", r.track_id)));
            }
            Ok(Track {
                id: r.track_id,
                observations: r.obs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PixelPoint;

    #[test]
    fn roundtrip_drops_anchor_index() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let pt = |frame, x| TrackPoint { frame, point: PixelPoint::new(x, 1.0), confidence: 0.5, anchor: Some(3) };
        let t = vec![Track { id: 4, observations: vec![pt(0, 1.0), pt(3, 2.5)] }];
        let prov = Provenance { tool_version: "0".into(), seed: 1, config_hash: "ab".into() };
        write_tracks(&p, &t, Some(&prov)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("{\"track_id\":4,\"obs\":[{\"frame\":0,\"x\":1.0,\"y\":1.0,\"conf\":0.5}"));
        let back = read_tracks(&p).unwrap();
        assert_eq!(back[0].observations[1].point, PixelPoint::new(2.5, 1.0));
        assert_eq!(back[0].observations[1].anchor, None);
    }

    #[test]
    fn rejects_unordered_frames() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        std::fs::write(&p, "{\"track_id\":0,\"obs\":[{\"frame\":2,\"x\":0,\"y\":0,\"conf\":1},{\"frame\":1,\"x\":0,\"y\":0,\"conf\":1}]}\n").unwrap();
        assert!(read_tracks(&p).is_err());
    }
}
