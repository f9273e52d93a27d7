use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use super::build::Track;
use super::nms::{Anchor, EndpointObservation};
use super::TrackError;
use crate::geometry::PixelPoint;
use crate::io::{read_tracks, write_tracks};

/// Sub-pixel refinement stage applied to built tracks.
#[derive(Debug, Clone, PartialEq)]
pub enum Refiner {
    Identity,
    /// Confidence-weighted mean of each anchor's claimed observations,
    /// kept within the merge radius of the anchor.
    LocalCentroid { window: u32 },
    /// `program args.. <input.jsonl> <output.jsonl>`; the output must hold
    /// the same tracks over the same frames.
    External { command: Vec<String>, work_dir: Option<PathBuf> },
}

pub fn refine_tracks(
    tracks: &[Track],
    anchors: &BTreeMap<u32, Vec<Anchor>>,
    observations: &[EndpointObservation],
    refiner: &Refiner,
) -> Result<Vec<Track>, TrackError> {
    match refiner {
        Refiner::Identity => Ok(tracks.to_vec()),
        Refiner::LocalCentroid { window } => local_centroid(tracks, anchors, observations, *window),
        Refiner::External { command, work_dir } => external(tracks, command, work_dir.as_deref()),
    }
}

fn local_centroid(
    tracks: &[Track],
    anchors: &BTreeMap<u32, Vec<Anchor>>,
    observations: &[EndpointObservation],
    window: u32,
) -> Result<Vec<Track>, TrackError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(TrackError::InvalidWindow(window));
    }
    let radius = ((window - 1) / 2) as f64;
    let mut out = tracks.to_vec();
    for t in &mut out {
        for p in &mut t.observations {
            let Some(anchor) = p.anchor.and_then(|i| anchors.get(&p.frame)?.get(i)) else { continue };
            let claimed: Vec<&EndpointObservation> =
                anchor.claimed.iter().filter_map(|&id| observations.get(id)).collect();
            if claimed.is_empty() {
                continue;
            }
            let total: f64 = claimed.iter().map(|o| o.confidence).sum();
            let weight = |o: &EndpointObservation| if total > 0.0 { o.confidence / total } else { 1.0 / claimed.len() as f64 };
            let (mut x, mut y) = (0.0, 0.0);
            for o in &claimed {
                x += weight(o) * o.point.x;
                y += weight(o) * o.point.y;
            }
            let a = anchor.point;
            p.point = PixelPoint::new(x.clamp(a.x - radius, a.x + radius), y.clamp(a.y - radius, a.y + radius));
        }
    }
    Ok(out)
}

fn external(tracks: &[Track], command: &[String], work_dir: Option<&std::path::Path>) -> Result<Vec<Track>, TrackError> {
    let protocol = |m: String| TrackError::ExternalRefinerProtocol(m);
    let (program, args) = command.split_first().ok_or_else(|| protocol("empty command".into()))?;
    let base = work_dir
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("XMF_CACHE_DIR").map(PathBuf::from))
        .unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&base).map_err(|e| protocol(format!("cannot create {}: {e}", base.display())))?;
    let dir = tempfile::Builder::new()
        .prefix("xmf-refine-")
        .tempdir_in(&base)
        .map_err(|e| protocol(format!("cannot create work directory: {e}")))?;
    let input = dir.path().join("input.jsonl");
    let output = dir.path().join("output.jsonl");
    write_tracks(&input, tracks, None).map_err(|e| protocol(e.to_string()))?;

    let status = Command::new(program)
        .args(args)
        .arg(&input)
        .arg(&output)
        .status()
        .map_err(|e| protocol(format!("cannot run {program}: {e}")))?;
    if !status.success() {
        return Err(protocol(format!("{program} exited with {status}")));
    }
    if !output.exists() {
        return Err(protocol("refiner produced no output file".into()));
    }
    let refined = read_tracks(&output).map_err(|e| protocol(e.to_string()))?;
    if refined.len() != tracks.len() {
        return Err(protocol(format!("expected {} tracks, got {}", tracks.len(), refined.len())));
    }
    let mut out = Vec::with_capacity(tracks.len());
    for (orig, new) in tracks.iter().zip(refined) {
        if orig.id != new.id || orig.frames() != new.frames() {
            return Err(protocol(format!("track {} changed shape", orig.id)));
        }
        let mut t = new;
        for (p, o) in t.observations.iter_mut().zip(&orig.observations) {
            if !p.point.is_finite() {
                return Err(protocol(format!("track {} has a non-finite point", orig.id)));
            }
            p.anchor = o.anchor;
        }
        out.push(t);
    }
    Ok(out)
}
