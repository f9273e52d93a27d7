use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::build::Track;
use super::TrackError;
use crate::geometry::Correspondence;
use crate::robust::{ransac, ModelKind, RansacConfig, RobustError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub min_gap: u32,
    pub min_covisible: usize,
    /// Pixels.
    pub min_motion: f64,
}

impl SelectionConfig {
    /// Pairs at least 20 frames apart with 300 shared tracks moving 30 px
    /// on average.
    pub fn far() -> Self {
        Self {
            min_gap: 20,
            min_covisible: 300,
            min_motion: 30.0,
        }
    }

    /// Pairs at least 10 frames apart with 300 shared tracks and no motion
    /// requirement.
    pub fn near() -> Self {
        Self {
            min_gap: 10,
            min_covisible: 300,
            min_motion: 0.0,
        }
    }

    fn accepts(&self, gap: u32, covisible: usize, motion: f64) -> bool {
        gap >= self.min_gap && covisible >= self.min_covisible && motion >= self.min_motion
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self::far()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPairRecord {
    pub frames: (u32, u32),
    #[serde(skip)]
    pub matches: Vec<Correspondence>,
    pub covisibility: usize,
    pub mean_motion: f64,
    pub thresholds: SelectionConfig,
}

/// Every frame pair `(a, b)`, `a < b`, whose shared tracks satisfy the gap,
/// covisibility and mean-motion thresholds (all inclusive). Matches take the
/// track points at both frames in track order, with the lower of the two
/// confidences.
pub fn select_training_pairs(tracks: &[Track], cfg: &SelectionConfig) -> Vec<TrainingPairRecord> {
    let mut stats: BTreeMap<(u32, u32), (usize, f64)> = BTreeMap::new();
    for t in tracks {
        let obs = &t.observations;
        for (i, a) in obs.iter().enumerate() {
            for b in &obs[i + 1..] {
                if b.frame - a.frame < cfg.min_gap {
                    continue;
                }
                let e = stats.entry((a.frame, b.frame)).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += a.point.distance(&b.point);
            }
        }
    }
    let accepted: Vec<((u32, u32), usize, f64)> = stats
        .into_iter()
        .map(|(k, (n, sum))| (k, n, sum / n as f64))
        .filter(|&((a, b), n, motion)| cfg.accepts(b - a, n, motion))
        .collect();
    accepted
        .into_par_iter()
        .map(|((a, b), n, motion)| {
            let matches = tracks
                .iter()
                .filter_map(|t| {
                    let (p, q) = (t.point_at(a)?, t.point_at(b)?);
                    Correspondence::new(p.point, q.point, p.confidence.min(q.confidence)).ok()
                })
                .collect();
            TrainingPairRecord {
                frames: (a, b),
                matches,
                covisibility: n,
                mean_motion: motion,
                thresholds: *cfg,
            }
        })
        .collect()
}

/// Spatially balanced top-confidence subset.
///
/// Left points are binned on a `cell` pixel grid; bins are visited in
/// row-major order, each giving up its best remaining match per round, until
/// `k` matches are taken or all bins are empty.
pub fn sample_matches(matches: &[Correspondence], k: usize, cell: f64) -> Result<Vec<Correspondence>, TrackError> {
    if k == 0 || !(cell > 0.0) {
        return Err(TrackError::InvalidArgument("k and cell must be positive".into()));
    }
    let mut bins: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, m) in matches.iter().enumerate() {
        let key = ((m.left.y / cell).floor() as i64, (m.left.x / cell).floor() as i64);
        bins.entry(key).or_default().push(i);
    }
    let mut queues: Vec<std::vec::IntoIter<usize>> = bins
        .into_values()
        .map(|mut v| {
            v.sort_by(|&a, &b| matches[b].confidence.total_cmp(&matches[a].confidence).then(a.cmp(&b)));
            v.into_iter()
        })
        .collect();
    let mut out = Vec::with_capacity(k.min(matches.len()));
    while out.len() < k {
        let before = out.len();
        for q in queues.iter_mut() {
            if out.len() == k {
                break;
            }
            if let Some(i) = q.next() {
                out.push(matches[i]);
            }
        }
        if out.len() == before {
            break;
        }
    }
    Ok(out)
}

/// Keeps the matches consistent with a RANSAC fundamental matrix, in input
/// order. `threshold` is the Sampson distance in pixels.
pub fn geometric_verify(matches: &[Correspondence], threshold: f64, seed: u64) -> Result<Vec<Correspondence>, TrackError> {
    if matches.len() < 8 {
        return Err(TrackError::InsufficientMatches(matches.len()));
    }
    let cfg = RansacConfig {
        inlier_threshold: threshold,
        ..RansacConfig::for_kind(ModelKind::Fundamental, seed)
    };
    match ransac(matches, ModelKind::Fundamental, &cfg, None) {
        Ok(fit) => Ok(fit.inlier_indices.iter().map(|&i| matches[i]).collect()),
        Err(RobustError::NoModel) => Err(TrackError::NoModel),
        Err(e) => Err(e.into()),
    }
}
