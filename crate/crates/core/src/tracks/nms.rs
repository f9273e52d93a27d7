use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TrackError;
use crate::geometry::PixelPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationSide {
    Left,
    Right,
}

/// One endpoint of a pairwise match, seen in a single frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointObservation {
    pub id: usize,
    pub frame: u32,
    pub point: PixelPoint,
    pub confidence: f64,
    pub source_pair: (u32, u32),
    pub side: ObservationSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub frame: u32,
    pub point: PixelPoint,
    /// Maximum confidence over the claimed observations.
    pub confidence: f64,
    /// Ids of the observations snapped to this anchor, founder first.
    pub claimed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmsResult {
    pub anchors: Vec<Anchor>,
    /// Anchor index for each input observation, by input position.
    pub assignment: Vec<usize>,
}

fn processing_order(obs: &[EndpointObservation]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&obs[a], &obs[b]);
        q.confidence
            .total_cmp(&p.confidence)
            .then(p.point.y.total_cmp(&q.point.y))
            .then(p.point.x.total_cmp(&q.point.x))
            .then(p.id.cmp(&q.id))
    });
    order
}

/// Greedy confidence-ordered merge of the observations of one frame.
///
/// The strongest unclaimed observation founds an anchor at its own location
/// and claims every unclaimed observation within Chebyshev distance
/// `(window - 1) / 2`. Ties are broken by `y`, then `x`, then id, so the
/// result does not depend on input order.
pub fn nms_merge(obs: &[EndpointObservation], window: u32) -> Result<NmsResult, TrackError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(TrackError::InvalidWindow(window));
    }
    let radius = ((window - 1) / 2) as f64;
    let cell = radius.max(1.0);
    let key = |p: PixelPoint| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, o) in obs.iter().enumerate() {
        grid.entry(key(o.point)).or_default().push(i);
    }

    const UNASSIGNED: usize = usize::MAX;
    let mut assignment = vec![UNASSIGNED; obs.len()];
    let mut anchors = Vec::new();
    for i in processing_order(obs) {
        if assignment[i] != UNASSIGNED {
            continue;
        }
        let founder = obs[i];
        let a = anchors.len();
        let mut claimed = vec![i];
        assignment[i] = a;
        let (cx, cy) = key(founder.point);
        for gy in cy - 1..=cy + 1 {
            for gx in cx - 1..=cx + 1 {
                let Some(bucket) = grid.get(&(gx, gy)) else { continue };
                for &j in bucket {
                    if assignment[j] == UNASSIGNED && obs[j].point.chebyshev(&founder.point) <= radius {
                        assignment[j] = a;
                        claimed.push(j);
                    }
                }
            }
        }
        claimed[1..].sort_unstable_by_key(|&j| obs[j].id);
        anchors.push(Anchor {
            frame: founder.frame,
            point: founder.point,
            confidence: claimed.iter().map(|&j| obs[j].confidence).fold(f64::MIN, f64::max),
            claimed: claimed.iter().map(|&j| obs[j].id).collect(),
        });
    }
    Ok(NmsResult { anchors, assignment })
}
