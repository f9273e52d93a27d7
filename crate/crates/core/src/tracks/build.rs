use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nms::{nms_merge, Anchor, EndpointObservation, ObservationSide};
use super::TrackError;
use crate::geometry::{Correspondence, PixelPoint};

/// Matches between two frames, left points in `frames.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatches {
    pub frames: (u32, u32),
    pub matches: Vec<Correspondence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnchorRef {
    pub frame: u32,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorEdge {
    pub a: AnchorRef,
    pub b: AnchorRef,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: u32,
    #[serde(flatten)]
    pub point: PixelPoint,
    #[serde(rename = "conf")]
    pub confidence: f64,
    /// Index of the source anchor within its frame, when known.
    #[serde(skip)]
    pub anchor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: usize,
    /// Strictly increasing frames.
    pub observations: Vec<TrackPoint>,
}

impl Track {
    pub fn point_at(&self, frame: u32) -> Option<&TrackPoint> {
        self.observations
            .binary_search_by_key(&frame, |o| o.frame)
            .ok()
            .map(|i| &self.observations[i])
    }

    pub fn frames(&self) -> Vec<u32> {
        self.observations.iter().map(|o| o.frame).collect()
    }
}

/// Everything produced while turning pairwise matches into tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    /// Indexed by observation id.
    pub observations: Vec<EndpointObservation>,
    pub anchors: BTreeMap<u32, Vec<Anchor>>,
    pub edges: Vec<AnchorEdge>,
    pub tracks: Vec<Track>,
}

/// Splits matches into endpoint observations, merges each frame with
/// [`nms_merge`] and links anchors with [`build_tracks`].
pub fn aggregate(pairs: &[PairMatches], window: u32) -> Result<TrackSet, TrackError> {
    let mut observations = Vec::new();
    for p in pairs {
        let (fl, fr) = p.frames;
        if fl == fr {
            return Err(TrackError::InvalidArgument(format!("pair links frame {fl} to itself")));
        }
        for m in &p.matches {
            for (frame, point, side) in [(fl, m.left, ObservationSide::Left), (fr, m.right, ObservationSide::Right)] {
                observations.push(EndpointObservation {
                    id: observations.len(),
                    frame,
                    point,
                    confidence: m.confidence,
                    source_pair: p.frames,
                    side,
                });
            }
        }
    }

    let mut by_frame: BTreeMap<u32, Vec<EndpointObservation>> = BTreeMap::new();
    for o in &observations {
        by_frame.entry(o.frame).or_default().push(*o);
    }
    let merged: Vec<(u32, Vec<EndpointObservation>, _)> = by_frame
        .into_par_iter()
        .map(|(f, obs)| {
            let r = nms_merge(&obs, window);
            (f, obs, r)
        })
        .collect();

    let mut anchor_of = vec![AnchorRef { frame: 0, index: 0 }; observations.len()];
    let mut anchors = BTreeMap::new();
    for (frame, obs, r) in merged {
        let r = r?;
        for (o, &a) in obs.iter().zip(&r.assignment) {
            anchor_of[o.id] = AnchorRef { frame, index: a };
        }
        anchors.insert(frame, r.anchors);
    }

    let edges: Vec<AnchorEdge> = (0..observations.len() / 2)
        .map(|m| AnchorEdge {
            a: anchor_of[2 * m],
            b: anchor_of[2 * m + 1],
            confidence: observations[2 * m].confidence,
        })
        .collect();
    let tracks = build_tracks(&anchors, &edges);
    Ok(TrackSet {
        observations,
        anchors,
        edges,
        tracks,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn edge_order(a: &AnchorEdge, b: &AnchorEdge) -> std::cmp::Ordering {
    let key = |e: &AnchorEdge| {
        let (lo, hi) = if e.a <= e.b { (e.a, e.b) } else { (e.b, e.a) };
        (lo.frame, hi.frame, lo.index, hi.index)
    };
    b.confidence.total_cmp(&a.confidence).then_with(|| key(a).cmp(&key(b)))
}

/// Union-find over anchors with edges taken in descending confidence.
///
/// An edge is rejected when the merged component would hold two different
/// anchors of the same frame. Components with fewer than two anchors are
/// dropped; track ids follow the order of each track's first observation.
pub fn build_tracks(anchors: &BTreeMap<u32, Vec<Anchor>>, edges: &[AnchorEdge]) -> Vec<Track> {
    let mut nodes: Vec<AnchorRef> = Vec::new();
    let mut node_of: BTreeMap<AnchorRef, usize> = BTreeMap::new();
    for (&frame, list) in anchors {
        for index in 0..list.len() {
            let r = AnchorRef { frame, index };
            node_of.insert(r, nodes.len());
            nodes.push(r);
        }
    }
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    let mut members: Vec<BTreeMap<u32, usize>> = nodes.iter().enumerate().map(|(i, r)| BTreeMap::from([(r.frame, i)])).collect();

    let mut sorted: Vec<&AnchorEdge> = edges.iter().collect();
    sorted.sort_by(|a, b| edge_order(a, b));
    for e in sorted {
        let (Some(&u), Some(&v)) = (node_of.get(&e.a), node_of.get(&e.b)) else { continue };
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            continue;
        }
        let (big, small) = if members[ru].len() >= members[rv].len() { (ru, rv) } else { (rv, ru) };
        let conflict = members[small]
            .iter()
            .any(|(f, n)| members[big].get(f).is_some_and(|m| m != n));
        if conflict {
            continue;
        }
        let moved = std::mem::take(&mut members[small]);
        members[big].extend(moved);
        parent[small] = big;
    }

    let mut tracks: Vec<Track> = Vec::new();
    for root in 0..nodes.len() {
        if parent[root] != root || members[root].len() < 2 {
            continue;
        }
        let observations = members[root]
            .values()
            .map(|&n| {
                let r = nodes[n];
                let a = &anchors[&r.frame][r.index];
                TrackPoint {
                    frame: r.frame,
                    point: a.point,
                    confidence: a.confidence,
                    anchor: Some(r.index),
                }
            })
            .collect();
        tracks.push(Track { id: 0, observations });
    }
    tracks.sort_by_key(|t| (t.observations[0].frame, t.observations[0].anchor));
    for (i, t) in tracks.iter_mut().enumerate() {
        t.id = i;
    }
    tracks
}
