//! Pseudo ground truth from unlabeled video.
//!
//! Pairwise matches between nearby frames are split into per-frame endpoint
//! observations, merged by confidence-ordered NMS into anchors, linked into
//! tracks with a conflict-rejecting union-find, optionally refined, and
//! finally mined for distant, well-covered training pairs.

mod build;
mod nms;
mod refine;
mod schedule;
mod select;

pub use build::{aggregate, build_tracks, AnchorEdge, AnchorRef, PairMatches, Track, TrackPoint, TrackSet};
pub use nms::{nms_merge, Anchor, EndpointObservation, NmsResult, ObservationSide};
pub use refine::{refine_tracks, Refiner};
pub use schedule::{plan_pair_schedule, retained_frames};
pub use select::{
    geometric_verify, sample_matches, select_training_pairs, SelectionConfig, TrainingPairRecord,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("merge window must be odd and at least 1, got {0}")]
    InvalidWindow(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("geometric verification needs at least 8 matches, got {0}")]
    InsufficientMatches(usize),
    #[error("no fundamental matrix reached the minimal inlier count")]
    NoModel,
    #[error("external refiner protocol violation: {0}")]
    ExternalRefinerProtocol(String),
    #[error(transparent)]
    Robust(#[from] crate::robust::RobustError),
}
