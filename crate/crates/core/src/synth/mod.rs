//! Training and evaluation pair synthesis.
//!
//! Three sources produce [`SynthesizedPair`]s: single images warped by a
//! sampled homography or similarity, posed multi-view images gated by
//! depth consistency, and pixel-aligned modality substitution applied on
//! top of either.

mod modality;
mod pairs;
mod sampling;
mod warp;

pub use modality::{apply_modality, Auxiliary, ModalityGenerator, ModalityMode, Side};
pub use pairs::{
    make_depth_pair, make_warp_pair, DepthPairConfig, PairProvenance, SynthesizedPair,
    WarpSampler,
};
pub use sampling::{
    sample_eval_transform, sample_homography, EvalWarpPreset, HomographyDraw,
    HomographySampleRanges, Interval, PresetName, SampledTransform, SimilarityDraw, WarpDraw,
    COMPOSITION_ORDER, MAX_RESAMPLES,
};
pub use warp::warp_image;

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid sampling range: {0}")]
    InvalidRange(String),
    #[error("sampled transform is degenerate after {0} attempts")]
    DegenerateTransform(u32),
    #[error("overlap ratio {ratio:.4} outside the mining interval")]
    NoOverlap { ratio: f64 },
    #[error("auxiliary is {got_w}x{got_h}, image is {want_w}x{want_h}")]
    DimensionMismatch {
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("generator `{0}` needs an auxiliary input")]
    MissingAuxiliary(String),
    #[error("view `{0}` has no image")]
    MissingImage(String),
    #[error("grid step must be at least 1")]
    InvalidGridStep,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
