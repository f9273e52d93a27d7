//! Non-neural core of a cross-modality image matching data and evaluation
//! pipeline.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`geometry`]: pinhole cameras, depth maps, rigid poses and the
//!   depth/cycle consistency checks that turn posed views into ground-truth
//!   correspondences.
//! - [`synth`]: training and evaluation pair synthesis (homography warps,
//!   posed multi-view pairs, pixel-aligned modality substitution).
//! - [`tracks`]: coarse-to-fine pseudo ground truth from unlabeled video
//!   (pair scheduling, confidence NMS, union-find tracks, pair selection).
//! - [`robust`]: RANSAC with affine, homography, fundamental and essential
//!   solvers, pose recovery, and cubic B-spline non-rigid refinement.
//! - [`eval`]: warping error, rTRE, pose error, SR/AUC and the per-dataset
//!   registration protocols.
//! - [`io`]: camera, depth, match, track, manifest and model file formats.
//! - [`synthetic`]: procedural scenes used by tests, benchmarks and demos.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eval;
pub mod geometry;
pub mod io;
pub mod raster;
pub mod robust;
pub mod seed;
pub mod synth;
pub mod synthetic;
pub mod tracks;

pub use geometry::{
    CameraIntrinsics, Correspondence, DepthMap, PixelPoint, PlanarTransform, PosedView,
    RelativePoseEstimate, RigidPose, TransformKind,
};
pub use raster::{Image, Mask};

/// Crate version, embedded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
