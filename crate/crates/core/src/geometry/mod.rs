//! Camera, depth and pose primitives plus the depth-warping consistency
//! checks used to generate ground-truth matches from posed views.
//!
//! Pixel convention: `(0, 0)` is the center of the top-left pixel, so a
//! `W x H` image spans `[0, W-1] x [0, H-1]` in continuous coordinates.
//! Poses are world-to-camera: `X_cam = R * X_world + t`.

mod consistency;
mod pose_error;
mod types;

pub use consistency::{
    correspondence_errors, filter_grid_correspondences, lift_and_project, overlap_ratio,
    ConsistencyErrors, GtThresholds, Projection, DEFAULT_GRID_STEP,
};
pub use pose_error::{relative_pose_error, rotation_error_deg, translation_angle_deg, PoseError};
pub use types::{
    CameraIntrinsics, Correspondence, DepthMap, PixelPoint, PlanarTransform, PosedView,
    RelativePoseEstimate, RigidPose, TransformKind,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("point projects behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("depth sample is invalid")]
    InvalidDepth,
    #[error("projected point ({x:.3}, {y:.3}) lies outside the image")]
    OutOfBounds { x: f64, y: f64 },
    #[error("view `{0}` is missing its depth map or pose")]
    GeometryMissing(String),
    #[error("no pixel of the left view carries a valid depth")]
    NoValidDepth,
    #[error("translation vector has (near) zero norm")]
    DegenerateTranslation,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid depth map: {0}")]
    InvalidDepthMap(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("grid step must be at least 1")]
    InvalidGridStep,
}
