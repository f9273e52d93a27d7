//! Robust model fitting.
//!
//! A classic hypothesize-and-verify RANSAC drives four model families:
//! affine and homography (residual: symmetric transfer distance in pixels),
//! fundamental and essential (residual: Sampson distance). Cubic B-spline
//! free-form deformation refines an affine fit non-rigidly.

mod bspline;
mod linear;
mod pose;
mod ransac;
mod solvers;

pub use bspline::{
    bspline_objective, evaluate_bspline, fit_bspline_sgd, BSplineConfig, BSplineField, BSplineFit,
};
pub use pose::{decompose_essential, recover_pose, recover_pose_normalized, triangulate};
pub use ransac::{model_residual, ransac, FitResult, FittedModel, ModelKind, RansacConfig};
pub use solvers::{
    sampson_distance, solve_affine_lsq, solve_epipolar_8pt, solve_homography_dlt,
    symmetric_transfer_error,
};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustError {
    #[error("need at least {need} correspondences, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("no hypothesis reached the minimal-sample inlier count")]
    NoModel,
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("cheirality test inconclusive: best candidate has {best} of {total} points in front")]
    CheiralityAmbiguous { best: usize, total: usize },
    #[error("B-spline optimisation diverged at step {0}")]
    Diverged(usize),
    #[error("essential estimation requires both intrinsics")]
    MissingIntrinsics,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
