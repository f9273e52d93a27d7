//! Registration and pose metrics and the per-dataset evaluation protocols.

mod metrics;
mod protocol;
mod report;

pub use metrics::{
    aggregate_rtre, auc, corner_warp_error, median, rtre, success_curve, success_rate, RtreAggregates,
};
pub use protocol::{evaluate_pair, run_protocol, EvalConfig, PairInput, Protocol, REFERENCE_LONGEST_EDGE};
pub use report::{emit_report, CurvePoint, ErrorKind, ErrorSample, MetricReport, ThresholdValue, SCHEMA_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no samples to aggregate")]
    EmptySet,
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("transform maps a control point to infinity")]
    DegenerateTransform,
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}
