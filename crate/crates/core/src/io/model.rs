use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create, finish, open, IoError, Provenance};
use crate::robust::{BSplineField, BSplineFit, FitResult, FittedModel, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseJson {
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPayload {
    /// Row-major 3x3.
    Matrix([f64; 9]),
    Pose(PoseJson),
    Bspline {
        /// Row-major affine initialization.
        affine: [f64; 9],
        field: BSplineField,
    },
}

/// A fitted model on disk: `{kind, matrix | pose | bspline, inliers}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    #[serde(flatten)]
    pub payload: ModelPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub essential: Option<[f64; 9]>,
    pub inliers: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn row_major(m: &nalgebra::Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = m[(r, c)];
        }
    }
    out
}

impl ModelFile {
    pub fn from_fit(kind: ModelKind, fit: &FitResult) -> Self {
        let kind_name = serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let (payload, essential) = match &fit.model {
            FittedModel::Planar(h) => (ModelPayload::Matrix(h.to_row_major()), None),
            FittedModel::Fundamental(f) => (ModelPayload::Matrix(row_major(f)), None),
            FittedModel::Essential { matrix, pose } => (
                ModelPayload::Pose(PoseJson {
                    r: row_major(pose.rotation()),
                    t: [pose.translation_direction().x, pose.translation_direction().y, pose.translation_direction().z],
                }),
                Some(row_major(matrix)),
            ),
        };
        Self {
            kind: kind_name,
            payload,
            essential,
            inliers: fit.inlier_indices.clone(),
            provenance: None,
        }
    }

    pub fn from_bspline(fit: &BSplineFit, inliers: Vec<usize>) -> Self {
        Self {
            kind: "bspline".into(),
            payload: ModelPayload::Bspline {
                affine: fit.init.to_row_major(),
                field: fit.field.clone(),
            },
            essential: None,
            inliers,
            provenance: None,
        }
    }
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, model).map_err(|e| IoError::format(path, e))?;
    finish(w, path)
}

pub fn read_model(path: &Path) -> Result<ModelFile, IoError> {
    serde_json::from_reader(open(path)?).map_err(|e| IoError::format(path, e))
}
