use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{create, finish, open, IoError};
use crate::geometry::{CameraIntrinsics, RigidPose};

/// On-disk camera: intrinsics plus a world-to-camera pose as a row-major
/// 4x4 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub pose: Vec<f64>,
}

impl CameraFile {
    pub fn new(k: &CameraIntrinsics, pose: &RigidPose) -> Self {
        Self {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            pose: pose.to_row_major().to_vec(),
        }
    }

    /// Validated intrinsics and pose. Rotations are snapped to the nearest
    /// orthonormal matrix to absorb text round-off.
    pub fn parse(&self) -> Result<(CameraIntrinsics, RigidPose), String> {
        let k = CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            .map_err(|e| e.to_string())?;
        if self.pose.len() != 16 {
            return Err(format!("pose must have 16 entries, got {}", self.pose.len()));
        }
        let p = &self.pose;
        if p[12..15].iter().any(|v| v.abs() > 1e-9) || (p[15] - 1.0).abs() > 1e-9 {
            return Err("pose bottom row must be [0, 0, 0, 1]".into());
        }
        let r = Matrix3::new(p[0], p[1], p[2], p[4], p[5], p[6], p[8], p[9], p[10]);
        let t = Vector3::new(p[3], p[7], p[11]);
        let pose = RigidPose::nearest(r, t).map_err(|e| e.to_string())?;
        Ok((k, pose))
    }
}

pub fn read_camera(path: &Path) -> Result<(CameraIntrinsics, RigidPose), IoError> {
    let file: CameraFile = serde_json::from_reader(open(path)?).map_err(|e| IoError::format(path, e))?;
    file.parse().map_err(|e| IoError::format(path, e))
}

pub fn write_camera(path: &Path, k: &CameraIntrinsics, pose: &RigidPose) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &CameraFile::new(k, pose)).map_err(|e| IoError::format(path, e))?;
    finish(w, path)
}
