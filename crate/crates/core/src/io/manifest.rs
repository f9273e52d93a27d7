use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl, IoError};
use crate::geometry::{CameraIntrinsics, PixelPoint, RelativePoseEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairGtKind {
    Homography,
    Matches,
}

/// One synthesized pair. `gt` is the row-major homography or the path of
/// a match file, depending on `gt_kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairManifestRecord {
    pub pair_id: String,
    pub left_path: String,
    pub right_path: String,
    pub gt_kind: PairGtKind,
    pub gt: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matches_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<String>,
    pub modalities: [String; 2],
    pub seed: u64,
    pub source: String,
}

pub fn write_pair_manifest(
    path: &Path,
    header: Option<&serde_json::Value>,
    records: &[PairManifestRecord],
) -> Result<(), IoError> {
    write_jsonl(path, header, records)
}

pub fn read_pair_manifest(path: &Path) -> Result<Vec<PairManifestRecord>, IoError> {
    read_jsonl(path)
}

/// Pose ground truth: relative rotation (row-major), translation and both
/// intrinsic matrices (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseGt {
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
    #[serde(rename = "K0")]
    pub k0: [f64; 9],
    #[serde(rename = "K1")]
    pub k1: [f64; 9],
}

impl PoseGt {
    pub fn relative_pose(&self) -> Result<RelativePoseEstimate, String> {
        RelativePoseEstimate::new(Matrix3::from_row_slice(&self.r), Vector3::from_row_slice(&self.t))
            .map_err(|e| e.to_string())
    }

    /// Intrinsics for images of the given sizes.
    pub fn intrinsics(&self, size0: (u32, u32), size1: (u32, u32)) -> Result<(CameraIntrinsics, CameraIntrinsics), String> {
        let mk = |k: &[f64; 9], (w, h): (u32, u32)| {
            if k[1] != 0.0 || k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0 {
                return Err("intrinsic matrix must be [[fx,0,cx],[0,fy,cy],[0,0,1]]".to_string());
            }
            CameraIntrinsics::new(k[0], k[4], k[2], k[5], w, h).map_err(|e| e.to_string())
        };
        Ok((mk(&self.k0, size0)?, mk(&self.k1, size1)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Planar(Matrix3<f64>),
    Landmarks(Vec<(PixelPoint, PixelPoint)>),
    Pose(PoseGt),
}

/// One evaluation pair.
///
/// `gt` holds 9 row-major numbers (`planar`), a landmark CSV path relative
/// to the manifest (`landmarks`) or a [`PoseGt`] object (`pose`). Sizes are
/// `[width, height]` of the images the predictions refer to; `native_size`
/// is the original resolution of the left image when it was downsized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalManifestRecord {
    pub pair_id: String,
    pub left: String,
    pub right: String,
    pub gt_kind: String,
    pub gt: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_size: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_size: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native_size: Option<[u32; 2]>,
}

impl EvalManifestRecord {
    /// Parses the ground-truth payload; landmark paths resolve against
    /// `base_dir`.
    pub fn ground_truth(&self, base_dir: &Path) -> Result<GroundTruth, IoError> {
        let bad = |m: String| IoError::format(Path::new(&self.pair_id), m);
        match self.gt_kind.as_str() {
            "planar" => {
                let m: [f64; 9] = serde_json::from_value(self.gt.clone()).map_err(|e| bad(format!("planar gt: {e}")))?;
                Ok(GroundTruth::Planar(Matrix3::from_row_slice(&m)))
            }
            "landmarks" => {
                let file = self.gt.as_str().ok_or_else(|| bad("landmark gt must be a path".into()))?;
                Ok(GroundTruth::Landmarks(super::read_landmarks(&base_dir.join(file))?))
            }
            "pose" => {
                let p: PoseGt = serde_json::from_value(self.gt.clone()).map_err(|e| bad(format!("pose gt: {e}")))?;
                Ok(GroundTruth::Pose(p))
            }
            other => Err(bad(format!("unknown gt_kind {other:?}"))),
        }
    }
}

pub fn read_eval_manifest(path: &Path) -> Result<Vec<EvalManifestRecord>, IoError> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_manifest_parses_all_kinds() {
        let dir = tempfile::tempdir().unwrap();
        super::super::write_landmarks(&dir.path().join("lm.csv"), &[(PixelPoint::new(0.0, 0.0), PixelPoint::new(1.0, 1.0))]).unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(
            &p,
            concat!(
                "{\"type\":\"header\"}\n",
                "{\"pair_id\":\"a\",\"left\":\"l.png\",\"right\":\"r.png\",\"gt_kind\":\"planar\",\"gt\":[1,0,0,0,1,0,0,0,1],\"left_size\":[10,10]}\n",
                "{\"pair_id\":\"b\",\"left\":\"l.png\",\"right\":\"r.png\",\"gt_kind\":\"landmarks\",\"gt\":\"lm.csv\",\"native_size\":[2000,1000]}\n",
                "{\"pair_id\":\"c\",\"left\":\"l.png\",\"right\":\"r.png\",\"gt_kind\":\"pose\",\"gt\":{\"R\":[1,0,0,0,1,0,0,0,1],\"t\":[1,0,0],\"K0\":[100,0,50,0,100,40,0,0,1],\"K1\":[100,0,50,0,100,40,0,0,1]}}\n",
            ),
        )
        .unwrap();
        let recs = read_eval_manifest(&p).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(matches!(recs[0].ground_truth(dir.path()).unwrap(), GroundTruth::Planar(m) if m == Matrix3::identity()));
        assert!(matches!(recs[1].ground_truth(dir.path()).unwrap(), GroundTruth::Landmarks(v) if v.len() == 1));
        let GroundTruth::Pose(pose) = recs[2].ground_truth(dir.path()).unwrap() else { panic!() };
        assert_eq!(pose.relative_pose().unwrap().translation_direction().x, 1.0);
        assert!(pose.intrinsics((100, 80), (100, 80)).is_ok());
        assert_eq!(recs[1].native_size, Some([2000, 1000]));
    }
}
