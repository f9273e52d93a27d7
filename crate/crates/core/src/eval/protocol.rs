use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{corner_warp_error, rtre};
use super::report::{ErrorKind, ErrorSample, MetricReport};
use super::EvalError;
use crate::geometry::{relative_pose_error, Correspondence, PlanarTransform, TransformKind};
use crate::io::{read_eval_manifest, read_matches, GroundTruth};
use crate::robust::{fit_bspline_sgd, ransac, BSplineConfig, FitResult, ModelKind, RansacConfig};
use crate::seed::derive_seed;

/// Longest image edge that pixel thresholds refer to.
pub const REFERENCE_LONGEST_EDGE: f64 = 840.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    WarpAffine,
    WarpHomography,
    RtreBspline,
    PoseEssential,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Self::WarpAffine, Self::WarpHomography, Self::RtreBspline, Self::PoseEssential];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::WarpAffine => "warp_affine",
            Self::WarpHomography => "warp_homography",
            Self::RtreBspline => "rtre_bspline",
            Self::PoseEssential => "pose_essential",
        }
    }

    pub fn error_kind(self) -> ErrorKind {
        match self {
            Self::WarpAffine | Self::WarpHomography => ErrorKind::WarpPx,
            Self::RtreBspline => ErrorKind::Rtre,
            Self::PoseEssential => ErrorKind::PoseDeg,
        }
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            Self::WarpAffine | Self::RtreBspline => ModelKind::Affine,
            Self::WarpHomography => ModelKind::Homography,
            Self::PoseEssential => ModelKind::Essential,
        }
    }

    pub fn default_thresholds(self) -> Vec<f64> {
        match self {
            Self::RtreBspline => vec![0.002, 0.005, 0.01],
            _ => vec![5.0, 10.0, 20.0],
        }
    }

    /// Resolution of the emitted success curve.
    pub fn curve_step(self) -> f64 {
        match self {
            Self::WarpAffine | Self::WarpHomography => 1.0,
            Self::PoseEssential => 0.5,
            Self::RtreBspline => 0.001,
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown protocol {s:?}; expected one of warp_affine, warp_homography, rtre_bspline, pose_essential"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub protocol: Protocol,
    pub thresholds: Vec<f64>,
    pub seed: u64,
    pub max_iterations: usize,
    pub confidence: f64,
    /// Overrides the model's default inlier threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inlier_threshold: Option<f64>,
    pub bspline: BSplineConfig,
}

impl EvalConfig {
    pub fn new(protocol: Protocol) -> Self {
        Self {
            protocol,
            thresholds: protocol.default_thresholds(),
            seed: 0,
            max_iterations: 1000,
            confidence: 0.99999,
            inlier_threshold: None,
            bspline: BSplineConfig::default(),
        }
    }

    fn ransac(&self, seed: u64) -> RansacConfig {
        let kind = self.protocol.model_kind();
        RansacConfig {
            max_iterations: self.max_iterations,
            confidence: self.confidence,
            inlier_threshold: self.inlier_threshold.unwrap_or(kind.default_threshold()),
            seed,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.thresholds.is_empty() {
            return Err(EvalError::ManifestInvalid("no thresholds configured".into()));
        }
        if let Some(&t) = self.thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(EvalError::InvalidThreshold(t));
        }
        self.ransac(0)
            .validate()
            .map_err(|e| EvalError::ManifestInvalid(e.to_string()))
    }
}

/// Everything needed to score one pair. `matches` is `None` when the
/// prediction file is missing.
#[derive(Debug, Clone)]
pub struct PairInput<'a> {
    pub pair_id: &'a str,
    pub matches: Option<&'a [Correspondence]>,
    pub gt: &'a GroundTruth,
    pub left_size: (u32, u32),
    pub right_size: (u32, u32),
    pub native_size: Option<(u32, u32)>,
}

/// Scores one pair. Never fails: problems are recorded on the sample.
pub fn evaluate_pair(input: &PairInput<'_>, cfg: &EvalConfig, seed: u64) -> ErrorSample {
    let kind = cfg.protocol.error_kind();
    match score(input, cfg, seed) {
        Ok(s) => s,
        Err(reason) => ErrorSample::failed(input.pair_id, kind, reason),
    }
}

fn score(input: &PairInput<'_>, cfg: &EvalConfig, seed: u64) -> Result<ErrorSample, String> {
    let protocol = cfg.protocol;
    let matches = input.matches.ok_or("missing prediction")?;
    let model = protocol.model_kind();
    let intrinsics = match (protocol, input.gt) {
        (Protocol::PoseEssential, GroundTruth::Pose(p)) => Some(p.intrinsics(input.left_size, input.right_size)?),
        (Protocol::PoseEssential, _) => return Err("pose protocol needs pose ground truth".into()),
        (_, GroundTruth::Pose(_)) => return Err("planar protocol needs planar or landmark ground truth".into()),
        (Protocol::RtreBspline, GroundTruth::Planar(_)) => return Err("rtre protocol needs landmark ground truth".into()),
        _ => None,
    };
    let fit: FitResult = ransac(
        matches,
        model,
        &cfg.ransac(seed),
        intrinsics.as_ref().map(|(a, b)| (a, b)),
    )
    .map_err(|e| e.to_string())?;
    let mut sample = ErrorSample {
        inliers: Some(fit.inlier_indices.len()),
        failure: None,
        ..ErrorSample::failed(input.pair_id, protocol.error_kind(), "")
    };
    let scale = input
        .native_size
        .map(|(w, h)| (REFERENCE_LONGEST_EDGE / w.max(h) as f64).min(1.0))
        .unwrap_or(1.0);
    match protocol {
        Protocol::WarpAffine | Protocol::WarpHomography => {
            let est = fit.model.as_planar().ok_or("no planar model")?;
            let err = match input.gt {
                GroundTruth::Planar(m) => {
                    let gt_kind = if m[(2, 0)] == 0.0 && m[(2, 1)] == 0.0 {
                        TransformKind::Affine
                    } else {
                        TransformKind::Homography
                    };
                    let gt = PlanarTransform::new(gt_kind, *m).map_err(|e| e.to_string())?;
                    corner_warp_error(est, &gt, input.left_size.0, input.left_size.1).map_err(|e| e.to_string())?
                }
                GroundTruth::Landmarks(lm) => mean_landmark_error(lm, |p| est.try_apply(p))?,
                GroundTruth::Pose(_) => unreachable!("rejected above"),
            };
            sample.error = Some(err * scale);
        }
        Protocol::RtreBspline => {
            let GroundTruth::Landmarks(lm) = input.gt else { unreachable!("rejected above") };
            let affine = fit.model.as_planar().ok_or("no planar model")?;
            let inliers: Vec<Correspondence> = fit.inlier_indices.iter().map(|&i| matches[i]).collect();
            let (w, h) = input.right_size;
            let refined = fit_bspline_sgd(&inliers, affine, (w as f64, h as f64), &cfg.bspline).map_err(|e| e.to_string())?;
            let diagonal = (w as f64).hypot(h as f64);
            let (a, m) = rtre(lm, diagonal, |p| refined.apply(p)).map_err(|e| e.to_string())?;
            if !(a.is_finite() && m.is_finite()) {
                return Err("non-finite registration error".into());
            }
            sample.rtre = Some([a, m]);
            sample.error = Some(a);
        }
        Protocol::PoseEssential => {
            let GroundTruth::Pose(p) = input.gt else { unreachable!("rejected above") };
            let est = fit.model.as_pose().ok_or("no pose")?;
            let gt = p.relative_pose()?;
            let e = relative_pose_error(est, &gt).map_err(|e| e.to_string())?;
            sample.pose = Some(e);
            sample.error = Some(e.combined_deg);
        }
    }
    Ok(sample)
}

fn mean_landmark_error(
    lm: &[(crate::geometry::PixelPoint, crate::geometry::PixelPoint)],
    warp: impl Fn(crate::geometry::PixelPoint) -> Option<crate::geometry::PixelPoint>,
) -> Result<f64, String> {
    if lm.is_empty() {
        return Err("empty landmark set".into());
    }
    let mut sum = 0.0;
    for (src, dst) in lm {
        sum += warp(*src).ok_or("landmark maps to infinity")?.distance(dst);
    }
    Ok(sum / lm.len() as f64)
}

/// Prediction file for a pair: `<dir>/<pair_id>.jsonl` or `<dir>/<pair_id>.xmf`.
pub fn prediction_path(pred_dir: &Path, pair_id: &str) -> Option<PathBuf> {
    ["jsonl", "xmf"]
        .iter()
        .map(|ext| pred_dir.join(format!("{pair_id}.{ext}")))
        .find(|p| p.is_file())
}

fn image_size(declared: Option<[u32; 2]>, base: &Path, file: &str, pair_id: &str) -> Result<(u32, u32), EvalError> {
    if let Some([w, h]) = declared {
        if w == 0 || h == 0 {
            return Err(EvalError::ManifestInvalid(format!("{pair_id}: zero image size")));
        }
        return Ok((w, h));
    }
    image::image_dimensions(base.join(file))
        .map_err(|e| EvalError::ManifestInvalid(format!("{pair_id}: cannot determine size of {file}: {e}")))
}

/// Evaluates every manifest pair against the predictions in `pred_dir`.
/// Pairs are scored in parallel with per-pair seeds derived from
/// `cfg.seed` and the manifest position.
pub fn run_protocol(manifest: &Path, pred_dir: &Path, cfg: &EvalConfig) -> Result<MetricReport, EvalError> {
    cfg.validate()?;
    let records = read_eval_manifest(manifest)?;
    if records.is_empty() {
        return Err(EvalError::ManifestInvalid("manifest has no pairs".into()));
    }
    let mut ids: Vec<&str> = records.iter().map(|r| r.pair_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(EvalError::ManifestInvalid(format!("duplicate pair_id {:?}", w[0])));
    }
    let base = manifest.parent().unwrap_or(Path::new("."));
    let samples: Vec<ErrorSample> = records
        .par_iter()
        .enumerate()
        .map(|(i, rec)| -> Result<ErrorSample, EvalError> {
            let gt = rec
                .ground_truth(base)
                .map_err(|e| EvalError::ManifestInvalid(e.to_string()))?;
            let left_size = image_size(rec.left_size.or(rec.native_size), base, &rec.left, &rec.pair_id)?;
            let right_size = image_size(rec.right_size.or(rec.left_size).or(rec.native_size), base, &rec.right, &rec.pair_id)?;
            let loaded = prediction_path(pred_dir, &rec.pair_id).map(|p| read_matches(&p).map(|(_, m)| m));
            let seed = derive_seed(cfg.seed, i as u64);
            let matches = match &loaded {
                Some(Err(e)) => {
                    return Ok(ErrorSample::failed(&rec.pair_id, cfg.protocol.error_kind(), format!("unreadable prediction: {e}")))
                }
                Some(Ok(m)) => Some(m.as_slice()),
                None => None,
            };
            let input = PairInput {
                pair_id: &rec.pair_id,
                matches,
                gt: &gt,
                left_size,
                right_size,
                native_size: rec.native_size.map(|[w, h]| (w, h)),
            };
            Ok(evaluate_pair(&input, cfg, seed))
        })
        .collect::<Result<_, _>>()?;
    let config = serde_json::to_value(cfg).expect("config is serializable");
    MetricReport::build(
        cfg.protocol.as_str(),
        cfg.protocol.error_kind(),
        samples,
        &cfg.thresholds,
        cfg.protocol.curve_step(),
        config,
    )
}
