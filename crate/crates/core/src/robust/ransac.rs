use nalgebra::Matrix3;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pose::recover_pose_normalized;
use super::solvers::{eight_point, sampson_distance, solve_affine_lsq, solve_homography_dlt, symmetric_transfer_error};
use super::RobustError;
use crate::geometry::{CameraIntrinsics, Correspondence, PixelPoint, PlanarTransform, RelativePoseEstimate};

/// Refit rounds on the growing inlier set after sampling ends.
const REFIT_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Affine,
    Homography,
    Fundamental,
    Essential,
}

impl ModelKind {
    pub fn sample_size(self) -> usize {
        match self {
            ModelKind::Affine => 3,
            ModelKind::Homography => 4,
            ModelKind::Fundamental | ModelKind::Essential => 8,
        }
    }

    /// Default residual threshold: pixels for planar models and the
    /// fundamental matrix, normalized image units for the essential matrix.
    pub fn default_threshold(self) -> f64 {
        match self {
            ModelKind::Affine | ModelKind::Homography => 3.0,
            ModelKind::Fundamental => 2.0,
            ModelKind::Essential => 3e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub max_iterations: usize,
    pub confidence: f64,
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl RansacConfig {
    pub fn for_kind(kind: ModelKind, seed: u64) -> Self {
        Self {
            max_iterations: 1000,
            confidence: 0.99999,
            inlier_threshold: kind.default_threshold(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), RobustError> {
        if self.max_iterations == 0 {
            return Err(RobustError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(RobustError::InvalidConfig("confidence must lie in (0, 1)".into()));
        }
        if !(self.inlier_threshold > 0.0 && self.inlier_threshold.is_finite()) {
            return Err(RobustError::InvalidConfig("inlier_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Planar(PlanarTransform),
    Fundamental(Matrix3<f64>),
    /// Essential matrix in normalized coordinates and the pose recovered
    /// from its inliers.
    Essential {
        matrix: Matrix3<f64>,
        pose: RelativePoseEstimate,
    },
}

impl FittedModel {
    pub fn as_planar(&self) -> Option<&PlanarTransform> {
        match self {
            FittedModel::Planar(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_pose(&self) -> Option<&RelativePoseEstimate> {
        match self {
            FittedModel::Essential { pose, .. } => Some(pose),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FittedModel,
    /// Ascending indices into the input.
    pub inlier_indices: Vec<usize>,
    pub iterations_run: usize,
    /// Number of inliers.
    pub score: usize,
}

enum Hypothesis {
    Planar { h: PlanarTransform, inv: PlanarTransform },
    Epipolar(Matrix3<f64>),
}

struct Problem<'a> {
    kind: ModelKind,
    corrs: &'a [Correspondence],
    /// Points the epipolar residual is measured on (normalized for
    /// the essential matrix).
    left: Vec<PixelPoint>,
    right: Vec<PixelPoint>,
}

impl Problem<'_> {
    fn fit(&self, idx: &[usize]) -> Option<Hypothesis> {
        match self.kind {
            ModelKind::Affine | ModelKind::Homography => {
                let subset: Vec<Correspondence> = idx.iter().map(|&i| self.corrs[i]).collect();
                let h = if self.kind == ModelKind::Affine {
                    solve_affine_lsq(&subset)
                } else {
                    solve_homography_dlt(&subset)
                }
                .ok()?;
                let inv = h.inverse();
                inv.matrix().iter().all(|v| v.is_finite()).then_some(Hypothesis::Planar { h, inv })
            }
            ModelKind::Fundamental | ModelKind::Essential => {
                let l: Vec<_> = idx.iter().map(|&i| self.left[i]).collect();
                let r: Vec<_> = idx.iter().map(|&i| self.right[i]).collect();
                eight_point(&l, &r, self.kind == ModelKind::Essential)
                    .ok()
                    .map(Hypothesis::Epipolar)
            }
        }
    }

    fn residual(&self, hyp: &Hypothesis, i: usize) -> f64 {
        match hyp {
            Hypothesis::Planar { h, inv } => symmetric_transfer_error(h, inv, &self.corrs[i]),
            Hypothesis::Epipolar(f) => sampson_distance(f, self.left[i], self.right[i]),
        }
    }

    fn inliers(&self, hyp: &Hypothesis, threshold: f64) -> Vec<usize> {
        (0..self.corrs.len())
            .filter(|&i| self.residual(hyp, i) <= threshold)
            .collect()
    }
}

fn required_iterations(inlier_ratio: f64, sample_size: usize, confidence: f64) -> f64 {
    let good = inlier_ratio.powi(sample_size as i32);
    if good >= 1.0 {
        return 0.0;
    }
    if good <= 0.0 {
        return f64::INFINITY;
    }
    ((1.0 - confidence).ln() / (1.0 - good).ln()).ceil()
}

/// Seeded hypothesize-and-verify estimation.
///
/// Minimal samples are drawn uniformly without replacement; degenerate
/// samples consume an iteration. Sampling stops early once the best inlier
/// ratio `w` satisfies `1 - (1 - w^s)^k >= confidence`. The best model is
/// then refit by least squares on its inliers, keeping the refit only when
/// it does not lose inliers. Every reported inlier satisfies the threshold
/// under the returned model.
pub fn ransac(
    corrs: &[Correspondence],
    kind: ModelKind,
    cfg: &RansacConfig,
    intrinsics: Option<(&CameraIntrinsics, &CameraIntrinsics)>,
) -> Result<FitResult, RobustError> {
    cfg.validate()?;
    let s = kind.sample_size();
    if corrs.len() < s {
        return Err(RobustError::InsufficientData {
            need: s,
            got: corrs.len(),
        });
    }
    let (left, right) = match (kind, intrinsics) {
        (ModelKind::Essential, Some((kl, kr))) => (
            corrs.iter().map(|c| kl.normalize(c.left)).collect(),
            corrs.iter().map(|c| kr.normalize(c.right)).collect(),
        ),
        (ModelKind::Essential, None) => return Err(RobustError::MissingIntrinsics),
        _ => (
            corrs.iter().map(|c| c.left).collect(),
            corrs.iter().map(|c| c.right).collect(),
        ),
    };
    let problem = Problem {
        kind,
        corrs,
        left,
        right,
    };

    let n = corrs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Hypothesis, Vec<usize>)> = None;
    let mut needed = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iterations && (iterations as f64) < needed {
        iterations += 1;
        let mut idx = sample(&mut rng, n, s).into_vec();
        idx.sort_unstable();
        let Some(hyp) = problem.fit(&idx) else { continue };
        let inl = problem.inliers(&hyp, cfg.inlier_threshold);
        if best.as_ref().is_none_or(|(_, b)| inl.len() > b.len()) {
            needed = required_iterations(inl.len() as f64 / n as f64, s, cfg.confidence);
            best = Some((hyp, inl));
        }
    }

    let Some((mut hyp, mut inl)) = best.filter(|(_, inl)| inl.len() >= s) else {
        return Err(RobustError::NoModel);
    };
    for _ in 0..REFIT_ROUNDS {
        let Some(refit) = problem.fit(&inl) else { break };
        let refit_inl = problem.inliers(&refit, cfg.inlier_threshold);
        if refit_inl.len() < inl.len() {
            break;
        }
        let converged = refit_inl == inl;
        hyp = refit;
        inl = refit_inl;
        if converged {
            break;
        }
    }

    let model = match hyp {
        Hypothesis::Planar { h, .. } => FittedModel::Planar(h),
        Hypothesis::Epipolar(f) if kind == ModelKind::Fundamental => FittedModel::Fundamental(f),
        Hypothesis::Epipolar(e) => {
            let l: Vec<_> = inl.iter().map(|&i| problem.left[i]).collect();
            let r: Vec<_> = inl.iter().map(|&i| problem.right[i]).collect();
            FittedModel::Essential {
                matrix: e,
                pose: recover_pose_normalized(&e, &l, &r)?,
            }
        }
    };
    Ok(FitResult {
        model,
        score: inl.len(),
        inlier_indices: inl,
        iterations_run: iterations,
    })
}

/// Residual of `c` under a fitted model, in the model's threshold units.
pub fn model_residual(
    model: &FittedModel,
    c: &Correspondence,
    intrinsics: Option<(&CameraIntrinsics, &CameraIntrinsics)>,
) -> f64 {
    match model {
        FittedModel::Planar(h) => symmetric_transfer_error(h, &h.inverse(), c),
        FittedModel::Fundamental(f) => sampson_distance(f, c.left, c.right),
        FittedModel::Essential { matrix, .. } => match intrinsics {
            Some((kl, kr)) => sampson_distance(matrix, kl.normalize(c.left), kr.normalize(c.right)),
            None => f64::INFINITY,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TransformKind;
    use rand::Rng;

    fn planted() -> (PlanarTransform, Vec<Correspondence>) {
        let h = PlanarTransform::new(
            TransformKind::Homography,
            Matrix3::new(1.1, 0.05, 12.0, -0.08, 0.95, 30.0, 2e-4, 1e-4, 1.0),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut corrs = Vec::new();
        for _ in 0..70 {
            let p = PixelPoint::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            corrs.push(Correspondence::exact(p, h.apply(p)));
        }
        for _ in 0..30 {
            let p = PixelPoint::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            let q = PixelPoint::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            corrs.push(Correspondence::exact(p, q));
        }
        (h, corrs)
    }

    #[test]
    fn exact_affine_all_inliers() {
        let a = PlanarTransform::new(
            TransformKind::Affine,
            Matrix3::new(0.9, 0.2, 5.0, -0.1, 1.2, -3.0, 0.0, 0.0, 1.0),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let corrs: Vec<_> = (0..100)
            .map(|_| {
                let p = PixelPoint::new(rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0));
                Correspondence::exact(p, a.apply(p))
            })
            .collect();
        let fit = ransac(&corrs, ModelKind::Affine, &RansacConfig::for_kind(ModelKind::Affine, 1), None).unwrap();
        assert_eq!(fit.score, 100);
        let m = fit.model.as_planar().unwrap();
        for c in &corrs {
            assert!(m.apply(c.left).distance(&c.right) <= 1e-9);
        }
    }

    #[test]
    fn planted_homography_recovered() {
        let (h, corrs) = planted();
        let cfg = RansacConfig {
            inlier_threshold: 2.0,
            ..RansacConfig::for_kind(ModelKind::Homography, 42)
        };
        let fit = ransac(&corrs, ModelKind::Homography, &cfg, None).unwrap();
        for i in 0..70 {
            assert!(fit.inlier_indices.contains(&i));
        }
        let est = fit.model.as_planar().unwrap();
        for c in &corrs[..70] {
            assert!(est.apply(c.left).distance(&h.apply(c.left)) <= 2.0);
        }
    }

    #[test]
    fn deterministic_and_inliers_within_threshold() {
        let (_, corrs) = planted();
        let cfg = RansacConfig::for_kind(ModelKind::Homography, 9);
        let a = ransac(&corrs, ModelKind::Homography, &cfg, None).unwrap();
        let b = ransac(&corrs, ModelKind::Homography, &cfg, None).unwrap();
        assert_eq!(a, b);
        for &i in &a.inlier_indices {
            assert!(model_residual(&a.model, &corrs[i], None) <= cfg.inlier_threshold);
        }
        assert!(a.iterations_run < cfg.max_iterations);
    }

    #[test]
    fn collinear_affine_has_no_model() {
        let corrs = [
            Correspondence::exact(PixelPoint::new(0.0, 0.0), PixelPoint::new(1.0, 1.0)),
            Correspondence::exact(PixelPoint::new(1.0, 1.0), PixelPoint::new(2.0, 2.0)),
            Correspondence::exact(PixelPoint::new(2.0, 2.0), PixelPoint::new(3.0, 3.0)),
        ];
        let cfg = RansacConfig::for_kind(ModelKind::Affine, 0);
        assert_eq!(ransac(&corrs, ModelKind::Affine, &cfg, None), Err(RobustError::NoModel));
        assert!(matches!(
            ransac(&corrs[..2], ModelKind::Affine, &cfg, None),
            Err(RobustError::InsufficientData { need: 3, got: 2 })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = RansacConfig::for_kind(ModelKind::Affine, 0);
        cfg.confidence = 1.0;
        assert!(cfg.validate().is_err());
        cfg.confidence = 0.5;
        cfg.max_iterations = 0;
        assert!(cfg.validate().is_err());
        cfg.max_iterations = 1;
        cfg.inlier_threshold = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn iteration_bound() {
        assert_eq!(required_iterations(1.0, 4, 0.99), 0.0);
        assert_eq!(required_iterations(0.5, 1, 0.75), 2.0);
        assert!(required_iterations(0.0, 4, 0.99).is_infinite());
    }
}
