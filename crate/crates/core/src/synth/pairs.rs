use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{sample_eval_transform, sample_homography, Interval, COMPOSITION_ORDER};
use super::warp::warp_image;
use super::{EvalWarpPreset, HomographySampleRanges, SynthError, WarpDraw};
use crate::geometry::{
    correspondence_errors, filter_grid_correspondences, overlap_ratio, Correspondence, DepthMap,
    GtThresholds, PixelPoint, PlanarTransform, PosedView, RigidPose,
};
use crate::raster::{Image, Mask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProvenance {
    pub seed: u64,
    pub source: String,
    /// Warp family and factor order, empty for geometric pairs.
    pub recipe: String,
    pub draw: Option<WarpDraw>,
    pub overlap: Option<f64>,
}

/// A training or evaluation pair with its ground truth.
///
/// `matches` always holds explicit lattice correspondences; `transform` is
/// set for planar (warped) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedPair {
    pub left: Image,
    pub right: Image,
    pub transform: Option<PlanarTransform>,
    pub matches: Vec<Correspondence>,
    /// Left pixels that carry supervision.
    pub valid_mask: Mask,
    pub modality_tags: (String, String),
    pub provenance: PairProvenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarpSampler {
    Homography(HomographySampleRanges),
    Similarity(EvalWarpPreset),
}

/// Warps `img` with a sampled transform and emits lattice ground truth.
///
/// A left pixel is valid when its image under `H` lands inside the right
/// image and, if `depth` is given, its depth is positive. Matches are the
/// valid `grid_step` lattice points in row-major order.
pub fn make_warp_pair(
    img: &Image,
    sampler: &WarpSampler,
    grid_step: u32,
    seed: u64,
    depth: Option<&DepthMap>,
    source: &str,
) -> Result<SynthesizedPair, SynthError> {
    if grid_step == 0 {
        return Err(SynthError::InvalidGridStep);
    }
    let (w, h) = (img.width(), img.height());
    if let Some(d) = depth {
        if d.width() != w || d.height() != h {
            return Err(SynthError::DimensionMismatch {
                got_w: d.width(),
                got_h: d.height(),
                want_w: w,
                want_h: h,
            });
        }
    }
    let (sampled, family) = match sampler {
        WarpSampler::Homography(r) => (sample_homography(r, w, h, seed)?, "homography"),
        WarpSampler::Similarity(p) => (sample_eval_transform(p, w, h, seed)?, "similarity"),
    };
    let transform = sampled.transform;
    let (right, _) = warp_image(img, &transform)?;
    let in_right = |p: PixelPoint| {
        p.is_finite() && p.x >= 0.0 && p.y >= 0.0 && p.x <= (w - 1) as f64 && p.y <= (h - 1) as f64
    };
    let valid_mask = Mask::from_fn(w, h, |x, y| {
        depth.is_none_or(|d| d.get(x, y) > 0.0)
            && transform
                .try_apply(PixelPoint::new(x as f64, y as f64))
                .is_some_and(in_right)
    });
    let mut matches = Vec::new();
    for y in (0..h).step_by(grid_step as usize) {
        for x in (0..w).step_by(grid_step as usize) {
            if valid_mask.get(x, y) {
                let p = PixelPoint::new(x as f64, y as f64);
                matches.push(Correspondence::exact(p, transform.apply(p)));
            }
        }
    }
    Ok(SynthesizedPair {
        left: img.clone(),
        right,
        transform: Some(transform),
        matches,
        valid_mask,
        modality_tags: ("image".into(), "image".into()),
        provenance: PairProvenance {
            seed,
            source: source.to_string(),
            recipe: format!("{family}: {COMPOSITION_ORDER}"),
            draw: Some(sampled.draw),
            overlap: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPairConfig {
    pub thresholds: GtThresholds,
    /// Accepted overlap ratios (inclusive).
    pub overlap: Interval,
    pub grid_step: u32,
}

impl Default for DepthPairConfig {
    fn default() -> Self {
        Self {
            thresholds: GtThresholds::default(),
            overlap: Interval { min: 0.1, max: 0.7 },
            grid_step: crate::geometry::DEFAULT_GRID_STEP,
        }
    }
}

/// Builds a pair from two posed views when their overlap ratio lies in the
/// mining interval. Ground truth is the gated lattice; the mask marks every
/// left pixel that passes both consistency gates.
pub fn make_depth_pair(
    left: &PosedView,
    right: &PosedView,
    cfg: &DepthPairConfig,
) -> Result<SynthesizedPair, SynthError> {
    let ratio = overlap_ratio(left, right, &cfg.thresholds)?;
    if !cfg.overlap.contains(ratio) {
        return Err(SynthError::NoOverlap { ratio });
    }
    let left_img = left
        .image
        .clone()
        .ok_or_else(|| SynthError::MissingImage(left.id.clone()))?;
    let right_img = right
        .image
        .clone()
        .ok_or_else(|| SynthError::MissingImage(right.id.clone()))?;
    let matches = filter_grid_correspondences(left, right, cfg.grid_step, &cfg.thresholds)?;
    let valid_mask = consistency_mask(left, right, &cfg.thresholds)?;
    Ok(SynthesizedPair {
        left: left_img,
        right: right_img,
        transform: None,
        matches,
        valid_mask,
        modality_tags: ("image".into(), "image".into()),
        provenance: PairProvenance {
            seed: 0,
            source: format!("{}:{}", left.id, right.id),
            recipe: String::new(),
            draw: None,
            overlap: Some(ratio),
        },
    })
}

fn consistency_mask(left: &PosedView, right: &PosedView, t: &GtThresholds) -> Result<Mask, SynthError> {
    let (d_l, p_l) = (left.depth.as_ref(), left.pose.as_ref());
    let (d_r, p_r) = (right.depth.as_ref(), right.pose.as_ref());
    let (Some(d_l), Some(p_l), Some(d_r), Some(p_r)) = (d_l, p_l, d_r, p_r) else {
        return Err(crate::geometry::GeometryError::GeometryMissing(left.id.clone()).into());
    };
    let xi = RigidPose::relative(p_l, p_r);
    let cams = (&left.intrinsics, &right.intrinsics);
    let (w, h) = (d_l.width(), d_l.height());
    let rows: Vec<Vec<bool>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    correspondence_errors(PixelPoint::new(x as f64, y as f64), d_l, d_r, cams, &xi)
                        .is_ok_and(|e| t.accepts(&e))
                })
                .collect()
        })
        .collect();
    Ok(Mask::from_fn(w, h, |x, y| rows[y as usize][x as usize]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TransformKind;

    fn img() -> Image {
        Image::from_fn(64, 64, |x, y| ((x * 7 + y * 3) % 256) as f32).unwrap()
    }

    #[test]
    fn neutral_pair_has_fixed_points() {
        let pair = make_warp_pair(
            &img(),
            &WarpSampler::Homography(HomographySampleRanges::neutral()),
            8,
            3,
            None,
            "t",
        )
        .unwrap();
        assert_eq!(pair.matches.len(), 64);
        for m in &pair.matches {
            assert_eq!(m.left, m.right);
        }
        assert_eq!(pair.right, pair.left);
    }

    #[test]
    fn lattice_count_matches_brute_force() {
        let ranges = HomographySampleRanges::training();
        for seed in 0..20 {
            let pair = make_warp_pair(&img(), &WarpSampler::Homography(ranges), 8, seed, None, "t").unwrap();
            let h = pair.transform.unwrap();
            let m = *h.matrix();
            let mut expected = 0;
            for y in (0..64).step_by(8) {
                for x in (0..64).step_by(8) {
                    let v = m * nalgebra::Vector3::new(x as f64, y as f64, 1.0);
                    let (u, w) = (v.x / v.z, v.y / v.z);
                    if (0.0..=63.0).contains(&u) && (0.0..=63.0).contains(&w) {
                        expected += 1;
                    }
                }
            }
            assert_eq!(pair.matches.len(), expected, "seed {seed}");
            for c in &pair.matches {
                assert!(h.apply(c.left).distance(&c.right) <= 1e-9);
                assert!(pair.valid_mask.get(c.left.x as u32, c.left.y as u32));
            }
        }
    }

    #[test]
    fn depth_mask_suppresses_top_half() {
        let depth = DepthMap::from_fn(64, 64, |_, y| if y < 32 { 0.0 } else { 1.0 }).unwrap();
        let pair = make_warp_pair(
            &img(),
            &WarpSampler::Homography(HomographySampleRanges::neutral()),
            8,
            0,
            Some(&depth),
            "t",
        )
        .unwrap();
        assert_eq!(pair.matches.len(), 32);
        assert!(pair.matches.iter().all(|m| m.left.y >= 32.0));
    }

    #[test]
    fn similarity_sampler_records_draw() {
        let pair = make_warp_pair(&img(), &WarpSampler::Similarity(EvalWarpPreset::map()), 4, 11, None, "t").unwrap();
        assert_eq!(pair.transform.unwrap().kind(), TransformKind::Similarity);
        assert!(matches!(pair.provenance.draw, Some(WarpDraw::Similarity(_))));
        assert!(pair.provenance.recipe.starts_with("similarity"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = WarpSampler::Homography(HomographySampleRanges::neutral());
        assert_eq!(make_warp_pair(&img(), &s, 0, 0, None, "t"), Err(SynthError::InvalidGridStep));
        let depth = DepthMap::from_fn(32, 32, |_, _| 1.0).unwrap();
        assert!(matches!(
            make_warp_pair(&img(), &s, 8, 0, Some(&depth), "t"),
            Err(SynthError::DimensionMismatch { .. })
        ));
    }
}
