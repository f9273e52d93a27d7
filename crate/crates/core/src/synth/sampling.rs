use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::{PlanarTransform, TransformKind};

/// Resampling budget when a draw produces a near-singular matrix.
pub const MAX_RESAMPLES: u32 = 16;

/// Factor order of sampled warps, outermost first. Every factor acts in
/// coordinates centered on the image center.
pub const COMPOSITION_ORDER: &str = "center * perspective * skew * scale * rotation * translation * center^-1";

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self, SynthError> {
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(SynthError::InvalidRange(format!("[{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub const fn point(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub const fn symmetric(half_width: f64) -> Self {
        Self {
            min: -half_width,
            max: half_width,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn validate(&self, name: &str) -> Result<(), SynthError> {
        Self::new(self.min, self.max)
            .map(|_| ())
            .map_err(|_| SynthError::InvalidRange(format!("{name}: [{}, {}]", self.min, self.max)))
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.min == self.max {
            return self.min;
        }
        rng.gen_range(self.min..=self.max)
    }
}

/// Parameter ranges for random training homographies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomographySampleRanges {
    pub rotation_deg: Interval,
    /// Fraction of width (x) and height (y), drawn independently per axis.
    pub translation_factor: Interval,
    pub scale: Interval,
    pub skew: Interval,
    /// Left-right perspective; scaled by `1 / width` in the matrix.
    pub perspective_x: Interval,
    /// Up-down perspective; scaled by `1 / height` in the matrix.
    pub perspective_y: Interval,
}

impl HomographySampleRanges {
    /// Ranges used for single-image training pairs.
    pub const fn training() -> Self {
        Self {
            rotation_deg: Interval::symmetric(180.0),
            translation_factor: Interval::symmetric(0.25),
            scale: Interval { min: 0.5, max: 2.0 },
            skew: Interval::symmetric(0.1),
            perspective_x: Interval::symmetric(0.5),
            perspective_y: Interval::symmetric(0.5),
        }
    }

    /// Every interval collapsed onto the value that leaves images unchanged.
    pub const fn neutral() -> Self {
        Self {
            rotation_deg: Interval::point(0.0),
            translation_factor: Interval::point(0.0),
            scale: Interval::point(1.0),
            skew: Interval::point(0.0),
            perspective_x: Interval::point(0.0),
            perspective_y: Interval::point(0.0),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.rotation_deg.validate("rotation")?;
        self.translation_factor.validate("translation_factor")?;
        self.scale.validate("scale")?;
        self.skew.validate("skew")?;
        self.perspective_x.validate("perspective_x")?;
        self.perspective_y.validate("perspective_y")?;
        if self.scale.min <= 0.0 {
            return Err(SynthError::InvalidRange("scale must be strictly positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, d: &HomographyDraw) -> bool {
        self.rotation_deg.contains(d.rotation_deg)
            && self.translation_factor.contains(d.translation[0])
            && self.translation_factor.contains(d.translation[1])
            && self.scale.contains(d.scale)
            && self.skew.contains(d.skew)
            && self.perspective_x.contains(d.perspective[0])
            && self.perspective_y.contains(d.perspective[1])
    }
}

impl Default for HomographySampleRanges {
    fn default() -> Self {
        Self::training()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Medical,
    Map,
    Custom,
}

/// Similarity ranges for evaluation misalignments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalWarpPreset {
    pub name: PresetName,
    pub rotation_deg: Interval,
    pub translation_factor: Interval,
    pub scale: Interval,
}

impl EvalWarpPreset {
    /// CT-MR / brain style misalignment.
    pub const fn medical() -> Self {
        Self {
            name: PresetName::Medical,
            rotation_deg: Interval::symmetric(50.0),
            translation_factor: Interval::symmetric(0.2),
            scale: Interval { min: 0.75, max: 1.33 },
        }
    }

    /// Visible / vectorized map misalignment.
    pub const fn map() -> Self {
        Self {
            name: PresetName::Map,
            rotation_deg: Interval::symmetric(10.0),
            translation_factor: Interval::symmetric(0.1),
            scale: Interval { min: 0.8, max: 1.25 },
        }
    }

    pub fn custom(rotation_deg: Interval, translation_factor: Interval, scale: Interval) -> Result<Self, SynthError> {
        let p = Self {
            name: PresetName::Custom,
            rotation_deg,
            translation_factor,
            scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.rotation_deg.validate("rotation")?;
        self.translation_factor.validate("translation_factor")?;
        self.scale.validate("scale")?;
        if self.scale.min <= 0.0 {
            return Err(SynthError::InvalidRange("scale must be strictly positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, d: &SimilarityDraw) -> bool {
        self.rotation_deg.contains(d.rotation_deg)
            && self.translation_factor.contains(d.translation[0])
            && self.translation_factor.contains(d.translation[1])
            && self.scale.contains(d.scale)
    }
}

/// The recorded parameters of one homography draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomographyDraw {
    pub rotation_deg: f64,
    pub translation: [f64; 2],
    pub scale: f64,
    pub skew: f64,
    pub perspective: [f64; 2],
}

impl HomographyDraw {
    pub fn matrix(&self, width: u32, height: u32) -> Matrix3<f64> {
        let (w, h) = (width as f64, height as f64);
        let perspective = Matrix3::new(
            1.0, 0.0, 0.0,
            0.0, 1.0, 0.0,
            self.perspective[0] / w, self.perspective[1] / h, 1.0,
        );
        let skew = Matrix3::new(1.0, self.skew, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        centered(
            width,
            height,
            perspective * skew * linear_similarity(self.rotation_deg, self.scale, self.translation, w, h),
        )
    }
}

/// The recorded parameters of one similarity draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDraw {
    pub rotation_deg: f64,
    pub translation: [f64; 2],
    pub scale: f64,
}

impl SimilarityDraw {
    pub const fn neutral() -> Self {
        Self {
            rotation_deg: 0.0,
            translation: [0.0, 0.0],
            scale: 1.0,
        }
    }

    pub fn matrix(&self, width: u32, height: u32) -> Matrix3<f64> {
        let (w, h) = (width as f64, height as f64);
        centered(
            width,
            height,
            linear_similarity(self.rotation_deg, self.scale, self.translation, w, h),
        )
    }

    pub fn transform(&self, width: u32, height: u32) -> Result<PlanarTransform, SynthError> {
        Ok(PlanarTransform::new(TransformKind::Similarity, self.matrix(width, height))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WarpDraw {
    Homography(HomographyDraw),
    Similarity(SimilarityDraw),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledTransform {
    pub transform: PlanarTransform,
    pub draw: WarpDraw,
    /// Number of draws taken, 1 unless degenerate draws were rejected.
    pub attempts: u32,
}

/// `scale * rotation * translation` with the translation given as a
/// fraction of the image size.
fn linear_similarity(rotation_deg: f64, scale: f64, translation: [f64; 2], w: f64, h: f64) -> Matrix3<f64> {
    let (s, c) = rotation_deg.to_radians().sin_cos();
    let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    let scaling = Matrix3::new(scale, 0.0, 0.0, 0.0, scale, 0.0, 0.0, 0.0, 1.0);
    let shift = Matrix3::new(
        1.0, 0.0, translation[0] * w,
        0.0, 1.0, translation[1] * h,
        0.0, 0.0, 1.0,
    );
    scaling * rotation * shift
}

fn centered(width: u32, height: u32, m: Matrix3<f64>) -> Matrix3<f64> {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let to = Matrix3::new(1.0, 0.0, cx, 0.0, 1.0, cy, 0.0, 0.0, 1.0);
    let from = Matrix3::new(1.0, 0.0, -cx, 0.0, 1.0, -cy, 0.0, 0.0, 1.0);
    to * m * from
}

/// Draws a random homography for a `width x height` image.
///
/// Parameters are drawn in the order rotation, tx, ty, scale, skew,
/// perspective x, perspective y from a ChaCha8 stream seeded with `seed`.
/// Draws with `|det| < 1e-9` are rejected, up to [`MAX_RESAMPLES`] times.
pub fn sample_homography(
    ranges: &HomographySampleRanges,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<SampledTransform, SynthError> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_RESAMPLES {
        let draw = HomographyDraw {
            rotation_deg: ranges.rotation_deg.sample(&mut rng),
            translation: [
                ranges.translation_factor.sample(&mut rng),
                ranges.translation_factor.sample(&mut rng),
            ],
            scale: ranges.scale.sample(&mut rng),
            skew: ranges.skew.sample(&mut rng),
            perspective: [
                ranges.perspective_x.sample(&mut rng),
                ranges.perspective_y.sample(&mut rng),
            ],
        };
        let m = draw.matrix(width, height);
        if m.determinant().abs() < 1e-9 {
            continue;
        }
        if let Ok(transform) = PlanarTransform::new(TransformKind::Homography, m) {
            return Ok(SampledTransform {
                transform,
                draw: WarpDraw::Homography(draw),
                attempts: attempt,
            });
        }
    }
    Err(SynthError::DegenerateTransform(MAX_RESAMPLES))
}

/// Draws a rotation + translation + isotropic scale about the image center.
pub fn sample_eval_transform(
    preset: &EvalWarpPreset,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<SampledTransform, SynthError> {
    preset.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = SimilarityDraw {
        rotation_deg: preset.rotation_deg.sample(&mut rng),
        translation: [
            preset.translation_factor.sample(&mut rng),
            preset.translation_factor.sample(&mut rng),
        ],
        scale: preset.scale.sample(&mut rng),
    };
    Ok(SampledTransform {
        transform: draw.transform(width, height)?,
        draw: WarpDraw::Similarity(draw),
        attempts: 1,
    })
}
