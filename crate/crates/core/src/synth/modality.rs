use serde::{Deserialize, Serialize};

use super::{SynthError, SynthesizedPair};
use crate::geometry::DepthMap;
use crate::raster::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// How a generator produces the substituted image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ModalityMode {
    /// `v -> 255 - v` per channel.
    BuiltinInvert,
    /// Monotone piecewise-linear intensity remap through `(input, output)`
    /// knots sorted by input.
    BuiltinRemap { knots: Vec<(f32, f32)> },
    /// Replace with an aligned depth map rescaled to 8-bit range.
    DepthSubstitute,
    /// Replace with an aligned precomputed image (e.g. a translation network
    /// output).
    ExternalFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityGenerator {
    pub id: String,
    #[serde(flatten)]
    pub mode: ModalityMode,
}

impl ModalityGenerator {
    pub fn invert() -> Self {
        Self {
            id: "invert".into(),
            mode: ModalityMode::BuiltinInvert,
        }
    }

    /// A fixed tone curve that compresses highlights and lifts shadows.
    pub fn remap() -> Self {
        Self {
            id: "remap".into(),
            mode: ModalityMode::BuiltinRemap {
                knots: vec![(0.0, 0.0), (64.0, 150.0), (128.0, 200.0), (192.0, 225.0), (255.0, 255.0)],
            },
        }
    }

    pub fn depth() -> Self {
        Self {
            id: "depth".into(),
            mode: ModalityMode::DepthSubstitute,
        }
    }

    pub fn external(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            mode: ModalityMode::ExternalFile,
        }
    }
}

/// Pixel-aligned input for the auxiliary generator modes.
#[derive(Debug, Clone, Copy)]
pub enum Auxiliary<'a> {
    Depth(&'a DepthMap),
    Image(&'a Image),
}

/// Substitutes one side of `pair` with a pixel-aligned rendering.
///
/// Ground-truth coordinates and confidences are never touched. For depth
/// substitution the left mask additionally loses every pixel whose own
/// depth (left side) or matched right pixel's depth (right side) is
/// invalid.
pub fn apply_modality(
    pair: &SynthesizedPair,
    gen: &ModalityGenerator,
    side: Side,
    aux: Option<Auxiliary<'_>>,
) -> Result<SynthesizedPair, SynthError> {
    let target = match side {
        Side::Left => &pair.left,
        Side::Right => &pair.right,
    };
    let (w, h) = (target.width(), target.height());
    let mismatch = |gw: u32, gh: u32| SynthError::DimensionMismatch {
        got_w: gw,
        got_h: gh,
        want_w: w,
        want_h: h,
    };
    let mut out = pair.clone();
    let replaced = match (&gen.mode, aux) {
        (ModalityMode::BuiltinInvert, _) => target.map(|v| Image::MAX_VALUE - v),
        (ModalityMode::BuiltinRemap { knots }, _) => {
            validate_knots(knots)?;
            target.map(|v| remap(knots, v))
        }
        (ModalityMode::DepthSubstitute, Some(Auxiliary::Depth(d))) => {
            if d.width() != w || d.height() != h {
                return Err(mismatch(d.width(), d.height()));
            }
            mask_invalid_depth(&mut out, d, side);
            depth_to_gray(d)
        }
        (ModalityMode::ExternalFile, Some(Auxiliary::Image(img))) => {
            if !img.same_size(w, h) {
                return Err(mismatch(img.width(), img.height()));
            }
            img.clone()
        }
        _ => return Err(SynthError::MissingAuxiliary(gen.id.clone())),
    };
    match side {
        Side::Left => {
            out.left = replaced;
            out.modality_tags.0 = gen.id.clone();
        }
        Side::Right => {
            out.right = replaced;
            out.modality_tags.1 = gen.id.clone();
        }
    }
    Ok(out)
}

fn validate_knots(knots: &[(f32, f32)]) -> Result<(), SynthError> {
    let ok = knots.len() >= 2
        && knots
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
    if ok {
        Ok(())
    } else {
        Err(SynthError::InvalidRange("remap knots must be strictly increasing and monotone".into()))
    }
}

fn remap(knots: &[(f32, f32)], v: f32) -> f32 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if v <= first.0 {
        return first.1;
    }
    if v >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= v);
    let (a, b) = (knots[i - 1], knots[i]);
    a.1 + (v - a.0) / (b.0 - a.0) * (b.1 - a.1)
}

/// Linear rescale of valid depths onto `[0, 255]` using the per-image
/// min/max over valid pixels. Invalid pixels and degenerate ranges map to 0.
pub(crate) fn depth_to_gray(d: &DepthMap) -> Image {
    let valid = d.values().iter().copied().filter(|&v| v > 0.0);
    let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let data = d
        .values()
        .iter()
        .map(|&v| {
            if v <= 0.0 || !(span > 0.0) {
                0.0
            } else {
                ((v - lo) / span * Image::MAX_VALUE as f64) as f32
            }
        })
        .collect();
    Image::new(d.width(), d.height(), 1, data).expect("depth map is non-empty")
}

fn mask_invalid_depth(pair: &mut SynthesizedPair, d: &DepthMap, side: Side) {
    let mask = &mut pair.valid_mask;
    match side {
        Side::Left => {
            for y in 0..mask.height().min(d.height()) {
                for x in 0..mask.width().min(d.width()) {
                    if d.get(x, y) <= 0.0 {
                        mask.set(x, y, false);
                    }
                }
            }
        }
        Side::Right => {
            for m in &pair.matches {
                let (rx, ry) = (m.right.x.round(), m.right.y.round());
                let inside = rx >= 0.0 && ry >= 0.0 && rx < d.width() as f64 && ry < d.height() as f64;
                if inside && d.get(rx as u32, ry as u32) <= 0.0 {
                    let (lx, ly) = (m.left.x.round() as u32, m.left.y.round() as u32);
                    if lx < mask.width() && ly < mask.height() {
                        mask.set(lx, ly, false);
                    }
                }
            }
        }
    }
}
