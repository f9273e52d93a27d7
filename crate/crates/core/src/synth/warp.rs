use rayon::prelude::*;

use crate::geometry::{PixelPoint, PlanarTransform};
use crate::raster::{Image, Mask};

use super::SynthError;

/// Inverse-maps every output pixel through `h^-1` and samples the source
/// bilinearly. Output has the source size; pixels whose preimage falls
/// outside `[0, W-1] x [0, H-1]` are zero and masked out.
pub fn warp_image(img: &Image, h: &PlanarTransform) -> Result<(Image, Mask), SynthError> {
    let inv = h
        .matrix()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or(SynthError::DegenerateTransform(0))?;
    let inv = PlanarTransform::new(crate::geometry::TransformKind::Homography, inv)
        .map_err(|_| SynthError::DegenerateTransform(0))?;
    let (w, hgt, c) = (img.width(), img.height(), img.channels() as usize);
    let rows: Vec<(Vec<f32>, Vec<bool>)> = (0..hgt)
        .into_par_iter()
        .map(|y| {
            let mut values = vec![0.0f32; w as usize * c];
            let mut valid = vec![false; w as usize];
            for x in 0..w {
                let Some(src) = source_location(&inv, x, y, w, hgt) else {
                    continue;
                };
                valid[x as usize] = true;
                for ch in 0..c {
                    values[x as usize * c + ch] = img.bilinear(src.x, src.y, ch);
                }
            }
            (values, valid)
        })
        .collect();
    let mut data = Vec::with_capacity(w as usize * hgt as usize * c);
    let mut mask = Vec::with_capacity(w as usize * hgt as usize);
    for (values, valid) in rows {
        data.extend(values);
        mask.extend(valid);
    }
    let out = Image::new(w, hgt, img.channels(), data).expect("shape preserved");
    let mask = Mask::from_fn(w, hgt, |x, y| mask[y as usize * w as usize + x as usize]);
    Ok((out, mask))
}

/// Preimage of an output pixel if it lies inside the source bounds.
pub(crate) fn source_location(inv: &PlanarTransform, x: u32, y: u32, w: u32, h: u32) -> Option<PixelPoint> {
    let p = inv.try_apply(PixelPoint::new(x as f64, y as f64))?;
    let inside = p.x >= 0.0 && p.y >= 0.0 && p.x <= (w - 1) as f64 && p.y <= (h - 1) as f64;
    inside.then_some(p)
}
