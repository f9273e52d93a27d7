use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::IoError;
use crate::raster::{Image, Mask};

/// Loads any supported image as gray (1 channel) or RGB (3 channels) with
/// intensities in `[0, 255]`.
pub fn read_image(path: &Path) -> Result<Image, IoError> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => IoError::io(path, io),
        other => IoError::format(path, other),
    })?;
    let (w, h) = (img.width(), img.height());
    let wide = img.color().bytes_per_pixel() / img.color().channel_count() > 1;
    let (channels, data): (u8, Vec<f32>) = match (img.color().has_color(), wide) {
        (true, false) => (3, img.to_rgb8().into_raw().into_iter().map(f32::from).collect()),
        (false, false) => (1, img.to_luma8().into_raw().into_iter().map(f32::from).collect()),
        (true, true) => (3, img.to_rgb16().into_raw().into_iter().map(|v| v as f32 / 257.0).collect()),
        (false, true) => (1, img.to_luma16().into_raw().into_iter().map(|v| v as f32 / 257.0).collect()),
    };
    Image::new(w, h, channels, data).map_err(|e| IoError::format(path, e))
}

fn ensure_parent(path: &Path) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    Ok(())
}

/// 8-bit PNG, values rounded and clamped to `[0, 255]`.
pub fn write_image_png(path: &Path, img: &Image) -> Result<(), IoError> {
    ensure_parent(path)?;
    let bytes: Vec<u8> = img.data().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let dynamic = if img.channels() == 3 {
        DynamicImage::ImageRgb8(RgbImage::from_raw(img.width(), img.height(), bytes).expect("rgb buffer"))
    } else {
        DynamicImage::ImageLuma8(GrayImage::from_raw(img.width(), img.height(), bytes).expect("gray buffer"))
    };
    dynamic.save(path).map_err(|e| IoError::format(path, e))
}

/// Mask as an 8-bit PNG with 255 for valid pixels.
pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<(), IoError> {
    ensure_parent(path)?;
    let bytes = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width(), mask.height(), bytes)
        .expect("mask buffer")
        .save(path)
        .map_err(|e| IoError::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_and_rgb_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Image::from_fn(7, 4, |x, y| (x * 30 + y) as f32).unwrap();
        let p = dir.path().join("g.png");
        write_image_png(&p, &g).unwrap();
        assert_eq!(read_image(&p).unwrap(), g);
        let rgb = Image::new(2, 1, 3, vec![1.0, 2.0, 3.0, 250.0, 0.0, 128.0]).unwrap();
        let p = dir.path().join("c.png");
        write_image_png(&p, &rgb).unwrap();
        assert_eq!(read_image(&p).unwrap(), rgb);
    }

    #[test]
    fn missing_file_is_io() {
        assert!(read_image(Path::new("/nonexistent/x.png")).unwrap_err().is_io());
    }
}
