//! Minimal planar raster and boolean mask types.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("buffer of {len} values does not match {width}x{height}x{channels}")]
    BadBuffer {
        len: usize,
        width: u32,
        height: u32,
        channels: u8,
    },
    #[error("image must be non-empty with 1 or 3 channels")]
    BadShape,
}

/// Interleaved `f32` image with intensities nominally in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<f32>,
}

impl Image {
    pub const MAX_VALUE: f32 = 255.0;

    pub fn new(width: u32, height: u32, channels: u8, data: Vec<f32>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(RasterError::BadShape);
        }
        if data.len() != width as usize * height as usize * channels as usize {
            return Err(RasterError::BadBuffer {
                len: data.len(),
                width,
                height,
                channels,
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: f32) -> Result<Self, RasterError> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width as usize * height as usize * channels as usize],
        )
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f32) -> Result<Self, RasterError> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn same_size(&self, w: u32, h: u32) -> bool {
        self.width == w && self.height == h
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[f32] {
        let c = self.channels as usize;
        let i = (y as usize * self.width as usize + x as usize) * c;
        &self.data[i..i + c]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Bilinear sample of channel `c`; the caller guarantees the point lies
    /// in `[0, W-1] x [0, H-1]`.
    pub(crate) fn bilinear(&self, x: f64, y: f64, c: usize) -> f32 {
        let x0 = (x.floor() as u32).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as u32).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = (x - x0 as f64) as f32;
        let ay = (y - y0 as f64) as f32;
        let at = |xx: u32, yy: u32| self.pixel(xx, yy)[c];
        let top = at(x0, y0) * (1.0 - ax) + at(x1, y0) * ax;
        let bottom = at(x0, y1) * (1.0 - ax) + at(x1, y1) * ax;
        top * (1.0 - ay) + bottom * ay
    }
}

/// Per-pixel boolean mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(0, 2, 1, vec![]).is_err());
    }

    #[test]
    fn bilinear_on_edges() {
        let img = Image::from_fn(3, 2, |x, y| (x + 10 * y) as f32).unwrap();
        assert_eq!(img.bilinear(2.0, 1.0, 0), 12.0);
        assert_eq!(img.bilinear(0.5, 0.5, 0), 5.5);
        let single = Image::filled(1, 1, 1, 7.0).unwrap();
        assert_eq!(single.bilinear(0.0, 0.0, 0), 7.0);
    }
}
