//! Raster data model: images, binary masks and foreground score maps.
//!
//! All buffers are row-major with the origin at the top-left corner;
//! x grows rightwards, y grows downwards. Image intensities live in
//! [0, 1] regardless of the bit depth they were loaded from.

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Probability clamp applied to score maps so that `-ln S` stays finite.
pub const PROB_EPS: f32 = 1e-6;

/// A 1- or 3-channel intensity image with values in [0, 1].
///
/// Samples are interleaved: `data[(y * width + x) * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::format(format!(
                "unsupported channel count {channels} (expected 1 or 3)"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::contract(format!(
                "image data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::contract("image values must be finite and in [0,1]"));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Image::new(width, height, channels, vec![value; width * height * channels])
            .expect("constant image in range")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// All channels at a pixel, padded with zeros beyond `channels`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let base = (y * self.width + x) * self.channels;
        let mut out = [0.0f32; 3];
        for c in 0..self.channels {
            out[c] = self.data[base + c];
        }
        out
    }

    /// Euclidean distance between the colors at two pixels.
    #[inline]
    pub fn color_distance(&self, xa: usize, ya: usize, xb: usize, yb: usize) -> f64 {
        let a = (ya * self.width + xa) * self.channels;
        let b = (yb * self.width + xb) * self.channels;
        let mut s = 0.0f64;
        for c in 0..self.channels {
            let d = (self.data[a + c] - self.data[b + c]) as f64;
            s += d * d;
        }
        s.sqrt()
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rec. 601 luma as a scalar field; grayscale images pass through.
    pub fn luminance(&self) -> Plane {
        let mut p = Plane::new(self.width, self.height);
        match self.channels {
            1 => {
                for (dst, src) in p.data.iter_mut().zip(self.data.iter()) {
                    *dst = *src as f64;
                }
            }
            _ => {
                for i in 0..self.width * self.height {
                    let r = self.data[i * 3] as f64;
                    let g = self.data[i * 3 + 1] as f64;
                    let b = self.data[i * 3 + 2] as f64;
                    p.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
                }
            }
        }
        p
    }
}

/// Binary per-pixel labels; 1 marks the person/foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::contract("mask length does not match dimensions"));
        }
        if !labels.iter().all(|&v| v <= 1) {
            return Err(Error::contract("mask labels must be 0 or 1"));
        }
        Ok(Mask {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Self {
        Mask::new(width, height, vec![label; width * height]).expect("valid fill label")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        debug_assert!(v <= 1);
        self.labels[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.labels.iter().filter(|&&v| v == 1).count()
    }
}

/// Per-pixel probability of the foreground label, clamped away from {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: usize,
    height: usize,
    prob_fg: Vec<f32>,
}

impl ScoreMap {
    /// Builds a score map, clamping every value into `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn new(width: usize, height: usize, prob_fg: Vec<f32>) -> Result<Self> {
        if prob_fg.len() != width * height {
            return Err(Error::contract("score map length does not match dimensions"));
        }
        if !prob_fg.iter().all(|v| v.is_finite()) {
            return Err(Error::format("score map contains non-finite values"));
        }
        let prob_fg = prob_fg
            .into_iter()
            .map(|v| v.clamp(PROB_EPS, 1.0 - PROB_EPS))
            .collect();
        Ok(ScoreMap {
            width,
            height,
            prob_fg,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn prob_fg(&self) -> &[f32] {
        &self.prob_fg
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.prob_fg[y * self.width + x]
    }

    /// Probability of label `m` at a pixel.
    #[inline]
    pub fn prob(&self, x: usize, y: usize, m: u8) -> f32 {
        let p = self.get(x, y);
        if m == 1 {
            p
        } else {
            1.0 - p
        }
    }

    /// Hard mask with foreground where `prob_fg > threshold`.
    pub fn threshold(&self, threshold: f32) -> Mask {
        let labels = self
            .prob_fg
            .iter()
            .map(|&p| if p > threshold { 1u8 } else { 0u8 })
            .collect();
        Mask::new(self.width, self.height, labels).expect("binary labels")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_channel_count() {
        assert!(Image::new(2, 2, 4, vec![0.0; 16]).is_err());
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
    }

    #[test]
    fn image_rejects_out_of_range_values() {
        assert!(Image::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn luminance_of_gray_is_identity() {
        let img = Image::new(2, 1, 1, vec![0.25, 0.75]).unwrap();
        let lum = img.luminance();
        assert_eq!(lum.data, vec![0.25, 0.75]);
    }

    #[test]
    fn luminance_weights_sum_to_one() {
        let img = Image::new(1, 1, 3, vec![0.5, 0.5, 0.5]).unwrap();
        assert!((img.luminance().data[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn score_map_clamps_endpoints() {
        let sm = ScoreMap::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(sm.get(0, 0), PROB_EPS);
        assert_eq!(sm.get(1, 0), 1.0 - PROB_EPS);
        // -ln stays finite on both labels
        for m in 0..2u8 {
            assert!((-(sm.prob(0, 0, m) as f64).ln()).is_finite());
            assert!((-(sm.prob(1, 0, m) as f64).ln()).is_finite());
        }
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(Mask::new(1, 1, vec![2]).is_err());
    }
}
