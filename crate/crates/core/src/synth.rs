//! Synthetic two-layer scene generator with exact ground truth.
//!
//! Scenes are built from periodic band-limited noise textures so layers
//! can be shifted by sub-pixel amounts exactly (spectral phase shift).
//! The generator is the desk-scale oracle for the whole pipeline: it
//! emits the color reference, the grayscale input, the ground-truth
//! flow and mask, and a validity mask excluding pixels whose ground
//! truth is undefined (leaving the frame or occluded by layer motion).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask, ScoreMap};
use crate::plane::Plane;

// Fixed rendering palette. Foreground and background get disjoint luma
// ranges plus zero-luma chroma tints, so the grayscale input stays
// consistent with the luminance of the color reference.
const FG_BASE: f64 = 0.50;
const BG_BASE: f64 = 0.50;
const TEXTURE_AMP: f64 = 0.22;
const FG_CHROMA: [f64; 3] = [0.15, -0.06, -0.084_473_684_210_526_32];
const BG_CHROMA: [f64; 3] = [-0.12, 0.03, 0.160_263_157_894_736_8];
const BAND_EDGE_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForegroundShape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
}

impl ForegroundShape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            ForegroundShape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            ForegroundShape::Ellipse { cx, cy, rx, ry } => {
                let dx = (x - cx) / rx;
                let dy = (y - cy) / ry;
                dx * dx + dy * dy <= 1.0
            }
        }
    }

    fn within_frame(&self, width: f64, height: f64) -> bool {
        match *self {
            ForegroundShape::Rect { x0, y0, x1, y1 } => {
                x0 >= 0.0 && y0 >= 0.0 && x1 < width && y1 < height && x0 <= x1 && y0 <= y1
            }
            ForegroundShape::Ellipse { cx, cy, rx, ry } => {
                rx > 0.0
                    && ry > 0.0
                    && cx - rx >= 0.0
                    && cy - ry >= 0.0
                    && cx + rx < width
                    && cy + ry < height
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub background_shift: (f64, f64),
    pub foreground_shift: (f64, f64),
    pub foreground_shape: ForegroundShape,
    pub texture_seed: u64,
    /// Band limit of the noise textures in cycles per pixel.
    pub texture_cutoff: f64,
    /// Optional rectangle (x0, y0, x1, y1), in reference coordinates,
    /// where the foreground texture amplitude is zero.
    pub textureless_band: Option<(f64, f64, f64, f64)>,
    pub noise_sigma: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            width: 128,
            height: 128,
            background_shift: (-2.0, 0.0),
            foreground_shift: (6.0, 0.0),
            foreground_shape: ForegroundShape::Rect {
                x0: 40.0,
                y0: 24.0,
                x1: 100.0,
                y1: 112.0,
            },
            texture_seed: 7,
            texture_cutoff: 0.12,
            textureless_band: None,
            noise_sigma: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::contract("scene must be at least 8x8"));
        }
        if !self
            .foreground_shape
            .within_frame(self.width as f64, self.height as f64)
        {
            return Err(Error::contract("foreground shape leaves the frame"));
        }
        let bound = (self.width.min(self.height) as f64) / 4.0;
        for &(u, v) in [&self.background_shift, &self.foreground_shift] {
            if u.abs() > bound || v.abs() > bound {
                return Err(Error::contract("layer shift exceeds frame/4"));
            }
        }
        if !(0.0..=0.5).contains(&self.texture_cutoff) {
            return Err(Error::contract("texture cutoff must be in [0, 0.5]"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::contract("noise sigma must be nonnegative"));
        }
        Ok(())
    }

    /// Plain-text `key=value` serialization.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("width={}\n", self.width));
        s.push_str(&format!("height={}\n", self.height));
        s.push_str(&format!(
            "background_shift={},{}\n",
            self.background_shift.0, self.background_shift.1
        ));
        s.push_str(&format!(
            "foreground_shift={},{}\n",
            self.foreground_shift.0, self.foreground_shift.1
        ));
        match self.foreground_shape {
            ForegroundShape::Rect { x0, y0, x1, y1 } => {
                s.push_str(&format!("foreground_shape=rect:{x0},{y0},{x1},{y1}\n"));
            }
            ForegroundShape::Ellipse { cx, cy, rx, ry } => {
                s.push_str(&format!("foreground_shape=ellipse:{cx},{cy},{rx},{ry}\n"));
            }
        }
        s.push_str(&format!("texture_seed={}\n", self.texture_seed));
        s.push_str(&format!("texture_cutoff={}\n", self.texture_cutoff));
        if let Some((x0, y0, x1, y1)) = self.textureless_band {
            s.push_str(&format!("textureless_band={x0},{y0},{x1},{y1}\n"));
        }
        s.push_str(&format!("noise_sigma={}\n", self.noise_sigma));
        s
    }

    /// Parses the `key=value` form produced by [`SyntheticSpec::to_kv`].
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        let parse_f64 = |v: &str, key: &str| -> Result<f64> {
            v.trim()
                .parse()
                .map_err(|_| Error::format(format!("bad value for {key}: {v}")))
        };
        let parse_pair = |v: &str, key: &str| -> Result<(f64, f64)> {
            let parts: Vec<&str> = v.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::format(format!("{key} expects u,v")));
            }
            Ok((parse_f64(parts[0], key)?, parse_f64(parts[1], key)?))
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "width" => spec.width = parse_f64(value, key)? as usize,
                "height" => spec.height = parse_f64(value, key)? as usize,
                "background_shift" => spec.background_shift = parse_pair(value, key)?,
                "foreground_shift" => spec.foreground_shift = parse_pair(value, key)?,
                "foreground_shape" => {
                    let (kind, params) = value
                        .split_once(':')
                        .ok_or_else(|| Error::format("foreground_shape expects kind:params"))?;
                    let nums: Result<Vec<f64>> =
                        params.split(',').map(|p| parse_f64(p, key)).collect();
                    let nums = nums?;
                    if nums.len() != 4 {
                        return Err(Error::format("foreground_shape expects 4 parameters"));
                    }
                    spec.foreground_shape = match kind {
                        "rect" => ForegroundShape::Rect {
                            x0: nums[0],
                            y0: nums[1],
                            x1: nums[2],
                            y1: nums[3],
                        },
                        "ellipse" => ForegroundShape::Ellipse {
                            cx: nums[0],
                            cy: nums[1],
                            rx: nums[2],
                            ry: nums[3],
                        },
                        other => {
                            return Err(Error::format(format!("unknown shape kind '{other}'")))
                        }
                    };
                }
                "texture_seed" => spec.texture_seed = parse_f64(value, key)? as u64,
                "texture_cutoff" => spec.texture_cutoff = parse_f64(value, key)?,
                "textureless_band" => {
                    let nums: Result<Vec<f64>> =
                        value.split(',').map(|p| parse_f64(p, key)).collect();
                    let nums = nums?;
                    if nums.len() != 4 {
                        return Err(Error::format("textureless_band expects 4 numbers"));
                    }
                    spec.textureless_band = Some((nums[0], nums[1], nums[2], nums[3]));
                }
                "noise_sigma" => spec.noise_sigma = parse_f64(value, key)?,
                other => return Err(Error::format(format!("unknown key '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// A periodic texture held as its Fourier spectrum, so it can be
/// translated by arbitrary sub-pixel amounts exactly.
#[derive(Clone)]
pub struct BandTexture {
    width: usize,
    height: usize,
    spectrum: Vec<Complex<f64>>,
}

impl BandTexture {
    /// Band-limited noise normalized to unit peak amplitude.
    ///
    /// Built as a sum of equal-weight frequency octaves below the
    /// cutoff, so every pyramid scale of the rendered texture carries
    /// comparable structure. A flat one-octave spectrum would vanish
    /// after a couple of downsamples and starve coarse-to-fine solvers.
    pub fn noise(width: usize, height: usize, cutoff: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut white: Vec<Complex<f64>> = (0..width * height)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        fft2(&mut white, width, height, false);

        // octaves [cutoff/2, cutoff], [cutoff/4, cutoff/2], ... down to
        // roughly two cycles per frame
        let min_freq = 2.0 / width.min(height) as f64;
        let mut bands = Vec::new();
        let mut hi = cutoff;
        while hi / 2.0 >= min_freq && bands.len() < 5 {
            bands.push((hi / 2.0, hi));
            hi /= 2.0;
        }
        if bands.is_empty() {
            bands.push((0.0, cutoff));
        }

        let mut spectrum = vec![Complex::new(0.0, 0.0); width * height];
        for &(lo, hi) in &bands {
            let mut band = vec![Complex::new(0.0, 0.0); width * height];
            for ky in 0..height {
                let fy = signed_freq(ky, height);
                for kx in 0..width {
                    let fx = signed_freq(kx, width);
                    let f = (fx * fx + fy * fy).sqrt();
                    if f > lo && f <= hi {
                        band[ky * width + kx] = white[ky * width + kx];
                    }
                }
            }
            let tex = BandTexture {
                width,
                height,
                spectrum: band,
            };
            let rendered = tex.render();
            let peak = rendered.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if peak > 0.0 {
                let scale = 1.0 / (peak * bands.len() as f64);
                for (acc, c) in spectrum.iter_mut().zip(&tex.spectrum) {
                    *acc += c * scale;
                }
            }
        }

        let mut tex = BandTexture {
            width,
            height,
            spectrum,
        };
        // normalize to sup-norm 1 so callers control amplitude exactly
        let rendered = tex.render();
        let peak = rendered.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if peak > 0.0 {
            for c in &mut tex.spectrum {
                *c /= peak;
            }
        }
        tex
    }

    /// Spectrum of an arbitrary periodic field (used after masking).
    pub fn from_plane(p: &Plane) -> Self {
        let mut field: Vec<Complex<f64>> =
            p.data.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft2(&mut field, p.width, p.height, false);
        BandTexture {
            width: p.width,
            height: p.height,
            spectrum: field,
        }
    }

    /// Texture translated by (dx, dy): `out(p) = self(p - (dx, dy))`.
    pub fn shift(&self, dx: f64, dy: f64) -> Self {
        let mut out = self.clone();
        for ky in 0..self.height {
            let fy = signed_freq(ky, self.height);
            for kx in 0..self.width {
                let fx = signed_freq(kx, self.width);
                let phase = -2.0 * std::f64::consts::PI * (fx * dx + fy * dy);
                out.spectrum[ky * self.width + kx] *= Complex::from_polar(1.0, phase);
            }
        }
        out
    }

    pub fn render(&self) -> Plane {
        let mut field = self.spectrum.clone();
        fft2(&mut field, self.width, self.height, true);
        Plane {
            width: self.width,
            height: self.height,
            data: field.into_iter().map(|c| c.re).collect(),
        }
    }
}

fn signed_freq(k: usize, n: usize) -> f64 {
    let k = k as isize;
    let n = n as isize;
    let s = if k <= n / 2 { k } else { k - n };
    s as f64 / n as f64
}

fn fft2(data: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for row in data.chunks_mut(width) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut col = vec![Complex::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            col[y] = data[y * width + x];
        }
        col_fft.process(&mut col);
        for y in 0..height {
            data[y * width + x] = col[y];
        }
    }
    if inverse {
        let scale = 1.0 / (width * height) as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }
}

/// Everything the generator knows about a scene.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    /// Color reference image.
    pub i1: Image,
    /// Grayscale input image.
    pub i2: Image,
    pub gt_flow: FlowField,
    pub gt_mask: Mask,
    /// Pixels whose ground-truth correspondence is visible in the input
    /// frame (target inside the frame and not covered by layer motion).
    pub valid: Mask,
}

// Raised-cosine step: 0 for t <= 0, 1 for t >= 1.
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        0.5 - 0.5 * (std::f64::consts::PI * t).cos()
    }
}

// Texture attenuation for the textureless band: 0 inside, 1 outside,
// with a raised-cosine margin so the masked texture stays smooth.
fn band_attenuation(band: (f64, f64, f64, f64), x: f64, y: f64) -> f64 {
    let (x0, y0, x1, y1) = band;
    let w = BAND_EDGE_WIDTH;
    let sx = smoothstep((x - (x0 - w)) / w) * smoothstep(((x1 + w) - x) / w);
    let sy = smoothstep((y - (y0 - w)) / w) * smoothstep(((y1 + w) - y) / w);
    1.0 - sx * sy
}

/// Renders the scene described by `spec`.
pub fn synthetic_pair(spec: &SyntheticSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let shape = &spec.foreground_shape;
    let (fgu, fgv) = spec.foreground_shift;
    let (bgu, bgv) = spec.background_shift;

    let bg_tex = BandTexture::noise(w, h, spec.texture_cutoff, spec.texture_seed);
    let fg_raw = BandTexture::noise(w, h, spec.texture_cutoff, spec.texture_seed.wrapping_add(1));

    // Foreground texture with the textureless band carved out in layer
    // coordinates, so the flat area travels with the layer.
    let fg_plane = {
        let mut p = fg_raw.render();
        if let Some(band) = spec.textureless_band {
            for y in 0..h {
                for x in 0..w {
                    let a = band_attenuation(band, x as f64, y as f64);
                    let v = p.get(x, y) * a;
                    p.set(x, y, v);
                }
            }
        }
        p
    };
    let fg_tex = BandTexture::from_plane(&fg_plane);
    let bg_plane = bg_tex.render();
    let fg_shifted = fg_tex.shift(fgu, fgv).render();
    let bg_shifted = bg_tex.shift(bgu, bgv).render();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.texture_seed.wrapping_add(0x9e3779b9));
    let mut noise = |sigma: f64| -> f64 {
        if sigma == 0.0 {
            0.0
        } else {
            // Box-Muller from two uniform draws
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    };

    let mut i1_data = vec![0.0f32; w * h * 3];
    let mut i2_data = vec![0.0f32; w * h];
    let mut gt_u = vec![0.0f32; w * h];
    let mut gt_v = vec![0.0f32; w * h];
    let mut gt_labels = vec![0u8; w * h];
    let mut valid_labels = vec![0u8; w * h];

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (xf, yf) = (x as f64, y as f64);
            let in_fg = shape.contains(xf, yf);

            let (lum, chroma, shift) = if in_fg {
                (FG_BASE + TEXTURE_AMP * fg_plane.get(x, y), FG_CHROMA, (fgu, fgv))
            } else {
                (BG_BASE + TEXTURE_AMP * bg_plane.get(x, y), BG_CHROMA, (bgu, bgv))
            };
            for c in 0..3 {
                i1_data[i * 3 + c] =
                    ((lum + chroma[c] + noise(spec.noise_sigma)) as f32).clamp(0.0, 1.0);
            }

            // input frame: foreground wins where its shifted support lands
            let fg_visible = shape.contains(xf - fgu, yf - fgv);
            let lum2 = if fg_visible {
                FG_BASE + TEXTURE_AMP * fg_shifted.get(x, y)
            } else {
                BG_BASE + TEXTURE_AMP * bg_shifted.get(x, y)
            };
            i2_data[i] = ((lum2 + noise(spec.noise_sigma)) as f32).clamp(0.0, 1.0);

            gt_u[i] = shift.0 as f32;
            gt_v[i] = shift.1 as f32;
            gt_labels[i] = in_fg as u8;

            let (tx, ty) = (xf + shift.0, yf + shift.1);
            let in_frame = tx >= 0.0 && ty >= 0.0 && tx <= (w - 1) as f64 && ty <= (h - 1) as f64;
            let occluded = !in_fg && shape.contains(tx - fgu, ty - fgv);
            valid_labels[i] = (in_frame && !occluded) as u8;
        }
    }

    Ok(SyntheticScene {
        i1: Image::new(w, h, 3, i1_data)?,
        i2: Image::new(w, h, 1, i2_data)?,
        gt_flow: FlowField::new(w, h, gt_u, gt_v)?,
        gt_mask: Mask::new(w, h, gt_labels)?,
        valid: Mask::new(w, h, valid_labels)?,
    })
}

/// Converts a hard mask to a soft score map by Gaussian-blurring its
/// 0/1 values; this is also the CLI fallback for a missing score map.
pub fn score_map_from_mask(mask: &Mask, blur_sigma: f64) -> ScoreMap {
    let p = Plane {
        width: mask.width(),
        height: mask.height(),
        data: mask.labels().iter().map(|&v| v as f64).collect(),
    };
    let blurred = p.gaussian_blur(blur_sigma);
    ScoreMap::new(
        mask.width(),
        mask.height(),
        blurred.data.iter().map(|&v| v as f32).collect(),
    )
    .expect("finite blurred values")
}

/// Flips a fraction of the mask's boundary pixels (seeded), then blurs.
/// Models an imperfect segmentation prior for tests and demos.
pub fn perturbed_score_map(
    mask: &Mask,
    flip_fraction: f64,
    blur_sigma: f64,
    seed: u64,
) -> ScoreMap {
    let (w, h) = (mask.width(), mask.height());
    let mut boundary = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = mask.get(x, y);
            let mut is_boundary = false;
            for (dx, dy) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    if mask.get(nx as usize, ny as usize) != v {
                        is_boundary = true;
                    }
                }
            }
            if is_boundary {
                boundary.push((x, y));
            }
        }
    }
    let mut flipped = mask.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &(x, y) in &boundary {
        if rng.random_range(0.0..1.0) < flip_fraction {
            flipped.set(x, y, 1 - mask.get(x, y));
        }
    }
    score_map_from_mask(&flipped, blur_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shift_noise_free_scene_matches_reference_luminance() {
        let spec = SyntheticSpec {
            background_shift: (0.0, 0.0),
            foreground_shift: (0.0, 0.0),
            noise_sigma: 0.0,
            ..Default::default()
        };
        let scene = synthetic_pair(&spec).unwrap();
        let lum1 = scene.i1.luminance();
        for i in 0..lum1.data.len() {
            assert!(
                (lum1.data[i] - scene.i2.data()[i] as f64).abs() < 1e-6,
                "pixel {i}: {} vs {}",
                lum1.data[i],
                scene.i2.data()[i]
            );
        }
        assert_eq!(scene.gt_flow.max_magnitude(), 0.0);
    }

    #[test]
    fn full_frame_foreground_masks_everything() {
        let spec = SyntheticSpec {
            width: 32,
            height: 32,
            foreground_shape: ForegroundShape::Rect {
                x0: 0.0,
                y0: 0.0,
                x1: 31.0,
                y1: 31.0,
            },
            background_shift: (0.0, 0.0),
            foreground_shift: (0.0, 0.0),
            ..Default::default()
        };
        let scene = synthetic_pair(&spec).unwrap();
        assert_eq!(scene.gt_mask.count_ones(), 32 * 32);
    }

    #[test]
    fn spectral_shift_round_trip() {
        let tex = BandTexture::noise(64, 64, 0.15, 3);
        let original = tex.render();
        let round_trip = tex.shift(2.5, 0.0).shift(-2.5, 0.0).render();
        for (a, b) in original.data.iter().zip(round_trip.data.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn integer_shift_matches_circular_translation() {
        let tex = BandTexture::noise(32, 32, 0.2, 11);
        let base = tex.render();
        let shifted = tex.shift(3.0, -2.0).render();
        for y in 0..32usize {
            for x in 0..32usize {
                let sx = (x as isize - 3).rem_euclid(32) as usize;
                let sy = (y as isize + 2).rem_euclid(32) as usize;
                assert!((shifted.get(x, y) - base.get(sx, sy)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn backward_warp_reproduces_reference_on_layer_interiors() {
        let spec = SyntheticSpec {
            foreground_shift: (2.5, 0.0),
            background_shift: (-1.25, 0.5),
            noise_sigma: 0.01,
            ..Default::default()
        };
        let scene = synthetic_pair(&spec).unwrap();
        let lum1 = scene.i1.luminance();
        let lum2 = scene.i2.luminance();
        let (w, h) = (spec.width, spec.height);
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        for y in 2..h - 2 {
            for x in 2..w - 2 {
                if scene.valid.get(x, y) == 0 {
                    continue;
                }
                // stay away from the layer boundary
                let near_boundary = (-2..=2).any(|dy: isize| {
                    (-2..=2).any(|dx: isize| {
                        scene
                            .gt_mask
                            .get((x as isize + dx) as usize, (y as isize + dy) as usize)
                            != scene.gt_mask.get(x, y)
                    })
                });
                if near_boundary {
                    continue;
                }
                let (u, v) = scene.gt_flow.get(x, y);
                let warped = lum2.sample_bilinear(x as f64 + u as f64, y as f64 + v as f64);
                let d = warped - lum1.get(x, y);
                sq_sum += d * d;
                count += 1;
            }
        }
        let rms = (sq_sum / count as f64).sqrt();
        assert!(
            rms <= 2.0 * spec.noise_sigma + 1e-3,
            "interior RMS {rms} too large"
        );
    }

    #[test]
    fn occluded_background_is_excluded_from_valid() {
        let spec = SyntheticSpec::default(); // fg moves +6 in x over bg moving -2
        let scene = synthetic_pair(&spec).unwrap();
        // background pixel just right of the shape: target lands under the moved foreground
        let x = 104usize;
        let y = 64usize;
        assert_eq!(scene.gt_mask.get(x, y), 0);
        assert_eq!(scene.valid.get(x, y), 0, "expected occluded pixel");
        // far-away background stays valid
        assert_eq!(scene.valid.get(10, 10), 1);
    }

    #[test]
    fn kv_round_trip() {
        let spec = SyntheticSpec {
            textureless_band: Some((44.0, 60.0, 60.0, 100.0)),
            foreground_shape: ForegroundShape::Ellipse {
                cx: 64.0,
                cy: 64.0,
                rx: 20.0,
                ry: 30.0,
            },
            noise_sigma: 0.01,
            ..Default::default()
        };
        let parsed = SyntheticSpec::from_kv(&spec.to_kv()).unwrap();
        assert_eq!(spec, parsed);
    }

    #[test]
    fn perturbed_score_map_is_deterministic() {
        let spec = SyntheticSpec::default();
        let scene = synthetic_pair(&spec).unwrap();
        let a = perturbed_score_map(&scene.gt_mask, 0.1, 5.0, 9);
        let b = perturbed_score_map(&scene.gt_mask, 0.1, 5.0, 9);
        assert_eq!(a, b);
    }
}
