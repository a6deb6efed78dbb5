//! Scalar field in f64 used by the solvers (luminance, derivatives,
//! pyramid levels). Boundary handling is replicate-padding throughout.

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut p = Plane::new(width, height);
        for y in 0..height {
            for x in 0..width {
                p.data[y * width + x] = f(x, y);
            }
        }
        p
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Value at clamped integer coordinates (replicate padding).
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Bilinear sample with replicate padding outside the frame.
    pub fn sample_bilinear(&self, fx: f64, fy: f64) -> f64 {
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let x0 = x0 as isize;
        let y0 = y0 as isize;
        let v00 = self.at_clamped(x0, y0);
        let v10 = self.at_clamped(x0 + 1, y0);
        let v01 = self.at_clamped(x0, y0 + 1);
        let v11 = self.at_clamped(x0 + 1, y0 + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Central-difference derivative along x.
    pub fn dx(&self) -> Plane {
        let mut out = Plane::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let v = 0.5
                    * (self.at_clamped(x as isize + 1, y as isize)
                        - self.at_clamped(x as isize - 1, y as isize));
                out.set(x, y, v);
            }
        }
        out
    }

    /// Central-difference derivative along y.
    pub fn dy(&self) -> Plane {
        let mut out = Plane::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let v = 0.5
                    * (self.at_clamped(x as isize, y as isize + 1)
                        - self.at_clamped(x as isize, y as isize - 1));
                out.set(x, y, v);
            }
        }
        out
    }

    /// Gradient magnitude from central differences.
    pub fn gradient_magnitude(&self) -> Plane {
        let gx = self.dx();
        let gy = self.dy();
        let mut out = Plane::new(self.width, self.height);
        for i in 0..self.data.len() {
            out.data[i] = (gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i]).sqrt();
        }
        out
    }

    /// Separable Gaussian blur with replicate padding.
    pub fn gaussian_blur(&self, sigma: f64) -> Plane {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil().max(1.0) as isize;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        let mut sum = 0.0;
        for i in -radius..=radius {
            let w = (-(i * i) as f64 / (2.0 * sigma * sigma)).exp();
            kernel.push(w);
            sum += w;
        }
        for w in &mut kernel {
            *w /= sum;
        }

        let mut tmp = Plane::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let xs = x as isize + k as isize - radius;
                    acc += w * self.at_clamped(xs, y as isize);
                }
                tmp.set(x, y, acc);
            }
        }
        let mut out = Plane::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let ys = y as isize + k as isize - radius;
                    acc += w * tmp.at_clamped(x as isize, ys);
                }
                out.set(x, y, acc);
            }
        }
        out
    }

    /// Bilinear resize to the given dimensions.
    pub fn resize(&self, width: usize, height: usize) -> Plane {
        let mut out = Plane::new(width, height);
        if width == 0 || height == 0 {
            return out;
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        for y in 0..height {
            for x in 0..width {
                // map the destination pixel center into source coordinates
                let fx = (x as f64 + 0.5) * sx - 0.5;
                let fy = (y as f64 + 0.5) * sy - 0.5;
                out.set(x, y, self.sample_bilinear(fx, fy));
            }
        }
        out
    }

    /// Anti-aliased half-scale downsample: blur then resize. The blur
    /// must suppress content above the new Nyquist rate or the coarse
    /// pyramid levels decorrelate between the two images.
    pub fn downsample_half(&self) -> Plane {
        let w = (self.width + 1) / 2;
        let h = (self.height + 1) / 2;
        self.gaussian_blur(1.2).resize(w.max(1), h.max(1))
    }

    /// Plain (unweighted) median filter over a square window, replicate padded.
    pub fn median_filter(&self, radius: usize) -> Plane {
        let mut out = Plane::new(self.width, self.height);
        let r = radius as isize;
        let mut window = Vec::with_capacity((2 * radius + 1) * (2 * radius + 1));
        for y in 0..self.height as isize {
            for x in 0..self.width as isize {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(self.at_clamped(x + dx, y + dy));
                    }
                }
                window.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.set(x as usize, y as usize, window[window.len() / 2]);
            }
        }
        out
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_interpolates_midpoints() {
        let p = Plane::from_fn(2, 1, |x, _| x as f64);
        assert!((p.sample_bilinear(0.5, 0.0) - 0.5).abs() < 1e-12);
        // replicate padding beyond the frame
        assert!((p.sample_bilinear(-3.0, 0.0) - 0.0).abs() < 1e-12);
        assert!((p.sample_bilinear(5.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blur_preserves_constants() {
        let p = Plane::from_fn(9, 9, |_, _| 0.3);
        let b = p.gaussian_blur(1.5);
        for v in b.data {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_ramp_is_constant() {
        let p = Plane::from_fn(8, 8, |x, _| 2.0 * x as f64);
        let gx = p.dx();
        // interior pixels see the exact slope
        for y in 0..8 {
            for x in 1..7 {
                assert!((gx.get(x, y) - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn median_removes_single_outlier() {
        let mut p = Plane::from_fn(5, 5, |_, _| 1.0);
        p.set(2, 2, 100.0);
        let f = p.median_filter(1);
        assert_eq!(f.get(2, 2), 1.0);
    }

    #[test]
    fn resize_constant_field() {
        let p = Plane::from_fn(7, 5, |_, _| 0.25);
        let r = p.resize(13, 9);
        for v in r.data {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }
}
