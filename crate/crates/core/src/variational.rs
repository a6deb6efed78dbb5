//! Finest-scale variational refinement of a flow candidate.
//!
//! One warp, then a robust intensity + gradient constancy solve for a
//! small increment with TV-style smoothness on the increment. The
//! increment is clamped to one pixel: larger corrections are the job of
//! other regional candidates, not of this refiner.

use crate::error::Result;
use crate::flow::FlowField;
use crate::image::Image;
use crate::plane::Plane;

const ROBUST_EPS: f64 = 1e-6;
const GRADIENT_WEIGHT: f64 = 0.5;
// The smoothness robustifier needs its own scales: increment gradients
// live around 0.1 px/px while data residuals live around 1e-2, and a
// shared epsilon would make the flat-start TV weight 500x the data
// weight and freeze the solve.
const SMOOTHNESS_WEIGHT: f64 = 2e-3;
const SMOOTHNESS_EPS: f64 = 1e-4;
const OUTER_ITERS: usize = 3;
const INNER_ITERS: usize = 30;
const MAX_INCREMENT: f64 = 1.0;

#[inline]
fn robust_deriv(x_sq: f64) -> f64 {
    // psi(s) = sqrt(s + eps); psi'(s) = 1 / (2 sqrt(s + eps))
    0.5 / (x_sq + ROBUST_EPS).sqrt()
}

/// Refines `w` by at most one pixel per component using a single
/// finest-scale robust variational solve.
pub fn refine_subpixel(w: &FlowField, i1: &Image, i2: &Image) -> Result<FlowField> {
    let lum1 = i1.luminance();
    let lum2 = i2.luminance();
    let (width, height) = (w.width(), w.height());
    let n = width * height;

    // warp the input once by the candidate flow
    let mut warped = Plane::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = w.get(x, y);
            warped.set(
                x,
                y,
                lum2.sample_bilinear(x as f64 + u as f64, y as f64 + v as f64),
            );
        }
    }

    let ix = warped.dx();
    let iy = warped.dy();
    let ixx = ix.dx();
    let ixy = ix.dy();
    let iyy = iy.dy();
    let i1x = lum1.dx();
    let i1y = lum1.dy();

    let mut it = vec![0.0f64; n];
    let mut itx = vec![0.0f64; n];
    let mut ity = vec![0.0f64; n];
    for i in 0..n {
        it[i] = warped.data[i] - lum1.data[i];
        itx[i] = ix.data[i] - i1x.data[i];
        ity[i] = iy.data[i] - i1y.data[i];
    }

    let mut du = Plane::new(width, height);
    let mut dv = Plane::new(width, height);

    for _ in 0..OUTER_ITERS {
        // robustness weights at the current increment
        let mut wd = vec![0.0f64; n];
        let mut wg = vec![0.0f64; n];
        for i in 0..n {
            let rd = it[i] + ix.data[i] * du.data[i] + iy.data[i] * dv.data[i];
            let rgx = itx[i] + ixx.data[i] * du.data[i] + ixy.data[i] * dv.data[i];
            let rgy = ity[i] + ixy.data[i] * du.data[i] + iyy.data[i] * dv.data[i];
            wd[i] = robust_deriv(rd * rd);
            wg[i] = GRADIENT_WEIGHT * robust_deriv(rgx * rgx + rgy * rgy);
        }
        // per-pixel smoothness diffusivity from the current increment
        let dux = du.dx();
        let duy = du.dy();
        let dvx = dv.dx();
        let dvy = dv.dy();
        let mut ws = vec![0.0f64; n];
        for i in 0..n {
            let mag = dux.data[i] * dux.data[i]
                + duy.data[i] * duy.data[i]
                + dvx.data[i] * dvx.data[i]
                + dvy.data[i] * dvy.data[i];
            ws[i] = SMOOTHNESS_WEIGHT * 0.5 / (mag + SMOOTHNESS_EPS).sqrt();
        }

        // Gauss-Seidel on the linearized system
        for _ in 0..INNER_ITERS {
            for y in 0..height {
                for x in 0..width {
                    let i = y * width + x;
                    let mut s_sum = 0.0;
                    let mut s_u = 0.0;
                    let mut s_v = 0.0;
                    for (dx, dy) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                        let nx = x as isize + dx;
                        let ny = y as isize + dy;
                        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                            continue;
                        }
                        let j = ny as usize * width + nx as usize;
                        let edge = 0.5 * (ws[i] + ws[j]);
                        s_sum += edge;
                        s_u += edge * du.data[j];
                        s_v += edge * dv.data[j];
                    }
                    let a11 = wd[i] * ix.data[i] * ix.data[i]
                        + wg[i] * (ixx.data[i] * ixx.data[i] + ixy.data[i] * ixy.data[i])
                        + s_sum;
                    let a22 = wd[i] * iy.data[i] * iy.data[i]
                        + wg[i] * (ixy.data[i] * ixy.data[i] + iyy.data[i] * iyy.data[i])
                        + s_sum;
                    let a12 = wd[i] * ix.data[i] * iy.data[i]
                        + wg[i] * (ixx.data[i] * ixy.data[i] + ixy.data[i] * iyy.data[i]);
                    let b1 = -wd[i] * ix.data[i] * it[i]
                        - wg[i] * (ixx.data[i] * itx[i] + ixy.data[i] * ity[i])
                        + s_u;
                    let b2 = -wd[i] * iy.data[i] * it[i]
                        - wg[i] * (ixy.data[i] * itx[i] + iyy.data[i] * ity[i])
                        + s_v;
                    let det = a11 * a22 - a12 * a12;
                    if det.abs() > 1e-12 {
                        du.data[i] = (b1 * a22 - b2 * a12) / det;
                        dv.data[i] = (b2 * a11 - b1 * a12) / det;
                    }
                }
            }
        }
    }

    // sub-pixel refinement only: clamp the increment magnitude
    let mut out = w.clone();
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut ddu = du.data[i];
            let mut ddv = dv.data[i];
            let mag = (ddu * ddu + ddv * ddv).sqrt();
            if mag > MAX_INCREMENT {
                ddu *= MAX_INCREMENT / mag;
                ddv *= MAX_INCREMENT / mag;
            }
            let (u, v) = w.get(x, y);
            out.set(x, y, u + ddu as f32, v + ddv as f32);
        }
    }
    Ok(out)
}
