//! Pull-push interpolation: extends a flow field defined on a support
//! mask to the whole frame. Values on the support are preserved
//! exactly; holes are filled from a normalized-average pyramid, then
//! smoothed once with a 3x3 normalized convolution off-support.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Mask;
use crate::plane::Plane;

struct Level {
    weight: Plane,
    u: Plane,
    v: Plane,
}

/// Propagates `flow` restricted to `support` over the full frame.
pub fn propagate_region(flow: &FlowField, support: &Mask) -> Result<FlowField> {
    if support.width() != flow.width() || support.height() != flow.height() {
        return Err(Error::contract("propagate_region: mask and flow differ in size"));
    }
    if support.count_ones() == 0 {
        return Err(Error::contract("propagate_region: empty support"));
    }
    let (w, h) = (flow.width(), flow.height());

    // pull: average (u*m, v*m, m) down to 1x1
    let mut levels = Vec::new();
    {
        let mut weight = Plane::new(w, h);
        let mut u = Plane::new(w, h);
        let mut v = Plane::new(w, h);
        for y in 0..h {
            for x in 0..w {
                if support.get(x, y) == 1 {
                    let (fu, fv) = flow.get(x, y);
                    weight.set(x, y, 1.0);
                    u.set(x, y, fu as f64);
                    v.set(x, y, fv as f64);
                }
            }
        }
        levels.push(Level { weight, u, v });
    }
    while levels.last().unwrap().weight.width > 1 || levels.last().unwrap().weight.height > 1 {
        let prev = levels.last().unwrap();
        let (pw, ph) = (prev.weight.width, prev.weight.height);
        let nw = pw.div_ceil(2);
        let nh = ph.div_ceil(2);
        let mut weight = Plane::new(nw, nh);
        let mut u = Plane::new(nw, nh);
        let mut v = Plane::new(nw, nh);
        for y in 0..nh {
            for x in 0..nw {
                let mut wsum = 0.0;
                let mut usum = 0.0;
                let mut vsum = 0.0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let sx = 2 * x + dx;
                        let sy = 2 * y + dy;
                        if sx < pw && sy < ph {
                            wsum += prev.weight.get(sx, sy);
                            usum += prev.u.get(sx, sy);
                            vsum += prev.v.get(sx, sy);
                        }
                    }
                }
                // out-of-frame children count as empty so the weight
                // decay stays symmetric on odd-sized levels
                weight.set(x, y, wsum / 4.0);
                u.set(x, y, usum / 4.0);
                v.set(x, y, vsum / 4.0);
            }
        }
        levels.push(Level { weight, u, v });
    }

    // push: normalize each occupied cell, fill the weight deficit from
    // the coarser level (holes take the coarse value outright)
    let coarsest = levels.last_mut().unwrap();
    for i in 0..coarsest.weight.data.len() {
        let m = coarsest.weight.data[i];
        if m > 0.0 {
            coarsest.u.data[i] /= m;
            coarsest.v.data[i] /= m;
        }
        // the 1x1 top holds the support average and is always occupied
        coarsest.weight.data[i] = 1.0;
    }
    for k in (0..levels.len() - 1).rev() {
        let (fine, coarse) = {
            let (a, b) = levels.split_at_mut(k + 1);
            (&mut a[k], &b[0])
        };
        let (fw, fh) = (fine.weight.width, fine.weight.height);
        for y in 0..fh {
            for x in 0..fw {
                let i = y * fw + x;
                let m = fine.weight.data[i].min(1.0);
                // coarse sample at the parent position
                let cx = (x as f64 - 0.5) / 2.0;
                let cy = (y as f64 - 0.5) / 2.0;
                let cu = coarse.u.sample_bilinear(cx, cy);
                let cv = coarse.v.sample_bilinear(cx, cy);
                if m > 0.0 {
                    fine.u.data[i] = m * (fine.u.data[i] / fine.weight.data[i]) + (1.0 - m) * cu;
                    fine.v.data[i] = m * (fine.v.data[i] / fine.weight.data[i]) + (1.0 - m) * cv;
                } else {
                    fine.u.data[i] = cu;
                    fine.v.data[i] = cv;
                }
                fine.weight.data[i] = 1.0;
            }
        }
    }

    // one 3x3 normalized-convolution smoothing pass off-support
    let filled = &levels[0];
    let kernel = [1.0, 2.0, 1.0];
    let mut out_u = filled.u.clone();
    let mut out_v = filled.v.clone();
    for y in 0..h {
        for x in 0..w {
            if support.get(x, y) == 1 {
                continue;
            }
            let mut usum = 0.0;
            let mut vsum = 0.0;
            let mut ksum = 0.0;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let kw = kernel[(dx + 1) as usize] * kernel[(dy + 1) as usize];
                    usum += kw * filled.u.get(nx as usize, ny as usize);
                    vsum += kw * filled.v.get(nx as usize, ny as usize);
                    ksum += kw;
                }
            }
            out_u.set(x, y, usum / ksum);
            out_v.set(x, y, vsum / ksum);
        }
    }

    FlowField::from_planes(&out_u, &out_v)
}
