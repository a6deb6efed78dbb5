//! Guide-weighted median filtering of flow fields. Each component is
//! filtered independently; window weights follow the bilateral form of
//! the CRF pairwise weight (spatial distance and guide color distance).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct WmfParams {
    pub radius: usize,
    pub sigma_spatial: f64,
    pub sigma_range: f64,
}

impl Default for WmfParams {
    fn default() -> Self {
        WmfParams {
            radius: 7,
            sigma_spatial: 7.0,
            sigma_range: 0.1,
        }
    }
}

impl WmfParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::contract("wmf radius must be >= 1"));
        }
        if self.sigma_spatial <= 0.0 || self.sigma_range <= 0.0 {
            return Err(Error::contract("wmf sigmas must be positive"));
        }
        Ok(())
    }
}

/// Weighted median of (value, weight) pairs. The first value whose
/// cumulative weight reaches half the total wins, so exact halves
/// resolve to the lower value.
pub(crate) fn weighted_median(samples: &mut Vec<(f64, f64)>) -> f64 {
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let half = 0.5 * total;
    let mut cum = 0.0;
    for &(value, weight) in samples.iter() {
        cum += weight;
        if cum >= half {
            return value;
        }
    }
    samples.last().map(|s| s.0).unwrap_or(0.0)
}

/// Replaces each flow vector component by the guide-weighted median of
/// its window, with replicate padding at the frame borders.
pub fn weighted_median_refine(
    flow: &FlowField,
    guide: &Image,
    params: &WmfParams,
) -> Result<FlowField> {
    params.validate()?;
    if guide.width() != flow.width() || guide.height() != flow.height() {
        return Err(Error::contract("wmf: guide and flow differ in size"));
    }
    let (w, h) = (flow.width(), flow.height());
    let r = params.radius as isize;
    let inv_ss = 1.0 / (params.sigma_spatial * params.sigma_spatial);
    let inv_sr = 1.0 / (params.sigma_range * params.sigma_range);

    let clamp_x = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let clamp_y = |y: isize| y.clamp(0, h as isize - 1) as usize;

    let rows: Vec<(Vec<f32>, Vec<f32>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row_u = Vec::with_capacity(w);
            let mut row_v = Vec::with_capacity(w);
            let mut samples_u: Vec<(f64, f64)> = Vec::new();
            let mut samples_v: Vec<(f64, f64)> = Vec::new();
            for x in 0..w {
                samples_u.clear();
                samples_v.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        let qx = clamp_x(x as isize + dx);
                        let qy = clamp_y(y as isize + dy);
                        let spatial_sq = (dx * dx + dy * dy) as f64;
                        let range = guide.color_distance(x, y, qx, qy);
                        let weight =
                            (-spatial_sq * inv_ss - range * range * inv_sr).exp();
                        let (u, v) = flow.get(qx, qy);
                        samples_u.push((u as f64, weight));
                        samples_v.push((v as f64, weight));
                    }
                }
                row_u.push(weighted_median(&mut samples_u) as f32);
                row_v.push(weighted_median(&mut samples_v) as f32);
            }
            (row_u, row_v)
        })
        .collect();

    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for (row_u, row_v) in rows {
        u.extend(row_u);
        v.extend(row_v);
    }
    FlowField::new(w, h, u, v)
}
