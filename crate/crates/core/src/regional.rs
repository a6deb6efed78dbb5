//! Regional correspondence construction: partition the initial flow at
//! motion boundaries, merge and filter the regions, and propagate each
//! region's flow over the whole frame to form the candidate set that
//! the joint CRF selects from.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::hs::{horn_schunck, HsParams};
use crate::image::{Image, Mask};
use crate::plane::Plane;
use crate::pullpush::propagate_region;
use crate::variational::refine_subpixel;
use crate::wmf::{weighted_median_refine, WmfParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RegionalParams {
    /// Upper bound on the number of correspondence candidates.
    pub n_max: usize,
    /// Flow-Jacobian magnitude (px/px) marking a motion boundary.
    pub boundary_threshold: f64,
    /// Mean-flow distance (px) below which adjacent regions merge.
    pub merge_threshold: f64,
    /// A region is an outlier when its mean flow differs from every
    /// neighbor by more than `outlier_factor * merge_threshold`.
    pub outlier_factor: f64,
    /// Minimum region area as a fraction of the frame.
    pub min_region_area: f64,
    /// Run the finest-scale variational refinement on each candidate.
    pub refine_subpixel: bool,
}

impl Default for RegionalParams {
    fn default() -> Self {
        RegionalParams {
            n_max: 10,
            boundary_threshold: 1.0,
            merge_threshold: 1.5,
            outlier_factor: 4.0,
            min_region_area: 0.005,
            refine_subpixel: true,
        }
    }
}

impl RegionalParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::contract("n_max must be >= 1"));
        }
        if self.boundary_threshold <= 0.0
            || self.merge_threshold <= 0.0
            || self.outlier_factor <= 0.0
            || self.min_region_area <= 0.0
        {
            return Err(Error::contract("regional thresholds must be positive"));
        }
        Ok(())
    }
}

/// Per-pixel region labels. Id 0 is reserved for boundary/outlier
/// pixels; ids 1..region_count label regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    width: usize,
    height: usize,
    region_id: Vec<u32>,
    region_count: usize,
}

impl RegionMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of ids in use including the reserved id 0.
    pub fn region_count(&self) -> usize {
        self.region_count
    }

    pub fn ids(&self) -> &[u32] {
        &self.region_id
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.region_id[y * self.width + x]
    }

    /// Support mask of one region id.
    pub fn mask_of(&self, id: u32) -> Mask {
        let labels = self
            .region_id
            .iter()
            .map(|&r| (r == id) as u8)
            .collect();
        Mask::new(self.width, self.height, labels).expect("binary labels")
    }

    pub fn area_of(&self, id: u32) -> usize {
        self.region_id.iter().filter(|&&r| r == id).count()
    }

    /// Renumbers region ids (id 0 fixed) to 1..K in row-major order of
    /// first occurrence, dropping empty ids.
    fn relabel(&mut self) {
        let mut remap = vec![0u32; self.region_count.max(1)];
        let mut next = 1u32;
        for &id in self.region_id.iter() {
            if id != 0 && remap[id as usize] == 0 {
                remap[id as usize] = next;
                next += 1;
            }
        }
        for id in self.region_id.iter_mut() {
            if *id != 0 {
                *id = remap[*id as usize];
            }
        }
        self.region_count = next as usize;
    }
}

/// The candidate flow maps and the supports they were propagated from.
#[derive(Debug, Clone)]
pub struct RegionalCorrespondenceSet {
    pub maps: Vec<FlowField>,
    pub supports: Vec<Mask>,
}

impl RegionalCorrespondenceSet {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// Frobenius norm of the flow Jacobian at every pixel: the larger of
/// the central-difference and forward-difference estimates, so sharp
/// one-pixel steps register at full strength.
fn flow_jacobian(flow: &FlowField) -> Plane {
    let up = flow.u_plane();
    let vp = flow.v_plane();
    let ux = up.dx();
    let uy = up.dy();
    let vx = vp.dx();
    let vy = vp.dy();
    let (w, h) = (flow.width(), flow.height());
    let mut out = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let central = ux.data[i] * ux.data[i]
                + uy.data[i] * uy.data[i]
                + vx.data[i] * vx.data[i]
                + vy.data[i] * vy.data[i];
            let (xi, yi) = (x as isize, y as isize);
            let fdx_u = up.at_clamped(xi + 1, yi) - up.data[i];
            let fdy_u = up.at_clamped(xi, yi + 1) - up.data[i];
            let fdx_v = vp.at_clamped(xi + 1, yi) - vp.data[i];
            let fdy_v = vp.at_clamped(xi, yi + 1) - vp.data[i];
            let forward = fdx_u * fdx_u + fdy_u * fdy_u + fdx_v * fdx_v + fdy_v * fdy_v;
            out.data[i] = central.max(forward).sqrt();
        }
    }
    out
}

/// Color gradient magnitude of the guide (all channels pooled).
fn guide_gradient(guide: &Image) -> Plane {
    let (w, h) = (guide.width(), guide.height());
    let mut acc = Plane::new(w, h);
    for c in 0..guide.channels() {
        let mut chan = Plane::new(w, h);
        for i in 0..w * h {
            chan.data[i] = guide.data()[i * guide.channels() + c] as f64;
        }
        let gx = chan.dx();
        let gy = chan.dy();
        for i in 0..w * h {
            acc.data[i] += gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i];
        }
    }
    for v in &mut acc.data {
        *v = v.sqrt();
    }
    acc
}

/// Morphological closing (dilate then erode) with a Chebyshev-disc
/// structuring element of the given radius.
fn close_boolean(mask: &[bool], w: usize, h: usize, radius: isize) -> Vec<bool> {
    let pass = |src: &[bool], grow: bool| -> Vec<bool> {
        let mut dst = vec![false; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut hit = !grow;
                'scan: for dy in -radius..=radius {
                    for dx in -radius..=radius {
                        let nx = x + dx;
                        let ny = y + dy;
                        let v = if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            false
                        } else {
                            src[ny as usize * w + nx as usize]
                        };
                        if grow && v {
                            hit = true;
                            break 'scan;
                        }
                        if !grow && !v {
                            hit = false;
                            break 'scan;
                        }
                    }
                }
                dst[(y * w as isize + x) as usize] = hit;
            }
        }
        dst
    };
    let dilated = pass(mask, true);
    pass(&dilated, false)
}

/// Otsu threshold over a 256-bin histogram of the plane's values.
fn otsu_threshold(p: &Plane) -> f64 {
    let (_, hi) = p.min_max();
    if hi <= 0.0 {
        return 0.0;
    }
    const BINS: usize = 256;
    let mut hist = [0usize; BINS];
    for &v in &p.data {
        let b = ((v / hi) * (BINS - 1) as f64).round() as usize;
        hist[b.min(BINS - 1)] += 1;
    }
    let total = p.data.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    let mut best_var = -1.0;
    let mut best_bin = 0usize;
    for (bin, &count) in hist.iter().enumerate() {
        w0 += count as f64;
        if w0 == 0.0 {
            continue;
        }
        let w1 = total - w0;
        if w1 == 0.0 {
            break;
        }
        sum0 += bin as f64 * count as f64;
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best_var {
            best_var = between;
            best_bin = bin;
        }
    }
    (best_bin as f64 / (BINS - 1) as f64) * hi
}

/// Splits the flow into regions along motion boundaries.
///
/// A pixel is a boundary when its flow-Jacobian norm exceeds the
/// threshold outright, or exceeds half of it while the guide shows an
/// edge (gradient above its Otsu threshold). Remaining pixels are
/// grouped by 4-connectivity; undersized components are absorbed by the
/// neighbor with the closest mean flow.
pub fn partition_regions(
    flow: &FlowField,
    guide: &Image,
    params: &RegionalParams,
) -> Result<RegionMap> {
    params.validate()?;
    if guide.width() != flow.width() || guide.height() != flow.height() {
        return Err(Error::contract("partition_regions: guide/flow size mismatch"));
    }
    let (w, h) = (flow.width(), flow.height());
    let jac = flow_jacobian(flow);
    // single-pixel dips along a discontinuity ridge would let the flood
    // fill leak through; take the pointwise max with a blurred copy so
    // the cut curves stay closed
    let jac_blur = jac.gaussian_blur(1.0);
    let gg = guide_gradient(guide);
    let g_thr = otsu_threshold(&gg);

    let mut boundary = vec![false; w * h];
    for i in 0..w * h {
        let j = jac.data[i].max(jac_blur.data[i]);
        boundary[i] = j > params.boundary_threshold
            || (j > 0.5 * params.boundary_threshold && gg.data[i] > g_thr);
    }

    // morphological closing gated by image evidence: motion boundaries
    // smear out around object corners and can leave a few-pixel gap in
    // an otherwise closed curve; bridge such gaps only where the guide
    // itself shows an edge
    let closed = close_boolean(&boundary, w, h, 4);
    for i in 0..w * h {
        if closed[i] && gg.data[i] > g_thr {
            boundary[i] = true;
        }
    }

    // 4-connected components over non-boundary pixels, labeled in
    // row-major first-encounter order
    let mut ids = vec![0u32; w * h];
    let mut next = 1u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if boundary[start] || ids[start] != 0 {
            continue;
        }
        let id = next;
        next += 1;
        ids[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !boundary[j] && ids[j] == 0 {
                    ids[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }

    let mut map = RegionMap {
        width: w,
        height: h,
        region_id: ids,
        region_count: next as usize,
    };

    // absorb undersized components into their closest-flow neighbor
    let min_area = (params.min_region_area * (w * h) as f64).ceil() as usize;
    loop {
        let stats = RegionStats::collect(&map, flow);
        let mut small: Vec<u32> = stats
            .ids()
            .filter(|&id| stats.area(id) < min_area)
            .collect();
        if small.is_empty() || small.len() == stats.ids().count() {
            break;
        }
        small.sort_by_key(|&id| (stats.area(id), id));
        let victim = small[0];
        let target = stats
            .closest_neighbor(victim, |cand| stats.area(cand) >= min_area)
            .or_else(|| stats.closest_any(victim, |cand| stats.area(cand) >= min_area));
        match target {
            Some(t) => {
                for id in map.region_id.iter_mut() {
                    if *id == victim {
                        *id = t;
                    }
                }
            }
            None => break,
        }
    }
    map.relabel();
    Ok(map)
}

/// Per-region areas, mean flows and the (dilated) adjacency relation.
struct RegionStats {
    area: Vec<usize>,
    mean: Vec<(f64, f64)>,
    adjacent: Vec<Vec<bool>>,
    count: usize,
}

impl RegionStats {
    fn collect(map: &RegionMap, flow: &FlowField) -> Self {
        let count = map.region_count;
        let (w, h) = (map.width, map.height);
        let mut area = vec![0usize; count];
        let mut sum = vec![(0.0f64, 0.0f64); count];
        let mut adjacent = vec![vec![false; count]; count];
        for y in 0..h {
            for x in 0..w {
                let id = map.get(x, y) as usize;
                area[id] += 1;
                let (u, v) = flow.get(x, y);
                sum[id].0 += u as f64;
                sum[id].1 += v as f64;
                // regions separated by thin boundary curves still count
                // as neighbors: central-difference cuts are two pixels
                // wide, so look within Chebyshev distance 3
                for dy in 0isize..=3 {
                    for dx in -3isize..=3 {
                        if dy == 0 && dx <= 0 {
                            continue;
                        }
                        let nx = x as isize + dx;
                        let ny = y as isize + dy;
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let other = map.get(nx as usize, ny as usize) as usize;
                        if other != id && other != 0 && id != 0 {
                            adjacent[id][other] = true;
                            adjacent[other][id] = true;
                        }
                    }
                }
            }
        }
        let mean = sum
            .iter()
            .zip(&area)
            .map(|(&(su, sv), &a)| {
                if a > 0 {
                    (su / a as f64, sv / a as f64)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();
        RegionStats {
            area,
            mean,
            adjacent,
            count,
        }
    }

    fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        (1..self.count as u32).filter(|&id| self.area[id as usize] > 0)
    }

    fn area(&self, id: u32) -> usize {
        self.area[id as usize]
    }

    fn mean(&self, id: u32) -> (f64, f64) {
        self.mean[id as usize]
    }

    fn flow_distance(&self, a: u32, b: u32) -> f64 {
        let (ua, va) = self.mean(a);
        let (ub, vb) = self.mean(b);
        ((ua - ub).powi(2) + (va - vb).powi(2)).sqrt()
    }

    /// Closest-mean-flow region adjacent to `id` satisfying `accept`.
    fn closest_neighbor(&self, id: u32, accept: impl Fn(u32) -> bool) -> Option<u32> {
        self.ids()
            .filter(|&o| o != id && self.adjacent[id as usize][o as usize] && accept(o))
            .min_by(|&a, &b| {
                self.flow_distance(id, a)
                    .partial_cmp(&self.flow_distance(id, b))
                    .unwrap()
                    .then(a.cmp(&b))
            })
    }

    /// Closest-mean-flow region anywhere (fallback when isolated).
    fn closest_any(&self, id: u32, accept: impl Fn(u32) -> bool) -> Option<u32> {
        self.ids()
            .filter(|&o| o != id && accept(o))
            .min_by(|&a, &b| {
                self.flow_distance(id, a)
                    .partial_cmp(&self.flow_distance(id, b))
                    .unwrap()
                    .then(a.cmp(&b))
            })
    }
}

/// Merges similar-flow neighbors (smallest distance first, means
/// recomputed after every merge), discards small flow-isolated outlier
/// regions, and caps the region count at `n_max - 1`.
pub fn merge_and_filter(
    regions: &RegionMap,
    flow: &FlowField,
    params: &RegionalParams,
) -> Result<RegionMap> {
    params.validate()?;
    if regions.width != flow.width() || regions.height != flow.height() {
        return Err(Error::contract("merge_and_filter: size mismatch"));
    }
    let mut map = regions.clone();

    let merge_into = |map: &mut RegionMap, from: u32, to: u32| {
        for id in map.region_id.iter_mut() {
            if *id == from {
                *id = to;
            }
        }
    };

    // similar-flow merge to fixpoint
    loop {
        let stats = RegionStats::collect(&map, flow);
        let mut best: Option<(f64, u32, u32)> = None;
        let ids: Vec<u32> = stats.ids().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(i + 1) {
                if !stats.adjacent[a as usize][b as usize] {
                    continue;
                }
                let d = stats.flow_distance(a, b);
                if d < params.merge_threshold {
                    let candidate = (d, a, b);
                    if best.map_or(true, |cur| {
                        candidate.0 < cur.0
                            || (candidate.0 == cur.0 && (candidate.1, candidate.2) < (cur.1, cur.2))
                    }) {
                        best = Some(candidate);
                    }
                }
            }
        }
        match best {
            Some((_, a, b)) => {
                // absorb the smaller region into the larger
                let (from, to) = if stats.area(a) >= stats.area(b) {
                    (b, a)
                } else {
                    (a, b)
                };
                merge_into(&mut map, from, to);
            }
            None => break,
        }
    }

    // outlier discard: small regions whose flow matches no neighbor
    {
        let stats = RegionStats::collect(&map, flow);
        let area_limit = (params.min_region_area * 4.0 * (map.width * map.height) as f64) as usize;
        let cutoff = params.outlier_factor * params.merge_threshold;
        let discard: Vec<u32> = stats
            .ids()
            .filter(|&id| {
                if stats.area(id) >= area_limit {
                    return false;
                }
                let closest = stats
                    .closest_neighbor(id, |_| true)
                    .map(|n| stats.flow_distance(id, n));
                match closest {
                    Some(d) => d > cutoff,
                    None => true, // isolated small region
                }
            })
            .collect();
        for id in discard {
            merge_into(&mut map, id, 0);
        }
    }

    // cap: keep the n_max - 1 largest, fold the rest into the closest kept
    loop {
        let stats = RegionStats::collect(&map, flow);
        let mut ids: Vec<u32> = stats.ids().collect();
        if ids.len() <= params.n_max.saturating_sub(1).max(1) {
            break;
        }
        ids.sort_by_key(|&id| (std::cmp::Reverse(stats.area(id)), id));
        let kept: Vec<u32> = ids[..params.n_max - 1].to_vec();
        let victim = *ids.last().unwrap();
        let is_kept = |id: u32| kept.contains(&id);
        let target = stats
            .closest_neighbor(victim, &is_kept)
            .or_else(|| stats.closest_any(victim, &is_kept));
        match target {
            Some(t) => merge_into(&mut map, victim, t),
            None => break,
        }
    }

    map.relabel();
    Ok(map)
}

/// Removes `radius` layers of pixels from the mask border (4-neighbor).
fn erode_mask(mask: &Mask, radius: usize) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let mut current = mask.clone();
    for _ in 0..radius {
        let mut next = current.clone();
        for y in 0..h {
            for x in 0..w {
                if current.get(x, y) == 0 {
                    continue;
                }
                let at_border = x == 0
                    || y == 0
                    || x + 1 == w
                    || y + 1 == h
                    || current.get(x - 1, y) == 0
                    || current.get(x + 1, y) == 0
                    || current.get(x, y - 1) == 0
                    || current.get(x, y + 1) == 0;
                if at_border {
                    next.set(x, y, 0);
                }
            }
        }
        current = next;
    }
    current
}

/// Pixels with enough pooled image gradient for the initial flow to be
/// trustworthy. Textureless areas are excluded from every support so
/// their values come from propagation instead of the unreliable solve.
///
/// Gradients are taken on a blurred copy of the guide: pixel noise has
/// no spatial structure and dies under the blur, while texture does not.
fn confidence_mask(guide: &Image) -> Mask {
    let (w, h) = (guide.width(), guide.height());
    let mut acc = Plane::new(w, h);
    for c in 0..guide.channels() {
        let mut chan = Plane::new(w, h);
        for i in 0..w * h {
            chan.data[i] = guide.data()[i * guide.channels() + c] as f64;
        }
        let smooth = chan.gaussian_blur(1.5);
        let gx = smooth.dx();
        let gy = smooth.dy();
        for i in 0..w * h {
            acc.data[i] += gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i];
        }
    }
    for v in &mut acc.data {
        *v = v.sqrt();
    }
    let pooled = acc.gaussian_blur(2.0);
    let mean = pooled.data.iter().sum::<f64>() / pooled.data.len() as f64;
    let threshold = (0.3 * mean).max(1e-4);
    let labels = pooled.data.iter().map(|&v| (v > threshold) as u8).collect();
    Mask::new(w, h, labels).expect("binary labels")
}

// Support pixels closer than this to a region border carry mixed-layer
// flow from the smoothed solve and the median window; propagation from
// the eroded interior is more accurate than keeping them.
const SUPPORT_ERODE_RADIUS: usize = 4;

/// Runs the full regional-correspondence construction: initial flow,
/// weighted median refinement, partitioning, merging, propagation of
/// each surviving region and optional sub-pixel refinement.
pub fn build_regional_set(
    i1: &Image,
    i2: &Image,
    params: &RegionalParams,
    hs: &HsParams,
    wmf: &WmfParams,
) -> Result<(RegionalCorrespondenceSet, FlowField, RegionMap)> {
    params.validate()?;
    let raw = horn_schunck(i1, i2, hs)?;
    let flow = weighted_median_refine(&raw, i1, wmf)?;
    let partitioned = partition_regions(&flow, i1, params)?;
    let merged = merge_and_filter(&partitioned, &flow, params)?;

    // erode the confidence mask too: pixels bordering a textureless area
    // have median windows and smoothness fill contaminated by it
    let confident = erode_mask(&confidence_mask(i1), SUPPORT_ERODE_RADIUS);
    let mut supports: Vec<Mask> = (1..merged.region_count as u32)
        .map(|id| {
            let region = merged.mask_of(id);
            let eroded = erode_mask(&region, SUPPORT_ERODE_RADIUS);
            let gated_labels: Vec<u8> = eroded
                .labels()
                .iter()
                .zip(confident.labels())
                .map(|(&a, &b)| a & b)
                .collect();
            let gated =
                Mask::new(region.width(), region.height(), gated_labels).expect("binary labels");
            // degenerate regions keep their raw mask rather than vanish
            if gated.count_ones() > 0 {
                gated
            } else if eroded.count_ones() > 0 {
                eroded
            } else {
                region
            }
        })
        .filter(|m| m.count_ones() > 0)
        .collect();
    if supports.is_empty() {
        // degenerate partition: fall back to one full-frame candidate
        supports.push(Mask::filled(flow.width(), flow.height(), 1));
    }

    let maps: Result<Vec<FlowField>> = supports
        .par_iter()
        .map(|support| {
            let propagated = propagate_region(&flow, support)?;
            if params.refine_subpixel {
                refine_subpixel(&propagated, i1, i2)
            } else {
                Ok(propagated)
            }
        })
        .collect();

    Ok((
        RegionalCorrespondenceSet {
            maps: maps?,
            supports,
        },
        flow,
        merged,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_guide(w: usize, h: usize) -> Image {
        Image::constant(w, h, 1, 0.5)
    }

    #[test]
    fn single_discontinuity_gives_two_regions() {
        let (w, h) = (64, 32);
        let mut flow = FlowField::zeros(w, h);
        for y in 0..h {
            for x in w / 2..w {
                flow.set(x, y, 6.0, 0.0);
            }
        }
        let map = partition_regions(&flow, &uniform_guide(w, h), &RegionalParams::default())
            .unwrap();
        assert_eq!(map.region_count(), 3, "expected 2 regions plus id 0");
        // the two regions live on opposite sides of the cut
        assert_eq!(map.get(2, 10), map.get(10, 20));
        assert_ne!(map.get(2, 10), map.get(w - 3, 20));
    }

    #[test]
    fn constant_flow_is_one_region() {
        let flow = FlowField::constant(40, 30, 1.0, -2.0);
        let map = partition_regions(&flow, &uniform_guide(40, 30), &RegionalParams::default())
            .unwrap();
        assert_eq!(map.region_count(), 2);
        assert_eq!(map.area_of(1), 40 * 30);
    }

    #[test]
    fn three_noisy_bands_recovered_with_high_purity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let (w, h) = (60, 60);
        let bands = [(0.0f32, 0.0f32), (5.0, 0.0), (0.0, 4.0)];
        let mut flow = FlowField::zeros(w, h);
        let mut gt = vec![0usize; w * h];
        for y in 0..h {
            let band = (y * 3 / h).min(2);
            for x in 0..w {
                gt[y * w + x] = band;
                flow.set(
                    x,
                    y,
                    bands[band].0 + rng.random_range(-0.25f32..0.25),
                    bands[band].1 + rng.random_range(-0.25f32..0.25),
                );
            }
        }
        let map = partition_regions(&flow, &uniform_guide(w, h), &RegionalParams::default())
            .unwrap();
        assert_eq!(map.region_count(), 4, "expected 3 regions plus id 0");
        for id in 1..4u32 {
            // purity against the generating bands
            let mut counts = [0usize; 3];
            let mut total = 0usize;
            for i in 0..w * h {
                if map.ids()[i] == id {
                    counts[gt[i]] += 1;
                    total += 1;
                }
            }
            let purity = *counts.iter().max().unwrap() as f64 / total as f64;
            assert!(purity >= 0.9, "region {id} purity {purity}");
        }
    }

    #[test]
    fn close_means_merge_into_one_region() {
        let (w, h) = (40, 20);
        let mut flow = FlowField::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let u = if x < w / 2 { 2.0 } else { 2.5 };
                flow.set(x, y, u, 0.0);
            }
        }
        // partition with a tiny threshold so the 0.5 px step splits
        let strict = RegionalParams {
            boundary_threshold: 0.2,
            ..Default::default()
        };
        let map = partition_regions(&flow, &uniform_guide(w, h), &strict).unwrap();
        assert_eq!(map.region_count(), 3);
        let merged = merge_and_filter(&map, &flow, &RegionalParams::default()).unwrap();
        assert_eq!(merged.region_count(), 2, "means 0.5 px apart must merge");
    }

    #[test]
    fn tiny_flow_isolated_region_is_discarded() {
        let (w, h) = (50, 50);
        let mut flow = FlowField::zeros(w, h);
        // a 2x1 blob (0.08% of frame) with wildly different flow
        flow.set(25, 25, 40.0, 40.0);
        flow.set(26, 25, 40.0, 40.0);
        let map = partition_regions(&flow, &uniform_guide(w, h), &RegionalParams::default())
            .unwrap();
        let merged = merge_and_filter(&map, &flow, &RegionalParams::default()).unwrap();
        // only the background region survives; the blob became id 0
        assert_eq!(merged.region_count(), 2);
        assert_eq!(merged.get(25, 25), 0);
    }

    #[test]
    fn twelve_distinct_bands_cap_at_nine_regions() {
        let (w, h) = (48, 48);
        let mut flow = FlowField::zeros(w, h);
        for y in 0..h {
            let band = (y / 4).min(11); // 12 bands of 4 rows
            for x in 0..w {
                flow.set(x, y, 3.0 * band as f32, 0.0);
            }
        }
        let map = partition_regions(&flow, &uniform_guide(w, h), &RegionalParams::default())
            .unwrap();
        assert_eq!(map.region_count(), 13, "12 bands plus id 0");
        let merged = merge_and_filter(&map, &flow, &RegionalParams::default()).unwrap();
        assert_eq!(
            merged.region_count(),
            10,
            "expected exactly 9 surviving region ids"
        );
    }

    #[test]
    fn relabeled_ids_are_contiguous() {
        let (w, h) = (30, 30);
        let mut flow = FlowField::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                flow.set(x, y, (x / 10) as f32 * 8.0, 0.0);
            }
        }
        let map = partition_regions(&flow, &uniform_guide(w, h), &RegionalParams::default())
            .unwrap();
        let merged = merge_and_filter(&map, &flow, &RegionalParams::default()).unwrap();
        let max_id = *merged.ids().iter().max().unwrap() as usize;
        assert_eq!(max_id + 1, merged.region_count());
        for id in 1..merged.region_count() as u32 {
            assert!(merged.area_of(id) > 0, "id {id} is empty");
        }
    }
}
