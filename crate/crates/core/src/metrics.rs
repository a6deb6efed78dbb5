//! Flow and segmentation accuracy metrics: average endpoint error,
//! average angular error, and intersection-over-union.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Mask;

fn check_valid<'a>(
    flow: &FlowField,
    gt: &FlowField,
    valid: Option<&'a Mask>,
) -> Result<Option<&'a Mask>> {
    if flow.width() != gt.width() || flow.height() != gt.height() {
        return Err(Error::contract("flow and ground truth differ in size"));
    }
    if let Some(m) = valid {
        if m.width() != flow.width() || m.height() != flow.height() {
            return Err(Error::contract("valid mask differs in size"));
        }
        if m.count_ones() == 0 {
            return Err(Error::contract("valid mask is empty"));
        }
    }
    Ok(valid)
}

/// Average endpoint error in pixels over the valid set.
pub fn aepe(flow: &FlowField, gt: &FlowField, valid: Option<&Mask>) -> Result<f64> {
    let valid = check_valid(flow, gt, valid)?;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for i in 0..flow.width() * flow.height() {
        if let Some(m) = valid {
            if m.labels()[i] == 0 {
                continue;
            }
        }
        let du = flow.u()[i] as f64 - gt.u()[i] as f64;
        let dv = flow.v()[i] as f64 - gt.v()[i] as f64;
        sum += (du * du + dv * dv).sqrt();
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Average angular error in degrees between (u, v, 1) direction vectors.
pub fn aae(flow: &FlowField, gt: &FlowField, valid: Option<&Mask>) -> Result<f64> {
    let valid = check_valid(flow, gt, valid)?;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for i in 0..flow.width() * flow.height() {
        if let Some(m) = valid {
            if m.labels()[i] == 0 {
                continue;
            }
        }
        let (u, v) = (flow.u()[i] as f64, flow.v()[i] as f64);
        let (ug, vg) = (gt.u()[i] as f64, gt.v()[i] as f64);
        let num = u * ug + v * vg + 1.0;
        let den = (u * u + v * v + 1.0).sqrt() * (ug * ug + vg * vg + 1.0).sqrt();
        sum += (num / den).clamp(-1.0, 1.0).acos().to_degrees();
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Intersection-over-union of the foreground label; 1 when both are empty.
pub fn iou(mask: &Mask, gt: &Mask) -> Result<f64> {
    if mask.width() != gt.width() || mask.height() != gt.height() {
        return Err(Error::contract("masks differ in size"));
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&a, &b) in mask.labels().iter().zip(gt.labels()) {
        if a == 1 && b == 1 {
            inter += 1;
        }
        if a == 1 || b == 1 {
            union += 1;
        }
    }
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Mask {
        let mut labels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                labels.push(f(x, y));
            }
        }
        Mask::new(w, h, labels).unwrap()
    }

    #[test]
    fn aepe_zero_on_identical() {
        let f = FlowField::constant(4, 4, 2.0, -1.0);
        assert_eq!(aepe(&f, &f, None).unwrap(), 0.0);
    }

    #[test]
    fn aepe_three_four_five() {
        let gt = FlowField::constant(5, 5, 1.0, 1.0);
        let f = FlowField::constant(5, 5, 4.0, 5.0);
        assert!((aepe(&f, &gt, None).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn aepe_half_offset_mean() {
        let w = 4;
        let gt = FlowField::zeros(w, 2);
        let mut f = FlowField::zeros(w, 2);
        for x in 0..w {
            f.set(x, 0, 1.0, 0.0); // top row offset by (1,0), bottom exact
        }
        assert!((aepe(&f, &gt, None).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aepe_empty_valid_set_is_contract_error() {
        let f = FlowField::zeros(2, 2);
        let empty = Mask::filled(2, 2, 0);
        assert!(aepe(&f, &f, Some(&empty)).is_err());
    }

    #[test]
    fn aae_zero_on_identical_including_zero_flow() {
        let f = FlowField::zeros(3, 3);
        assert_eq!(aae(&f, &f, None).unwrap(), 0.0);
        let g = FlowField::constant(3, 3, 2.0, 3.0);
        assert!(aae(&g, &g, None).unwrap().abs() < 1e-9);
    }

    #[test]
    fn aae_orthogonal_unit_vectors_sixty_degrees() {
        let f = FlowField::constant(3, 3, 1.0, 0.0);
        let gt = FlowField::constant(3, 3, 0.0, 1.0);
        // (1*0 + 0*1 + 1) / (sqrt(2)*sqrt(2)) = 1/2
        assert!((aae(&f, &gt, None).unwrap() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn iou_identical_disjoint_half() {
        let a = mask_from(4, 4, |x, _| (x < 2) as u8);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let b = mask_from(4, 4, |x, _| (x >= 2) as u8);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
        let full = Mask::filled(4, 4, 1);
        assert_eq!(iou(&a, &full).unwrap(), 0.5);
    }

    #[test]
    fn iou_empty_masks_is_one_and_symmetric() {
        let e = Mask::filled(3, 3, 0);
        assert_eq!(iou(&e, &e).unwrap(), 1.0);
        let a = mask_from(3, 3, |x, y| (x == y) as u8);
        assert_eq!(iou(&a, &e).unwrap(), iou(&e, &a).unwrap());
    }
}
