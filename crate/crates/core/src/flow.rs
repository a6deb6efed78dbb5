//! Dense displacement fields. `w_p = (u, v)` maps pixel `p` of the
//! reference image to `p + w_p` in the input image; +u points right,
//! +v points down, matching the .flo convention.

use crate::error::{Error, Result};
use crate::plane::Plane;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::contract("flow component length mismatch"));
        }
        if !u.iter().chain(v.iter()).all(|x| x.is_finite()) {
            return Err(Error::contract("flow contains non-finite values"));
        }
        Ok(FlowField {
            width,
            height,
            u,
            v,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        FlowField {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
        }
    }

    pub fn from_planes(u: &Plane, v: &Plane) -> Result<Self> {
        if u.width != v.width || u.height != v.height {
            return Err(Error::contract("flow planes differ in size"));
        }
        FlowField::new(
            u.width,
            u.height,
            u.data.iter().map(|&x| x as f32).collect(),
            v.data.iter().map(|&x| x as f32).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, u: f32, v: f32) {
        let i = y * self.width + x;
        self.u[i] = u;
        self.v[i] = v;
    }

    pub fn u_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.u.iter().map(|&x| x as f64).collect(),
        }
    }

    pub fn v_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.v.iter().map(|&x| x as f64).collect(),
        }
    }

    /// Largest displacement magnitude in the field.
    pub fn max_magnitude(&self) -> f64 {
        self.u
            .iter()
            .zip(self.v.iter())
            .map(|(&u, &v)| ((u as f64).powi(2) + (v as f64).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        assert!(FlowField::new(1, 1, vec![f32::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn plane_round_trip() {
        let f = FlowField::constant(3, 2, 1.5, -2.0);
        let g = FlowField::from_planes(&f.u_plane(), &f.v_plane()).unwrap();
        assert_eq!(f, g);
    }
}
