//! Trainable parameters of a set of surfels.
//!
//! Parameters are stored unconstrained: rotation as a quaternion that is
//! normalized on use, scales as logarithms, opacity as a logit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_from_quaternion, SplatGeometry, Vec3};
use crate::sh::{ShCoeffs, MAX_SH_DEGREE};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplatModel {
    pub centers: Vec<[f64; 3]>,
    /// Unnormalized `(w, x, y, z)` quaternions.
    pub rotations: Vec<[f64; 4]>,
    pub log_scales: Vec<[f64; 2]>,
    pub opacity_logits: Vec<f64>,
    pub sh: Vec<ShCoeffs>,
    /// Highest degree the model may use.
    pub sh_degree: usize,
    /// Degree currently evaluated when rendering (≤ `sh_degree`).
    pub active_sh_degree: usize,
}

impl SplatModel {
    pub fn new(sh_degree: usize) -> Self {
        Self { sh_degree: sh_degree.min(MAX_SH_DEGREE), ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn push(&mut self, center: Vec3, rotation: [f64; 4], scales: [f64; 2], opacity: f64, sh: ShCoeffs) {
        self.centers.push([center.x, center.y, center.z]);
        self.rotations.push(rotation);
        self.log_scales.push([scales[0].ln(), scales[1].ln()]);
        self.opacity_logits.push(logit(opacity));
        self.sh.push(sh);
    }

    pub fn center(&self, i: usize) -> Vec3 {
        Vec3::from(self.centers[i])
    }

    pub fn scales(&self, i: usize) -> [f64; 2] {
        [self.log_scales[i][0].exp(), self.log_scales[i][1].exp()]
    }

    pub fn opacity(&self, i: usize) -> f64 {
        sigmoid(self.opacity_logits[i])
    }

    pub fn geometry(&self, i: usize) -> SplatGeometry {
        let [su, sv] = self.scales(i);
        SplatGeometry::from_quaternion(self.center(i), self.rotations[i], su, sv)
    }

    /// Surfel normal `t_u × t_v` (third column of the rotation).
    pub fn normal(&self, i: usize) -> Vec3 {
        rotation_from_quaternion(self.rotations[i]).column(2).into_owned()
    }

    /// Checks array lengths and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.centers.len();
        if self.rotations.len() != n || self.log_scales.len() != n || self.opacity_logits.len() != n || self.sh.len() != n {
            return Err(Error::DimensionMismatch("model arrays have different lengths".into()));
        }
        if self.sh_degree > MAX_SH_DEGREE || self.active_sh_degree > self.sh_degree {
            return Err(Error::InvalidGeometry(format!(
                "invalid SH degree {} (active {})",
                self.sh_degree, self.active_sh_degree
            )));
        }
        let finite = self.centers.iter().flatten().all(|v| v.is_finite())
            && self.rotations.iter().flatten().all(|v| v.is_finite())
            && self.log_scales.iter().flatten().all(|v| v.is_finite())
            && self.opacity_logits.iter().all(|v| v.is_finite())
            && self.sh.iter().flatten().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameters".into()));
        }
        if self.rotations.iter().any(|q| q.iter().map(|v| v * v).sum::<f64>() < 1e-24) {
            return Err(Error::InvalidGeometry("zero quaternion".into()));
        }
        Ok(())
    }

    /// Normalizes every quaternion in place.
    pub fn normalize_rotations(&mut self) {
        for q in &mut self.rotations {
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in q.iter_mut() {
                *v /= n;
            }
        }
    }

    /// Keeps the primitives for which `keep` is true.
    pub fn retain(&mut self, keep: &[bool]) {
        fn filter<T: Copy>(v: &mut Vec<T>, keep: &[bool]) {
            let mut i = 0;
            v.retain(|_| {
                let k = keep[i];
                i += 1;
                k
            });
        }
        filter(&mut self.centers, keep);
        filter(&mut self.rotations, keep);
        filter(&mut self.log_scales, keep);
        filter(&mut self.opacity_logits, keep);
        filter(&mut self.sh, keep);
    }

    /// Appends a copy of primitive `i`.
    pub fn duplicate(&mut self, i: usize) {
        self.centers.push(self.centers[i]);
        self.rotations.push(self.rotations[i]);
        self.log_scales.push(self.log_scales[i]);
        self.opacity_logits.push(self.opacity_logits[i]);
        self.sh.push(self.sh[i]);
    }
}
