//! Parameter storage with a frozen flattening order.
//!
//! The five blocks flatten into one vector in this fixed layout, so
//! serialized models stay portable:
//!
//! 1. `w1[y][z][d]` — observation weights, action-major, then latent,
//!    then feature index;
//! 2. `w2[y][z]` — action-latent bias;
//! 3. `w3[y_prev][z_prev][y][z]` — joint-state transition, source-major;
//! 4. `w4[y_prev][y][a]` — action-pair/activity compatibility,
//!    previous-action-major;
//! 5. `w5[a][d0]` — activity/global-feature weights, activity-major.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::space::LabelSpace;
use crate::util::dot;

/// The five parameter blocks of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPack {
    space: LabelSpace,
    w1: Vec<f64>,
    w2: Vec<f64>,
    w3: Vec<f64>,
    w4: Vec<f64>,
    w5: Vec<f64>,
}

impl WeightPack {
    pub fn zeros(space: LabelSpace) -> Self {
        let s = space.n_joint();
        Self {
            space,
            w1: vec![0.0; s * space.dim_segment],
            w2: vec![0.0; s],
            w3: vec![0.0; s * s],
            w4: vec![0.0; space.n_actions * space.n_actions * space.n_activities],
            w5: vec![0.0; space.n_activities * space.dim_global],
        }
    }

    #[inline]
    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    /// Observation weight row for the product state `(y, z)`, length `D`.
    #[inline]
    pub fn w1_row(&self, y: usize, z: usize) -> &[f64] {
        let d = self.space.dim_segment;
        let start = self.space.joint_index(y, z) * d;
        &self.w1[start..start + d]
    }

    #[inline]
    pub fn w1_row_mut(&mut self, y: usize, z: usize) -> &mut [f64] {
        let d = self.space.dim_segment;
        let start = self.space.joint_index(y, z) * d;
        &mut self.w1[start..start + d]
    }

    /// Bias of the product state `(y, z)`.
    #[inline]
    pub fn w2(&self, y: usize, z: usize) -> f64 {
        self.w2[self.space.joint_index(y, z)]
    }

    #[inline]
    pub fn w2_mut(&mut self, y: usize, z: usize) -> &mut f64 {
        &mut self.w2[self.space.joint_index(y, z)]
    }

    /// Transition weight from `(y_prev, z_prev)` to `(y, z)`.
    #[inline]
    pub fn w3(&self, y_prev: usize, z_prev: usize, y: usize, z: usize) -> f64 {
        self.w3[self.w3_index(y_prev, z_prev, y, z)]
    }

    #[inline]
    pub fn w3_mut(&mut self, y_prev: usize, z_prev: usize, y: usize, z: usize) -> &mut f64 {
        let i = self.w3_index(y_prev, z_prev, y, z);
        &mut self.w3[i]
    }

    #[inline]
    fn w3_index(&self, y_prev: usize, z_prev: usize, y: usize, z: usize) -> usize {
        self.space.joint_index(y_prev, z_prev) * self.space.n_joint() + self.space.joint_index(y, z)
    }

    /// Transition row out of source state `(y_prev, z_prev)`, indexed by
    /// the target product-state index.
    #[inline]
    pub fn w3_row(&self, y_prev: usize, z_prev: usize) -> &[f64] {
        let s = self.space.n_joint();
        let start = self.space.joint_index(y_prev, z_prev) * s;
        &self.w3[start..start + s]
    }

    /// Compatibility of the action transition `(y_prev -> y)` with
    /// activity `a`.
    #[inline]
    pub fn w4(&self, y_prev: usize, y: usize, a: usize) -> f64 {
        self.w4[(y_prev * self.space.n_actions + y) * self.space.n_activities + a]
    }

    #[inline]
    pub fn w4_mut(&mut self, y_prev: usize, y: usize, a: usize) -> &mut f64 {
        let i = (y_prev * self.space.n_actions + y) * self.space.n_activities + a;
        &mut self.w4[i]
    }

    /// Global-feature weight row for activity `a`, length `D0`.
    #[inline]
    pub fn w5_row(&self, a: usize) -> &[f64] {
        let d0 = self.space.dim_global;
        &self.w5[a * d0..(a + 1) * d0]
    }

    #[inline]
    pub fn w5_row_mut(&mut self, a: usize) -> &mut [f64] {
        let d0 = self.space.dim_global;
        &mut self.w5[a * d0..(a + 1) * d0]
    }

    /// Concatenates the five blocks in the frozen order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.space.total_dim());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.w3);
        out.extend_from_slice(&self.w4);
        out.extend_from_slice(&self.w5);
        out
    }

    /// Rebuilds a pack from a flattened vector. The inverse of
    /// [`flatten`](Self::flatten): round-trips are exact.
    pub fn unflatten(space: LabelSpace, v: &[f64]) -> Result<Self> {
        space.validate()?;
        if v.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                what: "flattened weight vector",
                expected: space.total_dim(),
                actual: v.len(),
            });
        }
        if !crate::util::all_finite(v) {
            return Err(Error::NonFinite {
                what: "flattened weight vector",
            });
        }
        let (w1, rest) = v.split_at(space.w2_offset());
        let (w2, rest) = rest.split_at(space.w3_offset() - space.w2_offset());
        let (w3, rest) = rest.split_at(space.w4_offset() - space.w3_offset());
        let (w4, w5) = rest.split_at(space.w5_offset() - space.w4_offset());
        Ok(Self {
            space,
            w1: w1.to_vec(),
            w2: w2.to_vec(),
            w3: w3.to_vec(),
            w4: w4.to_vec(),
            w5: w5.to_vec(),
        })
    }

    /// Squared Euclidean norm over all five blocks.
    pub fn squared_norm(&self) -> f64 {
        [&self.w1, &self.w2, &self.w3, &self.w4, &self.w5]
            .iter()
            .map(|b| dot(b, b))
            .sum()
    }

    /// Per-block squared norms `(w1, w2, w3, w4, w5)`.
    pub fn block_squared_norms(&self) -> [f64; 5] {
        [
            dot(&self.w1, &self.w1),
            dot(&self.w2, &self.w2),
            dot(&self.w3, &self.w3),
            dot(&self.w4, &self.w4),
            dot(&self.w5, &self.w5),
        ]
    }
}
