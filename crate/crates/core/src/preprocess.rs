//! Feature standardization and uniform temporal segmentation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sequence::SegmentSequence;
use crate::util::sqrt;

/// Floor applied to per-dimension standard deviations before dividing, so
/// the transform stays an invertible affine map.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension affine standardization for segment and global features,
/// fitted on a training split only.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub segment_mean: Vec<f64>,
    pub segment_std: Vec<f64>,
    pub global_mean: Vec<f64>,
    pub global_std: Vec<f64>,
}

impl Standardizer {
    /// Fits population means and standard deviations (floored at
    /// [`STD_FLOOR`]) over every segment vector and every global vector
    /// of the split.
    pub fn fit(train: &[SegmentSequence]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput {
                what: "train split",
            });
        }
        let dim = train[0]
            .segments
            .first()
            .ok_or(Error::EmptyInput {
                what: "sequence segments",
            })?
            .len();
        let dim_global = train[0].global.len();
        let (segment_mean, segment_std) =
            moments(train.iter().flat_map(|s| s.segments.iter()), dim)?;
        let (global_mean, global_std) = moments(train.iter().map(|s| &s.global), dim_global)?;
        Ok(Self {
            segment_mean,
            segment_std,
            global_mean,
            global_std,
        })
    }

    /// Standardizes one sequence, leaving ids and labels untouched.
    pub fn apply(&self, seq: &SegmentSequence) -> Result<SegmentSequence> {
        let mut out = seq.clone();
        for segment in &mut out.segments {
            transform(segment, &self.segment_mean, &self.segment_std)?;
        }
        transform(&mut out.global, &self.global_mean, &self.global_std)?;
        Ok(out)
    }

    pub fn apply_all(&self, seqs: &[SegmentSequence]) -> Result<Vec<SegmentSequence>> {
        seqs.iter().map(|s| self.apply(s)).collect()
    }
}

fn moments<'a, I>(vectors: I, dim: usize) -> Result<(Vec<f64>, Vec<f64>)>
where
    I: Iterator<Item = &'a Vec<f64>> + Clone,
{
    let mut mean = vec![0.0; dim];
    let mut count = 0usize;
    for v in vectors.clone() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: dim,
                actual: v.len(),
            });
        }
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
        count += 1;
    }
    let n = count as f64;
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for v in vectors {
        for ((acc, x), m) in var.iter_mut().zip(v).zip(&mean) {
            let d = x - m;
            *acc += d * d;
        }
    }
    let std = var.iter().map(|&s| sqrt(s / n).max(STD_FLOOR)).collect();
    Ok((mean, std))
}

fn transform(v: &mut [f64], mean: &[f64], std: &[f64]) -> Result<()> {
    if v.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            what: "feature vector",
            expected: mean.len(),
            actual: v.len(),
        });
    }
    for ((x, m), s) in v.iter_mut().zip(mean).zip(std) {
        *x = (*x - m) / s;
    }
    Ok(())
}

/// Splits `frames` into contiguous non-overlapping windows of `seg_len`
/// frames (the last window may be shorter) and summarizes each window by
/// its per-dimension mean. Produces `ceil(T / seg_len)` segments.
pub fn uniform_segmentation(frames: &[Vec<f64>], seg_len: usize) -> Vec<Vec<f64>> {
    assert!(seg_len >= 1, "seg_len must be >= 1");
    frames
        .chunks(seg_len)
        .map(|chunk| {
            let dim = chunk[0].len();
            let mut mean = vec![0.0; dim];
            for frame in chunk {
                for (m, x) in mean.iter_mut().zip(frame) {
                    *m += x;
                }
            }
            let n = chunk.len() as f64;
            for m in mean.iter_mut() {
                *m /= n;
            }
            mean
        })
        .collect()
}
