//! The five additive potentials, the total score, and the joint feature
//! map that makes the score linear in the parameters.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sequence::SegmentSequence;
use crate::space::LabelSpace;
use crate::util::{axpy, dot};
use crate::weights::WeightPack;

/// A complete labeling of one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointAssignment {
    pub activity: usize,
    pub actions: Vec<usize>,
    pub latents: Vec<usize>,
}

impl JointAssignment {
    pub fn validate(&self, k: usize, space: &LabelSpace) -> Result<()> {
        if self.actions.len() != k {
            return Err(Error::LengthMismatch {
                what: "assignment actions",
                expected: k,
                actual: self.actions.len(),
            });
        }
        if self.latents.len() != k {
            return Err(Error::LengthMismatch {
                what: "assignment latents",
                expected: k,
                actual: self.latents.len(),
            });
        }
        if self.activity >= space.n_activities {
            return Err(Error::LabelOutOfRange {
                what: "activity",
                value: self.activity,
                limit: space.n_activities,
            });
        }
        for &y in &self.actions {
            if y >= space.n_actions {
                return Err(Error::LabelOutOfRange {
                    what: "action",
                    value: y,
                    limit: space.n_actions,
                });
            }
        }
        for &z in &self.latents {
            if z >= space.n_latent {
                return Err(Error::LabelOutOfRange {
                    what: "latent state",
                    value: z,
                    limit: space.n_latent,
                });
            }
        }
        Ok(())
    }
}

/// Observation score of labeling segment features `x` with `(y, z)`:
/// `w1(y,z) . x + w2(y,z)`.
#[inline]
pub fn score_node(w: &WeightPack, x: &[f64], y: usize, z: usize) -> f64 {
    dot(w.w1_row(y, z), x) + w.w2(y, z)
}

/// Transition score from `(y_prev, z_prev)` to `(y, z)` under activity
/// `a`: `w3(y_prev,z_prev,y,z) + w4(y_prev,y,a)`.
#[inline]
pub fn score_transition(
    w: &WeightPack,
    y_prev: usize,
    z_prev: usize,
    y: usize,
    z: usize,
    a: usize,
) -> f64 {
    w.w3(y_prev, z_prev, y, z) + w.w4(y_prev, y, a)
}

/// Compatibility of activity `a` with the global features:
/// `w5(a) . x0`.
#[inline]
pub fn score_global(w: &WeightPack, x0: &[f64], a: usize) -> f64 {
    dot(w.w5_row(a), x0)
}

/// Total score of a complete labeling: per-segment node scores, plus
/// transition scores between consecutive segments, plus the global term.
pub fn joint_score(w: &WeightPack, seq: &SegmentSequence, asg: &JointAssignment) -> Result<f64> {
    let space = w.space();
    check_dims(seq, space)?;
    asg.validate(seq.len(), space)?;
    let mut score = 0.0;
    for (k, x) in seq.segments.iter().enumerate() {
        score += score_node(w, x, asg.actions[k], asg.latents[k]);
    }
    for k in 1..seq.len() {
        score += score_transition(
            w,
            asg.actions[k - 1],
            asg.latents[k - 1],
            asg.actions[k],
            asg.latents[k],
            asg.activity,
        );
    }
    score += score_global(w, &seq.global, asg.activity);
    Ok(score)
}

/// Joint feature map `psi(x, assignment)`, laid out in the frozen weight
/// flattening order so that `flatten(w) . psi == joint_score(w, ...)`
/// for every `w`.
pub fn joint_feature_map(
    seq: &SegmentSequence,
    asg: &JointAssignment,
    space: &LabelSpace,
) -> Result<Vec<f64>> {
    check_dims(seq, space)?;
    asg.validate(seq.len(), space)?;
    let mut psi = vec![0.0; space.total_dim()];
    let d = space.dim_segment;
    let s = space.n_joint();
    for (k, x) in seq.segments.iter().enumerate() {
        let js = space.joint_index(asg.actions[k], asg.latents[k]);
        axpy(1.0, x, &mut psi[js * d..(js + 1) * d]);
        psi[space.w2_offset() + js] += 1.0;
    }
    for k in 1..seq.len() {
        let prev = space.joint_index(asg.actions[k - 1], asg.latents[k - 1]);
        let cur = space.joint_index(asg.actions[k], asg.latents[k]);
        psi[space.w3_offset() + prev * s + cur] += 1.0;
        psi[space.w4_offset()
            + (asg.actions[k - 1] * space.n_actions + asg.actions[k]) * space.n_activities
            + asg.activity] += 1.0;
    }
    let w5_start = space.w5_offset() + asg.activity * space.dim_global;
    axpy(
        1.0,
        &seq.global,
        &mut psi[w5_start..w5_start + space.dim_global],
    );
    Ok(psi)
}

fn check_dims(seq: &SegmentSequence, space: &LabelSpace) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptyInput {
            what: "sequence segments",
        });
    }
    for segment in &seq.segments {
        if segment.len() != space.dim_segment {
            return Err(Error::DimensionMismatch {
                what: "segment feature vector",
                expected: space.dim_segment,
                actual: segment.len(),
            });
        }
    }
    if seq.global.len() != space.dim_global {
        return Err(Error::DimensionMismatch {
            what: "global feature vector",
            expected: space.dim_global,
            actual: seq.global.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::LabelSpace;
    use alloc::string::ToString;

    fn seq(segments: Vec<Vec<f64>>, global: Vec<f64>) -> SegmentSequence {
        SegmentSequence {
            id: "t".to_string(),
            subject: "s".to_string(),
            activity: None,
            actions: None,
            segments,
            global,
        }
    }

    #[test]
    fn node_score_is_zero_under_zero_weights() {
        let space = LabelSpace::new(2, 2, 1, 3, 1).unwrap();
        let w = WeightPack::zeros(space);
        assert_eq!(score_node(&w, &[1.0, -2.0, 0.5], 1, 0), 0.0);
    }

    #[test]
    fn node_score_hand_example() {
        let space = LabelSpace::new(2, 1, 1, 2, 1).unwrap();
        let mut w = WeightPack::zeros(space);
        w.w1_row_mut(1, 0).copy_from_slice(&[1.0, -1.0]);
        *w.w2_mut(1, 0) = 0.5;
        let got = score_node(&w, &[2.0, 3.0], 1, 0);
        assert!((got - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn node_score_on_zero_features_is_the_bias() {
        let space = LabelSpace::new(2, 1, 1, 2, 1).unwrap();
        let mut w = WeightPack::zeros(space);
        w.w1_row_mut(0, 0).copy_from_slice(&[3.0, 4.0]);
        *w.w2_mut(0, 0) = -1.25;
        assert_eq!(score_node(&w, &[0.0, 0.0], 0, 0), -1.25);
    }

    #[test]
    fn transition_score_sums_two_table_entries() {
        let space = LabelSpace::new(2, 2, 2, 1, 1).unwrap();
        let mut w = WeightPack::zeros(space);
        *w.w3_mut(0, 1, 1, 0) = 1.25;
        *w.w4_mut(0, 1, 1) = -0.25;
        assert_eq!(score_transition(&w, 0, 1, 1, 0, 1), 1.0);
        // Changing the activity only changes the w4 contribution.
        assert_eq!(score_transition(&w, 0, 1, 1, 0, 0), 1.25);
    }

    #[test]
    fn global_score_scalar_case() {
        let space = LabelSpace::new(1, 1, 2, 1, 1).unwrap();
        let mut w = WeightPack::zeros(space);
        w.w5_row_mut(1).copy_from_slice(&[2.0]);
        assert_eq!(score_global(&w, &[3.0], 1), 6.0);
        assert_eq!(score_global(&w, &[0.0], 1), 0.0);
        assert_eq!(score_global(&w, &[0.0], 0), 0.0);
    }

    #[test]
    fn single_segment_score_has_no_transition_terms() {
        let space = LabelSpace::new(2, 2, 2, 2, 2).unwrap();
        let mut w = WeightPack::zeros(space);
        w.w1_row_mut(1, 1).copy_from_slice(&[1.0, 2.0]);
        *w.w2_mut(1, 1) = 0.5;
        // Transition tables are nonzero but must not contribute at K=1.
        *w.w3_mut(0, 0, 1, 1) = 99.0;
        *w.w4_mut(0, 1, 1) = 99.0;
        w.w5_row_mut(1).copy_from_slice(&[1.0, -1.0]);
        let s = seq(vec![vec![3.0, 1.0]], vec![2.0, 1.0]);
        let asg = JointAssignment {
            activity: 1,
            actions: vec![1],
            latents: vec![1],
        };
        let expect = (1.0 * 3.0 + 2.0 * 1.0 + 0.5) + (1.0 * 2.0 - 1.0 * 1.0);
        assert!((joint_score(&w, &s, &asg).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn feature_map_hand_trace_two_segments() {
        // Ny=2, Nz=1, NA=1, D=1, D0=1, K=2, actions (0, 1).
        let space = LabelSpace::new(2, 1, 1, 1, 1).unwrap();
        let s = seq(vec![vec![5.0], vec![-3.0]], vec![7.0]);
        let asg = JointAssignment {
            activity: 0,
            actions: vec![0, 1],
            latents: vec![0, 0],
        };
        let psi = joint_feature_map(&s, &asg, &space).unwrap();
        // w1 block: x1 in slot (0,0), x2 in slot (1,0).
        assert_eq!(&psi[0..2], &[5.0, -3.0]);
        // w2 block: one indicator per segment.
        assert_eq!(&psi[2..4], &[1.0, 1.0]);
        // w3 block: single transition (0,0) -> (1,0).
        assert_eq!(&psi[4..8], &[0.0, 1.0, 0.0, 0.0]);
        // w4 block: transition (0 -> 1) under activity 0.
        assert_eq!(&psi[8..12], &[0.0, 1.0, 0.0, 0.0]);
        // w5 block: x0 at the activity block.
        assert_eq!(&psi[12..13], &[7.0]);
    }

    #[test]
    fn feature_map_block_sums() {
        let space = LabelSpace::new(3, 2, 2, 2, 3).unwrap();
        let k = 4;
        let s = seq(
            (0..k).map(|i| vec![i as f64, -(i as f64)]).collect(),
            vec![1.0, 2.0, 3.0],
        );
        let asg = JointAssignment {
            activity: 1,
            actions: vec![0, 2, 2, 1],
            latents: vec![1, 0, 1, 1],
        };
        let psi = joint_feature_map(&s, &asg, &space).unwrap();
        let w2_sum: f64 = psi[space.w2_offset()..space.w3_offset()].iter().sum();
        let w3_sum: f64 = psi[space.w3_offset()..space.w4_offset()].iter().sum();
        let w4_sum: f64 = psi[space.w4_offset()..space.w5_offset()].iter().sum();
        assert_eq!(w2_sum, k as f64);
        assert_eq!(w3_sum, (k - 1) as f64);
        assert_eq!(w4_sum, (k - 1) as f64);
        // K=1 leaves the transition blocks empty.
        let s1 = seq(vec![vec![1.0, 1.0]], vec![0.0, 0.0, 0.0]);
        let asg1 = JointAssignment {
            activity: 0,
            actions: vec![2],
            latents: vec![0],
        };
        let psi1 = joint_feature_map(&s1, &asg1, &space).unwrap();
        assert!(psi1[space.w3_offset()..space.w5_offset()]
            .iter()
            .all(|&x| x == 0.0));
        // w5 block equals x0 placed at the activity block.
        let got = &psi[space.w5_offset() + 3..space.w5_offset() + 6];
        assert_eq!(got, &[1.0, 2.0, 3.0]);
    }
}
