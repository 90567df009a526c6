//! Observation sequences and their validation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::space::LabelSpace;

/// One recording: `K` per-segment feature vectors, one global feature
/// vector, and (for training data) gold action and activity labels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentSequence {
    pub id: String,
    /// Subject tag; cross-validation folds are split on it.
    pub subject: String,
    /// Gold activity id, when labeled.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub activity: Option<usize>,
    /// Gold action ids (one per segment), when labeled.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub actions: Option<Vec<usize>>,
    /// Per-segment feature vectors, each of dimension `D`.
    pub segments: Vec<Vec<f64>>,
    /// Global feature vector of dimension `D0`.
    pub global: Vec<f64>,
}

impl SegmentSequence {
    /// Number of segments `K`.
    #[inline]
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Gold labels, or [`Error::MissingLabels`] if either is absent.
    pub fn gold(&self) -> Result<(&[usize], usize)> {
        match (&self.actions, self.activity) {
            (Some(actions), Some(activity)) => Ok((actions, activity)),
            _ => Err(Error::MissingLabels {
                id: self.id.clone(),
            }),
        }
    }
}

/// Checks the feature invariants only: at least one segment, exact
/// dimensions, finite values. Used on unlabeled sequences too.
pub(crate) fn validate_features(seq: &SegmentSequence, space: &LabelSpace) -> Result<()> {
    if seq.segments.is_empty() {
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
        if !crate::util::all_finite(segment) {
            return Err(Error::NonFinite {
                what: "segment feature vector",
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
    if !crate::util::all_finite(&seq.global) {
        return Err(Error::NonFinite {
            what: "global feature vector",
        });
    }
    Ok(())
}

/// Checks every invariant of `seq` against `space`: at least one segment,
/// exact feature dimensions, finite values, and in-range labels.
pub fn validate_sequence(seq: &SegmentSequence, space: &LabelSpace) -> Result<()> {
    validate_features(seq, space)?;
    if let Some(actions) = &seq.actions {
        if actions.len() != seq.segments.len() {
            return Err(Error::LengthMismatch {
                what: "gold action sequence",
                expected: seq.segments.len(),
                actual: actions.len(),
            });
        }
        for &y in actions {
            if y >= space.n_actions {
                return Err(Error::LabelOutOfRange {
                    what: "action",
                    value: y,
                    limit: space.n_actions,
                });
            }
        }
    }
    if let Some(a) = seq.activity {
        if a >= space.n_activities {
            return Err(Error::LabelOutOfRange {
                what: "activity",
                value: a,
                limit: space.n_activities,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn space() -> LabelSpace {
        LabelSpace::new(3, 2, 2, 4, 2).unwrap()
    }

    fn sample() -> SegmentSequence {
        SegmentSequence {
            id: "seq0".into(),
            subject: "s0".into(),
            activity: Some(1),
            actions: Some(vec![0, 2, 1]),
            segments: vec![vec![0.0; 4], vec![1.0; 4], vec![-1.0; 4]],
            global: vec![0.5, -0.5],
        }
    }

    #[test]
    fn valid_sequence_passes() {
        assert!(validate_sequence(&sample(), &space()).is_ok());
    }

    #[test]
    fn short_segment_vector_rejected() {
        let mut seq = sample();
        seq.segments[1] = vec![0.0; 3];
        assert_eq!(
            validate_sequence(&seq, &space()),
            Err(Error::DimensionMismatch {
                what: "segment feature vector",
                expected: 4,
                actual: 3,
            })
        );
    }

    #[test]
    fn action_id_at_limit_rejected() {
        let mut seq = sample();
        seq.actions = Some(vec![0, 3, 1]);
        assert_eq!(
            validate_sequence(&seq, &space()),
            Err(Error::LabelOutOfRange {
                what: "action",
                value: 3,
                limit: 3,
            })
        );
    }

    #[test]
    fn non_finite_feature_rejected() {
        let mut seq = sample();
        seq.global[0] = f64::NAN;
        assert!(matches!(
            validate_sequence(&seq, &space()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn gold_accessor_requires_both_labels() {
        let mut seq = sample();
        assert!(seq.gold().is_ok());
        seq.activity = None;
        assert!(matches!(seq.gold(), Err(Error::MissingLabels { .. })));
    }
}
