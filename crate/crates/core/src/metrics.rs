//! Prediction metrics: accuracy, macro precision/recall/F-score, and
//! confusion matrices (rows are ground truth, columns are detections).
//!
//! Macro averages are unweighted means over the classes present in the
//! gold labels; classes absent from gold are excluded, and a class with
//! no predictions has precision 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inference::DecodeResult;
use crate::sequence::SegmentSequence;
use crate::space::LabelSpace;

/// Precision, recall, and F-score of one class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMetrics {
    /// Gold count; 0 means the class is excluded from macro averages.
    pub support: usize,
    /// Predicted count.
    pub predicted: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Metrics over one label set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// `confusion[gold][pred]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
}

impl MetricsReport {
    /// Builds a report from `(gold, predicted)` label pairs.
    pub fn from_pairs<I>(pairs: I, n_classes: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut confusion = vec![vec![0usize; n_classes]; n_classes];
        let mut total = 0usize;
        for (gold, pred) in pairs {
            if gold >= n_classes || pred >= n_classes {
                return Err(Error::LabelOutOfRange {
                    what: "metric label",
                    value: gold.max(pred),
                    limit: n_classes,
                });
            }
            confusion[gold][pred] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyInput {
                what: "evaluation pairs",
            });
        }
        Ok(Self::from_confusion(confusion))
    }

    /// Builds a report from an already-counted confusion matrix.
    #[allow(clippy::needless_range_loop)]
    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let n_classes = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
        let mut per_class = Vec::with_capacity(n_classes);
        let mut macro_p = 0.0;
        let mut macro_r = 0.0;
        let mut macro_f = 0.0;
        let mut present = 0usize;
        for c in 0..n_classes {
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = (0..n_classes).map(|g| confusion[g][c]).sum();
            let tp = confusion[c][c];
            let precision = if predicted > 0 {
                tp as f64 / predicted as f64
            } else {
                0.0
            };
            let recall = if support > 0 {
                tp as f64 / support as f64
            } else {
                0.0
            };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            if support > 0 {
                present += 1;
                macro_p += precision;
                macro_r += recall;
                macro_f += f1;
            }
            per_class.push(ClassMetrics {
                support,
                predicted,
                precision,
                recall,
                f1,
            });
        }
        let present = present.max(1) as f64;
        Self {
            accuracy: trace as f64 / total as f64,
            macro_precision: macro_p / present,
            macro_recall: macro_r / present,
            macro_f1: macro_f / present,
            confusion,
            per_class,
        }
    }
}

/// Evaluates predictions against gold-labeled sequences. Action metrics
/// pool every segment across the dataset; activity metrics count one item
/// per sequence. Returns `(action_report, activity_report)`.
pub fn evaluate(
    preds: &[DecodeResult],
    golds: &[SegmentSequence],
    space: &LabelSpace,
) -> Result<(MetricsReport, MetricsReport)> {
    if preds.is_empty() {
        return Err(Error::EmptyInput {
            what: "predictions",
        });
    }
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            what: "prediction list",
            expected: golds.len(),
            actual: preds.len(),
        });
    }
    let mut action_pairs = Vec::new();
    let mut activity_pairs = Vec::with_capacity(golds.len());
    for (pred, gold) in preds.iter().zip(golds) {
        let (gold_actions, gold_activity) = gold.gold()?;
        if pred.actions.len() != gold_actions.len() {
            return Err(Error::LengthMismatch {
                what: "predicted action sequence",
                expected: gold_actions.len(),
                actual: pred.actions.len(),
            });
        }
        for (&g, &p) in gold_actions.iter().zip(&pred.actions) {
            action_pairs.push((g, p));
        }
        activity_pairs.push((gold_activity, pred.activity));
    }
    Ok((
        MetricsReport::from_pairs(action_pairs, space.n_actions)?,
        MetricsReport::from_pairs(activity_pairs, space.n_activities)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn perfect_predictions_score_one() {
        let report = MetricsReport::from_pairs(vec![(0, 0), (1, 1), (2, 2), (1, 1)], 3).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_precision, 1.0);
        assert_eq!(report.macro_recall, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.confusion[1][1], 2);
        assert_eq!(report.confusion[0][1], 0);
    }

    #[test]
    fn single_class_predictions_on_balanced_two_class_gold() {
        // Everything predicted as class 0 on a balanced 2-class set:
        // accuracy 1/2, macro F1 = (2/3 + 0) / 2 = 1/3.
        let pairs = vec![(0, 0), (0, 0), (1, 0), (1, 0)];
        let report = MetricsReport::from_pairs(pairs, 2).unwrap();
        assert!((report.accuracy - 0.5).abs() < 1e-12);
        assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.macro_precision - 0.25).abs() < 1e-12);
        assert!((report.macro_recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn absent_gold_classes_are_excluded_from_macros() {
        // Class 2 never appears in gold; macros average classes 0 and 1.
        let pairs = vec![(0, 0), (1, 2)];
        let report = MetricsReport::from_pairs(pairs, 3).unwrap();
        assert!((report.macro_recall - 0.5).abs() < 1e-12);
        assert_eq!(report.per_class[2].support, 0);
    }

    #[test]
    fn row_sums_equal_gold_counts() {
        let pairs = vec![(0, 1), (0, 0), (2, 2), (2, 0), (2, 2)];
        let report = MetricsReport::from_pairs(pairs.clone(), 3).unwrap();
        for c in 0..3 {
            let row_sum: usize = report.confusion[c].iter().sum();
            let gold_count = pairs.iter().filter(|(g, _)| *g == c).count();
            assert_eq!(row_sum, gold_count);
        }
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, pairs.len());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            MetricsReport::from_pairs(Vec::new(), 2),
            Err(Error::EmptyInput { .. })
        ));
    }

    #[test]
    fn evaluate_splits_actions_and_activities() {
        let space = LabelSpace::new(2, 1, 2, 1, 1).unwrap();
        let golds = vec![SegmentSequence {
            id: "a".to_string(),
            subject: "s".to_string(),
            activity: Some(1),
            actions: Some(vec![0, 1, 1]),
            segments: vec![vec![0.0]; 3],
            global: vec![0.0],
        }];
        let preds = vec![DecodeResult {
            activity: 1,
            actions: vec![0, 1, 0],
            latents: vec![0, 0, 0],
            score: 0.0,
        }];
        let (actions, activities) = evaluate(&preds, &golds, &space).unwrap();
        assert!((actions.accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(activities.accuracy, 1.0);
        assert!(matches!(
            evaluate(&[], &golds, &space),
            Err(Error::EmptyInput { .. })
        ));
    }
}
