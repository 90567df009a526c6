//! Leave-one-subject-out cross-validation.
//!
//! One fold per distinct subject: fit the standardizer on the training
//! subjects, train, decode the held-out subject, evaluate. Folds are
//! independent and run in parallel; per-metric means and standard errors
//! are aggregated in a single-threaded reduction.

use hcrf_core::{decode, evaluate, train, Hyperparams, MetricsReport, Standardizer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryFile, DatasetFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over folds divided by sqrt(#folds).
    pub std_err: f64,
}

/// Mean and standard error of each headline metric across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBlock {
    pub accuracy: MetricSummary,
    pub macro_precision: MetricSummary,
    pub macro_recall: MetricSummary,
    pub macro_f1: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub test_subject: String,
    pub actions: MetricsReport,
    pub activities: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub actions: SummaryBlock,
    pub activities: SummaryBlock,
}

/// Distinct subjects that actually carry records, sorted.
pub fn fold_subjects(ds: &DatasetFile) -> Vec<String> {
    let mut subjects: Vec<String> = Vec::new();
    for record in &ds.records {
        if !subjects.contains(&record.subject) {
            subjects.push(record.subject.clone());
        }
    }
    subjects.sort();
    subjects
}

/// Runs one fold per subject and aggregates. Deterministic given the
/// dataset, the hyperparameters, and the seed.
pub fn cross_validate(
    ds: &DatasetFile,
    hp: &Hyperparams,
    categories: Option<&CategoryFile>,
) -> Result<CvReport> {
    ds.validate()?;
    let subjects = fold_subjects(ds);
    if subjects.len() < 2 {
        return Err(Error::InsufficientSubjects {
            found: subjects.len(),
        });
    }
    let folds: Vec<FoldReport> = subjects
        .par_iter()
        .map(|subject| run_fold(ds, hp, categories, subject))
        .collect::<Result<_>>()?;
    let actions = summarize(folds.iter().map(|f| &f.actions));
    let activities = summarize(folds.iter().map(|f| &f.activities));
    Ok(CvReport {
        folds,
        actions,
        activities,
    })
}

fn run_fold(
    ds: &DatasetFile,
    hp: &Hyperparams,
    categories: Option<&CategoryFile>,
    subject: &str,
) -> Result<FoldReport> {
    let (train_split, test_split) = ds.split_subject(subject);
    let standardizer = Standardizer::fit(&train_split)?;
    let train_std = standardizer.apply_all(&train_split)?;
    let test_std = standardizer.apply_all(&test_split)?;
    let cats = categories.map(|c| c.align(&train_std)).transpose()?;
    let (weights, _report) = train(&train_std, &ds.header.space, hp, cats.as_ref())?;
    let preds: Vec<_> = test_std
        .iter()
        .map(|seq| decode(&weights, seq))
        .collect::<hcrf_core::Result<_>>()?;
    let (actions, activities) = evaluate(&preds, &test_std, &ds.header.space)?;
    Ok(FoldReport {
        test_subject: subject.to_string(),
        actions,
        activities,
    })
}

fn summarize<'a, I>(reports: I) -> SummaryBlock
where
    I: Iterator<Item = &'a MetricsReport> + Clone,
{
    SummaryBlock {
        accuracy: summary_of(reports.clone().map(|r| r.accuracy)),
        macro_precision: summary_of(reports.clone().map(|r| r.macro_precision)),
        macro_recall: summary_of(reports.clone().map(|r| r.macro_recall)),
        macro_f1: summary_of(reports.map(|r| r.macro_f1)),
    }
}

fn summary_of(values: impl Iterator<Item = f64>) -> MetricSummary {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_err = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        var.sqrt() / n.sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, std_err }
}

/// Every sequence must land in exactly one test split.
pub fn check_fold_partition(ds: &DatasetFile) -> bool {
    let subjects = fold_subjects(ds);
    let mut covered = 0usize;
    for subject in &subjects {
        let (_, test) = ds.split_subject(subject);
        covered += test.len();
    }
    covered == ds.records.len()
}
