//! Converter from externally preprocessed per-segment feature tables
//! (one CSV row per segment) into the dataset format.
//!
//! Expected CSV layout: a header row `id,subject,activity,action,f0,...`
//! followed by one row per segment. Consecutive rows with the same `id`
//! form one sequence, in file order. `activity` and `action` hold label
//! names and may be empty for unlabeled data. The feature column count
//! fixes the segment dimension `D`.
//!
//! The global feature vector is defined here (not by the table): the
//! per-dimension mean of the sequence's segment vectors concatenated with
//! the normalized length `K / K_max`, so `D0 = D + 1`.

use std::collections::BTreeSet;
use std::path::Path;

use hcrf_core::{LabelSpace, SegmentSequence};

use crate::dataset::{DatasetFile, DatasetHeader};
use crate::error::{Error, Result};

/// The artifact's global-feature definition: mean of the segment vectors
/// plus the normalized sequence length.
pub fn global_from_segments(segments: &[Vec<f64>], k_max: usize) -> Vec<f64> {
    let dim = segments[0].len();
    let mut global = vec![0.0; dim + 1];
    for seg in segments {
        for (g, x) in global.iter_mut().zip(seg) {
            *g += x;
        }
    }
    let k = segments.len() as f64;
    for g in global.iter_mut().take(dim) {
        *g /= k;
    }
    global[dim] = k / k_max as f64;
    global
}

struct RawRow {
    line: usize,
    id: String,
    subject: String,
    activity: Option<String>,
    action: Option<String>,
    features: Vec<f64>,
}

/// Reads a feature table and assembles a dataset, building label-name
/// tables sorted lexicographically.
pub fn convert_feature_table(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Convert {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Convert {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 5
        || &headers[0] != "id"
        || &headers[1] != "subject"
        || &headers[2] != "activity"
        || &headers[3] != "action"
    {
        return Err(Error::Convert {
            line: 1,
            message: "expected columns: id,subject,activity,action,f0,...".into(),
        });
    }
    let dim = headers.len() - 4;

    let mut rows: Vec<RawRow> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Convert {
            line,
            message: e.to_string(),
        })?;
        if record.len() != dim + 4 {
            return Err(Error::Convert {
                line,
                message: format!("expected {} columns, found {}", dim + 4, record.len()),
            });
        }
        let features = record
            .iter()
            .skip(4)
            .enumerate()
            .map(|(c, field)| {
                field.trim().parse::<f64>().map_err(|e| Error::Convert {
                    line,
                    message: format!("feature column {c}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let opt = |s: &str| {
            let t = s.trim();
            (!t.is_empty()).then(|| t.to_string())
        };
        rows.push(RawRow {
            line,
            id: record[0].trim().to_string(),
            subject: record[1].trim().to_string(),
            activity: opt(&record[2]),
            action: opt(&record[3]),
            features,
        });
    }
    if rows.is_empty() {
        return Err(Error::Convert {
            line: 1,
            message: "no segment rows".into(),
        });
    }

    let action_names: Vec<String> = rows
        .iter()
        .filter_map(|r| r.action.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let activity_names: Vec<String> = rows
        .iter()
        .filter_map(|r| r.activity.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let subjects: Vec<String> = rows
        .iter()
        .map(|r| r.subject.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let lookup = |names: &[String], name: &str, line: usize| -> Result<usize> {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Convert {
                line,
                message: format!("unknown label `{name}`"),
            })
    };

    // Group consecutive rows by id, in file order.
    let mut groups: Vec<Vec<RawRow>> = Vec::new();
    for row in rows {
        match groups.last_mut() {
            Some(group) if group[0].id == row.id => group.push(row),
            _ => groups.push(vec![row]),
        }
    }
    let k_max = groups.iter().map(Vec::len).max().expect("nonempty");

    let mut records = Vec::with_capacity(groups.len());
    for group in &groups {
        let first = &group[0];
        let segments: Vec<Vec<f64>> = group.iter().map(|r| r.features.clone()).collect();
        let actions = group
            .iter()
            .map(|r| {
                r.action
                    .as_deref()
                    .map(|name| lookup(&action_names, name, r.line))
                    .transpose()
            })
            .collect::<Result<Option<Vec<usize>>>>()?;
        let activity = first
            .activity
            .as_deref()
            .map(|name| lookup(&activity_names, name, first.line))
            .transpose()?;
        let global = global_from_segments(&segments, k_max);
        records.push(SegmentSequence {
            id: first.id.clone(),
            subject: first.subject.clone(),
            activity,
            actions,
            segments,
            global,
        });
    }

    let space = LabelSpace::new(
        action_names.len().max(1),
        1,
        activity_names.len().max(1),
        dim,
        dim + 1,
    )?;
    let header = DatasetHeader::new(space, pad(action_names), pad(activity_names), subjects);
    DatasetFile::new(header, records)
}

/// An unlabeled table still needs nonempty name tables for the space.
fn pad(names: Vec<String>) -> Vec<String> {
    if names.is_empty() {
        vec!["unlabeled".to_string()]
    } else {
        names
    }
}
