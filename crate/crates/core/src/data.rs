//! Labelled datasets with min-max normalized features.

use serde::{Deserialize, Serialize};

use crate::OctError;

/// Per-feature `(min, max)` recorded when a dataset is normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub ranges: Vec<(f64, f64)>,
}

impl Scaling {
    /// Map a raw row into `[0, 1]^p`, clamping values outside the recorded
    /// range. Constant features map to 0.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>, OctError> {
        if raw.len() != self.ranges.len() {
            return Err(OctError::Dimension {
                expected: self.ranges.len(),
                found: raw.len(),
            });
        }
        raw.iter()
            .zip(&self.ranges)
            .enumerate()
            .map(|(j, (&v, &(lo, hi)))| {
                if !v.is_finite() {
                    return Err(OctError::NonFinite { column: j });
                }
                Ok(if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                })
            })
            .collect()
    }

    /// Identity scaling on `p` features.
    pub fn identity(p: usize) -> Scaling {
        Scaling {
            ranges: vec![(0.0, 1.0); p],
        }
    }
}

/// `n` observations with `p` features in `[0, 1]` and labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    p: usize,
    /// Row-major `n × p`.
    features: Vec<f64>,
    pub labels: Vec<i8>,
    pub feature_names: Option<Vec<String>>,
    pub scaling: Scaling,
}

fn check_labels(labels: &[i8]) -> Result<(), OctError> {
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y != 1 && y != -1) {
        return Err(OctError::Invalid(format!(
            "label {y} at row {i} is not -1 or +1"
        )));
    }
    Ok(())
}

impl Dataset {
    /// Wrap rows that are already in `[0, 1]`; the stored scaling is the
    /// identity.
    pub fn from_normalized(rows: &[Vec<f64>], labels: Vec<i8>) -> Result<Dataset, OctError> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(OctError::Dimension {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        check_labels(&labels)?;
        let mut features = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(OctError::Dimension {
                    expected: p,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(OctError::NonFinite { column: j });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(OctError::Invalid(format!(
                        "feature {j} value {v} outside [0, 1]"
                    )));
                }
            }
            features.extend_from_slice(row);
        }
        Ok(Dataset {
            p,
            features,
            labels,
            feature_names: None,
            scaling: Scaling::identity(p),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            p: self.p,
            features,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            scaling: self.scaling.clone(),
        }
    }

    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Dataset, OctError> {
        if labels.len() != self.len() {
            return Err(OctError::Dimension {
                expected: self.len(),
                found: labels.len(),
            });
        }
        check_labels(&labels)?;
        Ok(Dataset {
            labels,
            ..self.clone()
        })
    }

    pub fn count_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Majority label; ties go to +1.
    pub fn majority_label(&self) -> i8 {
        if 2 * self.count_positive() >= self.len() {
            1
        } else {
            -1
        }
    }

    /// Training needs at least two rows and both classes.
    pub fn require_both_classes(&self) -> Result<(), OctError> {
        let pos = self.count_positive();
        if self.len() < 2 || pos == 0 || pos == self.len() {
            return Err(OctError::SingleClass);
        }
        Ok(())
    }
}

/// Min-max scale each column of `raw` into `[0, 1]`. Constant columns map to
/// zero. The ranges are stored for out-of-sample use.
pub fn normalize_features(raw: &[Vec<f64>], labels: Vec<i8>) -> Result<Dataset, OctError> {
    let n = raw.len();
    if n == 0 {
        return Err(OctError::Invalid("no observations".into()));
    }
    let p = raw[0].len();
    if p == 0 {
        return Err(OctError::Invalid("no features".into()));
    }
    if labels.len() != n {
        return Err(OctError::Dimension {
            expected: n,
            found: labels.len(),
        });
    }
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); p];
    for row in raw {
        if row.len() != p {
            return Err(OctError::Dimension {
                expected: p,
                found: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(OctError::NonFinite { column: j });
            }
            ranges[j].0 = ranges[j].0.min(v);
            ranges[j].1 = ranges[j].1.max(v);
        }
    }
    let scaling = Scaling { ranges };
    let rows = raw
        .iter()
        .map(|r| scaling.apply(r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut data = Dataset::from_normalized(&rows, labels)?;
    data.scaling = scaling;
    Ok(data)
}
