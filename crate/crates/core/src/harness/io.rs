//! CSV ingestion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::OctError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Column holding the label; `None` means the last column.
    pub label_column: Option<usize>,
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: None,
            has_header: false,
            delimiter: b',',
        }
    }
}

/// Raw feature matrix and ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub feature_names: Vec<String>,
}

impl RawData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> RawData {
        RawData {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

fn parse_label(tok: &str, row: usize, col: usize) -> Result<i8, OctError> {
    match tok.trim().parse::<f64>() {
        Ok(1.0) => Ok(1),
        Ok(-1.0 | 0.0) => Ok(-1),
        _ => Err(OctError::Parse(format!(
            "row {row}, column {col}: unknown label {tok:?}"
        ))),
    }
}

/// Parse delimited text. Rows and columns in error messages are 1-based
/// and count the header line when present.
pub fn parse_csv(text: &str, options: &CsvOptions) -> Result<RawData, OctError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Option<Vec<String>> = if options.has_header {
        Some(
            reader
                .headers()
                .map_err(|e| OctError::Parse(e.to_string()))?
                .iter()
                .map(str::to_string)
                .collect(),
        )
    } else {
        None
    };
    let offset = usize::from(options.has_header) + 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| OctError::Parse(e.to_string()))?;
        let row = r + offset;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(OctError::Parse(format!(
                    "row {row}: expected {w} columns, found {}",
                    rec.len()
                )));
            }
            _ => {}
        }
        if rec.len() < 2 {
            return Err(OctError::Parse(format!(
                "row {row}: need at least one feature and a label"
            )));
        }
        let label_col = options.label_column.unwrap_or(rec.len() - 1);
        if label_col >= rec.len() {
            return Err(OctError::Parse(format!(
                "row {row}: label column {} out of range",
                label_col + 1
            )));
        }
        let mut x = Vec::with_capacity(rec.len() - 1);
        for (c, tok) in rec.iter().enumerate() {
            if c == label_col {
                labels.push(parse_label(tok, row, c + 1)?);
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| {
                OctError::Parse(format!(
                    "row {row}, column {}: non-numeric value {tok:?}",
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(OctError::Parse(format!(
                    "row {row}, column {}: non-finite value",
                    c + 1
                )));
            }
            x.push(v);
        }
        features.push(x);
    }
    if features.is_empty() {
        return Err(OctError::Parse("no data rows".into()));
    }
    let p = features[0].len();
    let feature_names = match header {
        Some(h) => {
            let label_col = options.label_column.unwrap_or(h.len().saturating_sub(1));
            h.into_iter()
                .enumerate()
                .filter(|(c, _)| *c != label_col)
                .map(|(_, s)| s)
                .collect()
        }
        None => (1..=p).map(|j| format!("x{j}")).collect(),
    };
    Ok(RawData {
        features,
        labels,
        feature_names,
    })
}

/// Parse a feature-only table (no label column).
pub fn parse_unlabeled(
    text: &str,
    has_header: bool,
    delimiter: u8,
) -> Result<Vec<Vec<f64>>, OctError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let offset = usize::from(has_header) + 1;
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| OctError::Parse(e.to_string()))?;
        let row = r + offset;
        let x = rec
            .iter()
            .enumerate()
            .map(|(c, tok)| match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(OctError::Parse(format!(
                    "row {row}, column {}: bad value {tok:?}",
                    c + 1
                ))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(x);
    }
    Ok(rows)
}

pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<RawData, OctError> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, options)
}

/// Published sizes `(name, n, p)` of the benchmark datasets.
pub const MANIFEST: &[(&str, usize, usize)] = &[
    ("australian", 690, 14),
    ("breastcancer", 683, 9),
    ("heart", 270, 13),
    ("ionosphere", 351, 34),
    ("monks", 415, 7),
    ("parkinson", 240, 40),
    ("sonar", 208, 60),
    ("wholesale", 440, 7),
];

/// Compare a loaded dataset against the published size of `name`
/// (case-insensitive, punctuation ignored). Unknown names pass.
pub fn manifest_check(name: &str, data: &RawData) -> Result<(), OctError> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    if let Some(&(_, n, p)) = MANIFEST.iter().find(|(k, _, _)| *k == key) {
        if data.len() != n || data.num_features() != p {
            return Err(OctError::Invalid(format!(
                "{name}: expected n={n}, p={p}, found n={}, p={}",
                data.len(),
                data.num_features()
            )));
        }
    }
    Ok(())
}
