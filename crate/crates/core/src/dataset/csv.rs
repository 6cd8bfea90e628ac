use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DatasetError, FeatureDataset};
use crate::linalg::Matrix;
use crate::Scalar;

/// Label token table. The first token of each group is the canonical one
/// used when writing labels back out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self {
            positive: vec!["busy".into(), "1".into(), "+1".into()],
            negative: vec!["free".into(), "-1".into()],
        }
    }
}

impl LabelMap {
    pub fn new(positive: Vec<String>, negative: Vec<String>) -> Result<Self, DatasetError> {
        if positive.is_empty() || negative.is_empty() {
            return Err(DatasetError::Param("each class needs at least one label token".into()));
        }
        if let Some(t) = positive.iter().find(|t| negative.contains(t)) {
            return Err(DatasetError::Param(format!("token `{t}` maps to both classes")));
        }
        for t in positive.iter().chain(&negative) {
            if t.is_empty() || t.contains([',', '\n', '\r', '=']) || t.trim() != t {
                return Err(DatasetError::Param(format!("invalid label token `{t}`")));
            }
        }
        Ok(Self { positive, negative })
    }

    /// Map with a single token per class.
    pub fn pair(positive: &str, negative: &str) -> Result<Self, DatasetError> {
        Self::new(vec![positive.to_string()], vec![negative.to_string()])
    }

    /// Default table with `token` designated positive. Picking one of the
    /// default negative tokens swaps the two default groups.
    pub fn with_positive(token: &str) -> Option<Self> {
        let d = Self::default();
        if d.positive.iter().any(|t| t == token) {
            Some(d)
        } else if d.negative.iter().any(|t| t == token) {
            Some(Self { positive: d.negative, negative: d.positive })
        } else {
            None
        }
    }

    pub fn resolve(&self, token: &str) -> Option<i8> {
        if self.positive.iter().any(|t| t == token) {
            Some(1)
        } else if self.negative.iter().any(|t| t == token) {
            Some(-1)
        } else {
            None
        }
    }

    pub fn token(&self, label: i8) -> &str {
        if label > 0 {
            &self.positive[0]
        } else {
            &self.negative[0]
        }
    }
}

/// First token seen for each class while reading a file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservedTokens {
    pub positive: Option<String>,
    pub negative: Option<String>,
}

/// Parses CSV text: `#` lines and blank lines are skipped, each data row is
/// `d` decimal numbers followed by one label token. Line numbers in errors
/// are 1-based physical lines; field numbers are 1-based.
pub fn parse_csv<T: Scalar>(text: &str, labels: &LabelMap) -> Result<(FeatureDataset<T>, ObservedTokens), DatasetError> {
    let mut width: Option<usize> = None;
    let mut data: Vec<T> = Vec::new();
    let mut ys: Vec<i8> = Vec::new();
    let mut seen = ObservedTokens::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(DatasetError::TooFewFields { line: line_no });
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(DatasetError::Ragged { line: line_no, expected: w, found: fields.len() })
            }
            _ => {}
        }
        let (token, feats) = fields.split_last().expect("at least two fields");
        for (j, f) in feats.iter().enumerate() {
            match f.parse::<T>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => return Err(DatasetError::BadNumber { line: line_no, field: j + 1, text: f.to_string() }),
            }
        }
        let y = labels
            .resolve(token)
            .ok_or_else(|| DatasetError::UnknownLabel { line: line_no, token: token.to_string() })?;
        let slot = if y > 0 { &mut seen.positive } else { &mut seen.negative };
        if slot.is_none() {
            *slot = Some(token.to_string());
        }
        ys.push(y);
    }
    let d = width.ok_or(DatasetError::Empty)? - 1;
    let m = Matrix::from_vec(ys.len(), d, data).map_err(|e| DatasetError::Param(e.to_string()))?;
    Ok((FeatureDataset::new(m, ys)?, seen))
}

pub fn load_csv_with_tokens<T: Scalar>(
    path: impl AsRef<Path>,
    labels: &LabelMap,
) -> Result<(FeatureDataset<T>, ObservedTokens), DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_csv(&text, labels)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, labels: &LabelMap) -> Result<FeatureDataset<T>, DatasetError> {
    load_csv_with_tokens(path, labels).map(|(ds, _)| ds)
}

/// Writes rows as CSV; floats use the shortest representation that parses
/// back to the same value.
pub fn write_csv<T: Scalar, W: Write>(ds: &FeatureDataset<T>, out: &mut W, labels: &LabelMap) -> std::io::Result<()> {
    for i in 0..ds.n() {
        let mut line = String::new();
        for v in ds.row(i) {
            line.push_str(&format!("{v:?}"));
            line.push(',');
        }
        line.push_str(labels.token(ds.labels()[i]));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_csv<T: Scalar>(ds: &FeatureDataset<T>, path: impl AsRef<Path>, labels: &LabelMap) -> Result<(), DatasetError> {
    if ds.d() == 0 {
        return Err(DatasetError::NoFeatures);
    }
    let path = path.as_ref();
    let io = |source| DatasetError::Io { path: path.display().to_string(), source };
    let mut buf = Vec::new();
    writeln!(buf, "# {} rows, {} features, label last", ds.n(), ds.d()).map_err(io)?;
    write_csv(ds, &mut buf, labels).map_err(io)?;
    fs::write(path, buf).map_err(io)
}
