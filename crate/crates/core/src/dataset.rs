//! ROI time-series runs: CSV ingestion, validation, run addressing and manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{fmt17, Real};

/// T×N matrix of ROI-averaged samples, one row per TR and one column per ROI.
///
/// Stored row-major. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiMatrix<T> {
    data: Vec<T>,
    rows: usize,
    cols: usize,
    tr_seconds: T,
}

impl<T: Real> RoiMatrix<T> {
    /// Builds a matrix from row-major data, checking every invariant.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>, tr_seconds: T) -> Result<Self> {
        if rows < 2 || cols < 1 {
            return Err(Error::Shape(format!(
                "ROI matrix needs at least 2 rows and 1 column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if !(tr_seconds > T::zero()) || !tr_seconds.is_finite() {
            return Err(Error::Parameter(format!("tr_seconds must be positive, got {tr_seconds}")));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: i / cols + 1,
                col: i % cols + 1,
                msg: "non-finite value".into(),
            });
        }
        Ok(Self {
            data,
            rows,
            cols,
            tr_seconds,
        })
    }

    pub fn from_rows(rows: &[Vec<T>], tr_seconds: T) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Format {
                line: i + 1,
                msg: format!("expected {cols} columns, found {}", rows[i].len()),
            });
        }
        Self::from_row_major(rows.len(), cols, rows.concat(), tr_seconds)
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<T>], tr_seconds: T) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("columns differ in length".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for t in 0..rows {
            data.extend(columns.iter().map(|c| c[t]));
        }
        Self::from_row_major(rows, cols, data, tr_seconds)
    }

    /// Number of time points (T).
    pub fn n_time(&self) -> usize {
        self.rows
    }

    /// Number of ROIs (N).
    pub fn n_rois(&self) -> usize {
        self.cols
    }

    pub fn tr_seconds(&self) -> T {
        self.tr_seconds
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn get(&self, t: usize, roi: usize) -> T {
        self.data[t * self.cols + roi]
    }

    pub fn column(&self, roi: usize) -> Vec<T> {
        self.rows().map(|r| r[roi]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Writes the matrix as headerless CSV with 17 significant digits per cell.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 24);
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Options for [`parse_csv`] and [`load_run`].
#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Skip the first non-empty line.
    pub has_header: bool,
}

/// Parses headerless numeric CSV text into a matrix.
pub fn parse_csv<T: Real>(text: &str, tr_seconds: T, opts: CsvOptions) -> Result<RoiMatrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_pending = opts.has_header;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let mut row = Vec::with_capacity(width.unwrap_or(8));
        for (j, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line_no,
                col: j + 1,
                msg: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line_no,
                    col: j + 1,
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            row.push(T::lit(v));
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format {
                    line: line_no,
                    msg: format!("ragged row: expected {w} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cols = width.unwrap_or(0);
    RoiMatrix::from_row_major(rows.len(), cols, rows.concat(), tr_seconds)
}

/// Loads one ROI run from a CSV file.
pub fn load_run<T: Real>(path: &Path, tr_seconds: T, opts: CsvOptions) -> Result<RoiMatrix<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, tr_seconds, opts)
}

/// Standardizes every column to sample mean 0 and sample sd 1.
///
/// Constant columns become all zeros.
pub fn zscore_columns<T: Real>(m: &RoiMatrix<T>) -> RoiMatrix<T> {
    let (rows, cols) = (m.n_time(), m.n_rois());
    let n = T::from_usize_lossy(rows);
    let mut means = vec![T::zero(); cols];
    for row in m.rows() {
        for (acc, &v) in means.iter_mut().zip(row) {
            *acc += v;
        }
    }
    means.iter_mut().for_each(|s| *s /= n);
    let mut sds = vec![T::zero(); cols];
    for row in m.rows() {
        for ((acc, &v), &mu) in sds.iter_mut().zip(row).zip(&means) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let denom = T::from_usize_lossy(rows - 1);
    for (sd, &mu) in sds.iter_mut().zip(&means) {
        *sd = (*sd / denom).sqrt();
        // relative threshold so that float noise on a constant column does not get amplified
        if *sd <= T::epsilon() * T::lit(16.0) * mu.abs().max(T::one()) {
            *sd = T::zero();
        }
    }
    let data = m
        .rows()
        .flat_map(|row| {
            row.iter()
                .zip(means.iter().zip(&sds))
                .map(|(&v, (&mu, &sd))| if sd > T::zero() { (v - mu) / sd } else { T::zero() })
                .collect::<Vec<_>>()
        })
        .collect();
    RoiMatrix::from_row_major(rows, cols, data, m.tr_seconds()).expect("shape preserved")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunLabel {
    Loc1,
    Loc2,
    Rest,
}

impl RunLabel {
    /// The same subject's other localiser run.
    pub fn counterpart(self) -> Option<RunLabel> {
        match self {
            RunLabel::Loc1 => Some(RunLabel::Loc2),
            RunLabel::Loc2 => Some(RunLabel::Loc1),
            RunLabel::Rest => None,
        }
    }
}

impl fmt::Display for RunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunLabel::Loc1 => "Loc1",
            RunLabel::Loc2 => "Loc2",
            RunLabel::Rest => "Rest",
        })
    }
}

impl FromStr for RunLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loc1" => Ok(RunLabel::Loc1),
            "loc2" => Ok(RunLabel::Loc2),
            "rest" => Ok(RunLabel::Rest),
            other => Err(Error::Parameter(format!("unknown run label {other:?}"))),
        }
    }
}

/// Key addressing one run of one subject.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub subject: String,
    pub label: RunLabel,
}

impl RunKey {
    pub fn new(subject: impl Into<String>, label: RunLabel) -> Self {
        Self {
            subject: subject.into(),
            label,
        }
    }
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.subject, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunDescriptor {
    pub subject_id: String,
    pub run_label: RunLabel,
    pub atlas_label: String,
}

impl RunDescriptor {
    pub fn key(&self) -> RunKey {
        RunKey::new(self.subject_id.clone(), self.run_label)
    }
}

/// One `subject:label:path` manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub descriptor: RunDescriptor,
    pub path: PathBuf,
}

impl ManifestEntry {
    /// Parses a `subject:label:path` triple. The path may itself contain colons.
    pub fn parse(triple: &str, atlas: &str) -> Result<Self> {
        let mut parts = triple.trim().splitn(3, ':');
        let (Some(subject), Some(label), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parameter(format!(
                "run reference {triple:?} is not subject:label:path"
            )));
        };
        if subject.is_empty() || path.is_empty() {
            return Err(Error::Parameter(format!("run reference {triple:?} has an empty field")));
        }
        Ok(Self {
            descriptor: RunDescriptor {
                subject_id: subject.to_string(),
                run_label: label.parse()?,
                atlas_label: atlas.to_string(),
            },
            path: PathBuf::from(path),
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}:{}:{}",
            self.descriptor.subject_id,
            self.descriptor.run_label,
            self.path.display()
        )
    }
}

/// Ordered collection of runs with unique (subject, label, atlas) triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.descriptor.clone()) {
                return Err(Error::Parameter(format!(
                    "duplicate run {}:{} ({})",
                    e.descriptor.subject_id, e.descriptor.run_label, e.descriptor.atlas_label
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Parses manifest text; relative paths resolve against `base_dir`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, base_dir: &Path, atlas: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut entry = ManifestEntry::parse(line, atlas).map_err(|e| Error::Format {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if entry.path.is_relative() {
                entry.path = base_dir.join(&entry.path);
            }
            entries.push(entry);
        }
        Self::new(entries)
    }

    pub fn load(path: &Path, atlas: &str) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, atlas)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|e| e.to_line() + "\n").collect()
    }
}
