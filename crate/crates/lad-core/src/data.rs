//! Loss-matrix construction, validation, bias correction, and summaries.
//!
//! The central object is the n×K matrix `Z` of per-observation losses in
//! nats: row i holds the losses of all K candidate models on observation i.
//! Losses are typically negative log-likelihoods evaluated at fitted
//! parameters, optionally bias-corrected by `d_k/(2n)` per column to offset
//! the in-sample optimism of plug-in estimates.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{LadError, Result};

/// n×K matrix of per-observation losses with model labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    values: DMatrix<f64>,
    model_names: Vec<String>,
    bias_corrected: bool,
}

impl LossMatrix {
    /// Validate and wrap a loss matrix. Requires n ≥ 2 rows, K ≥ 1 columns,
    /// finite entries, and distinct model names (one per column).
    pub fn new(values: DMatrix<f64>, model_names: Vec<String>) -> Result<Self> {
        let (n, k) = values.shape();
        if k < 1 {
            return Err(LadError::Validation(
                "loss matrix needs K >= 1 models".into(),
            ));
        }
        if n < 2 {
            return Err(LadError::Validation(format!(
                "loss matrix needs n >= 2 rows to estimate a covariance, got n={n}"
            )));
        }
        if model_names.len() != k {
            return Err(LadError::Validation(format!(
                "got {} model names for {k} columns",
                model_names.len()
            )));
        }
        for (idx, name) in model_names.iter().enumerate() {
            if model_names[..idx].contains(name) {
                return Err(LadError::Validation(format!(
                    "duplicate model name {name:?}"
                )));
            }
        }
        for j in 0..k {
            for i in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(LadError::Validation(format!(
                        "non-finite loss {v} at row {}, column {} ({})",
                        i + 1,
                        j + 1,
                        model_names[j]
                    )));
                }
            }
        }
        Ok(LossMatrix {
            values,
            model_names,
            bias_corrected: false,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_models(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn is_bias_corrected(&self) -> bool {
        self.bias_corrected
    }

    /// Column means of the loss matrix (the raw estimate of μ).
    pub fn column_means(&self) -> DVector<f64> {
        let n = self.n() as f64;
        DVector::from_iterator(
            self.num_models(),
            self.values.column_iter().map(|c| c.sum() / n),
        )
    }
}

/// Per-model complexity values and parameter dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub model_names: Vec<String>,
    pub complexity: Vec<f64>,
    pub dims: Vec<u32>,
}

impl ModelMeta {
    pub fn new(model_names: Vec<String>, complexity: Vec<f64>, dims: Vec<u32>) -> Result<Self> {
        let k = model_names.len();
        if k == 0 {
            return Err(LadError::Validation("meta needs at least one model".into()));
        }
        if complexity.len() != k || dims.len() != k {
            return Err(LadError::Validation(format!(
                "meta arrays must have equal length: {} names, {} complexities, {} dims",
                k,
                complexity.len(),
                dims.len()
            )));
        }
        if let Some(c) = complexity.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(LadError::Validation(format!(
                "complexities must be finite and nonnegative, got {c}"
            )));
        }
        Ok(ModelMeta {
            model_names,
            complexity,
            dims,
        })
    }

    pub fn num_models(&self) -> usize {
        self.model_names.len()
    }

    /// Reorder this meta to match the column order of `z`. Models are
    /// matched by name when every column name appears in the meta; when the
    /// name sets do not line up (e.g. the CSV had no header), models are
    /// matched by position.
    pub fn aligned_to(&self, z: &LossMatrix) -> Result<ModelMeta> {
        if self.num_models() != z.num_models() {
            return Err(LadError::Validation(format!(
                "meta has {} models but loss matrix has {}",
                self.num_models(),
                z.num_models()
            )));
        }
        let by_name: Option<Vec<usize>> = z
            .model_names()
            .iter()
            .map(|name| self.model_names.iter().position(|m| m == name))
            .collect();
        match by_name {
            Some(perm) => Ok(ModelMeta {
                model_names: z.model_names().to_vec(),
                complexity: perm.iter().map(|&i| self.complexity[i]).collect(),
                dims: perm.iter().map(|&i| self.dims[i]).collect(),
            }),
            None => Ok(self.clone()),
        }
    }
}

/// Sample mean and covariance of the loss rows, with 1/n normalization on
/// the covariance (matching the posterior update downstream; the 1/(n-1)
/// estimator is deliberately not offered).
#[derive(Debug, Clone, PartialEq)]
pub struct LossSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
}

impl LossSummary {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        let k = mean.len();
        if cov.shape() != (k, k) {
            return Err(LadError::Validation(format!(
                "covariance shape {:?} does not match mean length {k}",
                cov.shape()
            )));
        }
        if mean.iter().any(|x| !x.is_finite()) || cov.iter().any(|x| !x.is_finite()) {
            return Err(LadError::Numerical(
                "non-finite summary statistics (inputs may have overflowed)".into(),
            ));
        }
        for i in 0..k {
            if cov[(i, i)] < 0.0 {
                return Err(LadError::Validation(format!(
                    "negative variance {} at diagonal entry {i}",
                    cov[(i, i)]
                )));
            }
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(LadError::Validation(format!(
                        "covariance is not symmetric at ({i},{j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        Ok(LossSummary { mean, cov, n })
    }

    pub fn num_models(&self) -> usize {
        self.mean.len()
    }
}

/// Add `d_k/(2n)` to every entry of column k, marking the result corrected.
///
/// Correcting an already-corrected matrix is an error: double correction is
/// a pipeline mistake we want surfaced, not silently absorbed.
pub fn bias_correct(z: &LossMatrix, meta: &ModelMeta) -> Result<LossMatrix> {
    if z.is_bias_corrected() {
        return Err(LadError::Validation(
            "loss matrix is already bias-corrected; refusing to correct twice".into(),
        ));
    }
    let meta = meta.aligned_to(z)?;
    let n = z.n() as f64;
    let mut values = z.values().clone();
    for (k, &d) in meta.dims.iter().enumerate() {
        let shift = f64::from(d) / (2.0 * n);
        for i in 0..z.n() {
            values[(i, k)] += shift;
        }
    }
    Ok(LossMatrix {
        values,
        model_names: z.model_names().to_vec(),
        bias_corrected: true,
    })
}

/// Column means and 1/n-normalized covariance of the loss rows. Symmetry is
/// enforced by averaging the accumulated matrix with its transpose.
pub fn summarize(z: &LossMatrix) -> LossSummary {
    let n = z.n();
    let k = z.num_models();
    let mean = z.column_means();
    let mut cov = DMatrix::zeros(k, k);
    for i in 0..n {
        let centered = z.values().row(i).transpose() - &mean;
        cov.ger(1.0 / n as f64, &centered, &centered, 1.0);
    }
    // enforce exact symmetry by averaging with the transpose
    for a in 0..k {
        for b in 0..a {
            let v = 0.5 * (cov[(a, b)] + cov[(b, a)]);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    LossSummary { mean, cov, n }
}

// ---------------------------------------------------------------------------
// File formats
//
// Loss CSV: comma separator, "." decimal point, optional single header row,
// no quoting of numeric fields. Values are written with 17 significant
// digits so a write/load round trip is bit-identical.
// ---------------------------------------------------------------------------

/// Format a float with 17 significant digits (round-trip exact for f64).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Load an n×K loss CSV. Without a header, models are named
/// `model_1..model_K`.
pub fn load_loss_matrix(path: impl AsRef<Path>, has_header: bool) -> Result<LossMatrix> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| LadError::io(path.display().to_string(), e))?;
    let (names, values) = parse_numeric_csv(&text, has_header)?;
    let k = values.ncols();
    let names = names.unwrap_or_else(|| (1..=k).map(|j| format!("model_{j}")).collect());
    LossMatrix::new(values, names)
}

/// Load a loss CSV, detecting the optional header row by whether the first
/// line parses as numbers.
pub fn load_loss_matrix_auto(path: impl AsRef<Path>) -> Result<LossMatrix> {
    let has_header = csv_has_header(path.as_ref())?;
    load_loss_matrix(path, has_header)
}

/// Load a numeric data CSV, skipping a detected header row.
pub fn load_data_matrix_auto(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let has_header = csv_has_header(path.as_ref())?;
    load_data_matrix(path, has_header)
}

fn csv_has_header(path: &Path) -> Result<bool> {
    let text =
        std::fs::read_to_string(path).map_err(|e| LadError::io(path.display().to_string(), e))?;
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| LadError::Format("empty CSV".into()))?;
    Ok(first
        .split(',')
        .any(|field| field.trim().parse::<f64>().is_err()))
}

/// Load a plain numeric data CSV (one row per observation, p columns).
/// Same dialect as the loss CSV; the header, if any, is ignored.
pub fn load_data_matrix(path: impl AsRef<Path>, has_header: bool) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| LadError::io(path.display().to_string(), e))?;
    let (_, values) = parse_numeric_csv(&text, has_header)?;
    Ok(values)
}

fn parse_numeric_csv(text: &str, has_header: bool) -> Result<(Option<Vec<String>>, DMatrix<f64>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut names = None;
    if has_header {
        match lines.next() {
            Some((_, header)) => {
                names = Some(header.split(',').map(|s| s.trim().to_string()).collect());
            }
            None => return Err(LadError::Format("empty CSV".into())),
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut parse_row = |line_no: usize, line: &str| -> Result<()> {
        let fields: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(LadError::Format(format!(
                    "ragged CSV: line {} has {} fields, expected {w}",
                    line_no + 1,
                    fields.len()
                )))
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(fields.len());
        for (j, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                LadError::Validation(format!(
                    "non-numeric cell {:?} at row {}, column {}",
                    field.trim(),
                    line_no + 1,
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(LadError::Validation(format!(
                    "non-finite cell {:?} at row {}, column {}",
                    field.trim(),
                    line_no + 1,
                    j + 1
                )));
            }
            row.push(v);
        }
        rows.push(row);
        Ok(())
    };
    for (line_no, line) in lines {
        parse_row(line_no, line)?;
    }
    if rows.is_empty() {
        if has_header {
            // header-only file: zero observations with named columns
            let k = names.as_ref().map_or(0, Vec::len);
            return Ok((names, DMatrix::zeros(0, k)));
        }
        return Err(LadError::Format("empty CSV".into()));
    }
    let n = rows.len();
    let k = rows[0].len();
    if let Some(ns) = &names {
        if ns.len() != k {
            return Err(LadError::Format(format!(
                "header has {} fields but rows have {k}",
                ns.len()
            )));
        }
    }
    let values = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    Ok((names, values))
}

/// Write a loss matrix as CSV with a header row and 17-significant-digit
/// values; `load_loss_matrix` recovers it bit-identically.
pub fn write_loss_matrix(z: &LossMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&z.model_names().join(","));
    out.push('\n');
    for i in 0..z.n() {
        for j in 0..z.num_models() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_f64(z.values()[(i, j)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| LadError::io(path.display().to_string(), e))
}

#[derive(Deserialize)]
struct MetaFile {
    names: Vec<String>,
    complexity: Vec<f64>,
    dims: Vec<u32>,
}

/// Load model metadata from a JSON object
/// `{"names":[...], "complexity":[...], "dims":[...]}` with equal-length
/// arrays.
pub fn load_model_meta(path: impl AsRef<Path>) -> Result<ModelMeta> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| LadError::io(path.display().to_string(), e))?;
    let raw: MetaFile =
        serde_json::from_str(&text).map_err(|e| LadError::Format(format!("bad meta JSON: {e}")))?;
    ModelMeta::new(raw.names, raw.complexity, raw.dims)
}
