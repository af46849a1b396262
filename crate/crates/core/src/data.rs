//! Sparse datasets: column-major storage, LIBSVM ingestion and synthetic
//! instance generation.
//!
//! Samples are stored as *columns* of a `d × n` matrix `A`, so that the
//! coordinate ascent kernel can read `Aᵢ` contiguously.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("empty input")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Compressed sparse column matrix with `d` rows and `n` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumnMatrix {
    d: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseColumnMatrix {
    /// Builds a matrix from per-column `(row, value)` lists.
    ///
    /// Row indices must be in `[0, d)` and strictly increasing within each column.
    pub fn from_columns(d: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self, DataError> {
        if d == 0 {
            return Err(DataError::InvalidMatrix("row count must be at least 1".into()));
        }
        if columns.is_empty() {
            return Err(DataError::InvalidMatrix("column count must be at least 1".into()));
        }
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for (j, col) in columns.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (r, val) in col {
                if r >= d {
                    return Err(DataError::InvalidMatrix(format!(
                        "column {j}: row index {r} out of range for {d} rows"
                    )));
                }
                if prev.is_some_and(|p| r <= p) {
                    return Err(DataError::InvalidMatrix(format!(
                        "column {j}: row indices not strictly increasing at {r}"
                    )));
                }
                if !val.is_finite() {
                    return Err(DataError::InvalidMatrix(format!(
                        "column {j}: non-finite value at row {r}"
                    )));
                }
                prev = Some(r);
                row_idx.push(r);
                values.push(val);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self { d, col_ptr, row_idx, values })
    }

    /// Number of rows (features).
    pub fn nrows(&self) -> usize {
        self.d
    }

    /// Number of columns (samples).
    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column_nnz(&self, i: usize) -> usize {
        self.col_ptr[i + 1] - self.col_ptr[i]
    }

    /// Row indices and values of column `i`.
    ///
    /// # Panics
    /// If `i >= ncols()`.
    #[inline]
    pub fn column(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    fn check_access(&self, i: usize, w: &[f64]) -> Result<(), DataError> {
        if i >= self.ncols() {
            return Err(DataError::IndexOutOfRange { index: i, len: self.ncols() });
        }
        if w.len() != self.d {
            return Err(DataError::DimensionMismatch { expected: self.d, got: w.len() });
        }
        Ok(())
    }

    /// `Aᵢᵀw`.
    pub fn column_dot(&self, i: usize, w: &[f64]) -> Result<f64, DataError> {
        self.check_access(i, w)?;
        Ok(self.dot(i, w))
    }

    /// `w += c·Aᵢ`.
    pub fn add_scaled_column(&self, i: usize, c: f64, w: &mut [f64]) -> Result<(), DataError> {
        self.check_access(i, w)?;
        self.axpy(i, c, w);
        Ok(())
    }

    /// Unchecked-length variant of [`column_dot`](Self::column_dot) for hot loops.
    ///
    /// # Panics
    /// On an out-of-range column or a short `w`.
    #[inline]
    pub fn dot(&self, i: usize, w: &[f64]) -> f64 {
        let (rows, vals) = self.column(i);
        rows.iter().zip(vals).map(|(&r, &v)| v * w[r]).sum()
    }

    /// Unchecked-length variant of [`add_scaled_column`](Self::add_scaled_column).
    #[inline]
    pub fn axpy(&self, i: usize, c: f64, w: &mut [f64]) {
        if c == 0.0 {
            return;
        }
        let (rows, vals) = self.column(i);
        for (&r, &v) in rows.iter().zip(vals) {
            w[r] += c * v;
        }
    }

    /// `Aα` as a dense `d`-vector.
    pub fn mul(&self, alpha: &[f64]) -> Vec<f64> {
        assert_eq!(alpha.len(), self.ncols());
        let mut out = vec![0.0; self.d];
        for (i, &a) in alpha.iter().enumerate() {
            self.axpy(i, a, &mut out);
        }
        out
    }

    /// `Aᵀw` as a dense `n`-vector.
    pub fn transpose_mul(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.d);
        (0..self.ncols()).map(|i| self.dot(i, w)).collect()
    }

    /// Column `i` as a dense `d`-vector.
    pub fn densify_column(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        let (rows, vals) = self.column(i);
        for (&r, &v) in rows.iter().zip(vals) {
            out[r] = v;
        }
        out
    }
}

/// `vᵢ = AᵢᵀAᵢ` for every column.
pub fn squared_column_norms(matrix: &SparseColumnMatrix) -> Vec<f64> {
    (0..matrix.ncols())
        .map(|i| matrix.column(i).1.iter().map(|v| v * v).sum())
        .collect()
}

/// Immutable training set: matrix, labels and cached squared column norms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    matrix: SparseColumnMatrix,
    labels: Vec<f64>,
    norms: Vec<f64>,
}

impl Dataset {
    pub fn new(matrix: SparseColumnMatrix, labels: Vec<f64>) -> Result<Self, DataError> {
        if labels.len() != matrix.ncols() {
            return Err(DataError::DimensionMismatch {
                expected: matrix.ncols(),
                got: labels.len(),
            });
        }
        if let Some(j) = labels.iter().position(|y| !y.is_finite()) {
            return Err(DataError::InvalidMatrix(format!("label {j} is not finite")));
        }
        let norms = squared_column_norms(&matrix);
        Ok(Self { matrix, labels, norms })
    }

    pub fn matrix(&self) -> &SparseColumnMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Squared column norms `v`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    /// Number of features.
    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same features, different labels.
    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Self, DataError> {
        Self::new(self.matrix.clone(), labels)
    }
}

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).
///
/// `dim` overrides the inferred feature count, which otherwise is the largest
/// index seen. Each non-empty line becomes one column.
pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset, DataError> {
    let mut columns = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line,
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let perr = |message: String| DataError::Parse { line: lineno, message };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(perr(format!("non-finite label {label_tok:?}")));
        }

        let mut col = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("bad feature index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| perr(format!("bad feature value {val:?}")))?;
            if idx == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            if idx == prev {
                return Err(perr(format!("duplicate feature index {idx}")));
            }
            if idx < prev {
                return Err(perr(format!("feature index {idx} follows {prev}")));
            }
            if !val.is_finite() {
                return Err(perr(format!("non-finite value for feature {idx}")));
            }
            prev = idx;
            col.push((idx - 1, val));
        }
        max_index = max_index.max(prev);
        columns.push(col);
        labels.push(label);
    }

    if columns.is_empty() {
        return Err(DataError::Empty);
    }
    let d = match dim {
        Some(d) if d < max_index => {
            return Err(DataError::InvalidMatrix(format!(
                "dimension override {d} is smaller than the largest index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index.max(1),
    };
    let matrix = SparseColumnMatrix::from_columns(d, columns)?;
    Dataset::new(matrix, labels)
}

pub fn parse_libsvm_str(text: &str, dim: Option<usize>) -> Result<Dataset, DataError> {
    parse_libsvm(text.as_bytes(), dim)
}

/// Writes `dataset` in LIBSVM format. Values use shortest round-trip formatting.
pub fn write_libsvm<W: Write>(dataset: &Dataset, mut out: W) -> Result<(), DataError> {
    let mut line = String::new();
    for i in 0..dataset.n() {
        line.clear();
        write!(line, "{}", dataset.labels[i]).unwrap();
        let (rows, vals) = dataset.matrix.column(i);
        for (&r, &v) in rows.iter().zip(vals) {
            write!(line, " {}:{}", r + 1, v).unwrap();
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// `y = Aᵀw̄ + noise`.
    Regression,
    /// `y = sign(Aᵀw̄ + noise)` in `{-1, +1}`.
    Binary,
}

/// Parameters for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Fraction of nonzero rows per column, in `(0, 1]`.
    pub density: f64,
    /// Ratio between the largest and smallest column norm.
    pub norm_spread: f64,
    pub label_mode: LabelMode,
    pub seed: u64,
}

const LABEL_NOISE: f64 = 0.1;

/// Generates a random instance with heterogeneous column norms.
///
/// Each column has `⌈density·d⌉` nonzeros at uniformly chosen rows with
/// standard normal values, rescaled so that `‖Aᵢ‖ = spread^(i/(n-1))`.
/// Randomness comes from ChaCha8 seeded with `seed`, so output is reproducible.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset, DataError> {
    let SyntheticSpec { n, d, density, norm_spread, label_mode, seed } = *spec;
    if n == 0 || d == 0 {
        return Err(DataError::InvalidSynthetic("n and d must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(DataError::InvalidSynthetic(format!("density {density} not in (0, 1]")));
    }
    if density * (d as f64) < 1.0 {
        return Err(DataError::InvalidSynthetic(format!(
            "density {density} leaves fewer than one nonzero per column for d = {d}"
        )));
    }
    if !(norm_spread > 0.0 && norm_spread.is_finite()) {
        return Err(DataError::InvalidSynthetic(format!(
            "norm spread {norm_spread} must be positive"
        )));
    }

    let per_col = ((density * d as f64).ceil() as usize).min(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let mut rows = index::sample(&mut rng, d, per_col).into_vec();
        rows.sort_unstable();
        let mut vals: Vec<f64> = loop {
            let vals: Vec<f64> = (0..per_col).map(|_| rng.sample(StandardNormal)).collect();
            if vals.iter().any(|v: &f64| *v != 0.0) {
                break vals;
            }
        };
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = if n == 1 {
            1.0
        } else {
            norm_spread.powf(i as f64 / (n - 1) as f64)
        };
        for v in &mut vals {
            *v *= target / norm;
        }
        columns.push(rows.into_iter().zip(vals).collect::<Vec<_>>());
    }
    let matrix = SparseColumnMatrix::from_columns(d, columns)?;

    let planted: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let labels = matrix
        .transpose_mul(&planted)
        .into_iter()
        .map(|z| {
            let noise: f64 = rng.sample(StandardNormal);
            let y = z + LABEL_NOISE * noise;
            match label_mode {
                LabelMode::Regression => y,
                LabelMode::Binary => {
                    if y >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        })
        .collect();
    Dataset::new(matrix, labels)
}
