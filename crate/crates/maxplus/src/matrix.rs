//! Dense matrices over the extended reals R ∪ {-∞}.
//!
//! One storage type carries every matrix in the crate: max-plus operands
//! (where `-inf` is the semiring zero), ordinary real factors, and data
//! matrices. Entries are `f64`; the bottom element is `f64::NEG_INFINITY`.
//! NaN and `+inf` are rejected wherever data enters the crate, and the
//! tropical kernels treat `-inf` by its algebraic rules rather than relying
//! on IEEE propagation, so no operation can manufacture a NaN.
//!
//! The text format is plain CSV, one matrix row per line, finite values
//! printed with 17 significant digits (enough for exact f64 round-trips) and
//! the literal token `-inf` for the bottom element.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::{Index, IndexMut};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense row-major matrix of extended reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// A rows×cols matrix filled with `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert!(!value.is_nan(), "NaN entry");
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// The all-zeros matrix (the identity for entrywise addition of noise,
    /// and the ordinary-algebra zero).
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    /// A matrix with every entry at the bottom element -∞.
    pub fn bottom(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, f64::NEG_INFINITY)
    }

    /// The n×n max-plus identity: 0 on the diagonal, -∞ elsewhere.
    pub fn maxplus_identity(n: usize) -> Self {
        let mut m = Self::bottom(n, n);
        for i in 0..n {
            m[(i, i)] = 0.0;
        }
        m
    }

    /// The n×n ordinary identity: 1 on the diagonal, 0 elsewhere.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                debug_assert!(!v.is_nan(), "NaN entry at ({i}, {j})");
                m.data[i * cols + j] = v;
            }
        }
        m
    }

    /// Build from a flat row-major slice. Rejects NaN and +inf.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (idx, &v) in data.iter().enumerate() {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::non_finite(format!(
                    "entry ({}, {}) is {v}; entries must be finite or -inf",
                    idx / cols,
                    idx % cols
                )));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from nested rows (test/doc convenience). Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data).expect("invalid entries")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(!v.is_nan(), "NaN entry");
        self.data[i * self.cols + j] = v;
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// True if every entry is finite (no -∞ anywhere).
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Entrywise map. The closure must not produce NaN.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Frobenius norm over all entries; requires every entry finite.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Ordinary matrix product; both operands must be fully finite.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if !self.is_finite() || !other.is_finite() {
            return Err(Error::non_finite(
                "ordinary matrix product requires finite entries",
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                let b_row = &other.data[l * other.cols..(l + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Maximum absolute entrywise difference; matrices must share shape.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Exact bit-level equality of shapes and entries.
    pub fn bits_eq(&self, other: &Matrix) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Serialize in the matrix text format.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut line = String::new();
        for i in 0..self.rows {
            line.clear();
            for j in 0..self.cols {
                if j > 0 {
                    line.push(',');
                }
                let v = self.at(i, j);
                if v == f64::NEG_INFINITY {
                    line.push_str("-inf");
                } else {
                    // 17 significant digits: exact f64 round-trip.
                    write!(line, "{v:.16e}").expect("write to String");
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Parse the matrix text format. Rejects NaN/+inf tokens and ragged rows.
    pub fn read_csv(r: impl Read) -> Result<Matrix> {
        let reader = BufReader::new(r);
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut count = 0usize;
            for field in trimmed.split(',') {
                data.push(parse_entry(field, lineno + 1)?);
                count += 1;
            }
            match cols {
                None => cols = Some(count),
                Some(c) if c != count => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("expected {c} fields, found {count}"),
                    ));
                }
                _ => {}
            }
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::parse(0, "empty matrix file"))?;
        Matrix::from_vec(rows, cols, data)
    }

    /// Read a matrix from a file path.
    pub fn load(path: impl AsRef<Path>) -> Result<Matrix> {
        Matrix::read_csv(std::fs::File::open(path)?)
    }

    /// Write a matrix to a file path.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)
    }
}

fn parse_entry(field: &str, lineno: usize) -> Result<f64> {
    let t = field.trim();
    if t == "-inf" {
        return Ok(f64::NEG_INFINITY);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::parse(
            lineno,
            format!("entry {v} is not finite (only the token -inf may be non-finite)"),
        )),
        Err(_) => Err(Error::parse(lineno, format!("cannot parse {t:?} as a number"))),
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}
