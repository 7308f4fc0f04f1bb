//! Observation masks for partially specified matrices.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// The set O of observed (row, col) index pairs of an n×p matrix.
///
/// Cells are held sorted in row-major order with duplicates removed, so
/// enumeration order is canonical no matter how the mask was assembled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    cells: Vec<(usize, usize)>,
}

impl ObservationMask {
    /// Build a mask from index pairs; out-of-range pairs are rejected.
    pub fn new(
        rows: usize,
        cols: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut cells: Vec<(usize, usize)> = pairs.into_iter().collect();
        for &(i, j) in &cells {
            if i >= rows || j >= cols {
                return Err(Error::invalid(format!(
                    "mask cell ({i}, {j}) out of range for a {rows}x{cols} matrix"
                )));
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(ObservationMask { rows, cols, cells })
    }

    /// The mask observing every cell.
    pub fn full(rows: usize, cols: usize) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                cells.push((i, j));
            }
        }
        ObservationMask { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells in canonical row-major order.
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells.binary_search(&(i, j)).is_ok()
    }

    /// True if the two masks share no cell.
    pub fn is_disjoint(&self, other: &ObservationMask) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.cells.iter().all(|&(i, j)| !large.contains(i, j))
    }

    /// Parse a mask from lines of `row,col` (0-based indices).
    pub fn read_pairs(r: impl Read, rows: usize, cols: usize) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut pairs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (a, b) = t
                .split_once(',')
                .ok_or_else(|| Error::parse(lineno + 1, "expected `row,col`"))?;
            let i: usize = a
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("bad row index {a:?}")))?;
            let j: usize = b
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("bad col index {b:?}")))?;
            pairs.push((i, j));
        }
        ObservationMask::new(rows, cols, pairs)
    }

    pub fn load(path: impl AsRef<Path>, rows: usize, cols: usize) -> Result<Self> {
        Self::read_pairs(std::fs::File::open(path)?, rows, cols)
    }

    pub fn write_pairs(&self, mut w: impl Write) -> Result<()> {
        for &(i, j) in &self.cells {
            writeln!(w, "{i},{j}")?;
        }
        Ok(())
    }
}
