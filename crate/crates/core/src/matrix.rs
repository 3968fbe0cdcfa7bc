//! Feature-matrix plumbing: a uniform view over dense and sparse row
//! collections, used by resampling, the learners, and the artifact cache.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::sparse::SparseVector;
use crate::{Error, Result};

/// A collection of feature rows sharing one dimension, either dense or
/// sparse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMatrix {
    Dense { dim: usize, rows: Vec<Vec<f64>> },
    Sparse { dim: usize, rows: Vec<SparseVector> },
}

/// Borrowed view of one matrix row.
#[derive(Debug, Clone, Copy)]
pub enum RowRef<'a> {
    Dense(&'a [f64]),
    Sparse(&'a SparseVector),
}

impl FeatureMatrix {
    pub fn dense(rows: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite value in row {i}")));
            }
        }
        Ok(FeatureMatrix::Dense { dim, rows })
    }

    pub fn sparse(rows: Vec<SparseVector>, dim: usize) -> Result<Self> {
        for row in &rows {
            if row.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.dim(),
                });
            }
        }
        Ok(FeatureMatrix::Sparse { dim, rows })
    }

    pub fn n_rows(&self) -> usize {
        match self {
            FeatureMatrix::Dense { rows, .. } => rows.len(),
            FeatureMatrix::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMatrix::Dense { dim, .. } | FeatureMatrix::Sparse { dim, .. } => *dim,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureMatrix::Sparse { .. })
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        match self {
            FeatureMatrix::Dense { rows, .. } => RowRef::Dense(&rows[i]),
            FeatureMatrix::Sparse { rows, .. } => RowRef::Sparse(&rows[i]),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = RowRef<'_>> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// Append a row of matching representation and dimension.
    pub fn push(&mut self, row: OwnedRow) -> Result<()> {
        match (self, row) {
            (FeatureMatrix::Dense { dim, rows }, OwnedRow::Dense(values)) => {
                if values.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: values.len(),
                    });
                }
                rows.push(values);
                Ok(())
            }
            (FeatureMatrix::Sparse { dim, rows }, OwnedRow::Sparse(vector)) => {
                if vector.dim() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: vector.dim(),
                    });
                }
                rows.push(vector);
                Ok(())
            }
            _ => Err(Error::InvalidInput(
                "row representation does not match matrix representation".into(),
            )),
        }
    }
}

impl<'a> RowRef<'a> {
    pub fn dim(&self) -> usize {
        match self {
            RowRef::Dense(values) => values.len(),
            RowRef::Sparse(vector) => vector.dim(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        match self {
            RowRef::Dense(values) => values[index],
            RowRef::Sparse(vector) => vector.get(index),
        }
    }

    /// Iterate stored entries: every coordinate for dense rows, nonzero
    /// coordinates for sparse rows, index-ascending in both cases.
    pub fn iter_entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + 'a> {
        match self {
            RowRef::Dense(values) => Box::new(values.iter().copied().enumerate()),
            RowRef::Sparse(vector) => Box::new(vector.entries().iter().copied()),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            RowRef::Dense(values) => values.to_vec(),
            RowRef::Sparse(vector) => vector.to_dense(),
        }
    }

    pub fn to_owned_row(&self) -> OwnedRow {
        match self {
            RowRef::Dense(values) => OwnedRow::Dense(values.to_vec()),
            RowRef::Sparse(vector) => OwnedRow::Sparse((*vector).clone()),
        }
    }

    /// Squared Euclidean distance; both rows must share dimension and the
    /// sparse/sparse case uses a merge walk without densifying.
    pub fn squared_distance(&self, other: &RowRef<'_>) -> f64 {
        match (self, other) {
            (RowRef::Sparse(a), RowRef::Sparse(b)) => a.squared_distance(b),
            (RowRef::Dense(a), RowRef::Dense(b)) => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum(),
            (a, b) => {
                let mut total = 0.0;
                for i in 0..a.dim() {
                    let d = a.get(i) - b.get(i);
                    total += d * d;
                }
                total
            }
        }
    }
}

/// An owned matrix row in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum OwnedRow {
    Dense(Vec<f64>),
    Sparse(SparseVector),
}

impl OwnedRow {
    pub fn as_ref(&self) -> RowRef<'_> {
        match self {
            OwnedRow::Dense(values) => RowRef::Dense(values),
            OwnedRow::Sparse(vector) => RowRef::Sparse(vector),
        }
    }
}

/// Write a dense matrix as TSV, one row per line, using the shortest
/// round-trip float rendering.
pub fn write_dense_tsv<W: Write>(mut out: W, rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        let mut first = true;
        for value in row {
            if !first {
                write!(out, "\t")?;
            }
            write!(out, "{value}")?;
            first = false;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read a dense TSV matrix written by [`write_dense_tsv`].
pub fn read_dense_tsv<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut dim: Option<usize> = None;
    for line in input.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split('\t')
            .map(|f| {
                f.parse()
                    .map_err(|_| Error::Parse(format!("bad float {f:?}")))
            })
            .collect::<Result<_>>()?;
        if let Some(d) = dim {
            if row.len() != d {
                return Err(Error::Parse(format!(
                    "ragged matrix: row of width {} after width {}",
                    row.len(),
                    d
                )));
            }
        } else {
            dim = Some(row.len());
        }
        rows.push(row);
    }
    Ok(rows)
}
