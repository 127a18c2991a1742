//! Dense matrices over F_q.
//!
//! Everything here is exact, so elimination pivots on the first nonzero entry
//! in a column. Matrices are never mutated after construction; elimination
//! routines work on private copies.

use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldVector, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("indices must be strictly increasing")]
    IndicesNotIncreasing,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        Self::from_fn(field, n, n, |i, j| u64::from(i == j))
    }

    /// Entries are reduced modulo q.
    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut entry: impl FnMut(usize, usize) -> u64,
    ) -> Self {
        let q = field.modulus();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(entry(i, j) % q);
            }
        }
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch(format!(
                "ragged rows: expected {cols} columns, found {}",
                bad.len()
            )));
        }
        Ok(Self::from_fn(field, rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn from_row_major(
        field: PrimeField,
        rows: usize,
        cols: usize,
        entries: &[u64],
    ) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self::from_fn(field, rows, cols, |i, j| {
            entries[i * cols + j]
        }))
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.field.elem(self.data[i * self.cols + j])
    }

    pub fn raw(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn row_major(&self) -> &[u64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> FieldVector {
        FieldVector::from_values(self.field, (0..self.rows).map(|i| self.raw(i, j)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field, self.cols, self.rows, |i, j| self.raw(j, i))
    }

    pub fn mul_vec(&self, v: &FieldVector) -> Result<FieldVector, LinalgError> {
        if v.field() != self.field {
            return Err(FieldError::ModulusMismatch {
                left: self.field.modulus(),
                right: v.field().modulus(),
            }
            .into());
        }
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let f = self.field;
        let out = (0..self.rows).map(|i| {
            self.row(i)
                .iter()
                .zip(v.values())
                .fold(0, |acc, (&a, &b)| f.add_raw(acc, f.mul_raw(a, b)))
        });
        Ok(FieldVector::from_values(f, out))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        Ok(Self::from_fn(f, self.rows, other.cols, |i, j| {
            (0..self.cols).fold(0, |acc, t| {
                f.add_raw(acc, f.mul_raw(self.raw(i, t), other.raw(t, j)))
            })
        }))
    }

    fn check_field(&self, other: &Self) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(FieldError::ModulusMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            }
            .into());
        }
        Ok(())
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack<'a>(
        field: PrimeField,
        cols: usize,
        parts: impl IntoIterator<Item = &'a FieldMatrix>,
    ) -> Result<Self, LinalgError> {
        let mut data = Vec::new();
        let mut rows = 0;
        for part in parts {
            if part.field != field {
                return Err(FieldError::ModulusMismatch {
                    left: field.modulus(),
                    right: part.field.modulus(),
                }
                .into());
            }
            if part.cols != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "cannot stack a {}-column block onto {cols} columns",
                    part.cols
                )));
            }
            data.extend_from_slice(&part.data);
            rows += part.rows;
        }
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> Result<Self, LinalgError> {
        check_indices(row_idx, self.rows)?;
        check_indices(col_idx, self.cols)?;
        Ok(Self::from_fn(
            self.field,
            row_idx.len(),
            col_idx.len(),
            |i, j| self.raw(row_idx[i], col_idx[j]),
        ))
    }

    /// Row rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut work = self.data.clone();
        eliminate(self.field, &mut work, self.rows, self.cols)
    }

    pub fn is_nonsingular(&self) -> Result<bool, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rank() == self.rows)
    }

    pub fn determinant(&self) -> Result<FieldElement, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let f = self.field;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1 % f.modulus();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| a[r * n + c] != 0) else {
                return Ok(f.zero());
            };
            if p != c {
                for j in 0..n {
                    a.swap(p * n + j, c * n + j);
                }
                det = f.neg_raw(det);
            }
            let pivot = a[c * n + c];
            det = f.mul_raw(det, pivot);
            let pinv = f.inv_raw(pivot).expect("pivot is nonzero");
            for r in c + 1..n {
                let factor = f.mul_raw(a[r * n + c], pinv);
                if factor == 0 {
                    continue;
                }
                for j in c..n {
                    let sub = f.mul_raw(factor, a[c * n + j]);
                    a[r * n + j] = f.sub_raw(a[r * n + j], sub);
                }
            }
        }
        Ok(f.elem(det))
    }

    /// Solves `self · x = b` for a square nonsingular `self`.
    pub fn solve(&self, b: &FieldVector) -> Result<FieldVector, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if b.field() != self.field {
            return Err(FieldError::ModulusMismatch {
                left: self.field.modulus(),
                right: b.field().modulus(),
            }
            .into());
        }
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.rows
            )));
        }
        let f = self.field;
        let n = self.rows;
        let w = n + 1;
        // Augmented [A | b].
        let mut aug = Vec::with_capacity(n * w);
        for i in 0..n {
            aug.extend_from_slice(self.row(i));
            aug.push(b.values()[i]);
        }
        for c in 0..n {
            let p = (c..n)
                .find(|&r| aug[r * w + c] != 0)
                .ok_or(LinalgError::Singular)?;
            if p != c {
                for j in 0..w {
                    aug.swap(p * w + j, c * w + j);
                }
            }
            let pinv = f.inv_raw(aug[c * w + c]).expect("pivot is nonzero");
            for j in c..w {
                aug[c * w + j] = f.mul_raw(aug[c * w + j], pinv);
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let factor = aug[r * w + c];
                if factor == 0 {
                    continue;
                }
                for j in c..w {
                    let sub = f.mul_raw(factor, aug[c * w + j]);
                    aug[r * w + j] = f.sub_raw(aug[r * w + j], sub);
                }
            }
        }
        Ok(FieldVector::from_values(f, (0..n).map(|i| aug[i * w + n])))
    }
}

fn check_indices(idx: &[usize], bound: usize) -> Result<(), LinalgError> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= bound) {
        return Err(LinalgError::IndexOutOfRange { index: bad, bound });
    }
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LinalgError::IndicesNotIncreasing);
    }
    Ok(())
}

/// Reduces `a` (row-major, `rows x cols`) to row echelon form in place and
/// returns the rank.
fn eliminate(f: PrimeField, a: &mut [u64], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r * cols + c] != 0) else {
            continue;
        };
        if p != rank {
            for j in 0..cols {
                a.swap(p * cols + j, rank * cols + j);
            }
        }
        let pinv = f.inv_raw(a[rank * cols + c]).expect("pivot is nonzero");
        for j in c..cols {
            a[rank * cols + j] = f.mul_raw(a[rank * cols + j], pinv);
        }
        for r in rank + 1..rows {
            let factor = a[r * cols + c];
            if factor == 0 {
                continue;
            }
            for j in c..cols {
                let sub = f.mul_raw(factor, a[rank * cols + j]);
                a[r * cols + j] = f.sub_raw(a[r * cols + j], sub);
            }
        }
        rank += 1;
    }
    rank
}
