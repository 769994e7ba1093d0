//! Minimal dense matrix plus a CSR adjacency application path.
//!
//! All accumulation runs in fixed index order, so results are reproducible
//! bit-for-bit, and the CSR path produces outputs identical to dense
//! application (skipping explicit zeros does not change IEEE sums).

use serde::{Deserialize, Serialize};

/// Row-major dense f64 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// self (r x k) * other (k x c).
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                let other_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self^T (k x r)^T=(r x k) ... returns self^T * other, shape (cols x other.cols).
    pub fn transposed_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "transposed_matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.at(k, i);
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                let other_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self * other^T, shape (rows x other.rows).
    pub fn matmul_transposed(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_transposed shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let mut acc = 0.0;
                for (a, b) in self.row(i).iter().zip(other.row(j)) {
                    acc += a * b;
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j);
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &x) in sums.iter_mut().zip(self.row(i)) {
                *s += x;
            }
        }
        sums
    }

    /// Append `other` column-wise: [self | other].
    pub fn hconcat(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "hconcat shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        out
    }

    pub fn add_row_bias(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for i in 0..self.rows {
            for (x, &b) in self.row_mut(i).iter_mut().zip(bias) {
                *x += b;
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect(),
        }
    }
}

/// Adjacency operator: dense for small graphs, CSR beyond
/// [`SPARSE_NODE_THRESHOLD`] nodes, with identical application semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Adjacency {
    Dense(DenseMatrix),
    Csr {
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

pub const SPARSE_NODE_THRESHOLD: usize = 10_000;

impl Adjacency {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], sparse: bool) -> Adjacency {
        if sparse {
            let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for &(i, j, v) in triplets {
                per_row[i].push((j, v));
            }
            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut col_idx = Vec::new();
            let mut values = Vec::new();
            row_ptr.push(0);
            for row in &mut per_row {
                row.sort_unstable_by_key(|&(j, _)| j);
                let mut last: Option<usize> = None;
                for &(j, v) in row.iter() {
                    if last == Some(j) {
                        *values.last_mut().unwrap() += v;
                    } else {
                        col_idx.push(j);
                        values.push(v);
                        last = Some(j);
                    }
                }
                row_ptr.push(col_idx.len());
            }
            Adjacency::Csr {
                n,
                row_ptr,
                col_idx,
                values,
            }
        } else {
            let mut m = DenseMatrix::zeros(n, n);
            for &(i, j, v) in triplets {
                *m.at_mut(i, j) += v;
            }
            Adjacency::Dense(m)
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Adjacency::Dense(m) => m.rows(),
            Adjacency::Csr { n, .. } => *n,
        }
    }

    /// A * X.
    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            Adjacency::Dense(a) => a.matmul(x),
            Adjacency::Csr {
                n,
                row_ptr,
                col_idx,
                values,
            } => {
                assert_eq!(*n, x.rows(), "adjacency apply shape mismatch");
                let mut out = DenseMatrix::zeros(*n, x.cols());
                for i in 0..*n {
                    for idx in row_ptr[i]..row_ptr[i + 1] {
                        let (j, v) = (col_idx[idx], values[idx]);
                        let out_row = &mut out.data[i * x.cols()..(i + 1) * x.cols()];
                        for (o, &b) in out_row.iter_mut().zip(x.row(j)) {
                            *o += v * b;
                        }
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Adjacency::Dense(m) => m.clone(),
            Adjacency::Csr {
                n,
                row_ptr,
                col_idx,
                values,
            } => {
                let mut m = DenseMatrix::zeros(*n, *n);
                for i in 0..*n {
                    for idx in row_ptr[i]..row_ptr[i + 1] {
                        *m.at_mut(i, col_idx[idx]) = values[idx];
                    }
                }
                m
            }
        }
    }
}
