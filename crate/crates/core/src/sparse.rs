//! Minimal compressed-row storage shared by `R`, `R'` and the power iteration.

use nalgebra::DMatrix;

/// Square sparse matrix in CSR layout with column indices sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists. Columns are sorted per row.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < dim);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of one row as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `out = |A| x`, the element-wise absolute matrix applied to `x`.
    pub fn abs_mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(c, v)| v.abs() * x[c]).sum();
        }
    }

    /// Same matrix with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            vals: self.vals.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Same sparsity pattern with absolute values.
    pub fn abs(&self) -> Self {
        Self {
            vals: self.vals.iter().map(|v| v.abs()).collect(),
            ..self.clone()
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Dense `I - A_B` for the principal submatrix indexed by the sorted set `block`.
    pub fn identity_minus_principal(&self, block: &[usize]) -> DMatrix<f64> {
        let k = block.len();
        let mut m = DMatrix::identity(k, k);
        for (a, &i) in block.iter().enumerate() {
            for (j, v) in self.row(i) {
                if let Ok(b) = block.binary_search(&j) {
                    m[(a, b)] -= v;
                }
            }
        }
        m
    }

    /// True when the directed graph of the nonzero pattern has no cycle,
    /// in which case the matrix is nilpotent.
    pub fn pattern_is_acyclic(&self) -> bool {
        let mut indeg = vec![0usize; self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    indeg[j] += 1;
                }
            }
        }
        let mut stack: Vec<usize> = (0..self.dim).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = stack.pop() {
            seen += 1;
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        stack.push(j);
                    }
                }
            }
        }
        seen == self.dim
    }
}
