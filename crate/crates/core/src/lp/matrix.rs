//! Column-compressed sparse matrix used for constraint data.

/// Sparse matrix stored column by column as `(row, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    nrows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            cols: vec![Vec::new(); ncols],
        }
    }

    /// Builds a matrix from row-major dense data, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = SparseMatrix::new(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.cols[j].push((i, v));
                }
            }
        }
        m
    }

    pub fn from_columns(nrows: usize, cols: Vec<Vec<(usize, f64)>>) -> Self {
        for col in &cols {
            for &(i, _) in col {
                assert!(i < nrows, "row index out of range");
            }
        }
        SparseMatrix { nrows, cols }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            cols: (0..n).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn push_col(&mut self, col: Vec<(usize, f64)>) {
        for &(i, _) in &col {
            assert!(i < self.nrows, "row index out of range");
        }
        self.cols.push(col);
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.nrows);
        if let Some(e) = self.cols[j].iter_mut().find(|e| e.0 == i) {
            e.1 += v;
        } else {
            self.cols[j].push((i, v));
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j]
            .iter()
            .filter(|e| e.0 == i)
            .map(|e| e.1)
            .sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols()]; self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                out[i][j] += v;
            }
        }
        out
    }

    /// `y^T A_j`.
    pub fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        self.cols[j].iter().map(|&(i, v)| v * y[i]).sum()
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut out = vec![0.0; self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] == 0.0 {
                continue;
            }
            for &(i, v) in col {
                out[i] += v * x[j];
            }
        }
        out
    }

    /// `A x` for a sparse `x`.
    pub fn mul_sparse(&self, x: &[(usize, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for &(j, xj) in x {
            for &(i, v) in &self.cols[j] {
                out[i] += v * xj;
            }
        }
        out
    }

    /// `A^T y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        (0..self.ncols()).map(|j| self.col_dot(j, y)).collect()
    }

    /// Keeps only the listed rows, renumbered in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut map = vec![usize::MAX; self.nrows];
        for (new, &old) in rows.iter().enumerate() {
            map[old] = new;
        }
        let cols = self
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .filter(|e| map[e.0] != usize::MAX)
                    .map(|&(i, v)| (map[i], v))
                    .collect()
            })
            .collect();
        SparseMatrix {
            nrows: rows.len(),
            cols,
        }
    }

    /// Transposed copy.
    pub fn transpose(&self) -> SparseMatrix {
        let mut cols = vec![Vec::new(); self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                cols[i].push((j, v));
            }
        }
        SparseMatrix {
            nrows: self.ncols(),
            cols,
        }
    }
}

/// Numerical rank of a set of dense vectors by Gaussian elimination with
/// partial pivoting.
pub fn rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    let mut rows: Vec<Vec<f64>> = vectors.to_vec();
    let Some(ncols) = rows.first().map(|r| r.len()) else {
        return 0;
    };
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let (piv, best) = (r..rows.len())
            .map(|i| (i, rows[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            continue;
        }
        rows.swap(r, piv);
        let pivot_row = rows[r].clone();
        for row in rows.iter_mut().skip(r + 1) {
            let f = row[c] / pivot_row[c];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *x -= f * p;
                }
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip() {
        let d = vec![vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 0.0]];
        let m = SparseMatrix::from_dense(&d);
        assert_eq!(m.to_dense(), d);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -2.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![1.0, -1.0, 2.0]);
        assert_eq!(m.transpose().to_dense()[2], vec![2.0, 0.0]);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let v = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 1.0]];
        assert_eq!(rank(&v, 1e-9), 2);
        assert_eq!(rank(&[], 1e-9), 0);
    }
}
