//! Basis factorizations for the revised simplex method.

/// Factorization of a square basis matrix supporting forward and backward
/// solves plus rank-one column replacement.
pub trait BasisFactor {
    /// Factorizes the matrix whose columns are given densely.
    /// Returns `false` when the matrix is numerically singular.
    fn factorize(&mut self, cols: &[Vec<f64>]) -> bool;
    /// Solves `B x = v` in place.
    fn ftran(&self, v: &mut [f64]);
    /// Solves `B^T x = v` in place.
    fn btran(&self, v: &mut [f64]);
    /// Replaces basis column `pos`; `alpha` is `B^{-1} a` for the new column.
    /// Returns `false` if the update pivot is too small.
    fn update(&mut self, pos: usize, alpha: &[f64]) -> bool;
    /// Number of updates applied since the last factorization.
    fn updates(&self) -> usize;
}

const SINGULAR_TOL: f64 = 1e-11;
const ETA_PIVOT_TOL: f64 = 1e-12;

struct Eta {
    pos: usize,
    pivot: f64,
    col: Vec<(usize, f64)>,
}

/// Dense LU with partial pivoting and a product-form eta file.
#[derive(Default)]
pub struct DenseLu {
    n: usize,
    // Row-major packed L (unit diagonal, below) and U (on and above).
    lu: Vec<f64>,
    perm: Vec<usize>,
    etas: Vec<Eta>,
}

impl DenseLu {
    pub fn new() -> Self {
        Self::default()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.lu[i * self.n + j]
    }
}

impl BasisFactor for DenseLu {
    fn factorize(&mut self, cols: &[Vec<f64>]) -> bool {
        let n = cols.len();
        self.n = n;
        self.etas.clear();
        self.lu = vec![0.0; n * n];
        for (j, col) in cols.iter().enumerate() {
            debug_assert_eq!(col.len(), n);
            for (i, &v) in col.iter().enumerate() {
                self.lu[i * n + j] = v;
            }
        }
        self.perm = (0..n).collect();
        let scale = self.lu.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for k in 0..n {
            let mut piv = k;
            let mut best = self.lu[k * n + k].abs();
            for i in k + 1..n {
                let v = self.lu[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= SINGULAR_TOL * scale {
                return false;
            }
            if piv != k {
                for j in 0..n {
                    self.lu.swap(k * n + j, piv * n + j);
                }
                self.perm.swap(k, piv);
            }
            let d = self.lu[k * n + k];
            for i in k + 1..n {
                let f = self.lu[i * n + k] / d;
                if f == 0.0 {
                    continue;
                }
                self.lu[i * n + k] = f;
                for j in k + 1..n {
                    self.lu[i * n + j] -= f * self.lu[k * n + j];
                }
            }
        }
        true
    }

    fn ftran(&self, v: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| v[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.at(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.at(i, j) * x[j];
            }
            x[i] = s / self.at(i, i);
        }
        for eta in &self.etas {
            let xr = x[eta.pos] / eta.pivot;
            if xr != 0.0 {
                for &(i, a) in &eta.col {
                    x[i] -= a * xr;
                }
            }
            x[eta.pos] = xr;
        }
        v.copy_from_slice(&x);
    }

    fn btran(&self, v: &mut [f64]) {
        let n = self.n;
        let mut x = v.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = x[eta.pos];
            for &(i, a) in &eta.col {
                s -= a * x[i];
            }
            x[eta.pos] = s / eta.pivot;
        }
        // Solve U^T z = x, then L^T w = z, then undo the row permutation.
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.at(j, i) * x[j];
            }
            x[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.at(j, i) * x[j];
            }
            x[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            v[p] = x[k];
        }
    }

    fn update(&mut self, pos: usize, alpha: &[f64]) -> bool {
        let pivot = alpha[pos];
        if pivot.abs() < ETA_PIVOT_TOL {
            return false;
        }
        let col = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { pos, pivot, col });
        true
    }

    fn updates(&self) -> usize {
        self.etas.len()
    }
}
