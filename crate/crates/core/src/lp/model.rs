//! Mixed-form LP models and their reduction to equality form.

use std::collections::{HashMap, HashSet};

use super::matrix::SparseMatrix;
use super::simplex::{self, Basis, LowerBound, LpError, SimplexStatus, StandardLp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Var {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub key: u64,
}

/// `min cost^T x + offset` over rows `a x (<=|=|>=) rhs` and bounds
/// `lower <= x <= upper` (either side may be infinite).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    pub offset: f64,
    next_key: u64,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Var { lower, upper, cost });
        self.vars.len() - 1
    }

    /// Adds a row; returns its index.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        let key = self.next_key;
        self.add_row_with_key(coeffs, sense, rhs, key)
    }

    /// Adds a row with a caller-chosen identity used for warm starts.
    pub fn add_row_with_key(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        key: u64,
    ) -> usize {
        for &(j, _) in &coeffs {
            assert!(j < self.vars.len(), "row references unknown variable {j}");
        }
        self.next_key = self.next_key.max(key + 1);
        self.rows.push(Row {
            coeffs,
            sense,
            rhs,
            key,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, cost: &[f64]) {
        assert_eq!(cost.len(), self.vars.len());
        for (v, &c) in self.vars.iter_mut().zip(cost) {
            v.cost = c;
        }
    }

    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xj) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let viol = match r.sense {
                Sense::Le => act - r.rhs,
                Sense::Ge => r.rhs - act,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset + self.vars.iter().zip(x).map(|(v, xj)| v.cost * xj).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarMap {
    Shift(f64),
    Flip(f64),
    Free,
}

/// Where each standard-form column and row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    maps: Vec<VarMap>,
    /// Variables with an upper-bound row, in order.
    bounded: Vec<usize>,
    /// Model rows carrying a slack column, in order.
    slacked: Vec<usize>,
    n_model_rows: usize,
    offset: f64,
}

impl Recovery {
    fn bound_slack_col(&self, n: usize, k: usize) -> usize {
        n + k
    }

    fn row_slack_col(&self, n: usize, k: usize) -> usize {
        n + self.bounded.len() + k
    }

    pub fn x_from_y(&self, y: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .enumerate()
            .map(|(j, m)| match *m {
                VarMap::Shift(l) => l + y[j],
                VarMap::Flip(u) => u - y[j],
                VarMap::Free => y[j],
            })
            .collect()
    }

    fn ray_from_y(&self, y: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .enumerate()
            .map(|(j, m)| match *m {
                VarMap::Flip(_) => -y[j],
                _ => y[j],
            })
            .collect()
    }
}

/// Equality-form reduction with slack columns for inequality rows and
/// finite upper bounds. Free variables stay free in the standard form.
pub fn standardize(model: &LpModel) -> Result<(StandardLp, Recovery), LpError> {
    let n = model.vars.len();
    if n == 0 {
        return Err(LpError::EmptyProblem);
    }
    let mut maps = Vec::with_capacity(n);
    let mut bounded = Vec::new();
    let mut offset = model.offset;
    let mut cost = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    for (j, v) in model.vars.iter().enumerate() {
        if v.lower.is_nan() || v.upper.is_nan() || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
            return Err(LpError::NumericalFailure(format!("bad bounds on variable {j}")));
        }
        let map = if v.lower.is_finite() {
            if v.upper.is_finite() {
                bounded.push(j);
            }
            VarMap::Shift(v.lower)
        } else if v.upper.is_finite() {
            VarMap::Flip(v.upper)
        } else {
            VarMap::Free
        };
        match map {
            VarMap::Shift(l) => {
                cost.push(v.cost);
                offset += v.cost * l;
                lower.push(LowerBound::Zero);
            }
            VarMap::Flip(u) => {
                cost.push(-v.cost);
                offset += v.cost * u;
                lower.push(LowerBound::Zero);
            }
            VarMap::Free => {
                cost.push(v.cost);
                lower.push(LowerBound::Free);
            }
        }
        maps.push(map);
    }
    let slacked: Vec<usize> = (0..model.rows.len())
        .filter(|&i| model.rows[i].sense != Sense::Eq)
        .collect();
    let nrows = model.rows.len() + bounded.len();
    let mut a = SparseMatrix::new(nrows, n);
    let mut b = Vec::with_capacity(nrows);
    for (i, row) in model.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        for &(j, coef) in &row.coeffs {
            match maps[j] {
                VarMap::Shift(l) => {
                    a.add(i, j, coef);
                    rhs -= coef * l;
                }
                VarMap::Flip(u) => {
                    a.add(i, j, -coef);
                    rhs -= coef * u;
                }
                VarMap::Free => a.add(i, j, coef),
            }
        }
        b.push(rhs);
    }
    for (k, &j) in bounded.iter().enumerate() {
        let i = model.rows.len() + k;
        a.add(i, j, 1.0);
        b.push(model.vars[j].upper - model.vars[j].lower);
    }
    for (k, _) in bounded.iter().enumerate() {
        a.push_col(vec![(model.rows.len() + k, 1.0)]);
        cost.push(0.0);
        lower.push(LowerBound::Zero);
    }
    for &i in &slacked {
        let s = if model.rows[i].sense == Sense::Le { 1.0 } else { -1.0 };
        a.push_col(vec![(i, s)]);
        cost.push(0.0);
        lower.push(LowerBound::Zero);
    }
    let lp = StandardLp { a, b, cost, lower };
    let rec = Recovery {
        maps,
        bounded,
        slacked,
        n_model_rows: model.rows.len(),
        offset,
    };
    Ok((lp, rec))
}

/// Basis of an `LpModel`, keyed by variable indices and row keys so that it
/// survives appending rows to the model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelBasis {
    pub basic_vars: Vec<usize>,
    pub basic_bound_slacks: Vec<usize>,
    pub basic_row_slacks: Vec<u64>,
    pub known_rows: Vec<u64>,
    pub known_bounds: Vec<usize>,
    pub dropped_rows: Vec<u64>,
    pub dropped_bounds: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per model row (Lagrangian `c^T x - y^T (A x - b)`).
    pub row_duals: Vec<f64>,
    /// Multipliers of finite upper bounds, per variable (zero when absent).
    pub upper_duals: Vec<f64>,
    pub ray: Option<Vec<f64>>,
    /// Certificate on model rows followed by upper-bound rows.
    pub farkas: Option<Vec<f64>>,
    pub basis: ModelBasis,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SimplexStatus::Optimal
    }
}

fn model_basis(model: &LpModel, rec: &Recovery, basis: &Basis) -> ModelBasis {
    let n = model.vars.len();
    let nb = rec.bounded.len();
    let mut mb = ModelBasis {
        known_rows: model.rows.iter().map(|r| r.key).collect(),
        known_bounds: rec.bounded.clone(),
        ..Default::default()
    };
    for &j in &basis.basic {
        if j < n {
            mb.basic_vars.push(j);
        } else if j < n + nb {
            mb.basic_bound_slacks.push(rec.bounded[j - n]);
        } else {
            mb.basic_row_slacks.push(model.rows[rec.slacked[j - n - nb]].key);
        }
    }
    for &i in &basis.dropped_rows {
        if i < rec.n_model_rows {
            mb.dropped_rows.push(model.rows[i].key);
        } else {
            mb.dropped_bounds.push(rec.bounded[i - rec.n_model_rows]);
        }
    }
    mb
}

fn standard_basis(model: &LpModel, rec: &Recovery, mb: &ModelBasis) -> Option<Basis> {
    let n = model.vars.len();
    let known_rows: HashSet<u64> = mb.known_rows.iter().copied().collect();
    let known_bounds: HashSet<usize> = mb.known_bounds.iter().copied().collect();
    let slack_rows: HashSet<u64> = mb.basic_row_slacks.iter().copied().collect();
    let slack_bounds: HashSet<usize> = mb.basic_bound_slacks.iter().copied().collect();
    let mut basic = Vec::new();
    for &j in &mb.basic_vars {
        if j >= n {
            return None;
        }
        basic.push(j);
    }
    for (k, &j) in rec.bounded.iter().enumerate() {
        if slack_bounds.contains(&j) || !known_bounds.contains(&j) {
            basic.push(rec.bound_slack_col(n, k));
        }
    }
    for (k, &i) in rec.slacked.iter().enumerate() {
        let key = model.rows[i].key;
        if slack_rows.contains(&key) || !known_rows.contains(&key) {
            basic.push(rec.row_slack_col(n, k));
        }
    }
    let row_index: HashMap<u64, usize> = model.rows.iter().enumerate().map(|(i, r)| (r.key, i)).collect();
    let mut dropped = Vec::new();
    for key in &mb.dropped_rows {
        dropped.push(*row_index.get(key)?);
    }
    for j in &mb.dropped_bounds {
        let k = rec.bounded.iter().position(|b| b == j)?;
        dropped.push(rec.n_model_rows + k);
    }
    Some(Basis {
        basic,
        dropped_rows: dropped,
    })
}

/// Solves a mixed-form model, optionally warm-starting from a basis of an
/// earlier version of the same model.
pub fn solve_model(model: &LpModel, warm: Option<&ModelBasis>) -> Result<LpSolution, LpError> {
    let (lp, rec) = standardize(model)?;
    let start = warm.and_then(|mb| standard_basis(model, &rec, mb));
    let out = simplex::solve(&lp, start.as_ref())?;
    let n = model.vars.len();
    let x = rec.x_from_y(&out.x[..n]);
    let objective = match out.status {
        SimplexStatus::Optimal => rec.offset + lp.cost.iter().zip(&out.x).map(|(c, v)| c * v).sum::<f64>(),
        SimplexStatus::Unbounded => f64::NEG_INFINITY,
        SimplexStatus::Infeasible => f64::INFINITY,
    };
    let row_duals = out.duals[..rec.n_model_rows].to_vec();
    let mut upper_duals = vec![0.0; n];
    for (k, &j) in rec.bounded.iter().enumerate() {
        upper_duals[j] = out.duals[rec.n_model_rows + k];
    }
    for (j, m) in rec.maps.iter().enumerate() {
        if let VarMap::Flip(_) = m {
            // Upper bound acts as the sign constraint of the flipped column.
            upper_duals[j] = -out.reduced_costs[j];
        }
    }
    let ray = out.ray.as_ref().map(|r| rec.ray_from_y(&r[..n]));
    Ok(LpSolution {
        status: out.status,
        x,
        objective,
        row_duals,
        upper_duals,
        ray,
        farkas: out.farkas.clone(),
        basis: model_basis(model, &rec, &out.basis),
        pivots: out.pivots,
    })
}
