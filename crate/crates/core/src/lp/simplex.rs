//! Two-phase revised simplex over equality-form LPs.
//!
//! `min cost^T y  s.t.  A y = b,  y_j >= 0 or free`.

use thiserror::Error;

use super::factor::{BasisFactor, DenseLu};
use super::matrix::SparseMatrix;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-9;
/// Smallest pivot element accepted in ratio tests.
pub const PIVOT_TOL: f64 = 1e-10;
/// Number of basis updates between refactorizations.
pub const REFACTOR_EVERY: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("problem has no variables")]
    EmptyProblem,
}

/// Lower bound of a standard-form variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBound {
    Zero,
    Free,
}

/// `min cost^T y  s.t.  a y = b` with per-variable lower bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<LowerBound>,
}

impl StandardLp {
    /// All variables nonnegative.
    pub fn new(a: SparseMatrix, b: Vec<f64>, cost: Vec<f64>) -> Self {
        let n = a.ncols();
        StandardLp {
            a,
            b,
            cost,
            lower: vec![LowerBound::Zero; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn check(&self) -> Result<(), LpError> {
        if self.b.len() != self.a.nrows() {
            return Err(LpError::DimensionMismatch(format!(
                "b has {} entries for {} rows",
                self.b.len(),
                self.a.nrows()
            )));
        }
        if self.cost.len() != self.a.ncols() || self.lower.len() != self.a.ncols() {
            return Err(LpError::DimensionMismatch(format!(
                "cost/bounds have {}/{} entries for {} columns",
                self.cost.len(),
                self.lower.len(),
                self.a.ncols()
            )));
        }
        if self.b.iter().chain(&self.cost).any(|v| !v.is_finite()) {
            return Err(LpError::NumericalFailure("non-finite data".into()));
        }
        Ok(())
    }
}

/// Basic columns (one per kept row, in factorization order) plus the rows
/// found linearly dependent on the others.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub dropped_rows: Vec<usize>,
}

impl Basis {
    /// Rows that carry a basic column, in increasing order.
    pub fn kept_rows(&self, nrows: usize) -> Vec<usize> {
        (0..nrows).filter(|i| !self.dropped_rows.contains(i)).collect()
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.basic.contains(&j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    /// An optimal basic solution was found.
    Optimal,
    /// The objective is unbounded below; `ray` holds a descent direction.
    Unbounded,
    /// No feasible point exists; `farkas` holds a certificate.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub status: SimplexStatus,
    /// Last basic solution (feasible unless infeasible).
    pub x: Vec<f64>,
    pub objective: f64,
    pub basis: Basis,
    /// Row multipliers `y` with `A^T y + d = cost`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// `A r = 0`, `r` respects the sign constraints and `cost^T r < 0`.
    pub ray: Option<Vec<f64>>,
    /// `pi^T A_j >= 0` (`= 0` for free columns) and `pi^T b < 0`.
    pub farkas: Option<Vec<f64>>,
    pub pivots: usize,
}

/// Solves `lp`, warm-starting from `start` when it is a usable basis.
pub fn solve(lp: &StandardLp, start: Option<&Basis>) -> Result<SimplexOutcome, LpError> {
    lp.check()?;
    if let Some(basis) = start {
        if let Some(out) = warm_solve(lp, basis)? {
            return Ok(out);
        }
    }
    cold_solve(lp)
}

enum PrimalEnd {
    Optimal,
    Unbounded { j: usize, dir: f64, alpha: Vec<f64> },
}

enum DualEnd {
    Feasible,
    Infeasible(Vec<f64>),
    GaveUp,
}

struct Engine<'a> {
    lp: &'a StandardLp,
    m: usize,
    n: usize,
    art_sign: Vec<f64>,
    cost: Vec<f64>,
    basic: Vec<usize>,
    pos_of: Vec<Option<usize>>,
    xb: Vec<f64>,
    factor: DenseLu,
    pivots: usize,
    degenerate_streak: usize,
    bland: bool,
    phase_one: bool,
}

impl<'a> Engine<'a> {
    fn new(lp: &'a StandardLp, art_sign: Vec<f64>, basic: Vec<usize>) -> Self {
        let m = lp.nrows();
        let n = lp.ncols();
        let mut pos_of = vec![None; n + m];
        for (i, &j) in basic.iter().enumerate() {
            pos_of[j] = Some(i);
        }
        Engine {
            lp,
            m,
            n,
            art_sign,
            cost: vec![0.0; n + m],
            basic,
            pos_of,
            xb: vec![0.0; m],
            factor: DenseLu::new(),
            pivots: 0,
            degenerate_streak: 0,
            bland: false,
            phase_one: false,
        }
    }

    fn is_art(&self, j: usize) -> bool {
        j >= self.n
    }

    fn is_free(&self, j: usize) -> bool {
        j < self.n && self.lp.lower[j] == LowerBound::Free
    }

    fn dense_col(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        if self.is_art(j) {
            v[j - self.n] = self.art_sign[j - self.n];
        } else {
            for &(i, a) in self.lp.a.col(j) {
                v[i] += a;
            }
        }
        v
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if self.is_art(j) {
            self.art_sign[j - self.n] * y[j - self.n]
        } else {
            self.lp.a.col_dot(j, y)
        }
    }

    fn refactor(&mut self) -> bool {
        let cols: Vec<Vec<f64>> = self.basic.iter().map(|&j| self.dense_col(j)).collect();
        if !self.factor.factorize(&cols) {
            return false;
        }
        let mut xb = self.lp.b.clone();
        self.factor.ftran(&mut xb);
        self.xb = xb;
        true
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.cost[j] - self.col_dot(j, y)
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, y: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            if self.pos_of[j].is_some() {
                continue;
            }
            let d = self.reduced_cost(j, y);
            let (score, dir) = if d < -OPT_TOL {
                (-d, 1.0)
            } else if self.is_free(j) && d > OPT_TOL {
                (d, -1.0)
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|b| score > b.1) {
                best = Some((j, score, dir));
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    fn ftran_col(&self, j: usize) -> Vec<f64> {
        let mut a = self.dense_col(j);
        self.factor.ftran(&mut a);
        a
    }

    /// Ratio test for moving the entering variable in direction `dir`.
    /// Returns the leaving position and the step length.
    fn ratio(&self, alpha: &[f64], dir: f64) -> Option<(usize, f64)> {
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        for i in 0..self.m {
            let j = self.basic[i];
            let a = dir * alpha[i];
            if self.is_art(j) && !self.phase_one {
                // Artificials left in the basis after phase one are fixed at zero.
                if a.abs() > PIVOT_TOL {
                    cands.push((i, 0.0, a.abs()));
                }
                continue;
            }
            if self.is_free(j) || a <= PIVOT_TOL {
                continue;
            }
            cands.push((i, self.xb[i].max(0.0) / a, a));
        }
        if cands.is_empty() {
            return None;
        }
        if self.bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let pick = cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12 * (1.0 + min))
                .min_by_key(|c| self.basic[c.0])
                .unwrap();
            return Some((pick.0, pick.1));
        }
        // Harris two-pass: relax bounds, then prefer the largest pivot.
        let relaxed = cands
            .iter()
            .map(|&(i, r, a)| {
                if self.is_art(self.basic[i]) && !self.phase_one {
                    r
                } else {
                    (self.xb[i].max(0.0) + FEAS_TOL) / a
                }
            })
            .fold(f64::INFINITY, f64::min);
        let pick = cands
            .iter()
            .filter(|c| c.1 <= relaxed)
            .max_by(|x, y| x.2.partial_cmp(&y.2).unwrap())
            .unwrap();
        Some((pick.0, pick.1))
    }

    fn pivot(&mut self, j: usize, r: usize, alpha: &[f64], dir: f64, step: f64) -> Result<(), LpError> {
        for i in 0..self.m {
            self.xb[i] -= step * dir * alpha[i];
        }
        let leaving = self.basic[r];
        self.pos_of[leaving] = None;
        self.basic[r] = j;
        self.pos_of[j] = Some(r);
        self.xb[r] = step * dir;
        self.pivots += 1;
        if step <= 1e-12 {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
            self.bland = false;
        }
        if self.degenerate_streak > 2 * (self.m + self.n) {
            self.bland = true;
        }
        if (!self.factor.update(r, alpha) || self.factor.updates() >= REFACTOR_EVERY)
            && !self.refactor() {
                return Err(LpError::NumericalFailure(
                    "basis factorization broke down after refactorization".into(),
                ));
            }
        Ok(())
    }

    fn max_iters(&self) -> usize {
        50 * (self.m + self.n) + 5000
    }

    fn primal(&mut self) -> Result<PrimalEnd, LpError> {
        for _ in 0..self.max_iters() {
            let y = self.duals();
            let Some((j, dir)) = self.price(&y) else {
                return Ok(PrimalEnd::Optimal);
            };
            let alpha = self.ftran_col(j);
            match self.ratio(&alpha, dir) {
                None => return Ok(PrimalEnd::Unbounded { j, dir, alpha }),
                Some((r, step)) => self.pivot(j, r, &alpha, dir, step)?,
            }
        }
        Err(LpError::NumericalFailure("primal simplex iteration limit".into()))
    }

    fn primal_feasible(&self) -> bool {
        (0..self.m).all(|i| {
            let j = self.basic[i];
            if self.is_art(j) {
                self.xb[i].abs() <= FEAS_TOL
            } else {
                self.is_free(j) || self.xb[i] >= -FEAS_TOL
            }
        })
    }

    fn dual_feasible(&self, y: &[f64]) -> bool {
        (0..self.n).filter(|&j| self.pos_of[j].is_none()).all(|j| {
            let d = self.reduced_cost(j, y);
            d >= -FEAS_TOL && (!self.is_free(j) || d <= FEAS_TOL)
        })
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self) -> Result<DualEnd, LpError> {
        for _ in 0..self.max_iters() {
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let j = self.basic[i];
                if self.is_free(j) || self.is_art(j) {
                    continue;
                }
                if self.xb[i] < -FEAS_TOL && leave.is_none_or(|l| self.xb[i] < l.1) {
                    leave = Some((i, self.xb[i]));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(DualEnd::Feasible);
            };
            let mut rho = vec![0.0; self.m];
            rho[r] = 1.0;
            self.factor.btran(&mut rho);
            let y = self.duals();
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.n {
                if self.pos_of[j].is_some() {
                    continue;
                }
                let arj = self.col_dot(j, &rho);
                let ratio = if self.is_free(j) {
                    if arj.abs() <= PIVOT_TOL {
                        continue;
                    }
                    0.0
                } else {
                    if arj >= -PIVOT_TOL {
                        continue;
                    }
                    self.reduced_cost(j, &y).max(0.0) / -arj
                };
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => {
                        ratio < br - 1e-12 || (ratio <= br + 1e-12 && arj.abs() > ba)
                    }
                };
                if better {
                    best = Some((j, ratio, arj.abs()));
                }
            }
            let Some((j, _, _)) = best else {
                return Ok(DualEnd::Infeasible(rho));
            };
            let alpha = self.ftran_col(j);
            if alpha[r].abs() <= PIVOT_TOL {
                return Ok(DualEnd::GaveUp);
            }
            let step = self.xb[r] / alpha[r];
            // Move the entering variable by `step` (may be negative only for free columns).
            let (dir, len) = if step >= 0.0 { (1.0, step) } else { (-1.0, -step) };
            self.pivot(j, r, &alpha, dir, len)?;
        }
        Ok(DualEnd::GaveUp)
    }

    fn export_basis(&self) -> Basis {
        let mut basic = Vec::new();
        let mut dropped = Vec::new();
        for i in 0..self.m {
            let j = self.basic[i];
            if self.is_art(j) {
                dropped.push(i);
            } else {
                basic.push(j);
            }
        }
        Basis {
            basic,
            dropped_rows: dropped,
        }
    }

    fn primal_x(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &j) in self.basic.iter().enumerate() {
            if j < self.n {
                let mut v = self.xb[i];
                if !self.is_free(j) && v < 0.0 && v > -FEAS_TOL {
                    v = 0.0;
                }
                x[j] = v;
            }
        }
        x
    }

    fn outcome(&self, status: SimplexStatus) -> SimplexOutcome {
        let x = self.primal_x();
        let y = self.duals();
        let reduced_costs = (0..self.n).map(|j| self.reduced_cost(j, &y)).collect();
        let objective = match status {
            SimplexStatus::Optimal => x.iter().zip(&self.lp.cost).map(|(a, b)| a * b).sum(),
            SimplexStatus::Unbounded => f64::NEG_INFINITY,
            SimplexStatus::Infeasible => f64::INFINITY,
        };
        SimplexOutcome {
            status,
            x,
            objective,
            basis: self.export_basis(),
            duals: y,
            reduced_costs,
            ray: None,
            farkas: None,
            pivots: self.pivots,
        }
    }

    fn set_phase2_cost(&mut self) {
        self.cost = self.lp.cost.clone();
        self.cost.extend(std::iter::repeat_n(0.0, self.m));
    }

    /// Runs phase 2 from a primal-feasible basis.
    fn finish(&mut self) -> Result<SimplexOutcome, LpError> {
        self.set_phase2_cost();
        match self.primal()? {
            PrimalEnd::Optimal => Ok(self.outcome(SimplexStatus::Optimal)),
            PrimalEnd::Unbounded { j, dir, alpha } => {
                let mut ray = vec![0.0; self.n];
                ray[j] = dir;
                for (i, &b) in self.basic.iter().enumerate() {
                    if b < self.n {
                        ray[b] = -dir * alpha[i];
                    }
                }
                let mut out = self.outcome(SimplexStatus::Unbounded);
                out.ray = Some(ray);
                Ok(out)
            }
        }
    }
}

fn cold_solve(lp: &StandardLp) -> Result<SimplexOutcome, LpError> {
    let m = lp.nrows();
    let n = lp.ncols();
    let art_sign: Vec<f64> = lp.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut eng = Engine::new(lp, art_sign, (n..n + m).collect());
    eng.phase_one = true;
    for i in 0..m {
        eng.cost[n + i] = 1.0;
    }
    if !eng.refactor() {
        return Err(LpError::NumericalFailure("initial basis singular".into()));
    }
    match eng.primal()? {
        PrimalEnd::Optimal => {}
        PrimalEnd::Unbounded { .. } => {
            return Err(LpError::NumericalFailure("phase one unbounded".into()));
        }
    }
    let infeas: f64 = (0..m)
        .filter(|&i| eng.is_art(eng.basic[i]))
        .map(|i| eng.xb[i].abs())
        .sum();
    let bmax = lp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeas > FEAS_TOL * (1.0 + bmax) {
        let y = eng.duals();
        let farkas: Vec<f64> = y.iter().map(|v| -v).collect();
        let mut out = eng.outcome(SimplexStatus::Infeasible);
        out.farkas = Some(farkas);
        return Ok(out);
    }
    eng.phase_one = false;
    drive_out_artificials(&mut eng)?;
    let pivots_phase1 = eng.pivots;
    let mut out = eng.finish()?;
    out.pivots = out.pivots.max(pivots_phase1);
    Ok(out)
}

/// Pivots zero-level artificials out of the basis; those that cannot leave
/// mark linearly dependent rows.
fn drive_out_artificials(eng: &mut Engine) -> Result<(), LpError> {
    for r in 0..eng.m {
        if !eng.is_art(eng.basic[r]) {
            continue;
        }
        let mut rho = vec![0.0; eng.m];
        rho[r] = 1.0;
        eng.factor.btran(&mut rho);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..eng.n {
            if eng.pos_of[j].is_some() {
                continue;
            }
            let v = eng.lp.a.col_dot(j, &rho).abs();
            if v > 1e-7 && best.is_none_or(|b| v > b.1) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            // The artificial sits at zero level: the exchange is degenerate.
            let alpha = eng.ftran_col(j);
            eng.pivot(j, r, &alpha, 1.0, 0.0)?;
        }
    }
    // Re-synchronise the factorization after the clean-up pivots.
    if !eng.refactor() {
        return Err(LpError::NumericalFailure("singular basis after phase one".into()));
    }
    Ok(())
}

fn warm_solve(lp: &StandardLp, start: &Basis) -> Result<Option<SimplexOutcome>, LpError> {
    let m = lp.nrows();
    let n = lp.ncols();
    if start.basic.len() + start.dropped_rows.len() != m {
        return Ok(None);
    }
    let mut seen = vec![false; n];
    for &j in &start.basic {
        if j >= n || seen[j] {
            return Ok(None);
        }
        seen[j] = true;
    }
    if start.dropped_rows.iter().any(|&i| i >= m) {
        return Ok(None);
    }
    let mut basic = start.basic.clone();
    basic.extend(start.dropped_rows.iter().map(|&i| n + i));
    let mut eng = Engine::new(lp, vec![1.0; m], basic);
    if !eng.refactor() {
        return Ok(None);
    }
    eng.set_phase2_cost();
    if (0..m).any(|i| eng.is_art(eng.basic[i]) && eng.xb[i].abs() > FEAS_TOL) {
        return Ok(None);
    }
    if eng.primal_feasible() {
        return eng.finish().map(Some);
    }
    let y = eng.duals();
    if !eng.dual_feasible(&y) {
        return Ok(None);
    }
    match eng.dual()? {
        DualEnd::Feasible => eng.finish().map(Some),
        DualEnd::Infeasible(rho) => {
            let mut out = eng.outcome(SimplexStatus::Infeasible);
            out.farkas = Some(rho);
            Ok(Some(out))
        }
        DualEnd::GaveUp => Ok(None),
    }
}
