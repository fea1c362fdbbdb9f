//! Corner relaxations of the second-stage polyhedron and their epigraph
//! cones.
//!
//! The problem class is `min c^T x + d^T y  s.t.  T x + Q y = h, x in X,
//! y in Y` with `Y = {A y = b, y >= 0}`.

use thiserror::Error;

use crate::lp::{self, Basis, LpError, LpModel, Sense, SimplexStatus, SparseMatrix, StandardLp};
use crate::network::{cycle_ray, Network, SpanningTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CornerError {
    #[error("basis is primal infeasible")]
    InfeasibleBasis,
    #[error("objective is unbounded over Y")]
    UnboundedObjective,
    #[error("Y is empty")]
    InfeasibleY,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Data of the two-stage linear program.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    /// `p x n` linking matrix of the first-stage variables.
    pub t: SparseMatrix,
    /// `p x m` linking matrix of the second-stage variables.
    pub q: SparseMatrix,
    pub h: Vec<f64>,
    /// First-stage polyhedron; its objective is ignored.
    pub x_set: LpModel,
    /// Second-stage polyhedron `{A y = b, y >= 0}`; its cost is ignored.
    pub y_set: StandardLp,
    /// When present, `y_set` is the flow polytope of this network.
    pub y_network: Option<Network>,
}

impl ProblemData {
    pub fn validate(&self) -> Result<(), CornerError> {
        let n = self.c.len();
        let m = self.d.len();
        let p = self.h.len();
        let bad = |what: &str| Err(CornerError::DimensionMismatch(what.to_string()));
        if self.t.nrows() != p || self.t.ncols() != n {
            return bad("T");
        }
        if self.q.nrows() != p || self.q.ncols() != m {
            return bad("Q");
        }
        if self.x_set.num_vars() != n {
            return bad("X");
        }
        if self.y_set.ncols() != m {
            return bad("Y");
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    pub fn p(&self) -> usize {
        self.h.len()
    }

    /// `h - T x`.
    pub fn linking_rhs(&self, x: &[f64]) -> Vec<f64> {
        let tx = self.t.mul_vec(x);
        self.h.iter().zip(tx).map(|(h, v)| h - v).collect()
    }

    /// `Q^T alpha + alpha0 d`.
    pub fn y_objective(&self, alpha: &[f64], alpha0: f64) -> Vec<f64> {
        let qt = self.q.tr_mul_vec(alpha);
        qt.iter().zip(&self.d).map(|(a, d)| a + alpha0 * d).collect()
    }
}

/// `C = {apex} + cone(rays)` containing `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corner {
    pub apex: Vec<f64>,
    pub rays: Vec<Vec<(usize, f64)>>,
    /// Nonbasic column that generates each ray.
    pub ray_columns: Vec<usize>,
    pub basis: Basis,
}

impl Corner {
    pub fn ray_dense(&self, i: usize, m: usize) -> Vec<f64> {
        let mut r = vec![0.0; m];
        for &(j, v) in &self.rays[i] {
            r[j] += v;
        }
        r
    }
}

/// A point `(w, theta)` of the epigraph space.
#[derive(Debug, Clone, PartialEq)]
pub struct EpiPoint {
    pub w: Vec<f64>,
    pub theta: f64,
}

/// Image ray `(Q r, d^T r)` in sparse form.
#[derive(Debug, Clone, PartialEq)]
pub struct EpiRay {
    pub w: Vec<(usize, f64)>,
    pub theta: f64,
}

impl EpiRay {
    pub fn dot(&self, alpha: &[f64], alpha0: f64) -> f64 {
        self.w.iter().map(|&(i, v)| alpha[i] * v).sum::<f64>() + alpha0 * self.theta
    }

    pub fn dense(&self, p: usize) -> Vec<f64> {
        let mut v = vec![0.0; p + 1];
        for &(i, x) in &self.w {
            v[i] += x;
        }
        v[p] = self.theta;
        v
    }
}

/// `epi(f_C) = {apex} + cone(rays)`; the last ray is the vertical `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpigraphCone {
    pub apex: EpiPoint,
    pub rays: Vec<EpiRay>,
}

impl EpigraphCone {
    pub fn dim(&self) -> usize {
        self.apex.w.len()
    }

    pub fn vertical_index(&self) -> usize {
        self.rays.len() - 1
    }
}

/// Support function `inf { gamma^T x : x in P }` of a polyhedron given as an
/// LP model: `+inf` when empty, `-inf` when unbounded below.
pub fn support(set: &LpModel, gamma: &[f64]) -> Result<f64, LpError> {
    let mut model = set.clone();
    model.set_objective(gamma);
    model.offset = 0.0;
    let sol = lp::solve_model(&model, None)?;
    Ok(sol.objective)
}

/// Support function of `{A y = b, y >= 0}`.
pub fn support_standard(set: &StandardLp, gamma: &[f64]) -> Result<f64, LpError> {
    let mut lp = set.clone();
    lp.cost = gamma.to_vec();
    let out = lp::solve(&lp, None)?;
    Ok(out.objective)
}

/// Corner of `{A y = b, y >= 0}` at basis `B`: apex `B^{-1} b` and one ray
/// per nonbasic column `j` with `-B^{-1} A_j` on `B` and `1` at `j`.
pub fn corner_from_basis(y_set: &StandardLp, basis: &Basis) -> Result<Corner, CornerError> {
    let m = y_set.ncols();
    let kept = basis.kept_rows(y_set.nrows());
    if kept.len() != basis.basic.len() {
        return Err(CornerError::DimensionMismatch("basis size".into()));
    }
    let a = y_set.a.select_rows(&kept);
    let b: Vec<f64> = kept.iter().map(|&i| y_set.b[i]).collect();
    let cols: Vec<Vec<f64>> = basis
        .basic
        .iter()
        .map(|&j| {
            let mut v = vec![0.0; kept.len()];
            for &(i, x) in a.col(j) {
                v[i] += x;
            }
            v
        })
        .collect();
    use crate::lp::factor::{BasisFactor, DenseLu};
    let mut lu = DenseLu::new();
    if !lu.factorize(&cols) {
        return Err(CornerError::Lp(LpError::NumericalFailure("singular basis".into())));
    }
    let mut xb = b;
    lu.ftran(&mut xb);
    if xb.iter().any(|&v| v < -lp::FEAS_TOL) {
        return Err(CornerError::InfeasibleBasis);
    }
    let mut apex = vec![0.0; m];
    for (k, &j) in basis.basic.iter().enumerate() {
        apex[j] = if xb[k].abs() < 1e-12 { 0.0 } else { xb[k].max(0.0) };
    }
    let mut rays = Vec::new();
    let mut ray_columns = Vec::new();
    for j in 0..m {
        if basis.is_basic(j) {
            continue;
        }
        let mut alpha = vec![0.0; kept.len()];
        for &(i, x) in a.col(j) {
            alpha[i] += x;
        }
        lu.ftran(&mut alpha);
        let mut ray = vec![(j, 1.0)];
        for (k, &bj) in basis.basic.iter().enumerate() {
            if alpha[k].abs() > 1e-12 {
                ray.push((bj, -alpha[k]));
            }
        }
        ray.sort_by_key(|e| e.0);
        rays.push(ray);
        ray_columns.push(j);
    }
    Ok(Corner {
        apex,
        rays,
        ray_columns,
        basis: basis.clone(),
    })
}

/// Corner whose apex minimizes `gamma^T y` over `Y`, so that every ray has
/// nonnegative `gamma`-cost.
pub fn optimal_corner(data: &ProblemData, gamma: &[f64]) -> Result<Corner, CornerError> {
    let mut lp = data.y_set.clone();
    lp.cost = gamma.to_vec();
    let out = lp::solve(&lp, None)?;
    match out.status {
        SimplexStatus::Infeasible => return Err(CornerError::InfeasibleY),
        SimplexStatus::Unbounded => return Err(CornerError::UnboundedObjective),
        SimplexStatus::Optimal => {}
    }
    let corner = corner_from_basis(&data.y_set, &out.basis)?;
    for ray in &corner.rays {
        let cost: f64 = ray.iter().map(|&(j, v)| gamma[j] * v).sum();
        assert!(cost >= -1e-7 * (1.0 + gamma.iter().fold(0.0f64, |a, g| a.max(g.abs()))), "ray with negative cost {cost}");
    }
    Ok(corner)
}

/// Corner of a network flow polytope at a spanning-tree basis: tree flow as
/// apex and one cycle ray per non-tree arc (in arc order).
pub fn corner_from_tree(net: &Network, tree: &SpanningTree) -> Corner {
    let apex = tree.tree_flow(net);
    let mut rays = Vec::new();
    let mut ray_columns = Vec::new();
    for a in tree.nontree_arcs() {
        let mut r: Vec<(usize, f64)> = cycle_ray(net, tree, a)
            .expect("non-tree arc")
            .into_iter()
            .map(|(j, s)| (j, s as f64))
            .collect();
        r.sort_by_key(|e| e.0);
        rays.push(r);
        ray_columns.push(a);
    }
    Corner {
        apex,
        rays,
        ray_columns,
        basis: Basis {
            basic: tree.tree_arcs(),
            dropped_rows: Vec::new(),
        },
    }
}

/// Which polyhedron the value function minimizes over.
#[derive(Debug, Clone, Copy)]
pub enum Domain<'a> {
    Y,
    Corner(&'a Corner),
}

/// `f(w) = inf { d^T y : Q y = w, y in domain }`, with `+inf` when
/// infeasible and `-inf` when unbounded.
pub fn value_eval(data: &ProblemData, domain: Domain, w: &[f64]) -> Result<f64, CornerError> {
    data.validate()?;
    if w.len() != data.p() {
        return Err(CornerError::DimensionMismatch("w".into()));
    }
    let mut model = LpModel::new();
    match domain {
        Domain::Y => {
            let m = data.m();
            for j in 0..m {
                model.add_var(0.0, f64::INFINITY, data.d[j]);
            }
            let qt = data.q.transpose();
            for i in 0..data.p() {
                model.add_row(qt.col(i).to_vec(), Sense::Eq, w[i]);
            }
            let at = data.y_set.a.transpose();
            for i in 0..data.y_set.nrows() {
                model.add_row(at.col(i).to_vec(), Sense::Eq, data.y_set.b[i]);
            }
        }
        Domain::Corner(corner) => {
            let cone = epigraph_cone(data, corner);
            let k = cone.rays.len() - 1;
            for r in &cone.rays[..k] {
                model.add_var(0.0, f64::INFINITY, r.theta);
            }
            model.offset = cone.apex.theta;
            let mut rows = vec![Vec::new(); data.p()];
            for (j, r) in cone.rays[..k].iter().enumerate() {
                for &(i, v) in &r.w {
                    rows[i].push((j, v));
                }
            }
            if k == 0 {
                // A single point: feasible iff w equals the apex image.
                let ok = w.iter().zip(&cone.apex.w).all(|(a, b)| (a - b).abs() <= 1e-9);
                return Ok(if ok { cone.apex.theta } else { f64::INFINITY });
            }
            for (i, row) in rows.into_iter().enumerate() {
                model.add_row(row, Sense::Eq, w[i] - cone.apex.w[i]);
            }
        }
    }
    let sol = lp::solve_model(&model, None)?;
    Ok(sol.objective)
}

fn sparsify(v: Vec<f64>) -> Vec<(usize, f64)> {
    v.into_iter()
        .enumerate()
        .filter(|e| e.1.abs() > 1e-12)
        .collect()
}

/// `epi(f_C) = {(Q y*, d^T y*)} + cone({(Q r, d^T r)} u {(0, 1)})`.
pub fn epigraph_cone(data: &ProblemData, corner: &Corner) -> EpigraphCone {
    let apex = EpiPoint {
        w: data.q.mul_vec(&corner.apex),
        theta: corner.apex.iter().zip(&data.d).map(|(y, d)| y * d).sum(),
    };
    let mut rays: Vec<EpiRay> = corner
        .rays
        .iter()
        .map(|r| EpiRay {
            w: sparsify(data.q.mul_sparse(r)),
            theta: r.iter().map(|&(j, v)| data.d[j] * v).sum(),
        })
        .collect();
    rays.push(EpiRay {
        w: Vec::new(),
        theta: 1.0,
    });
    EpigraphCone { apex, rays }
}
