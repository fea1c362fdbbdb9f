//! Benders master problem, normalized Benders cuts, Lagrangian cuts and the
//! corner Benders separation loop.

use thiserror::Error;

use crate::corner::{self, support_standard, CornerError, EpiPoint, ProblemData};
use crate::lp::{self, LpError, LpModel, ModelBasis, Sense, SimplexStatus};
use crate::polar::{
    self, Cut, CutKind, FullScan, InteriorPoint, PolarError, RaySelection, ReversePolarState, Verdict,
};

/// Minimum violation for a separated cut.
pub const VIOLATION_TOL: f64 = 1e-6;
/// Cuts whose coefficient vectors have cosine above `1 - DUP_TOL` are equal.
pub const DUP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BendersError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Corner(#[from] CornerError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error("Lagrangian dual needs T = -I and h = 0")]
    StructureUnsupported,
    #[error("support function is unbounded below")]
    UnboundedSupport,
    #[error("master problem is unbounded")]
    MasterUnbounded,
    #[error("master problem is infeasible")]
    MasterInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Seed,
    CornerFacet,
    CornerEquality,
    Fischetti,
    Lagrangian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterLogEntry {
    pub bound: f64,
    pub cuts: usize,
}

/// `min c^T x + theta` over the first-stage rows plus Benders cuts
/// `alpha^T (h - T x) + alpha0 theta >= beta`.
#[derive(Debug, Clone)]
pub struct MasterState {
    pub model: LpModel,
    pub cuts: Vec<(Cut, Provenance)>,
    pub log: Vec<MasterLogEntry>,
    basis: Option<ModelBasis>,
    n: usize,
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub x: Vec<f64>,
    pub theta: f64,
    pub bound: f64,
}

impl MasterState {
    pub fn new(data: &ProblemData, theta_lower: f64) -> Self {
        let mut model = data.x_set.clone();
        model.set_objective(&data.c);
        model.add_var(theta_lower, f64::INFINITY, 1.0);
        MasterState {
            model,
            cuts: Vec::new(),
            log: Vec::new(),
            basis: None,
            n: data.n(),
        }
    }

    pub fn theta_index(&self) -> usize {
        self.n
    }

    /// Adds a cut unless an equal one is present; returns whether it was new.
    pub fn add_cut(&mut self, data: &ProblemData, cut: &Cut, provenance: Provenance) -> bool {
        if self.cuts.iter().any(|(c, _)| c.cosine(cut) > 1.0 - DUP_TOL) {
            return false;
        }
        // alpha^T (h - T x) + alpha0 theta >= beta.
        let tta = data.t.tr_mul_vec(&cut.alpha);
        let mut coeffs: Vec<(usize, f64)> = tta
            .iter()
            .enumerate()
            .filter(|e| *e.1 != 0.0)
            .map(|(j, &v)| (j, -v))
            .collect();
        if cut.alpha0 != 0.0 {
            coeffs.push((self.n, cut.alpha0));
        }
        let ah: f64 = cut.alpha.iter().zip(&data.h).map(|(a, h)| a * h).sum();
        self.model.add_row(coeffs, Sense::Ge, cut.beta - ah);
        self.cuts.push((cut.clone(), provenance));
        true
    }

    pub fn solve(&mut self) -> Result<MasterSolution, BendersError> {
        let sol = lp::solve_model(&self.model, self.basis.as_ref())?;
        match sol.status {
            SimplexStatus::Unbounded => return Err(BendersError::MasterUnbounded),
            SimplexStatus::Infeasible => return Err(BendersError::MasterInfeasible),
            SimplexStatus::Optimal => {}
        }
        self.basis = Some(sol.basis.clone());
        self.log.push(MasterLogEntry {
            bound: sol.objective,
            cuts: self.cuts.len(),
        });
        Ok(MasterSolution {
            theta: sol.x[self.n],
            x: sol.x[..self.n].to_vec(),
            bound: sol.objective,
        })
    }
}

/// Normalized Benders separation: maximizes `pi^T w + nu^T b - alpha0 theta`
/// over `Q^T pi + A^T nu <= alpha0 d`, `||pi||_1 + alpha0 <= 1`. Returns the
/// cut `-pi^T w + alpha0 theta >= nu^T b` when violated.
pub fn separate_fischetti(data: &ProblemData, x: &[f64], theta: f64) -> Result<Option<Cut>, BendersError> {
    let w = data.linking_rhs(x);
    let p = data.p();
    let m = data.m();
    let rows_y = data.y_set.nrows();
    let mut model = LpModel::new();
    // pi = pi_plus - pi_minus; maximize -> minimize the negation.
    let pp: Vec<usize> = (0..p).map(|i| model.add_var(0.0, f64::INFINITY, -w[i])).collect();
    let pm: Vec<usize> = (0..p).map(|i| model.add_var(0.0, f64::INFINITY, w[i])).collect();
    let a0 = model.add_var(0.0, f64::INFINITY, theta);
    let nu: Vec<usize> = (0..rows_y)
        .map(|i| model.add_var(f64::NEG_INFINITY, f64::INFINITY, -data.y_set.b[i]))
        .collect();
    for j in 0..m {
        let mut coeffs = Vec::new();
        for &(i, v) in data.q.col(j) {
            coeffs.push((pp[i], v));
            coeffs.push((pm[i], -v));
        }
        for &(i, v) in data.y_set.a.col(j) {
            coeffs.push((nu[i], v));
        }
        coeffs.push((a0, -data.d[j]));
        model.add_row(coeffs, Sense::Le, 0.0);
    }
    let mut norm: Vec<(usize, f64)> = pp.iter().chain(&pm).map(|&v| (v, 1.0)).collect();
    norm.push((a0, 1.0));
    model.add_row(norm, Sense::Le, 1.0);
    let sol = lp::solve_model(&model, None)?;
    if sol.status != SimplexStatus::Optimal {
        return Err(BendersError::Lp(LpError::NumericalFailure(
            "normalized separation LP not optimal".into(),
        )));
    }
    if -sol.objective <= VIOLATION_TOL {
        return Ok(None);
    }
    let pi: Vec<f64> = (0..p).map(|i| sol.x[pp[i]] - sol.x[pm[i]]).collect();
    let beta: f64 = nu.iter().zip(&data.y_set.b).map(|(&v, b)| sol.x[v] * b).sum();
    Ok(Some(Cut {
        alpha: pi.iter().map(|v| -v).collect(),
        alpha0: sol.x[a0],
        beta,
        kind: CutKind::FischettiCut,
    }))
}

#[derive(Debug, Clone)]
pub struct LagrangianDual {
    pub alpha: Vec<f64>,
    pub value: f64,
    /// Optimal `y` of the substituted problem.
    pub y: Vec<f64>,
}

fn is_minus_identity(t: &lp::SparseMatrix) -> bool {
    t.nrows() == t.ncols()
        && (0..t.ncols()).all(|j| {
            let col = t.col(j);
            col.iter().filter(|e| e.1 != 0.0).count() == 1
                && col.iter().any(|&(i, v)| i == j && v == -1.0)
        })
}

/// Maximizes `-alpha^T h + sigma_X(rho + T^T alpha) + sigma_Y(Q^T alpha +
/// rho0 d)` when `T = -I`, `h = 0`: solves the problem with `x = Q y`
/// substituted and recovers `alpha = rho - G^T gamma` from the multipliers
/// `gamma` of the first-stage rows and bounds `G x (<=|=|>=) g`.
pub fn solve_lagrangian_dual(data: &ProblemData, rho: &[f64], rho0: f64) -> Result<LagrangianDual, BendersError> {
    data.validate()?;
    if data.p() == 0 {
        let sx = corner::support(&data.x_set, rho)?;
        let dy: Vec<f64> = data.d.iter().map(|v| rho0 * v).collect();
        let sy = support_standard(&data.y_set, &dy)?;
        return Ok(LagrangianDual {
            alpha: Vec::new(),
            value: sx + sy,
            y: Vec::new(),
        });
    }
    if !is_minus_identity(&data.t) || data.h.iter().any(|&v| v != 0.0) {
        return Err(BendersError::StructureUnsupported);
    }
    let m = data.m();
    let n = data.n();
    let cost = data.y_objective(rho, rho0);
    let mut model = LpModel::new();
    for &c in &cost {
        model.add_var(0.0, f64::INFINITY, c);
    }
    // Row i of G applied to Q y.
    let qt = data.q.transpose();
    let substitute = |coeffs: &[(usize, f64)]| -> Vec<(usize, f64)> {
        let mut dense = vec![0.0; m];
        for &(e, g) in coeffs {
            for &(k, qv) in qt.col(e) {
                dense[k] += g * qv;
            }
        }
        dense.into_iter().enumerate().filter(|e| e.1 != 0.0).collect()
    };
    // G rows: model rows, then finite lower bounds, then finite upper bounds.
    let mut g_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for row in &data.x_set.rows {
        model.add_row(substitute(&row.coeffs), row.sense, row.rhs);
        g_rows.push(row.coeffs.clone());
    }
    for (e, var) in data.x_set.vars.iter().enumerate() {
        if var.lower.is_finite() {
            model.add_row(substitute(&[(e, 1.0)]), Sense::Ge, var.lower);
            g_rows.push(vec![(e, 1.0)]);
        }
        if var.upper.is_finite() {
            model.add_row(substitute(&[(e, 1.0)]), Sense::Le, var.upper);
            g_rows.push(vec![(e, 1.0)]);
        }
    }
    let at = data.y_set.a.transpose();
    for i in 0..data.y_set.nrows() {
        model.add_row(at.col(i).to_vec(), Sense::Eq, data.y_set.b[i]);
    }
    let sol = lp::solve_model(&model, None)?;
    match sol.status {
        SimplexStatus::Optimal => {}
        SimplexStatus::Unbounded => return Err(BendersError::UnboundedSupport),
        SimplexStatus::Infeasible => return Err(BendersError::MasterInfeasible),
    }
    let mut alpha = rho[..n].to_vec();
    for (k, coeffs) in g_rows.iter().enumerate() {
        let gamma = sol.row_duals[k];
        for &(e, g) in coeffs {
            alpha[e] -= g * gamma;
        }
    }
    Ok(LagrangianDual {
        alpha,
        value: sol.objective,
        y: sol.x,
    })
}

/// `alpha^T w + rho0 theta >= sigma_Y(Q^T alpha + rho0 d)`.
pub fn lagrangian_cut(data: &ProblemData, alpha: &[f64], rho0: f64) -> Result<Cut, BendersError> {
    let beta = support_standard(&data.y_set, &data.y_objective(alpha, rho0))?;
    if beta == f64::NEG_INFINITY {
        return Err(BendersError::UnboundedSupport);
    }
    Ok(Cut {
        alpha: alpha.to_vec(),
        alpha0: rho0,
        beta,
        kind: CutKind::LagrangianCut,
    })
}

#[derive(Debug, Clone)]
pub struct CornerBendersRun {
    pub added: Vec<Cut>,
    pub rounds: usize,
    pub final_bound: f64,
    pub final_x: Vec<f64>,
    pub final_theta: f64,
    /// The loop stopped because a separated cut was already present.
    pub terminated_by_repeat: bool,
}

/// Adds corner Benders cuts for the corner optimal with respect to
/// `Q^T alpha + alpha0 d` until the master solution lies in the corner
/// epigraph. The seed cut itself is added first.
pub fn separate_corner_benders_cuts(
    data: &ProblemData,
    master: &mut MasterState,
    interior: &InteriorPoint,
    alpha: &[f64],
    alpha0: f64,
) -> Result<CornerBendersRun, BendersError> {
    let gamma = data.y_objective(alpha, alpha0);
    let corner = corner::optimal_corner(data, &gamma)?;
    let cone = corner::epigraph_cone(data, &corner);
    let seed = lagrangian_cut(data, alpha, alpha0)?;
    master.add_cut(data, &seed, Provenance::Seed);
    let mut state = ReversePolarState::default();
    let selection = RaySelection::default();
    let mut run = CornerBendersRun {
        added: Vec::new(),
        rounds: 0,
        final_bound: f64::NEG_INFINITY,
        final_x: Vec::new(),
        final_theta: 0.0,
        terminated_by_repeat: false,
    };
    loop {
        run.rounds += 1;
        let sol = master.solve()?;
        run.final_bound = sol.bound;
        run.final_x = sol.x.clone();
        run.final_theta = sol.theta;
        let candidate = EpiPoint {
            w: data.linking_rhs(&sol.x),
            theta: sol.theta,
        };
        let out = polar::solve_reverse_polar(
            &cone,
            &interior.point,
            &candidate,
            &mut state,
            &mut FullScan { cone: &cone },
            &selection,
        )?;
        let cut = match out.verdict {
            Verdict::Member => return Ok(run),
            _ => out.cut.expect("separating verdict carries a cut"),
        };
        let fresh = match out.verdict {
            Verdict::ImplicitEquality => {
                let a = master.add_cut(data, &cut, Provenance::CornerEquality);
                let b = master.add_cut(data, &cut.reversed(), Provenance::CornerEquality);
                a || b
            }
            _ => master.add_cut(data, &cut, Provenance::CornerFacet),
        };
        if !fresh {
            log::warn!("corner Benders loop separated a repeated cut");
            run.terminated_by_repeat = true;
            return Ok(run);
        }
        run.added.push(cut);
    }
}
