//! The first-stage relaxation over `(x, theta')` with lazily added rows.

use crate::lp::{self, LpModel, ModelBasis, Sense, SimplexStatus};
use crate::polar::Cut;

use super::{IlsCut, Rci, VrpsdError, VrpsdInstance};

/// Degree rows `x(delta(0)) = 2k`, `x(delta(v)) = 2` and bounds
/// `x_e in [0, 2]` on depot edges, `[0, 1]` elsewhere, with cost `c`.
pub fn master_x_rows(inst: &VrpsdInstance) -> LpModel {
    let mut model = LpModel::new();
    for e in 0..inst.num_edges() {
        let (u, v) = inst.edge_ends(e);
        let upper = if u == 0 { 2.0 } else { 1.0 };
        model.add_var(0.0, upper, inst.cost(u, v));
    }
    for v in 0..=inst.n {
        let coeffs = (0..=inst.n)
            .filter(|&u| u != v)
            .map(|u| (inst.edge_index(u, v), 1.0))
            .collect();
        let rhs = if v == 0 { 2.0 * inst.k as f64 } else { 2.0 };
        model.add_row(coeffs, Sense::Eq, rhs);
    }
    model
}

#[derive(Debug, Clone)]
pub struct MasterPoint {
    pub x: Vec<f64>,
    /// `theta'_v` at index `v - 1`.
    pub theta: Vec<f64>,
    pub bound: f64,
}

impl MasterPoint {
    pub fn theta_total(&self) -> f64 {
        self.theta.iter().sum()
    }
}

/// `min c^T x + sum_v theta'_v` over the degree rows, capacity cuts,
/// optimality cuts on `theta'` and Benders cuts on `theta = sum theta'`.
#[derive(Debug, Clone)]
pub struct VrpsdMaster {
    pub model: LpModel,
    pub rcis: Vec<Vec<usize>>,
    pub ils: Vec<IlsCut>,
    pub benders: Vec<Cut>,
    num_edges: usize,
    n: usize,
    basis: Option<ModelBasis>,
}

impl VrpsdMaster {
    pub fn new(inst: &VrpsdInstance) -> Self {
        let mut model = master_x_rows(inst);
        for _ in inst.customers() {
            model.add_var(0.0, f64::INFINITY, 1.0);
        }
        VrpsdMaster {
            model,
            rcis: Vec::new(),
            ils: Vec::new(),
            benders: Vec::new(),
            num_edges: inst.num_edges(),
            n: inst.n,
            basis: None,
        }
    }

    pub fn theta_var(&self, v: usize) -> usize {
        self.num_edges + v - 1
    }

    pub fn num_cuts(&self) -> usize {
        self.rcis.len() + self.ils.len() + self.benders.len()
    }

    pub fn add_rci(&mut self, inst: &VrpsdInstance, rci: &Rci) -> bool {
        if self.rcis.contains(&rci.customers) {
            return false;
        }
        self.model.add_row(rci.coeffs(inst), Sense::Ge, rci.rhs);
        self.rcis.push(rci.customers.clone());
        true
    }

    pub fn add_ils(&mut self, cut: &IlsCut) -> bool {
        if self.ils.iter().any(|c| c == cut) {
            return false;
        }
        let mut coeffs: Vec<(usize, f64)> = cut.customers.iter().map(|&v| (self.theta_var(v), 1.0)).collect();
        coeffs.extend(cut.x_coeffs.iter().copied());
        self.model.add_row(coeffs, Sense::Ge, cut.rhs);
        self.ils.push(cut.clone());
        true
    }

    /// Adds `alpha^T x + alpha0 sum theta' >= beta` unless an equal cut is
    /// present.
    pub fn add_benders(&mut self, cut: &Cut) -> bool {
        if self.benders.iter().any(|c| c.cosine(cut) > 1.0 - crate::benders::DUP_TOL) {
            return false;
        }
        let mut coeffs: Vec<(usize, f64)> = cut
            .alpha
            .iter()
            .enumerate()
            .filter(|e| *e.1 != 0.0)
            .map(|(e, &a)| (e, a))
            .collect();
        if cut.alpha0 != 0.0 {
            for v in 1..=self.n {
                coeffs.push((self.theta_var(v), cut.alpha0));
            }
        }
        self.model.add_row(coeffs, Sense::Ge, cut.beta);
        self.benders.push(cut.clone());
        true
    }

    pub fn solve(&mut self) -> Result<Option<MasterPoint>, VrpsdError> {
        let (point, basis) = solve_with(&self.model, self.basis.as_ref(), self.num_edges, self.n)?;
        if basis.is_some() {
            self.basis = basis;
        }
        Ok(point)
    }

    /// Solves with extra rows appended (branching bounds), warm-started from
    /// `warm`. Returns `None` when infeasible.
    pub fn solve_restricted(
        &self,
        extra: &[(usize, Sense, f64, u64)],
        warm: Option<&ModelBasis>,
    ) -> Result<(Option<MasterPoint>, Option<ModelBasis>), VrpsdError> {
        let mut model = self.model.clone();
        for &(e, sense, rhs, key) in extra {
            model.add_row_with_key(vec![(e, 1.0)], sense, rhs, key);
        }
        solve_with(&model, warm.or(self.basis.as_ref()), self.num_edges, self.n)
    }
}

fn solve_with(
    model: &LpModel,
    warm: Option<&ModelBasis>,
    num_edges: usize,
    n: usize,
) -> Result<(Option<MasterPoint>, Option<ModelBasis>), VrpsdError> {
    let sol = lp::solve_model(model, warm)?;
    match sol.status {
        SimplexStatus::Infeasible => Ok((None, None)),
        SimplexStatus::Unbounded => Err(VrpsdError::Lp(lp::LpError::NumericalFailure(
            "routing relaxation reported unbounded".into(),
        ))),
        SimplexStatus::Optimal => Ok((
            Some(MasterPoint {
                x: sol.x[..num_edges].to_vec(),
                theta: sol.x[num_edges..num_edges + n].to_vec(),
                bound: sol.objective,
            }),
            Some(sol.basis),
        )),
    }
}
