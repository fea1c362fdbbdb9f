//! Root relaxation: capacity and optimality cuts first, then the mode's
//! Benders-type separation, until no cut is found or the bound stalls.

use std::str::FromStr;
use std::time::Instant;

use crate::benders::{lagrangian_cut, separate_fischetti, solve_lagrangian_dual, BendersError, LagrangianDual};
use crate::corner::{corner_from_tree, epigraph_cone, Corner, EpiPoint, EpigraphCone, ProblemData};
use crate::lp::{self, LpModel, Sense, SimplexStatus, SparseMatrix};
use crate::network::{shortest_path_tree, SpanningTree};
use crate::polar::{
    relative_interior_point, solve_reverse_polar, Cut, InteriorPoint, NetworkScan, RaySelection, ReversePolarState,
    Verdict,
};

use super::{
    build_state_network, separate_p_s_cuts, separate_rci_exact, MasterPoint, PsiTable, Rci, StateNetwork,
    VrpsdError, VrpsdInstance, VrpsdMaster, MAX_RCI_CUSTOMERS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Capacity and integer L-shaped cuts only.
    Parada,
    /// Plus normalized Benders cuts from the state-network flow LP.
    Benders,
    /// Plus one Lagrangian cut from the optimal flow multipliers.
    Lagrange,
    /// Plus corner Benders cuts at the Lagrangian shortest-path corner.
    Corner,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Parada => "parada",
            Mode::Benders => "benders",
            Mode::Lagrange => "lagrange",
            Mode::Corner => "corner",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parada" => Ok(Mode::Parada),
            "benders" => Ok(Mode::Benders),
            "lagrange" => Ok(Mode::Lagrange),
            "corner" => Ok(Mode::Corner),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopOptions {
    /// Minimum bound improvement over `stall_rounds` iterations.
    pub stall_tol: f64,
    pub stall_rounds: usize,
    /// Separate path and set optimality cuts on `theta'`.
    pub ils_cuts: bool,
    /// Capacity cuts added per round, most violated first.
    pub max_rci_per_round: usize,
    pub max_rounds: usize,
    pub deadline: Option<Instant>,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions {
            stall_tol: 1e-3,
            stall_rounds: 10,
            ils_cuts: true,
            max_rci_per_round: 50,
            max_rounds: 10_000,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub time_s: f64,
    pub bound: f64,
    pub cut_type: String,
    pub cuts_total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    NoViolatedCut,
    Stalled,
    RepeatedCut,
    RoundLimit,
    TimeLimit,
}

/// Coupled problem with `T = -I`, `h = 0`: `x = Q y` for an `s`-`t` flow
/// `y` of the state network.
pub fn problem_data(inst: &VrpsdInstance, sn: &StateNetwork, x_set: LpModel) -> ProblemData {
    let p = inst.num_edges();
    let t = SparseMatrix::from_columns(p, (0..p).map(|e| vec![(e, -1.0)]).collect());
    ProblemData {
        c: inst.edge_costs(),
        d: sn.cost.clone(),
        t,
        q: sn.q_matrix(p),
        h: vec![0.0; p],
        x_set,
        y_set: sn.net.flow_polytope(),
        y_network: Some(sn.net.clone()),
    }
}

#[derive(Debug, Clone)]
pub struct LagrangianSetup {
    pub sn: StateNetwork,
    pub data: ProblemData,
    pub dual: LagrangianDual,
    /// Capacity cuts added until the recovered flow satisfied all of them.
    pub rcis: Vec<Rci>,
    pub cut: Cut,
}

/// Maximizes the Lagrangian over the degree rows plus capacity cuts,
/// separating capacity cuts on `Q y` until none is violated.
pub fn lagrangian_setup(inst: &VrpsdInstance, psi: &PsiTable) -> Result<LagrangianSetup, VrpsdError> {
    let sn = build_state_network(inst, psi);
    let mut x_set = super::master_x_rows(inst);
    let mut rcis: Vec<Rci> = Vec::new();
    loop {
        let data = problem_data(inst, &sn, x_set.clone());
        // An infeasible relaxation means no k-route partition exists.
        let dual = solve_lagrangian_dual(&data, &data.c, 1.0).map_err(|e| match e {
            BendersError::MasterInfeasible => VrpsdError::Infeasible,
            other => other.into(),
        })?;
        let x_hat = data.q.mul_vec(&dual.y);
        let found = separate_rci_exact(inst, &x_hat)?;
        let fresh: Vec<Rci> = found
            .into_iter()
            .filter(|r| !rcis.iter().any(|o| o.customers == r.customers))
            .collect();
        if fresh.is_empty() {
            let cut = lagrangian_cut(&data, &dual.alpha, 1.0)?;
            return Ok(LagrangianSetup {
                sn,
                data,
                dual,
                rcis,
                cut,
            });
        }
        for r in fresh {
            x_set.add_row(r.coeffs(inst), Sense::Ge, r.rhs);
            rcis.push(r);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CornerSetup {
    pub lagrangian: LagrangianSetup,
    pub tree: SpanningTree,
    pub corner: Corner,
    pub cone: EpigraphCone,
    pub interior: InteriorPoint,
}

impl CornerSetup {
    pub fn new(lagrangian: LagrangianSetup) -> Result<Self, VrpsdError> {
        let data = &lagrangian.data;
        let weights = data.y_objective(&lagrangian.dual.alpha, 1.0);
        let net = &lagrangian.sn.net;
        let (tree, _) = shortest_path_tree(net, &weights).map_err(crate::polar::PolarError::from)?;
        let corner = corner_from_tree(net, &tree);
        let cone = epigraph_cone(data, &corner);
        let interior = relative_interior_point(data)?;
        Ok(CornerSetup {
            lagrangian,
            tree,
            corner,
            cone,
            interior,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RootReport {
    pub mode: Mode,
    pub trace: Vec<TraceEntry>,
    pub root_bound: f64,
    pub point: MasterPoint,
    pub master: VrpsdMaster,
    pub corner: Option<CornerSetup>,
    pub lagrangian: Option<LagrangianSetup>,
    pub stop: StopReason,
    pub time_s: f64,
}

enum ModeState {
    Parada,
    Benders(ProblemData),
    Lagrange(LagrangianSetup),
    Corner(CornerSetup, ReversePolarState),
}

/// Runs the root cutting-plane loop in the given mode.
pub fn cutting_plane_loop(inst: &VrpsdInstance, mode: Mode, opts: &LoopOptions) -> Result<RootReport, VrpsdError> {
    let start = Instant::now();
    let psi = PsiTable::new(inst);
    let mut master = VrpsdMaster::new(inst);
    let mut state = match mode {
        Mode::Parada => ModeState::Parada,
        Mode::Benders => {
            let sn = build_state_network(inst, &psi);
            ModeState::Benders(problem_data(inst, &sn, super::master_x_rows(inst)))
        }
        Mode::Lagrange => {
            let setup = lagrangian_setup(inst, &psi)?;
            master.add_benders(&setup.cut);
            ModeState::Lagrange(setup)
        }
        Mode::Corner => {
            let setup = CornerSetup::new(lagrangian_setup(inst, &psi)?)?;
            ModeState::Corner(setup, ReversePolarState::default())
        }
    };
    let exact_rci = inst.n <= MAX_RCI_CUSTOMERS;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut last_point: Option<MasterPoint>;
    let stop = loop {
        let iter = trace.len() + 1;
        let point = master.solve()?.ok_or(VrpsdError::Infeasible)?;
        last_point = Some(point.clone());
        let mut cut_type = String::from("none");
        let mut rci_sets: Vec<Vec<usize>> = Vec::new();
        let mut added = 0usize;
        if exact_rci {
            let rcis = separate_rci_exact(inst, &point.x)?;
            for r in rcis.iter().take(opts.max_rci_per_round) {
                if master.add_rci(inst, r) {
                    added += 1;
                }
            }
            rci_sets = rcis.into_iter().map(|r| r.customers).collect();
            if added > 0 {
                cut_type = "rci".into();
            }
        }
        if opts.ils_cuts {
            let mut ils_added = 0;
            for cut in separate_p_s_cuts(inst, &psi, &point.x, &point.theta, &rci_sets) {
                if master.add_ils(&cut) {
                    ils_added += 1;
                }
            }
            if ils_added > 0 {
                cut_type = if added > 0 { "rci+ils".into() } else { "ils".into() };
                added += ils_added;
            }
        }
        let mut repeated = false;
        if added == 0 {
            let candidate = EpiPoint {
                w: point.x.clone(),
                theta: point.theta_total(),
            };
            match &mut state {
                ModeState::Parada | ModeState::Lagrange(_) => {}
                ModeState::Benders(data) => {
                    if let Some(cut) = separate_fischetti(data, &point.x, candidate.theta)? {
                        if master.add_benders(&cut) {
                            added += 1;
                            cut_type = "fischetti".into();
                        } else {
                            repeated = true;
                        }
                    }
                }
                ModeState::Corner(setup, polar_state) => {
                    let data = &setup.lagrangian.data;
                    let mut scan = NetworkScan::new(&setup.lagrangian.sn.net, &setup.tree, &setup.corner, &data.q, &data.d);
                    let out = solve_reverse_polar(
                        &setup.cone,
                        &setup.interior.point,
                        &candidate,
                        polar_state,
                        &mut scan,
                        &RaySelection::default(),
                    )?;
                    match out.verdict {
                        Verdict::Member => {}
                        Verdict::Facet => {
                            let cut = out.cut.expect("facet verdict carries a cut");
                            if master.add_benders(&cut) {
                                added += 1;
                                cut_type = "corner".into();
                            } else {
                                repeated = true;
                            }
                        }
                        Verdict::ImplicitEquality => {
                            let cut = out.cut.expect("equality verdict carries a cut");
                            let a = master.add_benders(&cut);
                            let b = master.add_benders(&cut.reversed());
                            if a || b {
                                added += 1;
                                cut_type = "corner_eq".into();
                            } else {
                                repeated = true;
                            }
                        }
                    }
                }
            }
        }
        trace.push(TraceEntry {
            iter,
            time_s: start.elapsed().as_secs_f64(),
            bound: point.bound,
            cut_type,
            cuts_total: master.num_cuts(),
        });
        log::debug!("root iteration {iter}: bound {:.6}", point.bound);
        if added == 0 {
            break if repeated {
                StopReason::RepeatedCut
            } else {
                StopReason::NoViolatedCut
            };
        }
        if trace.len() > opts.stall_rounds {
            let old = trace[trace.len() - 1 - opts.stall_rounds].bound;
            if point.bound - old < opts.stall_tol {
                break StopReason::Stalled;
            }
        }
        if trace.len() >= opts.max_rounds {
            break StopReason::RoundLimit;
        }
        if opts.deadline.is_some_and(|d| Instant::now() >= d) {
            break StopReason::TimeLimit;
        }
    };
    let point = last_point.expect("at least one iteration");
    let (corner, lagrangian) = match state {
        ModeState::Corner(setup, _) => (Some(setup), None),
        ModeState::Lagrange(setup) => (None, Some(setup)),
        _ => (None, None),
    };
    Ok(RootReport {
        mode,
        root_bound: point.bound,
        trace,
        point,
        master,
        corner,
        lagrangian,
        stop,
        time_s: start.elapsed().as_secs_f64(),
    })
}

/// `min c^T x + d^T y` over `x = Q y`, `y` an `s`-`t` flow of the state
/// network, degree rows and all capacity cuts (separated exactly).
pub fn arc_flow_bound(inst: &VrpsdInstance) -> Result<f64, VrpsdError> {
    let psi = PsiTable::new(inst);
    let sn = build_state_network(inst, &psi);
    let mut model = super::master_x_rows(inst);
    let ne = inst.num_edges();
    let y0 = model.num_vars();
    for &d in &sn.cost {
        model.add_var(0.0, f64::INFINITY, d);
    }
    let mut link: Vec<Vec<(usize, f64)>> = (0..ne).map(|e| vec![(e, 1.0)]).collect();
    for (a, &e) in sn.edge.iter().enumerate() {
        link[e].push((y0 + a, -1.0));
    }
    for row in link {
        model.add_row(row, Sense::Eq, 0.0);
    }
    for v in 0..sn.net.num_nodes() {
        if v == sn.s {
            continue;
        }
        let mut row: Vec<(usize, f64)> = sn.net.in_arcs(v).iter().map(|&a| (y0 + a, 1.0)).collect();
        row.extend(sn.net.out_arcs(v).iter().map(|&a| (y0 + a, -1.0)));
        model.add_row(row, Sense::Eq, sn.net.supply()[v] as f64);
    }
    let mut basis = None;
    loop {
        let sol = lp::solve_model(&model, basis.as_ref())?;
        if sol.status != SimplexStatus::Optimal {
            return Err(VrpsdError::Infeasible);
        }
        let rcis = separate_rci_exact(inst, &sol.x[..ne])?;
        if rcis.is_empty() {
            return Ok(sol.objective);
        }
        for r in rcis {
            model.add_row(r.coeffs(inst), Sense::Ge, r.rhs);
        }
        basis = Some(sol.basis);
    }
}
