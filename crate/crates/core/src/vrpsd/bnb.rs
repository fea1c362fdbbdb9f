//! Best-bound branch-and-bound on the edge variables of the root relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::lp::{ModelBasis, Sense};

use super::{
    cutting_plane_loop, separate_p_s_cuts, separate_rci_exact, separate_route_cuts, LoopOptions, Mode, PsiTable,
    RootReport, Route, VrpsdError, VrpsdInstance, MAX_RCI_CUSTOMERS,
};

const INT_TOL: f64 = 1e-6;
const PRUNE_TOL: f64 = 1e-6;
const BRANCH_KEY_BASE: u64 = 1 << 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegerStatus {
    Optimal,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct IntegerResult {
    pub root: RootReport,
    pub routes: Vec<Route>,
    /// Value of the incumbent, `None` if none was found before a time limit.
    pub value: Option<f64>,
    pub nodes: usize,
    pub status: IntegerStatus,
    /// Smallest bound among open nodes (the incumbent value once optimal).
    pub best_bound: f64,
}

type BranchRow = (usize, Sense, f64, u64);

struct Node {
    bound: f64,
    seq: usize,
    rows: Vec<BranchRow>,
    basis: Option<ModelBasis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: smaller bound first, then older node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn branch_row(e: usize, sense: Sense, value: f64) -> BranchRow {
    let dir = if sense == Sense::Le { 0 } else { 8 };
    (e, sense, value, BRANCH_KEY_BASE + 16 * e as u64 + dir + value as u64)
}

fn is_integral(x: &[f64]) -> bool {
    x.iter().all(|v| (v - v.round()).abs() <= INT_TOL)
}

/// Most fractional edge, ties broken by larger cost, then smaller index.
fn branching_edge(inst: &VrpsdInstance, x: &[f64]) -> Option<usize> {
    let costs = inst.edge_costs();
    let mut best: Option<(usize, f64)> = None;
    for (e, &v) in x.iter().enumerate() {
        let frac = v - v.floor();
        if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
            continue;
        }
        let score = frac.min(1.0 - frac);
        let better = match best {
            None => true,
            Some((b, s)) => score > s + 1e-12 || ((score - s).abs() <= 1e-12 && costs[e] > costs[b]),
        };
        if better {
            best = Some((e, score));
        }
    }
    best.map(|(e, _)| e)
}

/// Routes of an integral edge vector, each in its cheaper orientation.
fn reconstruct_routes(inst: &VrpsdInstance, x: &[f64]) -> Result<Vec<Route>, VrpsdError> {
    let n = inst.n;
    let val = |u: usize, v: usize| x[inst.edge_index(u, v)].round() as i64;
    let mut used = vec![false; n + 1];
    let mut routes = Vec::new();
    for v in 1..=n {
        if used[v] {
            continue;
        }
        match val(0, v) {
            2 => {
                used[v] = true;
                routes.push(vec![v]);
            }
            1 => {
                let mut route = vec![v];
                used[v] = true;
                let mut cur = v;
                loop {
                    let next = (1..=n).find(|&w| w != cur && !used[w] && val(cur, w) == 1);
                    match next {
                        Some(w) => {
                            used[w] = true;
                            route.push(w);
                            cur = w;
                        }
                        None => break,
                    }
                }
                if val(cur, 0) != 1 || cur == v {
                    return Err(VrpsdError::InvalidInstance("integral point is not a set of routes".into()));
                }
                routes.push(route);
            }
            _ => {}
        }
    }
    if used[1..].iter().any(|u| !u) || routes.len() != inst.k {
        return Err(VrpsdError::InvalidInstance("integral point does not cover customers with k routes".into()));
    }
    routes
        .into_iter()
        .map(|r| Route::new(inst, r).map(|r| r.best_orientation(inst)))
        .collect()
}

/// Solves the root in `mode`, then branches on fractional edges. Integral
/// nodes are closed after capacity, route and optimality cuts are satisfied.
pub fn solve_integer(inst: &VrpsdInstance, mode: Mode, opts: &LoopOptions) -> Result<IntegerResult, VrpsdError> {
    if inst.n > MAX_RCI_CUSTOMERS {
        return Err(VrpsdError::TooManyCustomers(inst.n));
    }
    let root = cutting_plane_loop(inst, mode, opts)?;
    let psi = PsiTable::new(inst);
    let mut master = root.master.clone();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root.root_bound,
        seq: 0,
        rows: Vec::new(),
        basis: None,
    });
    let mut seq = 1;
    let mut incumbent: Option<(f64, Vec<Route>)> = None;
    let mut nodes = 0;
    let mut status = IntegerStatus::Optimal;
    while let Some(node) = heap.pop() {
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
        if node.bound >= cutoff - PRUNE_TOL {
            continue;
        }
        if opts.deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            status = IntegerStatus::TimeLimit;
            break;
        }
        nodes += 1;
        let mut warm = node.basis.clone();
        loop {
            let (point, basis) = master.solve_restricted(&node.rows, warm.as_ref())?;
            let Some(point) = point else { break };
            warm = basis;
            if point.bound >= cutoff - PRUNE_TOL {
                break;
            }
            let mut added = 0;
            for r in separate_rci_exact(inst, &point.x)? {
                added += master.add_rci(inst, &r) as usize;
            }
            if added > 0 {
                continue;
            }
            if !is_integral(&point.x) {
                let e = branching_edge(inst, &point.x).expect("fractional point has a fractional edge");
                let v = point.x[e];
                for (sense, rhs) in [(Sense::Le, v.floor()), (Sense::Ge, v.ceil())] {
                    let mut rows = node.rows.clone();
                    rows.push(branch_row(e, sense, rhs));
                    heap.push(Node {
                        bound: point.bound,
                        seq,
                        rows,
                        basis: warm.clone(),
                    });
                    seq += 1;
                }
                break;
            }
            for cut in separate_route_cuts(inst, &psi, &point.x, &point.theta)
                .into_iter()
                .chain(separate_p_s_cuts(inst, &psi, &point.x, &point.theta, &[]))
            {
                added += master.add_ils(&cut) as usize;
            }
            if added > 0 {
                continue;
            }
            let routes = reconstruct_routes(inst, &point.x)?;
            let value: f64 = routes.iter().map(Route::total).sum();
            log::debug!("integral node {nodes}: value {value:.6}, bound {:.6}", point.bound);
            if value < cutoff - PRUNE_TOL {
                incumbent = Some((value, routes));
            }
            break;
        }
    }
    let best_bound = match (&incumbent, heap.iter().map(|n| n.bound).reduce(f64::min)) {
        (Some((v, _)), Some(b)) => b.min(*v),
        (Some((v, _)), None) => *v,
        (None, Some(b)) => b,
        (None, None) => f64::INFINITY,
    };
    if status == IntegerStatus::Optimal && incumbent.is_none() {
        return Err(VrpsdError::Infeasible);
    }
    let (value, routes) = match incumbent {
        Some((v, r)) => (Some(v), r),
        None => (None, Vec::new()),
    };
    Ok(IntegerResult {
        root,
        routes,
        value,
        nodes,
        status,
        best_bound,
    })
}
