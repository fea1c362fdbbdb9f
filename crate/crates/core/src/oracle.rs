//! Brute-force and LP-based reference computations used to certify the
//! solver at small scale. Each oracle follows its own code path rather than
//! reusing the routine it checks.

use thiserror::Error;

use crate::corner::{Corner, EpiPoint, ProblemData};
use crate::lp::{self, LpError, LpModel, Sense, SimplexStatus};
use crate::network::{Network, SpanningTree};
use crate::vrpsd::{separate_rci_exact, VrpsdError, VrpsdInstance};

/// Largest customer count for route enumeration.
pub const MAX_ROUTE_CUSTOMERS: usize = 10;
/// Largest customer count for exhaustive partition search.
pub const MAX_BRUTE_FORCE_CUSTOMERS: usize = 8;
/// Largest number of route-sequence columns for the enumerated bound.
pub const MAX_COLUMNS: usize = 2_000_000;
/// Feasibility tolerance of the membership oracles.
pub const MEMBERSHIP_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for enumeration")]
    TooLarge,
    #[error("no partition into k q-routes exists")]
    Infeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Vrpsd(#[from] VrpsdError),
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Expected recourse of a customer sequence from the cumulative-demand
/// distributions: `sum_j 2 c_{0 v_j} sum_t P[xi_{j-1} <= tC < xi_j]`.
pub fn sequence_recourse(inst: &VrpsdInstance, seq: &[usize]) -> f64 {
    let cap = inst.capacity as f64;
    let below = |mean: f64, var: f64, x: f64| {
        if var == 0.0 {
            (mean <= x) as i32 as f64
        } else {
            normal_cdf((x - mean) / var.sqrt())
        }
    };
    let mut total = 0.0;
    let (mut mean, mut var) = (0.0f64, 0.0f64);
    for &v in seq {
        let (pm, pv) = (mean, var);
        mean += inst.qbar[v - 1] as f64;
        var += inst.variance[v - 1];
        let mut t = 1.0;
        let mut fails = 0.0;
        while t * cap < mean + 40.0 * var.sqrt() + cap {
            fails += below(pm, pv, t * cap) - below(mean, var, t * cap);
            t += 1.0;
        }
        total += 2.0 * inst.cost(0, v) * fails;
    }
    total
}

fn sequence_cost(inst: &VrpsdInstance, seq: &[usize]) -> f64 {
    let mut c = inst.cost(0, seq[0]) + inst.cost(*seq.last().unwrap(), 0);
    for w in seq.windows(2) {
        c += inst.cost(w[0], w[1]);
    }
    c
}

/// An enumerated route (or route sequence) with its costs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedRoute {
    pub customers: Vec<usize>,
    pub cost: f64,
    pub recourse: f64,
}

/// Depth-first enumeration of customer sequences with expected load at most
/// `C`, either elementary or only free of immediate repeats.
fn enumerate_sequences(inst: &VrpsdInstance, elementary: bool, limit: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, i64)> = (1..=inst.n).rev().map(|v| (vec![v], inst.qbar[v - 1])).collect();
    while let Some((seq, load)) = stack.pop() {
        for v in (1..=inst.n).rev() {
            let q = inst.qbar[v - 1];
            if load + q > inst.capacity || *seq.last().unwrap() == v || (elementary && seq.contains(&v)) {
                continue;
            }
            let mut next = seq.clone();
            next.push(v);
            stack.push((next, load + q));
        }
        out.push(seq);
        if out.len() > limit {
            return Err(OracleError::TooLarge);
        }
    }
    Ok(out)
}

/// All elementary q-routes (both orientations) with `c(R)` and `E[Q(R)]`.
pub fn enumerate_qroutes(inst: &VrpsdInstance) -> Result<Vec<EnumeratedRoute>, OracleError> {
    if inst.n > MAX_ROUTE_CUSTOMERS {
        return Err(OracleError::TooLarge);
    }
    Ok(enumerate_sequences(inst, true, usize::MAX)?
        .into_iter()
        .map(|s| EnumeratedRoute {
            cost: sequence_cost(inst, &s),
            recourse: sequence_recourse(inst, &s),
            customers: s,
        })
        .collect())
}

/// Number of customer sequences without immediate repeats whose expected
/// load is at most `C`.
pub fn count_route_sequences(inst: &VrpsdInstance, elementary: bool) -> Result<usize, OracleError> {
    Ok(enumerate_sequences(inst, elementary, MAX_COLUMNS)?.len())
}

/// Edge multiplicities traversed by a route sequence.
fn edge_counts(inst: &VrpsdInstance, seq: &[usize]) -> Vec<(usize, f64)> {
    let mut counts = vec![0.0; inst.num_edges()];
    counts[inst.edge_index(0, seq[0])] += 1.0;
    counts[inst.edge_index(*seq.last().unwrap(), 0)] += 1.0;
    for w in seq.windows(2) {
        counts[inst.edge_index(w[0], w[1])] += 1.0;
    }
    counts.into_iter().enumerate().filter(|e| e.1 != 0.0).collect()
}

/// Path-flow bound: `min c^T x + sum_R E[Q(R)] lambda_R` with `x = sum_R
/// x(R) lambda_R`, `sum lambda = k`, the degree rows, edge bounds and all
/// capacity cuts, over every route sequence free of immediate repeats.
pub fn dw_bound_enumeration(inst: &VrpsdInstance) -> Result<f64, OracleError> {
    let seqs = enumerate_sequences(inst, false, MAX_COLUMNS)?;
    let ne = inst.num_edges();
    let mut model = LpModel::new();
    for e in 0..ne {
        let (u, v) = inst.edge_ends(e);
        model.add_var(0.0, if u == 0 { 2.0 } else { 1.0 }, inst.cost(u, v));
    }
    let mut link: Vec<Vec<(usize, f64)>> = (0..ne).map(|e| vec![(e, 1.0)]).collect();
    let mut count_row = Vec::with_capacity(seqs.len());
    for s in &seqs {
        let j = model.add_var(0.0, f64::INFINITY, sequence_recourse(inst, s));
        for (e, m) in edge_counts(inst, s) {
            link[e].push((j, -m));
        }
        count_row.push((j, 1.0));
    }
    for row in link {
        model.add_row(row, Sense::Eq, 0.0);
    }
    model.add_row(count_row, Sense::Eq, inst.k as f64);
    for v in 0..=inst.n {
        let row = (0..=inst.n)
            .filter(|&u| u != v)
            .map(|u| (inst.edge_index(u, v), 1.0))
            .collect();
        model.add_row(row, Sense::Eq, if v == 0 { 2.0 * inst.k as f64 } else { 2.0 });
    }
    let mut basis = None;
    loop {
        let sol = lp::solve_model(&model, basis.as_ref())?;
        if sol.status != SimplexStatus::Optimal {
            return Err(OracleError::Infeasible);
        }
        let cuts = separate_rci_exact(inst, &sol.x[..ne])?;
        if cuts.is_empty() {
            return Ok(sol.objective);
        }
        for r in cuts {
            model.add_row(r.coeffs(inst), Sense::Ge, r.rhs);
        }
        basis = Some(sol.basis);
    }
}

/// Optimal partition into exactly `k` q-routes, each in its best order.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceSolution {
    pub routes: Vec<Vec<usize>>,
    pub value: f64,
}

/// Exhaustive search over set partitions of the customers into `k` blocks
/// of expected load at most `C`; each block is visited in the order that
/// minimizes first-stage plus (optionally) expected recourse cost.
pub fn brute_force_optimum(inst: &VrpsdInstance, with_recourse: bool) -> Result<BruteForceSolution, OracleError> {
    let n = inst.n;
    if n > MAX_BRUTE_FORCE_CUSTOMERS {
        return Err(OracleError::TooLarge);
    }
    let full = (1usize << n) - 1;
    // Cheapest ordering of each feasible block.
    let mut block: Vec<Option<(f64, Vec<usize>)>> = vec![None; full + 1];
    for mask in 1..=full {
        let members: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        let load: i64 = members.iter().map(|&v| inst.qbar[v - 1]).sum();
        if load > inst.capacity {
            continue;
        }
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut perm = members.clone();
        permute(&mut perm, 0, &mut |p| {
            let mut value = sequence_cost(inst, p);
            if with_recourse {
                value += sequence_recourse(inst, p);
            }
            if best.as_ref().is_none_or(|b| value < b.0 - 1e-12) {
                best = Some((value, p.to_vec()));
            }
        });
        block[mask] = best;
    }
    // Partition search anchored at the lowest remaining customer.
    fn search(
        mask: usize,
        left: usize,
        block: &[Option<(f64, Vec<usize>)>],
        acc: f64,
        chosen: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if mask == 0 {
            if left == 0 && best.as_ref().is_none_or(|b| acc < b.0 - 1e-12) {
                *best = Some((acc, chosen.clone()));
            }
            return;
        }
        if left == 0 {
            return;
        }
        let low = mask & mask.wrapping_neg();
        let rest = mask & !low;
        let mut sub = rest;
        loop {
            let b = sub | low;
            if let Some((v, _)) = &block[b] {
                chosen.push(b);
                search(mask & !b, left - 1, block, acc + v, chosen, best);
                chosen.pop();
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut best = None;
    search(full, inst.k, &block, 0.0, &mut Vec::new(), &mut best);
    let (value, blocks) = best.ok_or(OracleError::Infeasible)?;
    Ok(BruteForceSolution {
        routes: blocks.iter().map(|&b| block[b].as_ref().unwrap().1.clone()).collect(),
        value,
    })
}

fn permute(items: &mut [usize], k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Where membership of `(w, theta)` is tested.
#[derive(Debug, Clone, Copy)]
pub enum EpiSet<'a> {
    /// `epi(f_Y)`.
    Y,
    /// `epi(f_C)` for the corner `C`.
    Corner(&'a Corner),
}

/// Decides `(w, theta) in epi(f)` by an explicit feasibility LP.
pub fn epi_membership_lp(set: EpiSet, data: &ProblemData, point: &EpiPoint) -> Result<bool, OracleError> {
    let p = data.p();
    let m = data.m();
    let mut model = LpModel::new();
    match set {
        EpiSet::Y => {
            // Exists y >= 0: A y = b, Q y = w, d^T y <= theta.
            for _ in 0..m {
                model.add_var(0.0, f64::INFINITY, 0.0);
            }
            let mut qrows = vec![Vec::new(); p];
            let mut arows = vec![Vec::new(); data.y_set.nrows()];
            for j in 0..m {
                for &(i, v) in data.q.col(j) {
                    qrows[i].push((j, v));
                }
                for &(i, v) in data.y_set.a.col(j) {
                    arows[i].push((j, v));
                }
            }
            for (i, r) in qrows.into_iter().enumerate() {
                model.add_row(r, Sense::Eq, point.w[i]);
            }
            for (i, r) in arows.into_iter().enumerate() {
                model.add_row(r, Sense::Eq, data.y_set.b[i]);
            }
            let drow = (0..m).filter(|&j| data.d[j] != 0.0).map(|j| (j, data.d[j])).collect();
            model.add_row(drow, Sense::Le, point.theta);
        }
        EpiSet::Corner(corner) => {
            // Exists mu >= 0: sum (Q r) mu_r = w - Q y*, sum (d^T r) mu_r <= theta - d^T y*.
            let apex_w = data.q.mul_vec(&corner.apex);
            let apex_theta: f64 = corner.apex.iter().zip(&data.d).map(|(a, b)| a * b).sum();
            let mut wrows = vec![Vec::new(); p];
            let mut drow = Vec::new();
            for ray in &corner.rays {
                let j = model.add_var(0.0, f64::INFINITY, 0.0);
                let mut dense = vec![0.0; p];
                let mut dr = 0.0;
                for &(col, v) in ray {
                    for &(i, q) in data.q.col(col) {
                        dense[i] += q * v;
                    }
                    dr += data.d[col] * v;
                }
                for (i, &v) in dense.iter().enumerate() {
                    if v != 0.0 {
                        wrows[i].push((j, v));
                    }
                }
                if dr != 0.0 {
                    drow.push((j, dr));
                }
            }
            if model.num_vars() == 0 {
                let on_apex = (0..p).all(|i| (point.w[i] - apex_w[i]).abs() <= MEMBERSHIP_TOL);
                return Ok(on_apex && point.theta >= apex_theta - MEMBERSHIP_TOL);
            }
            for (i, r) in wrows.into_iter().enumerate() {
                model.add_row(r, Sense::Eq, point.w[i] - apex_w[i]);
            }
            model.add_row(drow, Sense::Le, point.theta - apex_theta);
        }
    }
    let sol = lp::solve_model(&model, None)?;
    if sol.status == SimplexStatus::Optimal {
        return Ok(true);
    }
    // Accept points within tolerance of the set: minimize the l1 slack.
    Ok(min_slack(&model)? <= MEMBERSHIP_TOL)
}

/// Smallest total violation `sum |slack|` of the rows of `model`.
fn min_slack(model: &LpModel) -> Result<f64, OracleError> {
    let mut relaxed = model.clone();
    for v in relaxed.vars.iter_mut() {
        v.cost = 0.0;
    }
    let rows = relaxed.rows.len();
    for i in 0..rows {
        let plus = relaxed.add_var(0.0, f64::INFINITY, 1.0);
        let minus = relaxed.add_var(0.0, f64::INFINITY, 1.0);
        relaxed.rows[i].coeffs.push((plus, 1.0));
        relaxed.rows[i].coeffs.push((minus, -1.0));
    }
    let sol = lp::solve_model(&relaxed, None)?;
    Ok(sol.objective)
}

/// Certificate returned by the restricted cut-generating LP.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedDual {
    pub accept: bool,
    pub value: f64,
    pub alpha: Vec<f64>,
    pub alpha0: f64,
    pub nu: Vec<f64>,
}

/// Cut-generating LP restricted to the corner `{A y = b, y_B free, y_N >= 0}`:
/// maximize `alpha^T w + nu^T b - alpha0 theta` subject to
/// `Q^T alpha + A^T nu - alpha0 d` zero on basic and nonpositive on nonbasic
/// columns, `||alpha||_1 + alpha0 <= 1`, `alpha0 >= 0`. Accepts when the
/// optimum is at most zero; otherwise `-alpha^T w + alpha0 theta >= nu^T b`
/// separates the point.
pub fn restricted_dual_check(corner: &Corner, data: &ProblemData, point: &EpiPoint) -> Result<RestrictedDual, OracleError> {
    let p = data.p();
    let m = data.m();
    let rows = data.y_set.nrows();
    let mut basic = vec![false; m];
    for &j in &corner.basis.basic {
        if j < m {
            basic[j] = true;
        }
    }
    let mut model = LpModel::new();
    let ap: Vec<usize> = (0..p).map(|i| model.add_var(0.0, f64::INFINITY, -point.w[i])).collect();
    let am: Vec<usize> = (0..p).map(|i| model.add_var(0.0, f64::INFINITY, point.w[i])).collect();
    let a0 = model.add_var(0.0, f64::INFINITY, point.theta);
    let nu: Vec<usize> = (0..rows)
        .map(|i| model.add_var(f64::NEG_INFINITY, f64::INFINITY, -data.y_set.b[i]))
        .collect();
    for j in 0..m {
        let mut coeffs = Vec::new();
        for &(i, v) in data.q.col(j) {
            coeffs.push((ap[i], v));
            coeffs.push((am[i], -v));
        }
        for &(i, v) in data.y_set.a.col(j) {
            coeffs.push((nu[i], v));
        }
        if data.d[j] != 0.0 {
            coeffs.push((a0, -data.d[j]));
        }
        let sense = if basic[j] { Sense::Eq } else { Sense::Le };
        model.add_row(coeffs, sense, 0.0);
    }
    let mut norm: Vec<(usize, f64)> = ap.iter().chain(&am).map(|&v| (v, 1.0)).collect();
    norm.push((a0, 1.0));
    model.add_row(norm, Sense::Le, 1.0);
    let sol = lp::solve_model(&model, None)?;
    if sol.status != SimplexStatus::Optimal {
        return Err(OracleError::Lp(LpError::NumericalFailure("restricted dual not optimal".into())));
    }
    let value = -sol.objective;
    Ok(RestrictedDual {
        accept: value <= MEMBERSHIP_TOL,
        value,
        alpha: (0..p).map(|i| sol.x[ap[i]] - sol.x[am[i]]).collect(),
        alpha0: sol.x[a0],
        nu: nu.iter().map(|&v| sol.x[v]).collect(),
    })
}

/// Reduced cost of every non-tree arc's cycle, computed by solving the
/// tree conservation system for the cycle flow directly, keeping the arcs
/// whose value is below `-tol`.
pub fn naive_violated_rays(net: &Network, tree: &SpanningTree, weights: &[f64], tol: f64) -> Vec<(usize, f64)> {
    let nn = net.num_nodes();
    let mut out = Vec::new();
    for a in 0..net.num_arcs() {
        if tree.in_tree[a] {
            continue;
        }
        // Imbalance created by one unit on `a`, pushed to the root leaf-first.
        let mut excess = vec![0.0; nn];
        let (u, v) = net.arc(a);
        excess[u] -= 1.0;
        excess[v] += 1.0;
        let mut value = weights[a];
        let mut order: Vec<usize> = (0..nn).collect();
        order.sort_by_key(|&x| std::cmp::Reverse(tree.depth[x]));
        for x in order {
            let Some((_, arc)) = tree.parent[x] else { continue };
            let (tail, head) = net.arc(arc);
            let e = excess[x];
            if e == 0.0 {
                continue;
            }
            // Positive excess at x leaves along the tree arc toward the root.
            let flow = if tail == x { e } else { -e };
            debug_assert!(tail == x || head == x);
            value += weights[arc] * flow;
            let other = if tail == x { head } else { tail };
            excess[other] += e;
            excess[x] = 0.0;
        }
        if value < -tol {
            out.push((a, value));
        }
    }
    out
}
