//! Rounded capacity inequalities and integer L-shaped optimality cuts
//! (path, set and route cuts) over `(x, theta')`.

use super::{PsiTable, VrpsdError, VrpsdInstance};

/// Minimum violation reported by the separators.
pub const SEP_TOL: f64 = 1e-6;
/// Support threshold for edges of the fractional support graph.
pub const SUPPORT_TOL: f64 = 1e-6;
/// Largest customer count accepted by exact capacity-cut enumeration.
pub const MAX_RCI_CUSTOMERS: usize = 20;
/// Largest set handled by the partition-based recourse bound.
pub const MAX_BOUND_SET: usize = 10;

/// `x(delta(S)) >= 2 ceil(qbar(S) / C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rci {
    pub customers: Vec<usize>,
    pub rhs: f64,
    pub violation: f64,
}

impl Rci {
    pub fn coeffs(&self, inst: &VrpsdInstance) -> Vec<(usize, f64)> {
        let mut inside = vec![false; inst.n + 1];
        for &v in &self.customers {
            inside[v] = true;
        }
        (0..inst.num_edges())
            .filter(|&e| {
                let (u, v) = inst.edge_ends(e);
                inside[u] != inside[v]
            })
            .map(|e| (e, 1.0))
            .collect()
    }
}

pub fn min_vehicles(inst: &VrpsdInstance, customers: &[usize]) -> i64 {
    let q: i64 = customers.iter().map(|&v| inst.qbar_of(v)).sum();
    (q + inst.capacity - 1) / inst.capacity
}

/// Every violated capacity inequality, most violated first.
pub fn separate_rci_exact(inst: &VrpsdInstance, x: &[f64]) -> Result<Vec<Rci>, VrpsdError> {
    let n = inst.n;
    if n > MAX_RCI_CUSTOMERS {
        return Err(VrpsdError::TooManyCustomers(n));
    }
    let deg: Vec<f64> = (1..=n)
        .map(|v| (0..=n).filter(|&u| u != v).map(|u| x[inst.edge_index(u, v)]).sum())
        .collect();
    let total = 1usize << n;
    // inner[S] = x(E(S)), load[S] = qbar(S), degsum[S] = sum of degrees.
    let mut inner = vec![0.0f64; total];
    let mut load = vec![0i64; total];
    let mut degsum = vec![0.0f64; total];
    let mut found = Vec::new();
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let v = low + 1;
        let mut add = 0.0;
        let mut r = rest;
        while r != 0 {
            let b = r.trailing_zeros() as usize;
            add += x[inst.edge_index(v, b + 1)];
            r &= r - 1;
        }
        inner[mask] = inner[rest] + add;
        load[mask] = load[rest] + inst.qbar_of(v);
        degsum[mask] = degsum[rest] + deg[low];
        let cut = degsum[mask] - 2.0 * inner[mask];
        let need = 2.0 * ((load[mask] + inst.capacity - 1) / inst.capacity) as f64;
        if cut < need - SEP_TOL {
            found.push(Rci {
                customers: (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect(),
                rhs: need,
                violation: need - cut,
            });
        }
    }
    found.sort_by(|a, b| b.violation.total_cmp(&a.violation));
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlsKind {
    Path,
    Set,
    Route,
}

/// `sum_{v in customers} theta'_v + sum coeffs . x >= rhs`, written from
/// `sum theta' >= L (1 + sum_e x_e - const)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IlsCut {
    pub kind: IlsKind,
    pub customers: Vec<usize>,
    /// The recourse lower bound `L` scaling the cut.
    pub bound: f64,
    pub x_coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl IlsCut {
    fn new(kind: IlsKind, customers: Vec<usize>, bound: f64, edges: &[usize], constant: f64) -> Self {
        IlsCut {
            kind,
            customers,
            bound,
            x_coeffs: edges.iter().map(|&e| (e, -bound)).collect(),
            rhs: bound * constant,
        }
    }

    pub fn lhs(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.customers.iter().map(|&v| theta[v - 1]).sum::<f64>()
            + self.x_coeffs.iter().map(|&(e, c)| c * x[e]).sum::<f64>()
    }

    pub fn violation(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.rhs - self.lhs(x, theta)
    }
}

/// Connected components of the support graph on customers.
pub fn support_components(inst: &VrpsdInstance, x: &[f64]) -> Vec<Vec<usize>> {
    let n = inst.n;
    let mut comp = vec![usize::MAX; n + 1];
    let mut out = Vec::new();
    for start in 1..=n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for v in 1..=n {
                if v != u && comp[v] == usize::MAX && x[inst.edge_index(u, v)] > SUPPORT_TOL {
                    comp[v] = id;
                    members.push(v);
                }
            }
        }
        members.sort();
        out.push(members);
    }
    out
}

/// Orders a component along its support edges when they form a simple path,
/// verified by walking it from an endpoint.
pub fn component_path(inst: &VrpsdInstance, x: &[f64], members: &[usize]) -> Option<Vec<usize>> {
    if members.len() == 1 {
        return Some(members.to_vec());
    }
    let nbrs = |u: usize| -> Vec<usize> {
        members
            .iter()
            .copied()
            .filter(|&v| v != u && x[inst.edge_index(u, v)] > SUPPORT_TOL)
            .collect()
    };
    if members.iter().any(|&u| nbrs(u).len() > 2) {
        return None;
    }
    let start = *members.iter().find(|&&u| nbrs(u).len() == 1)?;
    let mut order = vec![start];
    let mut prev = 0;
    let mut cur = start;
    loop {
        let next: Vec<usize> = nbrs(cur).into_iter().filter(|&v| v != prev).collect();
        match next.as_slice() {
            [] => break,
            [v] => {
                if order.contains(v) {
                    return None;
                }
                prev = cur;
                cur = *v;
                order.push(cur);
            }
            _ => return None,
        }
    }
    (order.len() == members.len()).then_some(order)
}

/// Loads `mu0 <= limit` reachable as expected demand of a subset of the
/// customers outside `excluded`.
fn prefix_loads(inst: &VrpsdInstance, excluded: &[bool], limit: i64) -> Vec<i64> {
    if limit < 0 {
        return Vec::new();
    }
    let mut can = vec![false; limit as usize + 1];
    can[0] = true;
    for v in inst.customers() {
        if excluded[v] {
            continue;
        }
        let q = inst.qbar_of(v) as usize;
        for s in (q..=limit as usize).rev() {
            if can[s - q] {
                can[s] = true;
            }
        }
    }
    (0..=limit).filter(|&s| can[s as usize]).collect()
}

/// Least recourse of the customers of `path` served consecutively in either
/// orientation after any achievable expected load.
pub fn path_lower_bound(inst: &VrpsdInstance, psi: &PsiTable, path: &[usize]) -> Option<f64> {
    let q: i64 = path.iter().map(|&v| inst.qbar_of(v)).sum();
    if q > inst.capacity {
        return None;
    }
    let mut excluded = vec![false; inst.n + 1];
    for &v in path {
        excluded[v] = true;
    }
    let rev: Vec<usize> = path.iter().rev().copied().collect();
    let mut best = f64::INFINITY;
    for mu0 in prefix_loads(inst, &excluded, inst.capacity - q) {
        best = best
            .min(psi.route_sum(inst, path, mu0))
            .min(psi.route_sum(inst, &rev, mu0));
    }
    Some(best)
}

/// Lower bound on the recourse paid by the customers of `set` in any
/// solution that serves them in exactly `ceil(qbar(S)/C)` maximal
/// consecutive segments: the cheapest split of `S` into that many segments,
/// each ordered freely and preceded by any achievable expected load.
/// Returns `+inf` when no such split exists.
pub fn recourse_lower_bound(inst: &VrpsdInstance, psi: &PsiTable, set: &[usize]) -> Result<f64, VrpsdError> {
    let s = set.len();
    if s == 0 || set.iter().any(|&v| v == 0 || v > inst.n) {
        return Err(VrpsdError::DomainError("set must be a nonempty customer subset".into()));
    }
    if s > MAX_BOUND_SET {
        return Err(VrpsdError::SIntractable(s));
    }
    let blocks = min_vehicles(inst, set) as usize;
    if blocks > inst.k {
        return Ok(f64::INFINITY);
    }
    let cap = inst.capacity;
    let full = (1usize << s) - 1;
    let mut load = vec![0i64; full + 1];
    for mask in 1..=full {
        let b = mask.trailing_zeros() as usize;
        load[mask] = load[mask & (mask - 1)] + inst.qbar_of(set[b]);
    }
    // order_cost[mu0][B]: cheapest ordering of B after load mu0.
    let mut best_block = vec![f64::INFINITY; full + 1];
    let mut order_cost = vec![vec![f64::INFINITY; full + 1]; cap as usize + 1];
    for (mu0, g) in order_cost.iter_mut().enumerate() {
        g[0] = 0.0;
        for mask in 1..=full {
            let mu = mu0 as i64 + load[mask];
            if mu > cap {
                continue;
            }
            let mut m = mask;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                m &= m - 1;
                let prev = g[mask & !(1 << b)];
                if prev.is_finite() {
                    let val = prev + psi.get(set[b], mu);
                    if val < g[mask] {
                        g[mask] = val;
                    }
                }
            }
        }
    }
    for mask in 1..=full {
        if load[mask] > cap {
            continue;
        }
        let mut excluded = vec![false; inst.n + 1];
        for (b, &v) in set.iter().enumerate() {
            if mask >> b & 1 == 1 {
                excluded[v] = true;
            }
        }
        for mu0 in prefix_loads(inst, &excluded, cap - load[mask]) {
            best_block[mask] = best_block[mask].min(order_cost[mu0 as usize][mask]);
        }
    }
    // split[j][M]: cheapest split of M into j blocks.
    let mut split = vec![vec![f64::INFINITY; full + 1]; blocks + 1];
    split[0][0] = 0.0;
    for j in 1..=blocks {
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let rest = mask & !low;
            // Blocks containing the lowest element of `mask`.
            let mut sub = rest;
            loop {
                let block = sub | low;
                let a = best_block[block];
                let b = split[j - 1][mask & !block];
                if a.is_finite() && b.is_finite() && a + b < split[j][mask] {
                    split[j][mask] = a + b;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    Ok(split[blocks][full])
}

/// Path cuts for path-shaped support components and set cuts for every
/// component and every extra candidate set, keeping the violated ones.
pub fn separate_p_s_cuts(
    inst: &VrpsdInstance,
    psi: &PsiTable,
    x: &[f64],
    theta: &[f64],
    extra_sets: &[Vec<usize>],
) -> Vec<IlsCut> {
    let mut cuts = Vec::new();
    let components = support_components(inst, x);
    for comp in &components {
        if let Some(path) = component_path(inst, x, comp) {
            if let Some(bound) = path_lower_bound(inst, psi, &path) {
                if bound > SEP_TOL {
                    let edges: Vec<usize> = path.windows(2).map(|w| inst.edge_index(w[0], w[1])).collect();
                    let constant = 1.0 - edges.len() as f64;
                    let cut = IlsCut::new(IlsKind::Path, path.clone(), bound, &edges, constant);
                    if cut.violation(x, theta) > SEP_TOL {
                        cuts.push(cut);
                    }
                }
            }
        }
    }
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for set in components.iter().chain(extra_sets) {
        let mut set = set.clone();
        set.sort();
        if seen.contains(&set) || set.len() > MAX_BOUND_SET {
            continue;
        }
        seen.push(set.clone());
        let bound = match recourse_lower_bound(inst, psi, &set) {
            Ok(b) if b.is_finite() && b > SEP_TOL => b,
            _ => continue,
        };
        let mut edges = Vec::new();
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                edges.push(inst.edge_index(u, v));
            }
        }
        let constant = 1.0 - set.len() as f64 + min_vehicles(inst, &set) as f64;
        let cut = IlsCut::new(IlsKind::Set, set, bound, &edges, constant);
        if cut.violation(x, theta) > SEP_TOL {
            cuts.push(cut);
        }
    }
    cuts
}

/// Route cuts `sum theta' >= E*(R) (1 + T(x) - T(R))` for support
/// components that close into complete q-routes through the depot, where
/// `E*(R)` is the recourse of the cheaper orientation. For a single customer
/// `T = x_{0v}`. Otherwise `T` sums the depot edges, the inner edges, and
/// the inner edges at both ends once more; by the degree rows every
/// integral `x` other than `R` has `T(x) <= T(R) - 1`.
pub fn separate_route_cuts(inst: &VrpsdInstance, psi: &PsiTable, x: &[f64], theta: &[f64]) -> Vec<IlsCut> {
    let mut cuts = Vec::new();
    for comp in support_components(inst, x) {
        let Some(path) = component_path(inst, x, &comp) else {
            continue;
        };
        let q: i64 = path.iter().map(|&v| inst.qbar_of(v)).sum();
        if q > inst.capacity {
            continue;
        }
        let rev: Vec<usize> = path.iter().rev().copied().collect();
        let bound = psi.route_sum(inst, &path, 0).min(psi.route_sum(inst, &rev, 0));
        if bound <= SEP_TOL {
            continue;
        }
        let (edges, mult) = if path.len() == 1 {
            (vec![inst.edge_index(0, path[0])], 2.0)
        } else {
            let last = path.len() - 1;
            let mut e = vec![inst.edge_index(0, path[0]), inst.edge_index(path[last], 0)];
            e.extend(path.windows(2).map(|w| inst.edge_index(w[0], w[1])));
            e.push(inst.edge_index(path[0], path[1]));
            e.push(inst.edge_index(path[last - 1], path[last]));
            (e, path.len() as f64 + 3.0)
        };
        let cut = IlsCut::new(IlsKind::Route, path, bound, &edges, 1.0 - mult);
        if cut.violation(x, theta) > SEP_TOL {
            cuts.push(cut);
        }
    }
    cuts
}
