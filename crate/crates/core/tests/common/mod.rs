#![allow(dead_code)]

use corner_benders::corner::{EpiPoint, EpigraphCone, ProblemData};
use corner_benders::oracle::{brute_force_optimum, sequence_recourse};
use corner_benders::polar::Cut;
use corner_benders::lp::{LpModel, Sense, SparseMatrix, StandardLp};
use corner_benders::network::Network;
use corner_benders::vrpsd::{route_cost, PsiTable, VrpsdInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ex1() -> VrpsdInstance {
    VrpsdInstance::parse(include_str!("../data/ex1.vrpsd")).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bounded, nonempty `Y = {A y = b, y >= 0}` with a strictly positive point,
/// random `Q` and `d`, `T = -I`, `h = 0` and a box for `X`. With
/// `implied_row`, the last row of `Q` is the all-ones row, which is constant
/// over `Y` and creates an implicit equality in the epigraph.
pub fn random_data(seed: u64, implied_row: bool) -> ProblemData {
    let mut r = rng(seed);
    let m = r.gen_range(4..8);
    let rows = r.gen_range(1..3);
    let p = r.gen_range(2..4);
    let y0: Vec<f64> = (0..m).map(|_| r.gen_range(1..4) as f64).collect();
    let mut a = vec![vec![1.0; m]];
    for _ in 1..rows {
        a.push((0..m).map(|_| r.gen_range(-2..3) as f64).collect());
    }
    let b: Vec<f64> = a.iter().map(|row| dot(row, &y0)).collect();
    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..m).map(|_| r.gen_range(-3..4) as f64).collect())
        .collect();
    if implied_row {
        q[p - 1] = vec![1.0; m];
    }
    let d: Vec<f64> = (0..m).map(|_| r.gen_range(0..10) as f64).collect();
    let mut x_set = LpModel::new();
    for _ in 0..p {
        x_set.add_var(-20.0, 20.0, 0.0);
    }
    let c: Vec<f64> = (0..p).map(|_| r.gen_range(-3..4) as f64).collect();
    x_set.set_objective(&c);
    ProblemData {
        c,
        d,
        t: SparseMatrix::from_columns(p, (0..p).map(|i| vec![(i, -1.0)]).collect()),
        q: SparseMatrix::from_dense(&q),
        h: vec![0.0; p],
        x_set,
        y_set: StandardLp::new(SparseMatrix::from_dense(&a), b, vec![0.0; m]),
        y_network: None,
    }
}

/// Layered DAG from node 0 to the last node in which every node lies on a
/// source-sink path, with about `arcs` arcs.
pub fn random_dag(seed: u64, nodes: usize, arcs: usize, k: i64) -> Network {
    let mut r = rng(seed);
    let mut list: Vec<(usize, usize)> = Vec::new();
    for v in 1..nodes {
        let u = r.gen_range(0..v);
        list.push((u, v));
    }
    for v in 0..nodes - 1 {
        let w = r.gen_range(v + 1..nodes);
        list.push((v, w));
    }
    while list.len() < arcs {
        let u = r.gen_range(0..nodes - 1);
        let v = r.gen_range(u + 1..nodes);
        list.push((u, v));
    }
    Network::st_flow(nodes, list, 0, nodes - 1, k).unwrap()
}

/// Adds `>=`/`<=`/`=` rows to a model from dense coefficients.
pub fn add_dense_row(model: &mut LpModel, coeffs: &[f64], sense: Sense, rhs: f64) {
    let c = coeffs.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(j, &v)| (j, v)).collect();
    model.add_row(c, sense, rhs);
}

/// Random VRPSD instance with `n` customers via the public generator.
pub fn random_instance(seed: u64, n: usize, k: usize) -> VrpsdInstance {
    corner_benders::vrpsd::generate(n, k, 0.9, seed).unwrap()
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// All vertices of `{A y = b, y >= 0}` (A of full row rank) by basis
/// enumeration.
pub fn enumerate_vertices(y: &StandardLp) -> Vec<Vec<f64>> {
    let a = y.a.to_dense();
    let rows = a.len();
    let m = y.a.ncols();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..rows).collect();
    loop {
        let sq: Vec<Vec<f64>> = (0..rows).map(|i| subset.iter().map(|&j| a[i][j]).collect()).collect();
        if let Some(yb) = solve_square(sq, y.b.clone()) {
            if yb.iter().all(|&v| v >= -1e-9) {
                let mut v = vec![0.0; m];
                for (k, &j) in subset.iter().enumerate() {
                    v[j] = yb[k].max(0.0);
                }
                if !out.iter().any(|o| o.iter().zip(&v).all(|(p, q)| (p - q).abs() < 1e-9)) {
                    out.push(v);
                }
            }
        }
        // Next combination in lexicographic order.
        let mut i = rows;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < m - rows + i {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..rows {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Tolerance for the EX1 worked values.
pub const TOL: f64 = 1e-5;

/// First-stage optimal solution with routes (2, 1) and (3). Edge order 01, 02, 03, 12, 13, 23.
pub const X_BAR: [f64; 6] = [1.0, 1.0, 2.0, 1.0, 0.0, 0.0];
/// Cut coefficients `x01 + x03 - 15 x12 - 2 x13 - 15 x23 + theta >= 0`.
pub const ALPHA1: [f64; 6] = [1.0, 0.0, 1.0, -15.0, -2.0, -15.0];
pub const ALPHA2: [f64; 6] = [0.0, 0.0, 0.0, -14.0, 0.0, -14.0];

pub fn ex1_costs() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 14.0, 20.0, 14.0],
        vec![14.0, 0.0, 14.0, 20.0],
        vec![20.0, 14.0, 0.0, 14.0],
        vec![14.0, 20.0, 14.0, 0.0],
    ]
}

pub fn with_qbar(qbar: [i64; 3]) -> VrpsdInstance {
    let var = qbar.iter().map(|&q| 1e-3 * q as f64).collect();
    VrpsdInstance::new(2, 3, qbar.to_vec(), var, ex1_costs()).unwrap()
}

pub fn same_routes(a: &[Vec<usize>], b: &[Vec<usize>]) -> bool {
    let norm = |rs: &[Vec<usize>]| {
        let mut out: Vec<Vec<usize>> = rs
            .iter()
            .map(|r| {
                let mut rev = r.clone();
                rev.reverse();
                r.clone().min(rev)
            })
            .collect();
        out.sort();
        out
    };
    norm(a) == norm(b)
}

/// Mean-demand vectors in `{1, 2, 3}^3` reproducing the EX1 reference values:
/// recourse 14 on route (2, 1), first-stage optimum 76 and optimum 88 with
/// routes (2) and (1, 3).
pub fn reconstruct_qbar() -> Vec<[i64; 3]> {
    let mut matches = Vec::new();
    for a in 1..=3 {
        for b in 1..=3 {
            for c in 1..=3 {
                let inst = with_qbar([a, b, c]);
                if inst.qbar_of(1) + inst.qbar_of(2) > 3 {
                    continue;
                }
                let recourse = sequence_recourse(&inst, &[2, 1]);
                let first = brute_force_optimum(&inst, false);
                let full = brute_force_optimum(&inst, true);
                let (Ok(first), Ok(full)) = (first, full) else { continue };
                if (recourse - 14.0).abs() < 1e-3
                    && (route_cost(&inst, &[2, 1]) + route_cost(&inst, &[3]) - 76.0).abs() < TOL
                    && (first.value - 76.0).abs() < TOL
                    && (full.value - 88.0).abs() < 1e-3
                    && same_routes(&full.routes, &[vec![2], vec![1, 3]])
                {
                    matches.push([a, b, c]);
                }
            }
        }
    }
    matches
}

/// Integral solution: x with edge multiplicities and per-customer recourse.
pub struct Integral {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

pub fn integral_of(inst: &VrpsdInstance, psi: &PsiTable, routes: &[Vec<usize>]) -> Integral {
    let mut x = vec![0.0; inst.num_edges()];
    let mut theta = vec![0.0; inst.n];
    for r in routes {
        x[inst.edge_index(0, r[0])] += 1.0;
        x[inst.edge_index(*r.last().unwrap(), 0)] += 1.0;
        for w in r.windows(2) {
            x[inst.edge_index(w[0], w[1])] += 1.0;
        }
        let mut mu = 0;
        for &v in r {
            mu += inst.qbar_of(v);
            theta[v - 1] = psi.get(v, mu);
        }
    }
    Integral { x, theta }
}

pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// Every feasible solution with exactly `k` routes, in every orientation.
pub fn all_integral(inst: &VrpsdInstance) -> Vec<Vec<Vec<usize>>> {
    fn partitions(items: &[usize], k: usize) -> Vec<Vec<Vec<usize>>> {
        if items.is_empty() {
            return if k == 0 { vec![vec![]] } else { vec![] };
        }
        let first = items[0];
        let rest = &items[1..];
        let mut out = Vec::new();
        for mut p in partitions(rest, k.saturating_sub(1)) {
            if k == 0 {
                break;
            }
            p.push(vec![first]);
            out.push(p);
        }
        for p in partitions(rest, k) {
            for i in 0..p.len() {
                let mut q = p.clone();
                q[i].push(first);
                out.push(q);
            }
        }
        out
    }
    let customers: Vec<usize> = inst.customers().collect();
    let mut out = Vec::new();
    for part in partitions(&customers, inst.k) {
        if part.iter().any(|b| b.iter().map(|&v| inst.qbar_of(v)).sum::<i64>() > inst.capacity) {
            continue;
        }
        let mut acc: Vec<Vec<Vec<usize>>> = vec![vec![]];
        for block in &part {
            let mut next = Vec::new();
            for sol in &acc {
                for perm in permutations(block) {
                    let mut s = sol.clone();
                    s.push(perm);
                    next.push(s);
                }
            }
            acc = next;
        }
        out.extend(acc);
    }
    out
}

pub fn sample_y(data: &ProblemData, r: &mut impl Rng) -> Vec<f64> {
    let verts = enumerate_vertices(&data.y_set);
    let weights: Vec<f64> = verts.iter().map(|_| r.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut y = vec![0.0; data.m()];
    for (v, wt) in verts.iter().zip(&weights) {
        for j in 0..y.len() {
            y[j] += v[j] * wt / total;
        }
    }
    y
}

pub fn valid_on_cone(cone: &EpigraphCone, cut: &Cut, tol: f64) -> bool {
    cut.lhs(&cone.apex.w, cone.apex.theta) >= cut.beta - tol && cone.rays.iter().all(|r| r.dot(&cut.alpha, cut.alpha0) >= -tol)
}

pub fn candidate(data: &ProblemData, implied: bool, r: &mut impl Rng) -> EpiPoint {
    let y = sample_y(data, r);
    let mut w = data.q.mul_vec(&y);
    let mut theta = dot(&data.d, &y) + r.gen_range(-8.0..4.0);
    match r.gen_range(0..4) {
        0 if implied => {
            let last = w.len() - 1;
            w[last] += r.gen_range(-3.0..3.0);
        }
        1 => {
            for v in w.iter_mut() {
                *v += r.gen_range(-2.0..2.0);
            }
        }
        2 => theta = dot(&data.d, &y) + 1e-3,
        _ => {}
    }
    EpiPoint { w, theta }
}

