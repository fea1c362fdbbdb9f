//! Flow networks, spanning-tree bases, cycle rays and tree-potential ray
//! separation.

use std::collections::VecDeque;

use thiserror::Error;

use crate::lp::{SparseMatrix, StandardLp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("arc {0} references a missing node")]
    BadArc(usize),
    #[error("supplies do not sum to zero")]
    Unbalanced,
    #[error("underlying undirected graph is disconnected")]
    Disconnected,
    #[error("arc set is not a spanning tree")]
    NotSpanningTree,
    #[error("arc {0} belongs to the tree")]
    ArcInTree(usize),
    #[error("node {0} is unreachable from the source")]
    UnreachableNode(usize),
    #[error("network has a directed cycle")]
    NotAcyclic,
}

/// Directed network with integer supplies and optional capacities.
///
/// Supplies follow the incidence convention `N y = b` with `N[v][a] = +1`
/// when `v` is the head of `a` and `-1` when it is the tail, so a flow of
/// value `k` from `s` to `t` has `b_s = -k` and `b_t = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    num_nodes: usize,
    arcs: Vec<(usize, usize)>,
    supply: Vec<i64>,
    capacity: Vec<Option<i64>>,
    source: usize,
    sink: Option<usize>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(
        num_nodes: usize,
        arcs: Vec<(usize, usize)>,
        supply: Vec<i64>,
        capacity: Vec<Option<i64>>,
        source: usize,
        sink: Option<usize>,
    ) -> Result<Self, NetworkError> {
        assert_eq!(supply.len(), num_nodes);
        assert_eq!(capacity.len(), arcs.len());
        let mut out_arcs = vec![Vec::new(); num_nodes];
        let mut in_arcs = vec![Vec::new(); num_nodes];
        for (a, &(u, v)) in arcs.iter().enumerate() {
            if u >= num_nodes || v >= num_nodes {
                return Err(NetworkError::BadArc(a));
            }
            out_arcs[u].push(a);
            in_arcs[v].push(a);
        }
        if supply.iter().sum::<i64>() != 0 {
            return Err(NetworkError::Unbalanced);
        }
        let net = Network {
            num_nodes,
            arcs,
            supply,
            capacity,
            source,
            sink,
            out_arcs,
            in_arcs,
        };
        if num_nodes == 0 || source >= num_nodes || !net.is_connected() {
            return Err(NetworkError::Disconnected);
        }
        Ok(net)
    }

    /// Uncapacitated `s`-`t` network carrying `k` units.
    pub fn st_flow(
        num_nodes: usize,
        arcs: Vec<(usize, usize)>,
        s: usize,
        t: usize,
        k: i64,
    ) -> Result<Self, NetworkError> {
        let mut supply = vec![0; num_nodes];
        supply[s] -= k;
        supply[t] += k;
        let m = arcs.len();
        Network::new(num_nodes, arcs, supply, vec![None; m], s, Some(t))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, a: usize) -> (usize, usize) {
        self.arcs[a]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn supply(&self) -> &[i64] {
        &self.supply
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> Option<usize> {
        self.sink
    }

    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: usize) -> &[usize] {
        &self.in_arcs[v]
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([self.source]);
        seen[self.source] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &a in self.out_arcs[v].iter().chain(&self.in_arcs[v]) {
                let (x, y) = self.arcs[a];
                let w = if x == v { y } else { x };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.num_nodes
    }

    /// Node-arc incidence matrix over all nodes.
    pub fn incidence(&self) -> SparseMatrix {
        let cols = self
            .arcs
            .iter()
            .map(|&(u, v)| vec![(u, -1.0), (v, 1.0)])
            .collect();
        SparseMatrix::from_columns(self.num_nodes, cols)
    }

    /// Rows kept in the flow polytope (all nodes but the source).
    pub fn kept_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes).filter(|&v| v != self.source).collect()
    }

    /// `{y : N' y = b', 0 <= y <= u}` with the source row removed. Finite
    /// capacities add one row and one slack column each, after the arcs.
    pub fn flow_polytope(&self) -> StandardLp {
        let kept = self.kept_nodes();
        let mut a = self.incidence().select_rows(&kept);
        let mut b: Vec<f64> = kept.iter().map(|&v| self.supply[v] as f64).collect();
        let capped: Vec<usize> = (0..self.arcs.len()).filter(|&j| self.capacity[j].is_some()).collect();
        if !capped.is_empty() {
            let rows = kept.len() + capped.len();
            let mut cols: Vec<Vec<(usize, f64)>> = (0..self.arcs.len()).map(|j| a.col(j).to_vec()).collect();
            for (k, &j) in capped.iter().enumerate() {
                cols[j].push((kept.len() + k, 1.0));
                b.push(self.capacity[j].unwrap() as f64);
            }
            for k in 0..capped.len() {
                cols.push(vec![(kept.len() + k, 1.0)]);
            }
            a = SparseMatrix::from_columns(rows, cols);
        }
        let n = a.ncols();
        StandardLp::new(a, b, vec![0.0; n])
    }

    /// Positive flow of value `k` on every arc lying on some source-sink
    /// path: one unit path through each such arc, superposed and rescaled.
    pub fn interior_flow(&self, k: f64) -> Result<Vec<f64>, NetworkError> {
        let t = self.sink.ok_or(NetworkError::UnreachableNode(self.source))?;
        let (fwd, fwd_pred) = self.bfs(self.source, true);
        let (bwd, bwd_succ) = self.bfs(t, false);
        if !fwd[t] {
            return Err(NetworkError::UnreachableNode(t));
        }
        let mut y = vec![0.0; self.arcs.len()];
        let mut paths = 0usize;
        for (a, &(u, v)) in self.arcs.iter().enumerate() {
            if !fwd[u] || !bwd[v] {
                continue;
            }
            paths += 1;
            y[a] += 1.0;
            let mut x = u;
            while let Some(p) = fwd_pred[x] {
                y[p] += 1.0;
                x = self.arcs[p].0;
            }
            let mut x = v;
            while let Some(p) = bwd_succ[x] {
                y[p] += 1.0;
                x = self.arcs[p].1;
            }
        }
        let scale = k / paths as f64;
        Ok(y.into_iter().map(|v| v * scale).collect())
    }

    /// Directed BFS (forward along arcs, or backward) recording the arc used
    /// to reach each node.
    fn bfs(&self, start: usize, forward: bool) -> (Vec<bool>, Vec<Option<usize>>) {
        let mut seen = vec![false; self.num_nodes];
        let mut via = vec![None; self.num_nodes];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let list = if forward { &self.out_arcs[v] } else { &self.in_arcs[v] };
            for &a in list {
                let w = if forward { self.arcs[a].1 } else { self.arcs[a].0 };
                if !seen[w] {
                    seen[w] = true;
                    via[w] = Some(a);
                    queue.push_back(w);
                }
            }
        }
        (seen, via)
    }

    /// Topological order with ties resolved by node index.
    pub fn topological_order(&self) -> Result<Vec<usize>, NetworkError> {
        let mut indeg: Vec<usize> = (0..self.num_nodes).map(|v| self.in_arcs[v].len()).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..self.num_nodes).filter(|&v| indeg[v] == 0).map(std::cmp::Reverse).collect();
        let mut order = Vec::with_capacity(self.num_nodes);
        while let Some(std::cmp::Reverse(v)) = ready.pop() {
            order.push(v);
            for &a in &self.out_arcs[v] {
                let w = self.arcs[a].1;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(std::cmp::Reverse(w));
                }
            }
        }
        if order.len() != self.num_nodes {
            return Err(NetworkError::NotAcyclic);
        }
        Ok(order)
    }
}

/// Spanning tree rooted at the network source.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub root: usize,
    /// Parent node and connecting arc, `None` at the root.
    pub parent: Vec<Option<(usize, usize)>>,
    pub depth: Vec<usize>,
    /// Nodes in preorder (parents before children).
    pub preorder: Vec<usize>,
    pub in_tree: Vec<bool>,
}

impl SpanningTree {
    /// Builds the rooted tree from an arc set; fails unless the arcs form a
    /// spanning tree of the underlying undirected graph.
    pub fn from_arcs(net: &Network, tree_arcs: &[usize]) -> Result<Self, NetworkError> {
        if !tree_basis_check(net, tree_arcs) {
            return Err(NetworkError::NotSpanningTree);
        }
        let n = net.num_nodes();
        let mut adj = vec![Vec::new(); n];
        let mut in_tree = vec![false; net.num_arcs()];
        for &a in tree_arcs {
            let (u, v) = net.arc(a);
            adj[u].push((v, a));
            adj[v].push((u, a));
            in_tree[a] = true;
        }
        let root = net.source();
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut seen = vec![false; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(v) = stack.pop() {
            preorder.push(v);
            for &(w, a) in adj[v].iter().rev() {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, a));
                    depth[w] = depth[v] + 1;
                    stack.push(w);
                }
            }
        }
        Ok(SpanningTree {
            root,
            parent,
            depth,
            preorder,
            in_tree,
        })
    }

    pub fn tree_arcs(&self) -> Vec<usize> {
        (0..self.in_tree.len()).filter(|&a| self.in_tree[a]).collect()
    }

    pub fn nontree_arcs(&self) -> Vec<usize> {
        (0..self.in_tree.len()).filter(|&a| !self.in_tree[a]).collect()
    }

    /// Basic flow of the tree: the unique solution of `N' y = b'` supported
    /// on tree arcs.
    pub fn tree_flow(&self, net: &Network) -> Vec<f64> {
        let mut y = vec![0.0; net.num_arcs()];
        // Net demand of each subtree, accumulated from the leaves upwards.
        let mut demand: Vec<f64> = net.supply().iter().map(|&b| b as f64).collect();
        for &v in self.preorder.iter().rev() {
            if let Some((p, a)) = self.parent[v] {
                // Flow on `a` must deliver the subtree demand of `v`.
                let (_, head) = net.arc(a);
                y[a] = if head == v { demand[v] } else { -demand[v] };
                demand[p] += demand[v];
            }
        }
        y
    }
}

/// Union-find test that `arcs` has `|V| - 1` elements and no cycle.
pub fn tree_basis_check(net: &Network, arcs: &[usize]) -> bool {
    let n = net.num_nodes();
    if arcs.len() + 1 != n {
        return false;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &a in arcs {
        if a >= net.num_arcs() {
            return false;
        }
        let (u, v) = net.arc(a);
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return false;
        }
        parent[ru] = rv;
    }
    true
}

/// Cycle closed by non-tree arc `a`, oriented so that `a` carries `+1`.
/// Entries are `+1` for arcs traversed forward and `-1` for backward ones.
pub fn cycle_ray(net: &Network, tree: &SpanningTree, a: usize) -> Result<Vec<(usize, i8)>, NetworkError> {
    if tree.in_tree[a] {
        return Err(NetworkError::ArcInTree(a));
    }
    let (u, v) = net.arc(a);
    let mut ray = vec![(a, 1i8)];
    // Walk v -> u through the tree: climb from v up to the common ancestor,
    // then down to u.
    let (mut x, mut y) = (v, u);
    let mut up = Vec::new();
    let mut down = Vec::new();
    while x != y {
        if tree.depth[x] >= tree.depth[y] {
            let (p, arc) = tree.parent[x].unwrap();
            // Traversal x -> p.
            let sign = if net.arc(arc) == (x, p) { 1 } else { -1 };
            up.push((arc, sign));
            x = p;
        } else {
            let (p, arc) = tree.parent[y].unwrap();
            // Traversal p -> y (reached later when walking down).
            let sign = if net.arc(arc) == (p, y) { 1 } else { -1 };
            down.push((arc, sign));
            y = p;
        }
    }
    ray.extend(up);
    ray.extend(down.into_iter().rev());
    Ok(ray)
}

/// Shortest-path arborescence of a DAG from the source. Among equally short
/// incoming arcs, the first in input order is kept.
pub fn shortest_path_tree(net: &Network, weights: &[f64]) -> Result<(SpanningTree, Vec<f64>), NetworkError> {
    assert_eq!(weights.len(), net.num_arcs());
    let order = net.topological_order()?;
    let mut dist = vec![f64::INFINITY; net.num_nodes()];
    let mut pred = vec![None; net.num_nodes()];
    dist[net.source()] = 0.0;
    for &v in &order {
        if v == net.source() {
            continue;
        }
        for &a in net.in_arcs(v) {
            let u = net.arc(a).0;
            let cand = dist[u] + weights[a];
            if cand < dist[v] - 1e-12 * (1.0 + cand.abs()) {
                dist[v] = cand;
                pred[v] = Some(a);
            }
        }
    }
    if let Some(v) = (0..net.num_nodes()).find(|&v| v != net.source() && pred[v].is_none()) {
        return Err(NetworkError::UnreachableNode(v));
    }
    let arcs: Vec<usize> = pred.iter().flatten().copied().collect();
    Ok((SpanningTree::from_arcs(net, &arcs)?, dist))
}

/// Per-arc reduced weights `alpha^T Q_a + alpha0 d_a`.
pub fn arc_weights(q: &SparseMatrix, d: &[f64], alpha: &[f64], alpha0: f64) -> Vec<f64> {
    (0..q.ncols()).map(|a| q.col_dot(a, alpha) + alpha0 * d[a]).collect()
}

/// Non-tree arcs whose cycle ray has negative weight below `-tol`, with the
/// ray weight. Uses tree potentials, so the cost is linear in the network
/// size once arc weights are known.
pub fn find_violated_rays(net: &Network, tree: &SpanningTree, weights: &[f64], tol: f64) -> Vec<(usize, f64)> {
    let pot = tree_potentials(net, tree, weights);
    let mut out = Vec::new();
    for (a, &(u, v)) in net.arcs().iter().enumerate() {
        if tree.in_tree[a] {
            continue;
        }
        let val = pot[u] - pot[v] + weights[a];
        if val < -tol {
            out.push((a, val));
        }
    }
    out
}

/// Potentials with `nu_root = 0` and `nu_child = nu_parent +- w` along tree
/// arcs (plus when the arc points away from the root).
pub fn tree_potentials(net: &Network, tree: &SpanningTree, weights: &[f64]) -> Vec<f64> {
    let mut pot = vec![0.0; net.num_nodes()];
    for &v in &tree.preorder {
        if let Some((p, a)) = tree.parent[v] {
            pot[v] = if net.arc(a) == (p, v) {
                pot[p] + weights[a]
            } else {
                pot[p] - weights[a]
            };
        }
    }
    pot
}
