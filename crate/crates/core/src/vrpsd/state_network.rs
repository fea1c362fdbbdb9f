//! Acyclic network whose nodes are (customer, expected load) states and
//! whose source-sink paths are q-route sequences.

use crate::lp::SparseMatrix;
use crate::network::Network;

use super::{PsiTable, VrpsdInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    /// `(s, [v, qbar_v])`.
    Source,
    /// `([u, mu], [v, mu + qbar_v])` with `u != v`.
    Forward,
    /// `([v, mu], t)`.
    Sink,
}

#[derive(Debug, Clone)]
pub struct StateNetwork {
    pub net: Network,
    /// `(v, mu)` per node; `None` for the source and sink.
    pub states: Vec<Option<(usize, i64)>>,
    pub kind: Vec<ArcKind>,
    /// Edge index traversed by each arc.
    pub edge: Vec<usize>,
    /// Arc costs: the recourse charged to the head customer, zero on sink arcs.
    pub cost: Vec<f64>,
    pub s: usize,
    pub t: usize,
}

impl StateNetwork {
    pub fn num_arcs(&self) -> usize {
        self.kind.len()
    }

    /// Customer of the head state of a source or forward arc.
    pub fn head_customer(&self, a: usize) -> Option<usize> {
        let (_, v) = self.net.arc(a);
        self.states[v].map(|(c, _)| c)
    }

    /// Edge-arc incidence `Q`: column `a` is the unit vector of `edge(a)`.
    pub fn q_matrix(&self, num_edges: usize) -> SparseMatrix {
        let cols = self.edge.iter().map(|&e| vec![(e, 1.0)]).collect();
        SparseMatrix::from_columns(num_edges, cols)
    }

    /// Customer sequence of an `s`-`t` path given by its arcs.
    pub fn path_customers(&self, arcs: &[usize]) -> Vec<usize> {
        arcs.iter().filter_map(|&a| self.head_customer(a)).collect()
    }

    /// Number of `s`-`t` paths.
    pub fn count_paths(&self) -> u128 {
        let order = self.net.topological_order().expect("state network is acyclic");
        let mut ways = vec![0u128; self.net.num_nodes()];
        ways[self.s] = 1;
        for v in order {
            for &a in self.net.out_arcs(v) {
                let w = self.net.arc(a).1;
                ways[w] += ways[v];
            }
        }
        ways[self.t]
    }
}

/// Builds the state network with `k` units of flow from `s` to `t`.
/// States unreachable from `s` are never created.
pub fn build_state_network(inst: &VrpsdInstance, psi: &PsiTable) -> StateNetwork {
    let cap = inst.capacity;
    let n = inst.n;
    let mut reachable = vec![vec![false; cap as usize + 1]; n + 1];
    for v in inst.customers() {
        reachable[v][inst.qbar_of(v) as usize] = true;
    }
    for mu in 1..=cap {
        for u in inst.customers() {
            if !reachable[u][mu as usize] {
                continue;
            }
            for v in inst.customers() {
                let next = mu + inst.qbar_of(v);
                if v != u && next <= cap {
                    reachable[v][next as usize] = true;
                }
            }
        }
    }
    // Node ids: s, states ordered by (mu, v), t.
    let mut states: Vec<Option<(usize, i64)>> = vec![None];
    let mut id = vec![vec![usize::MAX; cap as usize + 1]; n + 1];
    for mu in 1..=cap {
        for v in inst.customers() {
            if reachable[v][mu as usize] {
                id[v][mu as usize] = states.len();
                states.push(Some((v, mu)));
            }
        }
    }
    let s = 0;
    let t = states.len();
    states.push(None);

    let mut arcs = Vec::new();
    let mut kind = Vec::new();
    let mut edge = Vec::new();
    let mut cost = Vec::new();
    // Arcs ordered by tail node, then head node.
    let mut src: Vec<(usize, usize)> = inst
        .customers()
        .map(|v| (id[v][inst.qbar_of(v) as usize], v))
        .collect();
    src.sort();
    for (head, v) in src {
        arcs.push((s, head));
        kind.push(ArcKind::Source);
        edge.push(inst.edge_index(0, v));
        cost.push(psi.get(v, inst.qbar_of(v)));
    }
    for tail in 1..t {
        let (u, mu) = states[tail].unwrap();
        let mut fwd: Vec<(usize, usize)> = inst
            .customers()
            .filter(|&v| v != u && mu + inst.qbar_of(v) <= cap)
            .map(|v| (id[v][(mu + inst.qbar_of(v)) as usize], v))
            .collect();
        fwd.sort();
        for (head, v) in fwd {
            arcs.push((tail, head));
            kind.push(ArcKind::Forward);
            edge.push(inst.edge_index(u, v));
            cost.push(psi.get(v, mu + inst.qbar_of(v)));
        }
        arcs.push((tail, t));
        kind.push(ArcKind::Sink);
        edge.push(inst.edge_index(u, 0));
        cost.push(0.0);
    }
    let net = Network::st_flow(t + 1, arcs, s, t, inst.k as i64).expect("state network is connected");
    StateNetwork {
        net,
        states,
        kind,
        edge,
        cost,
        s,
        t,
    }
}
