//! VRPSD instances and their text format.
//!
//! ```text
//! vrpsd 1
//! n <n> k <k> C <C>
//! qbar <q_1> ... <q_n>
//! var <s_1> ... <s_n>
//! <row 0: c_00>
//! <row 1: c_10 c_11>
//! ...
//! ```
//!
//! Row `i` of the cost matrix lists `c_i0 .. c_ii` (lower triangle with a
//! zero diagonal). Numbers may be decimals or rationals `p/q`.

use super::VrpsdError;

/// Depot `0`, customers `1..=n`, `k` vehicles of integer capacity `C`,
/// symmetric costs, integer expected demands and demand variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VrpsdInstance {
    pub n: usize,
    pub k: usize,
    pub capacity: i64,
    /// Expected demand of customer `v` at index `v - 1`.
    pub qbar: Vec<i64>,
    /// Demand variance of customer `v` at index `v - 1`.
    pub variance: Vec<f64>,
    cost: Vec<Vec<f64>>,
}

impl VrpsdInstance {
    /// Validates and builds an instance from a full symmetric cost matrix of
    /// size `(n + 1) x (n + 1)`.
    pub fn new(
        k: usize,
        capacity: i64,
        qbar: Vec<i64>,
        variance: Vec<f64>,
        cost: Vec<Vec<f64>>,
    ) -> Result<Self, VrpsdError> {
        let n = qbar.len();
        let bad = |m: String| Err(VrpsdError::InvalidInstance(m));
        if n == 0 {
            return bad("no customers".into());
        }
        if k == 0 || k > n {
            return bad(format!("k = {k} must lie in 1..={n}"));
        }
        if capacity <= 0 {
            return bad("capacity must be positive".into());
        }
        if variance.len() != n {
            return bad("variance count differs from customer count".into());
        }
        if cost.len() != n + 1 || cost.iter().any(|r| r.len() != n + 1) {
            return bad("cost matrix has wrong shape".into());
        }
        for (i, &q) in qbar.iter().enumerate() {
            if q < 1 || q > capacity {
                return bad(format!("expected demand of customer {} outside 1..=C", i + 1));
            }
        }
        if variance.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return bad("variances must be finite and nonnegative".into());
        }
        let kappa = variance[0] / qbar[0] as f64;
        for (i, (&s, &q)) in variance.iter().zip(&qbar).enumerate() {
            let r = s / q as f64;
            if (r - kappa).abs() > 1e-9 * kappa.abs().max(1e-300) && (r - kappa).abs() > 1e-15 {
                return bad(format!(
                    "variance-to-mean ratio of customer {} differs from customer 1",
                    i + 1
                ));
            }
        }
        for i in 0..=n {
            if cost[i][i] != 0.0 {
                return bad(format!("nonzero diagonal cost at {i}"));
            }
            for j in 0..i {
                if cost[i][j] != cost[j][i] {
                    return bad(format!("asymmetric cost between {j} and {i}"));
                }
                if !(cost[i][j] > 0.0) || !cost[i][j].is_finite() {
                    return bad(format!("cost between {j} and {i} must be positive"));
                }
            }
        }
        Ok(VrpsdInstance {
            n,
            k,
            capacity,
            qbar,
            variance,
            cost,
        })
    }

    pub fn cost(&self, u: usize, v: usize) -> f64 {
        self.cost[u][v]
    }

    pub fn qbar_of(&self, v: usize) -> i64 {
        self.qbar[v - 1]
    }

    /// Common variance-to-mean ratio of the demands.
    pub fn kappa(&self) -> f64 {
        self.variance[0] / self.qbar[0] as f64
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n
    }

    pub fn num_edges(&self) -> usize {
        (self.n + 1) * self.n / 2
    }

    /// Index of edge `{u, v}` in lexicographic order of `(min, max)`.
    pub fn edge_index(&self, u: usize, v: usize) -> usize {
        assert!(u != v, "loop edge");
        let (i, j) = if u < v { (u, v) } else { (v, u) };
        let nv = self.n + 1;
        i * nv - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        let nv = self.n + 1;
        let mut base = 0;
        for i in 0..nv {
            let len = nv - i - 1;
            if e < base + len {
                return (i, i + 1 + e - base);
            }
            base += len;
        }
        panic!("edge index {e} out of range");
    }

    pub fn edge_costs(&self) -> Vec<f64> {
        (0..self.num_edges())
            .map(|e| {
                let (u, v) = self.edge_ends(e);
                self.cost[u][v]
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, VrpsdError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, msg: &str| VrpsdError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks != ["vrpsd", "1"] {
            return Err(err(ln, "expected header `vrpsd 1`"));
        }
        let (ln, dims) = lines.next().ok_or_else(|| err(ln, "missing dimension line"))?;
        let toks: Vec<&str> = dims.split_whitespace().collect();
        if !toks.len().is_multiple_of(2) {
            return Err(err(ln, "dimension line must be key/value pairs"));
        }
        let (mut n, mut k, mut cap) = (None, None, None);
        for pair in toks.chunks(2) {
            let value: i64 = pair[1]
                .parse()
                .map_err(|_| err(ln, &format!("bad integer `{}`", pair[1])))?;
            match pair[0] {
                "n" => n = Some(value),
                "k" => k = Some(value),
                "C" => cap = Some(value),
                other => return Err(err(ln, &format!("unknown key `{other}`"))),
            }
        }
        let n = n.ok_or_else(|| err(ln, "missing n"))?;
        let k = k.ok_or_else(|| err(ln, "missing k"))?;
        let cap = cap.ok_or_else(|| err(ln, "missing C"))?;
        if n < 1 || k < 1 {
            return Err(err(ln, "n and k must be positive"));
        }
        let n = n as usize;
        let mut keyed = |name: &str| -> Result<Vec<f64>, VrpsdError> {
            let (ln, line) = lines.next().ok_or_else(|| err(0, &format!("missing `{name}` line")))?;
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap_or("");
            if key != name {
                return Err(err(ln, &format!("unknown key `{key}`, expected `{name}`")));
            }
            let vals: Vec<f64> = toks
                .map(|t| parse_number(t).ok_or_else(|| err(ln, &format!("bad number `{t}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != n {
                return Err(err(ln, &format!("`{name}` needs {n} values")));
            }
            Ok(vals)
        };
        let qbar_f = keyed("qbar")?;
        let var = keyed("var")?;
        let mut qbar = Vec::with_capacity(n);
        for q in qbar_f {
            if q.fract() != 0.0 {
                return Err(VrpsdError::InvalidInstance("expected demands must be integers".into()));
            }
            qbar.push(q as i64);
        }
        let mut cost = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..=n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| err(0, &format!("missing cost row {i}")))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| parse_number(t).ok_or_else(|| err(ln, &format!("bad number `{t}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != i + 1 {
                return Err(err(ln, &format!("cost row {i} needs {} entries", i + 1)));
            }
            for (j, &v) in vals.iter().enumerate() {
                cost[i][j] = v;
                cost[j][i] = v;
            }
            if vals[i] != 0.0 {
                return Err(err(ln, "diagonal cost must be zero"));
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content"));
        }
        VrpsdInstance::new(k as usize, cap, qbar, var, cost)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("vrpsd 1\n");
        s.push_str(&format!("n {} k {} C {}\n", self.n, self.k, self.capacity));
        let join = |v: Vec<String>| v.join(" ");
        s.push_str(&format!("qbar {}\n", join(self.qbar.iter().map(|q| q.to_string()).collect())));
        s.push_str(&format!("var {}\n", join(self.variance.iter().map(|v| fmt_num(*v)).collect())));
        for i in 0..=self.n {
            s.push_str(&join((0..=i).map(|j| fmt_num(self.cost[i][j])).collect()));
            s.push('\n');
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    let v = match tok.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.parse().ok()?;
            let q: f64 = q.parse().ok()?;
            if q == 0.0 {
                return None;
            }
            p / q
        }
        None => tok.parse().ok()?,
    };
    v.is_finite().then_some(v)
}
