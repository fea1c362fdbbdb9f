//! Expected recourse of routes under normal demands with a common
//! variance-to-mean ratio.

use super::{VrpsdError, VrpsdInstance};

/// Residual probability mass below which failure series are truncated.
pub const SERIES_TOL: f64 = 1e-12;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of `Normal(mean, var)` at `x`; a point mass when `var == 0`.
pub fn cdf(mean: f64, var: f64, x: f64) -> f64 {
    if var <= 0.0 {
        if mean <= x {
            1.0
        } else {
            0.0
        }
    } else {
        normal_cdf((x - mean) / var.sqrt())
    }
}

/// `sum_{t >= 1} P[prior <= tC] - P[total <= tC]`, the expected number of
/// capacity failures at a customer whose demand moves the cumulative load
/// from `prior` to `total`.
fn failure_series(capacity: f64, prior: (f64, f64), total: (f64, f64)) -> f64 {
    let mut sum = 0.0;
    let mut t = 1.0;
    loop {
        let x = t * capacity;
        sum += cdf(prior.0, prior.1, x) - cdf(total.0, total.1, x);
        let residual = 1.0 - cdf(total.0, total.1, x);
        if residual < SERIES_TOL && x >= total.0 {
            return sum;
        }
        t += 1.0;
    }
}

/// Expected recourse charged to customer `v` when the expected load after
/// serving it is `mu`.
pub fn psi(inst: &VrpsdInstance, v: usize, mu: i64) -> Result<f64, VrpsdError> {
    if v == 0 || v > inst.n {
        return Err(VrpsdError::DomainError(format!("customer {v} out of range")));
    }
    let q = inst.qbar_of(v);
    if mu < q || mu > inst.capacity {
        return Err(VrpsdError::DomainError(format!(
            "load {mu} outside {q}..={} for customer {v}",
            inst.capacity
        )));
    }
    let kappa = inst.kappa();
    let prior = (mu - q) as f64;
    let total = mu as f64;
    let fails = failure_series(inst.capacity as f64, (prior, kappa * prior), (total, kappa * total));
    Ok(2.0 * inst.cost(0, v) * fails)
}

/// `psi(v, mu)` for all customers and loads; entries below `qbar_v` are NaN.
#[derive(Debug, Clone)]
pub struct PsiTable {
    values: Vec<Vec<f64>>,
}

impl PsiTable {
    pub fn new(inst: &VrpsdInstance) -> Self {
        let cap = inst.capacity as usize;
        let mut values = vec![vec![f64::NAN; cap + 1]; inst.n + 1];
        for v in inst.customers() {
            for mu in inst.qbar_of(v)..=inst.capacity {
                values[v][mu as usize] = psi(inst, v, mu).expect("load in range");
            }
        }
        PsiTable { values }
    }

    pub fn get(&self, v: usize, mu: i64) -> f64 {
        self.values[v][mu as usize]
    }

    /// Recourse of visiting `route` in order after an expected load `mu0`.
    pub fn route_sum(&self, inst: &VrpsdInstance, route: &[usize], mu0: i64) -> f64 {
        let mut mu = mu0;
        let mut sum = 0.0;
        for &v in route {
            mu += inst.qbar_of(v);
            sum += self.get(v, mu);
        }
        sum
    }
}

fn check_qroute(inst: &VrpsdInstance, route: &[usize]) -> Result<(), VrpsdError> {
    if route.is_empty() {
        return Err(VrpsdError::NotAQRoute("empty route".into()));
    }
    let mut seen = vec![false; inst.n + 1];
    let mut load = 0;
    for &v in route {
        if v == 0 || v > inst.n {
            return Err(VrpsdError::NotAQRoute(format!("customer {v} out of range")));
        }
        if seen[v] {
            return Err(VrpsdError::NotAQRoute(format!("customer {v} repeated")));
        }
        seen[v] = true;
        load += inst.qbar_of(v);
    }
    if load > inst.capacity {
        return Err(VrpsdError::NotAQRoute(format!(
            "expected load {load} exceeds capacity {}",
            inst.capacity
        )));
    }
    Ok(())
}

/// Expected cost of return trips to the depot along `route`: for each
/// customer `j`, `2 c_{0 v_j}` times the expected number of `t` with
/// `xi_{j-1} <= tC < xi_j` where `xi_j` is the cumulative demand.
pub fn expected_recourse(inst: &VrpsdInstance, route: &[usize]) -> Result<f64, VrpsdError> {
    check_qroute(inst, route)?;
    let cap = inst.capacity as f64;
    let (mut mean, mut var) = (0.0, 0.0);
    let mut total = 0.0;
    for &v in route {
        let prior = (mean, var);
        mean += inst.qbar_of(v) as f64;
        var += inst.variance[v - 1];
        total += 2.0 * inst.cost(0, v) * failure_series(cap, prior, (mean, var));
    }
    Ok(total)
}

/// First-stage cost of a route: depot, customers in order, depot.
pub fn route_cost(inst: &VrpsdInstance, route: &[usize]) -> f64 {
    let mut prev = 0;
    let mut c = 0.0;
    for &v in route {
        c += inst.cost(prev, v);
        prev = v;
    }
    c + inst.cost(prev, 0)
}

/// A q-route with cached first-stage cost and expected recourse.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub customers: Vec<usize>,
    pub cost: f64,
    pub recourse: f64,
}

impl Route {
    pub fn new(inst: &VrpsdInstance, customers: Vec<usize>) -> Result<Self, VrpsdError> {
        let recourse = expected_recourse(inst, &customers)?;
        Ok(Route {
            cost: route_cost(inst, &customers),
            recourse,
            customers,
        })
    }

    pub fn total(&self) -> f64 {
        self.cost + self.recourse
    }

    /// The cheaper orientation in expected recourse (ties keep `self`).
    pub fn best_orientation(self, inst: &VrpsdInstance) -> Self {
        let rev: Vec<usize> = self.customers.iter().rev().copied().collect();
        let other = Route::new(inst, rev).expect("reverse of a q-route is a q-route");
        if other.recourse < self.recourse - 1e-12 {
            other
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> VrpsdInstance {
        VrpsdInstance::parse(
            "vrpsd 1\nn 3 k 2 C 3\nqbar 1 2 1\nvar 0.001 0.002 0.001\n0\n14 0\n20 14 0\n14 20 14 0\n",
        )
        .unwrap()
    }

    #[test]
    fn half_failure_at_capacity() {
        let inst = ex1();
        assert!((psi(&inst, 1, 3).unwrap() - 14.0).abs() < 1e-9);
        assert!(psi(&inst, 2, 2).unwrap().abs() < 1e-9);
        assert!(matches!(psi(&inst, 2, 1), Err(VrpsdError::DomainError(_))));
        assert!((expected_recourse(&inst, &[2, 1]).unwrap() - 14.0).abs() < 1e-9);
        assert!(expected_recourse(&inst, &[1, 3]).unwrap().abs() < 1e-9);
        assert_eq!(route_cost(&inst, &[2, 1]), 48.0);
    }

    #[test]
    fn recourse_matches_psi_sum() {
        let inst = VrpsdInstance::new(
            1,
            10,
            vec![3, 4, 2, 5],
            vec![3.0, 4.0, 2.0, 5.0],
            (0..5)
                .map(|i| (0..5).map(|j| if i == j { 0.0 } else { 1.0 + (i + j) as f64 }).collect())
                .collect(),
        )
        .unwrap();
        let table = PsiTable::new(&inst);
        for route in [vec![1, 2], vec![2, 1], vec![4, 3], vec![3, 1, 2], vec![4, 1, 3]] {
            let a = expected_recourse(&inst, &route).unwrap();
            let b = table.route_sum(&inst, &route, 0);
            assert!((a - b).abs() < 1e-9, "{route:?}: {a} vs {b}");
        }
        assert!(matches!(expected_recourse(&inst, &[4, 1, 2]), Err(VrpsdError::NotAQRoute(_))));
    }
}
