//! Seeded random instances on a grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{VrpsdError, VrpsdInstance};

const GRID: i64 = 1000;
/// Expected demands are drawn from `1..=DEMAND_MAX`.
const DEMAND_MAX: i64 = 5;
/// Smallest capacity, so that every demand is at most `C / 2`.
const MIN_CAPACITY: i64 = 2 * DEMAND_MAX;

/// Random instance: integer coordinates on a `1000 x 1000` grid (depot
/// first), Euclidean costs rounded to one decimal (at least 0.1), expected
/// demands uniform in `1..=5` with variance equal to the mean, and capacity
/// `max(10, ceil(sum qbar / (k * capacity_ratio)))`.
pub fn generate(n: usize, k: usize, capacity_ratio: f64, seed: u64) -> Result<VrpsdInstance, VrpsdError> {
    if n == 0 || k == 0 || k > n {
        return Err(VrpsdError::DomainError(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    if !(capacity_ratio > 0.0 && capacity_ratio.is_finite()) {
        return Err(VrpsdError::DomainError("capacity ratio must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<(i64, i64)> = (0..=n)
        .map(|_| (rng.gen_range(0..=GRID), rng.gen_range(0..=GRID)))
        .collect();
    let qbar: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=DEMAND_MAX)).collect();
    let total: i64 = qbar.iter().sum();
    let capacity = MIN_CAPACITY.max((total as f64 / (k as f64 * capacity_ratio)).ceil() as i64);
    let mut cost = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..i {
            let dx = (coords[i].0 - coords[j].0) as f64;
            let dy = (coords[i].1 - coords[j].1) as f64;
            let c = ((dx * dx + dy * dy).sqrt() * 10.0).round() / 10.0;
            cost[i][j] = c.max(0.1);
            cost[j][i] = cost[i][j];
        }
    }
    let variance = qbar.iter().map(|&q| q as f64).collect();
    VrpsdInstance::new(k, capacity, qbar, variance, cost)
}
