//! Separation over the epigraph of a corner value function through its
//! reverse polar, solved by row generation over corner rays.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::corner::{self, CornerError, Domain, EpiPoint, EpigraphCone, ProblemData};
use crate::lp::{self, matrix::rank, LpError, LpModel, ModelBasis, Sense, SimplexStatus};
use crate::network::{find_violated_rays, Network, NetworkError, SpanningTree};

/// Tolerance below which a ray inequality counts as violated.
pub const RAY_TOL: f64 = 1e-7;
/// Half-width of the band around `-1` treated as membership.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Default number of ray rows added per round.
pub const RAYS_PER_ROUND: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Corner(#[from] CornerError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("reverse polar LP reported infeasible")]
    InfeasibleCglp,
    #[error("row generation did not converge")]
    NoConvergence,
    #[error("interior point is not in the relative interior: recession direction is not an implicit equality")]
    NotRelativeInterior,
}

/// Point `y'` of `Y` and its image `(w', theta') = (Q y', d^T y' + eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorPoint {
    pub y: Vec<f64>,
    pub point: EpiPoint,
    pub epsilon: f64,
    /// `Y` is a single point; the epigraph is then a vertical half-line.
    pub single_point: bool,
}

impl InteriorPoint {
    pub fn from_y(data: &ProblemData, y: Vec<f64>, epsilon: f64) -> Self {
        let w = data.q.mul_vec(&y);
        let theta = y.iter().zip(&data.d).map(|(a, b)| a * b).sum::<f64>() + epsilon;
        InteriorPoint {
            y,
            point: EpiPoint { w, theta },
            epsilon,
            single_point: false,
        }
    }
}

/// Relative-interior point of `Y` lifted by `eps = 1`. Network polytopes use
/// a superposition of source-sink paths through every usable arc; otherwise
/// the vertices minimizing and maximizing each coordinate are averaged.
pub fn relative_interior_point(data: &ProblemData) -> Result<InteriorPoint, PolarError> {
    if let Some(net) = &data.y_network {
        let k = net.sink().map_or(0, |t| net.supply()[t]) as f64;
        let y = net.interior_flow(k)?;
        return Ok(InteriorPoint::from_y(data, y, 1.0));
    }
    let m = data.m();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        for sign in [1.0, -1.0] {
            let mut lp = data.y_set.clone();
            lp.cost = vec![0.0; m];
            lp.cost[j] = sign;
            let out = lp::solve(&lp, None)?;
            match out.status {
                SimplexStatus::Optimal => vertices.push(out.x),
                SimplexStatus::Infeasible => return Err(CornerError::InfeasibleY.into()),
                // Unbounded coordinate: the minimizing vertex already covers it.
                SimplexStatus::Unbounded => {}
            }
        }
    }
    if vertices.is_empty() {
        return Err(CornerError::InfeasibleY.into());
    }
    let mut y = vec![0.0; m];
    for v in &vertices {
        for j in 0..m {
            y[j] += v[j] / vertices.len() as f64;
        }
    }
    let single = vertices
        .iter()
        .all(|v| v.iter().zip(&vertices[0]).all(|(a, b)| (a - b).abs() <= 1e-9));
    let mut ip = InteriorPoint::from_y(data, y, 1.0);
    ip.single_point = single;
    Ok(ip)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    /// Facet of a corner epigraph from a finite reverse-polar optimum.
    Facet,
    /// One orientation of an implicit equality of a corner epigraph.
    ImplicitEqualityPair,
    /// Cut from an optimal Lagrangian multiplier.
    LagrangianCut,
    /// Normalized Benders cut from the dual of the value function.
    FischettiCut,
    /// Cut on the aggregated objective added by a caller.
    ObjectiveCut,
}

/// `alpha^T w + alpha0 theta >= beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub alpha: Vec<f64>,
    pub alpha0: f64,
    pub beta: f64,
    pub kind: CutKind,
}

impl Cut {
    pub fn lhs(&self, w: &[f64], theta: f64) -> f64 {
        self.alpha.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + self.alpha0 * theta
    }

    /// Positive when `(w, theta)` violates the cut.
    pub fn violation(&self, w: &[f64], theta: f64) -> f64 {
        self.beta - self.lhs(w, theta)
    }

    /// Same inequality with the opposite direction.
    pub fn reversed(&self) -> Cut {
        Cut {
            alpha: self.alpha.iter().map(|v| -v).collect(),
            alpha0: -self.alpha0,
            beta: -self.beta,
            kind: self.kind,
        }
    }

    /// Cosine similarity of the coefficient vectors `(alpha, alpha0, beta)`.
    pub fn cosine(&self, other: &Cut) -> f64 {
        let a: Vec<f64> = self.alpha.iter().copied().chain([self.alpha0, self.beta]).collect();
        let b: Vec<f64> = other.alpha.iter().copied().chain([other.alpha0, other.beta]).collect();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// Scales so that `alpha0 = 1` (no-op when `alpha0` is zero).
    pub fn normalized(&self) -> Cut {
        if self.alpha0.abs() <= 1e-12 {
            return self.clone();
        }
        let s = 1.0 / self.alpha0;
        Cut {
            alpha: self.alpha.iter().map(|v| v * s).collect(),
            alpha0: 1.0,
            beta: self.beta * s,
            kind: self.kind,
        }
    }
}

/// Oracle listing corner rays whose inequality `alpha^T (Q r) + alpha0 d^T r
/// >= 0` is violated by more than `tol`, as `(ray index, value)`.
pub trait ViolatedRaySource {
    fn violated(&mut self, alpha: &[f64], alpha0: f64, tol: f64) -> Vec<(usize, f64)>;
}

/// Checks every ray of the cone explicitly.
pub struct FullScan<'a> {
    pub cone: &'a EpigraphCone,
}

impl ViolatedRaySource for FullScan<'_> {
    fn violated(&mut self, alpha: &[f64], alpha0: f64, tol: f64) -> Vec<(usize, f64)> {
        self.cone
            .rays
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let v = r.dot(alpha, alpha0);
                (v < -tol).then_some((i, v))
            })
            .collect()
    }
}

/// Tree-potential separation for corners built from a spanning tree of a
/// network whose arcs map to columns of `Q` one-to-one.
pub struct NetworkScan<'a> {
    pub net: &'a Network,
    pub tree: &'a SpanningTree,
    pub q: &'a lp::SparseMatrix,
    pub d: &'a [f64],
    /// Ray index of each non-tree arc.
    pub ray_of_arc: Vec<Option<usize>>,
}

impl<'a> NetworkScan<'a> {
    pub fn new(
        net: &'a Network,
        tree: &'a SpanningTree,
        corner: &corner::Corner,
        q: &'a lp::SparseMatrix,
        d: &'a [f64],
    ) -> Self {
        let mut ray_of_arc = vec![None; net.num_arcs()];
        for (i, &a) in corner.ray_columns.iter().enumerate() {
            ray_of_arc[a] = Some(i);
        }
        NetworkScan {
            net,
            tree,
            q,
            d,
            ray_of_arc,
        }
    }
}

impl ViolatedRaySource for NetworkScan<'_> {
    fn violated(&mut self, alpha: &[f64], alpha0: f64, tol: f64) -> Vec<(usize, f64)> {
        let weights = crate::network::arc_weights(self.q, self.d, alpha, alpha0);
        let mut out: Vec<(usize, f64)> = find_violated_rays(self.net, self.tree, &weights, tol)
            .into_iter()
            .filter_map(|(a, v)| self.ray_of_arc[a].map(|i| (i, v)))
            .collect();
        // The vertical ray (0, 1) is the bound alpha0 >= 0.
        if alpha0 < -tol {
            out.push((self.ray_of_arc.iter().flatten().count(), alpha0));
        }
        out
    }
}

/// How many violated rays enter per round.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySelection {
    pub limit: usize,
    /// Optional group label per ray; only the most violated ray of each
    /// group is taken in a round.
    pub groups: Option<Vec<usize>>,
}

impl Default for RaySelection {
    fn default() -> Self {
        RaySelection {
            limit: RAYS_PER_ROUND,
            groups: None,
        }
    }
}

impl RaySelection {
    fn select(&self, mut cands: Vec<(usize, f64)>) -> Vec<usize> {
        cands.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let mut used = BTreeSet::new();
        let mut out = Vec::new();
        for (i, _) in cands {
            if let Some(g) = &self.groups {
                if let Some(&label) = g.get(i) {
                    if !used.insert(label) {
                        continue;
                    }
                }
            }
            out.push(i);
            if out.len() == self.limit {
                break;
            }
        }
        out
    }
}

/// Rays carried between separation calls (the warm-start set).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReversePolarState {
    pub warm: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The candidate lies in the epigraph.
    Member,
    /// A facet separates the candidate.
    Facet,
    /// The candidate violates an implicit equality of the epigraph.
    ImplicitEquality,
}

#[derive(Debug, Clone)]
pub struct PolarOutcome {
    pub verdict: Verdict,
    /// Separating inequality (facet, or one orientation of the equality).
    pub cut: Option<Cut>,
    /// Optimal reverse-polar value (`-inf` for implicit equalities).
    pub z: f64,
    /// Rays with positive multiplier at the final reverse-polar optimum.
    pub active_rays: Vec<usize>,
    pub rounds: usize,
    pub rows: usize,
}

/// Minimizes `alpha^T (w_bar - w') + alpha0 (theta_bar - theta')` over the
/// reverse polar of `epi(f_C) - (w', theta')`, generating ray rows on
/// demand. Membership when the optimum is at least `-1`.
pub fn solve_reverse_polar(
    cone: &EpigraphCone,
    interior: &EpiPoint,
    candidate: &EpiPoint,
    state: &mut ReversePolarState,
    source: &mut dyn ViolatedRaySource,
    selection: &RaySelection,
) -> Result<PolarOutcome, PolarError> {
    let p = cone.dim();
    let nrays = cone.rays.len();
    let mut model = LpModel::new();
    for i in 0..p {
        model.add_var(f64::NEG_INFINITY, f64::INFINITY, candidate.w[i] - interior.w[i]);
    }
    let a0 = model.add_var(0.0, f64::INFINITY, candidate.theta - interior.theta);
    let mut apex_row: Vec<(usize, f64)> = (0..p)
        .map(|i| (i, cone.apex.w[i] - interior.w[i]))
        .filter(|e| e.1 != 0.0)
        .collect();
    apex_row.push((a0, cone.apex.theta - interior.theta));
    model.add_row(apex_row, Sense::Ge, -1.0);
    let mut row_ray: Vec<usize> = Vec::new();
    let mut included = vec![false; nrays];
    let add_ray = |model: &mut LpModel, row_ray: &mut Vec<usize>, included: &mut Vec<bool>, r: usize| {
        if included[r] {
            return;
        }
        included[r] = true;
        let ray = &cone.rays[r];
        let mut coeffs: Vec<(usize, f64)> = ray.w.clone();
        if ray.theta != 0.0 {
            coeffs.push((a0, ray.theta));
        }
        model.add_row(coeffs, Sense::Ge, 0.0);
        row_ray.push(r);
    };
    for &r in &state.warm {
        if r < nrays {
            add_ray(&mut model, &mut row_ray, &mut included, r);
        }
    }
    let mut basis: Option<ModelBasis> = None;
    let max_rounds = 4 * nrays + 50;
    for round in 1..=max_rounds {
        let sol = lp::solve_model(&model, basis.as_ref())?;
        basis = Some(sol.basis.clone());
        match sol.status {
            SimplexStatus::Infeasible => return Err(PolarError::InfeasibleCglp),
            SimplexStatus::Optimal => {
                let alpha = &sol.x[..p];
                let alpha0 = sol.x[p];
                let fresh: Vec<(usize, f64)> = source
                    .violated(alpha, alpha0, RAY_TOL)
                    .into_iter()
                    .filter(|&(r, _)| r < nrays && !included[r])
                    .collect();
                if fresh.is_empty() {
                    let z = sol.objective;
                    let active: Vec<usize> = row_ray
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| sol.row_duals[k + 1] > 1e-9)
                        .map(|(_, &r)| r)
                        .collect();
                    state.warm.extend(active.iter().copied());
                    if z >= -1.0 - BOUNDARY_TOL {
                        return Ok(PolarOutcome {
                            verdict: Verdict::Member,
                            cut: None,
                            z,
                            active_rays: active,
                            rounds: round,
                            rows: model.num_rows(),
                        });
                    }
                    let alpha0 = alpha0.max(0.0);
                    let beta = -1.0
                        + alpha.iter().zip(&interior.w).map(|(a, w)| a * w).sum::<f64>()
                        + alpha0 * interior.theta;
                    return Ok(PolarOutcome {
                        verdict: Verdict::Facet,
                        cut: Some(Cut {
                            alpha: alpha.to_vec(),
                            alpha0,
                            beta,
                            kind: CutKind::Facet,
                        }),
                        z,
                        active_rays: active,
                        rounds: round,
                        rows: model.num_rows(),
                    });
                }
                for r in selection.select(fresh) {
                    add_ray(&mut model, &mut row_ray, &mut included, r);
                }
            }
            SimplexStatus::Unbounded => {
                let ray = sol.ray.expect("unbounded LP without ray");
                let scale = ray.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let dir: Vec<f64> = ray.iter().map(|v| v / scale).collect();
                let alpha = &dir[..p];
                let alpha0 = dir[p];
                let fresh: Vec<(usize, f64)> = source
                    .violated(alpha, alpha0, RAY_TOL)
                    .into_iter()
                    .filter(|&(r, _)| r < nrays && !included[r])
                    .collect();
                if fresh.is_empty() {
                    let cut = implicit_equality(cone, interior, alpha, alpha0)?;
                    return Ok(PolarOutcome {
                        verdict: Verdict::ImplicitEquality,
                        cut: Some(cut),
                        z: f64::NEG_INFINITY,
                        active_rays: Vec::new(),
                        rounds: round,
                        rows: model.num_rows(),
                    });
                }
                for r in selection.select(fresh) {
                    add_ray(&mut model, &mut row_ray, &mut included, r);
                }
            }
        }
    }
    Err(PolarError::NoConvergence)
}

/// Builds `alpha^T w + alpha0 theta >= alpha^T w' + alpha0 theta'` from a
/// recession direction and checks that it is orthogonal to every generator.
fn implicit_equality(
    cone: &EpigraphCone,
    interior: &EpiPoint,
    alpha: &[f64],
    alpha0: f64,
) -> Result<Cut, PolarError> {
    let scale = 1.0 + alpha.iter().fold(alpha0.abs(), |m, v| m.max(v.abs()));
    let tol = 1e-6 * scale;
    let apex_gap: f64 = alpha
        .iter()
        .zip(cone.apex.w.iter().zip(&interior.w))
        .map(|(a, (x, y))| a * (x - y))
        .sum::<f64>()
        + alpha0 * (cone.apex.theta - interior.theta);
    let orthogonal = apex_gap.abs() <= tol && cone.rays.iter().all(|r| r.dot(alpha, alpha0).abs() <= tol);
    if !orthogonal {
        log::warn!("reverse polar recession direction is not an implicit equality");
        return Err(PolarError::NotRelativeInterior);
    }
    let beta = alpha.iter().zip(&interior.w).map(|(a, w)| a * w).sum::<f64>() + alpha0 * interior.theta;
    Ok(Cut {
        alpha: alpha.to_vec(),
        alpha0,
        beta,
        kind: CutKind::ImplicitEqualityPair,
    })
}

/// Tight generators of a cut and the rank comparison with the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetCertificate {
    pub apex_tight: bool,
    pub tight_rays: Vec<usize>,
    pub tight_rank: usize,
    pub cone_dim: usize,
    pub is_facet: bool,
}

/// The face `{cut holds with equality}` of `epi(f_C)` has dimension
/// `rank(tight rays)`; the cut is a facet when that is one less than the
/// dimension of the epigraph.
pub fn facet_certificate(cone: &EpigraphCone, cut: &Cut) -> FacetCertificate {
    let p = cone.dim();
    let apex_slack = cut.lhs(&cone.apex.w, cone.apex.theta) - cut.beta;
    let scale = 1.0 + cut.alpha.iter().fold(cut.alpha0.abs(), |m, v| m.max(v.abs()));
    let tol = 1e-7 * scale;
    let tight_rays: Vec<usize> = (0..cone.rays.len())
        .filter(|&i| cone.rays[i].dot(&cut.alpha, cut.alpha0).abs() <= tol)
        .collect();
    let all: Vec<Vec<f64>> = cone.rays.iter().map(|r| r.dense(p)).collect();
    let tight: Vec<Vec<f64>> = tight_rays.iter().map(|&i| all[i].clone()).collect();
    let cone_dim = rank(&all, 1e-9);
    let tight_rank = rank(&tight, 1e-9);
    let apex_tight = apex_slack.abs() <= tol;
    FacetCertificate {
        apex_tight,
        tight_rays,
        tight_rank,
        cone_dim,
        is_facet: apex_tight && tight_rank + 1 == cone_dim,
    }
}

/// Membership of `(w, theta)` in `epi(f_C)` through the value function.
pub fn in_corner_epigraph(data: &ProblemData, corner: &corner::Corner, point: &EpiPoint) -> Result<bool, PolarError> {
    let f = corner::value_eval(data, Domain::Corner(corner), &point.w)?;
    Ok(f <= point.theta + 1e-7)
}
