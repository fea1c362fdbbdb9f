mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use corner_benders::benders::{separate_corner_benders_cuts, solve_lagrangian_dual, MasterState};
use corner_benders::corner::{self, EpiPoint};
use corner_benders::lp::{self, LpModel, SimplexStatus, SparseMatrix};
use corner_benders::network::{arc_weights, cycle_ray, find_violated_rays, shortest_path_tree};
use corner_benders::oracle::*;
use corner_benders::polar::*;
use corner_benders::vrpsd::*;
use rand::Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn ex1_end_to_end() -> Check {
    let found = reconstruct_qbar();
    ensure!(found == vec![[1, 2, 1]], "mean-demand reconstruction gave {found:?}");
    let start = Instant::now();
    let inst = ex1();
    let bf = brute_force_optimum(&inst, true).map_err(|e| e.to_string())?;
    let first = brute_force_optimum(&inst, false).map_err(|e| e.to_string())?;
    let recourse = expected_recourse(&inst, &[2, 1]).map_err(|e| e.to_string())?;
    let dw = dw_bound_enumeration(&inst).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!((bf.value - 88.0).abs() < TOL, "optimum {}", bf.value);
    ensure!(same_routes(&bf.routes, &[vec![2], vec![1, 3]]), "routes {:?}", bf.routes);
    ensure!((first.value - 76.0).abs() < TOL, "first-stage optimum {}", first.value);
    ensure!((recourse - 14.0).abs() < TOL, "E[Q((2,1))] = {recourse}");
    ensure!((dw - 88.0).abs() < TOL, "path-flow bound {dw}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("qbar = (1,2,1) unique; 88 / 76 / 14 / 88 in {:.3}s", elapsed.as_secs_f64()))
}

fn lagrangian_recovery() -> Check {
    let start = Instant::now();
    let opts = LoopOptions::default();
    let inst = ex1();
    for mode in [Mode::Lagrange, Mode::Corner] {
        let rep = cutting_plane_loop(&inst, mode, &opts).map_err(|e| e.to_string())?;
        ensure!((rep.root_bound - 88.0).abs() < TOL, "EX1 {} root bound {}", mode.name(), rep.root_bound);
    }
    let mut worst: f64 = 0.0;
    for seed in 0..30u64 {
        let n = 2 + seed as usize % 5;
        let k = (1 + seed as usize % 3).min(n);
        let inst = random_instance(2000 + seed, n, k);
        let dw = dw_bound_enumeration(&inst).map_err(|e| e.to_string())?;
        let rep = cutting_plane_loop(&inst, Mode::Corner, &opts).map_err(|e| e.to_string())?;
        ensure!((rep.root_bound - dw).abs() < TOL, "seed {seed}: corner {} vs path-flow {dw}", rep.root_bound);
        worst = worst.max((rep.root_bound - dw).abs());
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("EX1 = 88; 30 instances, max |corner - path-flow| = {worst:.2e}, {:.1}s", elapsed.as_secs_f64()))
}

fn corner_cut_reproduction() -> Check {
    let inst = ex1();
    let psi = PsiTable::new(&inst);
    let sn = build_state_network(&inst, &psi);
    let data = problem_data(&inst, &sn, master_x_rows(&inst));
    let (tree, _) = shortest_path_tree(&sn.net, &data.y_objective(&ALPHA1, 1.0)).map_err(|e| e.to_string())?;
    let corner = corner::corner_from_tree(&sn.net, &tree);
    let cone = corner::epigraph_cone(&data, &corner);
    let interior = relative_interior_point(&data).map_err(|e| e.to_string())?;
    let cand = EpiPoint { w: X_BAR.to_vec(), theta: 0.0 };
    let mut scan = NetworkScan::new(&sn.net, &tree, &corner, &data.q, &data.d);
    let out = solve_reverse_polar(&cone, &interior.point, &cand, &mut ReversePolarState::default(), &mut scan, &RaySelection::default())
        .map_err(|e| e.to_string())?;
    ensure!(out.verdict == Verdict::Facet, "verdict {:?}", out.verdict);
    let cut = out.cut.unwrap();
    ensure!(cut.alpha0 > 0.0, "alpha0 = {}", cut.alpha0);
    let alpha: Vec<f64> = cut.alpha.iter().map(|a| a / cut.alpha0).collect();
    let beta = cut.beta / cut.alpha0;
    let cert = facet_certificate(&cone, &cut);
    ensure!(cert.is_facet && cert.tight_rank + 1 == cert.cone_dim, "rank {} in dimension {}", cert.tight_rank, cert.cone_dim);
    // alpha1 + row(1) + row(3) - 2 row(0) = (0,-2,0,-14,0,-14) >= -4; with
    // x02 <= 2 the facet dominates when it is at least as tight.
    let rows = master_x_rows(&inst);
    let mut combo = ALPHA1.to_vec();
    let mut rhs = 0.0;
    for (row, mult) in [(1usize, 1.0), (3, 1.0), (0, -2.0)] {
        for &(j, a) in &rows.rows[row].coeffs {
            combo[j] += mult * a;
        }
        rhs += mult * rows.rows[row].rhs;
    }
    ensure!(combo == vec![0.0, -2.0, 0.0, -14.0, 0.0, -14.0] && rhs == -4.0, "certificate {combo:?} >= {rhs}");
    // On X the facet is at least as strong when (combo - alpha)^T x >= rhs - beta.
    let mut x_model = rows.clone();
    let diff: Vec<f64> = alpha.iter().zip(&combo).map(|(a, c)| c - a).collect();
    x_model.set_objective(&diff);
    let sol = lp::solve_model(&x_model, None).map_err(|e| e.to_string())?;
    ensure!(sol.status == SimplexStatus::Optimal, "domination LP {:?}", sol.status);
    ensure!(sol.objective - rhs + beta >= -1e-7, "facet does not dominate the seed cut on X: {}", sol.objective - rhs + beta);
    let exact = alpha.iter().zip(&ALPHA2).all(|(a, b)| (a - b).abs() < 1e-6) && beta.abs() < 1e-6;
    ensure!(exact, "facet {alpha:?} >= {beta}");
    Ok("facet equals -14x12 - 14x23 + theta >= 0, rank = dim - 1, dominates the seed cut on X".into())
}

fn trichotomy() -> Check {
    let mut r = rng(4242);
    let mut counts = [0usize; 3];
    for pair in 0..200u64 {
        let implied = pair % 3 == 0;
        let data = random_data(3000 + pair / 4, implied);
        let gamma: Vec<f64> = (0..data.m()).map(|_| r.gen_range(-3..6) as f64).collect();
        let c = corner::optimal_corner(&data, &gamma).map_err(|e| e.to_string())?;
        let cone = corner::epigraph_cone(&data, &c);
        let interior = relative_interior_point(&data).map_err(|e| e.to_string())?;
        let cand = candidate(&data, implied, &mut r);
        let out = solve_reverse_polar(&cone, &interior.point, &cand, &mut ReversePolarState::default(), &mut FullScan { cone: &cone }, &RaySelection::default())
            .map_err(|e| e.to_string())?;
        let member = epi_membership_lp(EpiSet::Corner(&c), &data, &cand).map_err(|e| e.to_string())?;
        match out.verdict {
            Verdict::Member => {
                counts[0] += 1;
                ensure!(member, "pair {pair}: member verdict rejected by membership LP");
            }
            Verdict::Facet => {
                counts[1] += 1;
                ensure!(!member, "pair {pair}: facet verdict for a member");
                let cut = out.cut.unwrap();
                ensure!(valid_on_cone(&cone, &cut, 1e-6), "pair {pair}: facet invalid on a ray");
                ensure!(cut.violation(&cand.w, cand.theta) > 1e-7, "pair {pair}: facet not violated");
            }
            Verdict::ImplicitEquality => {
                counts[2] += 1;
                ensure!(!member, "pair {pair}: implicit-equality verdict for a member");
                let cut = out.cut.unwrap();
                ensure!(valid_on_cone(&cone, &cut, 1e-6) && valid_on_cone(&cone, &cut.reversed(), 1e-6), "pair {pair}: equality does not hold on the epigraph");
            }
        }
    }
    ensure!(counts.iter().all(|&c| c > 0), "not every case occurred: {counts:?}");
    Ok(format!("200 pairs, member/facet/equality = {}/{}/{}, zero failures", counts[0], counts[1], counts[2]))
}

/// Per-ray scan: builds each cycle, its image `Q r` and `d^T r` from scratch.
fn cycle_scan(net: &corner_benders::network::Network, tree: &corner_benders::network::SpanningTree, q: &[Vec<f64>], d: &[f64], alpha: &[f64], tol: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut image = vec![0.0; alpha.len()];
    for a in tree.nontree_arcs() {
        let ray = cycle_ray(net, tree, a).unwrap();
        image.iter_mut().for_each(|v| *v = 0.0);
        let mut cost = 0.0;
        for &(j, s) in &ray {
            let s = s as f64;
            for (i, v) in image.iter_mut().enumerate() {
                *v += s * q[i][j];
            }
            cost += s * d[j];
        }
        let val = dot(alpha, &image) + cost;
        if val < -tol {
            out.push((a, val));
        }
    }
    out
}

fn ray_scan_equivalence() -> Check {
    let mut r = rng(55);
    let tol = 1e-7;
    for seed in 0..50u64 {
        let nodes = r.gen_range(5..400);
        let arcs = r.gen_range(nodes * 2..=2000.max(nodes * 2));
        let net = random_dag(5000 + seed, nodes, arcs, 2);
        let p = r.gen_range(1..=50);
        let q: Vec<Vec<f64>> = (0..p).map(|_| (0..net.num_arcs()).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
        let d: Vec<f64> = (0..net.num_arcs()).map(|_| r.gen_range(0.0..5.0)).collect();
        let alpha: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
        let qs = SparseMatrix::from_dense(&q);
        let (tree, _) = shortest_path_tree(&net, &d).map_err(|e| e.to_string())?;
        let w = arc_weights(&qs, &d, &alpha, 1.0);
        let fast = find_violated_rays(&net, &tree, &w, tol);
        let slow = cycle_scan(&net, &tree, &q, &d, &alpha, tol);
        let naive = naive_violated_rays(&net, &tree, &w, tol);
        ensure!(fast.len() == slow.len() && fast.len() == naive.len(), "seed {seed}: {} vs {} vs {} violated rays", fast.len(), slow.len(), naive.len());
        for ((a, x), (b, y)) in fast.iter().zip(&slow) {
            ensure!(a == b && (x - y).abs() < 1e-6 * (1.0 + y.abs()), "seed {seed}: arc {a} {x} vs arc {b} {y}");
        }
    }
    // Timing at |A| = 2000, p = 50.
    let net = random_dag(6000, 400, 2000, 2);
    let p = 50;
    let q: Vec<Vec<f64>> = (0..p).map(|_| (0..net.num_arcs()).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
    let d: Vec<f64> = (0..net.num_arcs()).map(|_| r.gen_range(0.0..5.0)).collect();
    let alpha: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
    let qs = SparseMatrix::from_dense(&q);
    let (tree, _) = shortest_path_tree(&net, &d).map_err(|e| e.to_string())?;
    let time = |f: &mut dyn FnMut() -> usize| {
        let mut best = Duration::MAX;
        for _ in 0..5 {
            let t = Instant::now();
            std::hint::black_box(f());
            best = best.min(t.elapsed());
        }
        best
    };
    let fast = time(&mut || find_violated_rays(&net, &tree, &arc_weights(&qs, &d, &alpha, 1.0), tol).len());
    let slow = time(&mut || cycle_scan(&net, &tree, &q, &d, &alpha, tol).len());
    let ratio = slow.as_secs_f64() / fast.as_secs_f64();
    ensure!(ratio >= 5.0, "potential scan {fast:?} vs per-ray scan {slow:?} ({ratio:.1}x)");
    Ok(format!("50 networks agree; |A| = {}, p = 50: {fast:?} vs {slow:?} ({ratio:.0}x)", net.num_arcs()))
}

fn restricted_dual_agreement() -> Check {
    let mut r = rng(606);
    let mut rejects = 0;
    for pair in 0..50u64 {
        let data = random_data(7000 + pair, pair % 4 == 0);
        let alpha: Vec<f64> = (0..data.p()).map(|_| r.gen_range(-3..4) as f64).collect();
        let c = corner::optimal_corner(&data, &data.y_objective(&alpha, 1.0)).map_err(|e| e.to_string())?;
        let cand = candidate(&data, pair % 4 == 0, &mut r);
        let member = epi_membership_lp(EpiSet::Corner(&c), &data, &cand).map_err(|e| e.to_string())?;
        let dual = restricted_dual_check(&c, &data, &cand).map_err(|e| e.to_string())?;
        ensure!(dual.accept == member, "pair {pair}: restricted dual {} vs membership {member}", dual.accept);
        rejects += usize::from(!member);
    }
    Ok(format!("50 pairs ({rejects} rejected), zero disagreements"))
}

fn flow_decomposition() -> Check {
    let mut worst: f64 = 0.0;
    let mut insts = vec![ex1()];
    insts.extend((0..30u64).map(|s| random_instance(8000 + s, 2 + s as usize % 5, 1 + s as usize % 2)));
    for (i, inst) in insts.iter().enumerate() {
        let dw = dw_bound_enumeration(inst).map_err(|e| e.to_string())?;
        let arc = arc_flow_bound(inst).map_err(|e| e.to_string())?;
        ensure!((dw - arc).abs() <= 1e-6 * (1.0 + dw.abs()), "instance {i}: path {dw} vs arc {arc}");
        worst = worst.max((dw - arc).abs());
    }
    Ok(format!("EX1 + 30 instances, max |path - arc| = {worst:.2e}"))
}

/// `min gamma^T y` over the corner with basic variables free.
fn corner_support(data: &corner::ProblemData, c: &corner::Corner, gamma: &[f64]) -> f64 {
    let mut model = LpModel::new();
    let basic: Vec<bool> = (0..data.m()).map(|j| c.basis.basic.contains(&j)).collect();
    for j in 0..data.m() {
        let lower = if basic[j] { f64::NEG_INFINITY } else { 0.0 };
        model.add_var(lower, f64::INFINITY, gamma[j]);
    }
    let a = data.y_set.a.to_dense();
    for (i, row) in a.iter().enumerate() {
        add_dense_row(&mut model, row, lp::Sense::Eq, data.y_set.b[i]);
    }
    lp::solve_model(&model, None).unwrap().objective
}

fn property_audits() -> Check {
    let mut r = rng(808);
    // Support equality sigma_C = sigma_Y for optimal corners.
    for seed in 0..20u64 {
        let data = random_data(9000 + seed, false);
        let gamma: Vec<f64> = (0..data.m()).map(|_| r.gen_range(-5..6) as f64).collect();
        let c = corner::optimal_corner(&data, &gamma).map_err(|e| e.to_string())?;
        let by_vertices = enumerate_vertices(&data.y_set).iter().map(|v| dot(&gamma, v)).fold(f64::INFINITY, f64::min);
        let sc = corner_support(&data, &c, &gamma);
        ensure!(close(sc, by_vertices, 1e-7), "seed {seed}: sigma_C {sc} vs sigma_Y {by_vertices}");
    }
    // Warm-start rays are tight on the returned facet.
    let mut facets = 0;
    for pair in 0..100u64 {
        let data = random_data(9100 + pair / 2, false);
        let gamma: Vec<f64> = (0..data.m()).map(|_| r.gen_range(-3..6) as f64).collect();
        let c = corner::optimal_corner(&data, &gamma).map_err(|e| e.to_string())?;
        let cone = corner::epigraph_cone(&data, &c);
        let interior = relative_interior_point(&data).map_err(|e| e.to_string())?;
        let cand = candidate(&data, false, &mut r);
        let mut state = ReversePolarState::default();
        let out = solve_reverse_polar(&cone, &interior.point, &cand, &mut state, &mut FullScan { cone: &cone }, &RaySelection::default())
            .map_err(|e| e.to_string())?;
        if out.verdict == Verdict::Facet {
            facets += 1;
            let cut = out.cut.unwrap();
            for &k in &state.warm {
                ensure!(cone.rays[k].dot(&cut.alpha, cut.alpha0) <= 1e-6, "pair {pair}: warm ray {k} not tight");
            }
        }
    }
    // Master bounds never decrease.
    for seed in 0..20u64 {
        let data = random_data(9200 + seed, seed % 2 == 0);
        let dual = solve_lagrangian_dual(&data, &data.c, 1.0).map_err(|e| e.to_string())?;
        let interior = relative_interior_point(&data).map_err(|e| e.to_string())?;
        let mut master = MasterState::new(&data, f64::NEG_INFINITY);
        separate_corner_benders_cuts(&data, &mut master, &interior, &dual.alpha, 1.0).map_err(|e| e.to_string())?;
        ensure!(master.log.windows(2).all(|w| w[1].bound >= w[0].bound - 1e-9), "seed {seed}: master bound decreased");
    }
    for seed in 0..5u64 {
        let inst = random_instance(9300 + seed, 5, 2);
        let rep = cutting_plane_loop(&inst, Mode::Corner, &LoopOptions::default()).map_err(|e| e.to_string())?;
        ensure!(rep.trace.windows(2).all(|w| w[1].bound >= w[0].bound - 1e-7), "instance {seed}: root trace decreased");
    }
    // P/S/route cuts hold on every integral solution.
    let mut audited = 0;
    for seed in 0..8u64 {
        let n = 3 + seed as usize % 3;
        let inst = random_instance(9400 + seed, n, 1 + seed as usize % 2);
        let psi = PsiTable::new(&inst);
        let sols: Vec<Integral> = all_integral(&inst).iter().map(|s| integral_of(&inst, &psi, s)).collect();
        let subsets: Vec<Vec<usize>> = (1u32..(1 << n)).map(|m| (1..=n).filter(|v| m & (1 << (v - 1)) != 0).collect()).collect();
        let zero = vec![0.0; n];
        let mut cuts = Vec::new();
        for s in &sols {
            cuts.extend(separate_p_s_cuts(&inst, &psi, &s.x, &zero, &subsets));
            cuts.extend(separate_route_cuts(&inst, &psi, &s.x, &zero));
        }
        for cut in &cuts {
            for s in &sols {
                ensure!(cut.violation(&s.x, &s.theta) <= 1e-7, "instance {seed}: {:?} cut on {:?} violated", cut.kind, cut.customers);
            }
        }
        audited += cuts.len();
    }
    // A tree with a degree-3 vertex and |V| = |E| + 1 is not a path.
    let inst = random_instance(9500, 4, 2);
    let mut x = vec![0.0; inst.num_edges()];
    for (u, v) in [(1, 2), (2, 3), (2, 4), (0, 1), (0, 3), (0, 4)] {
        x[inst.edge_index(u, v)] = 1.0;
    }
    ensure!(component_path(&inst, &x, &[1, 2, 3, 4]).is_none(), "star accepted as a path");
    let cuts = separate_p_s_cuts(&inst, &PsiTable::new(&inst), &x, &[0.0; 4], &[]);
    ensure!(cuts.iter().all(|c| c.kind != IlsKind::Path), "path cut on the star component");
    Ok(format!("support equality, warm start ({facets} facets), monotone bounds, {audited} ILS cuts valid, star shape rejected"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("1 EX1 end-to-end", ex1_end_to_end),
        ("2 Lagrangian recovery", lagrangian_recovery),
        ("3 corner cut reproduction", corner_cut_reproduction),
        ("4 reverse-polar trichotomy", trichotomy),
        ("5 tree-potential ray scan", ray_scan_equivalence),
        ("6 restricted dual agreement", restricted_dual_agreement),
        ("7 path-flow = arc-flow", flow_decomposition),
        ("8 property audits", property_audits),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS criterion {name} ({secs:.2}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {msg}");
            }
        }
    }
    println!("NOTE criterion 9 full benchmark tables: out of scope at desk scale, not run");
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
