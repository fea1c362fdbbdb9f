mod common;

use common::{dot, enumerate_vertices, random_data, rng};
use corner_benders::benders::*;
use corner_benders::corner::{self, EpiPoint, ProblemData};
use corner_benders::lp::{self, LpModel, Sense, SimplexStatus, SparseMatrix};
use corner_benders::oracle::{epi_membership_lp, EpiSet};
use corner_benders::polar::relative_interior_point;
use rand::Rng;

/// `min c^T x + d^T y` over `x in X`, `T x + Q y = h`, `y in Y`.
fn full_lp(data: &ProblemData, rho: &[f64], rho0: f64) -> f64 {
    let mut model = data.x_set.clone();
    model.set_objective(rho);
    let n = data.n();
    for &dj in &data.d {
        model.add_var(0.0, f64::INFINITY, rho0 * dj);
    }
    let t = data.t.to_dense();
    let q = data.q.to_dense();
    for i in 0..data.p() {
        let mut row: Vec<(usize, f64)> = (0..n).filter(|&j| t[i][j] != 0.0).map(|j| (j, t[i][j])).collect();
        row.extend((0..data.m()).filter(|&j| q[i][j] != 0.0).map(|j| (n + j, q[i][j])));
        model.add_row(row, Sense::Eq, data.h[i]);
    }
    let a = data.y_set.a.to_dense();
    for (i, arow) in a.iter().enumerate() {
        let row = (0..data.m()).filter(|&j| arow[j] != 0.0).map(|j| (n + j, arow[j])).collect();
        model.add_row(row, Sense::Eq, data.y_set.b[i]);
    }
    let sol = lp::solve_model(&model, None).unwrap();
    assert_eq!(sol.status, SimplexStatus::Optimal);
    sol.objective
}

fn valid_on_vertices(data: &ProblemData, alpha: &[f64], alpha0: f64, beta: f64) -> bool {
    enumerate_vertices(&data.y_set).iter().all(|y| {
        let w = data.q.mul_vec(y);
        dot(alpha, &w) + alpha0 * dot(&data.d, y) >= beta - 1e-6
    })
}

#[test]
fn fischetti_cuts_are_valid_and_exact() {
    let mut found = 0;
    for seed in 0..40 {
        let data = random_data(seed, seed % 2 == 0);
        let mut r = rng(100 + seed);
        let y = {
            let v = enumerate_vertices(&data.y_set);
            v[r.gen_range(0..v.len())].clone()
        };
        let w = data.q.mul_vec(&y);
        // x with h - T x = w is x = w here.
        let above = dot(&data.d, &y) + 1.0;
        assert!(separate_fischetti(&data, &w, above).unwrap().is_none());
        let theta = dot(&data.d, &y) - r.gen_range(0.5..5.0);
        let w_pert: Vec<f64> = w.iter().map(|v| v + r.gen_range(-1.0..1.0)).collect();
        for (x, th) in [(w.clone(), theta), (w_pert, theta)] {
            let member = epi_membership_lp(EpiSet::Y, &data, &EpiPoint { w: x.clone(), theta: th }).unwrap();
            match separate_fischetti(&data, &x, th).unwrap() {
                Some(cut) => {
                    found += 1;
                    assert!(!member);
                    assert!(cut.violation(&x, th) > 1e-6);
                    assert!(valid_on_vertices(&data, &cut.alpha, cut.alpha0, cut.beta));
                }
                None => assert!(member),
            }
        }
    }
    assert!(found > 20);
}

#[test]
fn lagrangian_dual_value_contract() {
    for seed in 0..30 {
        let data = random_data(300 + seed, seed % 3 == 0);
        let mut r = rng(400 + seed);
        let rho: Vec<f64> = (0..data.n()).map(|_| r.gen_range(-3..4) as f64).collect();
        let dual = solve_lagrangian_dual(&data, &rho, 1.0).unwrap();
        let z = full_lp(&data, &rho, 1.0);
        assert!((dual.value - z).abs() < 1e-6 * (1.0 + z.abs()), "seed {seed}: {} vs {z}", dual.value);
        // L(alpha) = sigma_X(rho - alpha) + sigma_Y(Q^T alpha + d) attains the value.
        let shifted: Vec<f64> = rho.iter().zip(&dual.alpha).map(|(a, b)| a - b).collect();
        let lx = corner::support(&data.x_set, &shifted).unwrap();
        let ly = corner::support_standard(&data.y_set, &data.y_objective(&dual.alpha, 1.0)).unwrap();
        assert!((lx + ly - z).abs() < 1e-6 * (1.0 + z.abs()));
        let cut = lagrangian_cut(&data, &dual.alpha, 1.0).unwrap();
        assert!(valid_on_vertices(&data, &cut.alpha, cut.alpha0, cut.beta));
        // Feasibility-style cut with rho0 = 0 holds on the domain.
        let feas = lagrangian_cut(&data, &dual.alpha, 0.0).unwrap();
        assert!(valid_on_vertices(&data, &feas.alpha, 0.0, feas.beta));
    }
}

#[test]
fn lagrangian_dual_structure_checks() {
    let mut data = random_data(5, false);
    data.t = SparseMatrix::from_columns(data.p(), (0..data.p()).map(|i| vec![(i, 2.0)]).collect());
    assert!(matches!(
        solve_lagrangian_dual(&data, &vec![0.0; data.n()], 1.0),
        Err(BendersError::StructureUnsupported)
    ));
    let mut data = random_data(6, false);
    data.h[0] = 1.0;
    assert!(matches!(
        solve_lagrangian_dual(&data, &vec![0.0; data.n()], 1.0),
        Err(BendersError::StructureUnsupported)
    ));
    // No linking rows: sigma_X(rho) + sigma_Y(rho0 d).
    let mut x = LpModel::new();
    x.add_var(1.0, 4.0, 0.0);
    let data = ProblemData {
        c: vec![1.0],
        d: vec![2.0, 3.0],
        t: SparseMatrix::new(0, 1),
        q: SparseMatrix::new(0, 2),
        h: vec![],
        x_set: x,
        y_set: corner_benders::lp::StandardLp::new(SparseMatrix::from_dense(&[vec![1.0, 1.0]]), vec![1.0], vec![0.0; 2]),
        y_network: None,
    };
    let dual = solve_lagrangian_dual(&data, &[1.0], 2.0).unwrap();
    assert!(dual.alpha.is_empty());
    assert!((dual.value - (1.0 + 4.0)).abs() < 1e-12);
}

#[test]
fn corner_benders_loop_reaches_lagrangian_bound() {
    for seed in 0..30 {
        let data = random_data(500 + seed, seed % 2 == 1);
        let z = full_lp(&data, &data.c, 1.0);
        let dual = solve_lagrangian_dual(&data, &data.c, 1.0).unwrap();
        let interior = relative_interior_point(&data).unwrap();
        let mut master = MasterState::new(&data, f64::NEG_INFINITY);
        let run = separate_corner_benders_cuts(&data, &mut master, &interior, &dual.alpha, 1.0).unwrap();
        assert!(!run.terminated_by_repeat, "seed {seed}: repeated cut");
        assert!((run.final_bound - z).abs() < 1e-6 * (1.0 + z.abs()), "seed {seed}: {} vs {z}", run.final_bound);
        for pair in master.log.windows(2) {
            assert!(pair[1].bound >= pair[0].bound - 1e-9);
        }
        for (cut, _) in &master.cuts {
            assert!(valid_on_vertices(&data, &cut.alpha, cut.alpha0, cut.beta));
        }
        for (i, (a, _)) in master.cuts.iter().enumerate() {
            for (b, _) in &master.cuts[i + 1..] {
                assert!(a.cosine(b) < 1.0 - DUP_TOL);
            }
        }
    }
}

#[test]
fn master_already_in_corner_epigraph_adds_nothing() {
    let data = random_data(11, false);
    let dual = solve_lagrangian_dual(&data, &data.c, 1.0).unwrap();
    let interior = relative_interior_point(&data).unwrap();
    let mut master = MasterState::new(&data, f64::NEG_INFINITY);
    separate_corner_benders_cuts(&data, &mut master, &interior, &dual.alpha, 1.0).unwrap();
    let before = master.cuts.len();
    let run = separate_corner_benders_cuts(&data, &mut master, &interior, &dual.alpha, 1.0).unwrap();
    assert!(run.added.is_empty());
    assert_eq!(master.cuts.len(), before);
}
