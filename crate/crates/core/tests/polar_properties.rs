mod common;

use common::{candidate, dot, random_data, rng, valid_on_cone};
use corner_benders::corner::{self, EpiPoint, ProblemData};
use corner_benders::lp::{SparseMatrix, StandardLp};
use corner_benders::oracle::{epi_membership_lp, EpiSet};
use corner_benders::polar::*;
use rand::Rng;

#[test]
fn trichotomy_matches_membership_oracle() {
    let mut r = rng(42);
    let mut counts = [0usize; 3];
    for pair in 0..200u64 {
        let implied = pair % 3 == 0;
        let data = random_data(pair / 4, implied);
        let gamma: Vec<f64> = (0..data.m()).map(|_| r.gen_range(-3..6) as f64).collect();
        let corner = corner::optimal_corner(&data, &gamma).unwrap();
        let cone = corner::epigraph_cone(&data, &corner);
        let interior = relative_interior_point(&data).unwrap();
        let cand = candidate(&data, implied, &mut r);
        let mut state = ReversePolarState::default();
        let out = solve_reverse_polar(
            &cone,
            &interior.point,
            &cand,
            &mut state,
            &mut FullScan { cone: &cone },
            &RaySelection::default(),
        )
        .unwrap();
        let member = epi_membership_lp(EpiSet::Corner(&corner), &data, &cand).unwrap();
        match out.verdict {
            Verdict::Member => {
                counts[0] += 1;
                assert!(member, "pair {pair}: member verdict rejected by oracle");
                assert!(out.z >= -1.0 - 1e-9);
            }
            Verdict::Facet => {
                counts[1] += 1;
                assert!(!member, "pair {pair}: facet for a member point");
                let cut = out.cut.unwrap();
                assert!(cut.violation(&cand.w, cand.theta) > 1e-7);
                assert!(valid_on_cone(&cone, &cut, 1e-6));
                assert!(facet_certificate(&cone, &cut).is_facet, "pair {pair}: not a facet");
                // Warm-start claim: every collected ray is tight on the facet.
                for &k in &state.warm {
                    assert!(cone.rays[k].dot(&cut.alpha, cut.alpha0) <= 1e-6);
                }
                // Full reverse polar with every ray row gives the same value.
                let mut full = ReversePolarState {
                    warm: (0..cone.rays.len()).collect(),
                };
                let again = solve_reverse_polar(
                    &cone,
                    &interior.point,
                    &cand,
                    &mut full,
                    &mut FullScan { cone: &cone },
                    &RaySelection::default(),
                )
                .unwrap();
                assert!((again.z - out.z).abs() < 1e-6);
            }
            Verdict::ImplicitEquality => {
                counts[2] += 1;
                assert!(!member);
                let cut = out.cut.unwrap();
                assert!(valid_on_cone(&cone, &cut, 1e-6));
                assert!(valid_on_cone(&cone, &cut.reversed(), 1e-6));
                assert!(cut.violation(&cand.w, cand.theta).abs() > 1e-7);
            }
        }
    }
    assert!(counts.iter().all(|&c| c > 0), "cases seen: {counts:?}");
}

#[test]
fn apex_is_a_member() {
    for seed in 0..10 {
        let data = random_data(seed, false);
        let corner = corner::optimal_corner(&data, &data.d).unwrap();
        let cone = corner::epigraph_cone(&data, &corner);
        let interior = relative_interior_point(&data).unwrap();
        assert!(interior.point.theta > dot(&data.d, &interior.y));
        assert_eq!(interior.point.w, data.q.mul_vec(&interior.y));
        let out = solve_reverse_polar(
            &cone,
            &interior.point,
            &cone.apex.clone(),
            &mut ReversePolarState::default(),
            &mut FullScan { cone: &cone },
            &RaySelection::default(),
        )
        .unwrap();
        assert_eq!(out.verdict, Verdict::Member);
    }
}

#[test]
fn interior_of_simplex_and_single_point() {
    let simplex = ProblemData {
        c: vec![],
        d: vec![1.0, 2.0, 3.0],
        t: SparseMatrix::new(1, 0),
        q: SparseMatrix::from_dense(&[vec![1.0, 0.0, 0.0]]),
        h: vec![0.0],
        x_set: Default::default(),
        y_set: StandardLp::new(SparseMatrix::from_dense(&[vec![1.0, 1.0, 1.0]]), vec![1.0], vec![0.0; 3]),
        y_network: None,
    };
    let ip = relative_interior_point(&simplex).unwrap();
    assert!(ip.y.iter().all(|&v| v > 1e-9));
    assert!((ip.y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(!ip.single_point);
    let mut point = simplex.clone();
    point.y_set = StandardLp::new(SparseMatrix::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]), vec![1.0, 2.0, 0.5], vec![0.0; 3]);
    let ip = relative_interior_point(&point).unwrap();
    assert!(ip.single_point);
    for (a, b) in ip.y.iter().zip([1.0, 2.0, 0.5]) {
        assert!((a - b).abs() < 1e-12);
    }
    // The epigraph is a vertical half-line; theta >= d^T y* is a facet.
    let corner = corner::optimal_corner(&point, &point.d).unwrap();
    assert!(corner.rays.is_empty());
    let cone = corner::epigraph_cone(&point, &corner);
    let below = EpiPoint { w: cone.apex.w.clone(), theta: cone.apex.theta - 1.0 };
    let out = solve_reverse_polar(&cone, &ip.point, &below, &mut ReversePolarState::default(), &mut FullScan { cone: &cone }, &RaySelection::default()).unwrap();
    assert_eq!(out.verdict, Verdict::Facet);
    assert!(facet_certificate(&cone, out.cut.as_ref().unwrap()).is_facet);
}

#[test]
fn hyperplane_embedded_y_yields_implicit_equality() {
    // Y = {y >= 0 : y1 + y2 + y3 = 1} and d = (5, 5, 5): d^T y = 5 on Y.
    let data = ProblemData {
        c: vec![],
        d: vec![5.0; 3],
        t: SparseMatrix::new(1, 0),
        q: SparseMatrix::from_dense(&[vec![1.0, 0.0, 0.0]]),
        h: vec![0.0],
        x_set: Default::default(),
        y_set: StandardLp::new(SparseMatrix::from_dense(&[vec![1.0, 1.0, 1.0]]), vec![1.0], vec![0.0; 3]),
        y_network: None,
    };
    let corner = corner::optimal_corner(&data, &data.d).unwrap();
    let cone = corner::epigraph_cone(&data, &corner);
    let ip = relative_interior_point(&data).unwrap();
    let cand = EpiPoint { w: vec![0.3], theta: 4.0 };
    let out = solve_reverse_polar(&cone, &ip.point, &cand, &mut ReversePolarState::default(), &mut FullScan { cone: &cone }, &RaySelection::default()).unwrap();
    // theta >= 5 is the facet here (the vertical ray keeps theta free upward).
    assert_ne!(out.verdict, Verdict::Member);
    assert!(!epi_membership_lp(EpiSet::Corner(&corner), &data, &cand).unwrap());
    let cut = out.cut.unwrap();
    assert!(valid_on_cone(&cone, &cut, 1e-9));
}
