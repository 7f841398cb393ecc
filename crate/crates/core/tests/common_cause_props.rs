#![allow(clippy::needless_range_loop)]

mod common;

use common::{covid, max_abs_diff, oracle_compose, oracle_invert, smoking_coarse};
use proptest::prelude::*;
use rand::Rng;
use simpson_core::common_cause::{
    association_sign, compose, invert, matches_target, search_ternary, theorem1_grid, theorem1_scan, BKernel,
    CauseModel, SearchOutcome, SearchTarget,
};
use simpson_core::contingency::{detect_simpson, JointTable};
use simpson_core::parallel::chunk_rng;
use simpson_core::{sign_with_tol, Error, PROB_TOL};

fn random_joint<R: Rng>(rng: &mut R, levels: usize) -> Vec<[[f64; 2]; 2]> {
    let mut joint: Vec<[[f64; 2]; 2]> = (0..levels)
        .map(|_| [[rng.random::<f64>() + 1e-3, rng.random::<f64>() + 1e-3], [rng.random::<f64>() + 1e-3, rng.random::<f64>() + 1e-3]])
        .collect();
    let total: f64 = joint.iter().flatten().flatten().sum();
    joint.iter_mut().flatten().flatten().for_each(|v| *v /= total);
    joint
}

fn random_binary_model<R: Rng>(rng: &mut R, min_det: f64) -> (CauseModel, BKernel) {
    loop {
        let kernel = BKernel::new(rng.random(), rng.random()).unwrap();
        if kernel.det().abs() <= min_det {
            continue;
        }
        let model = CauseModel::new(random_joint(rng, 2), vec![kernel.p_b_given_c, 1.0 - kernel.p_notb_given_notc]).unwrap();
        return (model, kernel);
    }
}

#[test]
fn invert_matches_direct_linear_solve_on_covid() {
    let t = covid();
    let view = invert(&t, &BKernel::new(0.95, 0.90).unwrap()).unwrap();
    let oracle = oracle_invert(&t.to_flat(), 0.95, 0.90).unwrap();
    for k in 0..2 {
        for c in 0..2 {
            assert!((view.a1_given[k][c] - oracle.a1_given[k][c]).abs() < 1e-10);
        }
        assert!((view.c_given[k] - oracle.c_given[k]).abs() < 1e-10);
    }
    assert_eq!(association_sign(&view), [1, 1]);
}

#[test]
fn identity_kernel_returns_fine_conditionals() {
    for t in [covid(), smoking_coarse()] {
        let view = invert(&t, &BKernel::identity()).unwrap();
        let fine = t.fine_conditionals().unwrap();
        let b = t.b_given_a2().unwrap();
        for k in 0..2 {
            assert!(max_abs_diff(&view.a1_given[k], &fine[k]) < 1e-12);
            assert!((view.c_given[k] - b[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn rank_one_kernels_are_singular() {
    for q in [0.0, 0.3, 0.5, 1.0] {
        let err = invert(&covid(), &BKernel::new(q, 1.0 - q).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SingularKernel { .. }));
    }
}

#[test]
fn binary_round_trip_ten_thousand_models() {
    let mut rng = chunk_rng(2024, 0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (model, kernel) = random_binary_model(&mut rng, 0.05);
        let table = compose(&model).unwrap();
        assert!(max_abs_diff(&table.to_flat(), &oracle_compose(model.joint(), model.kernel())) < 1e-14);
        let view = invert(&table, &kernel).unwrap();
        let a1 = model.a1_given();
        let c = model.c_given_a2();
        for k in 0..2 {
            for level in 0..2 {
                worst = worst.max((view.a1_given[k][level] - a1[level][k].unwrap()).abs());
            }
            worst = worst.max((view.c_given[k] - c[0][k]).abs());
        }
    }
    assert!(worst < 1e-10, "worst round-trip error {worst:e}");
}

#[test]
fn stratum_conditional_lies_between_cause_conditionals() {
    let mut rng = chunk_rng(7, 0);
    for _ in 0..5000 {
        let (model, _) = random_binary_model(&mut rng, 0.0);
        let table = compose(&model).unwrap();
        let fine = table.fine_conditionals().unwrap();
        let a1 = model.a1_given();
        for k in 0..2 {
            let lo = a1[0][k].unwrap().min(a1[1][k].unwrap());
            let hi = a1[0][k].unwrap().max(a1[1][k].unwrap());
            for m in 0..2 {
                assert!(fine[k][m] >= lo - 1e-12 && fine[k][m] <= hi + 1e-12);
            }
        }
    }
}

#[test]
fn independent_cause_gives_independent_b() {
    // p(A1, A2, c) = p(A1, A2) p(c)
    let base = [[0.1, 0.2], [0.3, 0.4]];
    let pc = [0.25, 0.75];
    let joint: Vec<[[f64; 2]; 2]> = pc.iter().map(|p| base.map(|row| row.map(|v| v * p))).collect();
    let t = compose(&CauseModel::new(joint, vec![0.9, 0.2]).unwrap()).unwrap();
    let pb = 0.25 * 0.9 + 0.75 * 0.2;
    for i in 0..2 {
        for k in 0..2 {
            assert!((t.cell(i, k, 0) - base[i][k] * pb).abs() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn valid_views_reconstruct_the_table(beta in 0.0f64..1.0, gamma in 0.0f64..1.0) {
        let t = covid();
        match invert(&t, &BKernel::new(beta, gamma).unwrap()) {
            Ok(view) => {
                let fine = t.fine_conditionals().unwrap();
                let back = view.reconstruct_fine(&BKernel::new(beta, gamma).unwrap());
                for k in 0..2 {
                    prop_assert!(max_abs_diff(&back[k], &fine[k]) < 1e-10);
                }
                let oracle = oracle_invert(&t.to_flat(), beta, gamma).unwrap();
                prop_assert!(oracle.min_entry >= -1e-12);
            }
            Err(Error::SingularKernel { .. }) => prop_assert!((beta + gamma - 1.0).abs() <= 1e-10),
            Err(Error::InvalidCause(_)) => {
                let oracle = oracle_invert(&t.to_flat(), beta, gamma).unwrap();
                prop_assert!(oracle.min_entry < 0.0);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn fixture_scans_have_no_counterexamples() {
    for t in [covid(), smoking_coarse()] {
        let scan = theorem1_scan(&t, 10_000, 1, None).unwrap();
        assert!(scan.holds());
        assert_eq!(scan.n_sign_agree, scan.n_valid);
        assert!(scan.n_valid > 0);
        assert_eq!(scan.fine_sign, 1);
        let grid = theorem1_grid(&t, 200).unwrap();
        assert!(grid.holds() && grid.n_valid > 0);
    }
}

#[test]
fn inverted_paradox_scans_in_caller_labels() {
    let t = covid().swap_a2();
    let scan = theorem1_scan(&t, 5000, 3, Some(2)).unwrap();
    assert!(scan.holds());
    assert_eq!(scan.fine_sign, -1);
}

#[test]
fn scan_rejects_non_paradox() {
    assert!(matches!(theorem1_scan(&JointTable::uniform(), 10, 0, None), Err(Error::NotAParadox)));
    assert!(matches!(
        search_ternary(&JointTable::uniform(), SearchTarget::FineOption, 10, 0),
        Err(Error::NotAParadox)
    ));
}

fn check_found(t: &JointTable, target: SearchTarget, outcome: &SearchOutcome) -> bool {
    let SearchOutcome::Found { model, .. } = outcome else { return false };
    assert_eq!(model.levels(), 3);
    let composed = oracle_compose(model.joint(), model.kernel());
    let total: f64 = composed.iter().sum();
    let normalised: Vec<f64> = composed.iter().map(|v| v / total).collect();
    assert!(max_abs_diff(&normalised, &t.to_flat()) < 1e-6);
    // per-level gaps recomputed from the joint directly
    let gaps: Vec<f64> = model
        .joint()
        .iter()
        .map(|cell| cell[0][0] / (cell[0][0] + cell[1][0]) - cell[0][1] / (cell[0][1] + cell[1][1]))
        .collect();
    let r = detect_simpson(t).unwrap();
    assert!(matches_target(&gaps, target, sign_with_tol(r.aggregate_gap, PROB_TOL), r.fine_sign()));
    true
}

#[test]
fn ternary_search_results_compose_back() {
    for t in [covid(), smoking_coarse()] {
        let fine = search_ternary(&t, SearchTarget::FineOption, 10, 1).unwrap();
        assert!(check_found(&t, SearchTarget::FineOption, &fine));
        let agg = search_ternary(&t, SearchTarget::AggregateOption, 200_000, 1).unwrap();
        assert!(check_found(&t, SearchTarget::AggregateOption, &agg), "aggregate option not found");
        let mixed = search_ternary(&t, SearchTarget::MixedSigns, 200_000, 1).unwrap();
        if !check_found(&t, SearchTarget::MixedSigns, &mixed) {
            assert!(matches!(mixed, SearchOutcome::NotFound { evaluations } if evaluations == 200_000));
        }
    }
}

#[test]
fn ternary_search_is_seed_deterministic() {
    let t = covid();
    let a = serde_json::to_string(&search_ternary(&t, SearchTarget::AggregateOption, 50_000, 5).unwrap()).unwrap();
    let b = serde_json::to_string(&search_ternary(&t, SearchTarget::AggregateOption, 50_000, 5).unwrap()).unwrap();
    assert_eq!(a, b);
}
