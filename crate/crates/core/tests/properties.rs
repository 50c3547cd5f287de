use obskit_core::empirical_gramian::{gramian_from_differences, gramian_metrics, GramianResult};
use obskit_core::neural_encoding::{nla, nla_derivative, nla_difference, EncoderParams};
use obskit_core::numerics::symmetric_eig;
use obskit_core::placement::{
    combined_gramian, placement_objective, project_capped_simplex, OptimizerOptions, PlacementProblem,
};
use obskit_core::{Matrix, Vector};
use proptest::prelude::*;

fn psd(dim: usize, rank: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, dim * rank).prop_map(move |v| {
        let a = Matrix::from_vec(rank, dim, v);
        a.transpose() * a
    })
}

/// `clamp(v_i − τ, 0, 1)` for a common `τ`: the optimality conditions of
/// the projection onto the capped simplex.
fn satisfies_projection_kkt(v: &[f64], beta: &[f64], r: f64) -> bool {
    let tol = 1e-9;
    if (beta.iter().sum::<f64>() - r).abs() > tol || beta.iter().any(|&b| !(-tol..=1.0 + tol).contains(&b)) {
        return false;
    }
    let free: Vec<f64> = v.iter().zip(beta).filter(|(_, &b)| b > tol && b < 1.0 - tol).map(|(x, b)| x - b).collect();
    // Coordinates at 0 need v_i ≤ τ; coordinates at 1 need v_i − 1 ≥ τ.
    let lo = v.iter().zip(beta).filter(|(_, &b)| b <= tol).map(|(x, _)| *x).fold(f64::NEG_INFINITY, f64::max);
    let hi = v.iter().zip(beta).filter(|(_, &b)| b >= 1.0 - tol).map(|(x, _)| x - 1.0).fold(f64::INFINITY, f64::min);
    match free.first() {
        Some(&tau) => free.iter().all(|t| (t - tau).abs() < 1e-7) && tau <= hi + 1e-7 && tau >= lo - 1e-7,
        None => lo <= hi + 1e-7,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gramian_metric_bounds(w in psd(4, 6)) {
        let m = gramian_metrics(&w, 1e-12).unwrap();
        let eig = symmetric_eig(&w).unwrap();
        prop_assert!(m.kappa >= 1.0);
        prop_assert!(m.det_root <= m.trace / 4.0 * (1.0 + 1e-12));
        prop_assert!((m.trace - w.trace()).abs() <= 1e-12 * w.trace().max(1.0));
        prop_assert!((m.nu * eig.min() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gramian_from_differences_is_symmetric_psd(
        data in prop::collection::vec(-1.0f64..1.0, 3 * 20 * 2),
        eps in 1e-4f64..1.0,
    ) {
        let diffs: Vec<Vec<Vector>> = data
            .chunks(40)
            .map(|c| c.chunks(2).map(Vector::from_row_slice).collect())
            .collect();
        let w = gramian_from_differences(&diffs, 0.01, eps).unwrap();
        prop_assert!((&w - w.transpose()).norm() <= 1e-14 * w.norm().max(1e-300));
        let eig = symmetric_eig(&w).unwrap();
        prop_assert!(eig.min() >= -1e-12 * eig.max().abs().max(1e-300));
    }

    #[test]
    fn gramian_is_additive_over_channels(
        data in prop::collection::vec(-1.0f64..1.0, 2 * 15 * 2),
    ) {
        let two: Vec<Vec<Vector>> = data.chunks(30).map(|c| c.chunks(2).map(Vector::from_row_slice).collect()).collect();
        let ch = |k: usize| -> Vec<Vec<Vector>> {
            two.iter().map(|run| run.iter().map(|y| Vector::from_element(1, y[k])).collect()).collect()
        };
        let total = gramian_from_differences(&two, 0.1, 0.01).unwrap();
        let parts = gramian_from_differences(&ch(0), 0.1, 0.01).unwrap() + gramian_from_differences(&ch(1), 0.1, 0.01).unwrap();
        prop_assert!((total - &parts).norm() <= 1e-12 * parts.norm().max(1e-300));
    }

    #[test]
    fn projection_matches_optimality_conditions(
        v in prop::collection::vec(-3.0f64..3.0, 2..30),
        frac in 0.0f64..1.0,
    ) {
        let r = (frac * v.len() as f64).floor();
        let beta = project_capped_simplex(&v, r).unwrap();
        prop_assert!(satisfies_projection_kkt(&v, &beta, r), "v {v:?} beta {beta:?} r {r}");
    }

    #[test]
    fn projection_is_idempotent(v in prop::collection::vec(-2.0f64..2.0, 3..20)) {
        let r = (v.len() / 2) as f64;
        let once = project_capped_simplex(&v, r).unwrap();
        let twice = project_capped_simplex(&once, r).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_weight_never_lowers_lambda_min(
        gs in prop::collection::vec(psd(3, 2), 4),
        beta in prop::collection::vec(0.0f64..1.0, 4),
        i in 0usize..4,
        delta in 0.0f64..1.0,
    ) {
        let base = symmetric_eig(&combined_gramian(&beta, &gs).unwrap()).unwrap().min();
        let mut more = beta.clone();
        more[i] += delta;
        let bumped = symmetric_eig(&combined_gramian(&more, &gs).unwrap()).unwrap().min();
        prop_assert!(bumped >= base - 1e-12);
    }

    #[test]
    fn optimizer_improves_on_uniform_and_trace_is_monotone(
        gs in prop::collection::vec(psd(3, 3), 8),
        seed in 0u64..1000,
    ) {
        let problem = PlacementProblem::new(gs, 3, 1.0).unwrap();
        let opts = OptimizerOptions { restarts: 2, iterations: 60, step: 1.0, seed };
        let res = problem.optimize(&opts).unwrap();
        let uniform = problem.objective(&problem.uniform_weights()).unwrap();
        prop_assert!(res.objective <= uniform);
        prop_assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(res.selected.len(), 3);
        prop_assert!((res.beta.iter().sum::<f64>() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn placement_objective_is_scale_free_in_kappa(w in psd(3, 4), s in 0.1f64..10.0) {
        let a = placement_objective(&w, 0.0).unwrap();
        let b = placement_objective(&(w * s), 0.0).unwrap();
        prop_assume!(a.is_finite());
        prop_assert!((a - b).abs() <= 1e-8 * a);
    }

    #[test]
    fn nla_difference_agrees_with_direct_difference(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in 0.5f64..30.0,
        d in -1.0f64..1.0,
    ) {
        let p = EncoderParams::default().with_nla(c, d);
        let direct = nla(a, &p) - nla(b, &p);
        prop_assert!((nla_difference(a, b, &p) - direct).abs() <= 1e-14);
        prop_assert!((0.0..=1.0).contains(&nla(a, &p)));
        if a > b {
            prop_assert!(nla_difference(a, b, &p) >= 0.0);
        }
        prop_assert!(nla_derivative(a, &p) <= c / 4.0 * (1.0 + 1e-15));
    }

    #[test]
    fn gramian_result_eigenvalues_ascending(w in psd(4, 5)) {
        let g = GramianResult::from_matrix(w, 1e-12).unwrap();
        prop_assert!(g.eigenvalues.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(g.lambda_min() <= g.lambda_max());
    }
}

#[test]
fn full_budget_selects_every_site() {
    let gs: Vec<Matrix> = (1..=5).map(|k| Matrix::identity(2, 2) * f64::from(k)).collect();
    let problem = PlacementProblem::new(gs, 5, 20.0).unwrap();
    let res = problem.optimize(&OptimizerOptions::default()).unwrap();
    assert_eq!(res.selected, vec![0, 1, 2, 3, 4]);
    assert!(res.beta.iter().all(|&b| b == 1.0));
}
