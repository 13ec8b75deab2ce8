mod common;

use common::{fista, objective, random_problem, support};
use fame::features::FeatureMatrix;
use fame::linear::{
    binary_labels, lambda_max, select_lambda_cv, train_grafting_svm, train_l1lr, train_ova, Loss, OvaModel,
    SolverOptions,
};

fn weights(m: &fame::linear::SparseLinearModel) -> Vec<f64> {
    (0..m.dim()).map(|j| m.weight(j)).collect()
}

fn tight(lambda: f64) -> SolverOptions {
    SolverOptions {
        lambda,
        tol: 1e-9,
        max_sweeps: 5000,
    }
}

#[test]
fn l1lr_matches_proximal_gradient() {
    for seed in 0..5 {
        let (x, y) = random_problem(50, 10, seed);
        let lambda = 2.0;
        let (model, _) = train_l1lr(&x, &y, &SolverOptions::with_lambda(lambda)).unwrap();
        let ours = objective(&x, &y, &weights(&model), model.bias(), lambda, Loss::Logistic);
        let (w, b) = fista(&x, &y, lambda, Loss::Logistic, 40_000);
        let reference = objective(&x, &y, &w, b, lambda, Loss::Logistic);
        let rel = (ours - reference).abs() / reference;
        assert!(rel < 1e-4, "seed {seed}: {ours} vs {reference}");
        assert!((model.objective(x.rows(), &y) - ours).abs() < 1e-9);
    }
}

#[test]
fn grafting_matches_full_solver_with_same_support() {
    for seed in 0..5 {
        let (x, y) = random_problem(80, 20, 100 + seed);
        let lambda = 6.0;
        let (model, _) = train_grafting_svm(&x, &y, &tight(lambda)).unwrap();
        let ours = objective(&x, &y, &weights(&model), model.bias(), lambda, Loss::SquaredHinge);
        let (w, b) = fista(&x, &y, lambda, Loss::SquaredHinge, 60_000);
        let reference = objective(&x, &y, &w, b, lambda, Loss::SquaredHinge);
        let rel = (ours - reference).abs() / reference;
        assert!(rel < 1e-3, "seed {seed}: {ours} vs {reference}");
        let s = support(&w, 1e-6);
        assert!(!s.is_empty() && s.len() < 20, "seed {seed}: support {s:?}");
        assert_eq!(support(&weights(&model), 1e-6), s, "seed {seed}");
    }
}

#[test]
fn column_negation_flips_weight_sign() {
    let (x, y) = random_problem(60, 8, 7);
    let flipped_rows: Vec<Vec<f64>> = x
        .rows()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| if j == 3 { -v } else { v })
                .collect()
        })
        .collect();
    let xf = FeatureMatrix::from_rows(&flipped_rows, x.labels().to_vec()).unwrap();
    let opts = tight(1.0);
    let (a, _) = train_l1lr(&x, &y, &opts).unwrap();
    let (b, _) = train_l1lr(&xf, &y, &opts).unwrap();
    for j in 0..8 {
        let expect = if j == 3 { -a.weight(j) } else { a.weight(j) };
        assert!((b.weight(j) - expect).abs() < 1e-5, "feature {j}");
    }
}

#[test]
fn duplicated_data_with_doubled_lambda_keeps_solution() {
    let (x, y) = random_problem(40, 6, 11);
    let mut rows: Vec<Vec<f64>> = x.rows().map(|r| r.to_vec()).collect();
    rows.extend(x.rows().map(|r| r.to_vec()));
    let yy: Vec<f64> = y.iter().chain(&y).copied().collect();
    let xx = FeatureMatrix::from_rows(&rows, vec![0; rows.len()]).unwrap();
    for loss in [Loss::Logistic, Loss::SquaredHinge] {
        let train = |x: &FeatureMatrix, y: &[f64], l: f64| match loss {
            Loss::Logistic => train_l1lr(x, y, &tight(l)).unwrap().0,
            Loss::SquaredHinge => train_grafting_svm(x, y, &tight(l)).unwrap().0,
        };
        let a = train(&x, &y, 1.5);
        let b = train(&xx, &yy, 3.0);
        for j in 0..6 {
            assert!((a.weight(j) - b.weight(j)).abs() < 1e-4, "{loss:?} feature {j}");
        }
        assert!((a.bias() - b.bias()).abs() < 1e-4);
    }
}

#[test]
fn lambda_above_max_gives_empty_model() {
    let (x, y) = random_problem(50, 10, 3);
    for loss in [Loss::Logistic, Loss::SquaredHinge] {
        let lmax = lambda_max(&x, &y, loss).unwrap();
        let opts = SolverOptions::with_lambda(lmax * 1.01);
        let m = match loss {
            Loss::Logistic => train_l1lr(&x, &y, &opts).unwrap().0,
            Loss::SquaredHinge => train_grafting_svm(&x, &y, &opts).unwrap().0,
        };
        assert_eq!(m.active_features(), 0, "{loss:?}");
        let below = SolverOptions::with_lambda(lmax * 0.9);
        let m = match loss {
            Loss::Logistic => train_l1lr(&x, &y, &below).unwrap().0,
            Loss::SquaredHinge => train_grafting_svm(&x, &y, &below).unwrap().0,
        };
        assert!(m.active_features() > 0, "{loss:?}");
    }
}

#[test]
fn objective_history_never_increases() {
    for seed in 0..5 {
        let (x, y) = random_problem(50, 10, 200 + seed);
        for (_, r) in [
            train_l1lr(&x, &y, &SolverOptions::with_lambda(0.5)).unwrap(),
            train_grafting_svm(&x, &y, &SolverOptions::with_lambda(0.5)).unwrap(),
        ] {
            for w in r.objective_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{w:?}");
            }
        }
    }
}

fn blobs(per_class: usize, seed: u64) -> (FeatureMatrix, Vec<i32>) {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        for _ in 0..per_class {
            let mut r: Vec<f64> = (0..5)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    0.5 * v
                })
                .collect();
            r[c] += 3.0;
            rows.push(r);
            labels.push(c as i32);
        }
    }
    (FeatureMatrix::from_rows(&rows, labels.clone()).unwrap(), labels)
}

#[test]
fn ova_separates_blobs_and_round_trips() {
    let (x, labels) = blobs(30, 1);
    let (model, reports) = train_ova(&x, &labels, &SolverOptions::with_lambda(0.1)).unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(model.classes(), &[0, 1, 2]);
    for (r, &l) in x.rows().zip(&labels) {
        assert_eq!(model.predict(r).unwrap(), l);
    }
    let back = OvaModel::from_bytes(&model.to_bytes()).unwrap();
    assert_eq!(back.to_bytes(), model.to_bytes());
    for r in x.rows() {
        assert_eq!(back.predict(r).unwrap(), model.predict(r).unwrap());
    }
}

#[test]
fn ova_member_equals_binary_problem() {
    let (x, labels) = blobs(20, 2);
    let opts = SolverOptions::with_lambda(0.3);
    let (model, _) = train_ova(&x, &labels, &opts).unwrap();
    let (direct, _) = train_grafting_svm(&x, &binary_labels(&labels, 1), &opts).unwrap();
    assert_eq!(model.members()[1].to_bytes(), direct.to_bytes());
}

#[test]
fn cv_prefers_larger_lambda_on_ties() {
    let (x, labels) = blobs(20, 3);
    let grid = [0.03, 0.1, 0.3, 1.0, 3.0];
    let (chosen, scores) = select_lambda_cv(&x, &labels, &grid, 5, 0, &SolverOptions::default()).unwrap();
    assert_eq!(scores.len(), 5);
    let best = scores.iter().map(|s| s.1).fold(f64::MIN, f64::max);
    let expect = scores
        .iter()
        .filter(|s| s.1 == best)
        .map(|s| s.0)
        .fold(f64::MIN, f64::max);
    assert_eq!(chosen, expect);
}
