// L1 logistic regression and the grafting squared-hinge SVM along a
// regularization path, plus a cross-validated one-vs-all model.
//
// `cargo run --example sparse_solvers -- [--quick]`

use fame::features::FeatureMatrix;
use fame::linear::{
    accuracy, binary_labels, lambda_max, select_lambda_cv, train_grafting_svm, train_l1lr, train_ova, Loss,
    SolverOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Three classes, each shifted along its own handful of coordinates.
fn blobs(per_class: usize, dim: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        for _ in 0..per_class {
            let row: Vec<f64> = (0..dim)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + if j / 3 == c { 1.5 } else { 0.0 }
                })
                .collect();
            rows.push(row);
            labels.push(c as i32);
        }
    }
    FeatureMatrix::from_rows(&rows, labels).expect("rows share a length")
}

pub fn run(quick: bool) -> fame::Result<()> {
    let (per_class, dim) = if quick { (30, 12) } else { (300, 60) };
    let x = blobs(per_class, dim, 3);
    let y = binary_labels(x.labels(), 0);

    for loss in [Loss::Logistic, Loss::SquaredHinge] {
        let top = lambda_max(&x, &y, loss)?;
        println!("{loss:?}: lambda_max {top:.3}");
        for frac in [0.9, 0.5, 0.1, 0.01] {
            let opts = SolverOptions::with_lambda(frac * top);
            let (model, report) = match loss {
                Loss::Logistic => train_l1lr(&x, &y, &opts)?,
                Loss::SquaredHinge => train_grafting_svm(&x, &y, &opts)?,
            };
            println!(
                "  lambda {:>8.3}: {:>3} active, objective {:.4}, {} sweeps",
                opts.lambda,
                model.active_features(),
                report.final_objective,
                report.iterations
            );
        }
    }

    let labels = x.labels().to_vec();
    let grid = [0.03, 0.1, 0.3, 1.0, 3.0];
    let (lambda, cv) = select_lambda_cv(&x, &labels, &grid, 5, 0, &SolverOptions::default())?;
    for (l, acc) in &cv {
        println!("cv lambda {l}: accuracy {acc:.3}");
    }
    let (model, _) = train_ova(&x, &labels, &SolverOptions::with_lambda(lambda))?;
    let test = blobs(per_class, dim, 4);
    println!(
        "selected lambda {lambda}, held-out accuracy {:.3}",
        accuracy(&model, &test, test.labels())?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
