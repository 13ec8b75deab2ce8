//! Sparse linear classifiers: L1 logistic regression by coordinate descent,
//! a grafting-trained L1 squared-hinge SVM, and a one-vs-all wrapper.

mod model;
mod ova;
mod solver;

pub use model::{sigmoid, softplus, Loss, SparseLinearModel, TrainReport};
pub use ova::{accuracy, select_lambda_cv, stratified_folds, train_ova, train_ova_for, OvaModel};
pub use solver::{binary_labels, lambda_max, train_grafting, train_grafting_svm, train_l1lr, SolverOptions};

use crate::error::Result;
use crate::features::FeatureMatrix;

/// Trains with the given loss: logistic uses full coordinate descent,
/// squared hinge uses grafting.
pub fn train_binary(
    x: &FeatureMatrix,
    y: &[f64],
    loss: Loss,
    opts: &SolverOptions,
) -> Result<(SparseLinearModel, TrainReport)> {
    match loss {
        Loss::Logistic => train_l1lr(x, y, opts),
        Loss::SquaredHinge => train_grafting_svm(x, y, opts),
    }
}
