//! Coordinate descent for `sum_i loss(y_i (w.x_i + b)) + lambda |w|_1`.
//!
//! Columns are rescaled to unit max-abs before solving and the per-coordinate
//! penalty is rescaled with them, so the minimized objective is unchanged.
//! Each coordinate takes a proximal Newton step with Armijo backtracking.

use super::model::{Loss, SparseLinearModel, TrainReport};
use crate::error::{FameError, Result};
use crate::features::FeatureMatrix;

const ARMIJO: f64 = 0.01;
const MAX_BACKTRACK: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub lambda: f64,
    /// Stop when every optimality violation is below `tol` times the largest
    /// loss gradient at the zero solution (floored at 1).
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            lambda: 1.0,
            tol: 1e-5,
            max_sweeps: 200,
        }
    }
}

impl SolverOptions {
    pub fn with_lambda(lambda: f64) -> Self {
        SolverOptions {
            lambda,
            ..Default::default()
        }
    }
}

pub(crate) struct Problem {
    loss: Loss,
    lambda: f64,
    dim: usize,
    /// scaled columns; `None` for all-zero columns
    columns: Vec<Option<Vec<f64>>>,
    scale: Vec<f64>,
    y: Vec<f64>,
    /// scaled-space weights
    w: Vec<f64>,
    bias: f64,
    /// signed margins `y_i (w.x_i + b)`
    z: Vec<f64>,
    /// `loss(z_i)`, kept in sync with `z`
    lv: Vec<f64>,
    trial: Vec<f64>,
    d1: Vec<f64>,
    /// absolute stopping threshold on the violation
    tol_abs: f64,
}

pub(crate) fn validate(x: &FeatureMatrix, y: &[f64], lambda: f64) -> Result<()> {
    if x.n() != y.len() {
        return Err(FameError::Dimension(format!(
            "{} rows but {} labels",
            x.n(),
            y.len()
        )));
    }
    if x.n() < 2 {
        return Err(FameError::Argument("need at least 2 training instances".into()));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(FameError::Argument(format!("labels must be +1/-1, found {bad}")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(FameError::Argument(
            "both positive and negative labels are required".into(),
        ));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(FameError::Argument(format!("lambda must be >= 0, got {lambda}")));
    }
    x.check_finite()
}

impl Problem {
    pub(crate) fn new(x: &FeatureMatrix, y: &[f64], loss: Loss, opts: &SolverOptions) -> Result<Self> {
        validate(x, y, opts.lambda)?;
        let (n, dim) = (x.n(), x.dim());
        let mut scale = vec![0.0f64; dim];
        for r in x.rows() {
            for (s, v) in scale.iter_mut().zip(r) {
                *s = s.max(v.abs());
            }
        }
        let mut columns: Vec<Option<Vec<f64>>> = scale
            .iter()
            .map(|&s| {
                if s > 0.0 {
                    Some(Vec::with_capacity(n))
                } else {
                    None
                }
            })
            .collect();
        for r in x.rows() {
            for ((col, v), s) in columns.iter_mut().zip(r).zip(&scale) {
                if let Some(c) = col {
                    c.push(v / s);
                }
            }
        }
        let mut p = Problem {
            loss,
            lambda: opts.lambda,
            dim,
            columns,
            scale,
            y: y.to_vec(),
            w: vec![0.0; dim],
            bias: 0.0,
            z: vec![0.0; n],
            lv: vec![loss.value(0.0); n],
            trial: vec![0.0; n],
            d1: vec![0.0; n],
            tol_abs: opts.tol,
        };
        p.fit_bias_only();
        let g0 = p.gradients().iter().fold(0.0f64, |m, g| m.max(g.abs()));
        p.tol_abs = opts.tol * g0.max(1.0);
        Ok(p)
    }

    fn fit_bias_only(&mut self) {
        for _ in 0..100 {
            if self.step_bias().abs() < 1e-14 {
                break;
            }
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn tol_abs(&self) -> f64 {
        self.tol_abs
    }

    fn refresh_first_derivatives(&mut self) {
        for (z, a) in self.z.iter().zip(&mut self.d1) {
            *a = self.loss.derivatives(*z).0;
        }
    }

    pub(crate) fn loss_sum(&self) -> f64 {
        self.lv.iter().sum()
    }

    /// Objective in original units (same value as in scaled units).
    pub(crate) fn objective(&self) -> f64 {
        let penalty: f64 = self
            .w
            .iter()
            .zip(&self.scale)
            .filter(|(_, &s)| s > 0.0)
            .map(|(w, s)| w.abs() / s)
            .sum();
        self.loss_sum() + self.lambda * penalty
    }

    /// Loss gradient for original-unit `w_j`; needs fresh `d1`.
    fn column_gradient(&self, j: usize) -> f64 {
        let Some(col) = &self.columns[j] else { return 0.0 };
        let g: f64 = col
            .iter()
            .zip(&self.d1)
            .zip(&self.y)
            .map(|((x, d), y)| d * y * x)
            .sum();
        g * self.scale[j]
    }

    /// All loss gradients at the current point, original units.
    pub(crate) fn gradients(&mut self) -> Vec<f64> {
        self.refresh_first_derivatives();
        (0..self.dim).map(|j| self.column_gradient(j)).collect()
    }

    /// Optimality violation of coordinate `j` given its loss gradient (original units).
    pub(crate) fn violation(&self, j: usize, g: f64) -> f64 {
        if self.columns[j].is_none() {
            return 0.0;
        }
        let w = self.w[j];
        if w > 0.0 {
            (g + self.lambda).abs()
        } else if w < 0.0 {
            (g - self.lambda).abs()
        } else {
            (g.abs() - self.lambda).max(0.0)
        }
    }

    /// Newton step on the unpenalized bias. Returns the applied change.
    fn step_bias(&mut self) -> f64 {
        let mut g = 0.0;
        let mut h = 1e-12;
        for (&z, y) in self.z.iter().zip(&self.y) {
            let (a, b) = self.loss.derivatives(z);
            g += a * y;
            h += b;
        }
        let d = -g / h;
        if d.abs() < 1e-15 || !d.is_finite() {
            return 0.0;
        }
        let base = self.loss_sum();
        let delta = g * d;
        let mut beta = 1.0;
        for _ in 0..MAX_BACKTRACK {
            let step = beta * d;
            let mut total = 0.0;
            for ((t, &z), y) in self.trial.iter_mut().zip(&self.z).zip(&self.y) {
                *t = self.loss.value(z + step * y);
                total += *t;
            }
            if total - base <= ARMIJO * beta * delta {
                for (z, y) in self.z.iter_mut().zip(&self.y) {
                    *z += step * y;
                }
                std::mem::swap(&mut self.lv, &mut self.trial);
                self.bias += step;
                return step;
            }
            beta *= 0.5;
        }
        0.0
    }

    /// Proximal Newton step on scaled coordinate `j`.
    fn step_coordinate(&mut self, j: usize) -> f64 {
        let Some(col) = &self.columns[j] else { return 0.0 };
        let mut g = 0.0;
        let mut h = 1e-12;
        let mut base = 0.0;
        for (((x, &z), y), lv) in col.iter().zip(&self.z).zip(&self.y).zip(&self.lv) {
            if *x != 0.0 {
                let (a, b) = self.loss.derivatives(z);
                g += a * y * x;
                h += b * x * x;
                base += lv;
            }
        }
        let mu = self.lambda / self.scale[j];
        let w = self.w[j];
        let d = if g + mu <= h * w {
            -(g + mu) / h
        } else if g - mu >= h * w {
            -(g - mu) / h
        } else {
            -w
        };
        if d.abs() < 1e-15 || !d.is_finite() {
            return 0.0;
        }
        let delta = g * d + mu * ((w + d).abs() - w.abs());
        let mut beta = 1.0;
        for _ in 0..MAX_BACKTRACK {
            let step = beta * d;
            let mut trial = 0.0;
            for (((t, x), &z), y) in self.trial.iter_mut().zip(col).zip(&self.z).zip(&self.y) {
                if *x != 0.0 {
                    *t = self.loss.value(z + step * y * x);
                    trial += *t;
                }
            }
            let change = trial - base + mu * ((w + step).abs() - w.abs());
            if change <= ARMIJO * beta * delta {
                for ((((x, z), y), lv), t) in col
                    .iter()
                    .zip(self.z.iter_mut())
                    .zip(&self.y)
                    .zip(self.lv.iter_mut())
                    .zip(&self.trial)
                {
                    if *x != 0.0 {
                        *z += step * y * x;
                        *lv = *t;
                    }
                }
                self.w[j] = w + step;
                return step;
            }
            beta *= 0.5;
        }
        0.0
    }

    /// One cyclic pass: bias, then each listed coordinate in order.
    pub(crate) fn sweep(&mut self, coords: &[usize]) {
        self.step_bias();
        for &j in coords {
            self.step_coordinate(j);
        }
    }

    /// Max violation over `coords` plus the bias gradient.
    pub(crate) fn max_violation(&mut self, coords: &[usize]) -> f64 {
        self.refresh_first_derivatives();
        let bias_g: f64 = self.d1.iter().zip(&self.y).map(|(d, y)| d * y).sum();
        let mut worst = bias_g.abs();
        for &j in coords {
            worst = worst.max(self.violation(j, self.column_gradient(j)));
        }
        worst
    }

    /// Sweeps over `coords` until the violation is at most `tol` or the budget runs out.
    pub(crate) fn solve(
        &mut self,
        coords: &[usize],
        max_sweeps: usize,
        tol: f64,
        history: &mut Vec<f64>,
    ) -> (usize, f64) {
        let mut sweeps = 0;
        let mut violation = self.max_violation(coords);
        while violation > tol && sweeps < max_sweeps {
            self.sweep(coords);
            sweeps += 1;
            history.push(self.objective());
            violation = self.max_violation(coords);
        }
        (sweeps, violation)
    }

    pub(crate) fn is_zero_column(&self, j: usize) -> bool {
        self.columns[j].is_none()
    }

    pub(crate) fn into_model(self) -> Result<SparseLinearModel> {
        let weights = self
            .w
            .iter()
            .zip(&self.scale)
            .enumerate()
            .filter(|(_, (w, _))| **w != 0.0)
            .map(|(j, (w, s))| (j, w / s))
            .collect();
        SparseLinearModel::new(self.dim, weights, self.bias, self.lambda, self.loss)
    }
}

pub(crate) fn training_accuracy(model: &SparseLinearModel, x: &FeatureMatrix, y: &[f64]) -> f64 {
    let correct = x
        .rows()
        .zip(y)
        .filter(|(r, &yi)| (model.decision_unchecked(r) > 0.0) == (yi > 0.0))
        .count();
    correct as f64 / y.len() as f64
}

fn finish(
    problem: Problem,
    x: &FeatureMatrix,
    y: &[f64],
    sweeps: usize,
    violation: f64,
    objective_history: Vec<f64>,
) -> Result<(SparseLinearModel, TrainReport)> {
    let final_objective = problem.objective();
    if !final_objective.is_finite() {
        return Err(FameError::Numeric("objective diverged".into()));
    }
    let model = problem.into_model()?;
    let report = TrainReport {
        final_objective,
        iterations: sweeps,
        training_accuracy: training_accuracy(&model, x, y),
        active_features: model.active_features(),
        objective_history,
        max_violation: violation,
    };
    Ok((model, report))
}

/// L1-regularized logistic regression by cyclic coordinate descent over all features.
pub fn train_l1lr(
    x: &FeatureMatrix,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<(SparseLinearModel, TrainReport)> {
    let mut problem = Problem::new(x, y, Loss::Logistic, opts)?;
    let coords: Vec<usize> = (0..problem.dim())
        .filter(|&j| !problem.is_zero_column(j))
        .collect();
    let mut history = vec![problem.objective()];
    let tol = problem.tol_abs();
    let (sweeps, violation) = problem.solve(&coords, opts.max_sweeps, tol, &mut history);
    finish(problem, x, y, sweeps, violation, history)
}

/// L1 squared-hinge linear SVM trained by grafting: features enter the active
/// set one at a time, largest loss gradient first, while that gradient exceeds
/// `lambda` by more than the tolerance; the active set is re-optimized after every addition.
pub fn train_grafting_svm(
    x: &FeatureMatrix,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<(SparseLinearModel, TrainReport)> {
    train_grafting(x, y, Loss::SquaredHinge, opts)
}

/// Grafting with an arbitrary loss.
pub fn train_grafting(
    x: &FeatureMatrix,
    y: &[f64],
    loss: Loss,
    opts: &SolverOptions,
) -> Result<(SparseLinearModel, TrainReport)> {
    let mut problem = Problem::new(x, y, loss, opts)?;
    let dim = problem.dim();
    let tol = problem.tol_abs();
    // re-solves between additions stop early; the last one is always tight
    let loose = 100.0 * tol;
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; dim];
    let mut history = vec![problem.objective()];
    let (mut sweeps, mut violation) = problem.solve(&active, opts.max_sweeps, tol, &mut history);
    let mut tight = true;

    loop {
        let grads = problem.gradients();
        let candidate = (0..dim)
            .filter(|&j| !in_active[j] && !problem.is_zero_column(j))
            .fold(None, |best: Option<(usize, f64)>, j| match best {
                Some((_, g)) if g >= grads[j].abs() => best,
                _ => Some((j, grads[j].abs())),
            });
        match candidate {
            Some((j, g)) if g > opts.lambda + tol => {
                active.push(j);
                in_active[j] = true;
                let (s, v) = problem.solve(&active, opts.max_sweeps, loose, &mut history);
                sweeps += s;
                violation = v;
                tight = false;
            }
            _ if !tight => {
                let (s, v) = problem.solve(&active, opts.max_sweeps, tol, &mut history);
                sweeps += s;
                violation = v;
                tight = true;
            }
            Some((_, g)) => {
                violation = violation.max((g - opts.lambda).max(0.0));
                break;
            }
            None => break,
        }
    }
    finish(problem, x, y, sweeps, violation, history)
}

/// Smallest lambda at which the solution has no active features.
pub fn lambda_max(x: &FeatureMatrix, y: &[f64], loss: Loss) -> Result<f64> {
    let mut problem = Problem::new(x, y, loss, &SolverOptions::with_lambda(0.0))?;
    Ok(problem.gradients().iter().fold(0.0f64, |m, g| m.max(g.abs())))
}

/// Converts class labels to `+1` for `positive`, `-1` otherwise.
pub fn binary_labels(labels: &[i32], positive: i32) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect()
}
