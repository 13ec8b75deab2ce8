//! Reference implementations shared by the integration tests. Nothing here
//! calls into the solver or engine internals.

#![allow(dead_code)]

use fame::features::FeatureMatrix;
use fame::linear::Loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gaussian design with a sparse planted direction and 10% label flips.
pub fn random_problem(n: usize, d: usize, seed: u64) -> (FeatureMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..d)
        .map(|j| if j % 3 == 0 { 1.0 + j as f64 * 0.1 } else { 0.0 })
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let r: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s: f64 = r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + 0.3;
        let mut label = if s >= 0.0 { 1.0 } else { -1.0 };
        if rng.random::<f64>() < 0.1 {
            label = -label;
        }
        rows.push(r);
        y.push(label);
    }
    if !y.contains(&1.0) {
        y[0] = 1.0;
    }
    if !y.contains(&-1.0) {
        y[0] = -1.0;
    }
    (FeatureMatrix::from_rows(&rows, vec![0; n]).unwrap(), y)
}

fn loss_value(loss: Loss, z: f64) -> f64 {
    match loss {
        Loss::Logistic => {
            if z > 0.0 {
                (-z).exp().ln_1p()
            } else {
                -z + z.exp().ln_1p()
            }
        }
        Loss::SquaredHinge => (1.0 - z).max(0.0).powi(2),
    }
}

fn loss_slope(loss: Loss, z: f64) -> f64 {
    match loss {
        Loss::Logistic => -1.0 / (1.0 + z.exp()),
        Loss::SquaredHinge => -2.0 * (1.0 - z).max(0.0),
    }
}

pub fn objective(x: &FeatureMatrix, y: &[f64], w: &[f64], b: f64, lambda: f64, loss: Loss) -> f64 {
    let data: f64 = x
        .rows()
        .zip(y)
        .map(|(r, &yi)| {
            let s: f64 = r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
            loss_value(loss, yi * s)
        })
        .sum();
    data + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Accelerated proximal gradient with a Frobenius-norm Lipschitz bound; the
/// bias is unpenalized.
pub fn fista(x: &FeatureMatrix, y: &[f64], lambda: f64, loss: Loss, iters: usize) -> (Vec<f64>, f64) {
    let d = x.dim();
    let curvature = match loss {
        Loss::Logistic => 0.25,
        Loss::SquaredHinge => 2.0,
    };
    let frob: f64 = x.values().iter().map(|v| v * v).sum::<f64>() + x.n() as f64;
    let step = 1.0 / (curvature * frob);
    let mut theta = vec![0.0; d + 1];
    let mut prev = theta.clone();
    let mut look = theta.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let mut grad = vec![0.0; d + 1];
        for (r, &yi) in x.rows().zip(y) {
            let s: f64 = r.iter().zip(&look).map(|(a, c)| a * c).sum::<f64>() + look[d];
            let g = yi * loss_slope(loss, yi * s);
            for j in 0..d {
                grad[j] += g * r[j];
            }
            grad[d] += g;
        }
        prev.copy_from_slice(&theta);
        for j in 0..d {
            let v = look[j] - step * grad[j];
            theta[j] = v.signum() * (v.abs() - step * lambda).max(0.0);
        }
        theta[d] = look[d] - step * grad[d];
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let m = (t - 1.0) / t_next;
        for j in 0..=d {
            look[j] = theta[j] + m * (theta[j] - prev[j]);
        }
        t = t_next;
    }
    let b = theta.pop().unwrap();
    (theta, b)
}

pub fn support(w: &[f64], eps: f64) -> Vec<usize> {
    (0..w.len()).filter(|&j| w[j].abs() > eps).collect()
}
