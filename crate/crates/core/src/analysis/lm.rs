//! Levenberg-Marquardt least squares with column scaling.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub trait Model {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    /// d value / d p. Defaults to central differences.
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        numeric_gradient(self, x, p, out);
    }
}

/// Central differences with step 1e-6 * max(|p_i|, 1e-3).
pub fn numeric_gradient<M: Model + ?Sized>(m: &M, x: f64, p: &[f64], out: &mut [f64]) {
    let mut q = p.to_vec();
    for i in 0..p.len() {
        let h = 1e-6 * p[i].abs().max(1e-3);
        q[i] = p[i] + h;
        let up = m.value(x, &q);
        q[i] = p[i] - h;
        let down = m.value(x, &q);
        q[i] = p[i];
        out[i] = (up - down) / (2.0 * h);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-10,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LmFit {
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub dof: usize,
    pub residual_std: f64,
    pub iterations: usize,
}

impl LmFit {
    pub fn chi2_dof(&self) -> f64 {
        self.cost / self.dof.max(1) as f64
    }
}

fn cost_of<M: Model + ?Sized>(m: &M, xs: &[f64], ys: &[f64], p: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (y - m.value(x, p)).powi(2)).sum()
}

fn jacobian<M: Model + ?Sized>(m: &M, xs: &[f64], p: &[f64]) -> DMatrix<f64> {
    let np = p.len();
    let mut j = DMatrix::zeros(xs.len(), np);
    let mut g = vec![0.0; np];
    for (r, &x) in xs.iter().enumerate() {
        m.gradient(x, p, &mut g);
        for c in 0..np {
            j[(r, c)] = g[c];
        }
    }
    j
}

pub fn levenberg_marquardt<M: Model + ?Sized>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    p0: &[f64],
    opts: &LmOptions,
) -> Result<LmFit> {
    let np = model.n_params();
    if p0.len() != np {
        return Err(Error::FitFailed(format!("expected {np} initial parameters, got {}", p0.len())));
    }
    if xs.len() != ys.len() {
        return Err(Error::FitFailed("x and y lengths differ".into()));
    }
    if xs.len() <= np {
        return Err(Error::FitFailed(format!("{} points cannot constrain {np} parameters", xs.len())));
    }
    if xs.iter().chain(ys).chain(p0).any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite input".into()));
    }
    let mut p = p0.to_vec();
    let mut cost = cost_of(model, xs, ys, &p);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let j = jacobian(model, xs, &p);
        let r = DVector::from_iterator(xs.len(), xs.iter().zip(ys).map(|(&x, &y)| y - model.value(x, &p)));
        let a = j.transpose() * &j;
        let g = j.transpose() * r;
        let mut step_taken = false;
        while lambda < 1e16 {
            let mut lhs = a.clone();
            for i in 0..np {
                lhs[(i, i)] += lambda * a[(i, i)].max(1e-300);
            }
            let delta = match lhs.cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let new_cost = cost_of(model, xs, ys, &trial);
            if new_cost.is_finite() && new_cost < cost {
                let rel = (cost - new_cost) / cost;
                p = trial;
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                step_taken = true;
                if rel < opts.ftol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        // no downhill step at any damping: already at the minimum to precision
        if !step_taken || converged || cost == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitFailed(format!(
            "no convergence after {iterations} iterations, residual sum of squares {cost:.6e}"
        )));
    }
    let dof = xs.len() - np;
    let j = jacobian(model, xs, &p);
    let a = j.transpose() * &j;
    let d: Vec<f64> = (0..np).map(|i| a[(i, i)].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::FitFailed("a parameter has no influence on the model".into()));
    }
    let scaled = DMatrix::from_fn(np, np, |i, k| a[(i, k)] / (d[i] * d[k]));
    let inv = scaled
        .try_inverse()
        .ok_or_else(|| Error::FitFailed("singular normal matrix".into()))?;
    let s2 = cost / dof as f64;
    let covariance: Vec<Vec<f64>> = (0..np)
        .map(|i| (0..np).map(|k| s2 * inv[(i, k)] / (d[i] * d[k])).collect())
        .collect();
    let std_errors: Vec<f64> = (0..np).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    if std_errors.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite parameter covariance".into()));
    }
    Ok(LmFit {
        params: p,
        std_errors,
        covariance,
        cost,
        dof,
        residual_std: s2.sqrt(),
        iterations,
    })
}
