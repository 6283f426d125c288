//! Matrix-free Jacobi-preconditioned conjugate gradient.

use crate::error::{Error, Result};
use crate::numerics::det_dot;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Symmetric positive (semi)definite operator known only through its action.
pub trait LinearOperator: Sync {
    fn len(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Diagonal entry used by the Jacobi preconditioner; `0` marks a row that
    /// is not part of the system.
    fn diagonal(&self, i: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgOptions {
    /// Target relative residual `|b - A x| / |b|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stagnation is declared when the best residual has not improved by 1%
    /// over this many iterations.
    pub stagnation_window: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 20_000, stagnation_window: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Relative residual after every iteration.
    pub trace: Vec<f64>,
}

pub fn conjugate_gradient<A: LinearOperator>(op: &A, rhs: &[f64], opts: &CgOptions) -> Result<CgOutcome> {
    let n = op.len();
    assert_eq!(rhs.len(), n);
    let mut x = vec![0.0; n];
    let rhs_norm = det_dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0, trace: vec![] });
    }
    let inv_diag = |i: usize| {
        let d = op.diagonal(i);
        if d > 0.0 {
            1.0 / d
        } else {
            0.0
        }
    };
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.par_iter().enumerate().map(|(i, ri)| ri * inv_diag(i)).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = det_dot(&r, &z);
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_at = 0;

    for it in 1..=opts.max_iterations {
        op.apply(&p, &mut ap);
        let pap = det_dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::CgStagnation { iteration: it, residual: *trace.last().unwrap_or(&1.0), trace });
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(p.par_iter()).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(ri, api)| *ri -= alpha * api);
        let res = det_dot(&r, &r).sqrt() / rhs_norm;
        trace.push(res);
        if res <= opts.tolerance {
            return Ok(CgOutcome { x, iterations: it, relative_residual: res, trace });
        }
        if res < 0.99 * best {
            best = res;
            best_at = it;
        } else if it - best_at >= opts.stagnation_window {
            return Err(Error::CgStagnation { iteration: it, residual: res, trace });
        }
        z.par_iter_mut().zip(r.par_iter()).enumerate().for_each(|(i, (zi, ri))| *zi = ri * inv_diag(i));
        let rz_new = det_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    let residual = *trace.last().unwrap_or(&1.0);
    Err(Error::NonConvergence { iterations: opts.max_iterations, residual, history: trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Laplace1d {
        n: usize,
    }

    impl LinearOperator for Laplace1d {
        fn len(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < self.n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        }
        fn diagonal(&self, _: usize) -> f64 {
            2.0
        }
    }

    #[test]
    fn solves_1d_laplacian() {
        let op = Laplace1d { n: 50 };
        let rhs = vec![1.0; 50];
        let out = conjugate_gradient(&op, &rhs, &CgOptions::default()).unwrap();
        // exact solution of -u'' = 1 with zero ends: u_i = (i+1)(n-i)/2
        for (i, xi) in out.x.iter().enumerate() {
            let exact = (i + 1) as f64 * (50 - i) as f64 / 2.0;
            assert!((xi - exact).abs() < 1e-7 * exact);
        }
        assert!(out.iterations <= 50);
    }

    #[test]
    fn iteration_cap_reports_history() {
        let op = Laplace1d { n: 200 };
        let rhs = vec![1.0; 200];
        let opts = CgOptions { max_iterations: 5, ..Default::default() };
        match conjugate_gradient(&op, &rhs, &opts) {
            Err(Error::NonConvergence { history, .. }) => assert_eq!(history.len(), 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
