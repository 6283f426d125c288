//! Separable orthonormal transforms that diagonalize the Laplacian on cubic
//! grids: a real Fourier basis on periodic grids and a sine basis on
//! Dirichlet grids.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// How `-d^2/dx^2` acts on a basis mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticScheme {
    /// Exact symbol `k^2` of the continuum operator.
    #[default]
    Spectral,
    /// Symbol of the three-point stencil, `(2 - 2 cos(k h)) / h^2`.
    SecondOrder,
}

/// One-dimensional node layout.
///
/// Periodic grids of side `L` use nodes `-L/2 + j L/n`; Dirichlet grids use the
/// `n` interior nodes `-L/2 + (j + 1) L/(n + 1)` of `[-L/2, L/2]`.
pub fn axis_nodes(boundary: Boundary, n: usize, side: f64) -> (Vec<f64>, f64) {
    match boundary {
        Boundary::Periodic => {
            let h = side / n as f64;
            ((0..n).map(|j| -0.5 * side + j as f64 * h).collect(), h)
        }
        Boundary::Dirichlet => {
            let h = side / (n + 1) as f64;
            ((0..n).map(|j| -0.5 * side + (j + 1) as f64 * h).collect(), h)
        }
    }
}

/// Orthonormal basis of `R^n` (row-major, `q[j * n + k]` is mode `k` at node
/// `j`) together with the eigenvalue of `-d^2/dx^2` on each mode.
fn basis_1d(boundary: Boundary, n: usize, side: f64, scheme: KineticScheme) -> (Vec<f64>, Vec<f64>) {
    let mut q = vec![0.0; n * n];
    let mut lambda = vec![0.0; n];
    let (_, h) = axis_nodes(boundary, n, side);
    let symbol = |k: f64| match scheme {
        KineticScheme::Spectral => k * k,
        KineticScheme::SecondOrder => (2.0 - 2.0 * (k * h).cos()) / (h * h),
    };
    match boundary {
        Boundary::Periodic => {
            let nf = n as f64;
            let mut col = 0;
            let mut push = |col: &mut usize, f: &dyn Fn(usize) -> f64, lam: f64| {
                for j in 0..n {
                    q[j * n + *col] = f(j);
                }
                lambda[*col] = lam;
                *col += 1;
            };
            push(&mut col, &|_| 1.0 / nf.sqrt(), 0.0);
            let s = (2.0 / nf).sqrt();
            for m in 1..n.div_ceil(2) {
                let k = 2.0 * PI * m as f64 / side;
                let th = 2.0 * PI * m as f64 / nf;
                push(&mut col, &|j| s * (th * j as f64).cos(), symbol(k));
                push(&mut col, &|j| s * (th * j as f64).sin(), symbol(k));
            }
            if n % 2 == 0 {
                let k = PI * nf / side;
                push(&mut col, &|j| if j % 2 == 0 { 1.0 } else { -1.0 } / nf.sqrt(), symbol(k));
            }
            debug_assert_eq!(col, n);
        }
        Boundary::Dirichlet => {
            let s = (2.0 / (n + 1) as f64).sqrt();
            for k in 0..n {
                for j in 0..n {
                    q[j * n + k] = s * (PI * ((j + 1) * (k + 1)) as f64 / (n + 1) as f64).sin();
                }
                lambda[k] = symbol(PI * (k + 1) as f64 / side);
            }
        }
    }
    (q, lambda)
}

/// Tensor-product basis on an `n^3` grid.
#[derive(Debug, Clone)]
pub struct CubeBasis {
    n: usize,
    q: Vec<f64>,
    lambda: Vec<f64>,
}

impl CubeBasis {
    pub fn new(boundary: Boundary, n: usize, side: f64, scheme: KineticScheme) -> Self {
        let (q, l1) = basis_1d(boundary, n, side, scheme);
        let mut lambda = Vec::with_capacity(n * n * n);
        for a in &l1 {
            for b in &l1 {
                for c in &l1 {
                    lambda.push(a + b + c);
                }
            }
        }
        Self { n, q, lambda }
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Eigenvalue of `-Laplacian` on each tensor mode, in coefficient order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// Coefficients `(Q x Q x Q)^T u`.
    pub fn forward(&self, u: &[f64]) -> Vec<f64> {
        self.transform(u, false)
    }

    /// Nodal values `(Q x Q x Q) c`.
    pub fn backward(&self, c: &[f64]) -> Vec<f64> {
        self.transform(c, true)
    }

    /// `-Laplacian u`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut c = self.forward(u);
        c.iter_mut().zip(&self.lambda).for_each(|(ci, l)| *ci *= l);
        self.backward(&c)
    }

    fn transform(&self, src: &[f64], back: bool) -> Vec<f64> {
        let n = self.n;
        assert_eq!(src.len(), n * n * n);
        // contraction matrix A[in][out]
        let (rs, cs) = if back { (1isize, n as isize) } else { (n as isize, 1isize) };
        let a = self.q.as_ptr();
        let nn = n * n;
        let mut t1 = vec![0.0; n * nn];
        let mut t2 = vec![0.0; n * nn];
        // SAFETY: all pointers address buffers of n^3 (or n^2) elements and the
        // strides below stay inside them.
        unsafe {
            // last axis: (n^2 x n) * A
            matrixmultiply::dgemm(
                nn, n, n, 1.0, src.as_ptr(), n as isize, 1, a, rs, cs, 0.0, t1.as_mut_ptr(), n as isize, 1,
            );
            // middle axis: per slab, A^T * (n x n)
            for i in 0..n {
                let off = i * nn;
                matrixmultiply::dgemm(
                    n, n, n, 1.0, a, cs, rs, t1.as_ptr().add(off), n as isize, 1, 0.0,
                    t2.as_mut_ptr().add(off), n as isize, 1,
                );
            }
            // first axis: A^T * (n x n^2)
            matrixmultiply::dgemm(
                n, n, nn, 1.0, a, cs, rs, t2.as_ptr(), nn as isize, 1, 0.0, t1.as_mut_ptr(), nn as isize, 1,
            );
        }
        t1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_orthonormal(b: Boundary, n: usize) {
        let (q, _) = basis_1d(b, n, 1.0, KineticScheme::Spectral);
        for a in 0..n {
            for c in 0..n {
                let dot: f64 = (0..n).map(|j| q[j * n + a] * q[j * n + c]).sum();
                let want = if a == c { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-13, "{b:?} n={n} ({a},{c}) {dot}");
            }
        }
    }

    #[test]
    fn bases_are_orthonormal() {
        for n in [5, 8, 9] {
            check_orthonormal(Boundary::Periodic, n);
            check_orthonormal(Boundary::Dirichlet, n);
        }
    }

    #[test]
    fn round_trip() {
        for b in [Boundary::Periodic, Boundary::Dirichlet] {
            let basis = CubeBasis::new(b, 6, 2.0, KineticScheme::Spectral);
            let u: Vec<f64> = (0..216).map(|i| ((i * 7 % 13) as f64 * 0.3).sin()).collect();
            let back = basis.backward(&basis.forward(&u));
            for (x, y) in u.iter().zip(&back) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cosine_mode_is_eigenfunction() {
        let n = 8;
        let basis = CubeBasis::new(Boundary::Periodic, n, 1.0, KineticScheme::Spectral);
        let (x, _) = axis_nodes(Boundary::Periodic, n, 1.0);
        let mut u = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    u[(i * n + j) * n + k] = (2.0 * PI * x[j]).cos();
                }
            }
        }
        let lu = basis.laplacian(&u);
        for (a, b) in lu.iter().zip(&u) {
            assert!((a - 4.0 * PI * PI * b).abs() < 1e-10);
        }
    }

    #[test]
    fn stencil_symbol_matches_three_point_difference() {
        let n = 7;
        let side = 1.6;
        let basis = CubeBasis::new(Boundary::Dirichlet, n, side, KineticScheme::SecondOrder);
        let h = side / (n + 1) as f64;
        let u: Vec<f64> = (0..n * n * n).map(|i| ((i * 5 % 11) as f64).cos()).collect();
        let lu = basis.laplacian(&u);
        let at = |i: isize, j: isize, k: isize| {
            if [i, j, k].iter().any(|&c| c < 0 || c >= n as isize) {
                0.0
            } else {
                u[((i as usize) * n + j as usize) * n + k as usize]
            }
        };
        for i in 0..n as isize {
            for j in 0..n as isize {
                for k in 0..n as isize {
                    let fd = (6.0 * at(i, j, k)
                        - at(i - 1, j, k)
                        - at(i + 1, j, k)
                        - at(i, j - 1, k)
                        - at(i, j + 1, k)
                        - at(i, j, k - 1)
                        - at(i, j, k + 1))
                        / (h * h);
                    let got = lu[((i as usize) * n + j as usize) * n + k as usize];
                    assert!((fd - got).abs() < 1e-10 * fd.abs().max(1.0));
                }
            }
        }
    }
}
