//! Small numerical helpers shared by the solvers.

use rayon::prelude::*;
use std::f64::consts::PI;

/// Chunk length for parallel reductions. Fixed so that the summation order,
/// and hence the rounding, does not depend on the thread count.
pub const REDUCTION_CHUNK: usize = 4096;

/// Sum of `f(i)` for `i in 0..n`, computed in parallel with a fixed
/// chunking so the result is bitwise reproducible.
pub fn det_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..n.div_ceil(REDUCTION_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(n);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        })
        .collect();
    partials.iter().sum()
}

pub fn det_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    det_sum(a.len(), |i| a[i] * b[i])
}

/// Area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// `Gamma(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1);
    if k % 2 == 0 {
        (1..k / 2).map(|j| j as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite five-point Gauss-Legendre rule on `[a, b]` with `panels` panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        let mut s = 0.0;
        for (x, wt) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            s += wt * f(mid + 0.5 * w * x);
        }
        total += 0.5 * w * s;
    }
    total
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` couples row `i` to `i-1` (`lower[0]` unused), `upper[i]` couples
/// row `i` to `i+1` (last entry unused). Returns `None` on a zero pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return None;
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!((unit_sphere_area(6) - PI.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_polynomial_exact() {
        let v = gauss_legendre(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1);
        assert!((v - (1024.0 / 10.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn det_sum_is_thread_count_independent() {
        let data: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.37).sin()).collect();
        let a = det_sum(data.len(), |i| data[i]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| det_sum(data.len(), |i| data[i]));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
