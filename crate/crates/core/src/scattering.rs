//! Zero-energy scattering: `b(v)` in dimension `d` and the modified energy
//! `b_M(V)` of a three-body potential.
//!
//! Two discretizations are provided. [`solve_radial`] minimizes the radial
//! functional `int 2|f'|^2 + v f^2` on a uniform mesh with `f(R) = 1`, which
//! reduces to a tridiagonal system. [`solve_grid`] minimizes
//! `int 2|M grad phi|^2 + V |1 - phi|^2` on a Cartesian grid in any dimension
//! with `phi = 0` on the boundary and solves the normal equations by
//! matrix-free conjugate gradient.

use crate::cg::{conjugate_gradient, CgOptions, LinearOperator};
use crate::error::{Error, Result};
use crate::numerics::{det_sum, solve_tridiagonal, unit_sphere_area};
use crate::potentials::{transform_by_metric, MetricM, Potential6D, RadialPotential};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Bytes held per grid node by [`solve_grid`]: potential, four CG vectors, mask.
pub const GRID_BYTES_PER_NODE: u64 = 5 * 8 + 1;

/// Default memory budget for grid solves.
pub const DEFAULT_MEMORY_CAP: u64 = 3 << 30;

/// `c_d = 2 (d - 2) |S^{d-1}|`, so that `b(v_hs) = c_d a^{d-2}`.
pub fn hard_sphere_constant(d: usize) -> f64 {
    2.0 * (d as f64 - 2.0) * unit_sphere_area(d)
}

/// Scattering energy of a hard sphere of radius `a` in `R^d`.
pub fn hard_sphere_b(d: usize, a: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid("dim", "dimension must be at least 3"));
    }
    if !(a >= 0.0) {
        return Err(Error::invalid("a", "hard-sphere radius must be >= 0"));
    }
    Ok(hard_sphere_constant(d) * a.powi(d as i32 - 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Radial,
    Grid,
    ChangeOfVariables,
    Direct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    None,
    /// `f` at mesh radii.
    Radial { r: Vec<f64>, f: Vec<f64> },
    /// `f` on all `points_per_axis^dim` nodes, first axis slowest.
    Grid { dim: usize, points_per_axis: usize, half_width: f64, f: Vec<f64> },
}

impl Profile {
    /// Minimum and maximum of `f`.
    pub fn range(&self) -> Option<(f64, f64)> {
        let f = match self {
            Profile::None => return None,
            Profile::Radial { f, .. } | Profile::Grid { f, .. } => f,
        };
        Some(f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }

    /// `omega = 1 - f`.
    pub fn omega(&self) -> Option<Vec<f64>> {
        match self {
            Profile::None => None,
            Profile::Radial { f, .. } | Profile::Grid { f, .. } => Some(f.iter().map(|v| 1.0 - v).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationModel {
    /// `b_R = b_inf + c R^{-(d-2)}`.
    Additive,
    /// `1 / b_R = 1 / b_inf + c R^{-(d-2)}`, exact for a radial problem with
    /// the potential supported inside `R`.
    Reciprocal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extrapolation {
    pub model: TruncationModel,
    pub b_inf: f64,
    pub coefficient: f64,
    /// Root-mean-square misfit of the samples, in units of `b`.
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringSolution {
    pub dim: usize,
    pub method: SolveMethod,
    /// Value of the discrete functional at its minimizer.
    pub b: f64,
    /// `int v` with the quadrature used by the solver.
    pub potential_integral: f64,
    /// `int v f` with the same quadrature; equals `b` at the discrete minimizer.
    pub vf_integral: f64,
    pub residual: f64,
    pub iterations: usize,
    pub truncation_radius: f64,
    pub profile: Profile,
    pub extrapolation: Option<Extrapolation>,
}

impl ScatteringSolution {
    /// Extrapolated `b` when available, else the raw value.
    pub fn best_b(&self) -> f64 {
        self.extrapolation.as_ref().map_or(self.b, |e| e.b_inf)
    }

    /// `b^{1/(d-2)}`, the scattering length up to a universal factor.
    pub fn nominal_length(&self) -> f64 {
        self.best_b().max(0.0).powf(1.0 / (self.dim as f64 - 2.0))
    }
}

/// Radial two-point problem `2 (f'' + (d-1)/r f') = v f`, `f'(0) = 0`, `f(R) = 1`.
pub fn solve_radial(d: usize, v: &RadialPotential, r_inf: f64, nodes: usize) -> Result<ScatteringSolution> {
    if d < 3 {
        return Err(Error::invalid("dim", "dimension must be at least 3"));
    }
    if nodes < 8 {
        return Err(Error::invalid("nodes", "need at least 8 mesh nodes"));
    }
    let r0 = v.support_radius();
    if !(r_inf > r0) || r_inf < 4.0 * r0 {
        return Err(Error::Precondition(format!(
            "truncation radius {r_inf} must be at least 4x the support radius {r0}"
        )));
    }
    let n = nodes - 1;
    let h = r_inf / n as f64;
    let p = d as i32 - 1;
    let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    if v.is_zero() {
        return Ok(ScatteringSolution {
            truncation_radius: r_inf,
            profile: Profile::Radial { f: vec![1.0; r.len()], r },
            ..zero_solution(d)
        });
    }
    let vv: Vec<f64> = r.iter().map(|&ri| v.nodal_value(ri)).collect();
    // trapezoid weights for int . r^{d-1} dr
    let w: Vec<f64> = (0..=n)
        .map(|i| {
            let base = h * r[i].powi(p);
            if i == n {
                0.5 * base
            } else {
                base
            }
        })
        .collect();
    let flux: Vec<f64> = (0..n).map(|i| 2.0 * ((i as f64 + 0.5) * h).powi(p) / h).collect();

    // unknowns f_0..f_{n-1}
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let left = if i > 0 { flux[i - 1] } else { 0.0 };
        let right = flux[i];
        diag[i] = left + right + w[i] * vv[i];
        if i > 0 {
            lower[i] = -left;
        }
        if i + 1 < n {
            upper[i] = -right;
        } else {
            rhs[i] = right;
        }
    }
    let row_residual = |f: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut s = diag[i] * f[i] - rhs[i];
                if i > 0 {
                    s += lower[i] * f[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * f[i + 1];
                }
                s
            })
            .collect()
    };
    let scaled_max = |res: &[f64]| res.iter().zip(&diag).map(|(r, d)| (r / d).abs()).fold(0.0, f64::max);

    let mut f = solve_tridiagonal(&lower, &diag, &upper, &rhs).ok_or_else(|| Error::NonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
        history: vec![],
    })?;
    let mut history = Vec::new();
    let tol = 1e-12;
    for _ in 0..4 {
        let res = row_residual(&f);
        let m = scaled_max(&res);
        history.push(m);
        if m <= tol {
            break;
        }
        let corr = solve_tridiagonal(&lower, &diag, &upper, &res).unwrap_or_else(|| vec![0.0; n]);
        f.iter_mut().zip(corr).for_each(|(fi, c)| *fi -= c);
    }
    let residual = *history.last().unwrap();
    if !(residual <= 1e-9) {
        return Err(Error::NonConvergence { iterations: history.len(), residual, history });
    }
    f.push(1.0);

    let area = unit_sphere_area(d);
    let kinetic: f64 = (0..n).map(|i| flux[i] * (f[i + 1] - f[i]).powi(2)).sum();
    let pot_term: f64 = (0..=n).map(|i| w[i] * vv[i] * f[i] * f[i]).sum();
    let b = area * (kinetic + pot_term);
    let vf_integral = area * (0..=n).map(|i| w[i] * vv[i] * f[i]).sum::<f64>();
    let potential_integral = area * (0..=n).map(|i| w[i] * vv[i]).sum::<f64>();

    Ok(ScatteringSolution {
        dim: d,
        method: SolveMethod::Radial,
        b,
        potential_integral,
        vf_integral,
        residual,
        iterations: history.len(),
        truncation_radius: r_inf,
        profile: Profile::Radial { r, f },
        extrapolation: None,
    })
}

/// Runs [`solve_radial`] at each truncation radius with a common mesh spacing
/// and extrapolates `R -> infinity` with the reciprocal model. The returned
/// solution carries the profile of the largest radius.
pub fn solve_radial_extrapolated(
    d: usize,
    v: &RadialPotential,
    truncation_radii: &[f64],
    spacing: f64,
) -> Result<ScatteringSolution> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing", "mesh spacing must be positive"));
    }
    let runs = truncation_radii
        .iter()
        .map(|&r| {
            let nodes = (r / spacing).round() as usize + 1;
            solve_radial(d, v, r, nodes)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = runs.iter().map(|s| (s.truncation_radius, s.b)).collect();
    let ex = extrapolate_truncation(&samples, d, TruncationModel::Reciprocal)?;
    let mut sol = runs.into_iter().last().unwrap();
    sol.extrapolation = Some(ex);
    Ok(sol)
}

/// Least-squares removal of the Dirichlet truncation bias.
pub fn extrapolate_truncation(samples: &[(f64, f64)], d: usize, model: TruncationModel) -> Result<Extrapolation> {
    if samples.len() < 3 {
        return Err(Error::Precondition("need at least 3 truncation samples".into()));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) || samples[0].0 <= 0.0 {
        return Err(Error::Precondition("truncation radii must be positive and strictly increasing".into()));
    }
    let expo = -(d as f64 - 2.0);
    let xs: Vec<f64> = samples.iter().map(|(r, _)| r.powf(expo)).collect();
    let bs: Vec<f64> = samples.iter().map(|(_, b)| *b).collect();

    if model == TruncationModel::Reciprocal && bs.iter().all(|&b| b == 0.0) {
        return Ok(Extrapolation { model, b_inf: 0.0, coefficient: 0.0, residual: 0.0, samples: samples.to_vec() });
    }
    if model == TruncationModel::Reciprocal && bs.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::DegenerateFit("reciprocal model needs positive samples".into()));
    }
    let ys: Vec<f64> = match model {
        TruncationModel::Additive => bs.clone(),
        TruncationModel::Reciprocal => bs.iter().map(|b| 1.0 / b).collect(),
    };
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-24 * mx.max(1e-300).powi(2) * n) {
        return Err(Error::DegenerateFit("transformed radii are collinear".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (b_inf, predict): (f64, Box<dyn Fn(f64) -> f64>) = match model {
        TruncationModel::Additive => (intercept, Box::new(move |x| intercept + slope * x)),
        TruncationModel::Reciprocal => (1.0 / intercept, Box::new(move |x| 1.0 / (intercept + slope * x))),
    };
    let residual = (xs.iter().zip(&bs).map(|(x, b)| (b - predict(*x)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Extrapolation { model, b_inf, coefficient: slope, residual, samples: samples.to_vec() })
}

#[derive(Debug, Clone)]
pub enum ScatteringPotential {
    Radial(RadialPotential),
    SixD(Potential6D),
}

impl ScatteringPotential {
    pub fn dim(&self) -> usize {
        match self {
            ScatteringPotential::Radial(v) => v.dim(),
            ScatteringPotential::SixD(_) => 6,
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            ScatteringPotential::Radial(v) => v.support_radius(),
            ScatteringPotential::SixD(v) => v.support_radius(),
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self {
            ScatteringPotential::Radial(v) => v.value(z.iter().map(|c| c * c).sum::<f64>().sqrt()),
            ScatteringPotential::SixD(v) => {
                let mut p = [0.0; 6];
                p.copy_from_slice(z);
                v.value(&p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSampling {
    Nodal,
    /// Mean over `sub^d` midpoint samples of the cell around each node.
    CellAverage { sub: usize },
}

#[derive(Debug, Clone)]
pub struct ScatteringProblem {
    pub potential: ScatteringPotential,
    pub metric: MetricM,
    /// Dirichlet ball `|x| >= R`; `None` truncates on the box faces only.
    pub truncation_radius: Option<f64>,
    pub points_per_axis: usize,
    pub box_half_width: f64,
    pub sampling: PotentialSampling,
    pub cg: CgOptions,
    pub memory_cap: u64,
    pub keep_field: bool,
}

impl ScatteringProblem {
    pub fn new(potential: ScatteringPotential, points_per_axis: usize, box_half_width: f64) -> Self {
        Self {
            potential,
            metric: MetricM::identity(),
            truncation_radius: None,
            points_per_axis,
            box_half_width,
            sampling: PotentialSampling::Nodal,
            cg: CgOptions::default(),
            memory_cap: DEFAULT_MEMORY_CAP,
            keep_field: false,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.box_half_width / (self.points_per_axis as f64 - 1.0)
    }

    pub fn node_count(&self) -> u64 {
        (self.points_per_axis as u64).pow(self.potential.dim() as u32)
    }

    pub fn memory_estimate(&self) -> u64 {
        self.node_count() * GRID_BYTES_PER_NODE
    }
}

struct GridOperator<'a> {
    n: usize,
    dim: usize,
    unknown: &'a [bool],
    potential: &'a [f64],
    /// (node offset, coupling weight / h^2)
    edges: Vec<(usize, f64)>,
    edge_diag: f64,
}

impl LinearOperator for GridOperator<'_> {
    fn len(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let chunk = self.n.pow(self.dim as u32 - 1).max(1024);
        y.par_chunks_mut(chunk).enumerate().for_each(|(c, ys)| {
            let base = c * chunk;
            for (k, yk) in ys.iter_mut().enumerate() {
                let i = base + k;
                if !self.unknown[i] {
                    *yk = 0.0;
                    continue;
                }
                let mut s = (self.edge_diag + self.potential[i]) * x[i];
                for &(off, w) in &self.edges {
                    s -= w * (x[i + off] + x[i - off]);
                }
                *yk = s;
            }
        });
    }

    fn diagonal(&self, i: usize) -> f64 {
        if self.unknown[i] {
            self.edge_diag + self.potential[i]
        } else {
            0.0
        }
    }
}

/// Stencil couplings `(offset, weight)` for the kinetic form `2|M grad phi|^2`.
fn kinetic_edges(dim: usize, n: usize, metric: &MetricM, h: f64) -> Result<Vec<(usize, f64)>> {
    let stride = |axis: usize| n.pow((dim - 1 - axis) as u32);
    let h2 = h * h;
    if metric.is_identity() {
        return Ok((0..dim).map(|a| (stride(a), 2.0 / h2)).collect());
    }
    if dim != 6 {
        return Err(Error::Precondition("a non-identity metric needs a six-dimensional grid".into()));
    }
    let a = metric.stiffness();
    let c = a[0][1];
    if a[0][0] < c.abs() || a[1][1] < c.abs() {
        return Err(Error::Precondition("metric stiffness is not diagonally dominant".into()));
    }
    let mut edges = Vec::new();
    for i in 0..3 {
        let (sx, sy) = (stride(i), stride(i + 3));
        edges.push((sx, (a[0][0] - c.abs()) / h2));
        edges.push((sy, (a[1][1] - c.abs()) / h2));
        // (d_x + d_y)^2 along +(1,1) when c > 0, (d_x - d_y)^2 along (1,-1) otherwise
        if c > 0.0 {
            edges.push((sx + sy, c / h2));
        } else if c < 0.0 {
            edges.push((sx - sy, -c / h2));
        }
    }
    edges.retain(|&(_, w)| w != 0.0);
    Ok(edges)
}

fn node_coords(idx: usize, dim: usize, n: usize, lo: f64, h: f64, out: &mut [f64]) -> bool {
    let mut rem = idx;
    let mut interior = true;
    for a in (0..dim).rev() {
        let j = rem % n;
        rem /= n;
        out[a] = lo + j as f64 * h;
        if j == 0 || j == n - 1 {
            interior = false;
        }
    }
    interior
}

/// Direct minimization of the discretized scattering functional on a grid.
pub fn solve_grid(problem: &ScatteringProblem) -> Result<ScatteringSolution> {
    let dim = problem.potential.dim();
    let n = problem.points_per_axis;
    if n < 8 {
        return Err(Error::invalid("points_per_axis", "need at least 8 points per axis"));
    }
    let half = problem.box_half_width;
    let r0 = problem.potential.support_radius();
    if !(half > r0) {
        return Err(Error::Precondition(format!(
            "support radius {r0} must lie strictly inside the box of half-width {half}"
        )));
    }
    let h = problem.spacing();
    if r0 > 0.0 && h > 0.5 * r0 {
        return Err(Error::Precondition(format!("grid spacing {h} exceeds half the support radius {r0}")));
    }
    if let Some(rt) = problem.truncation_radius {
        if !(rt > r0) {
            return Err(Error::Precondition(format!("truncation radius {rt} must exceed the support radius {r0}")));
        }
    }
    let required = problem.memory_estimate();
    if required > problem.memory_cap {
        return Err(Error::MemoryCap { required, cap: problem.memory_cap });
    }
    let edges = kinetic_edges(dim, n, &problem.metric, h)?;
    let total = n.pow(dim as u32);
    let lo = -half;
    let trunc2 = problem.truncation_radius.map(|r| r * r);

    let chunk = 4096;
    let mut unknown = vec![false; total];
    let mut potential = vec![0.0; total];
    potential
        .par_chunks_mut(chunk)
        .zip(unknown.par_chunks_mut(chunk))
        .enumerate()
        .for_each(|(c, (pv, uk))| {
            let mut x = vec![0.0; dim];
            let mut y = vec![0.0; dim];
            for k in 0..pv.len() {
                let idx = c * chunk + k;
                let interior = node_coords(idx, dim, n, lo, h, &mut x);
                let r2: f64 = x.iter().map(|c| c * c).sum();
                uk[k] = interior && trunc2.map_or(true, |t| r2 < t);
                pv[k] = match problem.sampling {
                    PotentialSampling::Nodal => problem.potential.value(&x),
                    PotentialSampling::CellAverage { sub } => {
                        let sub = sub.max(1);
                        let count = sub.pow(dim as u32);
                        let mut acc = 0.0;
                        for s in 0..count {
                            let mut rem = s;
                            for a in 0..dim {
                                let j = rem % sub;
                                rem /= sub;
                                y[a] = x[a] + h * ((j as f64 + 0.5) / sub as f64 - 0.5);
                            }
                            acc += problem.potential.value(&y);
                        }
                        acc / count as f64
                    }
                };
            }
        });
    let edge_diag: f64 = edges.iter().map(|(_, w)| 2.0 * w).sum();
    let op = GridOperator { n, dim, unknown: &unknown, potential: &potential, edges, edge_diag };
    let rhs: Vec<f64> = potential.par_iter().zip(unknown.par_iter()).map(|(v, &u)| if u { *v } else { 0.0 }).collect();
    let out = conjugate_gradient(&op, &rhs, &problem.cg)?;
    drop(rhs);
    let phi = out.x;

    let vol = h.powi(dim as i32);
    let kinetic = det_sum(total, |i| {
        if !unknown[i] {
            return 0.0;
        }
        let mut s = 0.0;
        for &(off, w) in &op.edges {
            s += w * (phi[i + off] - phi[i]).powi(2);
            if !unknown[i - off] {
                s += w * phi[i] * phi[i];
            }
        }
        s
    });
    let pot_term = det_sum(total, |i| potential[i] * (1.0 - phi[i]).powi(2));
    let b = vol * (kinetic + pot_term);
    let vf_integral = vol * det_sum(total, |i| potential[i] * (1.0 - phi[i]));
    let potential_integral = vol * det_sum(total, |i| potential[i]);

    let profile = if problem.keep_field {
        Profile::Grid { dim, points_per_axis: n, half_width: half, f: phi.iter().map(|p| 1.0 - p).collect() }
    } else {
        Profile::None
    };
    Ok(ScatteringSolution {
        dim,
        method: SolveMethod::Grid,
        b,
        potential_integral,
        vf_integral,
        residual: out.relative_residual,
        iterations: out.iterations,
        truncation_radius: problem.truncation_radius.unwrap_or(half),
        profile,
        extrapolation: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifiedMethod {
    /// `b(V(M .)) det M`.
    ChangeOfVariables,
    /// Anisotropic stencil for `|M grad|^2` on the original potential.
    Direct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModifiedOptions {
    pub points_per_axis: usize,
    /// Box half-width as a multiple of the potential's support radius.
    pub box_factor: f64,
    /// Truncation radii, as multiples of the support radius, for the radial path.
    pub radial_factors: Vec<f64>,
    /// Radial mesh spacing as a fraction of the support radius.
    pub radial_spacing: f64,
    pub cg: CgOptions,
    pub memory_cap: u64,
}

impl Default for ModifiedOptions {
    fn default() -> Self {
        Self {
            points_per_axis: 16,
            box_factor: 1.05,
            radial_factors: vec![4.0, 8.0, 16.0],
            radial_spacing: 1e-3,
            cg: CgOptions::default(),
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

/// Modified scattering energy `b_M(V)` for the metric `metric`.
pub fn b_modified(
    v: &Potential6D,
    metric: &MetricM,
    method: ModifiedMethod,
    opts: &ModifiedOptions,
) -> Result<ScatteringSolution> {
    match method {
        ModifiedMethod::Direct => {
            let r0 = v.support_radius();
            let mut p = ScatteringProblem::new(
                ScatteringPotential::SixD(v.clone()),
                opts.points_per_axis,
                opts.box_factor * r0.max(f64::MIN_POSITIVE),
            );
            p.metric = *metric;
            p.cg = opts.cg;
            p.memory_cap = opts.memory_cap;
            let mut sol = solve_grid(&p)?;
            sol.method = SolveMethod::Direct;
            Ok(sol)
        }
        ModifiedMethod::ChangeOfVariables => {
            let t = transform_by_metric(v, metric);
            let det = metric.determinant();
            let r0 = t.support_radius();
            let mut sol = if let Some(w) = t.isotropic_profile() {
                let r0 = w.support_radius();
                if w.is_zero() || r0 == 0.0 {
                    zero_solution(6)
                } else {
                    let radii: Vec<f64> = opts.radial_factors.iter().map(|f| f * r0).collect();
                    solve_radial_extrapolated(6, &w, &radii, opts.radial_spacing * r0)?
                }
            } else {
                let mut p = ScatteringProblem::new(
                    ScatteringPotential::SixD(t),
                    opts.points_per_axis,
                    opts.box_factor * r0.max(f64::MIN_POSITIVE),
                );
                p.cg = opts.cg;
                p.memory_cap = opts.memory_cap;
                solve_grid(&p)?
            };
            sol.b *= det;
            sol.vf_integral *= det;
            sol.potential_integral *= det;
            if let Some(ex) = sol.extrapolation.as_mut() {
                ex.b_inf *= det;
                ex.samples.iter_mut().for_each(|s| s.1 *= det);
                ex.residual *= det;
                ex.coefficient /= det;
            }
            sol.method = SolveMethod::ChangeOfVariables;
            Ok(sol)
        }
    }
}

fn zero_solution(dim: usize) -> ScatteringSolution {
    ScatteringSolution {
        dim,
        method: SolveMethod::Radial,
        b: 0.0,
        potential_integral: 0.0,
        vf_integral: 0.0,
        residual: 0.0,
        iterations: 0,
        truncation_radius: 0.0,
        profile: Profile::None,
        extrapolation: None,
    }
}
