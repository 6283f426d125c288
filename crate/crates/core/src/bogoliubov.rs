//! Second variation of the Gross-Pitaevskii functional at a minimizer `u0`
//! and the excitation operator `E = (D^{1/2} D_plus D^{1/2})^{1/2}` on the
//! orthogonal complement of `u0`.

use crate::error::{Error, Result};
use crate::gp::{Discrete, GPProblem, GPSolution};
use crate::numerics::det_sum;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest projected dimension handled by the dense path (a `16^3` grid).
pub const DENSE_LIMIT: usize = 4096;

/// What is added to `D` to form `D_plus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlusConvention {
    /// `D + b2 u0^4 + 2 b1 u0^2`: the excitation operator as printed for the
    /// quintic term, with the textbook quartic term.
    #[default]
    Printed,
    /// `D + 2 b2 u0^4 + 2 b1 u0^2`: twice the off-diagonal block of the
    /// second variation of the functional.
    SecondVariation,
}

pub struct HessianOperators {
    disc: Discrete,
    u0: Vec<f64>,
    /// `u0` scaled to unit Euclidean norm.
    unit: Vec<f64>,
    mu: f64,
    /// Multiplicative part of `D`: `V_ext + b1 u0^2 + (b2/2) u0^4 - mu`.
    d_local: Vec<f64>,
    /// `D_plus - D`.
    plus_local: Vec<f64>,
    /// `S - D` for the true second variation `S`.
    second_local: Vec<f64>,
    convention: PlusConvention,
    homogeneous: bool,
}

/// Builds `D` and `D_plus` at a converged minimizer.
pub fn build_hessian(sol: &GPSolution, problem: &GPProblem) -> Result<HessianOperators> {
    build_hessian_with(sol, problem, PlusConvention::Printed)
}

pub fn build_hessian_with(
    sol: &GPSolution,
    problem: &GPProblem,
    convention: PlusConvention,
) -> Result<HessianOperators> {
    if !sol.converged {
        return Err(Error::NotConverged { residual: sol.residual, tolerance: sol.tolerance });
    }
    if sol.grid != problem.grid {
        return Err(Error::Precondition("solution and problem use different grids".into()));
    }
    let disc = Discrete::new(problem)?;
    let u0 = sol.field.clone();
    let mu = crate::gp::chemical_potential(sol, problem)?;
    let local = disc.local_potential(&u0);
    let d_local: Vec<f64> = local.iter().map(|v| v - mu).collect();
    let (b1, b2) = (problem.b1, problem.b2);
    let quartic = |u: f64| 2.0 * b1 * u * u;
    let plus_local: Vec<f64> = u0
        .iter()
        .map(|&u| match convention {
            PlusConvention::Printed => b2 * u.powi(4) + quartic(u),
            PlusConvention::SecondVariation => 2.0 * b2 * u.powi(4) + quartic(u),
        })
        .collect();
    let second_local: Vec<f64> = u0.iter().map(|&u| 2.0 * b2 * u.powi(4) + quartic(u)).collect();
    let nrm = det_sum(u0.len(), |i| u0[i] * u0[i]).sqrt();
    let unit: Vec<f64> = u0.iter().map(|u| u / nrm).collect();
    let max = u0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = u0.iter().cloned().fold(f64::INFINITY, f64::min);
    let homogeneous = problem.is_homogeneous() && (max - min) <= 1e-8 * max.abs();
    Ok(HessianOperators { disc, u0, unit, mu, d_local, plus_local, second_local, convention, homogeneous })
}

impl HessianOperators {
    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    /// Dimension of `{u0}^perp`.
    pub fn projector_rank(&self) -> usize {
        self.len() - 1
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn convention(&self) -> PlusConvention {
        self.convention
    }

    /// Constant field on a trap-free torus.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Orthogonal projection onto `{u0}^perp`.
    pub fn project(&self, x: &mut [f64]) {
        let c = det_sum(x.len(), |i| self.unit[i] * x[i]);
        x.iter_mut().zip(&self.unit).for_each(|(xi, ui)| *xi -= c * ui);
    }

    fn apply_with(&self, extra: Option<&[f64]>, x: &[f64]) -> Vec<f64> {
        let mut p = x.to_vec();
        self.project(&mut p);
        let mut y = self.disc.basis.laplacian(&p);
        for i in 0..y.len() {
            let mut m = self.d_local[i];
            if let Some(e) = extra {
                m += e[i];
            }
            y[i] += m * p[i];
        }
        self.project(&mut y);
        y
    }

    /// `P D P x`.
    pub fn apply_d(&self, x: &[f64]) -> Vec<f64> {
        self.apply_with(None, x)
    }

    /// `P D_plus P x`.
    pub fn apply_d_plus(&self, x: &[f64]) -> Vec<f64> {
        self.apply_with(Some(&self.plus_local), x)
    }

    /// `P S P x` with `S` the real second variation, so that
    /// `E((u0 + eps phi)/|u0 + eps phi|) = E(u0) + eps^2 <phi, S phi> + O(eps^3)`.
    pub fn apply_second_variation(&self, x: &[f64]) -> Vec<f64> {
        self.apply_with(Some(&self.second_local), x)
    }

    /// Scale used for the definiteness tolerance.
    pub fn scale(&self) -> f64 {
        let m = self.plus_local.iter().chain(&self.d_local).fold(0.0f64, |a, b| a.max(b.abs()));
        1.0 + self.mu.abs() + m
    }

    /// Largest relative defect `|<a, O b> - <O a, b>|` of `D` and `D_plus` over
    /// seeded random pairs.
    pub fn symmetry_defect(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let a: Vec<f64> = (0..self.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..self.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for op in [Self::apply_d, Self::apply_d_plus] {
                let (oa, ob) = (op(self, &a), op(self, &b));
                let l = dot(&a, &ob);
                let r = dot(&oa, &b);
                let scale = norm(&a) * norm(&ob).max(norm(&oa) * norm(&b) / norm(&a).max(1e-300)).max(1e-300);
                worst = worst.max((l - r).abs() / scale);
            }
        }
        worst
    }

    fn dense(&self, extra: Option<&[f64]>) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.disc.basis.laplacian(&e);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            m[(j, j)] += self.d_local[j] + extra.map_or(0.0, |x| x[j]);
        }
        symmetrize(&mut m);
        m
    }

    /// Householder reflector `H` with `H unit = -+e_0`; columns `1..` of `H`
    /// span `{u0}^perp`.
    fn reflector(&self) -> Vec<f64> {
        let mut v = self.unit.clone();
        let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += s;
        v
    }

    /// `(H A H)[1.., 1..]`.
    fn restrict(&self, a: &DMatrix<f64>, v: &[f64]) -> DMatrix<f64> {
        let n = a.nrows();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let vm = nalgebra::DVector::from_column_slice(v);
        let av = a * &vm;
        let vav = vm.dot(&av);
        let mut out = DMatrix::zeros(n - 1, n - 1);
        for j in 1..n {
            for i in 1..n {
                out[(i - 1, j - 1)] = a[(i, j)] - 2.0 * (v[i] * av[j] + av[i] * v[j]) / vv
                    + 4.0 * vav * v[i] * v[j] / (vv * vv);
            }
        }
        symmetrize(&mut out);
        out
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    det_sum(a.len(), |i| a[i] * b[i])
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    #[default]
    Dense,
    /// Block Lanczos on `D_plus D`, self-adjoint in the `D` inner product.
    Iterative,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterativeOptions {
    pub block: usize,
    pub max_dimension: usize,
    /// Ritz residual required of each returned eigenvalue, relative to the
    /// largest Ritz value.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self { block: 8, max_dimension: 1024, tolerance: 1e-10, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BogoliubovSpectrum {
    /// The `k` smallest eigenvalues of `E`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of the level each eigenvalue belongs to.
    pub multiplicities: Vec<usize>,
    pub levels: Vec<Level>,
    /// `|p|^2` of each eigenvalue when the minimizer is homogeneous.
    pub momenta_squared: Option<Vec<f64>>,
    pub method: SpectrumMethod,
    pub convention: PlusConvention,
    pub projector_rank: usize,
    /// Smallest eigenvalue of `D` seen by the solver.
    pub smallest_d: f64,
}

/// Relative gap below which eigenvalues count as one level.
const LEVEL_TOLERANCE: f64 = 1e-7;

fn group(values: &[f64]) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    for &v in values {
        match levels.last_mut() {
            Some(l) if (v - l.energy).abs() <= LEVEL_TOLERANCE * l.energy.abs().max(1e-12) => l.multiplicity += 1,
            _ => levels.push(Level { energy: v, multiplicity: 1 }),
        }
    }
    levels
}

/// The `k` smallest eigenvalues of the excitation operator.
pub fn excitation_spectrum(hess: &HessianOperators, k: usize, method: SpectrumMethod) -> Result<BogoliubovSpectrum> {
    excitation_spectrum_with(hess, k, method, &IterativeOptions::default())
}

pub fn excitation_spectrum_with(
    hess: &HessianOperators,
    k: usize,
    method: SpectrumMethod,
    opts: &IterativeOptions,
) -> Result<BogoliubovSpectrum> {
    let rank = hess.projector_rank();
    if k == 0 || k >= rank {
        return Err(Error::invalid("k", format!("need 1 <= k < {rank}")));
    }
    let threshold = 1e-8 * hess.scale();
    let (all, smallest_d, exhaustive) = match method {
        SpectrumMethod::Dense => {
            if rank > DENSE_LIMIT {
                return Err(Error::Precondition(format!(
                    "dense path is limited to {DENSE_LIMIT} projected dimensions, got {rank}"
                )));
            }
            let (vals, sd) = dense_spectrum(hess, threshold)?;
            (vals, sd, true)
        }
        SpectrumMethod::Iterative => {
            let (vals, sd) = iterative_spectrum(hess, k, threshold, opts)?;
            (vals, sd, false)
        }
    };
    let levels = group(&all);
    let mut eigenvalues = all[..k.min(all.len())].to_vec();
    eigenvalues.truncate(k);
    let mut multiplicities = Vec::with_capacity(eigenvalues.len());
    for l in &levels {
        for _ in 0..l.multiplicity {
            if multiplicities.len() < eigenvalues.len() {
                multiplicities.push(l.multiplicity);
            }
        }
    }
    let kept: usize = eigenvalues.len();
    let mut levels_out = Vec::new();
    let mut seen = 0;
    for l in levels {
        if seen >= kept {
            break;
        }
        seen += l.multiplicity;
        levels_out.push(l);
    }
    // a level cut by the iterative window may be incomplete
    if !exhaustive && seen > all.len() {
        levels_out.pop();
    }
    let momenta_squared = hess.is_homogeneous().then(|| {
        let c = hess.plus_local[0];
        eigenvalues.iter().map(|e| 0.5 * (-c + (c * c + 4.0 * e * e).sqrt())).collect()
    });
    Ok(BogoliubovSpectrum {
        eigenvalues,
        multiplicities,
        levels: levels_out,
        momenta_squared,
        method,
        convention: hess.convention,
        projector_rank: rank,
        smallest_d,
    })
}

fn dense_spectrum(hess: &HessianOperators, threshold: f64) -> Result<(Vec<f64>, f64)> {
    let v = hess.reflector();
    let d = hess.restrict(&hess.dense(None), &v);
    let dp = hess.restrict(&hess.dense(Some(&hess.plus_local)), &v);
    let eig = SymmetricEigen::new(d);
    let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < -threshold {
        return Err(Error::Indefinite { smallest, threshold });
    }
    let q = &eig.eigenvectors;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let mut m = q.transpose() * dp * q;
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] *= roots[i] * roots[j];
        }
    }
    symmetrize(&mut m);
    let mut vals: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|t| t.max(0.0).sqrt()).collect();
    vals.sort_by(f64::total_cmp);
    Ok((vals, smallest))
}

/// Ritz values of a self-adjoint operator `A` in the inner product `<x, B y>`
/// from a block Krylov space with full reorthogonalization.
struct Lanczos<'a> {
    a: &'a dyn Fn(&[f64]) -> Vec<f64>,
    b: Option<&'a dyn Fn(&[f64]) -> Vec<f64>>,
    project: &'a dyn Fn(&mut [f64]),
    n: usize,
    rank: usize,
}

struct RitzOutcome {
    values: Vec<f64>,
    /// Smallest `<x, B x> / <x, x>` met while building the basis.
    smallest_b: f64,
}

impl Lanczos<'_> {
    fn run(&self, k: usize, opts: &IterativeOptions) -> Result<RitzOutcome> {
        let max_dim = opts.max_dimension.min(self.rank);
        // a level is only resolved up to the block size
        let block = opts.block.max(k);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut y: Vec<Vec<f64>> = Vec::new();
        let mut by: Vec<Vec<f64>> = Vec::new();
        let mut ay: Vec<Vec<f64>> = Vec::new();
        let mut smallest_b = f64::INFINITY;
        let mut pending: Vec<Vec<f64>> = (0..block)
            .map(|_| (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut blocks = 0;
        let mut last: Option<(Vec<f64>, f64)> = None;
        loop {
            let start = y.len();
            for mut x in pending.drain(..) {
                if y.len() >= max_dim {
                    break;
                }
                (self.project)(&mut x);
                let size0 = norm(&x);
                if size0 == 0.0 {
                    continue;
                }
                for _ in 0..2 {
                    for (yj, byj) in y.iter().zip(&by) {
                        let c = dot(byj, &x);
                        x.iter_mut().zip(yj).for_each(|(xi, yi)| *xi -= c * yi);
                    }
                    (self.project)(&mut x);
                }
                let xx = dot(&x, &x);
                if xx.sqrt() <= 1e-8 * size0 {
                    continue;
                }
                let bx = match self.b {
                    Some(b) => b(&x),
                    None => x.clone(),
                };
                let xbx = dot(&x, &bx);
                smallest_b = smallest_b.min(xbx / xx);
                if !(xbx > 0.0) {
                    continue;
                }
                let s = xbx.sqrt();
                let x: Vec<f64> = x.iter().map(|v| v / s).collect();
                let bx: Vec<f64> = bx.iter().map(|v| v / s).collect();
                let ax = (self.a)(&x);
                y.push(x);
                by.push(bx);
                ay.push(ax);
            }
            blocks += 1;
            let grown = y.len() > start;
            let full = y.len() >= max_dim || !grown;
            if y.len() >= k && (full || blocks % 4 == 0) {
                let (vals, res) = self.ritz(&y, &by, &ay, k);
                let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                let ok = res.iter().all(|r| *r <= opts.tolerance * scale);
                let worst = res.iter().cloned().fold(0.0, f64::max);
                if ok {
                    return Ok(RitzOutcome { values: vals, smallest_b });
                }
                last = Some((vals, worst));
            }
            if full {
                let residual = last.map_or(f64::INFINITY, |l| l.1);
                return Err(Error::NotConverged { residual, tolerance: opts.tolerance });
            }
            pending = ay[start..].to_vec();
        }
    }

    /// All Ritz values (ascending) and the residuals of the `k` smallest.
    fn ritz(&self, y: &[Vec<f64>], by: &[Vec<f64>], ay: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
        let m = y.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(&by[i], &ay[j]);
                t[(i, j)] = v;
                t[(j, i)] = v;
            }
        }
        symmetrize(&mut t);
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut res = Vec::with_capacity(k);
        for &col in order.iter().take(k) {
            let theta = eig.eigenvalues[col];
            let mut x = vec![0.0; self.n];
            let mut r = vec![0.0; self.n];
            for (j, (yj, ayj)) in y.iter().zip(ay).enumerate() {
                let s = eig.eigenvectors[(j, col)];
                for i in 0..self.n {
                    x[i] += s * yj[i];
                    r[i] += s * ayj[i];
                }
            }
            r.iter_mut().zip(&x).for_each(|(ri, xi)| *ri -= theta * xi);
            res.push(norm(&r) / norm(&x).max(1e-300));
        }
        (vals, res)
    }
}

fn iterative_spectrum(
    hess: &HessianOperators,
    k: usize,
    threshold: f64,
    opts: &IterativeOptions,
) -> Result<(Vec<f64>, f64)> {
    let d = |x: &[f64]| hess.apply_d(x);
    let a = |x: &[f64]| hess.apply_d_plus(&hess.apply_d(x));
    let project = |x: &mut [f64]| hess.project(x);
    let lz = Lanczos { a: &a, b: Some(&d), project: &project, n: hess.len(), rank: hess.projector_rank() };
    let out = lz.run(k, opts)?;
    if out.smallest_b < -threshold {
        return Err(Error::Indefinite { smallest: out.smallest_b, threshold });
    }
    let vals: Vec<f64> = out.values.iter().map(|t| t.max(0.0).sqrt()).collect();
    Ok((vals, out.smallest_b))
}

/// Smallest eigenvalue of `D` on `{u0}^perp` by Lanczos.
pub fn smallest_eigenvalue_d(hess: &HessianOperators, opts: &IterativeOptions) -> Result<f64> {
    let d = |x: &[f64]| hess.apply_d(x);
    let project = |x: &mut [f64]| hess.project(x);
    let lz = Lanczos { a: &d, b: None, project: &project, n: hess.len(), rank: hess.projector_rank() };
    Ok(lz.run(1, opts)?.values[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub epsilon: f64,
    /// `E((u0 + eps phi)/|u0 + eps phi|) - E(u0)`.
    pub energy_change: f64,
    /// `eps^2 <phi, S phi>` with `S` the second variation.
    pub quadratic: f64,
    /// `energy_change / quadratic`; absent when `phi = 0`.
    pub ratio: Option<f64>,
    /// The same ratio with `<phi, D_plus phi>` of the printed convention.
    pub printed_ratio: Option<f64>,
}

/// Compares the energy along `u0 + eps phi` (renormalized) with the quadratic
/// form of the Hessian.
pub fn hessian_expansion_check(
    sol: &GPSolution,
    problem: &GPProblem,
    phi: &[f64],
    epsilons: &[f64],
) -> Result<Vec<ExpansionRow>> {
    let hess = build_hessian_with(sol, problem, PlusConvention::Printed)?;
    if phi.len() != hess.len() {
        return Err(Error::Precondition(format!("perturbation has {} values, grid has {}", phi.len(), hess.len())));
    }
    let pn = norm(phi);
    let overlap = if pn > 0.0 { dot(&hess.unit, phi) / pn } else { 0.0 };
    if overlap.abs() > 1e-10 {
        return Err(Error::NonOrthogonal { overlap });
    }
    let d = &hess.disc;
    let u0 = &hess.u0;
    let q_true = d.dot(phi, &hess.apply_second_variation(phi));
    let q_printed = d.dot(phi, &hess.apply_d_plus(phi));
    let c0 = d.basis.forward(u0);
    let n0 = d.dot(u0, u0);
    let up = d.dot(u0, phi);
    let pp = d.dot(phi, phi);
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let q = (2.0 * eps * up + eps * eps * pp) / n0;
        let root = (1.0 + q).sqrt();
        let sigma = 1.0 / root;
        let sm1 = -q / (root * (1.0 + root));
        let delta: Vec<f64> = u0.iter().zip(phi).map(|(u, p)| u * sm1 + eps * sigma * p).collect();
        let dc = d.basis.forward(&delta);
        let change = crate::gp::energy_change(d, u0, &delta, &c0, &dc);
        let quad = eps * eps * q_true;
        let ratio = (pn > 0.0).then(|| change / quad);
        let printed_ratio = (pn > 0.0).then(|| change / (eps * eps * q_printed));
        rows.push(ExpansionRow { epsilon: eps, energy_change: change, quadratic: quad, ratio, printed_ratio });
    }
    Ok(rows)
}
