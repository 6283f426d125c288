//! Minimization of the Gross-Pitaevskii functional
//!
//! `E(u) = int |grad u|^2 + V_ext u^2 + (b1/2) u^4 + (b2/6) u^6`
//!
//! over real fields of unit mass on a three-dimensional grid.

use crate::error::{Error, Result};
use crate::numerics::det_sum;
use crate::spectral::{axis_nodes, Boundary, CubeBasis, KineticScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub side: f64,
    pub points: usize,
    pub boundary: Boundary,
    #[serde(default)]
    pub kinetic: KineticScheme,
}

impl GridSpec {
    pub fn new(side: f64, points: usize, boundary: Boundary) -> Self {
        Self { side, points, boundary, kinetic: KineticScheme::Spectral }
    }

    pub fn spacing(&self) -> f64 {
        axis_nodes(self.boundary, self.points, self.side).1
    }

    pub fn axis(&self) -> Vec<f64> {
        axis_nodes(self.boundary, self.points, self.side).0
    }

    pub fn len(&self) -> usize {
        self.points.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trap {
    #[default]
    None,
    /// `strength * |x|^exponent`.
    Power { strength: f64, exponent: f64 },
    /// Values at the grid nodes in grid order (last axis fastest).
    Tabulated { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GPProblem {
    pub grid: GridSpec,
    #[serde(default)]
    pub trap: Trap,
    pub b1: f64,
    pub b2: f64,
}

impl GPProblem {
    pub fn new(grid: GridSpec, trap: Trap, b1: f64, b2: f64) -> Result<Self> {
        let p = Self { grid, trap, b1, b2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.side.is_finite() && g.side > 0.0) {
            return Err(Error::invalid("side", format!("box side must be positive, got {}", g.side)));
        }
        if g.points < 2 {
            return Err(Error::invalid("points", "need at least 2 points per axis"));
        }
        if !self.b1.is_finite() {
            return Err(Error::invalid("b1", "must be finite"));
        }
        if !(self.b2.is_finite() && self.b2 >= 0.0) {
            return Err(Error::invalid("b2", format!("must be finite and >= 0, got {}", self.b2)));
        }
        if self.b1 < 0.0 && self.b2 == 0.0 {
            return Err(Error::invalid("b2", "an attractive quartic term needs b2 > 0 for stability"));
        }
        match &self.trap {
            Trap::None => {}
            Trap::Power { strength, exponent } => {
                if !(strength.is_finite() && *strength > 0.0) {
                    return Err(Error::invalid("strength", "trap strength must be positive"));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::invalid("exponent", "trap exponent must be positive"));
                }
            }
            Trap::Tabulated { values } => {
                if values.len() != g.len() {
                    return Err(Error::invalid(
                        "values",
                        format!("tabulated trap has {} values, grid has {}", values.len(), g.len()),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid("values", "trap values must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Periodic and trap-free.
    pub fn is_homogeneous(&self) -> bool {
        self.grid.boundary == Boundary::Periodic && self.trap == Trap::None
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.spacing().powi(3)
    }

    pub fn trap_values(&self) -> Vec<f64> {
        let n = self.grid.points;
        match &self.trap {
            Trap::None => vec![0.0; n * n * n],
            Trap::Tabulated { values } => values.clone(),
            Trap::Power { strength, exponent } => {
                let x = self.grid.axis();
                let mut out = Vec::with_capacity(n * n * n);
                for a in &x {
                    for b in &x {
                        for c in &x {
                            let r = (a * a + b * b + c * c).sqrt();
                            out.push(strength * r.powf(*exponent));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Lower bound `-3 b1^2 / (8 b2)` on the energy of unit-mass fields when
/// `b1 < 0 < b2`, from `int u^4 <= (int u^6)^{1/2}`.
pub fn stability_bound(b1: f64, b2: f64) -> Option<f64> {
    (b1 < 0.0 && b2 > 0.0).then(|| -3.0 * b1 * b1 / (8.0 * b2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub trap: f64,
    /// `(b1/2) int u^4`
    pub quartic: f64,
    /// `(b2/6) int u^6`
    pub quintic: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(kinetic: f64, trap: f64, quartic: f64, quintic: f64) -> Self {
        Self { kinetic, trap, quartic, quintic, total: kinetic + trap + quartic + quintic }
    }

    /// `K + T + 2 Q4 + 3 Q6`, the multiplier of the mass constraint.
    pub fn chemical_potential(&self) -> f64 {
        self.kinetic + self.trap + 2.0 * self.quartic + 3.0 * self.quintic
    }
}

/// A problem with its transforms and trap tabulated.
pub(crate) struct Discrete {
    pub basis: CubeBasis,
    pub trap: Vec<f64>,
    /// Cell volume.
    pub w: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Discrete {
    pub fn new(problem: &GPProblem) -> Result<Self> {
        problem.validate()?;
        let g = &problem.grid;
        Ok(Self {
            basis: CubeBasis::new(g.boundary, g.points, g.side, g.kinetic),
            trap: problem.trap_values(),
            w: problem.cell_volume(),
            b1: problem.b1,
            b2: problem.b2,
        })
    }

    pub fn len(&self) -> usize {
        self.trap.len()
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w * det_sum(a.len(), |i| a[i] * b[i])
    }

    /// `V_ext + b1 u^2 + (b2/2) u^4`.
    pub fn local_potential(&self, u: &[f64]) -> Vec<f64> {
        u.par_iter()
            .zip(self.trap.par_iter())
            .map(|(&x, &v)| {
                let x2 = x * x;
                v + self.b1 * x2 + 0.5 * self.b2 * x2 * x2
            })
            .collect()
    }

    fn local_terms(&self, u: &[f64]) -> (f64, f64, f64) {
        let t = self.w * det_sum(u.len(), |i| self.trap[i] * u[i] * u[i]);
        let q4 = 0.5 * self.b1 * self.w * det_sum(u.len(), |i| u[i].powi(4));
        let q6 = self.b2 / 6.0 * self.w * det_sum(u.len(), |i| u[i].powi(6));
        (t, q4, q6)
    }

    fn kinetic_of_coeffs(&self, c: &[f64]) -> f64 {
        let lam = self.basis.eigenvalues();
        self.w * det_sum(c.len(), |i| lam[i] * c[i] * c[i])
    }

    /// Energy without any normalization.
    pub fn breakdown(&self, u: &[f64]) -> EnergyBreakdown {
        let c = self.basis.forward(u);
        let (t, q4, q6) = self.local_terms(u);
        EnergyBreakdown::new(self.kinetic_of_coeffs(&c), t, q4, q6)
    }

    /// `H u = -Lap u + (V_ext + b1 u^2 + (b2/2) u^4) u`, half the gradient of
    /// the energy in the grid inner product.
    pub fn apply_h(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.basis.laplacian(u);
        let loc = self.local_potential(u);
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o += loc[i] * u[i]);
        out
    }

    /// Spectral coefficients of `u` and of `H u`.
    fn coefficients(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.basis.forward(u);
        let loc = self.local_potential(u);
        let nu: Vec<f64> = u.par_iter().zip(loc.par_iter()).map(|(a, b)| a * b).collect();
        let mut hc = self.basis.forward(&nu);
        let lam = self.basis.eigenvalues();
        hc.par_iter_mut().enumerate().for_each(|(i, h)| *h += lam[i] * c[i]);
        (c, hc)
    }

    /// `(mu, |H u - mu u|)` for a unit-mass field.
    fn multiplier_and_residual(&self, c: &[f64], hc: &[f64]) -> (f64, f64) {
        let mu = self.dot(c, hc);
        let r2 = self.w * det_sum(c.len(), |i| (hc[i] - mu * c[i]).powi(2));
        (mu, r2.sqrt())
    }

    pub fn evaluate(&self, u: &[f64]) -> (EnergyBreakdown, f64, f64) {
        let (c, hc) = self.coefficients(u);
        let (mu, res) = self.multiplier_and_residual(&c, &hc);
        let (t, q4, q6) = self.local_terms(u);
        (EnergyBreakdown::new(self.kinetic_of_coeffs(&c), t, q4, q6), mu, res)
    }
}

/// `E(u + delta) - E(u)` summed from per-node differences.
pub(crate) fn energy_change(d: &Discrete, u: &[f64], delta: &[f64], c: &[f64], dc: &[f64]) -> f64 {
    let lam = d.basis.eigenvalues();
    let dk = d.w * det_sum(c.len(), |i| lam[i] * dc[i] * (2.0 * c[i] + dc[i]));
    let local = d.w
        * det_sum(u.len(), |i| {
            let (a, b) = (u[i], u[i] + delta[i]);
            let (a2, b2) = (a * a, b * b);
            let s2 = delta[i] * (a + b);
            s2 * (d.trap[i] + 0.5 * d.b1 * (a2 + b2) + d.b2 / 6.0 * (a2 * a2 + a2 * b2 + b2 * b2))
        });
    dk + local
}

fn check_norm(d: &Discrete, u: &[f64], tol: f64) -> Result<()> {
    if u.len() != d.len() {
        return Err(Error::Precondition(format!("field has {} values, grid has {}", u.len(), d.len())));
    }
    let n2 = d.dot(u, u);
    if !((n2 - 1.0).abs() <= tol) {
        return Err(Error::Precondition(format!("field norm^2 is {n2}, expected 1")));
    }
    Ok(())
}

/// Energy terms of a unit-mass field.
pub fn energy(u: &[f64], problem: &GPProblem) -> Result<EnergyBreakdown> {
    let d = Discrete::new(problem)?;
    check_norm(&d, u, 1e-9)?;
    Ok(d.breakdown(u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialGuess {
    /// `1 + amplitude * xi` with `xi` uniform in `[-1, 1]` per node.
    Random { amplitude: f64 },
    /// Centred Gaussian of the given width times `1 + amplitude * xi`.
    Gaussian { width: f64, amplitude: f64 },
    Constant,
}

impl Default for InitialGuess {
    fn default() -> Self {
        InitialGuess::Random { amplitude: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GPOptions {
    /// First trial step of the line search.
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_iterations: usize,
    /// Target for `|H u - mu u|`.
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub initial: InitialGuess,
    /// Shift `s` of the preconditioner `(-Lap + s)^{-1}`; by default
    /// `max(1, |mu|)` from the current iterate.
    pub preconditioner_shift: Option<f64>,
}

impl Default for GPOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            min_step: 1e-12,
            max_step: 4.0,
            max_iterations: 5000,
            tolerance: 1e-9,
            restarts: 1,
            seed: 0,
            initial: InitialGuess::default(),
            preconditioner_shift: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GPSolution {
    pub grid: GridSpec,
    /// Nonnegative field values in grid order, `sum u^2 h^3 = 1`.
    pub field: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub mu: f64,
    /// `|H u - mu u|` in the grid `L^2` norm.
    pub residual: f64,
    pub tolerance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub seed: u64,
    pub trace: Vec<TraceRow>,
    /// Lowest energy of any unit-mass field evaluated, trial steps included.
    pub min_evaluated_energy: f64,
    pub restarts: Vec<RestartSummary>,
    /// Largest energy difference between restarts.
    pub energy_spread: f64,
    /// Largest nodal difference between a restart's field and the returned one.
    pub field_spread: f64,
}

impl GPSolution {
    /// Evaluates a given unit-mass field; `converged` reports whether its
    /// residual is within `tolerance`.
    pub fn from_field(problem: &GPProblem, field: Vec<f64>, tolerance: f64) -> Result<Self> {
        let d = Discrete::new(problem)?;
        check_norm(&d, &field, 1e-9)?;
        let (energy, mu, residual) = d.evaluate(&field);
        Ok(Self {
            grid: problem.grid.clone(),
            field,
            energy,
            mu,
            residual,
            tolerance,
            converged: residual <= tolerance,
            iterations: 0,
            seed: 0,
            trace: vec![],
            min_evaluated_energy: energy.total,
            restarts: vec![],
            energy_spread: 0.0,
            field_spread: 0.0,
        })
    }

    /// Participation ratio `1 / int u^4`, a localization length cubed.
    pub fn participation_ratio(&self) -> f64 {
        let w = self.grid.spacing().powi(3);
        1.0 / (w * det_sum(self.field.len(), |i| self.field[i].powi(4)))
    }
}

fn initial_field(problem: &GPProblem, init: &InitialGuess, seed: u64) -> Vec<f64> {
    let n = problem.grid.points;
    let x = problem.grid.axis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Vec::with_capacity(n * n * n);
    for a in &x {
        for b in &x {
            for c in &x {
                let v = match init {
                    InitialGuess::Constant => 1.0,
                    InitialGuess::Random { amplitude } => 1.0 + amplitude * rng.gen_range(-1.0..1.0),
                    InitialGuess::Gaussian { width, amplitude } => {
                        let r2 = a * a + b * b + c * c;
                        (-0.5 * r2 / (width * width)).exp() * (1.0 + amplitude * rng.gen_range(-1.0..1.0))
                    }
                };
                u.push(v);
            }
        }
    }
    u
}

fn normalize(d: &Discrete, u: &mut [f64]) -> f64 {
    let s = d.dot(u, u).sqrt();
    u.par_iter_mut().for_each(|x| *x /= s);
    s
}

struct Run {
    field: Vec<f64>,
    iterations: usize,
    trace: Vec<TraceRow>,
    min_evaluated: f64,
    converged: bool,
}

fn validate_options(opts: &GPOptions) -> Result<()> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    if !(opts.step > 0.0 && opts.min_step > 0.0 && opts.max_step >= opts.step && opts.step >= opts.min_step) {
        return Err(Error::invalid("step", "need 0 < min_step <= step <= max_step"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("restarts", "need at least one run"));
    }
    if let Some(s) = opts.preconditioner_shift {
        if !(s > 0.0) {
            return Err(Error::invalid("preconditioner_shift", "must be positive"));
        }
    }
    match opts.initial {
        InitialGuess::Random { amplitude } | InitialGuess::Gaussian { amplitude, .. }
            if !(0.0..1.0).contains(&amplitude) =>
        {
            Err(Error::invalid("amplitude", "noise amplitude must lie in [0, 1)"))
        }
        InitialGuess::Gaussian { width, .. } if !(width > 0.0) => Err(Error::invalid("width", "must be positive")),
        _ => Ok(()),
    }
}

/// Preconditioned projected gradient descent: the search direction is
/// `P (H u - m u)` with `P = (-Lap + s)^{-1}` and `m` chosen to keep the
/// direction tangent to the unit sphere; every step is renormalized.
fn descend(d: &Discrete, mut u: Vec<f64>, opts: &GPOptions) -> Result<Run> {
    normalize(d, &mut u);
    let lam = d.basis.eigenvalues().to_vec();
    let mut e = d.breakdown(&u);
    let mut min_evaluated = e.total;
    let mut tau = opts.step;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut it = 0;
    loop {
        let (c, hc) = d.coefficients(&u);
        let (mu, res) = d.multiplier_and_residual(&c, &hc);
        trace.push(TraceRow { iteration: it, energy: e.total, residual: res });
        if !(res.is_finite() && e.total.is_finite()) {
            return Err(Error::Divergence { iteration: it, trace: trace.iter().map(|r| r.energy).collect() });
        }
        if res <= opts.tolerance {
            converged = true;
            break;
        }
        if it == opts.max_iterations {
            break;
        }
        it += 1;
        let shift = opts.preconditioner_shift.unwrap_or(mu.abs().max(1.0));
        let p: Vec<f64> = lam.iter().map(|l| 1.0 / (l + shift)).collect();
        let upu = det_sum(c.len(), |i| c[i] * p[i] * c[i]);
        let uph = det_sum(c.len(), |i| c[i] * p[i] * hc[i]);
        let m = uph / upu;
        let gc: Vec<f64> = (0..c.len()).map(|i| p[i] * (hc[i] - m * c[i])).collect();
        let g = d.basis.backward(&gc);

        let ug = d.dot(&u, &g);
        let gg = d.dot(&g, &g);
        let n0 = d.dot(&u, &u);
        loop {
            // trial = sigma (u - tau g) has the mass of u; sigma - 1 is formed
            // without cancellation so that tiny energy changes stay resolved
            let q = (tau * tau * gg - 2.0 * tau * ug) / n0;
            let root = (1.0 + q).sqrt();
            let sigma = 1.0 / root;
            let sm1 = -q / (root * (1.0 + root));
            let delta: Vec<f64> = u.par_iter().zip(g.par_iter()).map(|(a, b)| a * sm1 - tau * sigma * b).collect();
            let dc: Vec<f64> = (0..c.len()).map(|i| c[i] * sm1 - tau * sigma * gc[i]).collect();
            let change = energy_change(d, &u, &delta, &c, &dc);
            if !change.is_finite() {
                trace.push(TraceRow { iteration: it, energy: f64::NAN, residual: f64::NAN });
                return Err(Error::Divergence { iteration: it, trace: trace.iter().map(|r| r.energy).collect() });
            }
            min_evaluated = min_evaluated.min(e.total + change);
            if change <= 0.0 {
                u.par_iter_mut().zip(delta.par_iter()).for_each(|(a, b)| *a += b);
                e = d.breakdown(&u);
                tau = (tau * 1.25).min(opts.max_step);
                break;
            }
            tau *= 0.5;
            if tau < opts.min_step {
                return Err(Error::LineSearch { iteration: it, energy: e.total, step: tau });
            }
        }
    }
    Ok(Run { field: u, iterations: it, trace, min_evaluated, converged })
}

/// Minimizes the energy over unit-mass fields. With several restarts the
/// runs are seeded `seed, seed + 1, ...`, execute concurrently, and the best
/// by (energy, residual, seed) is returned.
pub fn minimize(problem: &GPProblem, opts: &GPOptions) -> Result<GPSolution> {
    validate_options(opts)?;
    let d = Discrete::new(problem)?;
    let seeds: Vec<u64> = (0..opts.restarts as u64).map(|k| opts.seed + k).collect();
    let runs: Vec<(u64, Run)> = seeds
        .par_iter()
        .map(|&s| descend(&d, initial_field(problem, &opts.initial, s), opts).map(|r| (s, r)))
        .collect::<Result<Vec<_>>>()?;

    let mut finished: Vec<(u64, Run, EnergyBreakdown, f64, f64)> = runs
        .into_iter()
        .map(|(s, mut r)| {
            finalize_sign(&d, &mut r.field);
            let (e, mu, res) = d.evaluate(&r.field);
            (s, r, e, mu, res)
        })
        .collect();
    finished.sort_by(|a, b| {
        a.2.total
            .total_cmp(&b.2.total)
            .then(a.4.total_cmp(&b.4))
            .then(a.0.cmp(&b.0))
    });
    let summaries: Vec<RestartSummary> = finished
        .iter()
        .map(|(s, r, e, _, res)| RestartSummary { seed: *s, energy: e.total, residual: *res, iterations: r.iterations })
        .collect();
    let e_lo = summaries.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
    let e_hi = summaries.iter().map(|s| s.energy).fold(f64::NEG_INFINITY, f64::max);
    let min_evaluated = finished.iter().map(|f| f.1.min_evaluated).fold(f64::INFINITY, f64::min);
    let best = &finished[0].1.field;
    let field_spread = finished
        .iter()
        .map(|f| f.1.field.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let (seed, run, energy, mu, residual) = finished.swap_remove(0);
    Ok(GPSolution {
        grid: problem.grid.clone(),
        field: run.field,
        energy,
        mu,
        residual,
        tolerance: opts.tolerance,
        converged: run.converged,
        iterations: run.iterations,
        seed,
        trace: run.trace,
        min_evaluated_energy: min_evaluated,
        restarts: summaries,
        energy_spread: e_hi - e_lo,
        field_spread,
    })
}

/// Flips the field to positive mass and clears negative values at rounding
/// level.
fn finalize_sign(d: &Discrete, u: &mut [f64]) {
    let sum = det_sum(u.len(), |i| u[i]);
    if sum < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let max = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut changed = false;
    for x in u.iter_mut() {
        if *x < 0.0 && *x > -1e-12 * max {
            *x = 0.0;
            changed = true;
        }
    }
    if changed {
        normalize(d, u);
    }
}

/// `K + T + b1 int u^4 + (b2/2) int u^6` of a converged solution.
pub fn chemical_potential(sol: &GPSolution, problem: &GPProblem) -> Result<f64> {
    if !sol.converged {
        return Err(Error::NotConverged { residual: sol.residual, tolerance: sol.tolerance });
    }
    let d = Discrete::new(problem)?;
    check_norm(&d, &sol.field, 1e-9)?;
    Ok(d.breakdown(&sol.field).chemical_potential())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientCheck {
    pub samples: usize,
    pub max_relative_error: f64,
    pub errors: Vec<f64>,
}

/// Compares the analytic gradient `2 h^3 H u` of the (unconstrained) discrete
/// energy with central differences along a random direction, for `samples`
/// seeded random fields.
pub fn gradient_check(problem: &GPProblem, samples: usize, seed: u64) -> Result<GradientCheck> {
    let d = Discrete::new(problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut u: Vec<f64> = (0..d.len()).map(|_| rng.gen_range(0.2..1.8)).collect();
        normalize(&d, &mut u);
        let dir: Vec<f64> = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = (d.dot(&u, &u) / d.dot(&dir, &dir)).sqrt();
        let t = 1e-4 * scale;
        let hu = d.apply_h(&u);
        let analytic = 2.0 * d.dot(&hu, &dir);
        let shifted = |sign: f64| -> f64 {
            let v: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + sign * t * b).collect();
            d.breakdown(&v).total
        };
        let numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * t);
        errors.push((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-300));
    }
    let max_relative_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(GradientCheck { samples, max_relative_error, errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropletBox {
    pub side: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropletRun {
    pub side: f64,
    pub points: usize,
    pub energy: f64,
    pub participation_ratio: f64,
    pub residual: f64,
    pub converged: bool,
    pub min_evaluated_energy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropletReport {
    pub b1: f64,
    pub b2: f64,
    /// `-3 b1^2 / (8 b2)`, or `0` when `b1 = 0`.
    pub bound: f64,
    pub runs: Vec<DropletRun>,
    /// Relative change of the participation ratio between the two largest boxes.
    pub relative_change: f64,
    /// The participation ratio changed by at most 5% between the two largest boxes.
    pub localized: bool,
    /// The minimizer on the largest box.
    pub solution: GPSolution,
}

/// Minimizes the trap-free combined functional on periodic boxes of
/// increasing side and tracks the participation ratio.
pub fn droplet_search(b1: f64, b2: f64, boxes: &[DropletBox], opts: &GPOptions) -> Result<DropletReport> {
    if !(b1 <= 0.0) {
        return Err(Error::invalid("b1", "droplet search needs b1 <= 0"));
    }
    if !(b2 > 0.0) {
        return Err(Error::invalid("b2", "droplet search needs b2 > 0"));
    }
    if boxes.len() < 2 || boxes.windows(2).any(|w| !(w[1].side > w[0].side)) {
        return Err(Error::invalid("boxes", "need at least two boxes of strictly increasing side"));
    }
    let mut runs = Vec::new();
    let mut last = None;
    for bx in boxes {
        let problem = GPProblem::new(GridSpec::new(bx.side, bx.points, Boundary::Periodic), Trap::None, b1, b2)?;
        let sol = minimize(&problem, opts)?;
        runs.push(DropletRun {
            side: bx.side,
            points: bx.points,
            energy: sol.energy.total,
            participation_ratio: sol.participation_ratio(),
            residual: sol.residual,
            converged: sol.converged,
            min_evaluated_energy: sol.min_evaluated_energy,
        });
        last = Some(sol);
    }
    let k = runs.len();
    let (a, b) = (runs[k - 2].participation_ratio, runs[k - 1].participation_ratio);
    let relative_change = (b - a).abs() / a;
    Ok(DropletReport {
        b1,
        b2,
        bound: stability_bound(b1, b2).unwrap_or(0.0),
        runs,
        relative_change,
        localized: relative_change <= 0.05,
        solution: last.unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus(n: usize, b1: f64, b2: f64) -> GPProblem {
        GPProblem::new(GridSpec::new(1.0, n, Boundary::Periodic), Trap::None, b1, b2).unwrap()
    }

    #[test]
    fn constant_field_energy_terms() {
        let p = torus(8, 3.0, 6.0);
        let u = vec![1.0; 512];
        let e = energy(&u, &p).unwrap();
        assert!(e.kinetic.abs() < 1e-12);
        assert_eq!(e.trap, 0.0);
        assert!((e.quartic - 1.5).abs() < 1e-12);
        assert!((e.quintic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_mode_kinetic_energy() {
        let n = 16;
        let p = torus(n, 0.0, 0.0);
        let x = p.grid.axis();
        let mut u = Vec::new();
        for &a in &x {
            for _ in 0..n * n {
                u.push(2f64.sqrt() * (2.0 * PI * a).cos());
            }
        }
        let e = energy(&u, &p).unwrap();
        assert!((e.kinetic - 4.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn energy_rejects_unnormalized_field() {
        let p = torus(4, 0.0, 1.0);
        assert!(matches!(energy(&vec![2.0; 64], &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn unstable_couplings_rejected() {
        let g = GridSpec::new(1.0, 4, Boundary::Periodic);
        assert!(GPProblem::new(g.clone(), Trap::None, -1.0, 0.0).is_err());
        assert!(GPProblem::new(g, Trap::None, 0.0, -1.0).is_err());
    }

    #[test]
    fn pure_quintic_torus_converges_to_constant() {
        let p = torus(8, 0.0, 3.0);
        let sol = minimize(&p, &GPOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.energy.total - 0.5).abs() < 1e-10);
        assert!((sol.mu - 1.5).abs() < 1e-8);
        for w in sol.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-13);
        }
    }

    #[test]
    fn linear_problem_multiplier_equals_energy() {
        let g = GridSpec::new(8.0, 16, Boundary::Dirichlet);
        let p = GPProblem::new(g, Trap::Power { strength: 1.0, exponent: 2.0 }, 0.0, 0.0).unwrap();
        let sol = minimize(&p, &GPOptions::default()).unwrap();
        let mu = chemical_potential(&sol, &p).unwrap();
        assert!((mu - sol.energy.total).abs() < 1e-10);
    }

    #[test]
    fn unconverged_solution_has_no_chemical_potential() {
        let p = torus(8, 0.0, 3.0);
        let opts = GPOptions { max_iterations: 1, ..Default::default() };
        let sol = minimize(&p, &opts).unwrap();
        assert!(!sol.converged);
        assert!(matches!(chemical_potential(&sol, &p), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn gradient_matches_differences() {
        let p = torus(6, -1.0, 2.0);
        let g = gradient_check(&p, 3, 1).unwrap();
        assert!(g.max_relative_error < 1e-6, "{g:?}");
    }

    #[test]
    fn stability_bound_values() {
        assert_eq!(stability_bound(-1.0, 1.0), Some(-0.375));
        assert_eq!(stability_bound(-2.0, 0.5), Some(-3.0));
        assert_eq!(stability_bound(1.0, 1.0), None);
    }

    #[test]
    fn invalid_options_rejected() {
        let p = torus(4, 0.0, 1.0);
        let bad = GPOptions { restarts: 0, ..Default::default() };
        assert!(minimize(&p, &bad).is_err());
        let bad = GPOptions { initial: InitialGuess::Random { amplitude: 1.5 }, ..Default::default() };
        assert!(minimize(&p, &bad).is_err());
    }
}
