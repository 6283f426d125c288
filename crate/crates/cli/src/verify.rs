//! Cross-module invariant suite run by `bec3 verify`. Sizes are chosen so the
//! whole suite takes a few seconds; output contains no timings.

use bec3_core::bogoliubov::{build_hessian, excitation_spectrum, hessian_expansion_check, SpectrumMethod};
use bec3_core::dilute;
use bec3_core::gp::{gradient_check, minimize, stability_bound, GPOptions, GPProblem, GridSpec, Trap};
use bec3_core::potentials::{check_three_body_symmetry, make_metric_m, Potential6D, RadialPotential};
use bec3_core::scattering::{hard_sphere_b, solve_radial_extrapolated};
use bec3_core::spectral::Boundary;
use bec3_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `measured <= threshold`.
    AtMost,
    /// Passes when `measured > threshold`.
    Above,
    /// Passes when `measured >= threshold`.
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::Above => measured > threshold,
            Comparison::AtLeast => measured >= threshold,
        };
        Self { name: name.into(), measured, threshold, comparison, passed }
    }
}

/// Maximum that propagates NaN, so a NaN measurement fails its check.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    -nan_max(-a, -b)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn radial_b(d: usize, v: &RadialPotential, spacing: f64) -> Result<f64> {
    let r0 = v.support_radius();
    Ok(solve_radial_extrapolated(d, v, &[4.0 * r0, 8.0 * r0, 16.0 * r0], spacing)?.best_b())
}

fn scattering(out: &mut Vec<Check>) -> Result<()> {
    let sw = RadialPotential::square_well(3, 2.0, 1.0)?;
    let want = 8.0 * PI * (1.0 - 1f64.tanh());
    out.push(Check::new("scatter.square_well_closed_form", rel(radial_b(3, &sw, 1e-3)?, want), Comparison::AtMost, 1e-3));

    for d in [3usize, 6] {
        let hs = RadialPotential::square_well(d, 1e6, 1.0)?;
        let err = rel(radial_b(d, &hs, 1e-4)?, hard_sphere_b(d, 1.0)?);
        out.push(Check::new(&format!("scatter.hard_sphere_d{d}"), err, Comparison::AtMost, 1e-2));
    }

    let g = RadialPotential::gaussian(6, 5.0, 1.0, None)?;
    let spacing = 1e-3;
    let base = radial_b(6, &g, spacing)?;
    let mut worst: f64 = 0.0;
    for ell in [0.5f64, 2.0] {
        worst = nan_max(worst, rel(ell.powi(4) * radial_b(6, &g.scaled(ell), spacing)?, base));
    }
    out.push(Check::new("scatter.scaling_law", worst, Comparison::AtMost, 1e-3));

    let suite = [
        (3, RadialPotential::square_well(3, 2.0, 1.0)?),
        (3, RadialPotential::gaussian(3, 3.0, 0.5, None)?),
        (6, RadialPotential::gaussian(6, 5.0, 1.0, None)?),
        (3, RadialPotential::tabulated(3, vec![0.0, 0.5, 1.0], vec![4.0, 2.0, 0.0])?),
    ];
    let mut margin = f64::INFINITY;
    for (d, v) in &suite {
        let b = radial_b(*d, v, 1e-3 * v.support_radius())?;
        margin = nan_min(margin, (v.integral() - b) / v.integral());
    }
    out.push(Check::new("scatter.strict_bound_relative_margin", margin, Comparison::Above, 0.0));

    let m = make_metric_m();
    out.push(Check::new(
        "potentials.metric_determinant",
        rel(m.determinant(), (3f64.sqrt() / 2.0).powi(3)),
        Comparison::AtMost,
        1e-14,
    ));
    let v = Potential6D::isotropic_after_m(RadialPotential::gaussian(6, 1.0, 1.0, None)?)?;
    let sym = check_three_body_symmetry(&v, 200, 1e-12, 7)?;
    out.push(Check::new("potentials.three_body_symmetry", sym.max_violation, Comparison::AtMost, 1e-12));
    Ok(())
}

fn torus(n: usize, b1: f64, b2: f64) -> Result<GPProblem> {
    GPProblem::new(GridSpec::new(1.0, n, Boundary::Periodic), Trap::None, b1, b2)
}

fn harmonic(n: usize, side: f64, b1: f64, b2: f64) -> Result<GPProblem> {
    let trap = Trap::Power { strength: 1.0, exponent: 2.0 };
    GPProblem::new(GridSpec::new(side, n, Boundary::Dirichlet), trap, b1, b2)
}

fn gross_pitaevskii(out: &mut Vec<Check>, seed: u64) -> Result<()> {
    let opts = GPOptions { seed, ..GPOptions::default() };
    let b2 = 10.0;
    let sol = minimize(&torus(16, 0.0, b2)?, &opts)?;
    out.push(Check::new("gp.torus_energy", (sol.energy.total - b2 / 6.0).abs(), Comparison::AtMost, 1e-8));
    let dev = sol.field.iter().map(|u| (u - 1.0).abs()).fold(0.0, nan_max);
    out.push(Check::new("gp.torus_field_deviation", dev, Comparison::AtMost, 1e-6));

    let cases = [
        ("gp.gradient_torus_b1_zero", torus(8, 0.0, 2.0)?),
        ("gp.gradient_torus_b1_nonzero", torus(8, -1.5, 2.0)?),
        ("gp.gradient_dirichlet_b1_zero", harmonic(8, 6.0, 0.0, 2.0)?),
        ("gp.gradient_dirichlet_b1_nonzero", harmonic(8, 6.0, 1.5, 2.0)?),
    ];
    for (name, p) in &cases {
        out.push(Check::new(name, gradient_check(p, 10, seed)?.max_relative_error, Comparison::AtMost, 1e-6));
    }

    let sol = minimize(&harmonic(16, 10.0, 0.0, 100.0)?, &opts)?;
    let e = sol.energy;
    let virial = (2.0 * e.kinetic - 2.0 * e.trap + 6.0 * e.quintic).abs() / e.total;
    out.push(Check::new("gp.virial_relative", virial, Comparison::AtMost, 1e-3));

    let mut gap = f64::INFINITY;
    for (b1, b2) in [(-1.0, 1.0), (-2.0, 0.5)] {
        let bound = stability_bound(b1, b2).unwrap();
        let sol = minimize(&torus(8, b1, b2)?, &opts)?;
        gap = nan_min(gap, nan_min(sol.min_evaluated_energy - bound, sol.energy.total - bound));
    }
    out.push(Check::new("gp.stability_bound_gap", gap, Comparison::Above, 0.0));
    Ok(())
}

fn bogoliubov(out: &mut Vec<Check>, seed: u64) -> Result<()> {
    let (n, b) = (6, 10.0);
    let p = torus(n, 0.0, b)?;
    let sol = minimize(&p, &GPOptions { seed, ..GPOptions::default() })?;
    let h = build_hessian(&sol, &p)?;
    let dense = excitation_spectrum(&h, 26, SpectrumMethod::Dense)?;
    let iter = excitation_spectrum(&h, 26, SpectrumMethod::Iterative)?;
    let q = dense.momenta_squared.clone().unwrap_or_default();
    let closed = dense
        .eigenvalues
        .iter()
        .zip(&q)
        .map(|(e, q)| rel(*e, (q * (q + b)).sqrt()))
        .fold(0.0, nan_max);
    out.push(Check::new("bogoliubov.closed_form", closed, Comparison::AtMost, 1e-8));
    out.push(Check::new(
        "bogoliubov.lowest_multiplicity",
        dense.levels[0].multiplicity as f64,
        Comparison::AtLeast,
        6.0,
    ));
    let agree = dense.eigenvalues.iter().zip(&iter.eigenvalues).map(|(a, b)| rel(*b, *a)).fold(0.0, nan_max);
    out.push(Check::new("bogoliubov.dense_vs_iterative", agree, Comparison::AtMost, 1e-8));

    let x = p.grid.axis();
    let phi: Vec<f64> = x.iter().flat_map(|a| std::iter::repeat((2.0 * PI * a).cos()).take(n * n)).collect();
    let rows = hessian_expansion_check(&sol, &p, &phi, &[1e-2, 5e-3, 2.5e-3])?;
    let errs: Vec<f64> = rows.iter().map(|r| (r.ratio.unwrap_or(f64::NAN) - 1.0).abs()).collect();
    let deviation = errs.windows(2).map(|w| (w[0] / w[1] - 4.0).abs()).fold(0.0, nan_max);
    out.push(Check::new("bogoliubov.expansion_factor_deviation", deviation, Comparison::AtMost, 0.5));
    Ok(())
}

fn expansions(out: &mut Vec<Check>, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scale_err: f64 = 0.0;
    let mut renorm_err: f64 = 0.0;
    let mut ratio_err: f64 = 0.0;
    for _ in 0..200 {
        let rho = 10f64.powf(rng.gen_range(-6.0..-1.0));
        let a = 10f64.powf(rng.gen_range(-2.0..0.0));
        let b = 10f64.powf(rng.gen_range(-1.0..2.0));
        let lambda = 10f64.powf(rng.gen_range(-1.0..1.0));
        let f = lambda.powi(-5);
        let e3 = dilute::e3b_leading(rho, b)?.energy_density;
        let e3s = dilute::e3b_leading(rho / lambda.powi(3), b * lambda.powi(4))?.energy_density;
        scale_err = nan_max(scale_err, rel(e3s, f * e3));
        let e2 = dilute::e2b_lhy(rho, a, 2)?;
        let e2s = dilute::e2b_lhy(rho / lambda.powi(3), a * lambda, 2)?;
        for (x, y) in e2.partial_sums.iter().zip(&e2s.partial_sums) {
            scale_err = nan_max(scale_err, rel(*y, f * x));
        }

        let (n, ell) = (rng.gen_range(1.0..1e3), rng.gen_range(0.1..10.0));
        let int_v: f64 = rng.gen_range(1.0..100.0);
        let bm = int_v * rng.gen_range(0.1..1.0);
        let sum = dilute::mean_field_energy(n, ell, int_v)? + dilute::renormalization_shift(n, ell, bm, int_v)?;
        renorm_err = nan_max(renorm_err, rel(sum, n.powi(3) * bm / (6.0 * ell.powi(4))));

        let q = dilute::ExpansionQuery { density: rho, b_m: b, c_tl: 1.0, c_gp: 1.0, particles: None, gp_energy: None };
        let c = dilute::conjectured_orders(&q)?;
        ratio_err = nan_max(ratio_err, rel(c.scale_ratio, c.diluteness));
    }
    let c = dilute::lhy_coefficients();
    let coeff_err = nan_max(rel(c[1], 4.814_417_779_607_52), rel(c[2], 19.653_915_177_740_1));
    out.push(Check::new("dilute.lhy_coefficients", coeff_err, Comparison::AtMost, 1e-12));
    out.push(Check::new("dilute.rescaling_invariance", scale_err, Comparison::AtMost, 1e-12));
    out.push(Check::new("dilute.renormalization_identity", renorm_err, Comparison::AtMost, 1e-12));
    out.push(Check::new("dilute.conjectured_scale_ratio", ratio_err, Comparison::AtMost, 1e-12));
    Ok(())
}

/// Runs every check; solver failures abort the suite.
pub fn run_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    scattering(&mut out)?;
    gross_pitaevskii(&mut out, seed)?;
    bogoliubov(&mut out, seed)?;
    expansions(&mut out, seed)?;
    Ok(out)
}
