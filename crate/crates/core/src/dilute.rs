//! Dilute-limit energy formulas for two- and three-body interactions.
//!
//! All evaluators are pure functions of their arguments. Units follow the
//! many-body Hamiltonian `-Lap` with `a` a length, `b_M` a length^4 and
//! `rho` a density.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Upper limit of `rho a^3` and of `Y = rho b_M^{3/4}` regarded as dilute.
pub const DILUTE_THRESHOLD: f64 = 1e-2;

fn nonneg(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(field, format!("must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(field, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// `Y = rho b_M^{3/4}`.
pub fn diluteness(rho: f64, b_m: f64) -> f64 {
    rho * b_m.powf(0.75)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrder {
    /// `b_M rho^3 / 6`.
    pub energy_density: f64,
    pub diluteness: f64,
    /// The relative error is `O(Y^nu)` with an unspecified exponent.
    pub error_order: &'static str,
}

pub fn e3b_leading(rho: f64, b_m: f64) -> Result<LeadingOrder> {
    nonneg("rho", rho)?;
    nonneg("b_m", b_m)?;
    Ok(LeadingOrder {
        energy_density: b_m * rho.powi(3) / 6.0,
        diluteness: diluteness(rho, b_m),
        error_order: "O(Y^nu)",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpLength {
    /// `1 / (rho sqrt(b_M))`.
    pub length: f64,
    /// `a / (rho a^3)` with `a = b_M^{1/4}`.
    pub via_scattering_length: f64,
}

pub fn gp_length(rho: f64, b_m: f64) -> Result<GpLength> {
    positive("rho", rho)?;
    positive("b_m", b_m)?;
    let a = b_m.powf(0.25);
    Ok(GpLength { length: 1.0 / (rho * b_m.sqrt()), via_scattering_length: a / (rho * a.powi(3)) })
}

/// Coefficients `4 pi`, `128 / (15 sqrt(pi))` and `8 (4 pi / 3 - sqrt(3))` of
/// the two-body expansion.
pub fn lhy_coefficients() -> [f64; 3] {
    [4.0 * PI, 128.0 / (15.0 * PI.sqrt()), 8.0 * (4.0 * PI / 3.0 - 3f64.sqrt())]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhyTerm {
    pub name: String,
    pub coefficient: f64,
    /// Contribution to the energy density.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhyExpansion {
    pub order: usize,
    pub energy_density: f64,
    /// Partial sums through orders `0..=order`.
    pub partial_sums: Vec<f64>,
    pub terms: Vec<LhyTerm>,
    pub gas_parameter: f64,
    pub warning: Option<String>,
}

/// `4 pi a rho^2 (1 + C1 sqrt(rho a^3) + C2 rho a^3 log(rho a^3))` truncated
/// after `order`.
pub fn e2b_lhy(rho: f64, a: f64, order: usize) -> Result<LhyExpansion> {
    nonneg("rho", rho)?;
    nonneg("a", a)?;
    if order > 2 {
        return Err(Error::invalid("order", "order must be 0, 1 or 2"));
    }
    let [c0, c1, c2] = lhy_coefficients();
    let x = rho * a.powi(3);
    let lead = c0 * a * rho * rho;
    let log_term = if x > 0.0 { x * x.ln() } else { 0.0 };
    let all = [
        LhyTerm { name: "4*pi*a*rho^2".into(), coefficient: c0, value: lead },
        LhyTerm { name: "sqrt(rho*a^3)".into(), coefficient: c1, value: lead * c1 * x.sqrt() },
        LhyTerm { name: "rho*a^3*log(rho*a^3)".into(), coefficient: c2, value: lead * c2 * log_term },
    ];
    let terms: Vec<LhyTerm> = all[..=order].to_vec();
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in &terms {
        acc += t.value;
        partial_sums.push(acc);
    }
    let warning = (x >= 1.0).then(|| format!("rho*a^3 = {x} is not small; the expansion is not meaningful"));
    Ok(LhyExpansion { order, energy_density: acc, partial_sums, terms, gas_parameter: x, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Density where `4 pi a rho^2 = b_M rho^3 / 6`.
    pub density: f64,
    pub gas_parameter: f64,
    pub diluteness: f64,
    /// Both `rho a^3` and `Y` are below [`DILUTE_THRESHOLD`] at the crossover.
    pub dilute: bool,
}

pub fn crossover_density(a: f64, b_m: f64) -> Result<Crossover> {
    positive("a", a)?;
    positive("b_m", b_m)?;
    let density = 24.0 * PI * a / b_m;
    let gas_parameter = density * a.powi(3);
    let y = diluteness(density, b_m);
    Ok(Crossover {
        density,
        gas_parameter,
        diluteness: y,
        dilute: gas_parameter < DILUTE_THRESHOLD && y < DILUTE_THRESHOLD,
    })
}

fn box_inputs(n: f64, ell: f64, int_v: f64) -> Result<()> {
    positive("n", n)?;
    positive("ell", ell)?;
    nonneg("int_v", int_v)
}

/// `n^3 ell^{-4} int V / 6`.
pub fn mean_field_energy(n: f64, ell: f64, int_v: f64) -> Result<f64> {
    box_inputs(n, ell, int_v)?;
    Ok(n.powi(3) * int_v / (6.0 * ell.powi(4)))
}

/// `n^3 ell^{-4} (b_M - int V) / 6`, negative whenever `b_M < int V`.
pub fn renormalization_shift(n: f64, ell: f64, b_m: f64, int_v: f64) -> Result<f64> {
    box_inputs(n, ell, int_v)?;
    nonneg("b_m", b_m)?;
    Ok(n.powi(3) * (b_m - int_v) / (6.0 * ell.powi(4)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionQuery {
    pub density: f64,
    pub b_m: f64,
    /// Second-order constant of the thermodynamic expansion; unknown, so
    /// always supplied by the caller.
    pub c_tl: f64,
    /// Second-order constant of the Gross-Pitaevskii expansion.
    pub c_gp: f64,
    #[serde(default)]
    pub particles: Option<f64>,
    #[serde(default)]
    pub gp_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjecturedOrders {
    pub label: &'static str,
    /// `b_M rho^3 (1 + C_TL rho) / 6`.
    pub thermodynamic: f64,
    /// `N e_GP + sqrt(N) C_GP`, when `N` and `e_GP` are given.
    pub gross_pitaevskii: Option<f64>,
    /// `rho^4 b_M^{7/4}`.
    pub quartic_scale: f64,
    /// `quartic_scale / (rho^3 b_M)`, which equals `Y`.
    pub scale_ratio: f64,
    pub diluteness: f64,
}

pub fn conjectured_orders(q: &ExpansionQuery) -> Result<ConjecturedOrders> {
    nonneg("density", q.density)?;
    nonneg("b_m", q.b_m)?;
    if !(q.c_tl.is_finite() && q.c_gp.is_finite()) {
        return Err(Error::invalid("c_tl", "conjectured constants must be finite"));
    }
    let (rho, b) = (q.density, q.b_m);
    let gross_pitaevskii = match (q.particles, q.gp_energy) {
        (Some(n), Some(e)) => {
            nonneg("particles", n)?;
            Some(n * e + n.sqrt() * q.c_gp)
        }
        _ => None,
    };
    let leading = rho.powi(3) * b;
    let quartic_scale = rho.powi(4) * b.powf(1.75);
    Ok(ConjecturedOrders {
        label: "conjectural: second-order constants are user supplied",
        thermodynamic: leading * (1.0 + q.c_tl * rho) / 6.0,
        gross_pitaevskii,
        quartic_scale,
        scale_ratio: if leading > 0.0 { quartic_scale / leading } else { 0.0 },
        diluteness: diluteness(rho, b),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub density: f64,
    pub diluteness: f64,
    pub e3b: f64,
    /// Two-body partial sums through orders 0, 1, 2 (empty without `a`).
    pub e2b: Vec<f64>,
    /// Three-body leading term exceeds the two-body leading term.
    pub three_body_dominant: Option<bool>,
}

/// Tabulates the expansions over `densities`.
pub fn sweep(densities: &[f64], a: Option<f64>, b_m: f64) -> Result<Vec<SweepRow>> {
    densities
        .iter()
        .map(|&rho| {
            let e3 = e3b_leading(rho, b_m)?;
            let (e2b, dom) = match a {
                Some(a) => {
                    let x = e2b_lhy(rho, a, 2)?;
                    let dom = e3.energy_density > x.partial_sums[0];
                    (x.partial_sums, Some(dom))
                }
                None => (vec![], None),
            };
            Ok(SweepRow { density: rho, diluteness: e3.diluteness, e3b: e3.energy_density, e2b, three_body_dominant: dom })
        })
        .collect()
}

/// `count` logarithmically spaced values from `lo` to `hi`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    positive("lo", lo)?;
    positive("hi", hi)?;
    if count < 2 || !(hi > lo) {
        return Err(Error::invalid("count", "need count >= 2 and hi > lo"));
    }
    let (l0, l1) = (lo.log10(), hi.log10());
    let mut v: Vec<f64> = (0..count).map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (count - 1) as f64)).collect();
    v[0] = lo;
    v[count - 1] = hi;
    Ok(v)
}
