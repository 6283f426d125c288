//! Interaction potentials: radial profiles in `R^d`, three-body potentials on
//! `R^3 x R^3`, and the metric `M` that removes the three-body centre of mass.

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, unit_sphere_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Gaussian profiles are cut off at this many widths unless told otherwise.
pub const DEFAULT_GAUSSIAN_CUTOFF_WIDTHS: f64 = 6.0;

/// Point of `R^3 x R^3`, stored as `(x0, x1, x2, y0, y1, y2)`.
pub type Point6 = [f64; 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RadialFamily {
    Zero,
    SquareWell { height: f64, radius: f64 },
    /// `amplitude * exp(-r^2 / (2 width^2))` for `r <= cutoff`, zero beyond.
    Gaussian { amplitude: f64, width: f64, cutoff: f64 },
    /// Piecewise-linear interpolation through `(radii, values)`, constant below
    /// the first radius and zero beyond the last.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

/// Nonnegative, bounded, compactly supported radial potential `v(|x|)` on `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    dim: usize,
    family: RadialFamily,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 3 {
        return Err(Error::invalid("dim", format!("dimension must be at least 3, got {dim}")));
    }
    Ok(())
}

fn check_nonneg(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(field, format!("must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_pos(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(field, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

impl RadialPotential {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, family: RadialFamily::Zero })
    }

    pub fn square_well(dim: usize, height: f64, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        check_nonneg("v0", height)?;
        check_pos("radius", radius)?;
        Ok(Self { dim, family: RadialFamily::SquareWell { height, radius } })
    }

    /// Gaussian profile; `cutoff` defaults to six widths.
    pub fn gaussian(dim: usize, amplitude: f64, width: f64, cutoff: Option<f64>) -> Result<Self> {
        check_dim(dim)?;
        check_nonneg("amplitude", amplitude)?;
        check_pos("width", width)?;
        let cutoff = cutoff.unwrap_or(DEFAULT_GAUSSIAN_CUTOFF_WIDTHS * width);
        check_pos("cutoff", cutoff)?;
        Ok(Self { dim, family: RadialFamily::Gaussian { amplitude, width, cutoff } })
    }

    pub fn tabulated(dim: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::invalid("radii", "need equally many radii and values, at least one"));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("radii", "radii must be nonnegative and strictly increasing"));
        }
        for &v in &values {
            check_nonneg("values", v)?;
        }
        if *radii.last().unwrap() <= 0.0 {
            return Err(Error::invalid("radii", "support radius must be positive"));
        }
        Ok(Self { dim, family: RadialFamily::Tabulated { radii, values } })
    }

    /// Parses two-column numeric text `radius value`; `#` starts a comment and
    /// commas are accepted as separators.
    pub fn from_profile_text(dim: usize, text: &str) -> Result<Self> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::invalid(
                    "profile",
                    format!("line {}: expected two columns, found {}", lineno + 1, cols.len()),
                ));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::invalid("profile", format!("line {}: {e}", lineno + 1))
                })
            };
            radii.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        Self::tabulated(dim, radii, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &RadialFamily {
        &self.family
    }

    /// Same profile regarded as a potential on `R^dim`.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, family: self.family.clone() })
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            RadialFamily::Zero => "zero",
            RadialFamily::SquareWell { .. } => "square_well",
            RadialFamily::Gaussian { .. } => "gaussian",
            RadialFamily::Tabulated { .. } => "tabulated",
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            RadialFamily::Zero => true,
            RadialFamily::SquareWell { height, .. } => *height == 0.0,
            RadialFamily::Gaussian { amplitude, .. } => *amplitude == 0.0,
            RadialFamily::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    /// Radius beyond which the potential vanishes.
    pub fn support_radius(&self) -> f64 {
        match &self.family {
            RadialFamily::Zero => 0.0,
            RadialFamily::SquareWell { radius, .. } => *radius,
            RadialFamily::Gaussian { cutoff, .. } => *cutoff,
            RadialFamily::Tabulated { radii, .. } => *radii.last().unwrap(),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match &self.family {
            RadialFamily::Zero => 0.0,
            RadialFamily::SquareWell { height, radius } => {
                if r <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            RadialFamily::Gaussian { amplitude, width, cutoff } => {
                if r <= *cutoff {
                    amplitude * (-0.5 * (r / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
            RadialFamily::Tabulated { radii, values } => interpolate(radii, values, r),
        }
    }

    /// Mean of the one-sided limits at `r`. Equals [`value`](Self::value)
    /// except at the outer jump of a truncated profile, where it returns half
    /// the inner limit; nodal quadrature with this value stays second order
    /// when the jump sits on a node.
    pub fn nodal_value(&self, r: f64) -> f64 {
        let r0 = self.support_radius();
        if r0 > 0.0 && r == r0 {
            0.5 * self.value(r)
        } else {
            self.value(r)
        }
    }

    /// `amplitude * v(ell * r)`.
    pub fn rescaled(&self, amplitude: f64, ell: f64) -> Self {
        let family = match &self.family {
            RadialFamily::Zero => RadialFamily::Zero,
            RadialFamily::SquareWell { height, radius } => RadialFamily::SquareWell {
                height: height * amplitude,
                radius: radius / ell,
            },
            RadialFamily::Gaussian { amplitude: a, width, cutoff } => RadialFamily::Gaussian {
                amplitude: a * amplitude,
                width: width / ell,
                cutoff: cutoff / ell,
            },
            RadialFamily::Tabulated { radii, values } => RadialFamily::Tabulated {
                radii: radii.iter().map(|r| r / ell).collect(),
                values: values.iter().map(|v| v * amplitude).collect(),
            },
        };
        Self { dim: self.dim, family }
    }

    /// The scattering rescaling `ell^2 v(ell x)`.
    pub fn scaled(&self, ell: f64) -> Self {
        self.rescaled(ell * ell, ell)
    }

    /// `int_0^R v(r) r^{d-1} dr`.
    pub fn radial_moment(&self) -> f64 {
        let p = self.dim as i32 - 1;
        match &self.family {
            RadialFamily::Zero => 0.0,
            RadialFamily::SquareWell { height, radius } => height * radius.powi(p + 1) / (p + 1) as f64,
            RadialFamily::Gaussian { cutoff, .. } => {
                gauss_legendre(|r| self.value(r) * r.powi(p), 0.0, *cutoff, 400)
            }
            RadialFamily::Tabulated { radii, values } => {
                let mut s = if radii[0] > 0.0 {
                    values[0] * radii[0].powi(p + 1) / (p + 1) as f64
                } else {
                    0.0
                };
                for i in 0..radii.len() - 1 {
                    s += gauss_legendre(
                        |r| interpolate(radii, values, r) * r.powi(p),
                        radii[i],
                        radii[i + 1],
                        1,
                    );
                }
                s
            }
        }
    }

    /// `int_{R^d} v`.
    pub fn integral(&self) -> f64 {
        unit_sphere_area(self.dim) * self.radial_moment()
    }
}

fn interpolate(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let last = radii.len() - 1;
    if r > radii[last] {
        return 0.0;
    }
    if r <= radii[0] {
        return values[0];
    }
    let k = radii.partition_point(|&x| x < r);
    let (r0, r1) = (radii[k - 1], radii[k]);
    let t = (r - r0) / (r1 - r0);
    values[k - 1] * (1.0 - t) + values[k] * t
}

/// Symmetric 2x2 block matrix acting on `R^3 x R^3` as `(x, y) -> (a x + b y, b x + c y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricM {
    pub block: [[f64; 2]; 2],
}

/// The three-body metric, the positive square root of `(1/2)[[2,1],[1,2]]`.
pub fn make_metric_m() -> MetricM {
    let s = 2.0 * std::f64::consts::SQRT_2;
    let r3 = 3f64.sqrt();
    MetricM {
        block: [[(r3 + 1.0) / s, (r3 - 1.0) / s], [(r3 - 1.0) / s, (r3 + 1.0) / s]],
    }
}

impl MetricM {
    pub fn identity() -> Self {
        Self { block: [[1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn three_body() -> Self {
        make_metric_m()
    }

    pub fn square(&self) -> [[f64; 2]; 2] {
        mat_mul(&self.block, &self.block)
    }

    /// Determinant of the 2x2 block.
    pub fn block_determinant(&self) -> f64 {
        self.block[0][0] * self.block[1][1] - self.block[0][1] * self.block[1][0]
    }

    /// Determinant over `R^6`: three spatial copies of the block.
    pub fn determinant(&self) -> f64 {
        self.block_determinant().powi(3)
    }

    /// Eigenvalues of the block, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, c]] = self.block;
        let m = 0.5 * (a + c);
        let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        [m - d, m + d]
    }

    pub fn inverse(&self) -> Self {
        let det = self.block_determinant();
        let [[a, b], [c, d]] = self.block;
        Self { block: [[d / det, -b / det], [-c / det, a / det]] }
    }

    pub fn apply(&self, z: &Point6) -> Point6 {
        let [[a, b], [c, d]] = self.block;
        let mut out = [0.0; 6];
        for i in 0..3 {
            out[i] = a * z[i] + b * z[i + 3];
            out[i + 3] = c * z[i] + d * z[i + 3];
        }
        out
    }

    /// Coefficients of the kinetic form `2|M grad phi|^2 = grad^T (2 M^2) grad`.
    pub fn stiffness(&self) -> [[f64; 2]; 2] {
        let s = self.square();
        [[2.0 * s[0][0], 2.0 * s[0][1]], [2.0 * s[1][0], 2.0 * s[1][1]]]
    }

    pub fn is_identity(&self) -> bool {
        self.block == [[1.0, 0.0], [0.0, 1.0]]
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (self.block[i][j] - other.block[i][j]).abs() <= tol))
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SymmetryCertificate {
    Unchecked,
    /// Holds by construction.
    Asserted,
    Checked { max_violation: f64 },
    Violated { max_violation: f64 },
}

type Evaluator = Arc<dyn Fn(&Point6) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Zero,
    /// `h(|x|) h(|y|) h(|x - y|)`.
    ProductTriplet { profile: RadialPotential },
    /// `w(|M^{-1} z|)`, radial once the metric is undone.
    IsotropicAfterM { profile: RadialPotential, metric: MetricM },
    /// Multilinear interpolation on `n^6` nodes spanning `[-half_width, half_width]^6`.
    Tabulated { n: usize, half_width: f64, values: Arc<Vec<f64>> },
    Custom { name: String, eval: Evaluator },
    Transformed { inner: Box<Potential6D>, metric: MetricM },
    Scaled { inner: Box<Potential6D>, ell: f64 },
}

/// Nonnegative compactly supported three-body potential `V(x, y)`.
#[derive(Clone)]
pub struct Potential6D {
    kind: Kind,
    support: f64,
    symmetry: SymmetryCertificate,
}

impl fmt::Debug for Potential6D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential6D")
            .field("family", &self.family_name())
            .field("label", &self.label())
            .field("support", &self.support)
            .field("symmetry", &self.symmetry)
            .finish()
    }
}

impl Potential6D {
    pub fn zero() -> Self {
        Self { kind: Kind::Zero, support: 0.0, symmetry: SymmetryCertificate::Asserted }
    }

    /// `V(x, y) = h(|x|) h(|y|) h(|x - y|)`, symmetric under all three-body
    /// permutations for any profile `h`.
    pub fn product_triplet(profile: RadialPotential) -> Self {
        let support = std::f64::consts::SQRT_2 * profile.support_radius();
        Self {
            kind: Kind::ProductTriplet { profile },
            support,
            symmetry: SymmetryCertificate::Asserted,
        }
    }

    /// `V(z) = w(|M^{-1} z|)` for the three-body metric; `w` is a profile on `R^6`.
    pub fn isotropic_after_m(profile: RadialPotential) -> Result<Self> {
        Self::isotropic_after_metric(profile, MetricM::three_body())
    }

    pub fn isotropic_after_metric(profile: RadialPotential, metric: MetricM) -> Result<Self> {
        if profile.dim() != 6 {
            return Err(Error::invalid("dim", "isotropic-after-M profile must live on R^6"));
        }
        let support = profile.support_radius() * metric.eigenvalues()[1];
        Ok(Self {
            kind: Kind::IsotropicAfterM { profile, metric },
            support,
            symmetry: SymmetryCertificate::Unchecked,
        })
    }

    pub fn tabulated(n: usize, half_width: f64, values: Vec<f64>) -> Result<Self> {
        if n < 2 || values.len() != n.pow(6) {
            return Err(Error::invalid("values", format!("expected {} values for n = {n}", n.pow(6))));
        }
        check_pos("half_width", half_width)?;
        for &v in &values {
            check_nonneg("values", v)?;
        }
        Ok(Self {
            kind: Kind::Tabulated { n, half_width, values: Arc::new(values) },
            support: half_width * 6f64.sqrt(),
            symmetry: SymmetryCertificate::Unchecked,
        })
    }

    /// Arbitrary evaluator, zeroed outside `support`.
    pub fn custom<F>(name: &str, support: f64, eval: F) -> Self
    where
        F: Fn(&Point6) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: Kind::Custom { name: name.to_string(), eval: Arc::new(eval) },
            support,
            symmetry: SymmetryCertificate::Unchecked,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind {
            Kind::Zero => "zero",
            Kind::ProductTriplet { .. } => "product_triplet",
            Kind::IsotropicAfterM { .. } => "isotropic_after_m",
            Kind::Tabulated { .. } => "tabulated",
            Kind::Custom { .. } => "custom",
            Kind::Transformed { .. } => "transformed",
            Kind::Scaled { .. } => "scaled",
        }
    }

    /// User-supplied label of a custom evaluator.
    pub fn label(&self) -> Option<&str> {
        match &self.kind {
            Kind::Custom { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support
    }

    pub fn symmetry(&self) -> SymmetryCertificate {
        self.symmetry
    }

    /// Records the outcome of a symmetry check on this potential.
    pub fn certified(mut self, report: &SymmetryReport) -> Self {
        self.symmetry = if report.passed {
            SymmetryCertificate::Checked { max_violation: report.max_violation }
        } else {
            SymmetryCertificate::Violated { max_violation: report.max_violation }
        };
        self
    }

    pub fn value(&self, z: &Point6) -> f64 {
        let r2: f64 = z.iter().map(|c| c * c).sum();
        if r2 > self.support * self.support {
            return 0.0;
        }
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::ProductTriplet { profile } => {
                let (mut rx, mut ry, mut rd) = (0.0, 0.0, 0.0);
                for i in 0..3 {
                    rx += z[i] * z[i];
                    ry += z[i + 3] * z[i + 3];
                    rd += (z[i] - z[i + 3]).powi(2);
                }
                profile.value(rx.sqrt()) * profile.value(ry.sqrt()) * profile.value(rd.sqrt())
            }
            Kind::IsotropicAfterM { profile, metric } => {
                let w = metric.inverse().apply(z);
                profile.value(w.iter().map(|c| c * c).sum::<f64>().sqrt())
            }
            Kind::Tabulated { n, half_width, values } => multilinear(*n, *half_width, values, z),
            Kind::Custom { eval, .. } => eval(z),
            Kind::Transformed { inner, metric } => inner.value(&metric.apply(z)),
            Kind::Scaled { inner, ell } => {
                let mut s = *z;
                s.iter_mut().for_each(|c| *c *= ell);
                ell * ell * inner.value(&s)
            }
        }
    }

    /// `ell^2 V(ell z)`.
    pub fn scaled(&self, ell: f64) -> Self {
        let kind = match &self.kind {
            Kind::Zero => Kind::Zero,
            Kind::ProductTriplet { profile } => Kind::ProductTriplet {
                profile: profile.rescaled(ell.powf(2.0 / 3.0), ell),
            },
            Kind::IsotropicAfterM { profile, metric } => Kind::IsotropicAfterM {
                profile: profile.scaled(ell),
                metric: *metric,
            },
            _ => Kind::Scaled { inner: Box::new(self.clone()), ell },
        };
        Self { kind, support: self.support / ell, symmetry: self.symmetry }
    }

    /// If the potential is exactly a radial profile of `|z|` on `R^6`, that profile.
    pub fn isotropic_profile(&self) -> Option<RadialPotential> {
        match &self.kind {
            Kind::IsotropicAfterM { profile, metric } if metric.is_identity() => Some(profile.clone()),
            Kind::Transformed { inner, metric } => match &inner.kind {
                Kind::IsotropicAfterM { profile, metric: m } if m.approx_eq(metric, 1e-15) => {
                    Some(profile.clone())
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// `int_{R^6} V`, when it is available in closed form or by low-dimensional
    /// quadrature.
    pub fn integral(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero => Some(0.0),
            Kind::ProductTriplet { profile } => Some(product_triplet_integral(profile)),
            Kind::IsotropicAfterM { profile, metric } => Some(metric.determinant() * profile.integral()),
            Kind::Tabulated { n, half_width, values } => {
                let h = 2.0 * half_width / (*n as f64 - 1.0);
                Some(values.iter().sum::<f64>() * h.powi(6))
            }
            Kind::Custom { .. } => None,
            Kind::Transformed { inner, metric } => inner.integral().map(|i| i / metric.determinant()),
            Kind::Scaled { inner, ell } => inner.integral().map(|i| i * ell.powi(-4)),
        }
    }
}

/// `V(M z)`; the support radius grows by the largest eigenvalue of `M^{-1}`.
pub fn transform_by_metric(v: &Potential6D, metric: &MetricM) -> Potential6D {
    let support = v.support / metric.eigenvalues()[0];
    Potential6D {
        kind: Kind::Transformed { inner: Box::new(v.clone()), metric: *metric },
        support,
        symmetry: SymmetryCertificate::Unchecked,
    }
}

fn product_triplet_integral(h: &RadialPotential) -> f64 {
    // int h(|x|) h(|y|) h(|x-y|) dx dy = 8 pi^2 int r^2 s^2 h(r) h(s) int_{-1}^{1} h(sqrt(r^2+s^2-2rsc)) dc
    let r0 = h.support_radius();
    if r0 == 0.0 {
        return 0.0;
    }
    let panels = 48;
    8.0 * PI * PI
        * gauss_legendre(
            |r| {
                r * r
                    * h.value(r)
                    * gauss_legendre(
                        |s| {
                            s * s
                                * h.value(s)
                                * gauss_legendre(
                                    |c| h.value((r * r + s * s - 2.0 * r * s * c).max(0.0).sqrt()),
                                    -1.0,
                                    1.0,
                                    panels,
                                )
                        },
                        0.0,
                        r0,
                        panels,
                    )
            },
            0.0,
            r0,
            panels,
        )
}

fn multilinear(n: usize, half_width: f64, values: &[f64], z: &Point6) -> f64 {
    let h = 2.0 * half_width / (n as f64 - 1.0);
    let mut base = [0usize; 6];
    let mut frac = [0.0; 6];
    for k in 0..6 {
        let t = (z[k] + half_width) / h;
        if !(0.0..=(n - 1) as f64).contains(&t) {
            return 0.0;
        }
        let i = (t.floor() as usize).min(n - 2);
        base[k] = i;
        frac[k] = t - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..64usize {
        let mut w = 1.0;
        let mut idx = 0usize;
        for k in 0..6 {
            let bit = (corner >> k) & 1;
            w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            idx = idx * n + base[k] + bit;
        }
        if w != 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Index of the first sample whose violation exceeded the tolerance.
    pub first_violation: Option<usize>,
}

/// Uniform sample of the ball of radius `radius` in `R^6`.
pub(crate) fn sample_ball6(rng: &mut ChaCha8Rng, radius: f64) -> Point6 {
    let mut z = [0.0; 6];
    for pair in 0..3 {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        z[2 * pair] = r * (2.0 * PI * u2).cos();
        z[2 * pair + 1] = r * (2.0 * PI * u2).sin();
    }
    let norm = z.iter().map(|c| c * c).sum::<f64>().sqrt();
    let scale = radius * rng.gen::<f64>().powf(1.0 / 6.0) / norm;
    z.iter_mut().for_each(|c| *c *= scale);
    z
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Samples the two three-body identities `V(x,y) = V(y,x)` and
/// `V(x-y, x-z) = V(y-x, y-z) = V(z-y, z-x)` at seeded points in the support ball.
pub fn check_three_body_symmetry(
    v: &Potential6D,
    sample_count: usize,
    tolerance: f64,
    seed: u64,
) -> Result<SymmetryReport> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count", "need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = if v.support > 0.0 { v.support } else { 1.0 };
    let mut max_violation: f64 = 0.0;
    let mut first_violation = None;
    for s in 0..sample_count {
        let z = sample_ball6(&mut rng, radius);
        let (a, b) = ([z[0], z[1], z[2]], [z[3], z[4], z[5]]);
        let pt = |p: [f64; 3], q: [f64; 3]| [p[0], p[1], p[2], q[0], q[1], q[2]];
        let neg = |p: [f64; 3]| [-p[0], -p[1], -p[2]];
        let sub = |p: [f64; 3], q: [f64; 3]| [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        // Particles at x = 0, y = -a, z = -b, so that (x - y, x - z) = (a, b).
        let vals = [
            v.value(&pt(a, b)),
            v.value(&pt(b, a)),
            v.value(&pt(neg(a), sub(b, a))),
            v.value(&pt(sub(a, b), neg(b))),
        ];
        if let Some(&bad) = vals.iter().find(|x| **x < 0.0 || x.is_nan()) {
            return Err(Error::NegativePotential { sample: s, value: bad });
        }
        let viol = rel_gap(vals[0], vals[1])
            .max(rel_gap(vals[0], vals[2]))
            .max(rel_gap(vals[0], vals[3]));
        if viol > tolerance && first_violation.is_none() {
            first_violation = Some(s);
        }
        max_violation = max_violation.max(viol);
    }
    Ok(SymmetryReport {
        samples: sample_count,
        max_violation,
        tolerance,
        passed: max_violation <= tolerance,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn metric_entries_and_square() {
        let m = make_metric_m();
        let s = 2.0 * 2f64.sqrt();
        assert!((m.block[0][0] - (3f64.sqrt() + 1.0) / s).abs() < 1e-15);
        assert!((m.block[0][1] - (3f64.sqrt() - 1.0) / s).abs() < 1e-15);
        let sq = m.square();
        let expect = [[1.0, 0.5], [0.5, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((sq[i][j] - expect[i][j]).abs() < 1e-14);
            }
        }
        assert_eq!(make_metric_m(), m);
    }

    #[test]
    fn metric_determinant_matches_assembled_6x6() {
        let m = make_metric_m();
        let mut big = DMatrix::<f64>::zeros(6, 6);
        for i in 0..3 {
            big[(i, i)] = m.block[0][0];
            big[(i, i + 3)] = m.block[0][1];
            big[(i + 3, i)] = m.block[1][0];
            big[(i + 3, i + 3)] = m.block[1][1];
        }
        let det = big.determinant();
        assert!((det - m.determinant()).abs() < 1e-14);
        assert!((det - (3f64.sqrt() / 2.0).powi(3)).abs() < 1e-14);
        assert!((det - 0.649_519).abs() < 1e-6);
        let ev = big.symmetric_eigenvalues();
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((ev[5] - 1.5f64.sqrt()).abs() < 1e-14);
        let [lo, hi] = m.eigenvalues();
        assert!((lo - ev[0]).abs() < 1e-14 && (hi - ev[5]).abs() < 1e-14);
    }

    #[test]
    fn square_well_values() {
        let v = RadialPotential::square_well(3, 2.0, 1.0).unwrap();
        assert_eq!(v.value(0.5), 2.0);
        assert_eq!(v.value(1.0), 2.0);
        assert_eq!(v.nodal_value(1.0), 1.0);
        assert_eq!(v.value(1.0 + 1e-12), 0.0);
        assert!((v.integral() - 2.0 * 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_height_names_v0() {
        let err = RadialPotential::square_well(3, -1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("v0"));
    }

    #[test]
    fn gaussian_default_cutoff_and_integral() {
        let g = RadialPotential::gaussian(3, 1.0, 1.0, None).unwrap();
        assert_eq!(g.support_radius(), 6.0);
        // (2 pi)^{3/2} up to the e^{-18} tail
        assert!((g.integral() - (2.0 * PI).powf(1.5)).abs() < 1e-5);
    }

    #[test]
    fn tabulated_parsing_and_interpolation() {
        let v = RadialPotential::from_profile_text(3, "# r v\n0 2\n0.5, 1\n1 0\n").unwrap();
        assert_eq!(v.value(0.25), 1.5);
        assert_eq!(v.value(2.0), 0.0);
        assert!(RadialPotential::from_profile_text(3, "0 1\n0 2\n").is_err());
        assert!(RadialPotential::from_profile_text(3, "0 1 3\n").is_err());
        // cone of height 2 on [0,1] in 3D: 4 pi int 2(1-r) r^2 = 8 pi / 12
        let cone = RadialPotential::tabulated(3, vec![0.0, 1.0], vec![2.0, 0.0]).unwrap();
        assert!((cone.integral() - 8.0 * PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn symmetry_of_product_triplet() {
        let h = RadialPotential::gaussian(3, 1.0, 0.7, None).unwrap();
        let v = Potential6D::product_triplet(h);
        let rep = check_three_body_symmetry(&v, 500, 1e-12, 7).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_violation < 1e-13, "{rep:?}");
    }

    #[test]
    fn symmetry_of_hyperradial_family() {
        let w = RadialPotential::gaussian(6, 2.0, 1.0, None).unwrap();
        let v = Potential6D::isotropic_after_m(w).unwrap();
        let rep = check_three_body_symmetry(&v, 500, 1e-12, 3).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn asymmetric_potential_fails_at_first_sample() {
        let v = Potential6D::custom("x_only", 4.0, |z| (-(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])).exp());
        let rep = check_three_body_symmetry(&v, 50, 1e-8, 1).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.first_violation, Some(0));
    }

    #[test]
    fn zero_potential_passes_with_zero_violation() {
        let rep = check_three_body_symmetry(&Potential6D::zero(), 20, 0.0, 1).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.max_violation, 0.0);
    }

    #[test]
    fn negative_evaluator_rejected() {
        let v = Potential6D::custom("neg", 1.0, |_| -1.0);
        assert!(matches!(
            check_three_body_symmetry(&v, 5, 1e-8, 1),
            Err(Error::NegativePotential { .. })
        ));
    }

    #[test]
    fn transform_identity_is_pointwise_equal() {
        let h = RadialPotential::gaussian(3, 1.0, 0.5, None).unwrap();
        let v = Potential6D::product_triplet(h);
        let t = transform_by_metric(&v, &MetricM::identity());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = sample_ball6(&mut rng, 2.0);
            assert_eq!(v.value(&z), t.value(&z));
        }
        assert_eq!(t.support_radius(), v.support_radius());
    }

    #[test]
    fn transform_of_isotropic_potential() {
        let w = RadialPotential::gaussian(6, 1.0, 1.0, Some(3.0)).unwrap();
        let iso = Potential6D::custom("iso", 3.0, {
            let w = w.clone();
            move |z| w.value(z.iter().map(|c| c * c).sum::<f64>().sqrt())
        });
        let m = make_metric_m();
        let t = transform_by_metric(&iso, &m);
        assert!((t.support_radius() - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        // eigen-directions of the block: (1,1)/sqrt2 -> sqrt(3/2), (1,-1)/sqrt2 -> sqrt(1/2)
        let r = 0.9;
        let c = r / 2f64.sqrt();
        let plus = [c, 0.0, 0.0, c, 0.0, 0.0];
        let minus = [c, 0.0, 0.0, -c, 0.0, 0.0];
        assert!((t.value(&plus) - w.value(1.5f64.sqrt() * r)).abs() < 1e-14);
        assert!((t.value(&minus) - w.value(0.5f64.sqrt() * r)).abs() < 1e-14);
    }

    #[test]
    fn transformed_isotropic_after_m_is_radial() {
        let w = RadialPotential::gaussian(6, 1.0, 1.0, Some(4.0)).unwrap();
        let v = Potential6D::isotropic_after_m(w.clone()).unwrap();
        let t = transform_by_metric(&v, &make_metric_m());
        assert_eq!(t.isotropic_profile(), Some(w.clone()));
        assert!(t.support_radius() >= 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let z = sample_ball6(&mut rng, 4.0);
            let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((t.value(&z) - w.value(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn integrals_of_six_dimensional_families() {
        let w = RadialPotential::square_well(6, 1.0, 1.0).unwrap();
        let v = Potential6D::isotropic_after_m(w.clone()).unwrap();
        assert!((v.integral().unwrap() - make_metric_m().determinant() * PI.powi(3) / 6.0).abs() < 1e-12);
        let s = v.scaled(2.0);
        assert!((s.integral().unwrap() - v.integral().unwrap() / 16.0).abs() < 1e-12);
        // Gaussian product triplet: h = exp(-r^2/2) gives a Gaussian integral in closed form.
        let h = RadialPotential::gaussian(3, 1.0, 1.0, Some(9.0)).unwrap();
        let p = Potential6D::product_triplet(h);
        // exponent -(|x|^2+|y|^2+|x-y|^2)/2 = -z^T A z / 2 with A = [[2,-1],[-1,2]] per axis
        let exact = (2.0 * PI).powi(3) / 3f64.powf(1.5);
        assert!((p.integral().unwrap() - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn families_nonnegative_and_compact() {
        let families = vec![
            Potential6D::zero(),
            Potential6D::product_triplet(RadialPotential::square_well(3, 2.0, 1.0).unwrap()),
            Potential6D::product_triplet(RadialPotential::gaussian(3, 1.0, 0.5, None).unwrap()),
            Potential6D::isotropic_after_m(RadialPotential::gaussian(6, 3.0, 1.0, Some(3.0)).unwrap()).unwrap(),
            Potential6D::isotropic_after_m(
                RadialPotential::tabulated(6, vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.2]).unwrap(),
            )
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in families {
            let r0 = v.support_radius();
            for _ in 0..10_000 {
                let z = sample_ball6(&mut rng, 1.5 * r0.max(0.5));
                let val = v.value(&z);
                assert!(val >= 0.0);
                let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
                if r > r0 {
                    assert_eq!(val, 0.0, "{} nonzero outside support", v.family_name());
                }
            }
        }
    }
}
