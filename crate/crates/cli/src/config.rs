//! TOML run configuration.

use bec3_core::bogoliubov::{IterativeOptions, PlusConvention, SpectrumMethod};
use bec3_core::gp::{DropletBox, GPOptions, GPProblem};
use bec3_core::potentials::{Potential6D, RadialPotential};
use bec3_core::scattering::{ModifiedMethod, ModifiedOptions};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Scatter,
    Gp,
    Bogoliubov,
    Expand,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Gp => "gp",
            Command::Bogoliubov => "bogoliubov",
            Command::Expand => "expand",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    fn validation(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation { field: field.into(), message: message.into() }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}

impl From<bec3_core::Error> for ConfigError {
    fn from(e: bec3_core::Error) -> Self {
        match e {
            bec3_core::Error::InvalidParameter { field, reason } => ConfigError::Validation { field, message: reason },
            other => ConfigError::Validation { field: "config".into(), message: other.to_string() },
        }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats(), seed: 0, workers: default_workers() }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    SquareWell { v0: f64, radius: f64 },
    Gaussian { amplitude: f64, width: f64, cutoff: Option<f64> },
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
    /// Two-column text file, relative paths resolved against the config file.
    ProfileFile { path: PathBuf },
}

impl PotentialConfig {
    pub fn build(&self, dim: usize, base: &Path) -> Result<RadialPotential, ConfigError> {
        Ok(match self {
            PotentialConfig::SquareWell { v0, radius } => RadialPotential::square_well(dim, *v0, *radius)?,
            PotentialConfig::Gaussian { amplitude, width, cutoff } => {
                RadialPotential::gaussian(dim, *amplitude, *width, *cutoff)?
            }
            PotentialConfig::Tabulated { radii, values } => RadialPotential::tabulated(dim, radii.clone(), values.clone())?,
            PotentialConfig::ProfileFile { path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p).map_err(|e| ConfigError::validation("path", format!("{}: {e}", p.display())))?;
                RadialPotential::from_profile_text(dim, &text)?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeBodyKind {
    /// `w(|M z|)` for a radial profile `w` on `R^6`.
    IsotropicAfterM,
    /// Product of the profile over the three pair distances.
    ProductTriplet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeBodyConfig {
    pub kind: ThreeBodyKind,
    pub method: ModifiedMethod,
    #[serde(default)]
    pub options: ModifiedOptions,
}

fn default_radii() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}

fn default_spacing() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub dim: usize,
    pub potential: PotentialConfig,
    /// Truncation radii as multiples of the support radius.
    #[serde(default = "default_radii")]
    pub truncation_radii: Vec<f64>,
    /// Radial mesh spacing as a fraction of the support radius.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Treat the profile as a three-body potential and compute `b_M`.
    pub three_body: Option<ThreeBodyConfig>,
}

impl ScatterConfig {
    /// Dimension of the radial profile: pair profiles of a product triplet
    /// live on `R^3`.
    pub fn profile_dim(&self) -> usize {
        match &self.three_body {
            Some(tb) if tb.kind == ThreeBodyKind::ProductTriplet => 3,
            _ => self.dim,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropletConfig {
    pub boxes: Vec<DropletBox>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub problem: GPProblem,
    #[serde(default)]
    pub solver: GPOptions,
    /// Run a droplet search over periodic boxes instead of a single solve.
    pub droplet: Option<DropletConfig>,
}

fn default_modes() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BogoliubovConfig {
    pub problem: GPProblem,
    #[serde(default)]
    pub solver: GPOptions,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub method: SpectrumMethod,
    #[serde(default)]
    pub convention: PlusConvention,
    #[serde(default)]
    pub iterative: IterativeOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjectureConfig {
    pub c_tl: f64,
    pub c_gp: f64,
    pub particles: Option<f64>,
    pub gp_energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    pub densities: DensityRange,
    pub b_m: f64,
    pub scattering_length: Option<f64>,
    pub conjecture: Option<ConjectureConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub output: OutputConfig,
    pub scatter: Option<ScatterConfig>,
    pub gp: Option<GpConfig>,
    pub bogoliubov: Option<BogoliubovConfig>,
    pub expand: Option<ExpandConfig>,
    pub verify: Option<VerifyConfig>,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base: PathBuf,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Parses config text; `path` is used for messages and relative paths.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Parse { path: path.to_path_buf(), line, column, message: e.message().to_string() }
    })?;
    cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

impl RunConfig {
    /// Checks that the block for `command` is present and semantically valid.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(ConfigError::validation(
                    "command",
                    format!("config is for `{}`, invoked as `{}`", c.name(), command.name()),
                ));
            }
        }
        if self.output.workers == 0 {
            return Err(ConfigError::validation("workers", "need at least one worker"));
        }
        let missing = || ConfigError::validation(command.name(), format!("missing [{}] block", command.name()));
        match command {
            Command::Scatter => {
                let s = self.scatter.as_ref().ok_or_else(missing)?;
                let v = s.potential.build(s.profile_dim(), &self.base)?;
                if s.truncation_radii.len() < 3 {
                    return Err(ConfigError::validation("truncation_radii", "need at least three radii"));
                }
                if !(s.spacing > 0.0) {
                    return Err(ConfigError::validation("spacing", "must be positive"));
                }
                if let Some(tb) = &s.three_body {
                    if s.dim != 6 {
                        return Err(ConfigError::validation("dim", "three-body potentials need dim = 6"));
                    }
                    if tb.options.points_per_axis < 3 {
                        return Err(ConfigError::validation("points_per_axis", "need at least 3 points"));
                    }
                    build_three_body(tb.kind, v)?;
                }
            }
            Command::Gp => {
                let g = self.gp.as_ref().ok_or_else(missing)?;
                g.problem.validate()?;
                check_solver(&g.solver)?;
            }
            Command::Bogoliubov => {
                let b = self.bogoliubov.as_ref().ok_or_else(missing)?;
                b.problem.validate()?;
                check_solver(&b.solver)?;
                if b.modes == 0 {
                    return Err(ConfigError::validation("modes", "need at least one mode"));
                }
            }
            Command::Expand => {
                let e = self.expand.as_ref().ok_or_else(missing)?;
                let d = &e.densities;
                bec3_core::dilute::log_space(d.min, d.max, d.count)?;
                if !(e.b_m.is_finite() && e.b_m >= 0.0) {
                    return Err(ConfigError::validation("b_m", "must be finite and >= 0"));
                }
                if let Some(a) = e.scattering_length {
                    if !(a.is_finite() && a >= 0.0) {
                        return Err(ConfigError::validation("scattering_length", "must be finite and >= 0"));
                    }
                }
            }
            Command::Verify => {}
        }
        Ok(())
    }
}

fn check_solver(o: &GPOptions) -> Result<(), ConfigError> {
    if !(o.tolerance > 0.0) {
        return Err(ConfigError::validation("tolerance", "must be positive"));
    }
    if !(o.step > 0.0 && o.min_step > 0.0 && o.max_step >= o.step) {
        return Err(ConfigError::validation("step", "need 0 < min_step, 0 < step <= max_step"));
    }
    if o.restarts == 0 {
        return Err(ConfigError::validation("restarts", "need at least one restart"));
    }
    Ok(())
}

pub fn build_three_body(kind: ThreeBodyKind, profile: RadialPotential) -> Result<Potential6D, ConfigError> {
    Ok(match kind {
        ThreeBodyKind::IsotropicAfterM => Potential6D::isotropic_after_m(profile)?,
        ThreeBodyKind::ProductTriplet => Potential6D::product_triplet(profile),
    })
}
