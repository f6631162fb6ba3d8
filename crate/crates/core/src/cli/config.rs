//! Experiment configuration read from a TOML file.

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::radial_kernel::{KernelParams, QuadratureSpec};
use crate::solver::{InitKind, SolverOptions};
use crate::verify::FamilySpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub cells: usize,
    /// Grid extent in units of the ball radius of the largest mass.
    pub r_max_factor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { cells: 1024, r_max_factor: 2.5 }
    }
}

/// Mass given as a ball radius (the mass is the volume of that ball).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassConfig {
    pub radius: f64,
    /// Radii of the scaling ladder.
    pub ladder: Vec<f64>,
}

impl Default for MassConfig {
    fn default() -> Self {
        Self { radius: 16.0, ladder: vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// Table covers `[0, r_max]` of the unit ball.
    pub r_max: f64,
    pub points: usize,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { r_max: 3.0, points: 301 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub family: FamilySpec,
    pub family_cells: usize,
    pub shell_cells: usize,
    pub shell_potential_thetas: Vec<f64>,
    pub competitor_count: usize,
    pub competitor_cells: usize,
    pub el_radii: Vec<f64>,
    pub el_samples: usize,
    pub dyadic_levels: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            family: FamilySpec::default(),
            family_cells: 250,
            shell_cells: 320,
            shell_potential_thetas: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            competitor_count: 100,
            competitor_cells: 250,
            el_radii: vec![0.5, 0.7, 0.8, 1.0, 2.0, 10.0, 100.0],
            el_samples: 10_000,
            dyadic_levels: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub params: KernelParams,
    pub grid: GridConfig,
    pub mass: MassConfig,
    pub solver: SolverOptions,
    pub quadrature: QuadratureSpec,
    pub potential: PotentialConfig,
    pub verify: VerifyConfig,
    /// Where results go; left out of the serialized form so the config hash
    /// and the outputs don't depend on it.
    #[serde(skip_serializing)]
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            params: KernelParams { dim: 3, alpha: 2.0, lambda: 1.0 },
            grid: GridConfig::default(),
            mass: MassConfig::default(),
            // the minimizer runs start away from the ball; the scaling ladder
            // rescales this annulus to (0.8R, b) at every radius
            solver: SolverOptions { init: InitKind::Annulus { inner: 12.8 }, ..SolverOptions::default() },
            quadrature: QuadratureSpec::default(),
            potential: PotentialConfig::default(),
            verify: VerifyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn field_err(field: &str, message: impl Into<String>) -> FlockError {
    FlockError::Config { field: field.into(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be a positive number (got {v})")))
    }
}

/// Dotted name of the key a toml error points at: the enclosing `[table]`
/// plus either the key named in the message or the key on the error's line.
fn locate_field(text: &str, at: usize, msg: &str) -> String {
    let before = &text[..at];
    let line_end = text[at..].find('\n').map_or(text.len(), |i| at + i);
    let table = text[..line_end]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = msg.split('`').nth(1).map(str::to_string).or_else(|| {
        line.split_once('=').map(|(k, _)| k.trim().to_string()).filter(|k| !k.is_empty())
    });
    match (table, key) {
        (Some(t), Some(k)) if !k.starts_with(&format!("{t}.")) => format!("{t}.{k}"),
        (_, Some(k)) => k,
        (Some(t), None) => t,
        (None, None) => "<config>".into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().trim().to_string();
            let at = e.span().map(|s| s.start).unwrap_or(0).min(text.len());
            field_err(&locate_field(text, at, &msg), msg)
        })?;
        Ok(cfg)
    }

    /// Check every field against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if p.dim < 1 {
            return Err(field_err("params.dim", "must be at least 1"));
        }
        positive("params.alpha", p.alpha)?;
        if !(p.lambda > 0.0 && p.lambda < p.dim as f64) {
            return Err(field_err("params.lambda", format!("must lie in (0, {})", p.dim)));
        }
        if self.grid.cells < 2 {
            return Err(field_err("grid.cells", "need at least 2 cells"));
        }
        positive("grid.r_max_factor", self.grid.r_max_factor)?;
        if self.grid.r_max_factor <= 1.0 {
            return Err(field_err("grid.r_max_factor", "the ball must fit inside the grid"));
        }
        positive("mass.radius", self.mass.radius)?;
        for r in &self.mass.ladder {
            positive("mass.ladder", *r)?;
        }
        let s = &self.solver;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(field_err("solver.damping", "must lie in (0, 1]"));
        }
        positive("solver.el_tol", s.el_tol)?;
        positive("solver.min_damping", s.min_damping)?;
        if self.quadrature.nodes_per_cell < 1 || self.quadrature.nodes_per_cell > crate::quadrature::MAX_CACHED_NODES {
            return Err(field_err(
                "quadrature.nodes_per_cell",
                format!("must lie in 1..={}", crate::quadrature::MAX_CACHED_NODES),
            ));
        }
        positive("quadrature.abs_tol", self.quadrature.abs_tol)?;
        positive("quadrature.rel_tol", self.quadrature.rel_tol)?;
        positive("potential.r_max", self.potential.r_max)?;
        if self.potential.points < 2 {
            return Err(field_err("potential.points", "need at least 2 points"));
        }
        let v = &self.verify;
        positive("verify.family.radius", v.family.radius)?;
        for (name, cells) in [
            ("verify.family_cells", v.family_cells),
            ("verify.shell_cells", v.shell_cells),
            ("verify.competitor_cells", v.competitor_cells),
        ] {
            if cells < 8 {
                return Err(field_err(name, "need at least 8 cells"));
            }
        }
        for t in &v.shell_potential_thetas {
            if !(*t > 0.0 && *t <= 1.0) {
                return Err(field_err("verify.shell_potential_thetas", format!("theta {t} is outside (0, 1]")));
            }
        }
        for r in &v.el_radii {
            positive("verify.el_radii", *r)?;
        }
        if v.el_samples < 10 {
            return Err(field_err("verify.el_samples", "need at least 10 samples"));
        }
        if self.output.dir.is_empty() {
            return Err(field_err("output.dir", "must not be empty"));
        }
        Ok(())
    }

    /// Override every grid resolution of the run.
    pub fn set_cells(&mut self, cells: usize) {
        self.grid.cells = cells;
        self.verify.family_cells = cells;
        self.verify.shell_cells = cells;
        self.verify.competitor_cells = cells;
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| field_err("seed", "randomized suites need a seed (config `seed` or --seed)"))
    }
}
