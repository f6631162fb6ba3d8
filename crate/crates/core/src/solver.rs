//! Mass-constrained minimization of `E_{α,λ}` over `0 ≤ ρ ≤ 1`.
//!
//! The default scheme is the damped bathtub iteration
//! `ρ ← (1-τ)ρ + τ·bathtub(ψ(ρ), m)`: its fixed points are exactly the
//! discrete Euler–Lagrange points. The energy along the segment is an exact
//! quadratic in `τ`, so trial steps cost one matrix-vector product.

use serde::{Deserialize, Serialize};

use crate::density::{bathtub_fill, equal_mass_annulus_outer, make_profile, BallSpec, ProfileKind, RadialGrid, RadialProfile};
use crate::energy::{EnergyModel, KernelMatrix};
use crate::error::{FlockError, Result};
use crate::radial_kernel::{KernelParams, QuadratureSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitKind {
    /// `1_{E*}`.
    Ball,
    /// Annulus `(inner, b)` with `b` fixed by the mass.
    Annulus { inner: f64 },
    /// Value ½ on the ball of volume `2m` (or the constant `m / capacity`
    /// when that ball does not fit).
    UniformSlab,
    Custom { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Bathtub,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Initial damping `τ` of every step.
    pub damping: f64,
    /// Damping below which the run stops unconverged.
    pub min_damping: f64,
    pub max_iters: usize,
    pub el_tol: f64,
    pub energy_backtrack: bool,
    pub init: InitKind,
    pub scheme: Scheme,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            min_damping: 2f64.powi(-10),
            max_iters: 500,
            el_tol: 1e-6,
            energy_backtrack: true,
            init: InitKind::Ball,
            scheme: Scheme::Bathtub,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(FlockError::Domain(format!("damping {} must lie in (0, 1]", self.damping)));
        }
        if !(self.el_tol > 0.0) {
            return Err(FlockError::Domain(format!("el_tol {} must be > 0", self.el_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    #[serde(skip)]
    pub profile: RadialProfile,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub multiplier_trace: Vec<f64>,
    pub damping_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Fraction of the mass in the outermost 10% of cells.
    pub outer_mass_fraction: f64,
    pub stop_reason: String,
}

impl SolverReport {
    pub fn final_energy(&self) -> f64 {
        *self.energy_trace.last().unwrap()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_trace.last().unwrap()
    }

    pub fn final_multiplier(&self) -> f64 {
        *self.multiplier_trace.last().unwrap()
    }

    /// Largest energy increase between consecutive iterates, relative to
    /// the energy scale.
    pub fn worst_energy_increase(&self) -> f64 {
        self.energy_trace
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(1e-300))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Discrete Euler–Lagrange residual and multiplier for potential values `psi`.
///
/// The residual is
/// `Σ vol_i [ρ_i (ψ_i - μ)₊ + (1 - ρ_i)(μ - ψ_i)₊] / (m · max_{supp ρ}|ψ|)`,
/// which vanishes iff `ψ ≤ μ` where `ρ = 1`, `ψ = μ` where `0 < ρ < 1` and
/// `ψ ≥ μ` where `ρ = 0`. `μ` minimizes it (a weighted median of `ψ`); when
/// the minimizers form an interval its midpoint is returned.
pub fn el_residual_from_potential(rho: &RadialProfile, psi: &[f64]) -> Result<(f64, f64)> {
    let m = rho.mass();
    if !(m > 0.0) {
        return Err(FlockError::ZeroMass);
    }
    let vol = rho.grid().volumes();
    let v = rho.values();
    let mut order: Vec<usize> = (0..psi.len()).collect();
    order.sort_by(|&a, &b| psi[a].total_cmp(&psi[b]).then(a.cmp(&b)));
    // slope of the residual in μ just above ψ_k: Σ_{ψ ≤ μ} w⁻ - Σ_{ψ > μ} w⁺
    let mut slope: f64 = -(0..psi.len()).map(|i| v[i] * vol[i]).sum::<f64>();
    let mut mu = psi[order[0]];
    let mut k = 0;
    while k < order.len() {
        let level = psi[order[k]];
        while k < order.len() && psi[order[k]] == level {
            let i = order[k];
            slope += v[i] * vol[i] + (1.0 - v[i]) * vol[i];
            k += 1;
        }
        let tol = 1e-14 * m;
        if slope > tol {
            mu = level;
            break;
        }
        if slope.abs() <= tol {
            // flat between this level and the next
            mu = if k < order.len() { 0.5 * (level + psi[order[k]]) } else { level };
            break;
        }
        mu = level;
    }
    let scale = (0..psi.len())
        .filter(|&i| v[i] > 0.0)
        .map(|i| psi[i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let res: f64 = (0..psi.len())
        .map(|i| vol[i] * (v[i] * (psi[i] - mu).max(0.0) + (1.0 - v[i]) * (mu - psi[i]).max(0.0)))
        .sum();
    Ok((res / (m * scale), mu))
}

pub fn el_residual(
    rho: &RadialProfile,
    params: &KernelParams,
    k_a: &KernelMatrix,
    k_r: &KernelMatrix,
) -> Result<(f64, f64)> {
    if k_a.mu() != params.alpha || k_r.mu() != -params.lambda {
        return Err(FlockError::ParameterMismatch("kernel matrices do not match alpha/lambda".into()));
    }
    let psi_a = crate::energy::potential_of_density(rho, k_a)?;
    let psi_r = crate::energy::potential_of_density(rho, k_r)?;
    let psi: Vec<f64> = psi_a.iter().zip(&psi_r).map(|(a, b)| a + b).collect();
    el_residual_from_potential(rho, &psi)
}

/// Initial profile of mass `m` on `grid`.
pub fn initial_profile(init: &InitKind, m: f64, grid: &RadialGrid) -> Result<RadialProfile> {
    let dim = grid.dim();
    let ball = BallSpec::with_volume(dim, m)?;
    let p = match init {
        InitKind::Ball => make_profile(&ProfileKind::Ball { radius: ball.radius }, grid)?,
        InitKind::Annulus { inner } => make_profile(
            &ProfileKind::Annulus { inner: *inner, outer: equal_mass_annulus_outer(dim, ball.radius, *inner) },
            grid,
        )?,
        InitKind::UniformSlab => {
            let wide = BallSpec::with_volume(dim, 2.0 * m)?;
            if wide.radius <= grid.r_max() {
                let b = make_profile(&ProfileKind::Ball { radius: wide.radius }, grid)?;
                RadialProfile::new(grid.clone(), b.values().iter().map(|v| 0.5 * v).collect())?
            } else {
                let c = m / grid.capacity();
                RadialProfile::new(grid.clone(), vec![c; grid.len()])?
            }
        }
        InitKind::Custom { values } => make_profile(&ProfileKind::Custom(values.clone()), grid)?,
    };
    if (p.mass() - m).abs() > 1e-9 * m {
        return Err(FlockError::MassMismatch { mass: p.mass(), ball: m });
    }
    Ok(p)
}

/// Assemble the kernel matrices and run [`minimize_with`].
pub fn minimize(
    params: &KernelParams,
    m: f64,
    grid: &RadialGrid,
    options: &SolverOptions,
    quad: &QuadratureSpec,
) -> Result<SolverReport> {
    check_regime(params)?;
    let model = EnergyModel::assemble(params, grid, quad)?;
    minimize_with(&model, m, options)
}

fn check_regime(params: &KernelParams) -> Result<()> {
    if !params.energy_regime() {
        return Err(FlockError::Regime(format!(
            "minimization needs lambda < N - 1 (lambda = {}, N = {})",
            params.lambda, params.dim
        )));
    }
    Ok(())
}

fn combined_apply(model: &EnergyModel, v: &[f64]) -> Vec<f64> {
    let a = model.attract.apply(v);
    let r = model.repel.apply(v);
    a.iter().zip(&r).map(|(x, y)| x + y).collect()
}

/// Mass-preserving projection onto `0 ≤ ρ ≤ 1` of `y` (cell values), by
/// bisection on a uniform shift.
fn project(y: &[f64], m: f64, grid: &RadialGrid) -> Vec<f64> {
    let vol = grid.volumes();
    let mass = |c: f64| -> f64 { y.iter().zip(vol).map(|(v, w)| (v - c).clamp(0.0, 1.0) * w).sum() };
    let (mut lo, mut hi) = (
        y.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0,
        y.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    y.iter().map(|v| (v - c).clamp(0.0, 1.0)).collect()
}

type Polished = (RadialProfile, f64, f64, f64);

/// The bathtub profile of `psi` if it differs from `rho`, does not raise the
/// energy and has no larger residual.
fn polish(
    model: &EnergyModel,
    rho: &RadialProfile,
    psi: &[f64],
    m: f64,
    energy: f64,
    res: f64,
) -> Result<Option<Polished>> {
    let grid = rho.grid();
    let target = bathtub_fill(psi, m, grid)?.0;
    if target.l1_distance(rho)? <= 1e-12 * m {
        return Ok(None);
    }
    let w = combined_apply(model, target.values());
    let e = 0.5 * target.values().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    if e > energy + 1e-12 * energy.abs() {
        return Ok(None);
    }
    let psi_t: Vec<f64> = w.iter().zip(grid.volumes()).map(|(a, v)| a / v).collect();
    let (r, u) = el_residual_from_potential(&target, &psi_t)?;
    if r > res {
        return Ok(None);
    }
    Ok(Some((target, e, r, u)))
}

/// Run the iteration on pre-assembled matrices.
pub fn minimize_with(model: &EnergyModel, m: f64, options: &SolverOptions) -> Result<SolverReport> {
    options.validate()?;
    check_regime(&model.params)?;
    let grid = model.grid().clone();
    let capacity = grid.capacity();
    if !(m > 0.0) || m > capacity {
        return Err(FlockError::InfeasibleMass { mass: m, capacity });
    }
    let vol = grid.volumes().to_vec();
    let mut rho = initial_profile(&options.init, m, &grid)?;
    let mut w_rho = combined_apply(model, rho.values());
    let energy_of = |v: &[f64], wv: &[f64]| 0.5 * v.iter().zip(wv).map(|(a, b)| a * b).sum::<f64>();
    let mut energy = energy_of(rho.values(), &w_rho);

    let mut report = SolverReport {
        profile: rho.clone(),
        energy_trace: vec![energy],
        residual_trace: vec![],
        multiplier_trace: vec![],
        damping_trace: vec![],
        converged: false,
        iterations: 0,
        outer_mass_fraction: 0.0,
        stop_reason: String::new(),
    };

    let mut iter = 0;
    loop {
        let psi: Vec<f64> = w_rho.iter().zip(&vol).map(|(a, v)| a / v).collect();
        let (res, mu) = el_residual_from_potential(&rho, &psi)?;
        report.residual_trace.push(res);
        report.multiplier_trace.push(mu);
        if res <= options.el_tol {
            // damped steps leave geometric remnants of the start; take the
            // undamped bathtub step when it is no worse
            if let Some((p, e, r, u)) = polish(model, &rho, &psi, m, energy, res)? {
                rho = p;
                iter += 1;
                report.energy_trace.push(e);
                report.damping_trace.push(1.0);
                report.residual_trace.push(r);
                report.multiplier_trace.push(u);
            }
            report.converged = true;
            report.stop_reason = "el residual below tolerance".into();
            break;
        }
        if iter >= options.max_iters {
            report.stop_reason = "iteration limit".into();
            break;
        }
        let target: Vec<f64> = match options.scheme {
            Scheme::Bathtub => bathtub_fill(&psi, m, &grid)?.0.into_values(),
            Scheme::ProjectedGradient => {
                let scale = psi.iter().map(|p| p.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                let y: Vec<f64> = rho.values().iter().zip(&psi).map(|(r, p)| r - p / scale).collect();
                project(&y, m, &grid)
            }
        };
        let d: Vec<f64> = target.iter().zip(rho.values()).map(|(t, r)| t - r).collect();
        let w_d = combined_apply(model, &d);
        let lin: f64 = d.iter().zip(&w_rho).map(|(a, b)| a * b).sum();
        let quad: f64 = d.iter().zip(&w_d).map(|(a, b)| a * b).sum();
        let mut tau = options.damping;
        let accepted = loop {
            let trial = energy + tau * lin + 0.5 * tau * tau * quad;
            if !options.energy_backtrack || trial <= energy + 1e-12 * energy.abs() {
                break Some(tau);
            }
            tau *= 0.5;
            if tau < options.min_damping {
                break None;
            }
        };
        let Some(tau) = accepted else {
            report.stop_reason = "damping fell below the floor".into();
            break;
        };
        let values: Vec<f64> = rho
            .values()
            .iter()
            .zip(&target)
            .map(|(r, t)| ((1.0 - tau) * r + tau * t).clamp(0.0, 1.0))
            .collect();
        rho = RadialProfile::new(grid.clone(), values)?;
        w_rho = combined_apply(model, rho.values());
        energy = energy_of(rho.values(), &w_rho);
        iter += 1;
        report.energy_trace.push(energy);
        report.damping_trace.push(tau);
    }
    report.iterations = iter;
    let outer_start = grid.len() - grid.len().div_ceil(10);
    report.outer_mass_fraction = rho.values()[outer_start..]
        .iter()
        .zip(&vol[outer_start..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / rho.mass();
    report.profile = rho;
    Ok(report)
}
