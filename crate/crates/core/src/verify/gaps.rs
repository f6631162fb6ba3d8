//! Quadratic gap suites: Riesz gains for the attractive and repulsive parts,
//! the quadratic loss of shell perturbations, the thin-shell potential bound
//! and the bathtub / competitor properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::family::{profile_family, random_profiles, FamilySpec};
use super::{Check, VerifyRecord};
use crate::density::{
    asymmetry, bathtub_fill, competitor, competitor_properties, make_profile, profile_breakpoints, BallSpec,
    ProfileKind, RadialGrid, RadialProfile, ShellPattern,
};
use crate::energy::{interaction, EnergyModel, KernelMatrix};
use crate::error::{FlockError, Result};
use crate::quadrature::geomspace;
use crate::radial_kernel::{ball_potential, ball_volume, shell_potential, KernelParams, QuadratureSpec};
use crate::stats::{fit_line, log_log_slope};

/// Below this asymmetry a profile counts as a ball and ratios are reported as
/// `+∞`.
const BALL_ASYMMETRY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapOutcome {
    /// Energy gain relative to the equal-mass ball (`≥ 0` by Riesz).
    pub gap: f64,
    pub asymmetry: f64,
    /// `gap / (m^{2 ± μ/N} A²)`, `+∞` when `A = 0`.
    pub ratio: f64,
    /// Energy of the reference ball on the same grid.
    pub reference: f64,
}

fn ball_on_grid(rho: &RadialProfile) -> Result<RadialProfile> {
    let m = rho.mass();
    let ball = BallSpec::with_volume(rho.grid().dim(), m)?;
    make_profile(&ProfileKind::Ball { radius: ball.radius }, rho.grid())
}

fn gap_outcome(gap: f64, a: f64, norm: f64, reference: f64) -> GapOutcome {
    let ratio = if a <= BALL_ASYMMETRY { f64::INFINITY } else { gap / (norm * a * a) };
    GapOutcome { gap, asymmetry: a, ratio, reference }
}

fn checked_kernel(k: &KernelMatrix, mu: f64, rho: &RadialProfile) -> Result<()> {
    if k.mu() != mu {
        return Err(FlockError::ParameterMismatch(format!("kernel exponent {} where {mu} is needed", k.mu())));
    }
    k.check_grid(rho.grid())
}

/// `I_α[ρ] - I_α[1_{E*}]` normalized by `m^{2+α/N} A[ρ]²`.
pub fn check_attractive_gap(rho: &RadialProfile, params: &KernelParams, k_a: &KernelMatrix) -> Result<GapOutcome> {
    checked_kernel(k_a, params.alpha, rho)?;
    let ball = ball_on_grid(rho)?;
    let reference = interaction(&ball, &ball, k_a)?;
    let gap = interaction(rho, rho, k_a)? - reference;
    let (a, _) = asymmetry(rho)?;
    let n = params.dim as f64;
    Ok(gap_outcome(gap, a, rho.mass().powf(2.0 + params.alpha / n), reference))
}

/// `I_{-λ}[1_{E*}] - I_{-λ}[ρ]` normalized by `m^{2-λ/N} A[ρ]²`.
pub fn check_repulsive_gap(rho: &RadialProfile, params: &KernelParams, k_r: &KernelMatrix) -> Result<GapOutcome> {
    checked_kernel(k_r, -params.lambda, rho)?;
    let ball = ball_on_grid(rho)?;
    let reference = interaction(&ball, &ball, k_r)?;
    let gap = reference - interaction(rho, rho, k_r)?;
    let (a, _) = asymmetry(rho)?;
    let n = params.dim as f64;
    Ok(gap_outcome(gap, a, rho.mass().powf(2.0 - params.lambda / n), reference))
}

fn gap_record(
    statement: &str,
    params: &KernelParams,
    spec: &FamilySpec,
    grid: &RadialGrid,
    seed: u64,
    outcomes: &[(f64, f64, GapOutcome)],
) -> VerifyRecord {
    let mut rec = VerifyRecord::new(statement, &["kind", "parameter", "asymmetry", "gap", "ratio"]);
    let budget = grid.max_width() / spec.radius;
    rec.input("params", params).input("family", spec).input("cells", grid.len()).input("seed", seed);
    rec.input("r_max", grid.r_max());
    rec.budget = budget;
    let mut min_gap = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut reference: f64 = 0.0;
    for (kind, parameter, o) in outcomes {
        rec.rows.push(vec![*kind, *parameter, o.asymmetry, o.gap, o.ratio]);
        min_gap = min_gap.min(o.gap / o.reference.abs());
        reference = o.reference;
        if o.ratio.is_finite() {
            min_ratio = min_ratio.min(o.ratio);
            max_ratio = max_ratio.max(o.ratio);
        }
    }
    rec.fit("c_hat", min_ratio).fit("ratio_max", max_ratio).fit("ball_energy", reference);
    rec.check(Check::at_least("min_relative_gap", min_gap, 0.0, budget));
    rec.check(Check::holds("min_ratio_positive", min_ratio > 0.0 && min_ratio.is_finite()));
    rec.check(Check::holds("max_ratio_finite", max_ratio.is_finite() && max_ratio > 0.0));
    rec
}

/// Attractive and repulsive gap suites over the seeded profile family on a
/// grid of `cells` cells over `[0, 2.5R]` with `R` an edge.
pub fn gap_suites(
    params: &KernelParams,
    spec: &FamilySpec,
    cells: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<(VerifyRecord, VerifyRecord)> {
    let grid = RadialGrid::with_breakpoints(params.dim, 2.5 * spec.radius, cells, &[spec.radius])?;
    let model = EnergyModel::assemble(params, &grid, quad)?;
    let family = profile_family(spec, &grid, seed)?;
    let outcomes: Vec<_> = family
        .par_iter()
        .map(|f| -> Result<_> {
            let a = check_attractive_gap(&f.profile, params, &model.attract)?;
            let r = check_repulsive_gap(&f.profile, params, &model.repel)?;
            Ok(((f.kind.code(), f.parameter, a), (f.kind.code(), f.parameter, r)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (att, rep): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok((
        gap_record("attractive-gap", params, spec, &grid, seed, &att),
        gap_record("repulsive-gap", params, spec, &grid, seed, &rep),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellDeficit {
    pub theta: f64,
    /// `I_{-λ}[1_{E*}] - I_{-λ}[ρ]`.
    pub deficit: f64,
    /// `deficit / (m^{2-λ/N} θ²)`.
    pub ratio: f64,
    pub asymmetry: f64,
    /// `deficit / (m^{2-λ/N} A²)`.
    pub gap_ratio: f64,
}

/// Repulsive loss of the `pattern` shell perturbation of the ball of volume
/// `m`, on a grid of `cells` cells over `[0, 1.6R]` with every jump of the
/// profile an edge.
pub fn check_shell_deficit(
    theta: f64,
    params: &KernelParams,
    m: f64,
    pattern: ShellPattern,
    cells: usize,
    quad: &QuadratureSpec,
) -> Result<ShellDeficit> {
    if !params.energy_regime() {
        return Err(FlockError::Regime(format!(
            "shell deficit needs lambda < N - 1 (lambda = {}, N = {})",
            params.lambda, params.dim
        )));
    }
    let ball = BallSpec::with_volume(params.dim, m)?;
    let kind = ProfileKind::ShellPerturbedBall { radius: ball.radius, theta, pattern };
    let mut breaks = profile_breakpoints(&kind, params.dim)?;
    breaks.retain(|&b| b > 0.0);
    let grid = RadialGrid::with_breakpoints(params.dim, 1.6 * ball.radius, cells, &breaks)?;
    let rho = make_profile(&kind, &grid)?;
    let k_r = KernelMatrix::assemble(&grid, -params.lambda, quad)?;
    let reference = make_profile(&ProfileKind::Ball { radius: ball.radius }, &grid)?;
    let deficit = interaction(&reference, &reference, &k_r)? - interaction(&rho, &rho, &k_r)?;
    let norm = m.powf(2.0 - params.lambda / params.dim as f64);
    let (a, _) = if theta == 0.0 { (0.0, 0.0) } else { asymmetry(&rho)? };
    let ratio = if theta == 0.0 { 0.0 } else { deficit / (norm * theta * theta) };
    let gap_ratio = if a <= BALL_ASYMMETRY { f64::INFINITY } else { deficit / (norm * a * a) };
    Ok(ShellDeficit { theta, deficit, ratio, asymmetry: a, gap_ratio })
}

fn pattern_code(p: ShellPattern) -> f64 {
    ShellPattern::ALL.iter().position(|&q| q == p).unwrap_or(0) as f64
}

/// θ-ladder of shell deficits for every pattern at the mass of the unit
/// ball: deficits are nonnegative, `deficit / θ²` stays bounded, the log-log
/// slope over `θ ≤ 0.3` is 2, and `θ / A` stays bounded (the sandwich with
/// the repulsive gain).
pub fn shell_deficit_suite(params: &KernelParams, cells: usize, quad: &QuadratureSpec) -> Result<VerifyRecord> {
    let m = ball_volume(params.dim, 1.0);
    let thetas = geomspace(0.02, 0.5, 12);
    let jobs: Vec<(ShellPattern, f64)> =
        ShellPattern::ALL.iter().flat_map(|&p| thetas.iter().map(move |&t| (p, t))).collect();
    let results = jobs
        .par_iter()
        .map(|&(p, t)| check_shell_deficit(t, params, m, p, cells, quad))
        .collect::<Result<Vec<_>>>()?;

    let mut rec = VerifyRecord::new(
        "shell-deficit",
        &["pattern", "theta", "deficit", "ratio", "asymmetry", "gap_ratio"],
    );
    rec.input("params", params).input("cells", cells).input("mass", m).input("r_max", 1.6);
    rec.input("patterns", ShellPattern::ALL);
    rec.budget = 1.6 / cells as f64;
    let norm = m.powf(2.0 - params.lambda / params.dim as f64);
    let ball_energy = {
        let grid = RadialGrid::with_breakpoints(params.dim, 1.6, cells, &[1.0])?;
        let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &grid)?;
        interaction(&ball, &ball, &KernelMatrix::assemble(&grid, -params.lambda, quad)?)?
    };
    let mut min_def = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut theta_over_a: Vec<f64> = Vec::new();
    for (&(p, _), r) in jobs.iter().zip(&results) {
        rec.rows.push(vec![pattern_code(p), r.theta, r.deficit, r.ratio, r.asymmetry, r.gap_ratio]);
        min_def = min_def.min(r.deficit / ball_energy);
        max_ratio = max_ratio.max(r.ratio);
        theta_over_a.push(r.theta / r.asymmetry);
    }
    rec.check(Check::at_least("min_relative_deficit", min_def, 0.0, rec.budget));
    rec.fit("ratio_max", max_ratio);
    rec.check(Check::holds("ratio_max_finite", max_ratio.is_finite()));
    for &p in &ShellPattern::ALL {
        let (xs, ys): (Vec<f64>, Vec<f64>) = jobs
            .iter()
            .zip(&results)
            .filter(|((q, t), r)| *q == p && *t <= 0.3 + 1e-12 && r.deficit > 0.0)
            .map(|(_, r)| (r.theta, r.deficit))
            .unzip();
        let name = format!("{p:?}").to_lowercase();
        let slope = log_log_slope(&xs, &ys);
        rec.fit(&format!("slope_{name}"), slope);
        rec.check(Check::within(&format!("slope_{name}"), slope, 2.0, 0.1));
        // diagnostic: deficit / θ² is close to linear in θ, so its intercept
        // is the quadratic coefficient even where the slope fit is bent
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .filter(|(x, _)| **x <= 0.1)
            .map(|(x, y)| (*x, y / (norm * x * x)))
            .collect();
        if pts.len() >= 2 {
            let (slope_t, c0) = fit_line(&pts);
            rec.fit(&format!("ratio_at_zero_{name}"), c0);
            rec.fit(&format!("ratio_slope_{name}"), slope_t);
        }
    }
    let lo = theta_over_a.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = theta_over_a.iter().cloned().fold(0.0, f64::max);
    rec.fit("theta_over_a_min", lo).fit("theta_over_a_max", hi);
    rec.check(Check::holds("theta_comparable_to_a", lo > 0.0 && hi.is_finite()));
    let gains: Vec<f64> = results.iter().map(|r| r.gap_ratio).filter(|g| g.is_finite()).collect();
    let gain_min = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    rec.fit("gap_ratio_min", gain_min);
    rec.check(Check::holds("gap_ratio_positive", gain_min > 0.0));
    Ok(rec)
}

/// Inner radius `(1-θ)R` and outer radius `R` of the shell of volume `m`.
fn shell_of_mass(dim: usize, m: f64, theta: f64) -> (f64, f64) {
    let n = dim as f64;
    let frac = 1.0 - (1.0 - theta).powf(n);
    let r = (m / (ball_volume(dim, 1.0) * frac)).powf(1.0 / n);
    ((1.0 - theta) * r, r)
}

/// `sup_r ψ(r)` for `ψ` the `-λ` potential of the shell indicator
/// `1_{(1-θ)R < |x| < R}` of volume `m`: dense sampling plus golden-section
/// refinement around the best sample. Returns `(sup, R)`.
pub fn shell_potential_sup(params: &KernelParams, theta: f64, m: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FlockError::ThetaOutOfRange(theta));
    }
    let dim = params.dim;
    let mu = -params.lambda;
    let (a, b) = shell_of_mass(dim, m, theta);
    let psi = |r: f64| shell_potential(mu, r, a, b, dim, quad);
    // the potential is singular-free for λ < N - 1 but has kinks at a and b
    const SAMPLES: usize = 2000;
    let top = 1.5 * b;
    let mut best = (0.0, psi(0.0)?);
    let mut step = top / SAMPLES as f64;
    for k in 1..=SAMPLES {
        let r = top * k as f64 / SAMPLES as f64;
        let v = psi(r)?;
        if v > best.1 {
            best = (r, v);
        }
    }
    for &r in &[a, b, 0.5 * (a + b)] {
        let v = psi(r)?;
        if v > best.1 {
            best = (r, v);
            step = step.min(0.5 * (b - a)).max(1e-12);
        }
    }
    let (mut lo, mut hi) = ((best.0 - step).max(0.0), best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (psi(c)?, psi(d)?);
    while hi - lo > 1e-10 * b {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = psi(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = psi(d)?;
        }
    }
    Ok((best.1.max(fc).max(fd), b))
}

/// Fixed-mass θ-ladder of sup-potentials of shells, normalized by
/// `(θR)^{λ/(N-1)} m^{1-λ/(N-1)}`; the ratio must stay within a factor-2
/// band. The full ball (`θ = 1`) is compared against `φ_{-λ}(0) R^{N-λ}`.
pub fn check_shell_potential_bound(
    thetas: &[f64],
    params: &KernelParams,
    m: f64,
    quad: &QuadratureSpec,
) -> Result<VerifyRecord> {
    if !params.energy_regime() {
        return Err(FlockError::Regime(format!(
            "shell potential bound needs lambda < N - 1 (lambda = {}, N = {})",
            params.lambda, params.dim
        )));
    }
    let n = params.dim as f64;
    let q = params.lambda / (n - 1.0);
    let mut rec = VerifyRecord::new("shell-potential", &["theta", "radius", "sup_potential", "ratio"]);
    rec.input("params", params).input("mass", m).input("thetas", thetas);
    rec.budget = 0.0;
    let rows = thetas
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let (sup, r) = shell_potential_sup(params, t, m, quad)?;
            Ok(vec![t, r, sup, sup / ((t * r).powf(q) * m.powf(1.0 - q))])
        })
        .collect::<Result<Vec<_>>>()?;
    rec.rows = rows;
    let ratios = rec.column("ratio").unwrap_or_default();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    rec.fit("c_hat", hi).fit("ratio_min", lo).fit("band", hi / lo);
    let xs: Vec<f64> = rec.column("theta").unwrap_or_default();
    let ys: Vec<f64> = rec.column("sup_potential").unwrap_or_default();
    if xs.len() >= 2 {
        rec.fit("theta_exponent", log_log_slope(&xs, &ys));
    }
    rec.check(Check::at_most("ratio_band", hi / lo, 2.0, 0.0));

    let (sup, r) = shell_potential_sup(params, 1.0, m, quad)?;
    let centre = ball_potential(-params.lambda, 0.0, params.dim, quad)? * r.powf(n - params.lambda);
    rec.fit("full_ball_sup", sup);
    rec.check(Check::within("full_ball_centre_value", sup / centre, 1.0, 1e-6));
    Ok(rec)
}

/// Bathtub and competitor properties on `count` seeded random profiles of
/// the mass of the unit ball.
pub fn competitor_suite(
    params: &KernelParams,
    count: usize,
    cells: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<VerifyRecord> {
    let dim = params.dim;
    let ball = BallSpec::new(dim, 1.0)?;
    let grid = RadialGrid::with_breakpoints(dim, 2.5, cells, &[1.0])?;
    let model = EnergyModel::assemble(params, &grid, quad)?;
    let profiles = random_profiles(&grid, &ball, count, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let thetas: Vec<f64> = (0..count).map(|_| 2f64.powf(-rng.random_range(0.0..6.0))).collect();
    let m = ball.volume();
    let rows = profiles
        .par_iter()
        .zip(&thetas)
        .map(|(p, &theta)| -> Result<Vec<f64>> {
            let psi = model.potential(p)?;
            let (filled, _) = bathtub_fill(&psi, m, &grid)?;
            let tilde = competitor(p, theta, &ball)?;
            let props = competitor_properties(p, &tilde, theta, &ball)?;
            let ok = props.all_hold(1e-10, 1e-9 * m);
            Ok(vec![
                theta,
                (filled.mass() - m).abs() / m,
                filled.fractional_cells() as f64,
                props.mass_rel_err,
                props.confined as u8 as f64,
                props.ordered as u8 as f64,
                props.l1_before,
                props.l1_after,
                props.change_outside_shell,
                props.change_total,
                ok as u8 as f64,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rec = VerifyRecord::new(
        "competitor",
        &[
            "theta",
            "bathtub_mass_err",
            "fractional_cells",
            "mass_err",
            "confined",
            "ordered",
            "l1_before",
            "l1_after",
            "change_outside",
            "change_total",
            "ok",
        ],
    );
    rec.input("params", params).input("count", count).input("cells", cells).input("seed", seed);
    rec.budget = 1e-9;
    rec.rows = rows;
    let col_max = |name: &str| rec.column(name).unwrap_or_default().into_iter().fold(0.0, f64::max);
    let col_min = |name: &str| rec.column(name).unwrap_or_default().into_iter().fold(1.0, f64::min);
    let (bm, fc, me) = (col_max("bathtub_mass_err"), col_max("fractional_cells"), col_max("mass_err"));
    let (conf, ord) = (col_min("confined"), col_min("ordered"));
    let growth = rec
        .rows
        .iter()
        .map(|r| r[7] - r[6])
        .fold(f64::NEG_INFINITY, f64::max);
    let spill = rec
        .rows
        .iter()
        .map(|r| 0.5 * r[9] - r[8])
        .fold(f64::NEG_INFINITY, f64::max);
    rec.check(Check::at_most("bathtub_mass_rel_err", bm, 1e-12, 0.0));
    rec.check(Check::at_most("bathtub_fractional_cells", fc, 1.0, 0.0));
    rec.check(Check::at_most("competitor_mass_rel_err", me, 1e-10, 0.0));
    rec.check(Check::holds("competitor_confined", conf == 1.0));
    rec.check(Check::holds("competitor_ordered", ord == 1.0));
    rec.check(Check::at_most("distance_growth", growth / m, 0.0, 1e-9));
    rec.check(Check::at_most("change_inside_shell_excess", spill / m, 0.0, 1e-9));
    Ok(rec)
}
