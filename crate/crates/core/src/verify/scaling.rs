//! Minimizer ladder over the mass: asymmetry decay, support radius and
//! shell width of converged minimizers.

use serde::Serialize;

use super::{Check, Verdict, VerifyRecord};
use crate::density::{asymmetry, RadialGrid, RadialProfile};
use crate::energy::EnergyModel;
use crate::error::Result;
use crate::radial_kernel::{ball_radius_for_volume, ball_volume, KernelParams, QuadratureSpec};
use crate::solver::{minimize_with, InitKind, SolverOptions, SolverReport};

#[derive(Debug, Clone, Serialize)]
pub struct ScalingPoint {
    pub radius: f64,
    pub mass: f64,
    pub asymmetry: f64,
    pub shift: f64,
    pub support_radius: f64,
    pub shell_width: f64,
    /// Largest cell width over `R`.
    pub resolution: f64,
    pub report: SolverReport,
}

/// Smallest `θ` with `1_{(1-θ)B} ≤ ρ ≤ 1_{(1+θ)B}` for the origin-centred
/// ball `B` of volume `m(ρ)`, measured on cell edges.
pub fn shell_width(rho: &RadialProfile) -> f64 {
    let radius = ball_radius_for_volume(rho.grid().dim(), rho.mass());
    let e = rho.grid().edges();
    let v = rho.values();
    let mut inner: f64 = 0.0;
    let mut outer: f64 = 0.0;
    for i in 0..v.len() {
        if v[i] < 1.0 {
            // cell i is not full, so (1-θ)R ≤ e[i]
            inner = inner.max(1.0 - e[i] / radius);
        }
        if v[i] > 0.0 {
            outer = outer.max(e[i + 1] / radius - 1.0);
        }
    }
    inner.max(outer).max(0.0)
}

/// Solve at every radius of the ladder on `cells` cells over `[0, 2.5R]`,
/// starting from the annulus `(0.8R, b)`.
pub fn scaling_study(
    params: &KernelParams,
    radii: &[f64],
    cells: usize,
    options: &SolverOptions,
    quad: &QuadratureSpec,
) -> Result<(VerifyRecord, Vec<ScalingPoint>)> {
    let dim = params.dim;
    let mut points = Vec::with_capacity(radii.len());
    // one grid shape for the whole ladder: the fine structure of the
    // discretization (where R falls inside its cell) is the same at every R
    for &r in radii {
        let grid = RadialGrid::uniform(dim, 2.5 * r, cells)?;
        let model = EnergyModel::assemble(params, &grid, quad)?;
        let mass = ball_volume(dim, r);
        let mut opts = options.clone();
        if matches!(opts.init, InitKind::Annulus { .. }) {
            opts.init = InitKind::Annulus { inner: 0.8 * r };
        }
        let report = minimize_with(&model, mass, &opts)?;
        let (a, shift) = asymmetry(&report.profile)?;
        points.push(ScalingPoint {
            radius: r,
            mass,
            asymmetry: a,
            shift,
            support_radius: report.profile.support_radius(),
            shell_width: shell_width(&report.profile),
            resolution: grid.max_width() / r,
            report,
        });
    }
    Ok((scaling_record(params, cells, options, &points), points))
}

fn scaling_record(params: &KernelParams, cells: usize, options: &SolverOptions, points: &[ScalingPoint]) -> VerifyRecord {
    let mut rec = VerifyRecord::new(
        "scaling",
        &[
            "radius",
            "mass",
            "asymmetry",
            "shift",
            "support_radius",
            "support_over_radius",
            "shell_width",
            "residual",
            "iterations",
            "converged",
            "energy",
        ],
    );
    rec.input("params", params).input("cells", cells).input("solver", options);
    rec.input("radii", points.iter().map(|p| p.radius).collect::<Vec<_>>());
    let resolution = points.iter().map(|p| p.resolution).fold(0.0, f64::max);
    rec.budget = 2.0 * resolution;
    for p in points {
        rec.rows.push(vec![
            p.radius,
            p.mass,
            p.asymmetry,
            p.shift,
            p.support_radius,
            p.support_radius / p.radius,
            p.shell_width,
            p.report.final_residual(),
            p.report.iterations as f64,
            p.report.converged as u8 as f64,
            p.report.final_energy(),
        ]);
    }
    if points.is_empty() {
        return rec;
    }
    let n = params.dim as f64;
    let exponent = (params.alpha + params.lambda) / n;
    let c_hat = points[0].asymmetry * points[0].mass.powf(exponent);
    rec.fit("c_hat", c_hat);
    rec.check(Check::holds("all_converged", points.iter().all(|p| p.report.converged)));
    let worst_increase = points.iter().map(|p| p.report.worst_energy_increase()).fold(f64::NEG_INFINITY, f64::max);
    rec.check(Check::at_most("energy_monotone", worst_increase.max(0.0), 0.0, 1e-12));
    // A at the discrete level: A decays like the bound until it reaches the
    // fractional-cell floor, which is identical along the ladder
    let worst_rise = points
        .windows(2)
        .map(|w| w[1].asymmetry - w[0].asymmetry)
        .fold(f64::NEG_INFINITY, f64::max);
    rec.fit("asymmetry_worst_rise", worst_rise);
    rec.check(Check::at_most("asymmetry_nonincreasing", worst_rise.max(0.0), 0.0, 1e-9));
    let excess = points
        .iter()
        .map(|p| p.asymmetry - (c_hat * p.mass.powf(-exponent) + 2.0 * p.resolution))
        .fold(f64::NEG_INFINITY, f64::max);
    rec.check(Check::at_most("asymmetry_bound", excess, 0.0, 0.0));
    let support = points.iter().map(|p| p.support_radius / p.radius).fold(0.0, f64::max);
    rec.fit("support_over_radius_max", support);
    rec.check(Check::at_most("support_radius", support, 1.2, 0.0));
    // large-mass end: ball up to the grid
    let last = points.last().unwrap();
    rec.check(Check::at_most("largest_mass_asymmetry", last.asymmetry, 2.0 * last.resolution, 0.0));
    rec.check(Check::at_most("largest_mass_shell_width", last.shell_width, 2.0 * last.resolution, 0.0));
    let first_ball = points
        .iter()
        .position(|p| p.asymmetry <= 2.0 * p.resolution && p.shell_width <= 2.0 * p.resolution);
    if let Some(k) = first_ball {
        rec.fit("radius_threshold", points[k].radius);
    }
    if rec.verdict != Verdict::Pass {
        rec.note("see checks for the failing ladder points");
    }
    rec
}
