//! Sphere-averaged power kernels, ball potentials and their derivatives.
//!
//! For a radial function the interaction `∬ ρ(x)|x - y|^mu σ(y)` only sees the
//! sphere average
//!
//! ```text
//! K_mu(r, s) = ∫_{S^{N-1}} |r e - s ω|^mu dω
//!            = |S^{N-2}| ∫_{-1}^{1} (1 - t²)^{(N-3)/2} (r² - 2rst + s²)^{mu/2} dt,
//! ```
//!
//! and the potential of the unit ball is `φ_mu(r) = ∫_0^1 s^{N-1} K_mu(r, s) ds`.
//! Three dimensions use closed forms; every other dimension goes through
//! graded Gauss–Legendre quadrature (see [`generic`]).

mod closed;
mod generic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::density::RadialGrid;
use crate::energy::KernelMatrix;
use crate::error::{FlockError, Result};
use crate::quadrature::{graded, graded_both, graded_nodes, rule, Tail};

/// `|r - 1|` below which the surface-integral derivative is reported as
/// divergent when `mu <= -(N-1)`.
pub const DERIVATIVE_DIVERGENCE_THRESHOLD: f64 = 1e-6;

/// Dimension and exponents of the attractive–repulsive kernel
/// `|x|^alpha + |x|^{-lambda}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub dim: usize,
    pub alpha: f64,
    pub lambda: f64,
}

impl KernelParams {
    pub fn new(dim: usize, alpha: f64, lambda: f64) -> Result<Self> {
        let p = Self { dim, alpha, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(FlockError::Domain("dimension must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(FlockError::Domain(format!("alpha = {} must be > 0", self.alpha)));
        }
        if !(self.lambda > 0.0 && self.lambda < self.dim as f64) {
            return Err(FlockError::Domain(format!(
                "lambda = {} must lie in (0, {})",
                self.lambda, self.dim
            )));
        }
        Ok(())
    }

    /// `lambda < N - 1`: the ball potential has a bounded derivative and large
    /// balls satisfy the Euler–Lagrange conditions.
    pub fn energy_regime(&self) -> bool {
        self.lambda < self.dim as f64 - 1.0
    }

    pub fn repulsion_mu(&self) -> f64 {
        -self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_cell: usize,
    /// Dyadic panels placed toward a diagonal or endpoint singularity.
    pub diagonal_refinement_levels: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Use the N = 3 and N = 1 closed forms when available.
    pub closed_form: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_cell: 10,
            diagonal_refinement_levels: 30,
            abs_tol: 1e-12,
            rel_tol: 1e-8,
            closed_form: true,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_cell < 1 {
            return Err(FlockError::Domain("nodes_per_cell must be >= 1".into()));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(FlockError::Domain("quadrature tolerances must be > 0".into()));
        }
        Ok(())
    }

    /// Same spec with `factor` times the nodes and extra refinement levels.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nodes_per_cell: (self.nodes_per_cell * factor).min(crate::quadrature::MAX_CACHED_NODES),
            diagonal_refinement_levels: self.diagonal_refinement_levels + 2 * factor,
            ..*self
        }
    }

    /// Force the quadrature route even where a closed form exists.
    pub fn generic(&self) -> Self {
        Self {
            closed_form: false,
            ..*self
        }
    }

    fn use_3d(&self, dim: usize, mu: f64) -> bool {
        self.closed_form && dim == 3 && closed::three_d_usable(mu)
    }
}

/// `|S^{N-1}|`, the surface measure of the unit sphere in R^N.
pub fn sphere_area(dim: usize) -> f64 {
    static TABLE: OnceLock<[f64; 17]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        // |S^{n+1}| = 2π |S^{n-1}| / n
        let mut t = [0.0; 17];
        t[1] = 2.0;
        t[2] = 2.0 * std::f64::consts::PI;
        for n in 3..17 {
            t[n] = 2.0 * std::f64::consts::PI * t[n - 2] / (n as f64 - 2.0);
        }
        t
    });
    if dim <= 16 {
        table[dim]
    } else {
        let half = dim as f64 / 2.0;
        2.0 * std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half)
    }
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    sphere_area(dim) * radius.powi(dim as i32) / dim as f64
}

pub fn ball_radius_for_volume(dim: usize, volume: f64) -> f64 {
    (volume * dim as f64 / sphere_area(dim)).powf(1.0 / dim as f64)
}

fn check_radius(r: f64) -> Result<()> {
    if r < 0.0 || !r.is_finite() {
        return Err(FlockError::Domain(format!("radius {r} must be finite and >= 0")));
    }
    Ok(())
}

fn check_integrable(mu: f64, dim: usize) -> Result<()> {
    if mu <= -(dim as f64) {
        return Err(FlockError::NonIntegrable { mu, dim });
    }
    Ok(())
}

/// `∫_{S^{N-1}} |r e - s ω|^mu dω` with default quadrature settings.
pub fn sphere_kernel(mu: f64, r: f64, s: f64, dim: usize) -> Result<f64> {
    sphere_kernel_with(mu, r, s, dim, &QuadratureSpec::default())
}

pub fn sphere_kernel_with(mu: f64, r: f64, s: f64, dim: usize, quad: &QuadratureSpec) -> Result<f64> {
    check_radius(r)?;
    check_radius(s)?;
    if dim == 0 {
        return Err(FlockError::Domain("dimension must be at least 1".into()));
    }
    let threshold = -(dim as f64 - 1.0);
    if r == s && r > 0.0 && mu <= threshold && mu < 0.0 {
        return Err(FlockError::DivergentKernel { mu, radius: r, threshold });
    }
    if r == 0.0 && s == 0.0 {
        return Ok(if mu > 0.0 { 0.0 } else if mu == 0.0 { sphere_area(dim) } else { f64::INFINITY });
    }
    if dim == 1 {
        return Ok(closed::kernel_1d(mu, r, s));
    }
    if r == 0.0 || s == 0.0 {
        return Ok(sphere_area(dim) * r.max(s).powf(mu));
    }
    if quad.use_3d(dim, mu) {
        return Ok(closed::kernel_3d(mu, r, s));
    }
    Ok(generic::kernel(mu, r, s, r - s, dim, quad))
}

/// Potential at radius `r` of the uniform shell `inner < |y| < outer`
/// (`inner = 0` gives the ball of radius `outer`).
pub fn shell_potential(
    mu: f64,
    r: f64,
    inner: f64,
    outer: f64,
    dim: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_radius(r)?;
    check_integrable(mu, dim)?;
    if !(inner >= 0.0 && outer >= inner) {
        return Err(FlockError::Domain(format!("bad shell [{inner}, {outer}]")));
    }
    Ok(shell_potential_unchecked(mu, r, inner, outer, dim, quad))
}

pub(crate) fn shell_potential_unchecked(
    mu: f64,
    r: f64,
    inner: f64,
    outer: f64,
    dim: usize,
    quad: &QuadratureSpec,
) -> f64 {
    if outer <= inner {
        return 0.0;
    }
    if quad.use_3d(dim, mu) {
        closed::shell_potential_3d(mu, r, inner, outer)
    } else if dim == 1 && quad.closed_form {
        closed::shell_potential_1d(mu, r, inner, outer)
    } else if r == 0.0 {
        let e = mu + dim as f64;
        sphere_area(dim) * (outer.powf(e) - inner.powf(e)) / e
    } else if dim == 1 {
        // both reflections of the interval
        let gl = rule(quad.nodes_per_cell);
        let f = |s: f64| closed::kernel_1d(mu, r, s);
        if r > inner && r < outer {
            let tail = if mu < 0.0 { Tail::Power(mu) } else { Tail::Gauss };
            let lv = quad.diagonal_refinement_levels;
            graded(|t| f(r - t), r - inner, lv, gl, tail) + graded(|t| f(r + t), outer - r, lv, gl, tail)
        } else {
            graded_both(f, inner, outer, quad.diagonal_refinement_levels, gl)
        }
    } else {
        generic::shell_potential(mu, r, inner, outer, dim, quad)
    }
}

/// `φ_mu(r) = ∫_{B_1} |x - y|^mu dy` at `|x| = r`.
pub fn ball_potential(mu: f64, r: f64, dim: usize, quad: &QuadratureSpec) -> Result<f64> {
    check_radius(r)?;
    check_integrable(mu, dim)?;
    let value = shell_potential_unchecked(mu, r, 0.0, 1.0, dim, quad);
    let closed = quad.use_3d(dim, mu) || (dim == 1 && quad.closed_form);
    if !closed && r > 0.0 {
        let coarse = QuadratureSpec {
            nodes_per_cell: quad.nodes_per_cell.saturating_sub(2).max(2),
            ..*quad
        };
        let other = shell_potential_unchecked(mu, r, 0.0, 1.0, dim, &coarse);
        let estimate = (value - other).abs();
        let tolerance = quad.abs_tol.max(quad.rel_tol * value.abs());
        if !estimate.is_finite() || estimate > tolerance {
            return Err(FlockError::QuadratureNonConvergence { estimate, tolerance });
        }
    }
    Ok(value)
}

/// `∂_r φ_mu(r)` from the surface integral
/// `-|S^{N-2}| ∫ t (1-t²)^{(N-3)/2} (r² - 2rt + 1)^{mu/2} dt`.
///
/// When `mu <= -(N-1)` the derivative blows up at the surface; within
/// [`DERIVATIVE_DIVERGENCE_THRESHOLD`] of `r = 1` a
/// [`FlockError::DerivativeDiverges`] carrying the sign of the blow-up is
/// returned instead of a number.
pub fn ball_potential_derivative(mu: f64, r: f64, dim: usize, quad: &QuadratureSpec) -> Result<f64> {
    check_radius(r)?;
    check_integrable(mu, dim)?;
    let delta = r - 1.0;
    if mu <= -(dim as f64 - 1.0) && delta.abs() < DERIVATIVE_DIVERGENCE_THRESHOLD {
        return Err(FlockError::DerivativeDiverges { mu, r, sign: -1.0 });
    }
    Ok(derivative_at_offset(mu, delta, dim, quad))
}

/// `∂_r φ_mu` at `r = 1 + delta`, with `delta` carried exactly so that
/// offsets far below machine epsilon of 1 remain meaningful. No divergence
/// guard.
pub fn derivative_at_offset(mu: f64, delta: f64, dim: usize, quad: &QuadratureSpec) -> f64 {
    let r = 1.0 + delta;
    if r <= 0.0 {
        return 0.0;
    }
    if dim == 1 {
        return closed::derivative_1d(mu, delta);
    }
    // the closed form divides by r², so small radii use the angular integral
    if quad.use_3d(dim, mu) && r > 0.05 {
        closed::derivative_3d(mu, delta)
    } else {
        generic::derivative(mu, delta, dim, quad)
    }
}

/// `φ_mu(1 + delta) - φ_mu(1)` without cancellation for small `delta`.
pub fn potential_increment(mu: f64, delta: f64, dim: usize, quad: &QuadratureSpec) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    if delta.abs() >= 0.05 {
        let a = shell_potential_unchecked(mu, 1.0 + delta, 0.0, 1.0, dim, quad);
        let b = shell_potential_unchecked(mu, 1.0, 0.0, 1.0, dim, quad);
        return a - b;
    }
    let beta = mu + dim as f64 - 1.0;
    let tail = if beta < 0.0 { Tail::Power(beta) } else { Tail::Gauss };
    let gl = rule(quad.nodes_per_cell);
    let levels = 60;
    if delta > 0.0 {
        graded(|u| derivative_at_offset(mu, u, dim, quad), delta, levels, gl, tail)
    } else {
        -graded(|u| derivative_at_offset(mu, -u, dim, quad), -delta, levels, gl, tail)
    }
}

/// Φ(r) = ∫_{B_R} (|x-y|^alpha + |x-y|^{-lambda}) dy, evaluated directly on
/// the ball of radius `radius` (not through the unit-ball rescaling).
pub fn combined_ball_potential(
    params: &KernelParams,
    radius: f64,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    check_radius(r)?;
    if !(radius > 0.0) {
        return Err(FlockError::Domain(format!("ball radius {radius} must be > 0")));
    }
    let a = shell_potential(params.alpha, r, 0.0, radius, params.dim, quad)?;
    let b = shell_potential(-params.lambda, r, 0.0, radius, params.dim, quad)?;
    Ok(a + b)
}

/// Φ(R(1 + delta)) - Φ(R) via the rescaled unit-ball increments.
pub fn combined_increment(params: &KernelParams, radius: f64, delta: f64, quad: &QuadratureSpec) -> f64 {
    let n = params.dim as f64;
    let att = potential_increment(params.alpha, delta, params.dim, quad);
    let rep = potential_increment(-params.lambda, delta, params.dim, quad);
    radius.powf(n + params.alpha) * (att + radius.powf(-params.alpha - params.lambda) * rep)
}

/// Cell-pair integrals `W_ij = ∫_{cell i} ∫_{cell j} |x - y|^mu dx dy` for
/// radial cells.
///
/// Computed as `|S^{N-1}| ∫_{cell i} r^{N-1} P_j(r) dr` where `P_j` is the
/// potential of shell `j`. `P_j` is smooth away from the edges of cell `j`, so
/// well separated pairs use a plain Gauss rule and the diagonal and adjacent
/// pairs use panels graded toward the shared edges. Only the upper triangle is
/// computed; the lower one is mirrored.
pub fn kernel_matrix(grid: &RadialGrid, mu: f64, quad: &QuadratureSpec) -> Result<KernelMatrix> {
    quad.validate()?;
    let dim = grid.dim();
    check_integrable(mu, dim)?;
    let edges = grid.edges();
    let m = grid.len();
    let area = sphere_area(dim);
    let gl = rule(quad.nodes_per_cell);
    let levels = quad.diagonal_refinement_levels;
    let n1 = dim as i32 - 1;
    let use_3d = quad.use_3d(dim, mu);
    let p = mu + 2.0;
    let generic_pairs = !use_3d && dim > 1;

    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (edges[i], edges[i + 1]);
            let mut row = vec![0.0; m - i];
            if generic_pairs {
                for (k, v) in row.iter_mut().enumerate() {
                    let j = i + k;
                    *v = area * generic::cell_pair(mu, dim, (a, b), (edges[j], edges[j + 1]), quad);
                }
                return row;
            }
            let shell = |r: f64, j: usize| {
                shell_potential_unchecked(mu, r, edges[j], edges[j + 1], dim, quad)
            };
            // diagonal
            row[0] = area
                * graded_both(|r| r.powi(n1) * shell(r, i), a, b, levels, gl);
            if i + 1 < m {
                let pts = graded_nodes(a, b, levels, gl, false);
                row[1] = area * pts.iter().map(|&(r, w)| w * r.powi(n1) * shell(r, i + 1)).sum::<f64>();
            }
            if i + 2 < m {
                let nodes: Vec<(f64, f64)> = gl.mapped(a, b).collect();
                if use_3d {
                    // shared edge antiderivatives: P_j = 2π (H(b_j) - H(a_j)) / (p r)
                    for &(r, w) in &nodes {
                        let scale = w * area * r * r * 2.0 * std::f64::consts::PI / (p * r);
                        let mut prev = closed::shell_antiderivative(p, r, edges[i + 2]);
                        for j in i + 2..m {
                            let next = closed::shell_antiderivative(p, r, edges[j + 1]);
                            let val = if r < 1e-4 * edges[j] {
                                w * area * r * r * closed::shell_potential_3d(mu, r, edges[j], edges[j + 1])
                            } else {
                                scale * (next - prev)
                            };
                            row[j - i] += val;
                            prev = next;
                        }
                    }
                } else {
                    for j in i + 2..m {
                        row[j - i] = area
                            * nodes.iter().map(|&(r, w)| w * r.powi(n1) * shell(r, j)).sum::<f64>();
                    }
                }
            }
            row
        })
        .collect();

    let mut data = vec![0.0; m * m];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + k;
            if !v.is_finite() || v < 0.0 {
                return Err(FlockError::ToleranceNotMet { i, j, value: v });
            }
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    Ok(KernelMatrix::new(mu, grid, data))
}
