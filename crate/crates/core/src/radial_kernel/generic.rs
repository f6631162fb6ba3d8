//! Quadrature route for general dimension.
//!
//! The sphere average is written over the polar angle θ (t = cos θ), which
//! absorbs the (1 - t²)^{(N-3)/2} weight into sin^{N-2} θ and so covers the
//! N = 2 Chebyshev weight without special casing. The near-diagonal
//! singularity sits at θ = 0 with length scale |r - s| / sqrt(r s); panels
//! are graded toward θ = 0 until that scale is resolved.

use super::{sphere_area, QuadratureSpec};
use crate::quadrature::{graded, rule, Tail};

const MAX_ANGULAR_LEVELS: usize = 64;

/// ∫_0^π w(θ) sin^{N-2}θ (d² + 4 r s sin²(θ/2))^{mu/2} dθ with `d = r - s`
/// and `w = cos θ` when `cos_weight` is set.
pub(crate) fn angular_integral(
    mu: f64,
    r: f64,
    s: f64,
    d: f64,
    dim: usize,
    quad: &QuadratureSpec,
    cos_weight: bool,
) -> f64 {
    let gl = rule(quad.nodes_per_cell);
    let c = 4.0 * r * s;
    let sin_pow = dim as i32 - 2;
    let d2 = d * d;
    let integrand = |theta: f64| {
        let h = (0.5 * theta).sin();
        let base = (d2 + c * h * h).powf(0.5 * mu);
        let w = if cos_weight { theta.cos() } else { 1.0 };
        let sp = theta.sin().powi(sin_pow);
        w * sp * base
    };
    let pi = std::f64::consts::PI;
    if d == 0.0 {
        // leading behaviour (rs)^{mu/2} θ^{mu+N-2}
        let beta = mu + sin_pow as f64;
        return graded(integrand, pi, MAX_ANGULAR_LEVELS.min(48), gl, Tail::Power(beta));
    }
    let theta_star = d.abs() / (r * s).sqrt();
    let levels = if theta_star >= pi {
        0
    } else {
        ((pi / (theta_star / 8.0)).log2().ceil() as usize).min(MAX_ANGULAR_LEVELS)
    };
    graded(integrand, pi, levels, gl, Tail::Gauss)
}

/// Sphere kernel for N >= 2 with the signed offset `d = r - s` supplied.
pub(crate) fn kernel(mu: f64, r: f64, s: f64, d: f64, dim: usize, quad: &QuadratureSpec) -> f64 {
    if r == 0.0 || s == 0.0 {
        return sphere_area(dim) * r.max(s).powf(mu);
    }
    sphere_area(dim - 1) * angular_integral(mu, r, s, d, dim, quad, false)
}

/// d/dr of the unit-ball potential at r = 1 + delta for N >= 2.
pub(crate) fn derivative(mu: f64, delta: f64, dim: usize, quad: &QuadratureSpec) -> f64 {
    let r = 1.0 + delta;
    if r == 0.0 {
        return 0.0;
    }
    -sphere_area(dim - 1) * angular_integral(mu, r, 1.0, delta, dim, quad, true)
}

/// Potential at radius `r` of the shell `inner < |y| < outer`:
/// ∫ s^{N-1} K(r, s) ds with grading toward s = r.
pub(crate) fn shell_potential(
    mu: f64,
    r: f64,
    inner: f64,
    outer: f64,
    dim: usize,
    quad: &QuadratureSpec,
) -> f64 {
    let gl = rule(quad.nodes_per_cell);
    let n1 = dim as f64 - 1.0;
    let beta = mu + n1;
    let k = |s: f64, d: f64| {
        if s == 0.0 {
            0.0
        } else {
            s.powf(n1) * kernel(mu, r, s, d, dim, quad)
        }
    };
    let singular_tail = if beta < 0.0 { Tail::Power(beta) } else { Tail::Gauss };
    let width = outer - inner;
    let levels_for = |dist: f64| -> usize {
        if dist >= 0.5 * width {
            0
        } else if dist <= 0.0 {
            quad.diagonal_refinement_levels
        } else {
            ((8.0 * width / dist).log2().ceil() as usize).min(quad.diagonal_refinement_levels)
        }
    };
    if r <= inner {
        let gap = inner - r;
        let tail = if gap == 0.0 { singular_tail } else { Tail::Gauss };
        graded(|t| k(inner + t, -(gap + t)), width, levels_for(gap), gl, tail)
    } else if r >= outer {
        let gap = r - outer;
        let tail = if gap == 0.0 { singular_tail } else { Tail::Gauss };
        graded(|t| k(outer - t, gap + t), width, levels_for(gap), gl, tail)
    } else {
        let levels = quad.diagonal_refinement_levels;
        graded(|t| k(r - t, t), r - inner, levels, gl, singular_tail)
            + graded(|t| k(r + t, -t), outer - r, levels, gl, singular_tail)
    }
}

/// `∫_{[a,b]} ∫_{[c,e]} r^{N-1} s^{N-1} K(r, s) ds dr` for two cells that
/// are equal, adjacent (`b == c`) or separated.
///
/// Equal and adjacent cells are integrated in (offset, position)
/// coordinates: along a line of constant `r - s` the integrand is smooth, so
/// only the offset direction needs grading.
pub(crate) fn cell_pair(mu: f64, dim: usize, (a, b): (f64, f64), (c, e): (f64, f64), quad: &QuadratureSpec) -> f64 {
    let gl = rule(quad.nodes_per_cell);
    let n1 = dim as i32 - 1;
    let beta = mu + dim as f64 - 1.0;
    let levels = quad.diagonal_refinement_levels;
    let f = |r: f64, s: f64, d: f64| {
        if r == 0.0 || s == 0.0 {
            return 0.0;
        }
        r.powi(n1) * s.powi(n1) * kernel(mu, r, s, d, dim, quad)
    };
    if a == c && b == e {
        // 2 ∫_0^h dt ∫_a^{b-t} f(s + t, s) ds
        let h = b - a;
        let inner = |t: f64| gl.integrate(a, b - t, |s| f(s + t, s, t));
        let tail = if beta < 0.0 { Tail::Power(beta) } else { Tail::Gauss };
        2.0 * graded(inner, h, levels, gl, tail)
    } else if b == c {
        // w = (s - b) + (b - r), u = b - r
        let (hi, hj) = (b - a, e - c);
        let inner = |w: f64| {
            let lo = (w - hj).max(0.0);
            let up = hi.min(w);
            if up <= lo {
                return 0.0;
            }
            gl.integrate(lo, up, |u| f(b - u, b + w - u, -w))
        };
        let (short, long) = (hi.min(hj), hi.max(hj));
        let tail = if beta + 1.0 < 0.0 { Tail::Power(beta + 1.0) } else { Tail::Gauss };
        graded(inner, short, levels, gl, tail)
            + gl.integrate(short, long, inner)
            + gl.integrate(long, hi + hj, inner)
    } else {
        let outer: Vec<(f64, f64)> = gl.mapped(a, b).collect();
        let inner: Vec<(f64, f64)> = gl.mapped(c, e).collect();
        let mut acc = 0.0;
        for &(r, wr) in &outer {
            for &(s, ws) in &inner {
                acc += wr * ws * f(r, s, r - s);
            }
        }
        acc
    }
}
