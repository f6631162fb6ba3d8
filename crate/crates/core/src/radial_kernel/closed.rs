//! Closed forms for N = 3 (shell theorem structure) and N = 1.
//!
//! In three dimensions the sphere average of |x - y|^mu reduces to
//! `2π ((r+s)^p - |r-s|^p) / (p r s)` with `p = mu + 2`, which integrates
//! once more in `s` in closed form. Everything here is written with the
//! signed offset `s - r` passed around so near-diagonal values keep their
//! digits.

use std::f64::consts::PI;

/// Below this `|mu + 2|` the N = 3 formulas lose digits to the `1/p` factor
/// and callers fall back to quadrature.
pub(crate) const THREE_D_LOG_GUARD: f64 = 1e-3;

pub(crate) fn three_d_usable(mu: f64) -> bool {
    (mu + 2.0).abs() >= THREE_D_LOG_GUARD
}

/// `(hi^e - lo^e) / e`, including the logarithmic limit `e -> 0`.
pub(crate) fn pow_diff_over(e: f64, hi: f64, lo: f64) -> f64 {
    if lo == 0.0 {
        return if e > 0.0 { hi.powf(e) / e } else { f64::INFINITY };
    }
    let l = (hi / lo).ln();
    if e == 0.0 {
        l
    } else {
        lo.powf(e) * (e * l).exp_m1() / e
    }
}

/// Sphere-averaged kernel for N = 3, r, s > 0.
pub(crate) fn kernel_3d(mu: f64, r: f64, s: f64) -> f64 {
    let p = mu + 2.0;
    let d = (r - s).abs();
    let sum = r + s;
    if d == 0.0 {
        return if p > 0.0 {
            2.0 * PI * sum.powf(p) / (p * r * s)
        } else {
            f64::INFINITY
        };
    }
    // ((r+s)^p - |r-s|^p)/p, stable near p = 0
    2.0 * PI * pow_diff_over(p, sum, d) / (r * s)
}

/// Antiderivative in `s` of `s ((r+s)^p - |r-s|^p)`.
#[inline]
pub(crate) fn shell_antiderivative(p: f64, r: f64, s: f64) -> f64 {
    let sum = r + s;
    let sum_p1 = sum.powf(p + 1.0);
    let g = sum_p1 * sum / (p + 2.0) - r * sum_p1 / (p + 1.0);
    let d = s - r;
    let ad = d.abs();
    let ad_p1 = ad.powf(p + 1.0);
    let f = d.signum() * r * ad_p1 / (p + 1.0) + ad_p1 * ad / (p + 2.0);
    g - f
}

/// Potential at radius `r` of the uniform shell `inner < |y| < outer` (N = 3).
pub(crate) fn shell_potential_3d(mu: f64, r: f64, inner: f64, outer: f64) -> f64 {
    let near = if inner > 0.0 { inner } else { outer };
    if r < 1e-4 * near {
        return small_r_shell_3d(mu, r, inner, outer);
    }
    let p = mu + 2.0;
    let hi = shell_antiderivative(p, r, outer);
    let lo = if inner > 0.0 {
        shell_antiderivative(p, r, inner)
    } else {
        0.0
    };
    2.0 * PI * (hi - lo) / (p * r)
}

/// Second-order expansion about the origin; the shell potential is even and
/// smooth there.
fn small_r_shell_3d(mu: f64, r: f64, inner: f64, outer: f64) -> f64 {
    let ball = |b: f64| {
        if b == 0.0 {
            0.0
        } else {
            4.0 * PI * b.powf(mu + 3.0) / (mu + 3.0) + 2.0 * PI * mu / 3.0 * b.powf(mu + 1.0) * r * r
        }
    };
    ball(outer) - ball(inner)
}

/// d/dr of the unit-ball potential at `r = 1 + delta` (N = 3), via the
/// surface integral `-2π ∫ t (r² - 2rt + 1)^{mu/2} dt`.
pub(crate) fn derivative_3d(mu: f64, delta: f64) -> f64 {
    let r = 1.0 + delta;
    let nu = mu / 2.0;
    let q_lo = delta * delta;
    let q_hi = (2.0 + delta) * (2.0 + delta);
    let a = pow_diff_over(nu + 1.0, q_hi, q_lo);
    let b = pow_diff_over(nu + 2.0, q_hi, q_lo);
    -2.0 * PI / (4.0 * r * r) * ((r * r + 1.0) * a - b)
}

pub(crate) fn kernel_1d(mu: f64, r: f64, s: f64) -> f64 {
    (r - s).abs().powf(mu) + (r + s).powf(mu)
}

/// ∫_inner^outer (|r-s|^mu + (r+s)^mu) ds, mu > -1.
pub(crate) fn shell_potential_1d(mu: f64, r: f64, inner: f64, outer: f64) -> f64 {
    let e = mu + 1.0;
    let anti = |s: f64| {
        let d = s - r;
        d.signum() * d.abs().powf(e) / e + (r + s).powf(e) / e
    };
    anti(outer) - anti(inner)
}

pub(crate) fn derivative_1d(mu: f64, delta: f64) -> f64 {
    (2.0 + delta).abs().powf(mu) - delta.abs().powf(mu)
}
