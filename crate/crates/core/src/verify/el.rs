//! Euler–Lagrange sign pattern of the ball: `Φ(r) ≤ Φ(R)` inside and
//! `Φ(r) ≥ Φ(R)` outside, or its failure when `λ ≥ N - 1`.

use rayon::prelude::*;
use serde::Serialize;

use super::{Check, VerifyRecord};
use crate::error::Result;
use crate::quadrature::geomspace;
use crate::radial_kernel::{ball_volume, combined_increment, KernelParams, QuadratureSpec};

/// `Φ(R(1 + δ)) - Φ(R)` sampled at relative offsets `δ`.
#[derive(Debug, Clone, Serialize)]
pub struct ElProfile {
    pub radius: f64,
    pub offsets: Vec<f64>,
    pub increments: Vec<f64>,
}

impl ElProfile {
    /// Offsets where the sign pattern fails.
    pub fn violations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.offsets
            .iter()
            .zip(&self.increments)
            .filter(|(d, v)| (**d < 0.0 && **v > 0.0) || (**d > 0.0 && **v < 0.0))
            .map(|(d, v)| (*d, *v))
    }

    /// `min |Φ(r) - Φ(R)| / (R^{N+α-1} min{|r - R|, R})` over the samples.
    pub fn lower_constant(&self, params: &KernelParams) -> f64 {
        let n = params.dim as f64;
        let scale = self.radius.powf(n + params.alpha - 1.0);
        self.offsets
            .iter()
            .zip(&self.increments)
            .filter(|(d, _)| **d != 0.0)
            .map(|(d, v)| v.abs() / (scale * (d.abs() * self.radius).min(self.radius)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Offsets used by [`check_el_ball`]: `samples` radii in total, 60% spread
/// uniformly over `(0, 3R)` and the rest geometrically clustered at `R` from
/// `10⁻⁸` to `0.5` on both sides.
pub fn el_offsets(samples: usize) -> Vec<f64> {
    let uniform = samples * 3 / 5;
    let side = (samples - uniform) / 2;
    let mut out: Vec<f64> = (0..uniform)
        .map(|k| 3.0 * (k as f64 + 0.5) / uniform as f64 - 1.0)
        .filter(|d| *d != 0.0)
        .collect();
    for d in geomspace(1e-8, 0.5, side) {
        out.push(d);
        out.push(-d);
    }
    out.sort_by(f64::total_cmp);
    out
}

pub fn el_profile(params: &KernelParams, radius: f64, offsets: &[f64], quad: &QuadratureSpec) -> ElProfile {
    let increments = offsets.par_iter().map(|&d| combined_increment(params, radius, d, quad)).collect();
    ElProfile { radius, offsets: offsets.to_vec(), increments }
}

/// Offsets `±10^{-k/4}`, `k = 0..=100`: fine enough to resolve the
/// `λ ≥ N - 1` violation, whose width shrinks like `R^{-(α+λ)/(λ-N+1)}`.
fn violation_offsets() -> Vec<f64> {
    (0..=100).map(|k| 10f64.powf(-(k as f64) / 4.0)).collect()
}

/// Largest `δ` such that every probed offset in `(0, δ]` violates the sign
/// pattern on the given side (`sign = -1` inside, `+1` outside).
fn violation_extent(params: &KernelParams, radius: f64, sign: f64, quad: &QuadratureSpec) -> f64 {
    let mut offsets = violation_offsets();
    offsets.reverse();
    let mut extent = 0.0;
    for d in offsets {
        let v = combined_increment(params, radius, sign * d, quad);
        if sign * v < 0.0 {
            extent = d;
        } else {
            break;
        }
    }
    extent
}

/// Sign pattern of the ball potential over a ladder of radii.
///
/// For `λ < N - 1` each radius is tested at `samples` offsets; the smallest
/// radius above which the pattern holds gives the mass threshold `m̂`, and
/// `ĉ` is the smallest lower-bound constant over those radii. For
/// `λ ≥ N - 1` each radius must show a violation interval on both sides.
pub fn check_el_ball(
    params: &KernelParams,
    radii: &[f64],
    samples: usize,
    quad: &QuadratureSpec,
) -> Result<VerifyRecord> {
    params.validate()?;
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let regime = params.energy_regime();
    let mut rec = VerifyRecord::new(
        "el-ball",
        &["radius", "mass", "violations", "c_lower", "inner_extent", "outer_extent"],
    );
    rec.input("params", params).input("radii", &radii).input("samples", samples);
    rec.input("energy_regime", regime);
    rec.budget = 0.0;
    let n = params.dim as f64;
    let offsets = el_offsets(samples);
    let mut holds = Vec::new();
    for &r in &radii {
        let mass = ball_volume(params.dim, r);
        if regime {
            let prof = el_profile(params, r, &offsets, quad);
            let bad = prof.violations().count();
            let c = prof.lower_constant(params);
            holds.push((r, bad == 0, c));
            rec.rows.push(vec![r, mass, bad as f64, c, 0.0, 0.0]);
        } else {
            let inner = violation_extent(params, r, -1.0, quad);
            let outer = violation_extent(params, r, 1.0, quad);
            rec.rows.push(vec![r, mass, f64::NAN, f64::NAN, inner, outer]);
            rec.check(Check::holds(&format!("violation_interval_R{r}"), inner > 0.0 && outer > 0.0));
        }
    }
    if regime {
        // smallest ladder radius from which on the pattern always holds
        let mut threshold = None;
        for (k, &(r, ok, _)) in holds.iter().enumerate().rev() {
            if !ok {
                break;
            }
            threshold = Some((k, r));
        }
        match threshold {
            Some((k, r)) => {
                let c_hat = holds[k..].iter().map(|h| h.2).fold(f64::INFINITY, f64::min);
                rec.fit("radius_threshold", r).fit("mass_threshold", ball_volume(params.dim, r));
                rec.fit("c_hat", c_hat);
                rec.check(Check::holds("c_hat_positive", c_hat > 0.0 && c_hat.is_finite()));
            }
            None => {
                rec.note("sign pattern fails at the largest radius of the ladder");
            }
        }
        let largest = holds.last().map(|h| h.1).unwrap_or(false);
        rec.check(Check::holds("sign_pattern_at_largest_radius", largest));
        rec.note(format!("bound exponent N + alpha - 1 = {}", n + params.alpha - 1.0));
    }
    Ok(rec)
}
