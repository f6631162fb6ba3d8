//! Seeded family of profiles with the mass of the ball `E*`: annuli, shell
//! perturbations and random bounded perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{
    equal_mass_annulus_outer, make_profile, BallSpec, ProfileKind, RadialGrid, RadialProfile, ShellPattern,
};
use crate::error::Result;
use crate::quadrature::geomspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Annulus,
    Sliver,
    Ramp,
    Perturbation,
}

impl MemberKind {
    pub fn code(&self) -> f64 {
        match self {
            MemberKind::Annulus => 0.0,
            MemberKind::Sliver => 1.0,
            MemberKind::Ramp => 2.0,
            MemberKind::Perturbation => 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub kind: MemberKind,
    /// Shape parameter: inner radius for annuli, θ for shells, amplitude for
    /// perturbations.
    pub parameter: f64,
    pub profile: RadialProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    pub annuli: usize,
    pub slivers: usize,
    pub ramps: usize,
    pub perturbations: usize,
    /// Radius of `E*`.
    pub radius: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { annuli: 40, slivers: 40, ramps: 40, perturbations: 80, radius: 1.0 }
    }
}

impl FamilySpec {
    pub fn total(&self) -> usize {
        self.annuli + self.slivers + self.ramps + self.perturbations
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Equal-mass family on `grid` (which should contain the radius of `E*` as
/// an edge): annuli with inner radius in `[0.05, 0.95]R`, inner/outer sliver
/// swaps, ramp and half-density shells with `θ ∈ [0.02, 0.5]`, and random
/// bounded perturbations of the ball.
pub fn profile_family(spec: &FamilySpec, grid: &RadialGrid, seed: u64) -> Result<Vec<FamilyMember>> {
    let dim = grid.dim();
    let radius = spec.radius;
    let mut out = Vec::with_capacity(spec.total());
    for a in linspace(0.05, 0.95, spec.annuli) {
        let kind = ProfileKind::Annulus { inner: a * radius, outer: equal_mass_annulus_outer(dim, radius, a * radius) };
        out.push(FamilyMember { kind: MemberKind::Annulus, parameter: a, profile: make_profile(&kind, grid)? });
    }
    let shell = |n: usize, patterns: [ShellPattern; 2], kind: MemberKind, out: &mut Vec<FamilyMember>| -> Result<()> {
        let thetas = geomspace(0.02, 0.5, n.div_ceil(2).max(1));
        for k in 0..n {
            let theta = thetas[k / 2];
            let pattern = patterns[k % 2];
            let p = make_profile(&ProfileKind::ShellPerturbedBall { radius, theta, pattern }, grid)?;
            out.push(FamilyMember { kind, parameter: theta, profile: p });
        }
        Ok(())
    };
    shell(spec.slivers, [ShellPattern::OuterShift, ShellPattern::InnerSliver], MemberKind::Sliver, &mut out)?;
    shell(spec.ramps, [ShellPattern::Ramp, ShellPattern::Half], MemberKind::Ramp, &mut out)?;

    let ball = make_profile(&ProfileKind::Ball { radius }, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..spec.perturbations {
        let amplitude = rng.random_range(0.05..0.6);
        let band = rng.random_range(0.1..0.5);
        let c = grid.centers();
        let y: Vec<f64> = ball
            .values()
            .iter()
            .zip(&c)
            .map(|(&v, &r)| {
                if (r - radius).abs() < band * radius {
                    v + rng.random_range(-amplitude..amplitude)
                } else {
                    v
                }
            })
            .collect();
        let p = fix_mass(&y, ball.mass(), grid)?;
        out.push(FamilyMember { kind: MemberKind::Perturbation, parameter: amplitude, profile: p });
    }
    Ok(out)
}

/// `clamp(y - c, 0, 1)` with the shift `c` chosen by bisection to give mass `m`.
fn fix_mass(y: &[f64], m: f64, grid: &RadialGrid) -> Result<RadialProfile> {
    let vol = grid.volumes();
    let mass = |c: f64| -> f64 { y.iter().zip(vol).map(|(v, w)| (v - c).clamp(0.0, 1.0) * w).sum() };
    let (mut lo, mut hi) = (-2.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    RadialProfile::new(grid.clone(), y.iter().map(|v| (v - c).clamp(0.0, 1.0)).collect())
}

/// `count` random profiles of the mass of `ball`: random values clipped to
/// `[0, 1]` on a random support, mass fixed by a uniform shift.
pub fn random_profiles(grid: &RadialGrid, ball: &BallSpec, count: usize, seed: u64) -> Result<Vec<RadialProfile>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ball.volume();
    let n = grid.len();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let reach = rng.random_range(1.1..(grid.r_max() / ball.radius).max(1.2));
        let c = grid.centers();
        let y: Vec<f64> = c
            .iter()
            .map(|&r| if r < reach * ball.radius { rng.random_range(-0.3..1.3) } else { -1.0 })
            .collect();
        debug_assert_eq!(y.len(), n);
        let capacity: f64 = y.iter().zip(grid.volumes()).map(|(v, w)| if *v > -1.0 { w } else { &0.0 }).sum();
        if capacity < m {
            continue;
        }
        let p = fix_mass(&y, m, grid)?;
        if (p.mass() - m).abs() <= 1e-12 * m {
            out.push(p);
        }
    }
    Ok(out)
}
