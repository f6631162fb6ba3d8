//! The shell competitor applied to an annulus, and the dyadic energy
//! accounting over θ = 2^-n.

use flocking::density::{competitor, equal_mass_annulus_outer, make_profile, BallSpec, ProfileKind, RadialGrid};
use flocking::verify::dyadic_accounting;
use flocking::{KernelParams, QuadratureSpec};

fn main() -> flocking::Result<()> {
    let params = KernelParams::new(3, 2.0, 1.0)?;
    let radius = 4.0;
    let grid = RadialGrid::uniform(3, 2.5 * radius, 400)?;
    let kind = ProfileKind::Annulus { inner: 0.5 * radius, outer: equal_mass_annulus_outer(3, radius, 0.5 * radius) };
    let rho = make_profile(&kind, &grid)?;
    let ball = BallSpec::new(3, radius)?;
    for theta in [0.5, 0.25, 0.125] {
        let c = competitor(&rho, theta, &ball)?;
        println!("theta {theta}: mass {:.6} -> {:.6}, L1 to ball {:.4} -> {:.4}",
            rho.mass(), c.mass(), rho.l1_to_ball(radius), c.l1_to_ball(radius));
    }
    let outcome = dyadic_accounting(&rho, &params, 8, false, &QuadratureSpec::default())?;
    println!("{:>3} {:>8} {:>10} {:>14} {:>14} {:>14}", "n", "theta", "eps", "direct", "main", "remainder");
    for l in &outcome.levels {
        println!("{:>3} {:>8.5} {:>10.4e} {:>14.6e} {:>14.6e} {:>14.6e}", l.n, l.theta, l.eps, l.direct, l.main, l.remainder);
    }
    println!("eps_hat {:e}, verdict {}", outcome.eps_hat, outcome.record.verdict.as_str());
    Ok(())
}
