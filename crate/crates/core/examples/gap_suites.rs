//! Quadratic stability gaps of the attractive and repulsive parts over the
//! seeded profile family, and the deficit of shell-perturbed balls.

use flocking::verify::{gap_suites, shell_deficit_suite, FamilySpec, VerifyRecord};
use flocking::{KernelParams, QuadratureSpec};

fn show(rec: &VerifyRecord) {
    println!("{}: {}", rec.statement, rec.verdict.as_str());
    for (k, v) in &rec.fits {
        println!("  fit {k} = {v:.5e}");
    }
    for c in &rec.checks {
        println!("  {:<24} {:<12} measured {:.4e} bound {:.4e}", c.name, c.verdict.as_str(), c.measured, c.bound);
    }
}

fn main() -> flocking::Result<()> {
    let params = KernelParams::new(3, 2.0, 1.0)?;
    let q = QuadratureSpec::default();
    let (attractive, repulsive) = gap_suites(&params, &FamilySpec::default(), 200, 7, &q)?;
    show(&attractive);
    show(&repulsive);
    show(&shell_deficit_suite(&params, 200, &q)?);
    Ok(())
}
