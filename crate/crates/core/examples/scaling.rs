//! Asymmetry and support radius of minimizers along a ladder of masses.

use flocking::solver::{InitKind, SolverOptions};
use flocking::verify::scaling_study;
use flocking::{KernelParams, QuadratureSpec};

fn main() -> flocking::Result<()> {
    let params = KernelParams::new(3, 2.0, 1.0)?;
    let options = SolverOptions { init: InitKind::Annulus { inner: 0.0 }, ..SolverOptions::default() };
    let (record, points) = scaling_study(&params, &[2.0, 4.0, 8.0, 16.0], 400, &options, &QuadratureSpec::default())?;
    for p in &points {
        println!(
            "R {:>5} mass {:>10.3} A {:.3e} support/R {:.4} iterations {}",
            p.radius, p.mass, p.asymmetry, p.support_radius / p.radius, p.report.iterations
        );
    }
    for c in &record.checks {
        println!("{:<28} {:<12} measured {:.4e}", c.name, c.verdict.as_str(), c.measured);
    }
    Ok(())
}
