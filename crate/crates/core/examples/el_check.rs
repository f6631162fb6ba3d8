//! Euler–Lagrange sign pattern of the ball: holds for λ < N - 1 once the
//! mass is large enough, fails near the surface for λ ≥ N - 1.

use flocking::verify::{check_el_ball, el_profile};
use flocking::{KernelParams, QuadratureSpec};

fn main() -> flocking::Result<()> {
    let q = QuadratureSpec::default();
    for lambda in [1.0, 2.5] {
        let params = KernelParams::new(3, 2.0, lambda)?;
        let rec = check_el_ball(&params, &[0.5, 1.0, 10.0], 2000, &q)?;
        println!("lambda {lambda}: {}", rec.verdict.as_str());
        for (k, v) in &rec.fits {
            println!("  {k} = {v:.4e}");
        }
        let offsets = [-1e-4, -1e-6, 1e-6, 1e-4];
        let p = el_profile(&params, 10.0, &offsets, &q);
        for (d, inc) in offsets.iter().zip(&p.increments) {
            println!("  Phi(R{d:+e}) - Phi(R) = {inc:+.4e}");
        }
    }
    Ok(())
}
